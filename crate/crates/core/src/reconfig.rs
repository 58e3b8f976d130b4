//! Conservative reconfiguration (rigid subtree cut-and-paste) and elastic
//! reconfiguration (renting and releasing cells).

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::organism::{derive_topology, root_flow, OrganismError, SourceSet, TreeTopology};
use crate::pattern::{CellSymbol, Coord, GridWord, Pattern, PatternError, Side};

/// Improvements smaller than this are treated as ties.
pub const EPSILON: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReconfigError {
    #[error(transparent)]
    Organism(#[from] OrganismError),
    #[error("move rejected: {0}")]
    MoveRejected(String),
}

impl From<PatternError> for ReconfigError {
    fn from(e: PatternError) -> Self {
        ReconfigError::Organism(e.into())
    }
}

/// Where a cut subtree is re-attached relative to its new parent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AttachSide {
    West,
    South,
}

impl AttachSide {
    fn side(self) -> Side {
        match self {
            AttachSide::West => Side::West,
            AttachSide::South => Side::South,
        }
    }

    /// The only side a subtree root of this tag can hang from.
    pub fn for_tag(tag: CellSymbol) -> Option<AttachSide> {
        match tag {
            CellSymbol::Four => Some(AttachSide::West),
            CellSymbol::Two => Some(AttachSide::South),
            _ => None,
        }
    }
}

/// Cut the subtree rooted at `subtree_root` and paste it so its root sits
/// on the `side` neighbour of `anchor`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Move {
    pub subtree_root: Coord,
    pub anchor: Coord,
    pub side: AttachSide,
}

/// Allowed cell rectangle: rows `0..height`, columns `0..width`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Bounds {
    pub width: i32,
    pub height: i32,
}

impl Bounds {
    pub const UNBOUNDED: Bounds = Bounds {
        width: i32::MAX,
        height: i32::MAX,
    };

    pub fn new(width: i32, height: i32) -> Self {
        Bounds { width, height }
    }

    pub fn contains(&self, c: Coord) -> bool {
        if *self == Bounds::UNBOUNDED {
            return true;
        }
        c.row >= 0 && c.col >= 0 && c.row < self.height && c.col < self.width
    }
}

/// Cells a move carries along and the translation applied to them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Displacement {
    pub cells: BTreeSet<Coord>,
    pub dr: i32,
    pub dc: i32,
}

impl Displacement {
    pub fn apply(&self, c: Coord) -> Coord {
        if self.cells.contains(&c) {
            c.offset(self.dr, self.dc)
        } else {
            c
        }
    }
}

fn rejected(msg: impl Into<String>) -> ReconfigError {
    ReconfigError::MoveRejected(msg.into())
}

fn displacement(
    word: &GridWord,
    topo: &TreeTopology,
    m: &Move,
) -> Result<Displacement, ReconfigError> {
    let tag = word
        .get(m.subtree_root)
        .ok_or_else(|| rejected(format!("no cell at {}", m.subtree_root)))?;
    if AttachSide::for_tag(tag) != Some(m.side) {
        return Err(rejected(format!(
            "a {tag}-cell cannot hang from the {:?} side",
            m.side
        )));
    }
    let cells = topo.subtree(m.subtree_root);
    if !word.contains(m.anchor) || cells.contains(&m.anchor) {
        return Err(rejected(format!(
            "anchor {} is not outside the subtree",
            m.anchor
        )));
    }
    let target = m.anchor.step(m.side.side());
    if target == m.subtree_root {
        return Err(rejected("identity placement"));
    }
    Ok(Displacement {
        cells,
        dr: target.row - m.subtree_root.row,
        dc: target.col - m.subtree_root.col,
    })
}

fn moved_word(
    word: &GridWord,
    d: &Displacement,
    bounds: &Bounds,
) -> Result<GridWord, ReconfigError> {
    let mut cells: BTreeMap<Coord, CellSymbol> =
        word.iter().filter(|(c, _)| !d.cells.contains(c)).collect();
    for &c in &d.cells {
        let to = d.apply(c);
        if !bounds.contains(to) {
            return Err(rejected(format!("{to} is out of bounds")));
        }
        if cells.insert(to, word.get(c).unwrap()).is_some() {
            return Err(rejected(format!("{to} is occupied")));
        }
    }
    let out = GridWord::from_cells(cells).map_err(|_| rejected("result is disconnected"))?;
    if !Pattern::Tr.accepts(&out) {
        return Err(rejected("result is not a tree"));
    }
    Ok(out)
}

/// Every valid move in (subtree root, anchor, side) order.
pub fn enumerate_moves(word: &GridWord, bounds: &Bounds) -> Result<Vec<Move>, ReconfigError> {
    Ok(enumerate_moves_with_words(word, bounds)?
        .into_iter()
        .map(|(m, _)| m)
        .collect())
}

fn enumerate_moves_with_words(
    word: &GridWord,
    bounds: &Bounds,
) -> Result<Vec<(Move, GridWord)>, ReconfigError> {
    let topo = derive_topology(word)?;
    let mut out = Vec::new();
    for (root, tag) in word.iter() {
        let Some(side) = AttachSide::for_tag(tag) else {
            continue;
        };
        for (anchor, _) in word.iter() {
            let m = Move {
                subtree_root: root,
                anchor,
                side,
            };
            let Ok(d) = displacement(word, &topo, &m) else {
                continue;
            };
            if let Ok(w) = moved_word(word, &d, bounds) {
                out.push((m, w));
            }
        }
    }
    Ok(out)
}

/// Applies a move, checking it the same way enumeration does.
pub fn apply_move(word: &GridWord, m: &Move, bounds: &Bounds) -> Result<GridWord, ReconfigError> {
    let topo = derive_topology(word)?;
    let d = displacement(word, &topo, m)?;
    moved_word(word, &d, bounds)
}

/// The cells a move relocates and by how much.
pub fn move_displacement(word: &GridWord, m: &Move) -> Result<Displacement, ReconfigError> {
    let topo = derive_topology(word)?;
    displacement(word, &topo, m)
}

/// Predicted root flow of a word (nothing blocked).
pub fn predicted_flow(word: &GridWord, sources: &SourceSet, fmax: f64) -> f64 {
    root_flow(
        &derive_topology(word).expect("candidate words are trees"),
        sources,
        fmax,
    )
}

/// The move with the highest predicted root flow, if it beats the current
/// flow. Ties go to the earliest move in enumeration order.
pub fn best_move(
    word: &GridWord,
    sources: &SourceSet,
    fmax: f64,
    bounds: &Bounds,
) -> Result<Option<(Move, f64)>, ReconfigError> {
    let current = predicted_flow(word, sources, fmax);
    let candidates = enumerate_moves_with_words(word, bounds)?;
    let flows: Vec<f64> = candidates
        .par_iter()
        .map(|(_, w)| predicted_flow(w, sources, fmax))
        .collect();
    let mut best: Option<(usize, f64)> = None;
    for (i, &f) in flows.iter().enumerate() {
        if best.is_none_or(|(_, b)| f > b) {
            best = Some((i, f));
        }
    }
    Ok(best
        .filter(|&(_, f)| f > current + EPSILON)
        .map(|(i, f)| (candidates[i].0, f)))
}

/// Result of repeated best moves.
#[derive(Debug, Clone, PartialEq)]
pub struct Stabilized {
    pub word: GridWord,
    pub steps: usize,
    pub moves: Vec<Move>,
    /// Root flow before any move, then after each move.
    pub flows: Vec<f64>,
}

/// Applies best moves until none improves or `max_steps` is reached.
pub fn reconfigure_until_stable(
    word: &GridWord,
    sources: &SourceSet,
    fmax: f64,
    bounds: &Bounds,
    max_steps: usize,
) -> Result<Stabilized, ReconfigError> {
    let mut current = word.clone();
    let mut flows = vec![predicted_flow(word, sources, fmax)];
    let mut moves = Vec::new();
    while moves.len() < max_steps {
        let Some((m, f)) = best_move(&current, sources, fmax, bounds)? else {
            break;
        };
        current = apply_move(&current, &m, bounds)?;
        moves.push(m);
        flows.push(f);
    }
    Ok(Stabilized {
        word: current,
        steps: moves.len(),
        moves,
        flows,
    })
}

/// How many cells may be rented: per tag (absent tags allow none), plus an
/// optional cap on the total.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RentLimit {
    #[serde(default)]
    pub per_tag: BTreeMap<CellSymbol, usize>,
    #[serde(default)]
    pub total: Option<usize>,
}

impl RentLimit {
    /// Up to `n` cells in total, of any rentable tag.
    pub fn total(n: usize) -> Self {
        RentLimit {
            per_tag: [(CellSymbol::Two, n), (CellSymbol::Four, n)]
                .into_iter()
                .collect(),
            total: Some(n),
        }
    }

    fn allows(&self, rented: &RentedSet) -> bool {
        let counts = rented.counts();
        counts
            .iter()
            .all(|(tag, &n)| n <= self.per_tag.get(tag).copied().unwrap_or(0))
            && self.total.is_none_or(|t| rented.len() <= t)
    }
}

/// Benefit per unit of flow, cost per rented cell of each tag, and limits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElasticConfig {
    pub benefit_per_unit_flow: f64,
    #[serde(default)]
    pub node_cost: BTreeMap<CellSymbol, f64>,
    #[serde(default)]
    pub rent_limit: RentLimit,
}

impl ElasticConfig {
    pub fn cost_of(&self, tag: CellSymbol) -> f64 {
        self.node_cost.get(&tag).copied().unwrap_or(0.0)
    }
}

/// Cells currently rented, with their tags.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RentedSet {
    cells: BTreeMap<Coord, CellSymbol>,
}

impl RentedSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn contains(&self, c: Coord) -> bool {
        self.cells.contains_key(&c)
    }

    pub fn get(&self, c: Coord) -> Option<CellSymbol> {
        self.cells.get(&c).copied()
    }

    pub fn insert(&mut self, c: Coord, tag: CellSymbol) {
        self.cells.insert(c, tag);
    }

    pub fn remove(&mut self, c: Coord) -> Option<CellSymbol> {
        self.cells.remove(&c)
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Coord, CellSymbol)> + '_ {
        self.cells.iter().map(|(c, t)| (*c, *t))
    }

    pub fn counts(&self) -> BTreeMap<CellSymbol, usize> {
        let mut out = BTreeMap::new();
        for t in self.cells.values() {
            *out.entry(*t).or_insert(0) += 1;
        }
        out
    }

    /// Moves every rented coordinate through `f`.
    pub fn remap(&mut self, f: impl Fn(Coord) -> Coord) {
        self.cells = self.cells.iter().map(|(c, t)| (f(*c), *t)).collect();
    }

    /// Whether every rented cell exists in `word` with the recorded tag.
    pub fn consistent_with(&self, word: &GridWord) -> bool {
        self.cells.iter().all(|(c, t)| word.get(*c) == Some(*t))
    }
}

/// `avg_flow * benefit_per_unit_flow - total rent`.
pub fn elastic_benefit(avg_flow: f64, rented: &RentedSet, cfg: &ElasticConfig) -> f64 {
    avg_flow * cfg.benefit_per_unit_flow - rented.iter().map(|(_, t)| cfg.cost_of(t)).sum::<f64>()
}

/// One elastic change.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ElasticChange {
    /// A new cell next to a leaf: a 4 on its west side or a 2 on its south side.
    Rent { at: Coord, tag: CellSymbol },
    /// A new cell takes the place of `at` (same tag) and the subtree that was
    /// there shifts one cell towards `side`.
    InsertShift {
        at: Coord,
        tag: CellSymbol,
        side: AttachSide,
    },
    /// A rented leaf is given back.
    Release { at: Coord },
}

/// Outcome of [`elastic_step`].
#[derive(Debug, Clone, PartialEq)]
pub struct ElasticOutcome {
    pub word: GridWord,
    pub rented: RentedSet,
    pub change: Option<ElasticChange>,
    /// Cells that moved and their translation, for callers tracking coordinates.
    pub shifted: Option<Displacement>,
    pub predicted_benefit: f64,
}

struct Candidate {
    change: ElasticChange,
    word: GridWord,
    rented: RentedSet,
    shifted: Option<Displacement>,
}

fn candidates(
    word: &GridWord,
    topo: &TreeTopology,
    rented: &RentedSet,
    bounds: &Bounds,
) -> Vec<Candidate> {
    let mut out = Vec::new();
    let accept = |cells: BTreeMap<Coord, CellSymbol>| -> Option<GridWord> {
        GridWord::from_cells(cells)
            .ok()
            .filter(|w| Pattern::Tr.accepts(w))
    };

    for &leaf in topo.leaves() {
        for (side, tag) in [
            (Side::West, CellSymbol::Four),
            (Side::South, CellSymbol::Two),
        ] {
            let at = leaf.step(side);
            if word.contains(at) || !bounds.contains(at) {
                continue;
            }
            let mut cells = word.cells().clone();
            cells.insert(at, tag);
            if let Some(w) = accept(cells) {
                let mut r = rented.clone();
                r.insert(at, tag);
                out.push(Candidate {
                    change: ElasticChange::Rent { at, tag },
                    word: w,
                    rented: r,
                    shifted: None,
                });
            }
        }
    }

    for (at, tag) in word.iter() {
        if tag == CellSymbol::Six {
            continue;
        }
        let sub = topo.subtree(at);
        for side in [AttachSide::West, AttachSide::South] {
            let (dr, dc) = side.side().delta();
            let d = Displacement {
                cells: sub.clone(),
                dr,
                dc,
            };
            let mut cells: BTreeMap<Coord, CellSymbol> =
                word.iter().filter(|(c, _)| !sub.contains(c)).collect();
            cells.insert(at, tag);
            let mut ok = true;
            for &c in &sub {
                let to = d.apply(c);
                if !bounds.contains(to) || cells.insert(to, word.get(c).unwrap()).is_some() {
                    ok = false;
                    break;
                }
            }
            if !ok {
                continue;
            }
            if let Some(w) = accept(cells) {
                let mut r = rented.clone();
                r.remap(|c| d.apply(c));
                r.insert(at, tag);
                out.push(Candidate {
                    change: ElasticChange::InsertShift { at, tag, side },
                    word: w,
                    rented: r,
                    shifted: Some(d),
                });
            }
        }
    }

    for (at, _) in rented.iter() {
        if !topo.is_leaf(at) || at == topo.root() {
            continue;
        }
        let mut cells = word.cells().clone();
        cells.remove(&at);
        if let Some(w) = accept(cells) {
            let mut r = rented.clone();
            r.remove(at);
            out.push(Candidate {
                change: ElasticChange::Release { at },
                word: w,
                rented: r,
                shifted: None,
            });
        }
    }
    out
}

/// Evaluates every rent, insert-with-shift and release candidate by
/// predicted benefit and applies the single best one if it is a strict gain.
pub fn elastic_step(
    word: &GridWord,
    rented: &RentedSet,
    sources: &SourceSet,
    fmax: f64,
    cfg: &ElasticConfig,
    bounds: &Bounds,
) -> Result<ElasticOutcome, ReconfigError> {
    let topo = derive_topology(word)?;
    let current = elastic_benefit(root_flow(&topo, sources, fmax), rented, cfg);
    let cands: Vec<Candidate> = candidates(word, &topo, rented, bounds)
        .into_iter()
        .filter(|c| cfg.rent_limit.allows(&c.rented))
        .collect();
    let scores: Vec<f64> = cands
        .par_iter()
        .map(|c| elastic_benefit(predicted_flow(&c.word, sources, fmax), &c.rented, cfg))
        .collect();
    let mut best: Option<(usize, f64)> = None;
    for (i, &s) in scores.iter().enumerate() {
        if best.is_none_or(|(_, b)| s > b) {
            best = Some((i, s));
        }
    }
    match best.filter(|&(_, s)| s > current + EPSILON) {
        Some((i, s)) => {
            let c = cands.into_iter().nth(i).unwrap();
            Ok(ElasticOutcome {
                word: c.word,
                rented: c.rented,
                change: Some(c.change),
                shifted: c.shifted,
                predicted_benefit: s,
            })
        }
        None => Ok(ElasticOutcome {
            word: word.clone(),
            rented: rented.clone(),
            change: None,
            shifted: None,
            predicted_benefit: current,
        }),
    }
}
