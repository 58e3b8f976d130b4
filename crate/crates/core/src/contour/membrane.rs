use std::collections::{BTreeMap, BTreeSet};

use super::compose::{compose, BorderElement, CompositionConstraint, Formula, Selector};
use super::{BorderInterval, Compass, Geometry};
use crate::pattern::{CellSymbol, Coord, GridWord, Pattern, Side};

/// Straight bars: columns of 2's and 7's, rows of 4's and e's.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BarKind {
    Two,
    Four,
    Seven,
    E,
}

impl BarKind {
    pub const ALL: [BarKind; 4] = [BarKind::Two, BarKind::Four, BarKind::Seven, BarKind::E];

    fn symbol(self) -> CellSymbol {
        match self {
            BarKind::Two => CellSymbol::Two,
            BarKind::Four => CellSymbol::Four,
            BarKind::Seven => CellSymbol::Seven,
            BarKind::E => CellSymbol::E,
        }
    }

    fn vertical(self) -> bool {
        matches!(self, BarKind::Two | BarKind::Seven)
    }

    /// The side a bar of this kind uses to join a larger word, and the
    /// side of that word it must lie inside.
    fn attachment(self) -> (Side, Side) {
        match self {
            BarKind::Two => (Side::North, Side::South),
            BarKind::Four => (Side::East, Side::West),
            BarKind::Seven => (Side::South, Side::North),
            BarKind::E => (Side::West, Side::East),
        }
    }
}

/// A bar of `len >= 1` cells, grown one cell at a time: vertical bars by
/// `x (s=n) bar`, horizontal ones by `x (e=w) bar`.
pub fn bar(kind: BarKind, len: usize) -> GridWord {
    assert!(len >= 1, "bars have at least one cell");
    let cell = GridWord::single(Coord::new(0, 0), kind.symbol());
    let phi = if kind.vertical() {
        CompositionConstraint::new(Formula::same(
            Selector::side(Side::South),
            Selector::side(Side::North),
        ))
    } else {
        CompositionConstraint::new(Formula::same(
            Selector::side(Side::East),
            Selector::side(Side::West),
        ))
    };
    let mut word = cell.clone();
    for _ in 1..len {
        let grown = compose(&cell, &phi, &word).expect("side selectors are always valid");
        word = grown
            .into_iter()
            .next()
            .expect("a bar always extends")
            .anchored();
    }
    word
}

/// Corners: a vertical bar joined to one end of a horizontal bar.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CornerKind {
    /// 2's hanging under the west end of a row of 4's.
    F24,
    /// 2's hanging under the east end of a row of e's.
    F2e,
    /// 7's standing on the west end of a row of 4's.
    F74,
    /// 7's standing on the east end of a row of e's.
    F7e,
}

impl CornerKind {
    pub const ALL: [CornerKind; 4] = [
        CornerKind::F24,
        CornerKind::F2e,
        CornerKind::F74,
        CornerKind::F7e,
    ];

    fn bars(self) -> (BarKind, BarKind) {
        match self {
            CornerKind::F24 => (BarKind::Two, BarKind::Four),
            CornerKind::F2e => (BarKind::Two, BarKind::E),
            CornerKind::F74 => (BarKind::Seven, BarKind::Four),
            CornerKind::F7e => (BarKind::Seven, BarKind::E),
        }
    }

    /// Whether the open horizontal end points east (a row of 4's) rather than west.
    fn east_end(self) -> bool {
        matches!(self, CornerKind::F24 | CornerKind::F74)
    }

    fn join(self) -> Formula {
        let (own, other, class) = match self {
            CornerKind::F24 => (Side::North, Side::South, Compass::Sw),
            CornerKind::F2e => (Side::North, Side::South, Compass::Se),
            CornerKind::F74 => (Side::South, Side::North, Compass::Nw),
            CornerKind::F7e => (Side::South, Side::North, Compass::Ne),
        };
        Formula::same(
            Selector::side(own),
            Selector::side(other).near(class.land(), 0),
        )
    }
}

/// A corner with a vertical bar of `vertical` cells and a horizontal bar of
/// `horizontal` cells, anchored at (0, 0).
pub fn corner(kind: CornerKind, vertical: usize, horizontal: usize) -> GridWord {
    let (v, h) = kind.bars();
    let phi = CompositionConstraint::new(kind.join());
    let out = compose(&bar(v, vertical), &phi, &bar(h, horizontal))
        .expect("side selectors are always valid");
    debug_assert_eq!(out.len(), 1);
    out.into_iter().next().expect("corner exists").anchored()
}

/// The free end edge of a corner's horizontal bar.
fn corner_end(kind: CornerKind, word: &GridWord) -> BorderElement {
    let (_, h) = kind.bars();
    let cells = word
        .iter()
        .filter(|(_, s)| *s == h.symbol())
        .map(|(c, _)| c);
    if kind.east_end() {
        let c = cells.max_by_key(|c| c.col).unwrap();
        BorderElement::Edge {
            x: c.col + 1,
            y: c.row,
            horizontal: false,
        }
    } else {
        let c = cells.min_by_key(|c| c.col).unwrap();
        BorderElement::Edge {
            x: c.col,
            y: c.row,
            horizontal: false,
        }
    }
}

/// An open chain of corners with one horizontal end still free.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
struct Chain {
    word: GridWord,
    end: BorderElement,
    east_end: bool,
}

impl Chain {
    /// The open end as an explicit one-edge interval of the chain's contour.
    fn end_selector(&self) -> Selector {
        let g = Geometry::of(&self.word);
        for (comp, l) in g.loops.iter().enumerate() {
            for i in 0..l.letters.len() {
                if super::compose::edge_at(l.points[i], l.letters[i]) == self.end {
                    return Selector::interval(BorderInterval::new(comp, i as i64, i as i64 + 1));
                }
            }
        }
        unreachable!("a chain's open end is on its border")
    }
}

fn sel(side: Side, near: &[(Compass, usize)]) -> Selector {
    near.iter()
        .fold(Selector::side(side), |s, &(c, k)| s.near(c.land(), k))
}

/// Every internal side agrees on its border bit.
fn locally_consistent(word: &GridWord) -> bool {
    word.iter().all(|(c, s)| {
        [Side::East, Side::South]
            .into_iter()
            .all(|side| match word.get(c.step(side)) {
                Some(o) => s.border(side) == o.border(side.opposite()),
                None => true,
            })
    })
}

fn offset_of(result: &GridWord, chain: &GridWord, piece: &GridWord) -> (i32, i32) {
    let placed = result
        .iter()
        .map(|(c, _)| c)
        .find(|c| !chain.contains(*c))
        .unwrap();
    let origin = piece.iter().next().unwrap().0;
    (placed.col - origin.col, placed.row - origin.row)
}

fn shift(e: BorderElement, (dx, dy): (i32, i32)) -> BorderElement {
    match e {
        BorderElement::Edge { x, y, horizontal } => BorderElement::Edge {
            x: x + dx,
            y: y + dy,
            horizontal,
        },
        BorderElement::Point { x, y } => BorderElement::Point {
            x: x + dx,
            y: y + dy,
        },
    }
}

/// Whether every cell has exactly two neighbours, i.e. the word is one simple cycle.
pub fn is_simple_cycle(word: &GridWord) -> bool {
    word.len() >= 4
        && word
            .iter()
            .all(|(c, _)| c.neighbours().filter(|(_, n)| word.contains(*n)).count() == 2)
}

/// A RAT word from which no cell can be removed leaving a RAT word.
pub fn is_membrane(word: &GridWord) -> bool {
    Pattern::Rat.accepts(word)
        && word.iter().all(|(c, _)| {
            let mut cells: BTreeMap<Coord, CellSymbol> = word.cells().clone();
            cells.remove(&c);
            match GridWord::from_cells(cells) {
                Ok(rest) => !Pattern::Rat.accepts(&rest),
                Err(_) => true,
            }
        })
}

/// RAT membranes (simple rings) with at most `max_cells` cells, anchored at (0, 0).
///
/// Chains start from a 24- or 2e-corner and grow by attaching corners to
/// their free horizontal end; a chain closes either with a straight bar
/// between its free end and the bottom of its first column of 2's, or by
/// a last corner that reaches both at once.
pub fn generate_rat_membranes(max_cells: usize) -> BTreeSet<GridWord> {
    let mut rings = BTreeSet::new();
    if max_cells < 4 {
        return rings;
    }
    let pieces: Vec<(CornerKind, GridWord, BorderElement)> = CornerKind::ALL
        .iter()
        .flat_map(|&k| {
            (1..max_cells).flat_map(move |a| (1..max_cells - a + 1).map(move |b| (k, a, b)))
        })
        .map(|(k, a, b)| {
            let w = corner(k, a, b);
            let end = corner_end(k, &w);
            (k, w, end)
        })
        .collect();

    let start_bottom_e = sel(Side::East, &[(Compass::Se, 0), (Compass::Sw, 1)]);
    let start_bottom_w = sel(Side::West, &[(Compass::Sw, 0), (Compass::Se, 1)]);

    let mut frontier: Vec<Chain> = pieces
        .iter()
        .filter(|(k, w, _)| matches!(k, CornerKind::F24 | CornerKind::F2e) && w.len() < max_cells)
        .map(|(k, w, end)| Chain {
            word: w.clone(),
            end: *end,
            east_end: k.east_end(),
        })
        .collect();
    let mut seen: BTreeSet<Chain> = frontier.iter().cloned().collect();

    while !frontier.is_empty() {
        let mut next = Vec::new();
        for chain in &frontier {
            let end = chain.end_selector();
            let room = max_cells - chain.word.len();

            // Close with a straight bar.
            for len in 1..=room {
                let (kind, phi) =
                    if chain.east_end {
                        (
                            BarKind::Four,
                            Formula::same(end.clone(), Selector::side(Side::West)).and(
                                Formula::same(start_bottom_w.clone(), Selector::side(Side::East)),
                            ),
                        )
                    } else {
                        (
                            BarKind::E,
                            Formula::same(end.clone(), Selector::side(Side::East)).and(
                                Formula::same(start_bottom_e.clone(), Selector::side(Side::West)),
                            ),
                        )
                    };
                collect_rings(
                    &chain.word,
                    &CompositionConstraint::strict(phi),
                    &bar(kind, len),
                    &mut rings,
                );
            }

            for (kind, piece, piece_end) in &pieces {
                if piece.len() > room {
                    continue;
                }
                let attach = match (chain.east_end, kind) {
                    (true, CornerKind::F24 | CornerKind::F2e) => {
                        sel(Side::West, &[(Compass::Sw, 0)])
                    }
                    (true, _) => sel(Side::West, &[(Compass::Nw, 0)]),
                    (false, CornerKind::F24 | CornerKind::F2e) => {
                        sel(Side::East, &[(Compass::Se, 0)])
                    }
                    (false, _) => sel(Side::East, &[(Compass::Ne, 0)]),
                };
                let link = Formula::same(end.clone(), attach.clone());

                // Close with a last corner touching both ends.
                let closing = match (chain.east_end, kind) {
                    (true, CornerKind::F7e) => {
                        Some((start_bottom_e.clone(), sel(Side::West, &[(Compass::Sw, 0)])))
                    }
                    (false, CornerKind::F74) => {
                        Some((start_bottom_w.clone(), sel(Side::East, &[(Compass::Se, 0)])))
                    }
                    _ => None,
                };
                if let Some((own, theirs)) = closing {
                    let phi =
                        CompositionConstraint::strict(link.clone().and(Formula::same(own, theirs)));
                    collect_rings(&chain.word, &phi, piece, &mut rings);
                }

                if piece.len() == room {
                    continue;
                }
                let phi = CompositionConstraint::strict(link);
                for grown in compose(&chain.word, &phi, piece).expect("valid selectors") {
                    if !locally_consistent(&grown) {
                        continue;
                    }
                    let offset = offset_of(&grown, &chain.word, piece);
                    let c = Chain {
                        word: grown,
                        end: shift(*piece_end, offset),
                        east_end: kind.east_end(),
                    };
                    if seen.insert(c.clone()) {
                        next.push(c);
                    }
                }
            }
        }
        frontier = next;
    }
    rings
}

fn collect_rings(
    chain: &GridWord,
    phi: &CompositionConstraint,
    piece: &GridWord,
    rings: &mut BTreeSet<GridWord>,
) {
    for w in compose(chain, phi, piece).expect("valid selectors") {
        if is_simple_cycle(&w) && Pattern::Rat.accepts(&w) {
            rings.insert(w.anchored());
        }
    }
}

/// RAT words with at most `max_cells` cells: membranes with bars of 2's,
/// 4's, 7's and e's recursively attached by their north, east, south and
/// west sides respectively, each touching only at that side.
pub fn generate_rat_words(max_cells: usize) -> BTreeSet<GridWord> {
    let mut all = generate_rat_membranes(max_cells);
    let mut frontier: Vec<GridWord> = all.iter().cloned().collect();
    while !frontier.is_empty() {
        let mut next = Vec::new();
        for word in &frontier {
            for kind in BarKind::ALL {
                let (own, theirs) = kind.attachment();
                let phi = CompositionConstraint::strict(Formula::within(
                    Selector::side(own),
                    Selector::side(theirs),
                ));
                for len in 1..=max_cells.saturating_sub(word.len()) {
                    for grown in compose(&bar(kind, len), &phi, word).expect("valid selectors") {
                        let grown = grown.anchored();
                        if Pattern::Rat.accepts(&grown) && all.insert(grown.clone()) {
                            next.push(grown);
                        }
                    }
                }
            }
        }
        frontier = next;
    }
    all
}
