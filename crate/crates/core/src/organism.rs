//! Tree-collector organisms: the parent/child relation of a Tr word, source
//! capture, capacity sharing between competing leaves, and capped flow.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::pattern::{CellSymbol, Coord, GridWord, Pattern, PatternError, Side};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OrganismError {
    #[error(transparent)]
    Pattern(#[from] PatternError),
    #[error("no source with id {0}")]
    UnknownSource(u32),
    #[error("source power must be finite and non-negative, got {0}")]
    BadPower(String),
}

/// A positioned emitter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Source {
    pub id: u32,
    #[serde(flatten)]
    pub pos: Coord,
    pub power: f64,
}

/// Sources in insertion order with stable, never reused ids.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SourceSet {
    sources: Vec<Source>,
    next_id: u32,
}

fn check_power(power: f64) -> Result<(), OrganismError> {
    if power.is_finite() && power >= 0.0 {
        Ok(())
    } else {
        Err(OrganismError::BadPower(power.to_string()))
    }
}

impl SourceSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_pairs<I: IntoIterator<Item = (Coord, f64)>>(
        pairs: I,
    ) -> Result<Self, OrganismError> {
        let mut set = SourceSet::new();
        for (pos, power) in pairs {
            set.add(pos, power)?;
        }
        Ok(set)
    }

    pub fn add(&mut self, pos: Coord, power: f64) -> Result<u32, OrganismError> {
        check_power(power)?;
        let id = self.next_id;
        self.next_id += 1;
        self.sources.push(Source { id, pos, power });
        Ok(id)
    }

    pub fn remove(&mut self, id: u32) -> Result<Source, OrganismError> {
        let i = self.index_of(id)?;
        Ok(self.sources.remove(i))
    }

    pub fn modify(&mut self, id: u32, power: f64) -> Result<(), OrganismError> {
        check_power(power)?;
        let i = self.index_of(id)?;
        self.sources[i].power = power;
        Ok(())
    }

    fn index_of(&self, id: u32) -> Result<usize, OrganismError> {
        self.sources
            .iter()
            .position(|s| s.id == id)
            .ok_or(OrganismError::UnknownSource(id))
    }

    pub fn get(&self, id: u32) -> Option<&Source> {
        self.sources.iter().find(|s| s.id == id)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Source> {
        self.sources.iter()
    }

    pub fn len(&self) -> usize {
        self.sources.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sources.is_empty()
    }

    pub fn total_power(&self) -> f64 {
        self.sources.iter().map(|s| s.power).sum()
    }
}

/// Parent/child structure of a Tr word. A 2-cell sends to its north
/// neighbour and a 4-cell to its east neighbour; the 6-cell is the root.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TreeTopology {
    nodes: BTreeMap<Coord, CellSymbol>,
    parent: BTreeMap<Coord, Coord>,
    children: BTreeMap<Coord, Vec<Coord>>,
    root: Coord,
    leaves: BTreeSet<Coord>,
    /// Every node after all of its descendants.
    bottom_up: Vec<Coord>,
}

/// Builds the tree of a Tr word.
pub fn derive_topology(word: &GridWord) -> Result<TreeTopology, OrganismError> {
    if !Pattern::Tr.accepts(word) {
        return Err(PatternError::Violation(Pattern::Tr).into());
    }
    let mut parent = BTreeMap::new();
    let mut children: BTreeMap<Coord, Vec<Coord>> = BTreeMap::new();
    let mut root = None;
    for (c, s) in word.iter() {
        children.entry(c).or_default();
        match s {
            CellSymbol::Six => root = Some(c),
            CellSymbol::Two => {
                parent.insert(c, c.step(Side::North));
            }
            CellSymbol::Four => {
                parent.insert(c, c.step(Side::East));
            }
            _ => unreachable!("Tr words use only 2, 4 and 6"),
        }
    }
    let root = root.expect("a Tr word has a 6-cell");
    for (c, _) in word.iter() {
        // West child first, then south child.
        let kids: Vec<Coord> = [Side::West, Side::South]
            .into_iter()
            .map(|s| c.step(s))
            .filter(|n| parent.get(n) == Some(&c))
            .collect();
        children.insert(c, kids);
    }
    let leaves = children
        .iter()
        .filter(|(_, k)| k.is_empty())
        .map(|(c, _)| *c)
        .collect();
    let mut bottom_up = Vec::with_capacity(word.len());
    let mut stack = vec![(root, false)];
    while let Some((v, expanded)) = stack.pop() {
        if expanded {
            bottom_up.push(v);
        } else {
            stack.push((v, true));
            for &k in children[&v].iter().rev() {
                stack.push((k, false));
            }
        }
    }
    debug_assert_eq!(bottom_up.len(), word.len());
    Ok(TreeTopology {
        nodes: word.cells().clone(),
        parent,
        children,
        root,
        leaves,
        bottom_up,
    })
}

impl TreeTopology {
    pub fn root(&self) -> Coord {
        self.root
    }

    pub fn parent(&self, v: Coord) -> Option<Coord> {
        self.parent.get(&v).copied()
    }

    pub fn children(&self, v: Coord) -> &[Coord] {
        self.children.get(&v).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn leaves(&self) -> &BTreeSet<Coord> {
        &self.leaves
    }

    pub fn is_leaf(&self, v: Coord) -> bool {
        self.leaves.contains(&v)
    }

    pub fn nodes(&self) -> &BTreeMap<Coord, CellSymbol> {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Nodes ordered so every node follows all of its descendants.
    pub fn bottom_up(&self) -> &[Coord] {
        &self.bottom_up
    }

    /// `v` and all of its descendants.
    pub fn subtree(&self, v: Coord) -> BTreeSet<Coord> {
        let mut out = BTreeSet::new();
        let mut stack = vec![v];
        while let Some(x) = stack.pop() {
            if out.insert(x) {
                stack.extend(self.children(x).iter().copied());
            }
        }
        out
    }
}

/// Flow a leaf at `leaf` would draw from all sources if uncontested:
/// each source gives `power / (manhattan + 1)^2`.
pub fn capture_demand(leaf: Coord, sources: &SourceSet) -> f64 {
    sources.iter().map(|s| demand(leaf, s)).sum()
}

fn demand(leaf: Coord, s: &Source) -> f64 {
    let d = f64::from(leaf.manhattan(s.pos)) + 1.0;
    s.power / (d * d)
}

/// Served flow per leaf. Each source meets all demands on it when it can,
/// and otherwise scales them down proportionally to its power.
pub fn allocate_capacity<'a, I>(leaves: I, sources: &SourceSet) -> BTreeMap<Coord, f64>
where
    I: IntoIterator<Item = &'a Coord>,
{
    let leaves: Vec<Coord> = leaves.into_iter().copied().collect();
    let mut served: BTreeMap<Coord, f64> = leaves.iter().map(|&l| (l, 0.0)).collect();
    let mut demands = vec![0.0; leaves.len()];
    for s in sources.iter() {
        let mut total = 0.0;
        for (d, &l) in demands.iter_mut().zip(&leaves) {
            *d = demand(l, s);
            total += *d;
        }
        let scale = if total > s.power && total > 0.0 {
            s.power / total
        } else {
            1.0
        };
        for (d, l) in demands.iter().zip(&leaves) {
            *served.get_mut(l).unwrap() += d * scale;
        }
    }
    served
}

/// Per-tick flow of an organism.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowReport {
    pub per_leaf_served: BTreeMap<Coord, f64>,
    pub per_node_throughput: BTreeMap<Coord, f64>,
    pub root_flow: f64,
}

/// Bottom-up capped flow: a node forwards its own capture (leaves only)
/// plus its children's throughput, capped at `fmax`; blocked nodes forward nothing.
pub fn evaluate_flow(
    topology: &TreeTopology,
    sources: &SourceSet,
    fmax: f64,
    blocked: &BTreeSet<Coord>,
) -> FlowReport {
    let served = allocate_capacity(topology.leaves(), sources);
    let mut through: BTreeMap<Coord, f64> = BTreeMap::new();
    for &v in topology.bottom_up() {
        let t = if blocked.contains(&v) {
            0.0
        } else {
            let own = served.get(&v).copied().unwrap_or(0.0);
            let below: f64 = topology.children(v).iter().map(|c| through[c]).sum();
            (own + below).min(fmax)
        };
        through.insert(v, t);
    }
    FlowReport {
        root_flow: through[&topology.root],
        per_leaf_served: served,
        per_node_throughput: through,
    }
}

/// Root flow only, for search loops.
pub fn root_flow(topology: &TreeTopology, sources: &SourceSet, fmax: f64) -> f64 {
    evaluate_flow(topology, sources, fmax, &BTreeSet::new()).root_flow
}

/// Recursive structure term `Tree(id, west, south)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum TreeTerm {
    Nil,
    Tree {
        at: Coord,
        tag: CellSymbol,
        west: Box<TreeTerm>,
        south: Box<TreeTerm>,
    },
}

/// Folds the topology bottom-up into its structure term.
pub fn detect_structure(topology: &TreeTopology) -> TreeTerm {
    let mut terms: BTreeMap<Coord, TreeTerm> = BTreeMap::new();
    for &v in topology.bottom_up() {
        let mut west = TreeTerm::Nil;
        let mut south = TreeTerm::Nil;
        for &c in topology.children(v) {
            let t = terms.remove(&c).expect("children are folded first");
            if c == v.step(Side::West) {
                west = t;
            } else {
                south = t;
            }
        }
        terms.insert(
            v,
            TreeTerm::Tree {
                at: v,
                tag: topology.nodes[&v],
                west: Box::new(west),
                south: Box::new(south),
            },
        );
    }
    terms.remove(&topology.root()).expect("root term")
}

impl TreeTerm {
    /// Rebuilds the word, placing each child next to its parent.
    pub fn to_word(&self) -> Option<GridWord> {
        let mut cells = BTreeMap::new();
        let mut stack = vec![self];
        while let Some(t) = stack.pop() {
            if let TreeTerm::Tree {
                at,
                tag,
                west,
                south,
            } = t
            {
                cells.insert(*at, *tag);
                for (child, side) in [(west, Side::West), (south, Side::South)] {
                    if let TreeTerm::Tree { at: c, .. } = child.as_ref() {
                        if *c != at.step(side) {
                            return None;
                        }
                    }
                    stack.push(child);
                }
            }
        }
        GridWord::from_cells(cells).ok()
    }

    pub fn size(&self) -> usize {
        match self {
            TreeTerm::Nil => 0,
            TreeTerm::Tree { west, south, .. } => 1 + west.size() + south.size(),
        }
    }
}

impl fmt::Display for TreeTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TreeTerm::Nil => f.write_str("nil"),
            TreeTerm::Tree {
                tag, west, south, ..
            } => write!(f, "Tree({tag},{west},{south})"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn word(text: &str) -> GridWord {
        text.parse().unwrap()
    }

    fn at(r: i32, c: i32) -> Coord {
        Coord::new(r, c)
    }

    #[test]
    fn topology_of_small_trees() {
        let t = derive_topology(&word("46")).unwrap();
        assert_eq!(t.parent(at(0, 0)), Some(at(0, 1)));
        assert_eq!(t.root(), at(0, 1));
        assert_eq!(
            t.leaves().iter().copied().collect::<Vec<_>>(),
            vec![at(0, 0)]
        );

        let t = derive_topology(&word("6\n2")).unwrap();
        assert_eq!(t.parent(at(1, 0)), Some(at(0, 0)));

        let t = derive_topology(&word("46\n*2")).unwrap();
        assert_eq!(t.children(at(0, 1)), &[at(0, 0), at(1, 1)]);
        assert_eq!(t.leaves().len(), 2);
    }

    #[test]
    fn non_tree_is_rejected() {
        assert!(matches!(
            derive_topology(&word("47\n2e")),
            Err(OrganismError::Pattern(PatternError::Violation(Pattern::Tr)))
        ));
    }

    #[test]
    fn capture_examples() {
        let sources = SourceSet::from_pairs([(at(4, 1), 50.0), (at(0, 0), 100.0)]).unwrap();
        assert_relative_eq!(
            capture_demand(at(0, 3), &sources),
            50.0 / 49.0 + 100.0 / 16.0,
            epsilon = 1e-12
        );
        let on = SourceSet::from_pairs([(at(2, 2), 70.0)]).unwrap();
        assert_eq!(capture_demand(at(2, 2), &on), 70.0);
        assert_eq!(capture_demand(at(0, 0), &SourceSet::new()), 0.0);
    }

    #[test]
    fn allocation_examples() {
        let s = SourceSet::from_pairs([(at(0, 0), 12.0)]).unwrap();
        let got = allocate_capacity(&[at(1, 0), at(0, 1)], &s);
        assert_relative_eq!(got[&at(1, 0)], 3.0);
        assert_relative_eq!(got[&at(0, 1)], 3.0);
        let got = allocate_capacity(&[at(0, 0), at(1, 0)], &s);
        assert_relative_eq!(got[&at(0, 0)], 9.6, epsilon = 1e-12);
        assert_relative_eq!(got[&at(1, 0)], 2.4, epsilon = 1e-12);
    }

    #[test]
    fn flow_examples() {
        let lone = derive_topology(&word("6")).unwrap();
        let s = SourceSet::from_pairs([(at(0, 0), 100.0)]).unwrap();
        assert_eq!(
            evaluate_flow(&lone, &s, 10000.0, &BTreeSet::new()).root_flow,
            100.0
        );

        let chain = derive_topology(&word("446")).unwrap();
        let s = SourceSet::from_pairs([(at(0, 0), 40.0)]).unwrap();
        let r = evaluate_flow(&chain, &s, 25.0, &BTreeSet::new());
        assert_eq!(r.root_flow, 25.0);
        assert!(r.per_node_throughput.values().all(|&t| t <= 25.0));

        let blocked: BTreeSet<Coord> = [chain.root()].into_iter().collect();
        assert_eq!(evaluate_flow(&chain, &s, 25.0, &blocked).root_flow, 0.0);
    }

    #[test]
    fn structure_terms() {
        let t = |text: &str| detect_structure(&derive_topology(&word(text)).unwrap()).to_string();
        assert_eq!(t("46"), "Tree(6,Tree(4,nil,nil),nil)");
        assert_eq!(t("6\n2"), "Tree(6,nil,Tree(2,nil,nil))");
        assert_eq!(t("46\n*2"), "Tree(6,Tree(4,nil,nil),Tree(2,nil,nil))");
    }

    #[test]
    fn structure_round_trip() {
        let w = word("4446\n2**2\n2*42");
        let term = detect_structure(&derive_topology(&w).unwrap());
        assert_eq!(term.size(), w.len());
        assert_eq!(term.to_word().unwrap(), w);
    }

    #[test]
    fn source_ids_are_stable() {
        let mut s = SourceSet::new();
        let a = s.add(at(0, 0), 1.0).unwrap();
        let b = s.add(at(1, 1), 2.0).unwrap();
        s.remove(a).unwrap();
        let c = s.add(at(2, 2), 3.0).unwrap();
        assert_ne!(c, a);
        assert_eq!(s.get(b).unwrap().power, 2.0);
        assert_eq!(s.modify(a, 5.0), Err(OrganismError::UnknownSource(a)));
        assert!(s.add(at(0, 0), -1.0).is_err());
    }
}
