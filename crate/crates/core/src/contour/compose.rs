use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use super::{BorderAddress, BorderInterval, ContourError, CornerClass, Geometry};
use crate::pattern::{CellSymbol, Coord, GridWord, Side};

/// A lattice point or a unit edge, in absolute coordinates (x = column line,
/// y = row line). Horizontal edges run from (x, y) to (x + 1, y), vertical
/// ones from (x, y) to (x, y + 1).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum BorderElement {
    Point { x: i32, y: i32 },
    Edge { x: i32, y: i32, horizontal: bool },
}

impl BorderElement {
    fn shifted(self, dx: i32, dy: i32) -> Self {
        match self {
            BorderElement::Point { x, y } => BorderElement::Point {
                x: x + dx,
                y: y + dy,
            },
            BorderElement::Edge { x, y, horizontal } => BorderElement::Edge {
                x: x + dx,
                y: y + dy,
                horizontal,
            },
        }
    }

    /// Offset moving `other` onto `self`, when both are the same kind of element.
    fn offset_from(self, other: Self) -> Option<(i32, i32)> {
        match (self, other) {
            (BorderElement::Point { x, y }, BorderElement::Point { x: ox, y: oy }) => {
                Some((x - ox, y - oy))
            }
            (
                BorderElement::Edge { x, y, horizontal },
                BorderElement::Edge {
                    x: ox,
                    y: oy,
                    horizontal: oh,
                },
            ) if horizontal == oh => Some((x - ox, y - oy)),
            _ => None,
        }
    }

    fn is_edge(self) -> bool {
        matches!(self, BorderElement::Edge { .. })
    }
}

pub(crate) fn edge_at(at: (i32, i32), d: super::Dir) -> BorderElement {
    use super::Dir::*;
    let (x, y) = at;
    match d {
        R => BorderElement::Edge {
            x,
            y,
            horizontal: true,
        },
        L => BorderElement::Edge {
            x: x - 1,
            y,
            horizontal: true,
        },
        D => BorderElement::Edge {
            x,
            y,
            horizontal: false,
        },
        U => BorderElement::Edge {
            x,
            y: y - 1,
            horizontal: false,
        },
    }
}

/// What a selector starts from before `near` filters apply.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SelectorBase {
    /// Every border edge on that side of the word.
    Side(Side),
    /// An explicit run of edges.
    Interval(BorderInterval),
    /// One explicit point.
    Point(BorderAddress),
    /// Every point of a corner class.
    Corner(CornerClass),
}

/// `near-k-class`: at contour distance exactly `k` from such a corner.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NearCondition {
    pub class: CornerClass,
    pub k: usize,
}

/// Picks border elements of one operand: a base set narrowed by `near` filters.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Selector {
    pub base: SelectorBase,
    pub near: Vec<NearCondition>,
}

impl Selector {
    pub fn side(side: Side) -> Self {
        Selector {
            base: SelectorBase::Side(side),
            near: Vec::new(),
        }
    }

    pub fn interval(interval: BorderInterval) -> Self {
        Selector {
            base: SelectorBase::Interval(interval),
            near: Vec::new(),
        }
    }

    pub fn point(address: BorderAddress) -> Self {
        Selector {
            base: SelectorBase::Point(address),
            near: Vec::new(),
        }
    }

    pub fn corner(class: CornerClass) -> Self {
        Selector {
            base: SelectorBase::Corner(class),
            near: Vec::new(),
        }
    }

    pub fn near(mut self, class: CornerClass, k: usize) -> Self {
        self.near.push(NearCondition { class, k });
        self
    }

    /// Candidate element groups. Side selections split into maximal runs of
    /// consecutive contour edges; corner selections give one group per point;
    /// explicit intervals and points give a single group.
    pub(crate) fn candidates(&self, g: &Geometry) -> Result<Vec<Vec<BorderElement>>, ContourError> {
        let mut out = Vec::new();
        match &self.base {
            SelectorBase::Side(side) => {
                for (comp, l) in g.loops.iter().enumerate() {
                    let len = l.letters.len();
                    let picked: Vec<bool> = (0..len)
                        .map(|i| {
                            l.letters[i].word_side() == *side
                                && self.near.iter().all(|n| g.edge_near(comp, i, n.class, n.k))
                        })
                        .collect();
                    if picked.iter().all(|&p| p) {
                        out.push(
                            (0..len)
                                .map(|i| edge_at(l.points[i], l.letters[i]))
                                .collect(),
                        );
                        continue;
                    }
                    // Start right after an unpicked edge so runs never straddle the wrap.
                    let start = picked.iter().position(|&p| !p).unwrap() + 1;
                    let mut run: Vec<BorderElement> = Vec::new();
                    for step in 0..len {
                        let i = (start + step) % len;
                        if picked[i] {
                            run.push(edge_at(l.points[i], l.letters[i]));
                        } else if !run.is_empty() {
                            out.push(std::mem::take(&mut run));
                        }
                    }
                    if !run.is_empty() {
                        out.push(run);
                    }
                }
            }
            SelectorBase::Interval(iv) => {
                let edges = iv.edges(&g.contour)?;
                let l = &g.loops[iv.component];
                let group: Vec<BorderElement> = edges
                    .into_iter()
                    .filter(|&i| {
                        self.near
                            .iter()
                            .all(|n| g.edge_near(iv.component, i, n.class, n.k))
                    })
                    .map(|i| edge_at(l.points[i], l.letters[i]))
                    .collect();
                if !group.is_empty() {
                    out.push(group);
                }
            }
            SelectorBase::Point(a) => {
                let l = g
                    .loops
                    .get(a.component)
                    .ok_or(ContourError::InvalidAddress {
                        component: a.component,
                        index: a.index,
                    })?;
                let i = a.index.rem_euclid(l.points.len() as i64) as usize;
                if self
                    .near
                    .iter()
                    .all(|n| g.point_near(a.component, i, n.class, n.k))
                {
                    let (x, y) = l.points[i];
                    out.push(vec![BorderElement::Point { x, y }]);
                }
            }
            SelectorBase::Corner(class) => {
                for (comp, l) in g.loops.iter().enumerate() {
                    for (i, &(x, y)) in l.points.iter().enumerate() {
                        if g.classes[comp][i] == Some(*class)
                            && self
                                .near
                                .iter()
                                .all(|n| g.point_near(comp, i, n.class, n.k))
                        {
                            out.push(vec![BorderElement::Point { x, y }]);
                        }
                    }
                }
            }
        }
        for group in &mut out {
            group.sort();
        }
        Ok(out)
    }
}

// Plain `nw` means the land corner.
fn near_name(class: CornerClass) -> String {
    match class {
        CornerClass::Land(c) => c.name().to_string(),
        CornerClass::Golf(_) => class.to_string(),
    }
}

impl fmt::Display for Selector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let base = match &self.base {
            SelectorBase::Side(s) => s.letter().to_string(),
            SelectorBase::Interval(iv) => iv.to_string(),
            SelectorBase::Point(a) => a.to_string(),
            SelectorBase::Corner(c) => c.to_string(),
        };
        if self.near.is_empty() {
            return f.write_str(&base);
        }
        write!(f, "({base}")?;
        for n in &self.near {
            write!(f, " & near-{}-{}", n.k, near_name(n.class))?;
        }
        f.write_str(")")
    }
}

/// `=`: a candidate group of the left operand coincides with one of the right.
/// `<`: a left group lies inside a right group. `#`: the selections share an element.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Eq,
    Incl,
    Meets,
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Relation::Eq => "=",
            Relation::Incl => "<",
            Relation::Meets => "#",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Atom {
    pub left: Selector,
    pub relation: Relation,
    pub right: Selector,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Formula {
    Atom(Atom),
    And(Vec<Formula>),
    Or(Vec<Formula>),
    Not(Box<Formula>),
}

impl Formula {
    pub fn atom(left: Selector, relation: Relation, right: Selector) -> Self {
        Formula::Atom(Atom {
            left,
            relation,
            right,
        })
    }

    pub fn same(left: Selector, right: Selector) -> Self {
        Formula::atom(left, Relation::Eq, right)
    }

    pub fn within(left: Selector, right: Selector) -> Self {
        Formula::atom(left, Relation::Incl, right)
    }

    pub fn meets(left: Selector, right: Selector) -> Self {
        Formula::atom(left, Relation::Meets, right)
    }

    pub fn and(self, other: Formula) -> Self {
        match self {
            Formula::And(mut parts) => {
                parts.push(other);
                Formula::And(parts)
            }
            f => Formula::And(vec![f, other]),
        }
    }

    pub fn or(self, other: Formula) -> Self {
        match self {
            Formula::Or(mut parts) => {
                parts.push(other);
                Formula::Or(parts)
            }
            f => Formula::Or(vec![f, other]),
        }
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(self) -> Self {
        Formula::Not(Box::new(self))
    }

    fn atoms<'a>(&'a self, out: &mut Vec<&'a Atom>) {
        match self {
            Formula::Atom(a) => out.push(a),
            Formula::And(fs) | Formula::Or(fs) => fs.iter().for_each(|f| f.atoms(out)),
            Formula::Not(f) => f.atoms(out),
        }
    }

    /// An atom every satisfying placement must satisfy (reachable through `And` only).
    fn required_atom(&self) -> Option<&Atom> {
        match self {
            Formula::Atom(a) => Some(a),
            Formula::And(fs) => fs.iter().find_map(Formula::required_atom),
            _ => None,
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::Atom(a) => write!(f, "({} {} {})", a.left, a.relation, a.right),
            Formula::And(fs) | Formula::Or(fs) => {
                let op = if matches!(self, Formula::And(_)) {
                    " & "
                } else {
                    " | "
                };
                f.write_str("(")?;
                for (i, x) in fs.iter().enumerate() {
                    if i > 0 {
                        f.write_str(op)?;
                    }
                    write!(f, "{x}")?;
                }
                f.write_str(")")
            }
            Formula::Not(x) => write!(f, "!{x}"),
        }
    }
}

/// A composition condition `phi` in `v1 phi v2`. With `strict`, the two
/// operands may share no border edge other than those the satisfied atoms identify.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompositionConstraint {
    pub formula: Formula,
    pub strict: bool,
}

impl CompositionConstraint {
    pub fn new(formula: Formula) -> Self {
        CompositionConstraint {
            formula,
            strict: false,
        }
    }

    pub fn strict(formula: Formula) -> Self {
        CompositionConstraint {
            formula,
            strict: true,
        }
    }
}

impl fmt::Display for CompositionConstraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.strict {
            write!(f, "strict{}", self.formula)
        } else {
            write!(f, "{}", self.formula)
        }
    }
}

type Groups = Vec<Vec<BorderElement>>;

struct Evaluated {
    left: Groups,
    right: Groups,
}

/// Truth value plus the elements the satisfied positive atoms identify.
fn eval(
    f: &Formula,
    atoms: &[&Atom],
    evaluated: &[Evaluated],
    shift: (i32, i32),
    identified: &mut BTreeSet<BorderElement>,
) -> bool {
    match f {
        Formula::Atom(a) => {
            let i = atoms.iter().position(|x| std::ptr::eq(*x, a)).unwrap();
            eval_atom(a.relation, &evaluated[i], shift, identified)
        }
        Formula::And(fs) => {
            let mut ok = true;
            for x in fs {
                ok &= eval(x, atoms, evaluated, shift, identified);
            }
            ok
        }
        Formula::Or(fs) => {
            let mut ok = false;
            for x in fs {
                ok |= eval(x, atoms, evaluated, shift, identified);
            }
            ok
        }
        Formula::Not(x) => !eval(x, atoms, evaluated, shift, &mut BTreeSet::new()),
    }
}

fn eval_atom(
    rel: Relation,
    e: &Evaluated,
    (dx, dy): (i32, i32),
    identified: &mut BTreeSet<BorderElement>,
) -> bool {
    let right: Vec<BTreeSet<BorderElement>> = e
        .right
        .iter()
        .map(|g| g.iter().map(|x| x.shifted(dx, dy)).collect())
        .collect();
    let mut ok = false;
    match rel {
        Relation::Eq | Relation::Incl => {
            for l in &e.left {
                let hit = right.iter().any(|r| {
                    if rel == Relation::Eq {
                        r.len() == l.len() && l.iter().all(|x| r.contains(x))
                    } else {
                        l.iter().all(|x| r.contains(x))
                    }
                });
                if hit {
                    ok = true;
                    identified.extend(l.iter().copied());
                }
            }
        }
        Relation::Meets => {
            let all_right: BTreeSet<BorderElement> = right.into_iter().flatten().collect();
            for x in e.left.iter().flatten() {
                if all_right.contains(x) {
                    ok = true;
                    identified.insert(*x);
                }
            }
        }
    }
    ok
}

/// All arrangements of `v2` next to `v1` (which stays put) satisfying `phi`:
/// no overlapping cells, at least one shared edge, and the formula true.
/// Results are given in `v1`'s coordinates.
pub fn compose(
    v1: &GridWord,
    phi: &CompositionConstraint,
    v2: &GridWord,
) -> Result<BTreeSet<GridWord>, ContourError> {
    let g1 = Geometry::of(v1);
    let g2 = Geometry::of(v2);
    let mut atoms = Vec::new();
    phi.formula.atoms(&mut atoms);
    let mut evaluated = Vec::with_capacity(atoms.len());
    for a in &atoms {
        evaluated.push(Evaluated {
            left: a.left.candidates(&g1)?,
            right: a.right.candidates(&g2)?,
        });
    }

    let mut offsets: BTreeSet<(i32, i32)> = BTreeSet::new();
    let required = phi
        .formula
        .required_atom()
        .map(|a| atoms.iter().position(|x| std::ptr::eq(*x, a)).unwrap());
    match required {
        Some(i) => {
            let e = &evaluated[i];
            match atoms[i].relation {
                Relation::Eq | Relation::Incl => {
                    for l in &e.left {
                        for r in e.right.iter().flatten() {
                            offsets.extend(l[0].offset_from(*r));
                        }
                    }
                }
                Relation::Meets => {
                    for l in e.left.iter().flatten() {
                        for r in e.right.iter().flatten() {
                            offsets.extend(l.offset_from(*r));
                        }
                    }
                }
            }
        }
        None => {
            // Only contact constraints are expressible, so touching bounding boxes suffice.
            let (r0, c0, r1, c1) = v1.bounding_box();
            let (q0, d0, q1, d1) = v2.bounding_box();
            for dy in (r0 - q1 - 1)..=(r1 - q0 + 1) {
                for dx in (c0 - d1 - 1)..=(c1 - d0 + 1) {
                    offsets.insert((dx, dy));
                }
            }
        }
    }

    let mut out = BTreeSet::new();
    for (dx, dy) in offsets {
        let moved: BTreeMap<Coord, CellSymbol> =
            v2.iter().map(|(c, s)| (c.offset(dy, dx), s)).collect();
        if moved.keys().any(|c| v1.contains(*c)) {
            continue;
        }
        let contact = contact_edges(v1, &moved);
        if contact.is_empty() {
            continue;
        }
        let mut identified = BTreeSet::new();
        if !eval(&phi.formula, &atoms, &evaluated, (dx, dy), &mut identified) {
            continue;
        }
        if phi.strict && !contact.iter().all(|e| identified.contains(e)) {
            continue;
        }
        let mut cells = v1.cells().clone();
        cells.extend(moved);
        out.insert(GridWord::from_cells(cells).expect("touching connected words stay connected"));
    }
    Ok(out)
}

fn contact_edges(v1: &GridWord, v2: &BTreeMap<Coord, CellSymbol>) -> BTreeSet<BorderElement> {
    let mut out = BTreeSet::new();
    for (c, _) in v1.iter() {
        let (x, y) = (c.col, c.row);
        for side in Side::ALL {
            if !v2.contains_key(&c.step(side)) {
                continue;
            }
            out.insert(match side {
                Side::North => BorderElement::Edge {
                    x,
                    y,
                    horizontal: true,
                },
                Side::South => BorderElement::Edge {
                    x,
                    y: y + 1,
                    horizontal: true,
                },
                Side::West => BorderElement::Edge {
                    x,
                    y,
                    horizontal: false,
                },
                Side::East => BorderElement::Edge {
                    x: x + 1,
                    y,
                    horizontal: false,
                },
            });
        }
    }
    debug_assert!(out.iter().all(|e| e.is_edge()));
    out
}
