use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::ContourError;
use crate::pattern::{Coord, GridWord, Side};

/// One unit step along a contour. Rows grow downward, so `D` increases y.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Dir {
    R,
    D,
    L,
    U,
}

impl Dir {
    pub fn delta(self) -> (i32, i32) {
        match self {
            Dir::R => (1, 0),
            Dir::D => (0, 1),
            Dir::L => (-1, 0),
            Dir::U => (0, -1),
        }
    }

    pub fn right_turn(self) -> Dir {
        match self {
            Dir::R => Dir::D,
            Dir::D => Dir::L,
            Dir::L => Dir::U,
            Dir::U => Dir::R,
        }
    }

    pub fn letter(self) -> char {
        match self {
            Dir::R => 'r',
            Dir::D => 'd',
            Dir::L => 'l',
            Dir::U => 'u',
        }
    }

    pub fn from_letter(c: char) -> Option<Dir> {
        match c {
            'r' => Some(Dir::R),
            'd' => Some(Dir::D),
            'l' => Some(Dir::L),
            'u' => Some(Dir::U),
            _ => None,
        }
    }

    /// Side of the word this edge bounds. Every contour is walked with the
    /// word on the right, so the mapping is the same for holes and the outside.
    pub fn word_side(self) -> Side {
        match self {
            Dir::R => Side::North,
            Dir::D => Side::East,
            Dir::L => Side::South,
            Dir::U => Side::West,
        }
    }
}

/// A hole contour: counterclockwise from the hole's top-left corner, with
/// that corner's offset (columns, rows) from the external start point.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct HoleContour {
    pub contour: Vec<Dir>,
    pub offset_x: i32,
    pub offset_y: i32,
}

/// Normal-form contour: the external contour clockwise from the top-left
/// corner of the left-most top-row cell, then the holes ordered by offset.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct NfContour {
    pub external: Vec<Dir>,
    pub holes: Vec<HoleContour>,
}

/// Vertex on the corner lattice: x is a column line, y a row line.
pub type Point = (i32, i32);

/// A traced boundary loop in absolute lattice coordinates.
#[derive(Debug, Clone)]
pub(crate) struct Loop {
    pub letters: Vec<Dir>,
    /// `points[i]` is where step `i` starts.
    pub points: Vec<Point>,
}

impl NfContour {
    /// Number of components: the external contour plus one per hole.
    pub fn components(&self) -> usize {
        1 + self.holes.len()
    }

    pub fn component(&self, i: usize) -> Option<&[Dir]> {
        if i == 0 {
            Some(&self.external)
        } else {
            self.holes.get(i - 1).map(|h| h.contour.as_slice())
        }
    }

    /// Start of component `i` relative to the external start point.
    pub fn component_origin(&self, i: usize) -> Option<Point> {
        if i == 0 {
            Some((0, 0))
        } else {
            self.holes.get(i - 1).map(|h| (h.offset_x, h.offset_y))
        }
    }

    /// Total number of boundary edges.
    pub fn perimeter(&self) -> usize {
        self.external.len() + self.holes.iter().map(|h| h.contour.len()).sum::<usize>()
    }

    /// Cells enclosed by the contour, relative to the external start point
    /// (the start point is the top-left corner of cell (0, 0)).
    pub fn rasterize(&self) -> BTreeSet<Coord> {
        // Vertical boundary edges, bucketed by the row they span.
        let mut crossings: BTreeMap<i32, Vec<i32>> = BTreeMap::new();
        for i in 0..self.components() {
            let (mut x, mut y) = self.component_origin(i).unwrap();
            for d in self.component(i).unwrap() {
                match d {
                    Dir::D => crossings.entry(y).or_default().push(x),
                    Dir::U => crossings.entry(y - 1).or_default().push(x),
                    _ => {}
                }
                let (dx, dy) = d.delta();
                x += dx;
                y += dy;
            }
        }
        let mut cells = BTreeSet::new();
        for (row, mut xs) in crossings {
            xs.sort_unstable();
            for pair in xs.chunks(2) {
                if let [a, b] = pair {
                    for col in *a..*b {
                        cells.insert(Coord::new(row, col));
                    }
                }
            }
        }
        cells
    }
}

/// Traces the boundary of `word` into loops: the external loop first, then
/// hole loops ordered by their top-left starting vertex offset.
pub(crate) fn trace_loops(word: &GridWord) -> Vec<Loop> {
    // Directed boundary edges with the word on the right.
    let mut out: BTreeMap<Point, Vec<Dir>> = BTreeMap::new();
    for (c, _) in word.iter() {
        let (x, y) = (c.col, c.row);
        if !word.contains(c.step(Side::North)) {
            out.entry((x, y)).or_default().push(Dir::R);
        }
        if !word.contains(c.step(Side::East)) {
            out.entry((x + 1, y)).or_default().push(Dir::D);
        }
        if !word.contains(c.step(Side::South)) {
            out.entry((x + 1, y + 1)).or_default().push(Dir::L);
        }
        if !word.contains(c.step(Side::West)) {
            out.entry((x, y + 1)).or_default().push(Dir::U);
        }
    }
    let mut unused: BTreeSet<(i32, i32, Dir)> = out
        .iter()
        .flat_map(|(&(x, y), ds)| ds.iter().map(move |&d| (y, x, d)))
        .collect();

    let next_dir = |at: Point, incoming: Dir| -> Dir {
        let options = &out[&at];
        if options.len() == 1 {
            options[0]
        } else if options.contains(&incoming.right_turn()) {
            // Pinch vertex: turning towards the word keeps diagonal cells apart.
            incoming.right_turn()
        } else {
            options[0]
        }
    };

    let walk = |start: Point, first: Dir, unused: &mut BTreeSet<(i32, i32, Dir)>| -> Loop {
        let mut letters = Vec::new();
        let mut points = Vec::new();
        let (mut at, mut d) = (start, first);
        loop {
            unused.remove(&(at.1, at.0, d));
            letters.push(d);
            points.push(at);
            let (dx, dy) = d.delta();
            at = (at.0 + dx, at.1 + dy);
            let nd = next_dir(at, d);
            if at == start && nd == first {
                break;
            }
            d = nd;
        }
        Loop { letters, points }
    };

    // The smallest (y, x) start among boundary edges is the external start point.
    let &(y0, x0, d0) = unused.iter().next().expect("non-empty word has a boundary");
    debug_assert_eq!(d0, Dir::R);
    let mut loops = vec![walk((x0, y0), d0, &mut unused)];
    let mut holes = Vec::new();
    while let Some(&(y, x, d)) = unused.iter().next() {
        holes.push(walk((x, y), d, &mut unused));
    }
    holes.sort_by_key(|l| (l.points[0].0 - x0, l.points[0].1 - y0));
    loops.extend(holes);
    loops
}

/// Normal-form contour of a connected word.
pub fn contour_of(word: &GridWord) -> NfContour {
    let loops = trace_loops(word);
    let (x0, y0) = loops[0].points[0];
    NfContour {
        external: loops[0].letters.clone(),
        holes: loops[1..]
            .iter()
            .map(|l| HoleContour {
                contour: l.letters.clone(),
                offset_x: l.points[0].0 - x0,
                offset_y: l.points[0].1 - y0,
            })
            .collect(),
    }
}

/// Cells of a word relative to its external start point.
pub fn cells_from_start(word: &GridWord) -> BTreeSet<Coord> {
    let top = word.iter().next().map(|(c, _)| c).expect("non-empty");
    word.iter()
        .map(|(c, _)| Coord::new(c.row - top.row, c.col - top.col))
        .collect()
}

fn write_run_length(f: &mut fmt::Formatter<'_>, letters: &[Dir]) -> fmt::Result {
    let mut i = 0;
    while i < letters.len() {
        let mut j = i;
        while j < letters.len() && letters[j] == letters[i] {
            j += 1;
        }
        write!(f, "{}", letters[i].letter())?;
        if j - i > 1 {
            write!(f, "^{}", j - i)?;
        }
        i = j;
    }
    Ok(())
}

impl fmt::Display for NfContour {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        write_run_length(f, &self.external)?;
        if !self.holes.is_empty() {
            f.write_str("; ")?;
            for (i, h) in self.holes.iter().enumerate() {
                if i > 0 {
                    f.write_str(", ")?;
                }
                f.write_str("(")?;
                write_run_length(f, &h.contour)?;
                write!(f, ",{},{})", h.offset_x, h.offset_y)?;
            }
        }
        f.write_str(")")
    }
}

fn parse_letters(s: &str) -> Result<Vec<Dir>, ContourError> {
    let mut out = Vec::new();
    let mut chars = s.trim().chars().peekable();
    while let Some(c) = chars.next() {
        if c.is_whitespace() {
            continue;
        }
        let d =
            Dir::from_letter(c).ok_or_else(|| ContourError::Parse(format!("unexpected {c:?}")))?;
        let mut count = 1usize;
        if chars.peek() == Some(&'^') {
            chars.next();
            let mut digits = String::new();
            while let Some(&n) = chars.peek() {
                if n.is_ascii_digit() {
                    digits.push(n);
                    chars.next();
                } else {
                    break;
                }
            }
            count = digits
                .parse()
                .map_err(|_| ContourError::Parse(format!("bad exponent after {c:?}")))?;
        }
        out.extend(std::iter::repeat_n(d, count));
    }
    Ok(out)
}

impl FromStr for NfContour {
    type Err = ContourError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let body = s
            .trim()
            .strip_prefix('(')
            .and_then(|b| b.strip_suffix(')'))
            .ok_or_else(|| ContourError::Parse("expected (C0; ...)".into()))?;
        let (ext, rest) = match body.split_once(';') {
            Some((e, r)) => (e, r.trim()),
            None => (body, ""),
        };
        let external = parse_letters(ext)?;
        let mut holes = Vec::new();
        let mut rest = rest;
        while !rest.is_empty() {
            let inner_start = rest
                .find('(')
                .ok_or_else(|| ContourError::Parse("expected hole (C,x,y)".into()))?;
            let inner_end = rest[inner_start..]
                .find(')')
                .ok_or_else(|| ContourError::Parse("unclosed hole".into()))?
                + inner_start;
            let parts: Vec<&str> = rest[inner_start + 1..inner_end].split(',').collect();
            let [c, x, y] = parts.as_slice() else {
                return Err(ContourError::Parse("hole needs (C,x,y)".into()));
            };
            let num = |t: &str| {
                t.trim()
                    .parse::<i32>()
                    .map_err(|_| ContourError::Parse(format!("bad offset {t:?}")))
            };
            holes.push(HoleContour {
                contour: parse_letters(c)?,
                offset_x: num(x)?,
                offset_y: num(y)?,
            });
            rest = rest[inner_end + 1..].trim_start_matches([',', ' ']);
        }
        Ok(NfContour { external, holes })
    }
}
