use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{CellSymbol, PatternError, Side};

/// Integer grid position. Rows grow downward, columns grow rightward.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Coord {
    pub row: i32,
    pub col: i32,
}

impl Coord {
    pub const fn new(row: i32, col: i32) -> Self {
        Coord { row, col }
    }

    pub fn step(self, side: Side) -> Coord {
        let (dr, dc) = side.delta();
        Coord::new(self.row + dr, self.col + dc)
    }

    pub fn offset(self, dr: i32, dc: i32) -> Coord {
        Coord::new(self.row + dr, self.col + dc)
    }

    pub fn manhattan(self, other: Coord) -> u32 {
        self.row.abs_diff(other.row) + self.col.abs_diff(other.col)
    }

    pub fn neighbours(self) -> impl Iterator<Item = (Side, Coord)> {
        Side::ALL.into_iter().map(move |s| (s, self.step(s)))
    }
}

impl fmt::Display for Coord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.row, self.col)
    }
}

/// A 2D word: a finite, non-empty, 4-connected set of labelled cells.
///
/// The cell map is kept ordered by (row, col) so iteration, printing and
/// serialization are deterministic.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GridWord {
    cells: BTreeMap<Coord, CellSymbol>,
}

impl GridWord {
    /// Builds a word, checking it is non-empty and 4-connected.
    pub fn from_cells(cells: BTreeMap<Coord, CellSymbol>) -> Result<Self, PatternError> {
        if cells.is_empty() {
            return Err(PatternError::Empty);
        }
        if !is_connected(cells.keys().copied()) {
            return Err(PatternError::Disconnected);
        }
        Ok(GridWord { cells })
    }

    pub fn from_iter_cells<I>(cells: I) -> Result<Self, PatternError>
    where
        I: IntoIterator<Item = (Coord, CellSymbol)>,
    {
        Self::from_cells(cells.into_iter().collect())
    }

    pub fn single(at: Coord, symbol: CellSymbol) -> Self {
        GridWord {
            cells: BTreeMap::from([(at, symbol)]),
        }
    }

    pub fn cells(&self) -> &BTreeMap<Coord, CellSymbol> {
        &self.cells
    }

    pub fn into_cells(self) -> BTreeMap<Coord, CellSymbol> {
        self.cells
    }

    pub fn get(&self, at: Coord) -> Option<CellSymbol> {
        self.cells.get(&at).copied()
    }

    pub fn contains(&self, at: Coord) -> bool {
        self.cells.contains_key(&at)
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Coord, CellSymbol)> + '_ {
        self.cells.iter().map(|(c, s)| (*c, *s))
    }

    /// (min row, min col, max row, max col).
    pub fn bounding_box(&self) -> (i32, i32, i32, i32) {
        let mut b = (i32::MAX, i32::MAX, i32::MIN, i32::MIN);
        for c in self.cells.keys() {
            b.0 = b.0.min(c.row);
            b.1 = b.1.min(c.col);
            b.2 = b.2.max(c.row);
            b.3 = b.3.max(c.col);
        }
        b
    }

    pub fn translate(&self, dr: i32, dc: i32) -> GridWord {
        GridWord {
            cells: self
                .cells
                .iter()
                .map(|(c, s)| (c.offset(dr, dc), *s))
                .collect(),
        }
    }

    /// Translates the word so its bounding box starts at (0, 0).
    pub fn anchored(&self) -> GridWord {
        let (r0, c0, _, _) = self.bounding_box();
        self.translate(-r0, -c0)
    }

    /// Multiset of symbols, as counts indexed in [`CellSymbol::ALL`] order.
    pub fn symbol_counts(&self) -> [usize; 6] {
        let mut counts = [0; 6];
        for s in self.cells.values() {
            let i = CellSymbol::ALL.iter().position(|x| x == s).unwrap();
            counts[i] += 1;
        }
        counts
    }

    /// Renders the bounding box using `*` for empty positions.
    pub fn to_text(&self) -> String {
        let (r0, c0, r1, c1) = self.bounding_box();
        let mut out = String::new();
        for r in r0..=r1 {
            for c in c0..=c1 {
                out.push(self.get(Coord::new(r, c)).map_or('*', CellSymbol::to_char));
            }
            out.push('\n');
        }
        out
    }

    /// Parses the line-oriented text format: row 0 first, `*` for empty.
    pub fn parse_text(text: &str) -> Result<Self, PatternError> {
        let mut cells = BTreeMap::new();
        for (row, line) in text.lines().enumerate() {
            let line = line.trim_end_matches('\r');
            for (col, ch) in line.chars().enumerate() {
                if ch == '*' {
                    continue;
                }
                let symbol = CellSymbol::from_char(ch).map_err(|_| PatternError::Parse {
                    line: row + 1,
                    column: col + 1,
                    message: format!("unexpected character {ch:?}"),
                })?;
                cells.insert(Coord::new(row as i32, col as i32), symbol);
            }
        }
        Self::from_cells(cells)
    }
}

impl FromStr for GridWord {
    type Err = PatternError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        GridWord::parse_text(s)
    }
}

impl fmt::Display for GridWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

#[derive(Serialize, Deserialize)]
struct CellRecord {
    row: i32,
    col: i32,
    tag: CellSymbol,
}

impl Serialize for GridWord {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(self.iter().map(|(c, tag)| CellRecord {
            row: c.row,
            col: c.col,
            tag,
        }))
    }
}

impl<'de> Deserialize<'de> for GridWord {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Text(String),
            Cells(Vec<CellRecord>),
        }
        match Repr::deserialize(d)? {
            Repr::Text(t) => GridWord::parse_text(&t),
            Repr::Cells(v) => {
                GridWord::from_iter_cells(v.into_iter().map(|r| (Coord::new(r.row, r.col), r.tag)))
            }
        }
        .map_err(serde::de::Error::custom)
    }
}

/// 4-connectivity of a set of positions. The empty set counts as connected.
pub fn is_connected<I: IntoIterator<Item = Coord>>(cells: I) -> bool {
    let set: BTreeSet<Coord> = cells.into_iter().collect();
    let Some(&start) = set.iter().next() else {
        return true;
    };
    let mut seen = BTreeSet::from([start]);
    let mut queue = VecDeque::from([start]);
    while let Some(c) = queue.pop_front() {
        for (_, n) in c.neighbours() {
            if set.contains(&n) && seen.insert(n) {
                queue.push_back(n);
            }
        }
    }
    seen.len() == set.len()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_print() {
        let w: GridWord = "46\n*2\n".parse().unwrap();
        assert_eq!(w.len(), 3);
        assert_eq!(w.get(Coord::new(1, 1)), Some(CellSymbol::Two));
        assert_eq!(w.to_text(), "46\n*2\n");
    }

    #[test]
    fn parse_error_reports_position() {
        let err = GridWord::parse_text("46\n*x\n").unwrap_err();
        assert_eq!(
            err,
            PatternError::Parse {
                line: 2,
                column: 2,
                message: "unexpected character 'x'".into()
            }
        );
    }

    #[test]
    fn rejects_disconnected_and_empty() {
        assert_eq!(
            GridWord::parse_text("4*6\n"),
            Err(PatternError::Disconnected)
        );
        assert_eq!(GridWord::parse_text("**\n"), Err(PatternError::Empty));
        // diagonal contact does not connect
        assert_eq!(
            GridWord::parse_text("4*\n*2\n"),
            Err(PatternError::Disconnected)
        );
    }

    #[test]
    fn anchoring_removes_offset() {
        let w = GridWord::single(Coord::new(5, -3), CellSymbol::Six);
        assert_eq!(
            w.anchored(),
            GridWord::single(Coord::new(0, 0), CellSymbol::Six)
        );
    }

    #[test]
    fn json_accepts_text_or_cells() {
        let a: GridWord = serde_json::from_str("\"46\\n*2\"").unwrap();
        let b: GridWord = serde_json::from_str(&serde_json::to_string(&a).unwrap()).unwrap();
        assert_eq!(a, b);
    }
}
