use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{Borders, CellSymbol, Coord, GridWord};

/// A tiling system: allowed tiles plus the labels every external border must carry.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TilingAutomaton {
    pub tiles: BTreeSet<CellSymbol>,
    pub accept: Borders,
}

impl TilingAutomaton {
    pub fn new<I: IntoIterator<Item = CellSymbol>>(tiles: I, accept: Borders) -> Self {
        TilingAutomaton {
            tiles: tiles.into_iter().collect(),
            accept,
        }
    }

    /// Whether `symbol` placed at `at` agrees with every existing neighbour
    /// and shows the accepting label on every side without one.
    pub fn fits(&self, word: &GridWord, at: Coord, symbol: CellSymbol) -> bool {
        self.tiles.contains(&symbol)
            && at.neighbours().all(|(side, n)| match word.get(n) {
                Some(other) => symbol.border(side) == other.border(side.opposite()),
                None => symbol.border(side) == self.accept.get(side),
            })
    }
}

/// Checks a word against a tiling automaton: tiles drawn from the automaton,
/// adjacent cells agreeing on shared borders, external borders accepting.
pub fn accepts_tiling(word: &GridWord, aut: &TilingAutomaton) -> bool {
    word.iter().all(|(at, symbol)| {
        aut.tiles.contains(&symbol)
            && at.neighbours().all(|(side, n)| match word.get(n) {
                Some(other) => symbol.border(side) == other.border(side.opposite()),
                None => symbol.border(side) == aut.accept.get(side),
            })
    })
}

/// A regular language of the shape `P* (Q) S*` over cell symbols, with
/// `P`, `Q` pairwise disjoint from the symbols that may follow them.
/// All six row/column languages of the built-in patterns have this shape.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BarLanguage {
    prefix: &'static [CellSymbol],
    pivot: &'static [CellSymbol],
    suffix: &'static [CellSymbol],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum DfaState {
    Prefix,
    Suffix,
    Dead,
}

impl BarLanguage {
    const fn new(
        prefix: &'static [CellSymbol],
        pivot: &'static [CellSymbol],
        suffix: &'static [CellSymbol],
    ) -> Self {
        BarLanguage {
            prefix,
            pivot,
            suffix,
        }
    }

    fn step(&self, state: DfaState, symbol: CellSymbol) -> DfaState {
        match state {
            DfaState::Prefix if self.prefix.contains(&symbol) => DfaState::Prefix,
            DfaState::Prefix if self.pivot.contains(&symbol) => DfaState::Suffix,
            DfaState::Suffix if self.suffix.contains(&symbol) => DfaState::Suffix,
            _ => DfaState::Dead,
        }
    }

    pub fn matches<I: IntoIterator<Item = CellSymbol>>(&self, word: I) -> bool {
        let mut state = DfaState::Prefix;
        for s in word {
            state = self.step(state, s);
            if state == DfaState::Dead {
                return false;
            }
        }
        state == DfaState::Suffix
    }
}

fn alternatives(f: &mut fmt::Formatter<'_>, set: &[CellSymbol]) -> fmt::Result {
    if set.len() == 1 {
        write!(f, "{}", set[0])
    } else {
        let parts: Vec<String> = set.iter().map(|s| s.to_string()).collect();
        write!(f, "({})", parts.join("+"))
    }
}

impl fmt::Display for BarLanguage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if !self.prefix.is_empty() {
            alternatives(f, self.prefix)?;
            f.write_str("*")?;
        }
        alternatives(f, self.pivot)?;
        if !self.suffix.is_empty() {
            alternatives(f, self.suffix)?;
            f.write_str("*")?;
        }
        Ok(())
    }
}

use CellSymbol::{Five, Four, Seven, Six, Two, E};

const TR_ROWS: BarLanguage = BarLanguage::new(&[Four], &[Two, Six], &[]);
const TR_COLS: BarLanguage = BarLanguage::new(&[], &[Four, Six], &[Two]);
const RAT_ROWS: BarLanguage = BarLanguage::new(&[Four], &[Two, Seven], &[E]);
const RAT_COLS: BarLanguage = BarLanguage::new(&[Seven], &[Four, E], &[Two]);
const CRAT_ROWS: BarLanguage = BarLanguage::new(&[Four, Five], &[Two, Seven], &[E]);
const CRAT_COLS: BarLanguage = BarLanguage::new(&[Seven, Five], &[Four, E], &[Two]);

/// The built-in structural patterns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Pattern {
    /// Trees rooted at a 6-cell in the top-right corner.
    #[serde(rename = "tr", alias = "Tr", alias = "TR")]
    Tr,
    /// Rings with attached trees.
    #[serde(rename = "rat", alias = "RAT", alias = "Rat")]
    Rat,
    /// Connected rings with attached trees, linked by 5-cells.
    #[serde(rename = "crat", alias = "CRAT", alias = "Crat")]
    Crat,
}

/// Full description of a pattern: its tiling automaton and the row/column
/// languages whose product defines the same set of words.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PatternSpec {
    pub name: Pattern,
    pub automaton: TilingAutomaton,
    pub row_lang: BarLanguage,
    pub col_lang: BarLanguage,
}

impl Pattern {
    pub const ALL: [Pattern; 3] = [Pattern::Tr, Pattern::Rat, Pattern::Crat];

    pub fn alphabet(self) -> &'static [CellSymbol] {
        match self {
            Pattern::Tr => &[Two, Four, Six],
            Pattern::Rat => &[Two, Four, Seven, E],
            Pattern::Crat => &[Two, Four, Five, Seven, E],
        }
    }

    pub fn automaton(self) -> TilingAutomaton {
        TilingAutomaton::new(self.alphabet().iter().copied(), Borders::new(0, 1, 1, 0))
    }

    pub fn row_lang(self) -> BarLanguage {
        match self {
            Pattern::Tr => TR_ROWS,
            Pattern::Rat => RAT_ROWS,
            Pattern::Crat => CRAT_ROWS,
        }
    }

    pub fn col_lang(self) -> BarLanguage {
        match self {
            Pattern::Tr => TR_COLS,
            Pattern::Rat => RAT_COLS,
            Pattern::Crat => CRAT_COLS,
        }
    }

    pub fn spec(self) -> PatternSpec {
        PatternSpec {
            name: self,
            automaton: self.automaton(),
            row_lang: self.row_lang(),
            col_lang: self.col_lang(),
        }
    }

    /// Accepted by the tiling automaton.
    pub fn accepts(self, word: &GridWord) -> bool {
        accepts_tiling(word, &self.automaton())
    }
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Pattern::Tr => "Tr",
            Pattern::Rat => "RAT",
            Pattern::Crat => "CRAT",
        })
    }
}

impl std::str::FromStr for Pattern {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "tr" => Ok(Pattern::Tr),
            "rat" => Ok(Pattern::Rat),
            "crat" => Ok(Pattern::Crat),
            _ => Err(format!("unknown pattern {s:?} (expected tr, rat or crat)")),
        }
    }
}

/// Maximal horizontal runs, each read west to east.
pub fn row_runs(word: &GridWord) -> Vec<Vec<CellSymbol>> {
    runs(word.iter().map(|(c, s)| ((c.row, c.col), s)))
}

/// Maximal vertical runs, each read north to south.
pub fn col_runs(word: &GridWord) -> Vec<Vec<CellSymbol>> {
    let mut by_col: Vec<((i32, i32), CellSymbol)> =
        word.iter().map(|(c, s)| ((c.col, c.row), s)).collect();
    by_col.sort_by_key(|(k, _)| *k);
    runs(by_col.into_iter())
}

// Input sorted by (line, position); splits wherever the line changes or a gap appears.
fn runs<I: Iterator<Item = ((i32, i32), CellSymbol)>>(sorted: I) -> Vec<Vec<CellSymbol>> {
    let mut out: Vec<Vec<CellSymbol>> = Vec::new();
    let mut last: Option<(i32, i32)> = None;
    for ((line, pos), s) in sorted {
        match last {
            Some((l, p)) if l == line && p + 1 == pos => out.last_mut().unwrap().push(s),
            _ => out.push(vec![s]),
        }
        last = Some((line, pos));
    }
    out
}

/// Checks every maximal row run against the row language and every maximal
/// column run against the column language.
pub fn accepts_product(word: &GridWord, spec: &PatternSpec) -> bool {
    row_runs(word).into_iter().all(|r| spec.row_lang.matches(r))
        && col_runs(word).into_iter().all(|c| spec.col_lang.matches(c))
}
