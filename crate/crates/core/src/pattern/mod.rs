//! 2D words on the integer grid and membership in the regular 2D patterns
//! Tr, RAT and CRAT, decided two independent ways: by tiling and by the
//! row/column product of 1D regular languages.

mod automaton;
mod enumerate;
mod symbol;
mod word;

pub use automaton::{
    accepts_product, accepts_tiling, col_runs, row_runs, BarLanguage, Pattern, PatternSpec,
    TilingAutomaton,
};
pub use enumerate::{
    accepted_labellings, attachment_options, enumerate_words, fixed_polyominoes, generate_words,
    random_word, GenerateMode,
};
pub use symbol::{tile_borders, Borders, CellSymbol, Side};
pub use word::{is_connected, Coord, GridWord};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PatternError {
    #[error("invalid cell symbol {0:?}")]
    InvalidSymbol(char),
    #[error("a word needs at least one cell")]
    Empty,
    #[error("cells are not 4-connected")]
    Disconnected,
    #[error("line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("no {pattern} word fits in {max_cells} cells")]
    NoMember { pattern: Pattern, max_cells: usize },
    #[error("word is not in pattern {0}")]
    Violation(Pattern),
}
