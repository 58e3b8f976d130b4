use std::fmt;

use serde::{Deserialize, Serialize};

use super::PatternError;

/// One of the four cell sides, in the fixed w, n, e, s order used for border bits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    West,
    North,
    East,
    South,
}

impl Side {
    pub const ALL: [Side; 4] = [Side::West, Side::North, Side::East, Side::South];

    pub fn opposite(self) -> Side {
        match self {
            Side::West => Side::East,
            Side::North => Side::South,
            Side::East => Side::West,
            Side::South => Side::North,
        }
    }

    /// (row, col) step towards the neighbour on this side.
    pub fn delta(self) -> (i32, i32) {
        match self {
            Side::West => (0, -1),
            Side::North => (-1, 0),
            Side::East => (0, 1),
            Side::South => (1, 0),
        }
    }

    pub fn letter(self) -> char {
        match self {
            Side::West => 'w',
            Side::North => 'n',
            Side::East => 'e',
            Side::South => 's',
        }
    }

    fn index(self) -> usize {
        self as usize
    }
}

/// Border bits of a tile, indexed by [`Side`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Borders(pub [u8; 4]);

impl Borders {
    pub fn new(w: u8, n: u8, e: u8, s: u8) -> Self {
        Borders([w, n, e, s])
    }

    pub fn get(&self, side: Side) -> u8 {
        self.0[side.index()]
    }
}

/// A cell label. The border bits are the 4-bit binary expansion of the
/// label's value, read w, n, e, s from the most significant bit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CellSymbol {
    Two,
    Four,
    Five,
    Six,
    Seven,
    E,
}

impl CellSymbol {
    pub const ALL: [CellSymbol; 6] = [
        CellSymbol::Two,
        CellSymbol::Four,
        CellSymbol::Five,
        CellSymbol::Six,
        CellSymbol::Seven,
        CellSymbol::E,
    ];

    pub fn value(self) -> u8 {
        match self {
            CellSymbol::Two => 2,
            CellSymbol::Four => 4,
            CellSymbol::Five => 5,
            CellSymbol::Six => 6,
            CellSymbol::Seven => 7,
            CellSymbol::E => 14,
        }
    }

    pub fn borders(self) -> Borders {
        let v = self.value();
        Borders::new((v >> 3) & 1, (v >> 2) & 1, (v >> 1) & 1, v & 1)
    }

    pub fn border(self, side: Side) -> u8 {
        self.borders().get(side)
    }

    pub fn to_char(self) -> char {
        match self {
            CellSymbol::Two => '2',
            CellSymbol::Four => '4',
            CellSymbol::Five => '5',
            CellSymbol::Six => '6',
            CellSymbol::Seven => '7',
            CellSymbol::E => 'e',
        }
    }

    pub fn from_char(c: char) -> Result<Self, PatternError> {
        match c {
            '2' => Ok(CellSymbol::Two),
            '4' => Ok(CellSymbol::Four),
            '5' => Ok(CellSymbol::Five),
            '6' => Ok(CellSymbol::Six),
            '7' => Ok(CellSymbol::Seven),
            'e' | 'E' => Ok(CellSymbol::E),
            other => Err(PatternError::InvalidSymbol(other)),
        }
    }
}

/// Border bits for a tag character.
pub fn tile_borders(tag: char) -> Result<Borders, PatternError> {
    CellSymbol::from_char(tag).map(CellSymbol::borders)
}

impl fmt::Display for CellSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_char())
    }
}

impl Serialize for CellSymbol {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_char().to_string())
    }
}

impl<'de> Deserialize<'de> for CellSymbol {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        let mut chars = s.chars();
        match (chars.next(), chars.next()) {
            (Some(c), None) => CellSymbol::from_char(c).map_err(serde::de::Error::custom),
            _ => Err(serde::de::Error::custom(format!(
                "invalid cell symbol {s:?}"
            ))),
        }
    }
}
