//! Adaptive virtual organisms on regular 2D patterns.
//!
//! The crate is layered bottom-up:
//!
//! - [`pattern`]: 2D words and the Tr / RAT / CRAT recognizers.
//! - [`contour`]: normal-form contours, border addressing, the general
//!   composition operator and the ring (membrane) generator built on it.
//! - [`organism`]: tree-collector topology, capture and capped flow.
//! - [`reconfig`]: conservative subtree moves and elastic renting.
//! - [`engine`]: seeded tick-based scenarios and their metrics.
//! - [`experiments`]: the reconfiguration, dynamic-vs-static and elastic studies.

pub mod contour;
pub mod engine;
pub mod experiments;
pub mod organism;
pub mod pattern;
pub mod reconfig;

pub use pattern::{CellSymbol, Coord, GridWord, Pattern};
