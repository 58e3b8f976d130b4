use std::collections::{BTreeMap, BTreeSet, HashSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{CellSymbol, Coord, GridWord, Pattern, PatternError, Side, TilingAutomaton};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GenerateMode {
    Enumerate,
    Random,
}

/// All fixed polyominoes (connected cell sets up to translation) with
/// `1..=max_cells` cells, indexed by size. Each is anchored at (0, 0) and sorted.
pub fn fixed_polyominoes(max_cells: usize) -> Vec<Vec<Vec<Coord>>> {
    let mut by_size: Vec<Vec<Vec<Coord>>> = vec![Vec::new(); max_cells + 1];
    if max_cells == 0 {
        return by_size;
    }
    by_size[1].push(vec![Coord::new(0, 0)]);
    for size in 2..=max_cells {
        let mut seen: HashSet<Vec<Coord>> = HashSet::new();
        let mut next = Vec::new();
        for poly in &by_size[size - 1] {
            let members: BTreeSet<Coord> = poly.iter().copied().collect();
            for c in poly {
                for (_, n) in c.neighbours() {
                    if members.contains(&n) {
                        continue;
                    }
                    let mut grown: Vec<Coord> = poly.clone();
                    grown.push(n);
                    let shape = normalize(grown);
                    if seen.insert(shape.clone()) {
                        next.push(shape);
                    }
                }
            }
        }
        next.sort();
        by_size[size] = next;
    }
    by_size
}

fn normalize(mut cells: Vec<Coord>) -> Vec<Coord> {
    let r0 = cells.iter().map(|c| c.row).min().unwrap_or(0);
    let c0 = cells.iter().map(|c| c.col).min().unwrap_or(0);
    for c in &mut cells {
        *c = Coord::new(c.row - r0, c.col - c0);
    }
    cells.sort();
    cells
}

/// Every labelling of a fixed shape accepted by `aut`, by backtracking in
/// (row, col) order and checking each side as soon as both cells are known.
pub fn accepted_labellings(shape: &[Coord], aut: &TilingAutomaton) -> Vec<GridWord> {
    let members: BTreeSet<Coord> = shape.iter().copied().collect();
    let mut sorted: Vec<Coord> = shape.to_vec();
    sorted.sort();
    let tiles: Vec<CellSymbol> = aut.tiles.iter().copied().collect();
    let mut assignment: BTreeMap<Coord, CellSymbol> = BTreeMap::new();
    let mut out = Vec::new();
    label_from(0, &sorted, &members, &tiles, aut, &mut assignment, &mut out);
    out
}

fn label_from(
    idx: usize,
    order: &[Coord],
    members: &BTreeSet<Coord>,
    tiles: &[CellSymbol],
    aut: &TilingAutomaton,
    assignment: &mut BTreeMap<Coord, CellSymbol>,
    out: &mut Vec<GridWord>,
) {
    if idx == order.len() {
        out.push(GridWord::from_cells(assignment.clone()).expect("shape is connected"));
        return;
    }
    let at = order[idx];
    for &t in tiles {
        let ok = Side::ALL.iter().all(|&side| {
            let n = at.step(side);
            if !members.contains(&n) {
                return t.border(side) == aut.accept.get(side);
            }
            match assignment.get(&n) {
                Some(other) => t.border(side) == other.border(side.opposite()),
                None => true,
            }
        });
        if ok {
            assignment.insert(at, t);
            label_from(idx + 1, order, members, tiles, aut, assignment, out);
            assignment.remove(&at);
        }
    }
}

/// All member words with at most `max_cells` cells, anchored at (0, 0),
/// ordered by size then by cell map.
pub fn enumerate_words(pattern: Pattern, max_cells: usize) -> Vec<GridWord> {
    let aut = pattern.automaton();
    let mut out = Vec::new();
    for shapes in fixed_polyominoes(max_cells).iter().skip(1) {
        let mut words: Vec<GridWord> = shapes
            .iter()
            .flat_map(|s| accepted_labellings(s, &aut))
            .collect();
        words.sort();
        out.extend(words);
    }
    out
}

/// Generates member words of `pattern`.
///
/// `Enumerate` lists every member with at most `max_cells` cells.
/// `Random` grows a single word of exactly `max_cells` cells from a seed
/// (a lone 6-cell for trees, a random membrane for ring patterns) by
/// attaching one cell at a time where it fits the tiling automaton.
pub fn generate_words(
    pattern: Pattern,
    max_cells: usize,
    seed: u64,
    mode: GenerateMode,
) -> Result<Vec<GridWord>, PatternError> {
    if max_cells == 0 {
        return Err(PatternError::NoMember { pattern, max_cells });
    }
    match mode {
        GenerateMode::Enumerate => {
            let words = enumerate_words(pattern, max_cells);
            if words.is_empty() {
                Err(PatternError::NoMember { pattern, max_cells })
            } else {
                Ok(words)
            }
        }
        GenerateMode::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            random_word(pattern, max_cells, &mut rng).map(|w| vec![w])
        }
    }
}

/// One random member word of exactly `cells` cells.
pub fn random_word<R: rand::Rng>(
    pattern: Pattern,
    cells: usize,
    rng: &mut R,
) -> Result<GridWord, PatternError> {
    let seed_word = match pattern {
        Pattern::Tr => GridWord::single(Coord::new(0, 0), CellSymbol::Six),
        Pattern::Rat | Pattern::Crat => {
            let membranes: Vec<GridWord> = crate::contour::generate_rat_membranes(cells.min(8))
                .into_iter()
                .filter(|m| m.len() <= cells)
                .collect();
            membranes
                .choose(rng)
                .cloned()
                .ok_or(PatternError::NoMember {
                    pattern,
                    max_cells: cells,
                })?
        }
    };
    if seed_word.len() > cells {
        return Err(PatternError::NoMember {
            pattern,
            max_cells: cells,
        });
    }
    let aut = pattern.automaton();
    let mut cellmap = seed_word.into_cells();
    while cellmap.len() < cells {
        let word = GridWord::from_cells(cellmap.clone())?;
        let options = attachment_options(&word, &aut);
        let &(at, symbol) = options.choose(rng).ok_or(PatternError::NoMember {
            pattern,
            max_cells: cells,
        })?;
        cellmap.insert(at, symbol);
    }
    Ok(GridWord::from_cells(cellmap)?.anchored())
}

/// Every (position, symbol) that can be added next to `word` keeping it accepted.
pub fn attachment_options(word: &GridWord, aut: &TilingAutomaton) -> Vec<(Coord, CellSymbol)> {
    let frontier: BTreeSet<Coord> = word
        .iter()
        .flat_map(|(c, _)| c.neighbours().map(|(_, n)| n))
        .filter(|n| !word.contains(*n))
        .collect();
    frontier
        .into_iter()
        .flat_map(|at| aut.tiles.iter().map(move |&s| (at, s)))
        .filter(|&(at, s)| aut.fits(word, at, s))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polyomino_counts() {
        // OEIS A001168
        let counts: Vec<usize> = fixed_polyominoes(7).iter().map(Vec::len).collect();
        assert_eq!(counts, vec![0, 1, 2, 6, 19, 63, 216, 760]);
    }

    #[test]
    fn single_cell_tree() {
        let words = generate_words(Pattern::Tr, 1, 0, GenerateMode::Enumerate).unwrap();
        assert_eq!(
            words,
            vec![GridWord::single(Coord::new(0, 0), CellSymbol::Six)]
        );
    }

    #[test]
    fn ring_needs_four_cells() {
        assert!(matches!(
            generate_words(Pattern::Rat, 3, 0, GenerateMode::Enumerate),
            Err(PatternError::NoMember { .. })
        ));
        let words = generate_words(Pattern::Rat, 4, 0, GenerateMode::Enumerate).unwrap();
        assert!(words.contains(&"47\n2e".parse().unwrap()));
    }

    #[test]
    fn random_word_has_exact_size() {
        for pattern in Pattern::ALL {
            for n in [4usize, 9, 20] {
                let w = &generate_words(pattern, n, 7, GenerateMode::Random).unwrap()[0];
                assert_eq!(w.len(), n);
                assert!(pattern.accepts(w), "{pattern}:\n{w}");
            }
        }
    }

    #[test]
    fn random_is_seeded() {
        let a = generate_words(Pattern::Tr, 15, 42, GenerateMode::Random).unwrap();
        let b = generate_words(Pattern::Tr, 15, 42, GenerateMode::Random).unwrap();
        assert_eq!(a, b);
    }
}
