//! The composition-built ring generators against exhaustive enumeration.

use std::collections::{BTreeMap, BTreeSet};

use vorg_core::contour::{generate_rat_membranes, generate_rat_words};
use vorg_core::pattern::{accepts_product, accepts_tiling, enumerate_words};
use vorg_core::{GridWord, Pattern};

fn removal_leaves_rat(word: &GridWord) -> bool {
    word.iter().any(|(c, _)| {
        let mut cells = word.cells().clone();
        cells.remove(&c);
        GridWord::from_cells(cells)
            .is_ok_and(|rest| accepts_tiling(&rest, &Pattern::Rat.automaton()))
    })
}

#[test]
fn small_words_match_enumeration() {
    let generated = generate_rat_words(7);
    let enumerated: BTreeSet<GridWord> = enumerate_words(Pattern::Rat, 7).into_iter().collect();
    assert_eq!(generated, enumerated);
    assert_eq!(generate_rat_words(4), generate_rat_membranes(4));
}

#[test]
fn membranes_are_minimal_rings() {
    let ring: GridWord = "47\n2e".parse().unwrap();
    let m = generate_rat_membranes(10);
    assert!(m.contains(&ring));
    for w in &m {
        assert!(accepts_tiling(w, &Pattern::Rat.automaton()));
        assert!(!removal_leaves_rat(w), "not minimal:\n{w}");
    }
    // Every minimal RAT word up to 8 cells is found.
    let minimal: BTreeSet<GridWord> = enumerate_words(Pattern::Rat, 8)
        .into_iter()
        .filter(|w| !removal_leaves_rat(w))
        .collect();
    let m8: BTreeSet<GridWord> = m.into_iter().filter(|w| w.len() <= 8).collect();
    assert_eq!(m8, minimal);
}

#[test]
fn five_cell_words_are_rings_with_one_bar_cell() {
    let rings = generate_rat_membranes(4);
    for w in generate_rat_words(5).iter().filter(|w| w.len() == 5) {
        assert!(accepts_tiling(w, &Pattern::Rat.automaton()));
        let inner = w.iter().any(|(c, _)| {
            let mut cells = w.cells().clone();
            cells.remove(&c);
            GridWord::from_cells(cells).is_ok_and(|rest| rings.contains(&rest.anchored()))
        });
        assert!(inner, "{w}");
    }
}

#[test]
fn larger_generated_words_pass_both_recognizers() {
    let words = generate_rat_words(10);
    let mut by_size: BTreeMap<usize, usize> = BTreeMap::new();
    for w in &words {
        *by_size.entry(w.len()).or_default() += 1;
    }
    assert!(words.len() >= 200, "only {} words", words.len());
    for w in words.iter().rev().take(200) {
        assert!(accepts_tiling(w, &Pattern::Rat.automaton()));
        assert!(accepts_product(w, &Pattern::Rat.spec()));
    }
    assert!(by_size.keys().all(|&n| (4..=10).contains(&n)));
}
