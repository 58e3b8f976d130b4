//! Acceptance run: one PASS or FAIL line per criterion, nonzero exit if any
//! criterion fails.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{BufReader, Write};
use std::process::ExitCode;
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;
use vorg_core::contour::{
    contour_of, generate_rat_membranes, generate_rat_words, is_simple_cycle, NfContour,
};
use vorg_core::engine::{run_scenario, ScenarioConfig, SourceSpec, WordSpec};
use vorg_core::experiments::{
    experiment_dynamic_vs_static, experiment_elastic, experiment_reconfig_ratio, random_sources,
    random_tree_in, starvation_scenario, ExperimentParams,
};
use vorg_core::organism::{capture_demand, SourceSet};
use vorg_core::pattern::{accepts_product, accepts_tiling, enumerate_words, fixed_polyominoes};
use vorg_core::reconfig::{
    apply_move, elastic_step, enumerate_moves, Bounds, ElasticConfig, RentLimit, RentedSet,
};
use vorg_core::{CellSymbol, Coord, GridWord, Pattern};
use vorg_service::{replay, Session};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        let ok: bool = $cond;
        if !ok {
            return Err(format!($($msg)+));
        }
    };
}

const TRIALS: usize = 100;
const SEED: u64 = 1;

fn is_tree(w: &GridWord) -> bool {
    accepts_tiling(w, &Pattern::Tr.automaton()) && accepts_product(w, &Pattern::Tr.spec())
}

fn capture() -> Outcome {
    let sources =
        SourceSet::from_pairs([(Coord::new(4, 1), 50.0), (Coord::new(0, 0), 100.0)]).unwrap();
    let got = capture_demand(Coord::new(0, 3), &sources);
    let want = 50.0 / 49.0 + 100.0 / 16.0;
    ensure!((got - want).abs() <= 1e-9, "{got} != {want}");
    Ok(format!("{got:.12}"))
}

fn recognizers() -> Outcome {
    let start = Instant::now();
    let shapes = fixed_polyominoes(6);
    let mut checked = 0usize;
    for p in [Pattern::Tr, Pattern::Rat, Pattern::Crat] {
        let alphabet = p.alphabet();
        let (aut, spec) = (p.automaton(), p.spec());
        let mut accepted = BTreeSet::new();
        for shape in shapes.iter().flatten() {
            let n = shape.len();
            let mut digits = vec![0usize; n];
            loop {
                let word = GridWord::from_iter_cells(
                    shape.iter().zip(&digits).map(|(c, &d)| (*c, alphabet[d])),
                )
                .unwrap();
                let t = accepts_tiling(&word, &aut);
                ensure!(
                    t == accepts_product(&word, &spec),
                    "{p}: recognizers disagree on\n{word}"
                );
                if t {
                    accepted.insert(word);
                }
                checked += 1;
                let mut i = 0;
                while i < n {
                    digits[i] += 1;
                    if digits[i] < alphabet.len() {
                        break;
                    }
                    digits[i] = 0;
                    i += 1;
                }
                if i == n {
                    break;
                }
            }
        }
        let enumerated: BTreeSet<GridWord> = enumerate_words(p, 6).into_iter().collect();
        ensure!(
            enumerated == accepted,
            "{p}: enumeration differs from the accepted set"
        );
    }
    let took = start.elapsed();
    ensure!(took < Duration::from_secs(60), "took {took:?}");
    Ok(format!(
        "{checked} labelled words in {:.1}s",
        took.as_secs_f64()
    ))
}

/// Cells shifted so the bounding box starts at the origin.
fn normalized<I: IntoIterator<Item = Coord>>(cells: I) -> BTreeSet<Coord> {
    let cells: Vec<Coord> = cells.into_iter().collect();
    let r0 = cells.iter().map(|c| c.row).min().unwrap_or(0);
    let c0 = cells.iter().map(|c| c.col).min().unwrap_or(0);
    cells
        .iter()
        .map(|c| Coord::new(c.row - r0, c.col - c0))
        .collect()
}

fn invariants() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let bounds = Bounds::new(12, 12);
    let mut word = random_tree_in(15, &bounds, &mut rng);
    let counts = word.symbol_counts();
    for i in 0..1000 {
        let moves = enumerate_moves(&word, &bounds).unwrap();
        let m = *moves.choose(&mut rng).ok_or("no legal move")?;
        word = apply_move(&word, &m, &bounds).unwrap();
        ensure!(
            word.symbol_counts() == counts,
            "move {i} changed the tag multiset"
        );
        ensure!(is_tree(&word), "move {i} left\n{word}");
    }

    let limit = RentLimit {
        per_tag: BTreeMap::from([(CellSymbol::Two, 3), (CellSymbol::Four, 2)]),
        total: Some(4),
    };
    let cfg = ElasticConfig {
        benefit_per_unit_flow: 10.0,
        node_cost: BTreeMap::from([(CellSymbol::Two, 30.0), (CellSymbol::Four, 30.0)]),
        rent_limit: limit.clone(),
    };
    let bounds = Bounds::new(10, 10);
    let mut changes = 0;
    for _ in 0..20 {
        let mut word = random_tree_in(rng.gen_range(5..12), &bounds, &mut rng);
        let mut rented = RentedSet::new();
        let mut sources = SourceSet::new();
        for step in 0..50 {
            if step % 5 == 0 {
                sources = random_sources(rng.gen_range(0..=2), (100.0, 1000.0), &bounds, &mut rng);
            }
            let out = elastic_step(&word, &rented, &sources, 10_000.0, &cfg, &bounds).unwrap();
            ensure!(is_tree(&out.word), "elastic step left\n{}", out.word);
            ensure!(
                out.rented.consistent_with(&out.word),
                "rented cells missing from the word"
            );
            ensure!(
                out.rented.len() <= 4,
                "{} rented over a total limit of 4",
                out.rented.len()
            );
            for (tag, n) in out.rented.counts() {
                ensure!(
                    n <= limit.per_tag.get(&tag).copied().unwrap_or(0),
                    "{n} rented {tag:?}"
                );
            }
            changes += usize::from(out.change.is_some());
            word = out.word;
            rented = out.rented;
        }
    }

    let mut shapes = 0;
    for shape in fixed_polyominoes(8).iter().flatten() {
        let word = GridWord::from_iter_cells(shape.iter().map(|c| (*c, CellSymbol::Six))).unwrap();
        let c = contour_of(&word);
        ensure!(
            normalized(c.rasterize()) == normalized(shape.iter().copied()),
            "rasterizing the contour of\n{word}\nloses cells"
        );
        let back: NfContour = c.to_string().parse().map_err(|e| format!("{e}"))?;
        ensure!(back == c, "text form of {c} does not round-trip");
        shapes += 1;
    }
    Ok(format!(
        "1000 moves, 1000 elastic steps ({changes} changes), {shapes} contours"
    ))
}

fn rings() -> Outcome {
    let words = generate_rat_words(10);
    ensure!(words.len() >= 200, "only {} generated words", words.len());
    for w in words.iter().rev().take(200) {
        ensure!(
            accepts_tiling(w, &Pattern::Rat.automaton()),
            "tiling rejects\n{w}"
        );
        ensure!(
            accepts_product(w, &Pattern::Rat.spec()),
            "product rejects\n{w}"
        );
    }
    let cycles: BTreeSet<GridWord> = enumerate_words(Pattern::Rat, 7)
        .into_iter()
        .filter(is_simple_cycle)
        .collect();
    let generated: BTreeSet<GridWord> = generate_rat_membranes(7)
        .into_iter()
        .filter(is_simple_cycle)
        .collect();
    ensure!(
        cycles == generated,
        "{} enumerated cycles, {} generated",
        cycles.len(),
        generated.len()
    );
    Ok(format!(
        "200 of {} words accepted, {} cycles up to 7 cells",
        words.len(),
        cycles.len()
    ))
}

fn ratio() -> Outcome {
    let r = experiment_reconfig_ratio(TRIALS, SEED, &ExperimentParams::default());
    let line = format!(
        "mean ratio {:.4}, mean steps {:.2}, {TRIALS} trials",
        r.mean_ratio, r.mean_steps
    );
    ensure!(r.mean_ratio >= 0.90 && r.mean_steps <= 8.0, "{line}");
    Ok(line)
}

fn table1() -> Outcome {
    let r = experiment_dynamic_vs_static(TRIALS, SEED, &ExperimentParams::default())
        .map_err(|e| e.to_string())?;
    let pct: Vec<f64> = r
        .rows
        .iter()
        .map(|row| row.mean_improvement * 100.0)
        .collect();
    let line = format!(
        "{:.1}% / {:.1}% / {:.1}%, {TRIALS} trials",
        pct[0], pct[1], pct[2]
    );
    ensure!(pct.iter().all(|&p| p > 0.0), "not all positive: {line}");
    ensure!(
        pct.windows(2).all(|w| w[1] < w[0]),
        "not decreasing: {line}"
    );
    let bands = [(30.0, 150.0), (8.0, 60.0), (2.0, 30.0)];
    ensure!(
        pct.iter()
            .zip(bands)
            .all(|(p, (lo, hi))| (lo..=hi).contains(p)),
        "outside bands: {line}"
    );
    Ok(line)
}

fn elastic() -> Outcome {
    let p = ExperimentParams::default();
    let r = experiment_elastic(TRIALS, SEED, &p).map_err(|e| e.to_string())?;
    let pct = r.mean_improvement * 100.0;
    ensure!(pct >= 20.0, "mean improvement {pct:.1}%");
    let s = starvation_scenario(&p, 30, 30).map_err(|e| e.to_string())?;
    ensure!(
        s.peak_rented > 0,
        "nothing was rented while the source was present"
    );
    ensure!(
        s.final_rented == 0,
        "{} rented cells kept after starvation",
        s.final_rented
    );
    Ok(format!(
        "mean improvement {pct:.1}%, {TRIALS} trials; starvation peak {} then 0",
        s.peak_rented
    ))
}

#[derive(Clone, Default)]
struct Shared(Arc<Mutex<Vec<u8>>>);

impl Write for Shared {
    fn write(&mut self, buf: &[u8]) -> std::io::Result<usize> {
        self.0.lock().unwrap().extend_from_slice(buf);
        Ok(buf.len())
    }

    fn flush(&mut self) -> std::io::Result<()> {
        Ok(())
    }
}

fn determinism() -> Outcome {
    let cfg = ScenarioConfig {
        grid_width: 12,
        grid_height: 12,
        source_event_prob: 0.2,
        reconfig_cost_percent: 0.05,
        initial_word: WordSpec::Random { random_cells: 15 },
        initial_sources: SourceSpec::Random { count: 3 },
        seed: SEED,
        ..ScenarioConfig::default()
    };
    let a = run_scenario(&cfg)
        .map_err(|e| e.to_string())?
        .to_csv_string();
    let b = run_scenario(&cfg)
        .map_err(|e| e.to_string())?
        .to_csv_string();
    ensure!(a.as_bytes() == b.as_bytes(), "CSV differs between runs");

    let log = Shared::default();
    let mut s = Session::with_log(cfg, Box::new(log.clone())).map_err(|e| e.to_string())?;
    let frame = |kind: &str, seq: u64, payload: serde_json::Value| {
        json!({"kind": kind, "seq": seq, "payload": payload}).to_string()
    };
    let mut live = s.handle_text(&frame("start", 1, json!({})));
    for i in 0..20 {
        live.extend(s.advance());
        if i == 5 {
            live.extend(s.handle_text(&frame(
                "add_source",
                2,
                json!({"row": 2, "col": 2, "power": 700.0}),
            )));
            live.extend(s.handle_text(&frame("trigger_reconfig", 3, json!({}))));
        }
    }
    live.extend(s.handle_text(&frame("pause", 4, json!({}))));
    live.extend(s.handle_text(&frame("step", 5, json!({"n": 3}))));
    let bytes = log.0.lock().unwrap().clone();
    let replayed = replay(BufReader::new(&bytes[..])).map_err(|e| e.to_string())?;
    let text = |v: &[vorg_service::Event]| {
        v.iter()
            .map(|e| serde_json::to_string(e).unwrap())
            .collect::<Vec<_>>()
    };
    ensure!(text(&replayed) == text(&live), "replayed stream differs");
    Ok(format!(
        "{} CSV bytes identical, {} events replayed",
        a.len(),
        live.len()
    ))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("capture demand", capture),
        ("recognizer equivalence", recognizers),
        ("move, elastic and contour invariants", invariants),
        ("generated rings", rings),
        ("reconfiguration ratio", ratio),
        ("dynamic versus static", table1),
        ("elastic renting", elastic),
        ("determinism and replay", determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(check).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {} {name}: {detail} [{secs:.1}s]", i + 1),
            Err(detail) => {
                failed += 1;
                let detail = detail.replace('\n', " / ");
                println!("FAIL {} {name}: {detail} [{secs:.1}s]", i + 1);
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
