//! The three reconfiguration experiments and the Monte Carlo reference
//! optimum they compare against.

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::engine::{
    run_scenario, stream, substream, Command, EngineError, ReconfigPolicy, ScenarioConfig,
    Simulation, SourcePlacement, SourceSpec, WordSpec,
};
use crate::organism::SourceSet;
use crate::pattern::{random_word, CellSymbol, Coord, GridWord, Pattern};
use crate::reconfig::{
    apply_move, enumerate_moves, reconfigure_until_stable, Bounds, ElasticConfig, RentLimit,
};

/// Shared experiment settings. Defaults are the calibrated values used by
/// the acceptance suite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default)]
pub struct ExperimentParams {
    pub grid_width: i32,
    pub grid_height: i32,
    /// Inclusive range of tree sizes.
    pub node_range: (usize, usize),
    pub source_count: usize,
    pub power_range: (f64, f64),
    pub fmax: f64,
    /// Source sets drawn when searching for the reference optimum.
    pub mc_samples: usize,
    /// Source sets drawn for the static tree of the dynamic-versus-static
    /// comparison. One means the tree is optimized for the scenario's own
    /// random initial sources.
    pub static_samples: usize,
    /// Random moves applied to the reference tree to get a start tree.
    pub randomize_moves: usize,
    pub max_steps: usize,
    pub ticks: usize,
    pub source_event_prob: f64,
    pub cost_percents: Vec<f64>,
    /// Inclusive range of total rent limits.
    pub rent_limit_range: (usize, usize),
    pub node_cost: f64,
    /// Benefit per unit flow as a multiple of `node_cost`.
    pub benefit_multiplier: f64,
    pub elastic_cost_percent: f64,
}

impl Default for ExperimentParams {
    fn default() -> Self {
        ExperimentParams {
            grid_width: 16,
            grid_height: 16,
            node_range: (20, 25),
            source_count: 3,
            power_range: (100.0, 1000.0),
            fmax: 10000.0,
            mc_samples: 10,
            static_samples: 1,
            randomize_moves: 4,
            max_steps: 200,
            ticks: 100,
            source_event_prob: 0.2,
            cost_percents: vec![0.01, 0.05, 0.10],
            rent_limit_range: (8, 10),
            node_cost: 1.0,
            benefit_multiplier: 10.0,
            elastic_cost_percent: 0.01,
        }
    }
}

impl ExperimentParams {
    pub fn bounds(&self) -> Bounds {
        Bounds::new(self.grid_width, self.grid_height)
    }
}

/// Mean and sample standard deviation.
pub fn mean_sd(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (0.0, 0.0);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Independent per-trial seeds.
pub fn trial_seeds(seed: u64, trials: usize) -> Vec<u64> {
    let mut rng = substream(seed, stream::MONTE_CARLO);
    (0..trials).map(|_| rng.gen()).collect()
}

/// A random tree of `cells` cells with its root in the north-east corner
/// of `bounds`, so every position in the field lies west or south of it.
pub fn random_tree_in<R: Rng>(cells: usize, bounds: &Bounds, rng: &mut R) -> GridWord {
    loop {
        let w = random_word(Pattern::Tr, cells, rng).expect("trees of any size exist");
        let (_, _, maxr, maxc) = w.bounding_box();
        if maxr < bounds.height && maxc < bounds.width {
            let root = w
                .iter()
                .find(|(_, t)| *t == CellSymbol::Six)
                .expect("trees have a root")
                .0;
            return w.translate(-root.row, bounds.width - 1 - root.col);
        }
    }
}

pub fn random_sources<R: Rng>(
    count: usize,
    range: (f64, f64),
    bounds: &Bounds,
    rng: &mut R,
) -> SourceSet {
    let mut s = SourceSet::new();
    for _ in 0..count {
        let pos = Coord::new(
            rng.gen_range(0..bounds.height),
            rng.gen_range(0..bounds.width),
        );
        let power = if range.0 == range.1 {
            range.0
        } else {
            rng.gen_range(range.0..range.1)
        };
        s.add(pos, power).expect("power drawn from a valid range");
    }
    s
}

/// Applies `moves` uniformly chosen valid moves. The tag multiset is kept.
pub fn randomize<R: Rng>(word: &GridWord, moves: usize, bounds: &Bounds, rng: &mut R) -> GridWord {
    let mut w = word.clone();
    for _ in 0..moves {
        let options = enumerate_moves(&w, bounds).expect("randomized words stay trees");
        let Some(m) = options.choose(rng) else { break };
        w = apply_move(&w, m, bounds).expect("enumerated move");
    }
    w
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reference {
    pub word: GridWord,
    pub sources: SourceSet,
    pub flow: f64,
}

/// Stabilizes `tree` against `samples` random source sets and keeps the
/// pair with the highest flow.
pub fn find_reference_optimal<R: Rng>(
    tree: &GridWord,
    samples: usize,
    params: &ExperimentParams,
    rng: &mut R,
) -> Reference {
    let bounds = params.bounds();
    let mut best: Option<Reference> = None;
    for _ in 0..samples.max(1) {
        let sources = random_sources(params.source_count, params.power_range, &bounds, rng);
        let stable =
            reconfigure_until_stable(tree, &sources, params.fmax, &bounds, params.max_steps)
                .expect("random trees are trees");
        let flow = *stable.flows.last().unwrap();
        if best.as_ref().is_none_or(|b| flow > b.flow) {
            best = Some(Reference {
                word: stable.word,
                sources,
                flow,
            });
        }
    }
    best.unwrap()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RatioTrial {
    pub seed: u64,
    pub nodes: usize,
    pub reference_flow: f64,
    pub flow: f64,
    pub ratio: f64,
    pub steps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RatioResult {
    pub mean_ratio: f64,
    pub sd_ratio: f64,
    pub mean_steps: f64,
    pub sd_steps: f64,
    pub trials: Vec<RatioTrial>,
}

pub fn ratio_trial(seed: u64, params: &ExperimentParams) -> RatioTrial {
    let bounds = params.bounds();
    let mut mc = substream(seed, stream::MONTE_CARLO);
    let nodes = mc.gen_range(params.node_range.0..=params.node_range.1);
    let tree = random_tree_in(nodes, &bounds, &mut substream(seed, stream::INITIAL_STATE));
    let reference = find_reference_optimal(&tree, params.mc_samples, params, &mut mc);
    let start = randomize(
        &reference.word,
        params.randomize_moves,
        &bounds,
        &mut substream(seed, stream::RANDOMIZE),
    );
    let stable = reconfigure_until_stable(
        &start,
        &reference.sources,
        params.fmax,
        &bounds,
        params.max_steps,
    )
    .expect("randomized words stay trees");
    let flow = *stable.flows.last().unwrap();
    RatioTrial {
        seed,
        nodes,
        reference_flow: reference.flow,
        flow,
        ratio: if reference.flow > 0.0 {
            flow / reference.flow
        } else {
            1.0
        },
        steps: stable.steps,
    }
}

/// Flow after re-stabilizing a randomized copy of the reference tree,
/// relative to the reference flow.
pub fn experiment_reconfig_ratio(
    trials: usize,
    seed: u64,
    params: &ExperimentParams,
) -> RatioResult {
    let rows: Vec<RatioTrial> = trial_seeds(seed, trials)
        .into_par_iter()
        .map(|s| ratio_trial(s, params))
        .collect();
    let (mean_ratio, sd_ratio) = mean_sd(&rows.iter().map(|r| r.ratio).collect::<Vec<_>>());
    let (mean_steps, sd_steps) = mean_sd(&rows.iter().map(|r| r.steps as f64).collect::<Vec<_>>());
    RatioResult {
        mean_ratio,
        sd_ratio,
        mean_steps,
        sd_steps,
        trials: rows,
    }
}

fn placements(sources: &SourceSet) -> SourceSpec {
    SourceSpec::List(
        sources
            .iter()
            .map(|s| SourcePlacement {
                row: s.pos.row,
                col: s.pos.col,
                power: s.power,
            })
            .collect(),
    )
}

fn scenario(
    params: &ExperimentParams,
    seed: u64,
    word: &GridWord,
    sources: &SourceSet,
) -> ScenarioConfig {
    ScenarioConfig {
        grid_width: params.grid_width,
        grid_height: params.grid_height,
        ticks: params.ticks,
        source_event_prob: params.source_event_prob,
        fmax: params.fmax,
        initial_word: WordSpec::Cells(word.clone()),
        initial_sources: placements(sources),
        seed,
        source_power_range: params.power_range,
        ..ScenarioConfig::default()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct DynamicTrial {
    pub seed: u64,
    pub nodes: usize,
    pub static_flow: f64,
    /// Mean dynamic flow per cost percent.
    pub dynamic_flow: Vec<f64>,
    pub reconfigs: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Table1Row {
    pub cost_percent: f64,
    /// Mean dynamic flow over mean static flow, minus one.
    pub mean_improvement: f64,
    /// Spread of the per-trial improvements.
    pub sd_improvement: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Table1Result {
    pub rows: Vec<Table1Row>,
    pub trials: Vec<DynamicTrial>,
}

pub fn dynamic_trial(seed: u64, params: &ExperimentParams) -> Result<DynamicTrial, EngineError> {
    let bounds = params.bounds();
    let mut mc = substream(seed, stream::MONTE_CARLO);
    let nodes = mc.gen_range(params.node_range.0..=params.node_range.1);
    let tree = random_tree_in(nodes, &bounds, &mut substream(seed, stream::INITIAL_STATE));
    let reference = find_reference_optimal(&tree, params.static_samples, params, &mut mc);
    let start = randomize(
        &reference.word,
        params.randomize_moves,
        &bounds,
        &mut substream(seed, stream::RANDOMIZE),
    );

    let mut fixed = scenario(params, seed, &reference.word, &reference.sources);
    fixed.reconfig_policy = ReconfigPolicy::Off;
    let static_flow = run_scenario(&fixed)?.summary.mean_root_flow;

    let mut dynamic_flow = Vec::new();
    let mut reconfigs = Vec::new();
    for &cost in &params.cost_percents {
        let mut cfg = scenario(params, seed, &start, &reference.sources);
        cfg.reconfig_policy = ReconfigPolicy::Auto;
        cfg.reconfig_cost_percent = cost;
        let r = run_scenario(&cfg)?;
        dynamic_flow.push(r.summary.mean_root_flow);
        reconfigs.push(r.summary.reconfig_count);
    }
    Ok(DynamicTrial {
        seed,
        nodes,
        static_flow,
        dynamic_flow,
        reconfigs,
    })
}

/// Improvement of an auto-reconfiguring random tree over the fixed
/// reference tree, per reconfiguration cost. Flows are averaged over all
/// trials before comparing, so a trial whose static flow is near zero
/// cannot dominate.
pub fn experiment_dynamic_vs_static(
    trials: usize,
    seed: u64,
    params: &ExperimentParams,
) -> Result<Table1Result, EngineError> {
    let rows: Vec<DynamicTrial> = trial_seeds(seed, trials)
        .into_par_iter()
        .map(|s| dynamic_trial(s, params))
        .collect::<Result<_, _>>()?;
    let table = params
        .cost_percents
        .iter()
        .enumerate()
        .map(|(i, &cost)| {
            let imp: Vec<f64> = rows
                .iter()
                .map(|t| (t.dynamic_flow[i] - t.static_flow) / t.static_flow)
                .collect();
            let (_, sd) = mean_sd(&imp);
            let dynamic: f64 = rows.iter().map(|t| t.dynamic_flow[i]).sum();
            let fixed: f64 = rows.iter().map(|t| t.static_flow).sum();
            Table1Row {
                cost_percent: cost,
                mean_improvement: dynamic / fixed - 1.0,
                sd_improvement: sd,
            }
        })
        .collect();
    Ok(Table1Result {
        rows: table,
        trials: rows,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ElasticTrial {
    pub seed: u64,
    pub nodes: usize,
    pub rent_limit: usize,
    pub benefit_off: f64,
    pub benefit_on: f64,
    pub improvement: f64,
    pub rented_at_end: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ElasticResult {
    /// Mean benefit with renting over mean benefit without, minus one.
    pub mean_improvement: f64,
    pub sd_improvement: f64,
    pub trials: Vec<ElasticTrial>,
}

pub fn elastic_config(params: &ExperimentParams, rent_limit: usize) -> ElasticConfig {
    ElasticConfig {
        benefit_per_unit_flow: params.benefit_multiplier * params.node_cost,
        node_cost: [
            (CellSymbol::Two, params.node_cost),
            (CellSymbol::Four, params.node_cost),
        ]
        .into_iter()
        .collect(),
        rent_limit: RentLimit::total(rent_limit),
    }
}

pub fn elastic_trial(seed: u64, params: &ExperimentParams) -> Result<ElasticTrial, EngineError> {
    let bounds = params.bounds();
    let mut mc = substream(seed, stream::MONTE_CARLO);
    let nodes = mc.gen_range(params.node_range.0..=params.node_range.1);
    let rent_limit = mc.gen_range(params.rent_limit_range.0..=params.rent_limit_range.1);
    let tree = random_tree_in(nodes, &bounds, &mut substream(seed, stream::INITIAL_STATE));
    let sources = random_sources(params.source_count, params.power_range, &bounds, &mut mc);

    let mut cfg = scenario(params, seed, &tree, &sources);
    cfg.reconfig_policy = ReconfigPolicy::Auto;
    cfg.reconfig_cost_percent = params.elastic_cost_percent;
    cfg.elastic = Some(elastic_config(params, rent_limit));
    cfg.elastic_enabled = false;
    let off = run_scenario(&cfg)?;
    cfg.elastic_enabled = true;
    let on = run_scenario(&cfg)?;
    let (b_off, b_on) = (off.summary.mean_benefit, on.summary.mean_benefit);
    Ok(ElasticTrial {
        seed,
        nodes,
        rent_limit,
        benefit_off: b_off,
        benefit_on: b_on,
        improvement: if b_off > 0.0 {
            (b_on - b_off) / b_off
        } else {
            0.0
        },
        rented_at_end: on.summary.final_rented,
    })
}

/// Mean benefit with elastic renting against the same runs without it,
/// averaged over all trials before comparing.
pub fn experiment_elastic(
    trials: usize,
    seed: u64,
    params: &ExperimentParams,
) -> Result<ElasticResult, EngineError> {
    let rows: Vec<ElasticTrial> = trial_seeds(seed, trials)
        .into_par_iter()
        .map(|s| elastic_trial(s, params))
        .collect::<Result<_, _>>()?;
    let (_, sd) = mean_sd(&rows.iter().map(|r| r.improvement).collect::<Vec<_>>());
    let on: f64 = rows.iter().map(|r| r.benefit_on).sum();
    let off: f64 = rows.iter().map(|r| r.benefit_off).sum();
    Ok(ElasticResult {
        mean_improvement: if off > 0.0 { on / off - 1.0 } else { 0.0 },
        sd_improvement: sd,
        trials: rows,
    })
}

/// Rented cells over time in a run where a rich source draws rented cells
/// towards it and then disappears.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Starvation {
    pub rented_per_tick: Vec<usize>,
    pub removed_at: u64,
    pub peak_rented: usize,
    pub final_rented: usize,
}

/// A three-cell tree in the north-east corner, one strong source far to
/// the west, renting allowed. The source is removed after `feed_ticks`.
pub fn starvation_scenario(
    params: &ExperimentParams,
    feed_ticks: usize,
    starve_ticks: usize,
) -> Result<Starvation, EngineError> {
    let w = params.grid_width;
    let word: GridWord = "446".parse::<GridWord>()?.translate(0, w - 3);
    let mut sources = SourceSet::new();
    sources.add(Coord::new(0, 0), params.power_range.1)?;
    let mut cfg = scenario(params, 0, &word, &sources);
    cfg.ticks = feed_ticks + starve_ticks;
    cfg.source_event_prob = 0.0;
    cfg.reconfig_policy = ReconfigPolicy::Off;
    cfg.elastic = Some(elastic_config(params, params.rent_limit_range.1));
    let mut sim = Simulation::new(cfg)?;
    let mut rented = Vec::new();
    for _ in 0..feed_ticks {
        sim.tick();
        rented.push(sim.state().rented.len());
    }
    let id = sim.state().sources.iter().next().expect("one source").id;
    sim.submit(Command::RemoveSource { id })
        .expect("source exists");
    let removed_at = sim.state().tick + 1;
    while !sim.is_finished() {
        sim.tick();
        rented.push(sim.state().rented.len());
    }
    Ok(Starvation {
        peak_rented: rented.iter().copied().max().unwrap_or(0),
        final_rented: sim.state().rented.len(),
        removed_at,
        rented_per_tick: rented,
    })
}
