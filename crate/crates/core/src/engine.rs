//! Seeded tick-based scenario execution: source events, automatic and
//! commanded reconfiguration with blocking penalties, elastic renting, and
//! per-tick metrics.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::io;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::organism::{
    derive_topology, evaluate_flow, FlowReport, OrganismError, SourceSet, TreeTopology,
};
use crate::pattern::{random_word, Coord, GridWord, Pattern, PatternError};
use crate::reconfig::{
    apply_move, best_move, elastic_benefit, elastic_step, move_displacement, Bounds, ElasticChange,
    ElasticConfig, Move, ReconfigError, RentedSet,
};

/// Named random sub-streams derived from one seed.
pub mod stream {
    pub const SOURCE_EVENTS: u64 = 1;
    pub const INITIAL_STATE: u64 = 2;
    pub const RANDOMIZE: u64 = 3;
    pub const MONTE_CARLO: u64 = 4;
}

/// A ChaCha8 generator for one named sub-stream of `seed`.
pub fn substream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EngineError {
    #[error(transparent)]
    Pattern(#[from] PatternError),
    #[error(transparent)]
    Organism(#[from] OrganismError),
    #[error(transparent)]
    Reconfig(#[from] ReconfigError),
    #[error("invalid scenario: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReconfigPolicy {
    Off,
    Auto,
}

/// The starting organism: explicit cells, a text word anchored at (0, 0),
/// or a random tree of `randomCells` cells placed at random inside the grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum WordSpec {
    Cells(GridWord),
    Text(String),
    #[serde(rename_all = "camelCase")]
    Random {
        random_cells: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SourcePlacement {
    pub row: i32,
    pub col: i32,
    pub power: f64,
}

/// Starting sources: an explicit list or `count` random ones.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SourceSpec {
    List(Vec<SourcePlacement>),
    Random { count: usize },
}

fn default_width() -> i32 {
    20
}
fn default_ticks() -> usize {
    100
}
fn default_prob() -> f64 {
    0.2
}
fn default_fmax() -> f64 {
    10000.0
}
fn default_cost() -> f64 {
    0.01
}
fn default_power_range() -> (f64, f64) {
    (100.0, 1000.0)
}
fn default_policy() -> ReconfigPolicy {
    ReconfigPolicy::Auto
}
fn default_window() -> usize {
    10
}
fn default_true() -> bool {
    true
}
fn default_word() -> WordSpec {
    WordSpec::Random { random_cells: 20 }
}
fn default_sources() -> SourceSpec {
    SourceSpec::Random { count: 3 }
}

/// A scenario file. Every field has a default so the effective config can
/// always be printed in full.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default = "default_width")]
    pub grid_width: i32,
    #[serde(default = "default_width")]
    pub grid_height: i32,
    #[serde(default = "default_ticks")]
    pub ticks: usize,
    #[serde(default = "default_prob")]
    pub source_event_prob: f64,
    #[serde(default = "default_fmax", alias = "Fmax")]
    pub fmax: f64,
    #[serde(default = "default_word")]
    pub initial_word: WordSpec,
    #[serde(default = "default_sources")]
    pub initial_sources: SourceSpec,
    #[serde(default = "default_cost")]
    pub reconfig_cost_percent: f64,
    #[serde(default)]
    pub elastic: Option<ElasticConfig>,
    #[serde(default = "default_true")]
    pub elastic_enabled: bool,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_power_range")]
    pub source_power_range: (f64, f64),
    #[serde(default = "default_policy")]
    pub reconfig_policy: ReconfigPolicy,
    #[serde(default = "default_window")]
    pub avg_window: usize,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("all fields have defaults")
    }
}

impl ScenarioConfig {
    pub fn bounds(&self) -> Bounds {
        Bounds::new(self.grid_width, self.grid_height)
    }

    /// Ticks a moved subtree stays blocked.
    pub fn block_ticks(&self) -> u64 {
        // Guard against 0.05 * 100 landing a hair above 5.
        (self.reconfig_cost_percent * self.ticks as f64 - 1e-9)
            .ceil()
            .max(0.0) as u64
    }

    pub fn validate(&self) -> Result<(), EngineError> {
        let bad = |m: &str| Err(EngineError::InvalidConfig(m.to_string()));
        if self.grid_width < 1 || self.grid_height < 1 {
            return bad("grid dimensions must be positive");
        }
        if self.ticks < 1 {
            return bad("ticks must be at least 1");
        }
        if !(0.0..=1.0).contains(&self.source_event_prob) {
            return bad("sourceEventProb must lie in [0, 1]");
        }
        let (lo, hi) = self.source_power_range;
        if !(lo.is_finite() && hi.is_finite() && 0.0 <= lo && lo <= hi) {
            return bad("sourcePowerRange must satisfy 0 <= lo <= hi");
        }
        if !(self.fmax.is_finite() && self.fmax >= 0.0) {
            return bad("Fmax must be finite and non-negative");
        }
        if !(self.reconfig_cost_percent.is_finite() && self.reconfig_cost_percent >= 0.0) {
            return bad("reconfigCostPercent must be non-negative");
        }
        if self.avg_window < 1 {
            return bad("avgWindow must be at least 1");
        }
        if let Some(e) = &self.elastic {
            if e.benefit_per_unit_flow < 0.0 || e.node_cost.values().any(|c| *c < 0.0) {
                return bad("elastic benefit and costs must be non-negative");
            }
        }
        Ok(())
    }
}

/// Operator input, applied at the start of the next tick.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Command {
    AddSource { row: i32, col: i32, power: f64 },
    RemoveSource { id: u32 },
    ModifySource { id: u32, power: f64 },
    TriggerReconfig,
    SetPolicy { policy: ReconfigPolicy },
    SetElastic { enabled: bool },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CommandError {
    #[error("position ({row},{col}) is outside the grid")]
    OutOfBounds { row: i32, col: i32 },
    #[error("no source with id {0}")]
    NotFound(u32),
    #[error("{0}")]
    BadRequest(String),
}

/// What reconfiguration did during a tick.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ReconfigEvent {
    #[serde(rename_all = "camelCase")]
    Applied {
        #[serde(rename = "move")]
        mv: Move,
        predicted_flow: f64,
        blocked_root: Coord,
        blocked_until: u64,
        triggered: bool,
    },
    Skipped {
        triggered: bool,
    },
    Elastic {
        change: ElasticChange,
    },
}

/// One tick's metrics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TickRecord {
    pub tick: u64,
    pub root_flow: f64,
    pub avg_flow: f64,
    pub benefit: f64,
    /// Human-readable summary of what changed, empty on quiet ticks.
    pub event: String,
    pub reconfig: Vec<ReconfigEvent>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Summary {
    pub mean_root_flow: f64,
    pub mean_benefit: f64,
    pub final_benefit: f64,
    pub reconfig_count: usize,
    pub elastic_changes: usize,
    pub final_cells: usize,
    pub final_rented: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub ticks: Vec<TickRecord>,
    pub summary: Summary,
}

impl MetricsReport {
    /// Writes `tick,rootFlow,avgFlow,benefit,event`.
    pub fn write_csv<W: io::Write>(&self, out: W) -> Result<(), csv::Error> {
        write_csv(&self.ticks, out)
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv is utf-8")
    }
}

pub fn write_csv<W: io::Write>(records: &[TickRecord], out: W) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["tick", "rootFlow", "avgFlow", "benefit", "event"])?;
    for r in records {
        w.write_record([
            r.tick.to_string(),
            r.root_flow.to_string(),
            r.avg_flow.to_string(),
            r.benefit.to_string(),
            r.event.clone(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Everything the engine owns between ticks.
#[derive(Debug, Clone)]
pub struct SimState {
    /// Ticks completed so far.
    pub tick: u64,
    pub word: GridWord,
    pub topology: TreeTopology,
    pub sources: SourceSet,
    pub rented: RentedSet,
    /// Cell → first tick at which it is no longer blocked.
    pub blocked_until: BTreeMap<Coord, u64>,
    pub policy: ReconfigPolicy,
    pub elastic_on: bool,
    /// Sources changed since the last reconfiguration check.
    pub dirty: bool,
    pub flow: FlowReport,
    pub history: Vec<TickRecord>,
}

impl SimState {
    pub fn blocked_at(&self, tick: u64) -> BTreeSet<Coord> {
        self.blocked_until
            .iter()
            .filter(|(_, until)| **until > tick)
            .map(|(c, _)| *c)
            .collect()
    }

    pub fn last(&self) -> Option<&TickRecord> {
        self.history.last()
    }
}

/// A running scenario.
#[derive(Debug, Clone)]
pub struct Simulation {
    cfg: ScenarioConfig,
    bounds: Bounds,
    state: SimState,
    events: ChaCha8Rng,
    queue: VecDeque<Command>,
}

fn place_random_tree(
    cells: usize,
    bounds: &Bounds,
    rng: &mut ChaCha8Rng,
) -> Result<GridWord, EngineError> {
    for _ in 0..1000 {
        let w = random_word(Pattern::Tr, cells, rng)?;
        let (_, _, maxr, maxc) = w.bounding_box();
        if maxr < bounds.height && maxc < bounds.width {
            let dr = rng.gen_range(0..bounds.height - maxr);
            let dc = rng.gen_range(0..bounds.width - maxc);
            return Ok(w.translate(dr, dc));
        }
    }
    Err(EngineError::InvalidConfig(format!(
        "could not fit a random {cells}-cell tree in the grid"
    )))
}

fn random_position<R: Rng>(bounds: &Bounds, rng: &mut R) -> Coord {
    Coord::new(
        rng.gen_range(0..bounds.height),
        rng.gen_range(0..bounds.width),
    )
}

fn random_power<R: Rng>(range: (f64, f64), rng: &mut R) -> f64 {
    if range.0 == range.1 {
        range.0
    } else {
        rng.gen_range(range.0..range.1)
    }
}

fn fmt_coord(c: Coord) -> String {
    format!("({},{})", c.row, c.col)
}

impl Simulation {
    pub fn new(cfg: ScenarioConfig) -> Result<Self, EngineError> {
        cfg.validate()?;
        let bounds = cfg.bounds();
        let mut init = substream(cfg.seed, stream::INITIAL_STATE);
        let word = match &cfg.initial_word {
            WordSpec::Cells(w) => w.clone(),
            WordSpec::Text(t) => t.parse()?,
            WordSpec::Random { random_cells } => {
                place_random_tree(*random_cells, &bounds, &mut init)?
            }
        };
        if let Some((c, _)) = word.iter().find(|(c, _)| !bounds.contains(*c)) {
            return Err(EngineError::InvalidConfig(format!(
                "initial cell {c} is outside the grid"
            )));
        }
        let topology = derive_topology(&word)?;
        let mut sources = SourceSet::new();
        match &cfg.initial_sources {
            SourceSpec::List(list) => {
                for s in list {
                    let pos = Coord::new(s.row, s.col);
                    if !bounds.contains(pos) {
                        return Err(EngineError::InvalidConfig(format!(
                            "source {pos} is outside the grid"
                        )));
                    }
                    sources.add(pos, s.power)?;
                }
            }
            SourceSpec::Random { count } => {
                for _ in 0..*count {
                    let pos = random_position(&bounds, &mut init);
                    sources.add(pos, random_power(cfg.source_power_range, &mut init))?;
                }
            }
        }
        let flow = evaluate_flow(&topology, &sources, cfg.fmax, &BTreeSet::new());
        let state = SimState {
            tick: 0,
            word,
            topology,
            sources,
            rented: RentedSet::new(),
            blocked_until: BTreeMap::new(),
            policy: cfg.reconfig_policy,
            elastic_on: cfg.elastic.is_some() && cfg.elastic_enabled,
            dirty: true,
            flow,
            history: Vec::new(),
        };
        Ok(Simulation {
            events: substream(cfg.seed, stream::SOURCE_EVENTS),
            cfg,
            bounds,
            state,
            queue: VecDeque::new(),
        })
    }

    pub fn config(&self) -> &ScenarioConfig {
        &self.cfg
    }

    pub fn state(&self) -> &SimState {
        &self.state
    }

    pub fn is_finished(&self) -> bool {
        self.state.tick >= self.cfg.ticks as u64
    }

    /// Checks a command against the current state and queues it. Returns the
    /// tick at which it takes effect.
    pub fn submit(&mut self, cmd: Command) -> Result<u64, CommandError> {
        match &cmd {
            Command::AddSource { row, col, power } => {
                if !self.bounds.contains(Coord::new(*row, *col)) {
                    return Err(CommandError::OutOfBounds {
                        row: *row,
                        col: *col,
                    });
                }
                if !(power.is_finite() && *power >= 0.0) {
                    return Err(CommandError::BadRequest(format!("bad power {power}")));
                }
            }
            Command::RemoveSource { id } => self.check_source(*id)?,
            Command::ModifySource { id, power } => {
                self.check_source(*id)?;
                if !(power.is_finite() && *power >= 0.0) {
                    return Err(CommandError::BadRequest(format!("bad power {power}")));
                }
            }
            Command::SetElastic { enabled: true } if self.cfg.elastic.is_none() => {
                return Err(CommandError::BadRequest(
                    "scenario has no elastic configuration".into(),
                ));
            }
            _ => {}
        }
        self.queue.push_back(cmd);
        Ok(self.state.tick + 1)
    }

    fn check_source(&self, id: u32) -> Result<(), CommandError> {
        let removed = self
            .queue
            .iter()
            .any(|c| matches!(c, Command::RemoveSource { id: r } if *r == id));
        if self.state.sources.get(id).is_none() || removed {
            return Err(CommandError::NotFound(id));
        }
        Ok(())
    }

    fn apply_command(&mut self, cmd: Command, notes: &mut Vec<String>) -> bool {
        let s = &mut self.state;
        let mut trigger = false;
        match cmd {
            Command::AddSource { row, col, power } => {
                if let Ok(id) = s.sources.add(Coord::new(row, col), power) {
                    notes.push(format!("cmd add {id} ({row},{col}) {power}"));
                    s.dirty = true;
                }
            }
            Command::RemoveSource { id } => {
                if s.sources.remove(id).is_ok() {
                    notes.push(format!("cmd remove {id}"));
                    s.dirty = true;
                }
            }
            Command::ModifySource { id, power } => {
                if s.sources.modify(id, power).is_ok() {
                    notes.push(format!("cmd modify {id} {power}"));
                    s.dirty = true;
                }
            }
            Command::TriggerReconfig => trigger = true,
            Command::SetPolicy { policy } => {
                s.policy = policy;
                notes.push(format!("policy {policy:?}").to_lowercase());
            }
            Command::SetElastic { enabled } => {
                s.elastic_on = enabled && self.cfg.elastic.is_some();
                notes.push(format!(
                    "elastic {}",
                    if s.elastic_on { "on" } else { "off" }
                ));
            }
        }
        trigger
    }

    fn random_source_event(&mut self, notes: &mut Vec<String>) {
        if !self.events.gen_bool(self.cfg.source_event_prob) {
            return;
        }
        let s = &mut self.state;
        let ids: Vec<u32> = s.sources.iter().map(|x| x.id).collect();
        match self.events.gen_range(0..3) {
            0 => {
                let pos = random_position(&self.bounds, &mut self.events);
                let power = random_power(self.cfg.source_power_range, &mut self.events);
                let id = s
                    .sources
                    .add(pos, power)
                    .expect("power drawn from a valid range");
                notes.push(format!("add {id} {} {power:.1}", fmt_coord(pos)));
            }
            1 if !ids.is_empty() => {
                let id = ids[self.events.gen_range(0..ids.len())];
                s.sources.remove(id).expect("id taken from the set");
                notes.push(format!("remove {id}"));
            }
            2 if !ids.is_empty() => {
                let id = ids[self.events.gen_range(0..ids.len())];
                let power = random_power(self.cfg.source_power_range, &mut self.events);
                s.sources.modify(id, power).expect("valid id and power");
                notes.push(format!("modify {id} {power:.1}"));
            }
            _ => return,
        }
        s.dirty = true;
    }

    fn reconfigure(
        &mut self,
        tick: u64,
        triggered: bool,
        events: &mut Vec<ReconfigEvent>,
        notes: &mut Vec<String>,
    ) {
        let s = &mut self.state;
        let best = best_move(&s.word, &s.sources, self.cfg.fmax, &self.bounds)
            .expect("state word is a tree");
        match best {
            Some((m, predicted)) => {
                let d = move_displacement(&s.word, &m).expect("enumerated move");
                s.word = apply_move(&s.word, &m, &self.bounds).expect("enumerated move");
                s.blocked_until = s
                    .blocked_until
                    .iter()
                    .map(|(c, t)| (d.apply(*c), *t))
                    .collect();
                s.rented.remap(|c| d.apply(c));
                let root = d.apply(m.subtree_root);
                let until = tick + self.cfg.block_ticks();
                if until > tick {
                    let e = s.blocked_until.entry(root).or_insert(until);
                    *e = (*e).max(until);
                }
                notes.push(format!(
                    "move {}->{}",
                    fmt_coord(m.subtree_root),
                    fmt_coord(root)
                ));
                events.push(ReconfigEvent::Applied {
                    mv: m,
                    predicted_flow: predicted,
                    blocked_root: root,
                    blocked_until: until,
                    triggered,
                });
            }
            None => {
                s.dirty = false;
                if triggered {
                    notes.push("reconfig skipped".into());
                }
                events.push(ReconfigEvent::Skipped { triggered });
            }
        }
    }

    fn elastic(&mut self, events: &mut Vec<ReconfigEvent>, notes: &mut Vec<String>) {
        let Some(ecfg) = &self.cfg.elastic else {
            return;
        };
        let s = &mut self.state;
        let out = elastic_step(
            &s.word,
            &s.rented,
            &s.sources,
            self.cfg.fmax,
            ecfg,
            &self.bounds,
        )
        .expect("state word is a tree");
        let Some(change) = out.change else { return };
        if let Some(d) = &out.shifted {
            s.blocked_until = s
                .blocked_until
                .iter()
                .map(|(c, t)| (d.apply(*c), *t))
                .collect();
        }
        if let ElasticChange::Release { at } = change {
            s.blocked_until.remove(&at);
        }
        s.word = out.word;
        s.rented = out.rented;
        notes.push(match change {
            ElasticChange::Rent { at, tag } => format!("rent {tag} {}", fmt_coord(at)),
            ElasticChange::InsertShift { at, tag, side } => {
                format!("insert {tag} {} shift {side:?}", fmt_coord(at)).to_lowercase()
            }
            ElasticChange::Release { at } => format!("release {}", fmt_coord(at)),
        });
        events.push(ReconfigEvent::Elastic { change });
    }

    /// Runs one tick and returns its record.
    pub fn tick(&mut self) -> &TickRecord {
        let tick = self.state.tick + 1;
        let mut notes = Vec::new();
        let mut events = Vec::new();

        let mut triggered = false;
        while let Some(cmd) = self.queue.pop_front() {
            triggered |= self.apply_command(cmd, &mut notes);
        }
        self.random_source_event(&mut notes);
        self.state.blocked_until.retain(|_, until| *until > tick);

        if triggered {
            self.reconfigure(tick, true, &mut events, &mut notes);
        } else if self.state.policy == ReconfigPolicy::Auto && self.state.dirty {
            self.reconfigure(tick, false, &mut events, &mut notes);
        }
        if self.state.elastic_on {
            self.elastic(&mut events, &mut notes);
        }

        let s = &mut self.state;
        s.topology = derive_topology(&s.word).expect("state word is a tree");
        s.flow = evaluate_flow(&s.topology, &s.sources, self.cfg.fmax, &s.blocked_at(tick));
        let root_flow = s.flow.root_flow;
        let window = self.cfg.avg_window.min(s.history.len() + 1);
        let past: f64 = s
            .history
            .iter()
            .rev()
            .take(window - 1)
            .map(|r| r.root_flow)
            .sum();
        let avg_flow = (past + root_flow) / window as f64;
        let benefit = match &self.cfg.elastic {
            Some(e) => elastic_benefit(avg_flow, &s.rented, e),
            None => avg_flow,
        };
        s.tick = tick;
        s.history.push(TickRecord {
            tick,
            root_flow,
            avg_flow,
            benefit,
            event: notes.join("; "),
            reconfig: events,
        });
        s.history.last().unwrap()
    }

    /// Runs the remaining ticks.
    pub fn run_to_end(&mut self) {
        while !self.is_finished() {
            self.tick();
        }
    }

    pub fn report(&self) -> MetricsReport {
        let h = &self.state.history;
        let n = h.len().max(1) as f64;
        let count = |f: fn(&ReconfigEvent) -> bool| {
            h.iter().flat_map(|r| &r.reconfig).filter(|e| f(e)).count()
        };
        MetricsReport {
            ticks: h.clone(),
            summary: Summary {
                mean_root_flow: h.iter().map(|r| r.root_flow).sum::<f64>() / n,
                mean_benefit: h.iter().map(|r| r.benefit).sum::<f64>() / n,
                final_benefit: h.last().map_or(0.0, |r| r.benefit),
                reconfig_count: count(|e| matches!(e, ReconfigEvent::Applied { .. })),
                elastic_changes: count(|e| matches!(e, ReconfigEvent::Elastic { .. })),
                final_cells: self.state.word.len(),
                final_rented: self.state.rented.len(),
            },
        }
    }
}

/// Runs a scenario from its initial state for `cfg.ticks` ticks.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<MetricsReport, EngineError> {
    let mut sim = Simulation::new(cfg.clone())?;
    sim.run_to_end();
    Ok(sim.report())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lone_cell_cfg() -> ScenarioConfig {
        ScenarioConfig {
            grid_width: 5,
            grid_height: 5,
            ticks: 1,
            source_event_prob: 0.0,
            initial_word: WordSpec::Text("6".into()),
            initial_sources: SourceSpec::List(vec![SourcePlacement {
                row: 0,
                col: 0,
                power: 100.0,
            }]),
            ..ScenarioConfig::default()
        }
    }

    #[test]
    fn degenerate_run() {
        let r = run_scenario(&lone_cell_cfg()).unwrap();
        assert_eq!(r.ticks.len(), 1);
        assert_eq!(r.summary.mean_root_flow, 100.0);
    }

    #[test]
    fn defaults_materialize() {
        let c = ScenarioConfig::default();
        assert_eq!(c.ticks, 100);
        assert_eq!(c.source_event_prob, 0.2);
        let json = serde_json::to_string(&c).unwrap();
        assert_eq!(serde_json::from_str::<ScenarioConfig>(&json).unwrap(), c);
    }

    #[test]
    fn block_ticks_rounding() {
        let mut c = ScenarioConfig::default();
        for (p, k) in [(0.0, 0), (0.01, 1), (0.05, 5), (0.1, 10), (0.101, 11)] {
            c.reconfig_cost_percent = p;
            assert_eq!(c.block_ticks(), k, "{p}");
        }
    }

    #[test]
    fn rejects_bad_configs() {
        let c = ScenarioConfig {
            source_event_prob: 1.5,
            ..ScenarioConfig::default()
        };
        assert!(Simulation::new(c).is_err());
        let mut c = lone_cell_cfg();
        c.initial_word = WordSpec::Text("22".into());
        assert!(matches!(Simulation::new(c), Err(EngineError::Organism(_))));
    }

    #[test]
    fn commands_are_checked() {
        let mut sim = Simulation::new(lone_cell_cfg()).unwrap();
        assert_eq!(
            sim.submit(Command::AddSource {
                row: 9,
                col: 0,
                power: 1.0
            }),
            Err(CommandError::OutOfBounds { row: 9, col: 0 })
        );
        assert_eq!(
            sim.submit(Command::RemoveSource { id: 7 }),
            Err(CommandError::NotFound(7))
        );
        assert_eq!(sim.submit(Command::RemoveSource { id: 0 }), Ok(1));
        assert_eq!(
            sim.submit(Command::ModifySource { id: 0, power: 3.0 }),
            Err(CommandError::NotFound(0))
        );
        sim.tick();
        assert!(sim.state().sources.is_empty());
    }
}
