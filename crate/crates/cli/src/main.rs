//! `vorg`: validate and generate 2D words, trace contours, run scenarios and
//! experiments, and serve interactive sessions.

use std::fs;
use std::io::{self, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use thiserror::Error;

use vorg_core::contour::{contour_of, generate_rat_membranes, generate_rat_words};
use vorg_core::engine::{run_scenario, EngineError, ScenarioConfig};
use vorg_core::experiments::{
    experiment_dynamic_vs_static, experiment_elastic, experiment_reconfig_ratio, ExperimentParams,
};
use vorg_core::pattern::{
    accepts_product, accepts_tiling, generate_words, GenerateMode, Pattern, PatternError,
};
use vorg_core::GridWord;
use vorg_service::{Session, SessionError, DEFAULT_PORT, PORT_ENV};

#[derive(Parser)]
#[command(name = "vorg", version, about = "Virtual organisms on 2D patterns")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum PatternArg {
    Tr,
    Rat,
    Crat,
}

impl From<PatternArg> for Pattern {
    fn from(p: PatternArg) -> Self {
        match p {
            PatternArg::Tr => Pattern::Tr,
            PatternArg::Rat => Pattern::Rat,
            PatternArg::Crat => Pattern::Crat,
        }
    }
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum GenMode {
    /// Every member up to the size limit.
    Enumerate,
    /// One random member of exactly the given size.
    Random,
    /// Simple rings built by the composition generator (RAT only).
    Membranes,
    /// Rings with attached bars built by the composition generator (RAT only).
    Words,
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Experiment {
    Ratio,
    Table1,
    Elastic,
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Toggle {
    On,
    Off,
}

#[derive(Subcommand)]
enum Cmd {
    /// Check a word file against a pattern with both recognizers.
    Validate {
        file: PathBuf,
        #[arg(long, value_enum, default_value = "tr")]
        pattern: PatternArg,
    },
    /// Print member words of a pattern, separated by blank lines.
    Generate {
        #[arg(long, value_enum, default_value = "tr")]
        pattern: PatternArg,
        #[arg(long, default_value_t = 4)]
        max_cells: usize,
        #[arg(long, value_enum, default_value = "enumerate")]
        mode: GenMode,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Print the normal-form contour of a word file.
    Contour { file: PathBuf },
    /// Run a scenario and write its per-tick metrics as CSV.
    Simulate {
        /// Scenario JSON; defaults apply to missing fields.
        scenario: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        ticks: Option<usize>,
        #[arg(long)]
        prob: Option<f64>,
        #[arg(long)]
        fmax: Option<f64>,
        #[arg(long)]
        cost_percent: Option<f64>,
        #[arg(long, value_enum)]
        elastic: Option<Toggle>,
    },
    /// Run one of the reconfiguration experiments.
    Experiment {
        #[arg(value_enum)]
        kind: Experiment,
        #[arg(long, default_value_t = 30)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Per-trial CSV.
        #[arg(long)]
        out: Option<PathBuf>,
        /// JSON overriding experiment parameters.
        #[arg(long)]
        params: Option<PathBuf>,
        #[arg(long)]
        ticks: Option<usize>,
        #[arg(long)]
        prob: Option<f64>,
        #[arg(long)]
        fmax: Option<f64>,
    },
    /// Serve an interactive session over WebSocket plus a static UI directory.
    Serve {
        scenario: Option<PathBuf>,
        #[arg(long)]
        port: Option<u16>,
        #[arg(long, default_value = "0.0.0.0")]
        host: String,
        #[arg(long = "static", default_value = "web")]
        static_dir: PathBuf,
        /// Session log (newline-delimited JSON) for replay.
        #[arg(long)]
        log: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Replay a session log and print the event stream.
    Replay { log: PathBuf },
}

#[derive(Debug, Error)]
enum CliError {
    #[error("{path}: {source}")]
    Io { path: String, source: io::Error },
    #[error("{0}")]
    Pattern(#[from] PatternError),
    #[error("{0}")]
    Json(#[from] serde_json::Error),
    #[error("{0}")]
    Engine(#[from] EngineError),
    #[error("{0}")]
    Session(#[from] SessionError),
    #[error("{0}")]
    Csv(#[from] csv::Error),
    #[error("{0}")]
    Usage(String),
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(io_err(path))
}

fn header<T: Serialize>(config: &T) {
    eprintln!(
        "# config: {}",
        serde_json::to_string(config).expect("configs serialize")
    );
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>, CliError> {
    Ok(match path {
        Some(p) => Box::new(fs::File::create(p).map_err(io_err(p))?),
        None => Box::new(io::stdout().lock()),
    })
}

fn load_scenario(path: Option<&Path>) -> Result<ScenarioConfig, CliError> {
    match path {
        Some(p) => Ok(serde_json::from_str(&read(p)?)?),
        None => Ok(ScenarioConfig::default()),
    }
}

fn validate(file: &Path, pattern: PatternArg) -> Result<ExitCode, CliError> {
    header(&serde_json::json!({"command": "validate", "file": file, "pattern": pattern}));
    let word: GridWord = read(file)?.parse()?;
    let p = Pattern::from(pattern);
    let tiling = accepts_tiling(&word, &p.automaton());
    let product = accepts_product(&word, &p.spec());
    let verdict = |b: bool| if b { "accepted" } else { "rejected" };
    println!("tiling: {}", verdict(tiling));
    println!("product: {}", verdict(product));
    if tiling != product {
        println!("diagnostic: recognizers disagree on this word; this is a bug");
    }
    Ok(if tiling && product {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn generate(
    pattern: PatternArg,
    max_cells: usize,
    mode: GenMode,
    seed: u64,
) -> Result<ExitCode, CliError> {
    header(&serde_json::json!({
        "command": "generate", "pattern": pattern, "maxCells": max_cells, "mode": mode, "seed": seed
    }));
    let p = Pattern::from(pattern);
    let words: Vec<GridWord> = match mode {
        GenMode::Enumerate => generate_words(p, max_cells, seed, GenerateMode::Enumerate)?,
        GenMode::Random => generate_words(p, max_cells, seed, GenerateMode::Random)?,
        GenMode::Membranes | GenMode::Words if p != Pattern::Rat => {
            return Err(CliError::Usage(
                "membranes and words modes need --pattern rat".into(),
            ))
        }
        GenMode::Membranes => generate_rat_membranes(max_cells).into_iter().collect(),
        GenMode::Words => generate_rat_words(max_cells).into_iter().collect(),
    };
    let mut out = io::stdout().lock();
    for (i, w) in words.iter().enumerate() {
        if i > 0 {
            writeln!(out).map_err(io_err(Path::new("stdout")))?;
        }
        write!(out, "{}", w.to_text()).map_err(io_err(Path::new("stdout")))?;
    }
    eprintln!("{} words", words.len());
    Ok(ExitCode::SUCCESS)
}

fn contour(file: &Path) -> Result<ExitCode, CliError> {
    header(&serde_json::json!({"command": "contour", "file": file}));
    let word: GridWord = read(file)?.parse()?;
    println!("{}", contour_of(&word));
    Ok(ExitCode::SUCCESS)
}

#[allow(clippy::too_many_arguments)]
fn simulate(
    scenario: Option<&Path>,
    seed: Option<u64>,
    out: Option<&Path>,
    ticks: Option<usize>,
    prob: Option<f64>,
    fmax: Option<f64>,
    cost: Option<f64>,
    elastic: Option<Toggle>,
) -> Result<ExitCode, CliError> {
    let mut cfg = load_scenario(scenario)?;
    cfg.seed = seed.unwrap_or(cfg.seed);
    cfg.ticks = ticks.unwrap_or(cfg.ticks);
    cfg.source_event_prob = prob.unwrap_or(cfg.source_event_prob);
    cfg.fmax = fmax.unwrap_or(cfg.fmax);
    cfg.reconfig_cost_percent = cost.unwrap_or(cfg.reconfig_cost_percent);
    if let Some(t) = elastic {
        cfg.elastic_enabled = matches!(t, Toggle::On);
    }
    header(&cfg);
    let report = run_scenario(&cfg)?;
    report.write_csv(output(out)?)?;
    eprintln!("# summary: {}", serde_json::to_string(&report.summary)?);
    Ok(ExitCode::SUCCESS)
}

/// Prints one band check line to stderr.
fn band(name: &str, value: f64, ok: bool, target: &str) -> bool {
    eprintln!(
        "{} {name} = {value:.4} (target {target})",
        if ok { "PASS" } else { "WARN" }
    );
    ok
}

fn write_rows<T: Serialize>(out: Option<&Path>, rows: &[T]) -> Result<(), CliError> {
    if let Some(p) = out {
        let mut w = csv::Writer::from_writer(fs::File::create(p).map_err(io_err(p))?);
        for r in rows {
            w.serialize(r)?;
        }
        w.flush().map_err(io_err(p))?;
    }
    Ok(())
}

#[derive(Serialize)]
struct Table1Csv {
    seed: u64,
    nodes: usize,
    static_flow: f64,
    cost_percent: f64,
    dynamic_flow: f64,
    improvement: f64,
    reconfigs: usize,
}

#[allow(clippy::too_many_arguments)]
fn experiment(
    kind: Experiment,
    trials: usize,
    seed: u64,
    out: Option<&Path>,
    params: Option<&Path>,
    ticks: Option<usize>,
    prob: Option<f64>,
    fmax: Option<f64>,
) -> Result<ExitCode, CliError> {
    if trials < 1 {
        return Err(CliError::Usage("--trials must be at least 1".into()));
    }
    let mut p: ExperimentParams = match params {
        Some(path) => serde_json::from_str(&read(path)?)?,
        None => ExperimentParams::default(),
    };
    p.ticks = ticks.unwrap_or(p.ticks);
    p.source_event_prob = prob.unwrap_or(p.source_event_prob);
    p.fmax = fmax.unwrap_or(p.fmax);
    header(
        &serde_json::json!({"command": "experiment", "kind": kind, "trials": trials, "seed": seed, "params": p}),
    );
    match kind {
        Experiment::Ratio => {
            let r = experiment_reconfig_ratio(trials, seed, &p);
            write_rows(out, &r.trials)?;
            println!(
                "{}",
                serde_json::json!({"meanRatio": r.mean_ratio, "sdRatio": r.sd_ratio,
                    "meanSteps": r.mean_steps, "sdSteps": r.sd_steps, "trials": trials})
            );
            band(
                "meanRatio",
                r.mean_ratio,
                r.mean_ratio >= 0.90,
                "0.96, band >= 0.90",
            );
            band(
                "meanSteps",
                r.mean_steps,
                r.mean_steps <= 8.0,
                "3.69, band <= 8",
            );
        }
        Experiment::Table1 => {
            let r = experiment_dynamic_vs_static(trials, seed, &p)?;
            let rows: Vec<Table1Csv> = r
                .trials
                .iter()
                .flat_map(|t| {
                    p.cost_percents
                        .iter()
                        .enumerate()
                        .map(move |(i, &c)| Table1Csv {
                            seed: t.seed,
                            nodes: t.nodes,
                            static_flow: t.static_flow,
                            cost_percent: c,
                            dynamic_flow: t.dynamic_flow[i],
                            improvement: (t.dynamic_flow[i] - t.static_flow) / t.static_flow,
                            reconfigs: t.reconfigs[i],
                        })
                })
                .collect();
            write_rows(out, &rows)?;
            println!("{}", serde_json::json!({"rows": r.rows, "trials": trials}));
            let bands = [
                (0.01, 85.0, 30.0, 150.0),
                (0.05, 27.0, 8.0, 60.0),
                (0.10, 11.0, 2.0, 30.0),
            ];
            for row in &r.rows {
                let pct = row.mean_improvement * 100.0;
                match bands
                    .iter()
                    .find(|b| (b.0 - row.cost_percent).abs() < 1e-12)
                {
                    Some(&(_, target, lo, hi)) => band(
                        &format!("improvement@{}%", row.cost_percent * 100.0),
                        pct,
                        (lo..=hi).contains(&pct),
                        &format!("{target}%, band [{lo},{hi}]%"),
                    ),
                    None => band(
                        &format!("improvement@{}%", row.cost_percent * 100.0),
                        pct,
                        pct > 0.0,
                        "> 0",
                    ),
                };
            }
            let decreasing = r
                .rows
                .windows(2)
                .all(|w| w[1].mean_improvement < w[0].mean_improvement);
            let positive = r.rows.iter().all(|w| w.mean_improvement > 0.0);
            band(
                "trend",
                f64::from(u8::from(decreasing && positive)),
                decreasing && positive,
                "positive, decreasing",
            );
        }
        Experiment::Elastic => {
            let r = experiment_elastic(trials, seed, &p)?;
            write_rows(out, &r.trials)?;
            println!(
                "{}",
                serde_json::json!({"meanImprovement": r.mean_improvement, "sdImprovement": r.sd_improvement,
                    "trials": trials})
            );
            let pct = r.mean_improvement * 100.0;
            band("improvement%", pct, pct >= 20.0, "~55%, band >= 20%");
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn serve(
    scenario: Option<&Path>,
    port: Option<u16>,
    host: &str,
    static_dir: PathBuf,
    log: Option<&Path>,
    seed: Option<u64>,
) -> Result<ExitCode, CliError> {
    let mut cfg = load_scenario(scenario)?;
    cfg.seed = seed.unwrap_or(cfg.seed);
    let port = match port {
        Some(p) => p,
        None => match std::env::var(PORT_ENV) {
            Ok(v) => v
                .parse()
                .map_err(|_| CliError::Usage(format!("{PORT_ENV}={v:?} is not a port")))?,
            Err(_) => DEFAULT_PORT,
        },
    };
    let addr: SocketAddr = format!("{host}:{port}")
        .parse()
        .map_err(|_| CliError::Usage(format!("bad address {host}:{port}")))?;
    header(
        &serde_json::json!({"command": "serve", "addr": addr.to_string(), "static": static_dir,
        "log": log, "scenario": cfg}),
    );
    let session = match log {
        Some(p) => Session::with_log(cfg, Box::new(fs::File::create(p).map_err(io_err(p))?))?,
        None => Session::new(cfg)?,
    };
    let rt = tokio::runtime::Runtime::new().map_err(io_err(Path::new("runtime")))?;
    eprintln!("listening on http://{addr} (protocol at /ws)");
    rt.block_on(vorg_service::bind_and_serve(
        addr,
        session,
        Some(static_dir),
    ))
    .map_err(io_err(Path::new("server")))?;
    Ok(ExitCode::SUCCESS)
}

fn replay(log: &Path) -> Result<ExitCode, CliError> {
    header(&serde_json::json!({"command": "replay", "log": log}));
    let file = fs::File::open(log).map_err(io_err(log))?;
    let mut out = io::stdout().lock();
    for e in vorg_service::replay(io::BufReader::new(file))? {
        writeln!(out, "{}", serde_json::to_string(&e)?).map_err(io_err(Path::new("stdout")))?;
    }
    Ok(ExitCode::SUCCESS)
}

fn run(cli: Cli) -> Result<ExitCode, CliError> {
    match cli.command {
        Cmd::Validate { file, pattern } => validate(&file, pattern),
        Cmd::Generate {
            pattern,
            max_cells,
            mode,
            seed,
        } => generate(pattern, max_cells, mode, seed),
        Cmd::Contour { file } => contour(&file),
        Cmd::Simulate {
            scenario,
            seed,
            out,
            ticks,
            prob,
            fmax,
            cost_percent,
            elastic,
        } => simulate(
            scenario.as_deref(),
            seed,
            out.as_deref(),
            ticks,
            prob,
            fmax,
            cost_percent,
            elastic,
        ),
        Cmd::Experiment {
            kind,
            trials,
            seed,
            out,
            params,
            ticks,
            prob,
            fmax,
        } => experiment(
            kind,
            trials,
            seed,
            out.as_deref(),
            params.as_deref(),
            ticks,
            prob,
            fmax,
        ),
        Cmd::Serve {
            scenario,
            port,
            host,
            static_dir,
            log,
            seed,
        } => serve(
            scenario.as_deref(),
            port,
            &host,
            static_dir,
            log.as_deref(),
            seed,
        ),
        Cmd::Replay { log } => replay(&log),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
