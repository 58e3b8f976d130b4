//! One interactive simulation session. Synchronous and deterministic: the
//! same ordered sequence of inputs always yields the same events.

use std::io::{self, BufRead, Write};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use vorg_core::engine::{
    Command, CommandError, EngineError, ReconfigEvent, ScenarioConfig, Simulation, TickRecord,
};

use crate::protocol::{
    codes, AckPayload, CellView, CommandEnvelope, ErrPayload, Event, EventKind, Request,
    SourceView, TickState,
};

#[derive(Debug, Error)]
pub enum SessionError {
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error("session log: {0}")]
    Io(#[from] io::Error),
    #[error("session log line {line}: {message}")]
    Log { line: usize, message: String },
}

/// One line of the newline-delimited session log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum LogEntry {
    Init {
        config: Box<ScenarioConfig>,
    },
    /// A raw inbound frame, exactly as received.
    Command {
        text: String,
    },
    /// A tick driven by the pacing timer.
    Advance,
}

pub const DEFAULT_SPEED: f64 = 4.0;

pub struct Session {
    sim: Simulation,
    paused: bool,
    speed: f64,
    seq: u64,
    log: Option<Box<dyn Write + Send>>,
}

impl std::fmt::Debug for Session {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Session")
            .field("tick", &self.sim.state().tick)
            .field("paused", &self.paused)
            .field("speed", &self.speed)
            .field("seq", &self.seq)
            .finish()
    }
}

impl Session {
    /// A paused session on `config`.
    pub fn new(config: ScenarioConfig) -> Result<Self, SessionError> {
        Ok(Session {
            sim: Simulation::new(config)?,
            paused: true,
            speed: DEFAULT_SPEED,
            seq: 0,
            log: None,
        })
    }

    /// Like [`Session::new`], recording every input to `log`.
    pub fn with_log(
        config: ScenarioConfig,
        mut log: Box<dyn Write + Send>,
    ) -> Result<Self, SessionError> {
        let init = LogEntry::Init {
            config: Box::new(config.clone()),
        };
        writeln!(
            log,
            "{}",
            serde_json::to_string(&init).expect("log entries serialize")
        )?;
        log.flush()?;
        let mut s = Session::new(config)?;
        s.log = Some(log);
        Ok(s)
    }

    pub fn simulation(&self) -> &Simulation {
        &self.sim
    }

    pub fn tick(&self) -> u64 {
        self.sim.state().tick
    }

    pub fn is_paused(&self) -> bool {
        self.paused
    }

    /// Whether the pacing timer should advance the run.
    pub fn is_running(&self) -> bool {
        !self.paused && !self.sim.is_finished()
    }

    pub fn ticks_per_second(&self) -> f64 {
        self.speed
    }

    fn record(&mut self, entry: &LogEntry) {
        if let Some(log) = self.log.as_mut() {
            // A failing log must not stall the session; the run itself stays valid.
            let _ = writeln!(
                log,
                "{}",
                serde_json::to_string(entry).expect("log entries serialize")
            );
            let _ = log.flush();
        }
    }

    fn event(&mut self, kind: EventKind, tick: u64, payload: Value) -> Event {
        self.seq += 1;
        Event {
            kind,
            seq: self.seq,
            tick,
            payload,
        }
    }

    fn ack(&mut self, env: &CommandEnvelope, effective_tick: u64) -> Event {
        let p = AckPayload {
            command_seq: env.seq,
            command: env.kind.clone(),
            effective_tick,
        };
        self.event(
            EventKind::Ack,
            self.tick(),
            serde_json::to_value(p).unwrap(),
        )
    }

    fn err(&mut self, command_seq: u64, code: &str, message: String) -> Event {
        let p = ErrPayload {
            command_seq,
            code: code.to_string(),
            message,
        };
        self.event(
            EventKind::Err,
            self.tick(),
            serde_json::to_value(p).unwrap(),
        )
    }

    /// Handles one inbound text frame.
    pub fn handle_text(&mut self, text: &str) -> Vec<Event> {
        self.record(&LogEntry::Command {
            text: text.to_string(),
        });
        let env: CommandEnvelope = match serde_json::from_str(text) {
            Ok(e) => e,
            Err(e) => {
                let seq = serde_json::from_str::<Value>(text)
                    .ok()
                    .and_then(|v| v.get("seq").and_then(Value::as_u64))
                    .unwrap_or(0);
                return vec![self.err(seq, codes::BAD_REQUEST, e.to_string())];
            }
        };
        match Request::decode(&env) {
            Ok(req) => self.handle(&env, req),
            Err(msg) => vec![self.err(env.seq, codes::BAD_REQUEST, msg)],
        }
    }

    fn submit(&mut self, env: &CommandEnvelope, cmd: Command) -> Vec<Event> {
        match self.sim.submit(cmd) {
            Ok(t) => vec![self.ack(env, t)],
            Err(e) => {
                let code = match e {
                    CommandError::OutOfBounds { .. } => codes::OUT_OF_BOUNDS,
                    CommandError::NotFound(_) => codes::NOT_FOUND,
                    CommandError::BadRequest(_) => codes::BAD_REQUEST,
                };
                vec![self.err(env.seq, code, e.to_string())]
            }
        }
    }

    fn handle(&mut self, env: &CommandEnvelope, req: Request) -> Vec<Event> {
        let next = self.tick() + 1;
        match req {
            Request::Start(config) => {
                let cfg = config
                    .map(|c| *c)
                    .unwrap_or_else(|| self.sim.config().clone());
                match Simulation::new(cfg) {
                    Ok(sim) => {
                        self.sim = sim;
                        self.paused = false;
                        vec![self.ack(env, 1)]
                    }
                    Err(e) => vec![self.err(env.seq, codes::BAD_REQUEST, e.to_string())],
                }
            }
            Request::Pause => {
                self.paused = true;
                vec![self.ack(env, next)]
            }
            Request::Resume => {
                self.paused = false;
                vec![self.ack(env, next)]
            }
            Request::Step(n) => {
                let mut out = vec![self.ack(env, next)];
                for _ in 0..n {
                    if self.sim.is_finished() {
                        break;
                    }
                    out.extend(self.run_tick());
                }
                out
            }
            Request::SetSpeed(s) => {
                self.speed = s;
                vec![self.ack(env, next)]
            }
            Request::AddSource { row, col, power } => {
                self.submit(env, Command::AddSource { row, col, power })
            }
            Request::RemoveSource { id } => self.submit(env, Command::RemoveSource { id }),
            Request::ModifySource { id, power } => {
                self.submit(env, Command::ModifySource { id, power })
            }
            Request::TriggerReconfig => self.submit(env, Command::TriggerReconfig),
            Request::SetPolicy(policy) => self.submit(env, Command::SetPolicy { policy }),
            Request::SetElastic(enabled) => self.submit(env, Command::SetElastic { enabled }),
            Request::GetState => {
                let ack = self.ack(env, self.tick());
                let state = self.tick_state();
                vec![ack, state]
            }
        }
    }

    /// One timer-driven tick, if the session is running.
    pub fn advance(&mut self) -> Vec<Event> {
        if !self.is_running() {
            return Vec::new();
        }
        self.record(&LogEntry::Advance);
        self.run_tick()
    }

    fn run_tick(&mut self) -> Vec<Event> {
        let record: TickRecord = self.sim.tick().clone();
        let mut out = Vec::new();
        for e in &record.reconfig {
            let kind = match e {
                ReconfigEvent::Applied { .. } | ReconfigEvent::Elastic { .. } => {
                    EventKind::ReconfigApplied
                }
                ReconfigEvent::Skipped { triggered: true } => EventKind::ReconfigSkipped,
                ReconfigEvent::Skipped { triggered: false } => continue,
            };
            out.push(self.event(kind, record.tick, serde_json::to_value(e).unwrap()));
        }
        out.push(self.tick_state());
        out
    }

    /// The current state as a `tick_state` event.
    pub fn tick_state(&mut self) -> Event {
        let st = self.sim.state();
        let blocked = st.blocked_at(st.tick);
        let cells = st
            .word
            .iter()
            .map(|(c, tag)| CellView {
                row: c.row,
                col: c.col,
                tag: tag.to_string(),
                throughput: st.flow.per_node_throughput.get(&c).copied().unwrap_or(0.0),
                blocked: blocked.contains(&c),
                rented: st.rented.contains(c),
            })
            .collect();
        let sources = st
            .sources
            .iter()
            .map(|s| SourceView {
                id: s.id,
                row: s.pos.row,
                col: s.pos.col,
                power: s.power,
            })
            .collect();
        let last = st.last();
        let payload = TickState {
            tick: st.tick,
            cells,
            sources,
            root_flow: st.flow.root_flow,
            avg_flow: last.map_or(st.flow.root_flow, |r| r.avg_flow),
            benefit: last.map_or(0.0, |r| r.benefit),
            last_event: last.map_or(String::new(), |r| r.event.clone()),
        };
        let tick = st.tick;
        self.event(EventKind::TickState, tick, json!(payload))
    }
}

/// Re-runs a recorded session log and returns the event stream it produced.
pub fn replay<R: BufRead>(log: R) -> Result<Vec<Event>, SessionError> {
    let mut session: Option<Session> = None;
    let mut events = Vec::new();
    for (i, line) in log.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let entry: LogEntry = serde_json::from_str(&line).map_err(|e| SessionError::Log {
            line: i + 1,
            message: e.to_string(),
        })?;
        match (entry, session.as_mut()) {
            (LogEntry::Init { config }, None) => session = Some(Session::new(*config)?),
            (LogEntry::Command { text }, Some(s)) => events.extend(s.handle_text(&text)),
            (LogEntry::Advance, Some(s)) => events.extend(s.advance()),
            _ => {
                return Err(SessionError::Log {
                    line: i + 1,
                    message: "the log must start with exactly one init entry".into(),
                })
            }
        }
    }
    Ok(events)
}
