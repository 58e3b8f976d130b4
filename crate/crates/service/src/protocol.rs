//! Wire messages. Commands arrive as `{kind, seq, payload}`; events leave as
//! `{kind, seq, tick, payload}`, one JSON document per text frame.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use vorg_core::engine::{ReconfigPolicy, ScenarioConfig};

/// Raw inbound envelope, before the payload is interpreted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommandEnvelope {
    pub kind: String,
    pub seq: u64,
    #[serde(default)]
    pub payload: Value,
}

/// A decoded command.
#[derive(Debug, Clone, PartialEq)]
pub enum Request {
    Start(Option<Box<ScenarioConfig>>),
    Pause,
    Resume,
    Step(u64),
    SetSpeed(f64),
    AddSource { row: i32, col: i32, power: f64 },
    RemoveSource { id: u32 },
    ModifySource { id: u32, power: f64 },
    TriggerReconfig,
    SetPolicy(ReconfigPolicy),
    SetElastic(bool),
    GetState,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct StartPayload {
    #[serde(default)]
    config: Option<Box<ScenarioConfig>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct StepPayload {
    #[serde(default = "one")]
    n: u64,
}

fn one() -> u64 {
    1
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields, rename_all = "camelCase")]
struct SpeedPayload {
    ticks_per_second: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct AddPayload {
    row: i32,
    col: i32,
    power: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct IdPayload {
    id: u32,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ModifyPayload {
    id: u32,
    power: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PolicyPayload {
    policy: ReconfigPolicy,
}

#[derive(Deserialize)]
#[serde(rename_all = "lowercase")]
enum OnOff {
    On,
    Off,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ElasticPayload {
    mode: OnOff,
}

fn payload<T: for<'de> Deserialize<'de>>(v: &Value) -> Result<T, String> {
    let v = if v.is_null() {
        Value::Object(Default::default())
    } else {
        v.clone()
    };
    serde_json::from_value(v).map_err(|e| e.to_string())
}

impl Request {
    pub fn decode(env: &CommandEnvelope) -> Result<Request, String> {
        let p = &env.payload;
        Ok(match env.kind.as_str() {
            "start" => Request::Start(payload::<StartPayload>(p)?.config),
            "pause" => Request::Pause,
            "resume" => Request::Resume,
            "step" => Request::Step(payload::<StepPayload>(p)?.n),
            "set_speed" => {
                let s = payload::<SpeedPayload>(p)?.ticks_per_second;
                if !(s.is_finite() && s > 0.0) {
                    return Err("ticksPerSecond must be positive".into());
                }
                Request::SetSpeed(s)
            }
            "add_source" => {
                let a = payload::<AddPayload>(p)?;
                Request::AddSource {
                    row: a.row,
                    col: a.col,
                    power: a.power,
                }
            }
            "remove_source" => Request::RemoveSource {
                id: payload::<IdPayload>(p)?.id,
            },
            "modify_source" => {
                let m = payload::<ModifyPayload>(p)?;
                Request::ModifySource {
                    id: m.id,
                    power: m.power,
                }
            }
            "trigger_reconfig" => Request::TriggerReconfig,
            "set_policy" => Request::SetPolicy(payload::<PolicyPayload>(p)?.policy),
            "set_elastic" => {
                Request::SetElastic(matches!(payload::<ElasticPayload>(p)?.mode, OnOff::On))
            }
            "get_state" => Request::GetState,
            other => return Err(format!("unknown command kind {other:?}")),
        })
    }
}

/// Outbound event kinds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    TickState,
    Ack,
    Err,
    ReconfigApplied,
    ReconfigSkipped,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub kind: EventKind,
    pub seq: u64,
    pub tick: u64,
    pub payload: Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct AckPayload {
    pub command_seq: u64,
    pub command: String,
    pub effective_tick: u64,
}

/// Error codes carried by `err` events.
pub mod codes {
    pub const BAD_REQUEST: &str = "bad-request";
    pub const OUT_OF_BOUNDS: &str = "out-of-bounds";
    pub const NOT_FOUND: &str = "not-found";
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ErrPayload {
    pub command_seq: u64,
    pub code: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellView {
    pub row: i32,
    pub col: i32,
    pub tag: String,
    pub throughput: f64,
    pub blocked: bool,
    pub rented: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceView {
    pub id: u32,
    pub row: i32,
    pub col: i32,
    pub power: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TickState {
    pub tick: u64,
    pub cells: Vec<CellView>,
    pub sources: Vec<SourceView>,
    pub root_flow: f64,
    pub avg_flow: f64,
    pub benefit: f64,
    pub last_event: String,
}
