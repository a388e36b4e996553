//! Scenario traces: JSONL files of timestamped scene commands.
//!
//! ```text
//! {"v":1,"tick":5,"cmd":"set-gesture","id":"left","pinch":true}
//! {"v":1,"tick":60,"cmd":"set-gesture","id":"left","pinch":false}
//! ```

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use super::{EntityDef, RotationInput, UiValue};

pub const PROTOCOL_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "cmd", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Command {
    SetPose {
        id: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        position: Option<[f64; 3]>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        rotation: Option<RotationInput>,
    },
    SetGesture {
        id: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        pinch: Option<bool>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        grab: Option<bool>,
    },
    SetUiValue {
        id: String,
        value: UiValue,
    },
    EditVisSpec {
        id: String,
        spec: Value,
    },
    Spawn {
        entity: EntityDef,
    },
    Despawn {
        id: String,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct TraceStep {
    pub tick: u64,
    pub command: Command,
}

impl TraceStep {
    /// One JSONL record, with the protocol version first.
    pub fn to_json(&self) -> Value {
        let mut m = Map::new();
        m.insert("v".into(), PROTOCOL_VERSION.into());
        m.insert("tick".into(), self.tick.into());
        if let Value::Object(fields) = serde_json::to_value(&self.command).expect("commands serialize") {
            m.extend(fields);
        }
        Value::Object(m)
    }

    pub fn from_json(value: Value) -> Result<TraceStep, String> {
        let Value::Object(mut m) = value else {
            return Err("trace record must be an object".into());
        };
        match m.remove("v") {
            None => {}
            Some(v) if v.as_u64() == Some(u64::from(PROTOCOL_VERSION)) => {}
            Some(v) => return Err(format!("unsupported protocol version {v}")),
        }
        let tick = m
            .remove("tick")
            .ok_or("missing `tick`")?
            .as_u64()
            .ok_or("`tick` must be a non-negative integer")?;
        let command = serde_json::from_value(Value::Object(m)).map_err(|e| e.to_string())?;
        Ok(TraceStep { tick, command })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum TraceError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: tick {tick} comes after tick {previous}")]
    Order { line: usize, tick: u64, previous: u64 },
}

/// Parses a JSONL trace. Blank lines are skipped; ticks must not decrease.
pub fn load_trace(text: &str) -> Result<Vec<TraceStep>, TraceError> {
    let mut steps: Vec<TraceStep> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let value: Value = serde_json::from_str(raw).map_err(|e| TraceError::Syntax {
            line,
            message: e.to_string(),
        })?;
        let step = TraceStep::from_json(value).map_err(|message| TraceError::Syntax { line, message })?;
        if let Some(prev) = steps.last() {
            if step.tick < prev.tick {
                return Err(TraceError::Order {
                    line,
                    tick: step.tick,
                    previous: prev.tick,
                });
            }
        }
        steps.push(step);
    }
    Ok(steps)
}
