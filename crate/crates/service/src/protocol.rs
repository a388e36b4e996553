//! Wire messages. Every message is one JSON text frame carrying `"v": 1`.
//!
//! Server to client:
//!
//! ```text
//! {"v":1,"type":"state","tick":12,"visStates":[{"id","spec","layout","pose"}],
//!  "machines":[{"morph","vis","node","phase","transition"?,"direction"?,"t"?}],
//!  "events":[EngineEvent...],"signals":{"vis/morph/signal": value}}
//! {"v":1,"type":"error","message":"..."}
//! ```
//!
//! Client to server:
//!
//! ```text
//! {"v":1,"type":"command","command":{"cmd":"set-pose","id":"map","rotation":[30,0,0]}}
//! {"v":1,"type":"load","morphs":[MorphSpec...]}        // and/or "scene": SceneFile
//! {"v":1,"type":"seek","control":{"id":"slider-widget","value":0.4}}
//! ```

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use morphkit_core::engine::MachineView;
use morphkit_core::scene::{UiValue, PROTOCOL_VERSION};
use morphkit_core::{Command, Engine, EngineEvent};

#[derive(Clone, Debug, PartialEq, Deserialize)]
pub struct SeekControl {
    pub id: String,
    pub value: UiValue,
}

#[derive(Clone, Debug, PartialEq)]
pub enum ClientMessage {
    Command(Command),
    Load { morphs: Option<Vec<Value>>, scene: Option<Value> },
    Seek(SeekControl),
}

fn field<'a>(m: &'a Map<String, Value>, key: &str) -> Result<&'a Value, String> {
    m.get(key).ok_or_else(|| format!("missing `{key}`"))
}

impl ClientMessage {
    pub fn parse(text: &str) -> Result<ClientMessage, String> {
        let v: Value = serde_json::from_str(text).map_err(|e| format!("malformed JSON: {e}"))?;
        let Value::Object(m) = v else {
            return Err("message must be an object".into());
        };
        match m.get("v") {
            Some(v) if v.as_u64() == Some(u64::from(PROTOCOL_VERSION)) => {}
            Some(v) => return Err(format!("unsupported protocol version {v}")),
            None => return Err("missing protocol version `v`".into()),
        }
        let ty = m.get("type").and_then(Value::as_str).ok_or("missing `type`")?;
        match ty {
            "command" => serde_json::from_value(field(&m, "command")?.clone())
                .map(ClientMessage::Command)
                .map_err(|e| format!("bad command: {e}")),
            "load" => {
                let morphs = match m.get("morphs") {
                    None => None,
                    Some(Value::Array(a)) => Some(a.clone()),
                    Some(_) => return Err("`morphs` must be an array".into()),
                };
                let scene = m.get("scene").cloned();
                if morphs.is_none() && scene.is_none() {
                    return Err("load needs `morphs` or `scene`".into());
                }
                Ok(ClientMessage::Load { morphs, scene })
            }
            "seek" => serde_json::from_value(field(&m, "control")?.clone())
                .map(ClientMessage::Seek)
                .map_err(|e| format!("bad control: {e}")),
            other => Err(format!("unknown message type `{other}`")),
        }
    }
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct VisStateOut<'a> {
    id: &'a str,
    spec: Value,
    layout: &'a morphkit_core::MarkLayout,
    pose: &'a morphkit_core::scene::Pose,
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct StateOut<'a> {
    v: u32,
    #[serde(rename = "type")]
    ty: &'static str,
    tick: u64,
    vis_states: Vec<VisStateOut<'a>>,
    machines: Vec<MachineView>,
    events: &'a [EngineEvent],
    signals: Map<String, Value>,
}

/// Full snapshot message for the tick that produced `events`.
pub fn state_message(engine: &Engine, tick: u64, events: &[EngineEvent]) -> String {
    let data = engine.scene().data();
    let vis_states = data
        .entities()
        .filter_map(|e| {
            let vis = e.vis.as_ref()?;
            Some(VisStateOut {
                id: &e.id,
                spec: vis.spec.to_tree(),
                layout: &vis.layout,
                pose: &e.pose,
            })
        })
        .collect();
    let signals = engine
        .signal_values()
        .into_iter()
        .map(|(k, v)| (k, v.to_json()))
        .collect();
    let msg = StateOut {
        v: PROTOCOL_VERSION,
        ty: "state",
        tick,
        vis_states,
        machines: engine.machines(),
        events,
        signals,
    };
    serde_json::to_string(&msg).expect("state serializes")
}

pub fn error_message(message: &str) -> String {
    serde_json::json!({"v": PROTOCOL_VERSION, "type": "error", "message": message}).to_string()
}
