//! A desk-scale workload: many visualisations, several morphs each, and a
//! scripted scene that keeps transitions starting, tweening and landing.

use serde_json::{json, Value};

use morphkit_core::scene::{RotationInput, UiValue};
use morphkit_core::{parse_morph, Command, Engine, EngineConfig, MorphSpec, Scene};

fn vis_spec(rows: usize) -> Value {
    let rows: Vec<Value> = (0..rows)
        .map(|i| json!([i as f64, ((i * 7) % 11) as f64, ((i * 3) % 5) as f64]))
        .collect();
    json!({
        "mark": "sphere", "width": 0.3, "height": 0.3, "depth": 0.3,
        "encoding": {
            "x": {"field": "a", "type": "quantitative"},
            "y": {"field": "b", "type": "quantitative"},
            "z": {"field": "c", "type": "quantitative"}
        },
        "data": {"columns": [{"name": "a", "kind": "number"}, {"name": "b", "kind": "number"},
                             {"name": "c", "kind": "number"}], "rows": rows}
    })
}

fn morph(v: Value) -> MorphSpec {
    parse_morph(&v.to_string()).expect("workload morphs are valid")
}

pub fn morphs() -> Vec<MorphSpec> {
    vec![
        morph(json!({
            "name": "highlight",
            "states": [{"name": "plain", "encoding": {"color": null}},
                       {"name": "lit", "restrict": true, "encoding": {"color": {"value": "red"}}}],
            "signals": [{"name": "pinch", "source": "hand", "handedness": "left", "value": "pinch"}],
            "transitions": [{"name": "lighting", "states": ["plain", "lit"], "trigger": "pinch",
                             "bidirectional": true, "control": {"timing": 0.3}}]
        })),
        morph(json!({
            "name": "grow",
            "states": [{"name": "small", "width": 0.3}, {"name": "big", "restrict": true, "width": 0.6}],
            "signals": [{"name": "toggle", "source": "ui", "value": "boolean"}],
            "transitions": [{"name": "growing", "states": ["small", "big"], "trigger": "toggle",
                             "bidirectional": true, "control": {"timing": 0.5, "easing": "ease-in-out-cubic"}}]
        })),
        morph(json!({
            "name": "tilt",
            "states": [{"name": "shallow", "depth": 0.3}, {"name": "deep", "restrict": true, "depth": 0.6}],
            "signals": [{"name": "tilt", "source": "vis", "value": "angle"},
                        {"name": "t", "expression": "normalise(tilt, 0, 90)"}],
            "transitions": [{"name": "deepening", "states": ["shallow", "deep"],
                             "bidirectional": true, "control": {"timing": "t"}}]
        })),
        morph(json!({
            "name": "proximity",
            "states": [{"name": "far", "encoding": {"size": null}},
                       {"name": "near", "restrict": true, "encoding": {"size": {"value": 0.05}}}],
            "signals": [{"name": "head", "source": "head", "value": "position"},
                        {"name": "here", "source": "vis", "value": "position"},
                        {"name": "close", "expression": "distance(head, here) < 1.5"}],
            "transitions": [{"name": "approach", "states": ["far", "near"], "trigger": "close",
                             "bidirectional": true, "control": {"timing": 0.4}}]
        })),
        morph(json!({
            "name": "poke",
            "states": [{"name": "idle", "height": 0.3}, {"name": "poked", "restrict": true, "height": 0.5}],
            "signals": [{"name": "reach", "source": "hand", "handedness": "right", "target": "mark",
                         "criteria": "nearest", "value": "distance"},
                        {"name": "touching", "expression": "reach < 0.25"}],
            "transitions": [{"name": "poking", "states": ["idle", "poked"], "trigger": "touching",
                             "bidirectional": true, "control": {"timing": 0.2}}]
        })),
    ]
}

pub fn scene(vis_count: usize) -> Scene {
    let mut entities = vec![
        json!({"id": "left", "kind": "hand-left", "position": [0.0, 1.2, 0.4]}),
        json!({"id": "right", "kind": "hand-right", "position": [0.3, 1.2, 0.4]}),
        json!({"id": "toggle", "kind": "ui-widget", "position": [0.0, 1.0, 0.5], "value": false}),
    ];
    for i in 0..vis_count {
        let (x, z) = ((i % 5) as f64 * 0.8 - 1.6, (i / 5) as f64 * -0.8);
        entities.push(json!({"id": format!("vis{i:02}"), "kind": "vis", "position": [x, 1.0, z], "spec": vis_spec(24)}));
    }
    Scene::from_json(&json!({"v": 1, "entities": entities}).to_string()).expect("workload scene is valid")
}

pub fn engine(vis_count: usize) -> Engine {
    Engine::new(EngineConfig::default(), scene(vis_count), morphs()).expect("workload engine")
}

/// Scene input for `tick`: hands pinch and sweep, the toggle flips and every
/// visualisation tilts back and forth.
pub fn commands(tick: u64, vis_count: usize) -> Vec<Command> {
    let mut out = Vec::new();
    if tick.is_multiple_of(40) {
        out.push(Command::SetGesture { id: "left".into(), pinch: Some(tick.is_multiple_of(80)), grab: None });
    }
    if tick.is_multiple_of(55) {
        out.push(Command::SetUiValue { id: "toggle".into(), value: UiValue::Bool(tick.is_multiple_of(110)) });
    }
    let phase = (tick % 240) as f64 / 240.0 * std::f64::consts::TAU;
    out.push(Command::SetPose {
        id: "right".into(),
        position: Some([1.6 * phase.sin(), 1.2, -0.8 * (1.0 - phase.cos())]),
        rotation: None,
    });
    let angle = 45.0 * (1.0 - phase.cos());
    for i in 0..vis_count {
        out.push(Command::SetPose {
            id: format!("vis{i:02}"),
            position: None,
            rotation: Some(RotationInput::Euler([angle, 0.0, 0.0])),
        });
    }
    out
}

/// Mean wall-clock step time over `ticks`, in milliseconds.
pub fn mean_tick_ms(vis_count: usize, ticks: u64) -> f64 {
    let mut e = engine(vis_count);
    let start = std::time::Instant::now();
    for t in 0..ticks {
        let c = commands(t, vis_count);
        e.step(&c);
    }
    start.elapsed().as_secs_f64() * 1e3 / ticks as f64
}
