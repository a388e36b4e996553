//! `run`: headless scenario execution.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::Context;
use serde_json::{json, Map, Value};

use morphkit_core::{load_trace, Command, Engine, EngineConfig, EngineEvent, Scene, TraceStep};

use crate::load_morphs;

pub const DEFAULT_TICKS: u64 = 600;

#[derive(Clone, Debug)]
pub struct RunInputs {
    pub scene: PathBuf,
    pub morphs: Vec<PathBuf>,
    pub trace: Option<PathBuf>,
    pub ticks: u64,
    pub config: EngineConfig,
    pub trace_signals: bool,
    pub dump_keyframes: bool,
}

impl RunInputs {
    pub fn new(scene: impl Into<PathBuf>, morphs: &[PathBuf]) -> RunInputs {
        RunInputs {
            scene: scene.into(),
            morphs: morphs.to_vec(),
            trace: None,
            ticks: DEFAULT_TICKS,
            config: EngineConfig::default(),
            trace_signals: false,
            dump_keyframes: false,
        }
    }
}

#[derive(Clone, Debug)]
pub struct RunOutput {
    pub events: Vec<EngineEvent>,
    /// The event log, one JSON object per line.
    pub log: String,
    /// Per-tick signal snapshots, when requested.
    pub signals: Option<String>,
    /// Resolved keyframes of every started leg, when requested.
    pub keyframes: Option<String>,
    pub summary: Value,
}

pub fn load_scene(path: &Path) -> anyhow::Result<Scene> {
    Scene::load(path).with_context(|| format!("cannot load scene {}", path.display()))
}

pub fn load_trace_file(path: &PathBuf) -> anyhow::Result<Vec<TraceStep>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    load_trace(&text).with_context(|| format!("bad trace {}", path.display()))
}

fn lines<T>(items: impl IntoIterator<Item = T>, f: impl Fn(T) -> String) -> String {
    let mut s = String::new();
    for item in items {
        s.push_str(&f(item));
        s.push('\n');
    }
    s
}

pub fn run(inputs: &RunInputs) -> anyhow::Result<RunOutput> {
    let scene = load_scene(&inputs.scene)?;
    let morphs = load_morphs(&inputs.morphs)?;
    let trace = match &inputs.trace {
        Some(p) => load_trace_file(p)?,
        None => Vec::new(),
    };
    let mut engine = Engine::new(inputs.config, scene, morphs)?;

    let mut events = Vec::new();
    let mut signal_lines = String::new();
    let mut dumps = Vec::new();
    let mut next = 0;
    while engine.tick() < inputs.ticks {
        let tick = engine.tick();
        let start = next;
        while next < trace.len() && trace[next].tick <= tick {
            next += 1;
        }
        let commands: Vec<Command> = trace[start..next].iter().map(|s| s.command.clone()).collect();
        events.extend(engine.step(&commands));
        if inputs.trace_signals {
            let values: Map<String, Value> = engine
                .signal_values()
                .into_iter()
                .map(|(k, v)| (k, v.to_json()))
                .collect();
            signal_lines.push_str(&json!({"tick": tick, "signals": values}).to_string());
            signal_lines.push('\n');
        }
        if inputs.dump_keyframes {
            dumps.extend(engine.take_keyframe_dumps());
        }
    }

    let mut counts: BTreeMap<&str, u64> = BTreeMap::new();
    for e in &events {
        *counts.entry(e.kind_name()).or_insert(0) += 1;
    }
    let final_specs: Map<String, Value> = engine
        .scene()
        .data()
        .entities()
        .filter_map(|e| Some((e.id.clone(), e.vis.as_ref()?.spec.to_tree())))
        .collect();
    let summary = json!({
        "ticks": inputs.ticks,
        "seed": inputs.config.seed,
        "transitions": {
            "started": counts.get("transition-started").copied().unwrap_or(0),
            "completed": counts.get("transition-completed").copied().unwrap_or(0),
            "interrupted": counts.get("transition-interrupted").copied().unwrap_or(0),
        },
        "machines": engine.machines(),
        "final_specs": final_specs,
    });
    Ok(RunOutput {
        log: lines(&events, EngineEvent::to_jsonl),
        events,
        signals: inputs.trace_signals.then_some(signal_lines),
        keyframes: inputs
            .dump_keyframes
            .then(|| lines(&dumps, |d| serde_json::to_string(d).expect("dumps serialize"))),
        summary,
    })
}
