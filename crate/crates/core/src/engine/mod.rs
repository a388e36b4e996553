//! The morph runtime. One `Engine` owns the scene, every morph instance and
//! the keyframe store, and advances them in fixed ticks.

mod events;

pub use events::{EngineEvent, EventKind};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::Value;
use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use crate::keyframes::{create_final, create_initial, resolve_placeholders, Keyframe, KeyframeStore};
use crate::matcher::{eligible_entry_indices, match_state};
use crate::morphspec::{static_write_set, CompletedMode, Direction, InterruptMode, MorphSpec, Timing, TransitionSpec};
use crate::scene::{Command, Scene, SceneChange, SceneSnapshot, TraceStep, DEFAULT_TOUCH_TOLERANCE};
use crate::signals::{lookup_var, sample_source, SignalSnapshot, SignalState, SignalValue};
use crate::tween::{apply_tween, TweenState, DEFAULT_SNAP};
use crate::visdoc::{compute_layout, tree_get, tree_write, PropPath, VisSpec};

/// Completion threshold for accumulated floating-point progress.
const T_EPSILON: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EngineConfig {
    pub dt: f64,
    pub touch_tolerance: f64,
    pub snap: f64,
    pub seed: u64,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            dt: 1.0 / 60.0,
            touch_tolerance: DEFAULT_TOUCH_TOLERANCE,
            snap: DEFAULT_SNAP,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum EngineError {
    #[error("morph `{0}` is loaded twice")]
    DuplicateMorph(String),
    #[error("invalid engine config: {0}")]
    Config(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Idle,
    Transitioning,
}

#[derive(Clone, Debug)]
struct Active {
    transition: usize,
    dir: Direction,
    kf_i: Keyframe,
    kf_f: Keyframe,
    t: f64,
    elapsed: f64,
    write_set: BTreeSet<String>,
    interrupt: bool,
}

#[derive(Clone, Debug)]
struct Instance {
    morph: usize,
    node: usize,
    signal_state: SignalState,
    signals: SignalSnapshot,
    active: Option<Active>,
    blocked: BTreeSet<(usize, Direction)>,
    faulted_triggers: BTreeSet<(usize, Direction)>,
}

type InstanceKey = (String, String);

/// Read-only view of one morph instance.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MachineView {
    pub morph: String,
    pub vis: String,
    pub node: String,
    pub phase: Phase,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub transition: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub direction: Option<Direction>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
}

/// Resolved endpoints of a started leg.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KeyframeDump {
    pub tick: u64,
    pub vis: String,
    pub morph: String,
    pub transition: String,
    pub direction: Direction,
    pub initial: Value,
    #[serde(rename = "final")]
    pub final_: Value,
}

struct Candidate {
    key: InstanceKey,
    transition: usize,
    dir: Direction,
    priority: i64,
    progress: Option<f64>,
    draw: u64,
}

enum Gate {
    Open(Option<f64>),
    Closed,
    Fault(String),
}

/// Leg progress for signal timing: reverse legs run on `1 - signal`.
fn leg_progress(signal: f64, dir: Direction) -> f64 {
    let s = signal.clamp(0.0, 1.0);
    match dir {
        Direction::Forward => s,
        Direction::Reverse => 1.0 - s,
    }
}

fn trigger_value(t: &TransitionSpec, signals: &SignalSnapshot) -> Option<Result<bool, String>> {
    let tr = t.trigger.as_ref()?;
    Some(match tr.expr.eval(signals) {
        Ok(SignalValue::Bool(b)) => Ok(b),
        Ok(v) => Err(format!("trigger `{}` gave a {}, expected a boolean", tr.text, v.type_name())),
        Err(e) => Err(format!("trigger `{}`: {e}", tr.text)),
    })
}

fn timing_progress(t: &TransitionSpec, dir: Direction, signals: &SignalSnapshot) -> Result<Option<f64>, String> {
    match &t.control.timing {
        Timing::Duration(_) => Ok(None),
        Timing::Signal(name) => match lookup_var(signals, name) {
            Ok(SignalValue::Number(p)) => Ok(Some(leg_progress(p, dir))),
            Ok(v) => Err(format!("timing signal `{name}` is a {}", v.type_name())),
            Err(e) => Err(e.to_string()),
        },
    }
}

/// Whether an idle leg should start this tick.
fn gate(t: &TransitionSpec, dir: Direction, signals: &SignalSnapshot) -> Gate {
    let want = match (trigger_value(t, signals), dir) {
        (Some(Err(m)), _) => return Gate::Fault(m),
        (Some(Ok(b)), Direction::Forward) => b,
        (Some(Ok(b)), Direction::Reverse) => !b,
        (None, Direction::Forward) => true,
        // Without a trigger only a signal-timed reverse leg can run.
        (None, Direction::Reverse) => matches!(t.control.timing, Timing::Signal(_)),
    };
    let progress = match timing_progress(t, dir, signals) {
        Ok(p) => p,
        Err(m) => return Gate::Fault(m),
    };
    let in_range = progress.is_none_or(|p| p > 0.0 && p <= 1.0);
    if want && in_range {
        Gate::Open(progress)
    } else {
        Gate::Closed
    }
}

pub struct Engine {
    config: EngineConfig,
    scene: Scene,
    morphs: Vec<Arc<MorphSpec>>,
    instances: BTreeMap<InstanceKey, Instance>,
    store: KeyframeStore,
    rng: ChaCha8Rng,
    tick: u64,
    needs_match: BTreeSet<String>,
    evaluations: BTreeMap<(String, String, String, Direction), u64>,
    dumps: Vec<KeyframeDump>,
}

impl Engine {
    pub fn new(config: EngineConfig, scene: Scene, morphs: Vec<MorphSpec>) -> Result<Engine, EngineError> {
        if !(config.dt > 0.0 && config.dt.is_finite()) {
            return Err(EngineError::Config(format!("dt must be positive, got {}", config.dt)));
        }
        if !(0.0..=1.0).contains(&config.snap) {
            return Err(EngineError::Config(format!("snap must be within [0, 1], got {}", config.snap)));
        }
        let mut e = Engine {
            config,
            scene: scene.with_tolerance(config.touch_tolerance),
            morphs: Vec::new(),
            instances: BTreeMap::new(),
            store: KeyframeStore::default(),
            rng: ChaCha8Rng::seed_from_u64(config.seed),
            tick: 0,
            needs_match: BTreeSet::new(),
            evaluations: BTreeMap::new(),
            dumps: Vec::new(),
        };
        e.load_morphs(morphs)?;
        Ok(e)
    }

    /// Replaces the morph set. Every instance exits; matching reruns at the
    /// start of the next tick.
    pub fn load_morphs(&mut self, morphs: Vec<MorphSpec>) -> Result<Vec<EngineEvent>, EngineError> {
        let mut seen = BTreeSet::new();
        for m in &morphs {
            if !seen.insert(m.name.clone()) {
                return Err(EngineError::DuplicateMorph(m.name.clone()));
            }
        }
        let mut ev = Vec::new();
        let keys: Vec<InstanceKey> = self.instances.keys().cloned().collect();
        for key in keys {
            self.exit(&key, "morphs-reloaded", &mut ev);
        }
        self.morphs = morphs.into_iter().map(Arc::new).collect();
        self.needs_match.extend(self.scene.data().vis_ids());
        Ok(ev)
    }

    /// Swaps in a new scene. Every instance exits; the tick counter keeps
    /// running.
    pub fn replace_scene(&mut self, scene: Scene) -> Vec<EngineEvent> {
        let mut ev = Vec::new();
        let keys: Vec<InstanceKey> = self.instances.keys().cloned().collect();
        for key in keys {
            self.exit(&key, "scene-reloaded", &mut ev);
        }
        self.scene = scene.with_tolerance(self.config.touch_tolerance);
        self.needs_match = self.scene.data().vis_ids().into_iter().collect();
        ev
    }

    pub fn config(&self) -> &EngineConfig {
        &self.config
    }

    /// Index of the next tick to run.
    pub fn tick(&self) -> u64 {
        self.tick
    }

    pub fn scene(&self) -> &Scene {
        &self.scene
    }

    pub fn morphs(&self) -> &[Arc<MorphSpec>] {
        &self.morphs
    }

    pub fn store(&self) -> &KeyframeStore {
        &self.store
    }

    /// How often a leg's trigger subscription has been evaluated.
    pub fn trigger_evaluations(&self, vis: &str, morph: &str, transition: &str, dir: Direction) -> u64 {
        self.evaluations
            .get(&(vis.to_string(), morph.to_string(), transition.to_string(), dir))
            .copied()
            .unwrap_or(0)
    }

    pub fn take_keyframe_dumps(&mut self) -> Vec<KeyframeDump> {
        std::mem::take(&mut self.dumps)
    }

    pub fn machines(&self) -> Vec<MachineView> {
        self.instances
            .iter()
            .map(|((vis, morph), inst)| {
                let m = &self.morphs[inst.morph];
                let active = inst.active.as_ref();
                MachineView {
                    morph: morph.clone(),
                    vis: vis.clone(),
                    node: m.states[inst.node].name.clone(),
                    phase: if active.is_some() { Phase::Transitioning } else { Phase::Idle },
                    transition: active.map(|a| m.transitions[a.transition].name.clone()),
                    direction: active.map(|a| a.dir),
                    t: active.map(|a| a.t),
                }
            })
            .collect()
    }

    /// Latest signal values of every instance, keyed `vis/morph/signal`.
    pub fn signal_values(&self) -> BTreeMap<String, SignalValue> {
        let mut out = BTreeMap::new();
        for ((vis, morph), inst) in &self.instances {
            for (name, v) in inst.signals.iter() {
                out.insert(format!("{vis}/{morph}/{name}"), v.clone());
            }
        }
        out
    }

    /// Runs ticks until `until` (exclusive), feeding trace steps whose tick
    /// matches. Steps already in the past are ignored.
    pub fn run_trace(&mut self, trace: &[TraceStep], until: u64) -> Vec<EngineEvent> {
        let mut out = Vec::new();
        let mut i = trace.partition_point(|s| s.tick < self.tick);
        while self.tick < until {
            let start = i;
            while i < trace.len() && trace[i].tick == self.tick {
                i += 1;
            }
            let cmds: Vec<Command> = trace[start..i].iter().map(|s| s.command.clone()).collect();
            out.extend(self.step(&cmds));
        }
        out
    }

    /// Advances one tick, applying `commands` first.
    pub fn step(&mut self, commands: &[Command]) -> Vec<EngineEvent> {
        let mut ev: Vec<EngineEvent> = Vec::new();
        for c in commands {
            match self.scene.apply(c) {
                Ok(Some(change)) => self.on_scene_change(change, &mut ev),
                Ok(None) => {}
                Err(e) => ev.push(self.event(command_target(c), "", EventKind::CommandRejected { message: e.to_string() })),
            }
        }
        let pending = std::mem::take(&mut self.needs_match);
        for vis in pending {
            self.enter_matching(&vis, None, &mut ev);
        }

        let snap = self.scene.snapshot();
        let candidates = self.evaluate(&snap, &mut ev);
        self.resolve_and_start(&snap, candidates, &mut ev);
        self.advance(&mut ev);
        self.publish(&mut ev);
        self.land(&mut ev);

        ev.sort_by(|a, b| (&a.vis, &a.morph).cmp(&(&b.vis, &b.morph)));
        self.tick += 1;
        ev
    }

    fn event(&self, vis: &str, morph: &str, kind: EventKind) -> EngineEvent {
        EngineEvent {
            tick: self.tick,
            vis: vis.to_string(),
            morph: morph.to_string(),
            kind,
        }
    }

    fn on_scene_change(&mut self, change: SceneChange, ev: &mut Vec<EngineEvent>) {
        match change {
            SceneChange::VisEdited(id) => self.on_vis_updated(&id, ev),
            SceneChange::VisSpawned(id) => {
                self.needs_match.insert(id);
            }
            SceneChange::VisDespawned(id) => {
                for key in self.keys_for_vis(&id) {
                    self.exit(&key, "despawned", ev);
                }
                self.needs_match.remove(&id);
            }
        }
    }

    /// An external edit: every instance on the vis exits and the vis is
    /// matched afresh.
    pub fn on_vis_updated(&mut self, vis: &str, ev: &mut Vec<EngineEvent>) {
        for key in self.keys_for_vis(vis) {
            self.exit(&key, "spec-edited", ev);
        }
        self.needs_match.insert(vis.to_string());
    }

    fn keys_for_vis(&self, vis: &str) -> Vec<InstanceKey> {
        self.instances.keys().filter(|(v, _)| v == vis).cloned().collect()
    }

    fn exit(&mut self, key: &InstanceKey, reason: &str, ev: &mut Vec<EngineEvent>) {
        let Some(inst) = self.instances.remove(key) else { return };
        let state = self.morphs[inst.morph].states[inst.node].name.clone();
        if inst.active.is_some() {
            let _ = self.scene.set_grab_disabled(&key.0, false);
        }
        self.store.purge(&key.0, &key.1);
        ev.push(self.event(&key.0, &key.1, EventKind::MachineExited { state, reason: reason.into() }));
    }

    /// Enters every morph that has no instance on `vis` yet and matches.
    fn enter_matching(&mut self, vis: &str, skip: Option<&str>, ev: &mut Vec<EngineEvent>) {
        let Some(entity) = self.scene.data().vis(vis) else { return };
        let spec = Arc::clone(&entity.spec);
        for (mi, m) in self.morphs.iter().enumerate() {
            let key = (vis.to_string(), m.name.clone());
            if self.instances.contains_key(&key) || skip == Some(m.name.as_str()) {
                continue;
            }
            let eligible = eligible_entry_indices(m, &spec);
            let Some(&node) = eligible.first() else { continue };
            self.instances.insert(
                key,
                Instance {
                    morph: mi,
                    node,
                    signal_state: m.signals.initial_state(),
                    signals: SignalSnapshot::default(),
                    active: None,
                    blocked: BTreeSet::new(),
                    faulted_triggers: BTreeSet::new(),
                },
            );
            ev.push(EngineEvent {
                tick: self.tick,
                vis: vis.to_string(),
                morph: m.name.clone(),
                kind: EventKind::MachineEntered {
                    state: m.states[node].name.clone(),
                    also_eligible: eligible[1..].iter().map(|&i| m.states[i].name.clone()).collect(),
                },
            });
        }
    }

    /// Signal propagation and trigger evaluation. Returns legs that want to
    /// start this tick.
    fn evaluate(&mut self, snap: &SceneSnapshot, ev: &mut Vec<EngineEvent>) -> Vec<Candidate> {
        let tol = self.scene.tolerance();
        let tick = self.tick;
        let mut candidates = Vec::new();
        for ((vis, morph_name), inst) in self.instances.iter_mut() {
            let m = &self.morphs[inst.morph];
            let (signals, faults) = m.signals.propagate(&mut inst.signal_state, |s| {
                sample_source(snap, s, Some(vis), tol).map_err(|e| e.to_string())
            });
            inst.signals = signals;
            let push = |ev: &mut Vec<EngineEvent>, kind| {
                ev.push(EngineEvent {
                    tick,
                    vis: vis.clone(),
                    morph: morph_name.clone(),
                    kind,
                })
            };
            for f in faults {
                push(
                    ev,
                    EventKind::SignalFault {
                        signal: Some(f.signal),
                        transition: None,
                        message: f.message,
                    },
                );
            }
            let mut count = |ti: usize, dir: Direction| {
                *self
                    .evaluations
                    .entry((vis.clone(), morph_name.clone(), m.transitions[ti].name.clone(), dir))
                    .or_insert(0) += 1;
            };
            if let Some(a) = &mut inst.active {
                let t = &m.transitions[a.transition];
                count(a.transition, a.dir);
                a.interrupt = match (trigger_value(t, &inst.signals), a.dir) {
                    (Some(Ok(b)), Direction::Forward) => !b,
                    (Some(Ok(b)), Direction::Reverse) => b,
                    _ => false,
                };
                if let Ok(Some(p)) = timing_progress(t, a.dir, &inst.signals) {
                    a.t = p;
                }
                continue;
            }
            for (ti, t) in m.transitions.iter().enumerate() {
                for dir in t.legs() {
                    if t.endpoints(dir).0 != inst.node {
                        continue;
                    }
                    count(ti, dir);
                    match gate(t, dir, &inst.signals) {
                        Gate::Open(progress) => {
                            inst.faulted_triggers.remove(&(ti, dir));
                            candidates.push(Candidate {
                                key: (vis.clone(), morph_name.clone()),
                                transition: ti,
                                dir,
                                priority: t.priority,
                                progress,
                                draw: 0,
                            });
                        }
                        Gate::Closed => {
                            inst.faulted_triggers.remove(&(ti, dir));
                        }
                        Gate::Fault(message) => {
                            if inst.faulted_triggers.insert((ti, dir)) {
                                push(
                                    ev,
                                    EventKind::SignalFault {
                                        signal: None,
                                        transition: Some(t.name.clone()),
                                        message,
                                    },
                                );
                            }
                        }
                    }
                }
            }
        }
        for c in &mut candidates {
            c.draw = self.rng.gen();
        }
        candidates
    }

    /// Builds keyframes for candidate legs, resolves conflicts per vis and
    /// starts the winners.
    fn resolve_and_start(&mut self, snap: &SceneSnapshot, mut candidates: Vec<Candidate>, ev: &mut Vec<EngineEvent>) -> usize {
        candidates.sort_by(|a, b| {
            (&a.key.0, std::cmp::Reverse(a.priority), a.draw).cmp(&(&b.key.0, std::cmp::Reverse(b.priority), b.draw))
        });
        // Write sets already claimed on each vis: (writer key, leg name, keys).
        let mut claimed: BTreeMap<String, Vec<(InstanceKey, String, BTreeSet<String>)>> = BTreeMap::new();
        for ((vis, morph), inst) in &self.instances {
            if let Some(a) = &inst.active {
                let name = self.morphs[inst.morph].transitions[a.transition].name.clone();
                claimed
                    .entry(vis.clone())
                    .or_default()
                    .push(((vis.clone(), morph.clone()), name, a.write_set.clone()));
            }
        }
        let mut blocked_now: BTreeMap<InstanceKey, BTreeSet<(usize, Direction)>> = BTreeMap::new();
        let mut started = 0;
        for c in candidates {
            let m = Arc::clone(&self.morphs[self.instances[&c.key].morph]);
            let t = &m.transitions[c.transition];
            let ws = static_write_set(&m, t, c.dir);
            let on_vis = claimed.entry(c.key.0.clone()).or_default();
            let blocker = on_vis
                .iter()
                .find(|(k, _, w)| *k == c.key || !w.is_disjoint(&ws))
                .map(|(_, name, _)| name.clone());
            if let Some(by) = blocker {
                blocked_now.entry(c.key.clone()).or_default().insert((c.transition, c.dir));
                let inst = self.instances.get_mut(&c.key).expect("candidate instance exists");
                if inst.blocked.insert((c.transition, c.dir)) {
                    ev.push(EngineEvent {
                        tick: self.tick,
                        vis: c.key.0.clone(),
                        morph: c.key.1.clone(),
                        kind: EventKind::ConflictBlocked {
                            transition: t.name.clone(),
                            direction: c.dir,
                            by,
                        },
                    });
                }
                continue;
            }
            let (si, sf) = t.endpoints(c.dir);
            let kfs = snap
                .vis(&c.key.0)
                .ok_or_else(|| "visualisation vanished".to_string())
                .and_then(|v| {
                    let kf_i = create_initial(&v.spec, &m.states[si]).map_err(|e| e.to_string())?;
                    let stored = self.store.get(&c.key.0, &c.key.1, &m.states[sf].name);
                    let pending = create_final(&kf_i, &m.states[si], &m.states[sf], stored).map_err(|e| e.to_string())?;
                    let inst = &self.instances[&c.key];
                    let kf_f = resolve_placeholders(pending, &kf_i, &inst.signals).map_err(|e| e.to_string())?;
                    Ok((kf_i, kf_f))
                });
            let (kf_i, kf_f) = match kfs {
                Ok(k) => k,
                Err(message) => {
                    // Reported once per run of consecutive failing ticks, like conflicts.
                    blocked_now.entry(c.key.clone()).or_default().insert((c.transition, c.dir));
                    let inst = self.instances.get_mut(&c.key).expect("candidate instance exists");
                    if inst.blocked.insert((c.transition, c.dir)) {
                        ev.push(EngineEvent {
                            tick: self.tick,
                            vis: c.key.0.clone(),
                            morph: c.key.1.clone(),
                            kind: EventKind::KeyframeError {
                                transition: t.name.clone(),
                                direction: c.dir,
                                message,
                            },
                        });
                    }
                    continue;
                }
            };
            on_vis.push((c.key.clone(), t.name.clone(), ws.clone()));
            self.dumps.push(KeyframeDump {
                tick: self.tick,
                vis: c.key.0.clone(),
                morph: c.key.1.clone(),
                transition: t.name.clone(),
                direction: c.dir,
                initial: kf_i.spec.to_tree(),
                final_: kf_f.spec.to_tree(),
            });
            if t.disablegrab {
                let _ = self.scene.set_grab_disabled(&c.key.0, true);
            }
            ev.push(EngineEvent {
                tick: self.tick,
                vis: c.key.0.clone(),
                morph: c.key.1.clone(),
                kind: EventKind::TransitionStarted {
                    transition: t.name.clone(),
                    direction: c.dir,
                    from: m.states[si].name.clone(),
                    to: m.states[sf].name.clone(),
                    properties: ws.iter().cloned().collect(),
                },
            });
            let inst = self.instances.get_mut(&c.key).expect("candidate instance exists");
            inst.active = Some(Active {
                transition: c.transition,
                dir: c.dir,
                kf_i,
                kf_f,
                t: c.progress.unwrap_or(0.0),
                elapsed: 0.0,
                write_set: ws,
                interrupt: false,
            });
            started += 1;
        }
        for (key, inst) in self.instances.iter_mut() {
            match blocked_now.remove(key) {
                Some(b) => inst.blocked = b,
                None => inst.blocked.clear(),
            }
        }
        started
    }

    fn advance(&mut self, ev: &mut Vec<EngineEvent>) {
        let dt = self.config.dt;
        let tick = self.tick;
        for ((vis, morph), inst) in self.instances.iter_mut() {
            let Some(a) = &mut inst.active else { continue };
            let t = &self.morphs[inst.morph].transitions[a.transition];
            if let Timing::Duration(d) = t.control.timing {
                a.elapsed += dt;
                a.t = if d <= 0.0 { 1.0 } else { (a.elapsed / d).min(1.0) };
            }
            if a.t >= 1.0 - T_EPSILON {
                a.t = 1.0;
            }
            ev.push(EngineEvent {
                tick,
                vis: vis.clone(),
                morph: morph.clone(),
                kind: EventKind::TweenProgress {
                    transition: t.name.clone(),
                    direction: a.dir,
                    t: a.t,
                },
            });
        }
    }

    /// Publishes interpolated specs for every vis with running legs.
    fn publish(&mut self, ev: &mut Vec<EngineEvent>) {
        let mut by_vis: BTreeMap<String, Vec<(crate::tween::VisState, BTreeSet<String>)>> = BTreeMap::new();
        for ((vis, _), inst) in &self.instances {
            let Some(a) = &inst.active else { continue };
            let t = &self.morphs[inst.morph].transitions[a.transition];
            let tween = TweenState::new(a.t, t.control.easing).with_snap(self.config.snap);
            let dir = a.dir;
            let state = apply_tween(&a.kf_i, &a.kf_f, &tween, &|k| t.window(k, dir));
            by_vis.entry(vis.clone()).or_default().push((state, a.write_set.clone()));
        }
        for (vis, mut states) in by_vis {
            if states.len() == 1 {
                let (s, _) = states.pop().expect("one state");
                let _ = self.scene.publish_vis(&vis, s.spec, s.layout);
                continue;
            }
            let Some(live) = self.scene.data().vis(&vis) else { continue };
            let mut tree = live.spec.to_tree();
            for (s, ws) in &states {
                let src = s.spec.to_tree();
                for key in ws {
                    let path = PropPath::parse_dotted(key).expect("write-set keys are paths");
                    tree_write(&mut tree, &path, tree_get(&src, &path).cloned());
                }
            }
            let merged = VisSpec::from_tree(&tree)
                .map_err(|e| e.to_string())
                .and_then(|spec| compute_layout(&spec).map(|l| (spec, l)).map_err(|e| e.to_string()));
            match merged {
                Ok((spec, layout)) => {
                    let _ = self.scene.publish_vis(&vis, Arc::new(spec), Arc::new(layout));
                }
                Err(message) => ev.push(self.event(&vis, "", EventKind::CommandRejected { message })),
            }
        }
    }

    /// Completion and interruption handling, then re-matching of every vis
    /// whose spec a landed leg changed.
    fn land(&mut self, ev: &mut Vec<EngineEvent>) {
        let keys: Vec<InstanceKey> = self
            .instances
            .iter()
            .filter(|(_, i)| i.active.is_some())
            .map(|(k, _)| k.clone())
            .collect();
        let mut landed: Vec<InstanceKey> = Vec::new();
        for key in keys {
            let inst = self.instances.get(&key).expect("listed above");
            let m = Arc::clone(&self.morphs[inst.morph]);
            let a = inst.active.as_ref().expect("listed above");
            let t = &m.transitions[a.transition];
            let signal_timed = matches!(t.control.timing, Timing::Signal(_));
            enum Outcome {
                Complete,
                Interrupt(&'static str, bool),
            }
            let outcome = if signal_timed && a.t <= 0.0 {
                Some(Outcome::Interrupt("rewound", false))
            } else if a.interrupt && t.control.interrupted != InterruptMode::Ignore {
                Some(Outcome::Interrupt("trigger", t.control.interrupted == InterruptMode::Final))
            } else if a.t >= 1.0 {
                Some(Outcome::Complete)
            } else {
                None
            };
            let Some(outcome) = outcome else { continue };
            let a = self.instances.get_mut(&key).and_then(|i| i.active.take()).expect("listed above");
            let (si, sf) = t.endpoints(a.dir);
            let to_final = match outcome {
                Outcome::Complete => t.control.completed == CompletedMode::Final,
                Outcome::Interrupt(_, f) => f,
            };
            let kf = if to_final { &a.kf_f } else { &a.kf_i };
            self.publish_landing(&key.0, kf, &a.write_set);
            if t.disablegrab {
                let _ = self.scene.set_grab_disabled(&key.0, false);
            }
            let inst = self.instances.get_mut(&key).expect("listed above");
            inst.node = if to_final { sf } else { si };
            inst.blocked.clear();
            let state = m.states[inst.node].name.clone();
            let kind = match outcome {
                Outcome::Complete => EventKind::TransitionCompleted {
                    transition: t.name.clone(),
                    direction: a.dir,
                    state,
                },
                Outcome::Interrupt(reason, _) => EventKind::TransitionInterrupted {
                    transition: t.name.clone(),
                    direction: a.dir,
                    state,
                    reason: reason.into(),
                },
            };
            if matches!(outcome, Outcome::Complete) || to_final {
                self.store.store(&key.0, &key.1, a.kf_i.clone());
                self.store.store(&key.0, &key.1, a.kf_f.clone());
            }
            ev.push(self.event(&key.0, &key.1, kind));
            landed.push(key);
        }
        for key in landed {
            self.rematch_after_transition(&key, ev);
        }
    }

    /// Writes a landing keyframe's write-set keys into the live spec, so
    /// concurrent legs on the same vis keep their own properties.
    fn publish_landing(&mut self, vis: &str, kf: &Keyframe, write_set: &BTreeSet<String>) {
        let Some(live) = self.scene.data().vis(vis) else { return };
        let mut tree = live.spec.to_tree();
        let src = kf.spec.to_tree();
        for key in write_set {
            let path = PropPath::parse_dotted(key).expect("write-set keys are paths");
            tree_write(&mut tree, &path, tree_get(&src, &path).cloned());
        }
        let (spec, layout) = if tree == src {
            (Arc::clone(&kf.spec), Arc::clone(&kf.layout))
        } else {
            match VisSpec::from_tree(&tree).ok().and_then(|s| compute_layout(&s).ok().map(|l| (s, l))) {
                Some((s, l)) => (Arc::new(s), Arc::new(l)),
                None => (Arc::clone(&kf.spec), Arc::clone(&kf.layout)),
            }
        };
        let _ = self.scene.publish_vis(vis, spec, layout);
    }

    /// Idle instances of other morphs on the vis that no longer match their
    /// node exit; morphs without an instance may enter.
    fn rematch_after_transition(&mut self, changed: &InstanceKey, ev: &mut Vec<EngineEvent>) {
        let vis = &changed.0;
        let Some(entity) = self.scene.data().vis(vis) else { return };
        let spec = Arc::clone(&entity.spec);
        let stale: Vec<InstanceKey> = self
            .instances
            .iter()
            .filter(|((v, m), i)| {
                v == vis
                    && m != &changed.1
                    && i.active.is_none()
                    && !match_state(&self.morphs[i.morph].states[i.node], &spec).matched
            })
            .map(|(k, _)| k.clone())
            .collect();
        for key in stale {
            self.exit(&key, "no-longer-matching", ev);
        }
        self.enter_matching(vis, Some(&changed.1), ev);
    }
}

fn command_target(c: &Command) -> &str {
    match c {
        Command::SetPose { id, .. }
        | Command::SetGesture { id, .. }
        | Command::SetUiValue { id, .. }
        | Command::EditVisSpec { id, .. }
        | Command::Despawn { id } => id,
        Command::Spawn { entity } => &entity.id,
    }
}
