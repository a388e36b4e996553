//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit when a
//! gating criterion fails.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

#[path = "../../core/tests/support/mod.rs"]
mod support;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use morphkit_cli::run::{run, RunInputs, RunOutput};
use morphkit_core::keyframes::{create_final, create_initial};
use morphkit_core::morphspec::MorphSpec;
use morphkit_core::scene::UiValue;
use morphkit_core::signals::{parse_expression, SignalValue, Vec3};
use morphkit_core::{match_state, parse_morph, Command, Direction, Easing, Engine, EngineConfig, EngineEvent, Scene, VisSpec};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome, bool);

macro_rules! check {
    ($cond:expr, $($msg:tt)+) => {
        if !($cond) {
            return Err(format!($($msg)+));
        }
    };
}

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

// ---------------------------------------------------------------------------
// Oracles

fn matching_oracle() -> Outcome {
    let start = Instant::now();
    let (mut agree, mut matched) = (0, 0);
    for seed in 0..1000u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let tree = support::random_vis(&mut rng);
        let state = support::random_state(&mut rng, "s", &tree);
        let got = match_state(&support::parse_states(&[&state])[0], &VisSpec::from_tree(&tree).unwrap()).matched;
        let want = support::oracle_match(&state, &tree);
        check!(got == want, "seed {seed}: engine {got}, reference {want} for {state} on {tree}");
        agree += 1;
        matched += usize::from(got);
    }
    let secs = start.elapsed().as_secs_f64();
    check!(secs < 5.0, "took {secs:.2} s");
    Ok(format!("{agree}/1000 agree ({matched} matches) in {secs:.2} s"))
}

fn merge_oracle() -> Outcome {
    let (mut agree, mut valid, mut frame_checks) = (0, 0, 0);
    for seed in 0..1000u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let vis = support::random_vis(&mut rng);
        let s_i = support::matching_state(&mut rng, "a", &vis);
        let s_f = support::random_state(&mut rng, "b", &vis);
        let states = support::parse_states(&[&s_i, &s_f]);
        let kf_i = create_initial(&Arc::new(VisSpec::from_tree(&vis).unwrap()), &states[0])
            .map_err(|e| format!("seed {seed}: {e}"))?;
        let expected = support::oracle_final(&vis, &s_i, &s_f);
        match create_final(&kf_i, &states[0], &states[1], None) {
            Ok(p) => {
                check!(p.tree == expected, "seed {seed}: got {} want {expected}", p.tree);
                let named: Vec<Vec<String>> = support::state_leaves(&s_i)
                    .into_iter()
                    .chain(support::state_leaves(&s_f))
                    .map(|(p, _)| p)
                    .collect();
                for (path, value) in support::tree_leaves(&vis) {
                    if named.iter().any(|n| support::related(n, &path)) {
                        continue;
                    }
                    let got = path.iter().try_fold(&p.tree, |node, seg| node.get(seg));
                    check!(got == Some(&value), "seed {seed}: frame axiom broken at {path:?}");
                    frame_checks += 1;
                }
                valid += 1;
            }
            Err(e) => check!(VisSpec::from_tree(&expected).is_err(), "seed {seed}: rejected a valid merge: {e}"),
        }
        agree += 1;
    }
    Ok(format!("{agree}/1000 agree ({valid} valid merges, {frame_checks} untouched paths checked)"))
}

// ---------------------------------------------------------------------------
// Gallery

fn gallery_run(name: &str, trace: &str, ticks: u64, signals: bool) -> Result<(RunOutput, Vec<Value>, Duration), String> {
    let f = fixtures();
    let mut inputs = RunInputs::new(f.join(format!("scenes/{name}.json")), &[f.join(format!("morphs/{name}.json"))]);
    inputs.trace = Some(f.join(format!("traces/{trace}.jsonl")));
    inputs.ticks = ticks;
    inputs.trace_signals = signals;
    let start = Instant::now();
    let out = run(&inputs).map_err(|e| format!("{name}: {e:#}"))?;
    let took = start.elapsed();
    let events = out.log.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    Ok((out, events, took))
}

fn trace_steps(name: &str) -> Vec<Value> {
    std::fs::read_to_string(fixtures().join(format!("traces/{name}.jsonl")))
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

fn of_kind<'a>(events: &'a [Value], kind: &'a str) -> impl Iterator<Item = &'a Value> + 'a {
    events.iter().filter(move |e| e["kind"] == kind)
}

fn normalise(x: f64, lo: f64, hi: f64) -> f64 {
    ((x - lo) / (hi - lo)).clamp(0.0, 1.0)
}

fn gallery_highlight() -> Outcome {
    let original = Scene::load(&fixtures().join("scenes/highlight.json")).unwrap();
    let original = original.data().vis("scatter").unwrap().spec.to_json_string();
    let (mid, _, t1) = gallery_run("highlight", "highlight", 65, false)?;
    let red = &mid.summary["final_specs"]["scatter"]["encoding"]["color"]["value"];
    check!(red == "red", "after the forward leg color is {red}");
    let (end, events, t2) = gallery_run("highlight", "highlight", 150, false)?;
    let legs: Vec<String> = events
        .iter()
        .filter(|e| e["kind"] == "transition-started" || e["kind"] == "transition-completed")
        .map(|e| format!("{} {}@{}", e["direction"].as_str().unwrap(), e["kind"].as_str().unwrap(), e["tick"]))
        .collect();
    check!(legs.len() == 4, "legs {legs:?}");
    let restored = VisSpec::from_tree(&end.summary["final_specs"]["scatter"]).unwrap().to_json_string();
    check!(restored == original, "spec not restored:\n{restored}\n{original}");
    check!(t1 + t2 < Duration::from_secs(1), "took {:?}", t1 + t2);
    Ok(format!("red then restored bit-exact; {}", legs.join(", ")))
}

fn gallery_tilt() -> Outcome {
    let (_, events, took) = gallery_run("tilt-map", "tilt-sweep", 200, false)?;
    let tilt: BTreeMap<u64, f64> = trace_steps("tilt-sweep")
        .iter()
        .map(|s| (s["tick"].as_u64().unwrap(), s["rotation"][0].as_f64().unwrap()))
        .collect();
    let mut worst = 0.0f64;
    let mut checked = 0;
    for e in of_kind(&events, "tween-progress") {
        let tick = e["tick"].as_u64().unwrap();
        let a = tilt[&tick];
        let t = e["t"].as_f64().unwrap();
        let signal = match e["transition"].as_str().unwrap() {
            "choropleth-prism" => normalise(a, 0.0, 45.0),
            _ => normalise(a, 45.0, 90.0),
        };
        let expected = if e["direction"] == "forward" { signal } else { 1.0 - signal };
        worst = worst.max((t - expected).abs());
        checked += 1;
    }
    check!(worst <= 1e-9, "max |t - normalise| = {worst:e}");
    let visited: Vec<&str> = of_kind(&events, "transition-completed").map(|e| e["state"].as_str().unwrap()).collect();
    check!(
        visited == ["prism", "barchart", "prism", "choropleth"],
        "states {visited:?}"
    );
    check!(took < Duration::from_secs(1), "took {took:?}");
    Ok(format!("{checked} ticks within {worst:.1e}; choropleth -> {}", visited.join(" -> ")))
}

fn gallery_teaser() -> Outcome {
    let (_, events, took) = gallery_run("partition-stack", "partition-stack", 200, true)?;
    let started: Vec<String> = of_kind(&events, "transition-started")
        .map(|e| format!("{}:{}", e["vis"].as_str().unwrap(), e["transition"].as_str().unwrap()))
        .collect();
    check!(
        started == ["bars-a:partitioning", "bars-b:stacking"],
        "started {started:?}"
    );
    check!(of_kind(&events, "transition-completed").count() == 2, "both legs should complete");
    let (out, _, _) = gallery_run("partition-stack", "partition-stack", 11, true)?;
    let last = out.signals.unwrap().lines().last().map(|l| serde_json::from_str::<Value>(l).unwrap()).unwrap();
    let angle = |vis: &str| last["signals"][format!("{vis}/partition-stack/contactAngle")].as_f64().unwrap_or(f64::NAN);
    let (a, b) = (angle("bars-a"), angle("bars-b"));
    check!((a - 85.0).abs() < 1e-6 && (b - 5.0).abs() < 1e-6, "contact angles {a} and {b}");
    check!(took < Duration::from_secs(1), "took {took:?}");
    Ok("85 deg -> partitioning, 5 deg -> stacking, one leg each".into())
}

fn gallery_slider() -> Outcome {
    let (_, events, took) = gallery_run("geo-slider", "slider", 130, false)?;
    let x: BTreeMap<u64, f64> = trace_steps("slider")
        .iter()
        .map(|s| (s["tick"].as_u64().unwrap(), s["position"][0].as_f64().unwrap()))
        .collect();
    let mut checked = 0;
    for e in of_kind(&events, "tween-progress") {
        let tick = e["tick"].as_u64().unwrap();
        let t = e["t"].as_f64().unwrap();
        let expected = if e["direction"] == "forward" { x[&tick] } else { 1.0 - x[&tick] };
        check!(t == expected, "tick {tick}: t {t} vs x {}", x[&tick]);
        checked += 1;
    }
    check!(checked >= 118, "only {checked} progress ticks");
    check!(took < Duration::from_secs(1), "took {took:?}");
    Ok(format!("t == x on all {checked} ticks"))
}

fn gallery_unstacking() -> Outcome {
    let (_, events, took) = gallery_run("unstacking", "unstacking-no-surface", 600, false)?;
    check!(of_kind(&events, "transition-started").count() == 0, "fired without surface contact");
    let (_, with_surface, took2) = gallery_run("unstacking", "unstacking", 600, false)?;
    let legs = of_kind(&with_surface, "transition-started").count();
    check!(legs == 1, "{legs} legs with surface contact");
    check!(took < Duration::from_secs(1) && took2 < Duration::from_secs(1), "took {took:?} / {took2:?}");
    Ok("silent for 600 ticks off-surface; fires once on the wall".into())
}

fn gallery() -> Outcome {
    let mut parts = Vec::new();
    for (label, f) in [
        ("highlight", gallery_highlight as fn() -> Outcome),
        ("tilt map", gallery_tilt),
        ("teaser", gallery_teaser),
        ("slider", gallery_slider),
        ("unstacking", gallery_unstacking),
    ] {
        let detail = f().map_err(|e| format!("{label}: {e}"))?;
        parts.push(format!("\n      {label}: {detail}"));
    }
    Ok(format!("5/5 scenarios{}", parts.concat()))
}

// ---------------------------------------------------------------------------
// Engine-level criteria

fn vis() -> Value {
    json!({
        "mark": "cube", "width": 0.3, "height": 0.3, "depth": 0.3,
        "encoding": {"x": {"field": "a", "type": "quantitative"}, "size": {"value": 0.05}},
        "data": {"columns": [{"name": "a", "kind": "number"}], "rows": [[1], [2], [3]]}
    })
}

fn toggle_scene() -> Scene {
    Scene::from_json(
        &json!({"v": 1, "entities": [
            {"id": "v", "kind": "vis", "position": [0, 1, 0], "spec": vis()},
            {"id": "go", "kind": "ui-widget", "position": [1, 1, 0], "value": false}
        ]})
        .to_string(),
    )
    .unwrap()
}

fn toggle_morph(name: &str, states: Value, extra: Value) -> MorphSpec {
    let mut t = json!({"name": "t", "states": ["a", "b"], "trigger": "go"});
    t.as_object_mut().unwrap().extend(extra.as_object().unwrap().clone());
    parse_morph(
        &json!({"name": name, "states": states,
                "signals": [{"name": "go", "source": "ui", "id": "go", "value": "boolean"}],
                "transitions": [t]})
        .to_string(),
    )
    .unwrap()
}

fn widen(control: Value) -> MorphSpec {
    toggle_morph(
        "m",
        json!([{"name": "a", "width": 0.3}, {"name": "b", "restrict": true, "width": 0.6}]),
        json!({"control": control}),
    )
}

fn engine_with(morphs: Vec<MorphSpec>, seed: u64) -> Engine {
    let mut e = Engine::new(EngineConfig { seed, ..Default::default() }, toggle_scene(), morphs).unwrap();
    e.step(&[]);
    e
}

fn go(on: bool) -> Command {
    Command::SetUiValue { id: "go".into(), value: UiValue::Bool(on) }
}

fn live(e: &Engine) -> Value {
    e.scene().data().vis("v").unwrap().spec.to_tree()
}

fn node(e: &Engine) -> String {
    e.machines()[0].node.clone()
}

fn has(ev: &[EngineEvent], kind: &str) -> bool {
    ev.iter().any(|e| e.kind_name() == kind)
}

fn settle(e: &mut Engine, mut ev: Vec<EngineEvent>, limit: usize) -> Vec<EngineEvent> {
    for _ in 0..limit {
        if has(&ev, "transition-completed") || has(&ev, "transition-interrupted") {
            break;
        }
        ev.extend(e.step(&[]));
    }
    ev
}

fn store_round_trip() -> Outcome {
    let m = || {
        toggle_morph(
            "m",
            json!([{"name": "a", "encoding": {"size": "*"}}, {"name": "b", "restrict": true, "encoding": {"size": null}}]),
            json!({"bidirectional": true, "control": {"timing": 0.1}}),
        )
    };
    let mut e = engine_with(vec![m()], 0);
    let original = live(&e);
    let ev = e.step(&[go(true)]);
    settle(&mut e, ev, 30);
    check!(live(&e)["encoding"].get("size").is_none(), "A->B kept size");
    let ev = e.step(&[go(false)]);
    settle(&mut e, ev, 30);
    check!(live(&e) == original, "B->A did not restore: {}", live(&e));
    check!(e.store().len() == 2, "store holds {} keyframes", e.store().len());

    let mut edited = vis();
    edited["encoding"]["size"] = json!({"value": 0.08});
    let ev = e.step(&[Command::EditVisSpec { id: "v".into(), spec: edited.clone() }]);
    check!(e.store().is_empty(), "edit did not purge the store");
    check!(has(&ev, "machine-exited") && has(&ev, "machine-entered"), "no re-entry after edit");
    let ev = e.step(&[go(true)]);
    settle(&mut e, ev, 30);
    let ev = e.step(&[go(false)]);
    settle(&mut e, ev, 30);
    check!(live(&e)["encoding"]["size"]["value"] == json!(0.08), "re-entry restored a stale value");
    Ok("removed, restored from store, purged on edit, clean re-entry".into())
}

fn control_matrix() -> Outcome {
    let mut cells = 0;
    for interrupted in ["initial", "final", "ignore"] {
        for completed in ["initial", "final"] {
            let cell = format!("{interrupted}/{completed}");
            let control = json!({"timing": 0.5, "interrupted": interrupted, "completed": completed});
            let (width, at) = if completed == "final" { (0.6, "b") } else { (0.3, "a") };

            let mut e = engine_with(vec![widen(control.clone())], 0);
            let ev = e.step(&[go(true)]);
            let ev = settle(&mut e, ev, 40);
            check!(has(&ev, "transition-completed"), "{cell}: never completed");
            check!(live(&e)["width"] == json!(width) && node(&e) == at, "{cell}: landed {} at {}", live(&e)["width"], node(&e));

            let mut e = engine_with(vec![widen(control)], 0);
            let mut ev = e.step(&[go(true)]);
            for _ in 0..4 {
                ev.extend(e.step(&[]));
            }
            ev.extend(e.step(&[go(false)]));
            let ev = settle(&mut e, ev, 40);
            let (width, at, kind) = match interrupted {
                "ignore" => (width, at, "transition-completed"),
                "final" => (0.6, "b", "transition-interrupted"),
                _ => (0.3, "a", "transition-interrupted"),
            };
            check!(has(&ev, kind), "{cell}: expected {kind}");
            check!(live(&e)["width"] == json!(width) && node(&e) == at, "{cell} interrupted: landed {} at {}", live(&e)["width"], node(&e));
            cells += 1;
        }
    }

    let mut e = engine_with(vec![widen(json!({"timing": 1.0, "staging": {"width": [0.5, 1.0]}}))], 0);
    let mut ev = e.step(&[go(true)]);
    let mut held = 0;
    for _ in 0..70 {
        for event in &ev {
            if let morphkit_core::EventKind::TweenProgress { t, .. } = event.kind {
                if t < 0.5 {
                    check!(live(&e)["width"] == json!(0.3), "staged width moved at t={t}");
                    held += 1;
                }
            }
        }
        ev = e.step(&[]);
    }
    check!(held >= 29, "only {held} ticks below 0.5");

    let grid: Vec<f64> = (0..1001).map(|i| i as f64 / 1000.0).collect();
    for f in Easing::ALL {
        check!(f.apply(0.0) == 0.0 && f.apply(1.0) == 1.0, "{} endpoints", f.as_str());
        let v: Vec<f64> = grid.iter().map(|t| f.apply(*t)).collect();
        check!(v.windows(2).all(|w| w[0] <= w[1]), "{} not monotone", f.as_str());
    }
    Ok(format!("{cells}/6 cells; staged width held for {held} ticks; {} easings on 1001 points", Easing::ALL.len()))
}

fn determinism() -> Outcome {
    for (name, trace) in [("highlight", "highlight"), ("partition-stack", "partition-stack"), ("tilt-map", "tilt-sweep")] {
        let (a, _, _) = gallery_run(name, trace, 300, false)?;
        let (b, _, _) = gallery_run(name, trace, 300, false)?;
        check!(a.log == b.log, "{name}: logs differ");
    }

    // Three equal-priority rivals writing the same property.
    let rival = |name: &str| {
        toggle_morph(
            name,
            json!([{"name": "a", "width": 0.3}, {"name": "b", "restrict": true, "width": 0.9}]),
            json!({"control": {"timing": 0.1}}),
        )
    };
    let names = ["r1", "r2", "r3"];
    let mut wins = [0u32; 3];
    for seed in 0..1000 {
        let mut e = engine_with(names.iter().map(|n| rival(n)).collect(), seed);
        let ev = e.step(&[go(true)]);
        let started: Vec<&str> = ev.iter().filter(|e| e.kind_name() == "transition-started").map(|e| e.morph.as_str()).collect();
        check!(started.len() == 1, "seed {seed}: {started:?}");
        wins[names.iter().position(|n| *n == started[0]).unwrap()] += 1;
    }
    let expected = 1000.0 / 3.0;
    let chi2: f64 = wins.iter().map(|&w| (w as f64 - expected).powi(2) / expected).sum();
    let p = 1.0 - ChiSquared::new(2.0).unwrap().cdf(chi2);
    check!(p > 0.01, "wins {wins:?}, chi2 {chi2:.2}, p {p:.4}");
    Ok(format!("3 scenarios byte-identical; tie-break wins {wins:?}, chi2 {chi2:.2}, p = {p:.3}"))
}

fn expressions() -> Outcome {
    let env = BTreeMap::from([
        ("o".to_string(), SignalValue::Vec3(Vec3::zeros())),
        ("p".to_string(), SignalValue::Vec3(Vec3::new(3.0, 4.0, 0.0))),
        ("ex".to_string(), SignalValue::Vec3(Vec3::x())),
        ("ey".to_string(), SignalValue::Vec3(Vec3::y())),
    ]);
    let num = |text: &str| -> Result<f64, String> {
        match parse_expression(text).map_err(|e| e.to_string())?.eval(&env) {
            Ok(SignalValue::Number(n)) => Ok(n),
            other => Err(format!("{text}: {other:?}")),
        }
    };
    check!(num("distance(o, p)")? == 5.0, "distance");
    check!(num("normalise(45, 0, 90)")? == 0.5, "normalise");
    check!((num("angle(ex, ey)")? - 90.0).abs() < 1e-12, "angle");
    check!(num("1 + 2 * 3")? == 7.0, "precedence");
    let cyclic = json!({
        "name": "c", "states": [{"name": "a"}, {"name": "b"}],
        "signals": [{"name": "x", "expression": "y + 1"}, {"name": "y", "expression": "x"}],
        "transitions": [{"name": "t", "states": ["a", "b"], "trigger": "x > 1"}]
    });
    let codes: Vec<String> = match parse_morph(&cyclic.to_string()) {
        Ok(_) => return Err("cycle accepted".into()),
        Err(e) => e.diagnostics().into_iter().map(|d| d.code.to_string()).collect(),
    };
    check!(codes == ["SIGNAL_CYCLE"], "codes {codes:?}");
    Ok("distance 5, normalise 0.5, angle 90, 1+2*3 = 7, cycle rejected".into())
}

fn lifecycle() -> Outcome {
    let mut e = engine_with(vec![widen(json!({"timing": 0.1}))], 0);
    for _ in 0..5 {
        e.step(&[]);
    }
    let before = e.trigger_evaluations("v", "m", "t", Direction::Forward);
    check!(before > 0, "trigger never evaluated while armed");
    let ev = e.step(&[go(true)]);
    let ev = settle(&mut e, ev, 30);
    check!(has(&ev, "transition-completed"), "never completed");
    let at = e.trigger_evaluations("v", "m", "t", Direction::Forward);
    for i in 0..300 {
        e.step(&[go(i % 2 == 0)]);
    }
    let after = e.trigger_evaluations("v", "m", "t", Direction::Forward) - at;
    check!(after == 0, "{after} evaluations after completion");
    Ok(format!("{before} evaluations while armed, 0 in 300 ticks after completion"))
}

fn performance() -> Outcome {
    let ms = morphkit_bench::mean_tick_ms(20, 600);
    let build = if cfg!(debug_assertions) { "debug build" } else { "release build" };
    let line = format!("mean tick {ms:.3} ms for 20 vis x 5 morphs ({build}; target < 2 ms)");
    if ms < 2.0 {
        Ok(line)
    } else {
        Err(line)
    }
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("matching oracle", matching_oracle, true),
        ("keyframe merge oracle", merge_oracle, true),
        ("gallery scenarios", gallery, true),
        ("keyframe store round-trip", store_round_trip, true),
        ("control semantics matrix", control_matrix, true),
        ("determinism", determinism, true),
        ("expression evaluator", expressions, true),
        ("observable lifecycle", lifecycle, true),
        ("soft performance", performance, false),
    ];
    let mut failed = 0;
    for (name, f, gating) in criteria {
        let outcome = std::panic::catch_unwind(f).unwrap_or_else(|p| {
            Err(p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default())
        });
        match outcome {
            Ok(detail) => println!("PASS  {name}: {detail}"),
            Err(detail) if gating => {
                failed += 1;
                println!("FAIL  {name}: {detail}");
            }
            Err(detail) => println!("FAIL  {name} (not gating): {detail}"),
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
