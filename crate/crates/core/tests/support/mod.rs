//! Random specs and independent reference implementations shared by the
//! integration tests. The references work directly on JSON trees and never
//! call into the matcher or the keyframe writer.

#![allow(dead_code)]

use rand::seq::SliceRandom;
use rand::Rng;
use serde_json::{json, Map, Value};

use morphkit_core::morphspec::StateSpec;
use morphkit_core::{parse_morph, VisSpec};

const MARKS: [&str; 3] = ["cube", "sphere", "cylinder"];
const EXTENTS: [f64; 4] = [0.2, 0.4, 0.6, 1.0];
const CHANNELS: [&str; 5] = ["x", "y", "z", "color", "size"];
const COLORS: [&str; 3] = ["red", "steelblue", "#ff8800"];
const OPS: [&str; 6] = ["<", "<=", ">", ">=", "==", "!="];

fn data() -> Value {
    json!({
        "columns": [{"name": "a", "kind": "number"}, {"name": "b", "kind": "number"}, {"name": "c", "kind": "text"}],
        "rows": [[1.0, 2.0, "p"], [3.0, 0.5, "q"], [2.0, 4.0, "p"]]
    })
}

fn random_def(rng: &mut impl Rng) -> Value {
    match rng.gen_range(0..4) {
        0 => json!({"field": "c", "type": *["nominal", "ordinal"].choose(rng).unwrap()}),
        1 => json!({"value": *COLORS.choose(rng).unwrap()}),
        2 => json!({"value": *EXTENTS.choose(rng).unwrap()}),
        _ => json!({
            "field": *["a", "b"].choose(rng).unwrap(),
            "type": *["quantitative", "ordinal", "nominal"].choose(rng).unwrap()
        }),
    }
}

/// A valid vis spec tree in canonical form.
pub fn random_vis(rng: &mut impl Rng) -> Value {
    let mut m = Map::new();
    m.insert("mark".into(), json!(*MARKS.choose(rng).unwrap()));
    for key in ["width", "height", "depth"] {
        if rng.gen_bool(0.7) {
            m.insert(key.into(), json!(*EXTENTS.choose(rng).unwrap()));
        }
    }
    let mut enc = Map::new();
    for ch in CHANNELS {
        if rng.gen_bool(0.5) {
            enc.insert(ch.into(), random_def(rng));
        }
    }
    if !enc.is_empty() {
        m.insert("encoding".into(), Value::Object(enc));
    }
    m.insert("data".into(), data());
    VisSpec::from_tree(&Value::Object(m)).expect("generated vis is valid").to_tree()
}

fn wildcard(rng: &mut impl Rng) -> Value {
    if rng.gen_bool(0.5) {
        json!("*")
    } else {
        json!({})
    }
}

fn inequality(rng: &mut impl Rng) -> Value {
    json!(format!("{} {}", OPS.choose(rng).unwrap(), EXTENTS.choose(rng).unwrap()))
}

/// A numeric term that `current` satisfies.
fn satisfied_number(rng: &mut impl Rng, current: f64) -> Value {
    match rng.gen_range(0..4) {
        0 => json!(current),
        1 => json!(format!(">= {current}")),
        2 => json!(format!("< {}", current + 1.0)),
        _ => json!("*"),
    }
}

fn number_term(rng: &mut impl Rng, current: Option<f64>) -> Value {
    match (rng.gen_range(0..6), current) {
        (0, Some(c)) => json!(c),
        // Inside the relative tolerance.
        (1, Some(c)) => json!(c * (1.0 + 1e-12)),
        // Outside it.
        (2, Some(c)) => json!(c * (1.0 + 1e-6)),
        (3, _) => inequality(rng),
        (4, _) => Value::Null,
        (5, _) => wildcard(rng),
        _ => json!(*EXTENTS.choose(rng).unwrap()),
    }
}

fn field_term(rng: &mut impl Rng, key: &str, current: Option<&Value>) -> Value {
    if rng.gen_bool(0.35) {
        if let Some(c) = current {
            return c.clone();
        }
    }
    match (key, rng.gen_range(0..4)) {
        (_, 0) => json!("*"),
        ("field", _) => json!(*["a", "b", "c"].choose(rng).unwrap()),
        ("type", _) => json!(*["quantitative", "ordinal", "nominal"].choose(rng).unwrap()),
        (_, 1) => inequality(rng),
        (_, 2) => json!(*EXTENTS.choose(rng).unwrap()),
        _ => json!(*COLORS.choose(rng).unwrap()),
    }
}

fn channel_term(rng: &mut impl Rng, current: Option<&Value>) -> Value {
    match rng.gen_range(0..5) {
        0 => Value::Null,
        1 => json!("*"),
        2 => random_def(rng),
        _ => {
            let base = current.cloned().unwrap_or_else(|| random_def(rng));
            let mut out = Map::new();
            for (k, v) in base.as_object().unwrap() {
                if rng.gen_bool(0.8) {
                    out.insert(k.clone(), field_term(rng, k, Some(v)));
                }
            }
            if out.is_empty() {
                Value::Null
            } else {
                Value::Object(out)
            }
        }
    }
}

/// A state spec biased towards `vis`: roughly half of them match.
pub fn random_state(rng: &mut impl Rng, name: &str, vis: &Value) -> Value {
    if rng.gen_bool(0.4) {
        return matching_state(rng, name, vis);
    }
    let mut s = Map::new();
    s.insert("name".into(), json!(name));
    if rng.gen_bool(0.5) {
        let mark = match rng.gen_range(0..4) {
            0 => json!(*MARKS.choose(rng).unwrap()),
            1 => wildcard(rng),
            2 => Value::Null,
            _ => vis["mark"].clone(),
        };
        s.insert("mark".into(), mark);
    }
    for key in ["width", "height", "depth"] {
        if rng.gen_bool(0.4) {
            s.insert(key.into(), number_term(rng, vis.get(key).and_then(Value::as_f64)));
        }
    }
    if rng.gen_bool(0.7) {
        let mut enc = Map::new();
        for ch in CHANNELS {
            if rng.gen_bool(0.4) {
                enc.insert(ch.into(), channel_term(rng, vis.get("encoding").and_then(|e| e.get(ch))));
            }
        }
        s.insert("encoding".into(), Value::Object(enc));
    }
    Value::Object(s)
}

/// A state spec that `vis` is guaranteed to match.
pub fn matching_state(rng: &mut impl Rng, name: &str, vis: &Value) -> Value {
    let mut s = Map::new();
    s.insert("name".into(), json!(name));
    if rng.gen_bool(0.5) {
        s.insert("mark".into(), if rng.gen_bool(0.5) { vis["mark"].clone() } else { json!("*") });
    }
    for key in ["width", "height", "depth"] {
        if rng.gen_bool(0.4) {
            let term = match vis.get(key).and_then(Value::as_f64) {
                Some(c) => satisfied_number(rng, c),
                None => Value::Null,
            };
            s.insert(key.into(), term);
        }
    }
    let empty = Map::new();
    let venc = vis.get("encoding").and_then(Value::as_object).unwrap_or(&empty);
    let mut enc = Map::new();
    for ch in CHANNELS {
        if !rng.gen_bool(0.4) {
            continue;
        }
        let term = match venc.get(ch) {
            None => Value::Null,
            Some(_) if rng.gen_bool(0.3) => json!("*"),
            Some(def) => {
                let mut out = Map::new();
                for (k, v) in def.as_object().unwrap() {
                    if rng.gen_bool(0.7) {
                        let t = match v.as_f64() {
                            Some(n) => satisfied_number(rng, n),
                            None if rng.gen_bool(0.2) => json!("*"),
                            None => v.clone(),
                        };
                        out.insert(k.clone(), t);
                    }
                }
                if out.is_empty() {
                    json!({})
                } else {
                    Value::Object(out)
                }
            }
        };
        enc.insert(ch.into(), term);
    }
    if !enc.is_empty() {
        s.insert("encoding".into(), Value::Object(enc));
    }
    Value::Object(s)
}

/// Parses state JSON through a throwaway morph.
pub fn parse_states(states: &[&Value]) -> Vec<StateSpec> {
    let mut all: Vec<Value> = states.iter().map(|s| (*s).clone()).collect();
    all.push(json!({"name": "__spare"}));
    let names: Vec<&str> = all.iter().map(|s| s["name"].as_str().unwrap()).collect();
    let morph = json!({
        "name": "probe",
        "states": all,
        "transitions": [{"name": "t", "states": [names[0], names[names.len() - 1]]}]
    });
    let m = parse_morph(&morph.to_string()).unwrap_or_else(|e| panic!("{morph}: {:?}", e.diagnostics()));
    m.states.into_iter().take(states.len()).collect()
}

/// `(path, term)` leaves of a state's JSON. Non-empty records are walked
/// into; everything else is a leaf.
pub fn state_leaves(state: &Value) -> Vec<(Vec<String>, Value)> {
    let mut out = Vec::new();
    for (k, v) in state.as_object().unwrap() {
        if k == "name" || k == "restrict" {
            continue;
        }
        match (k.as_str(), v) {
            ("encoding", Value::Object(enc)) if !enc.is_empty() => {
                for (ch, def) in enc {
                    match def {
                        Value::Object(fields) if !fields.is_empty() => {
                            for (f, t) in fields {
                                out.push((vec![k.clone(), ch.clone(), f.clone()], t.clone()));
                            }
                        }
                        _ => out.push((vec![k.clone(), ch.clone()], def.clone())),
                    }
                }
            }
            _ => out.push((vec![k.clone()], v.clone())),
        }
    }
    out
}

fn get<'a>(tree: &'a Value, path: &[String]) -> Option<&'a Value> {
    path.iter().try_fold(tree, |node, seg| node.as_object()?.get(seg))
}

fn is_wildcard(t: &Value) -> bool {
    t == "*" || t.as_object().is_some_and(Map::is_empty)
}

fn as_inequality(t: &str) -> Option<(&str, f64)> {
    for op in ["<=", ">=", "==", "!=", "<", ">"] {
        if let Some(rest) = t.strip_prefix(op) {
            return rest.trim().parse().ok().map(|n| (op, n));
        }
    }
    None
}

fn same_number(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * a.abs().max(b.abs())
}

fn leaf_holds(term: &Value, value: Option<&Value>) -> bool {
    match (term, value) {
        (Value::Null, v) => v.is_none(),
        (_, None) => false,
        (t, Some(_)) if is_wildcard(t) => true,
        (Value::Number(a), Some(Value::Number(b))) => same_number(a.as_f64().unwrap(), b.as_f64().unwrap()),
        (Value::Bool(a), Some(Value::Bool(b))) => a == b,
        (Value::String(t), Some(v)) => match as_inequality(t) {
            Some((op, rhs)) => v.as_f64().is_some_and(|x| match op {
                "<" => x < rhs,
                "<=" => x <= rhs,
                ">" => x > rhs,
                ">=" => x >= rhs,
                "==" => x == rhs,
                _ => x != rhs,
            }),
            None => v.as_str() == Some(t.as_str()),
        },
        _ => false,
    }
}

/// Reference matcher.
pub fn oracle_match(state: &Value, vis: &Value) -> bool {
    state_leaves(state).iter().all(|(p, t)| leaf_holds(t, get(vis, p)))
}

fn remove(tree: &mut Value, path: &[String]) {
    let Some((last, parents)) = path.split_last() else { return };
    if parents.is_empty() {
        tree.as_object_mut().unwrap().remove(last);
        return;
    }
    let Some(parent) = tree.get_mut(&parents[0]) else { return };
    if !parent.is_object() {
        return;
    }
    remove(parent, &path[1..]);
    if parent.as_object().unwrap().is_empty() {
        tree.as_object_mut().unwrap().remove(&parents[0]);
    }
}

fn write(tree: &mut Value, path: &[String], value: Value) {
    let mut node = tree;
    for seg in &path[..path.len() - 1] {
        let obj = node.as_object_mut().unwrap();
        let child = obj.entry(seg.clone()).or_insert_with(|| json!({}));
        if !child.is_object() {
            *child = json!({});
        }
        node = child;
    }
    node.as_object_mut().unwrap().insert(path[path.len() - 1].clone(), value);
}

fn is_literal(t: &Value) -> bool {
    match t {
        Value::Number(_) | Value::Bool(_) => true,
        Value::String(s) => s != "*" && as_inequality(s).is_none(),
        _ => false,
    }
}

/// Reference final keyframe tree: drop paths only the initial state names,
/// then apply the final state's literals and absences.
pub fn oracle_final(vis: &Value, s_i: &Value, s_f: &Value) -> Value {
    let mut tree = vis.clone();
    let f_leaves = state_leaves(s_f);
    for (p, _) in state_leaves(s_i) {
        if !f_leaves.iter().any(|(q, _)| *q == p) {
            remove(&mut tree, &p);
        }
    }
    for (p, t) in f_leaves {
        match t {
            Value::Null => remove(&mut tree, &p),
            Value::Number(n) => write(&mut tree, &p, json!(n.as_f64().unwrap())),
            t if is_literal(&t) => write(&mut tree, &p, t),
            _ => {}
        }
    }
    tree
}

/// Every `(path, value)` leaf of a JSON tree, arrays included as leaves.
pub fn tree_leaves(tree: &Value) -> Vec<(Vec<String>, Value)> {
    fn walk(node: &Value, at: &mut Vec<String>, out: &mut Vec<(Vec<String>, Value)>) {
        match node {
            Value::Object(m) if !m.is_empty() => {
                for (k, v) in m {
                    at.push(k.clone());
                    walk(v, at, out);
                    at.pop();
                }
            }
            _ => out.push((at.clone(), node.clone())),
        }
    }
    let mut out = Vec::new();
    walk(tree, &mut Vec::new(), &mut out);
    out
}

/// True when one path is a prefix of the other.
pub fn related(a: &[String], b: &[String]) -> bool {
    let n = a.len().min(b.len());
    a[..n] == b[..n]
}

pub fn is_literal_term(t: &Value) -> bool {
    is_literal(t)
}
