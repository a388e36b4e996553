//! Easing and interpolation between keyframes.

mod easing;

pub use easing::Easing;

use serde_json::{Map, Value};
use std::collections::BTreeSet;
use std::sync::Arc;

use crate::keyframes::Keyframe;
use crate::visdoc::{compute_layout, number, MarkLayout, MarkRecord, VisSpec};

pub const DEFAULT_SNAP: f64 = 0.5;

/// Progress of one transition leg.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TweenState {
    pub raw: f64,
    pub eased: f64,
    /// Local progress at which discrete values switch over.
    pub snap: f64,
}

impl TweenState {
    pub fn new(raw: f64, easing: Easing) -> Self {
        let raw = raw.clamp(0.0, 1.0);
        TweenState {
            raw,
            eased: easing.apply(raw),
            snap: DEFAULT_SNAP,
        }
    }

    pub fn with_snap(self, snap: f64) -> Self {
        TweenState { snap, ..self }
    }

    /// Eased progress mapped into a staging window.
    pub fn local(&self, (a, b): (f64, f64)) -> f64 {
        if b <= a {
            return if self.eased >= b { 1.0 } else { 0.0 };
        }
        ((self.eased - a) / (b - a)).clamp(0.0, 1.0)
    }
}

/// A spec and layout ready for publication.
#[derive(Clone, Debug, PartialEq)]
pub struct VisState {
    pub spec: Arc<VisSpec>,
    pub layout: Arc<MarkLayout>,
}

fn lerp(a: f64, b: f64, t: f64) -> f64 {
    (1.0 - t) * a + t * b
}

fn blend(a: Option<&Value>, b: Option<&Value>, t: f64, snap: f64) -> Option<Value> {
    if t <= 0.0 {
        return a.cloned();
    }
    if t >= 1.0 {
        return b.cloned();
    }
    match (a, b) {
        (Some(Value::Number(x)), Some(Value::Number(y))) => {
            Some(number(lerp(x.as_f64()?, y.as_f64()?, t)))
        }
        (Some(Value::Object(x)), Some(Value::Object(y))) => {
            let keys: BTreeSet<&String> = x.keys().chain(y.keys()).collect();
            let m: Map<String, Value> = keys
                .into_iter()
                .filter_map(|k| Some((k.clone(), blend(x.get(k), y.get(k), t, snap)?)))
                .collect();
            Some(Value::Object(m))
        }
        _ if t >= snap => b.cloned(),
        _ => a.cloned(),
    }
}

/// `(property key, subtree)` pairs of a spec tree.
fn property_entries(tree: &Value) -> Vec<(String, Option<&Value>)> {
    let mut out = Vec::new();
    if let Some(obj) = tree.as_object() {
        for (k, v) in obj {
            match (k.as_str(), v) {
                ("encoding", Value::Object(enc)) => {
                    out.extend(enc.iter().map(|(ch, d)| (format!("encoding.{ch}"), Some(d))))
                }
                _ => out.push((k.clone(), Some(v))),
            }
        }
    }
    out
}

fn subtree<'a>(tree: &'a Value, key: &str) -> Option<&'a Value> {
    match key.strip_prefix("encoding.") {
        Some(ch) => tree.get("encoding")?.get(ch),
        None => tree.get(key),
    }
}

/// Interpolates between two resolved keyframes. `window` gives the staging
/// window of each property key.
pub fn apply_tween(
    kf_i: &Keyframe,
    kf_f: &Keyframe,
    tween: &TweenState,
    window: &dyn Fn(&str) -> (f64, f64),
) -> VisState {
    if tween.eased <= 0.0 && tween.raw <= 0.0 {
        return VisState {
            spec: Arc::clone(&kf_i.spec),
            layout: Arc::clone(&kf_i.layout),
        };
    }
    if tween.raw >= 1.0 {
        return VisState {
            spec: Arc::clone(&kf_f.spec),
            layout: Arc::clone(&kf_f.layout),
        };
    }
    let ta = kf_i.spec.to_tree();
    let tb = kf_f.spec.to_tree();
    let keys: BTreeSet<String> = property_entries(&ta)
        .into_iter()
        .chain(property_entries(&tb))
        .map(|(k, _)| k)
        .collect();
    let local = |k: &str| tween.local(window(k));

    let build = |snap_all: bool| {
        let mut root = Map::new();
        let mut enc = Map::new();
        for k in &keys {
            let t = local(k);
            let (a, b) = (subtree(&ta, k), subtree(&tb, k));
            let v = if snap_all {
                if t >= tween.snap { b.cloned() } else { a.cloned() }
            } else {
                blend(a, b, t, tween.snap)
            };
            if let Some(v) = v {
                match k.strip_prefix("encoding.") {
                    Some(ch) => {
                        enc.insert(ch.to_string(), v);
                    }
                    None => {
                        root.insert(k.clone(), v);
                    }
                }
            }
        }
        if !enc.is_empty() {
            root.insert("encoding".into(), Value::Object(enc));
        }
        VisSpec::from_tree(&Value::Object(root))
    };
    let spec = build(false)
        .or_else(|_| build(true))
        .unwrap_or_else(|_| if tween.raw >= tween.snap { (*kf_f.spec).clone() } else { (*kf_i.spec).clone() });

    if kf_i.layout.marks.len() != kf_f.layout.marks.len() {
        let layout = compute_layout(&spec).unwrap_or_else(|_| (*kf_f.layout).clone());
        return VisState {
            spec: Arc::new(spec),
            layout: Arc::new(layout),
        };
    }

    // Layout attributes follow the first governing key that actually
    // changes across the keyframes.
    let governed = |candidates: &[&str]| {
        candidates
            .iter()
            .find(|k| subtree(&ta, k) != subtree(&tb, k))
            .map_or(tween.eased, |k| local(k))
    };
    let pos_t = [
        governed(&["encoding.x", "encoding.xoffset", "width", "mark"]),
        governed(&["encoding.y", "encoding.yoffset", "height", "mark"]),
        governed(&["encoding.z", "depth", "mark"]),
    ];
    let size_t = [
        governed(&["encoding.x", "encoding.xoffset", "encoding.size", "width", "mark"]),
        governed(&["encoding.y", "encoding.yoffset", "encoding.size", "height", "mark"]),
        governed(&["encoding.z", "encoding.size", "depth", "mark"]),
    ];
    let extent_t = [governed(&["width"]), governed(&["height"]), governed(&["depth"])];
    let color_t = governed(&["encoding.color"]);
    let facet_t = governed(&["encoding.facetwrap"]);
    let lerp3 = |a: [f64; 3], b: [f64; 3], t: [f64; 3]| {
        [lerp(a[0], b[0], t[0]), lerp(a[1], b[1], t[1]), lerp(a[2], b[2], t[2])]
    };
    let marks = kf_i
        .layout
        .marks
        .iter()
        .zip(&kf_f.layout.marks)
        .map(|(a, b)| MarkRecord {
            position: lerp3(a.position, b.position, pos_t),
            size: lerp3(a.size, b.size, size_t),
            color: lerp3(a.color, b.color, [color_t; 3]),
            facet: if facet_t >= tween.snap { b.facet } else { a.facet },
        })
        .collect();
    let layout = MarkLayout {
        extent: lerp3(kf_i.layout.extent, kf_f.layout.extent, extent_t),
        marks,
    };
    VisState {
        spec: Arc::new(spec),
        layout: Arc::new(layout),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn kf(state: &str, tree: Value) -> Keyframe {
        Keyframe::new(state, VisSpec::from_tree(&tree).unwrap()).unwrap()
    }

    fn pair() -> (Keyframe, Keyframe) {
        let data = json!({"columns": [{"name": "a", "kind": "number"}, {"name": "b", "kind": "number"}],
                          "rows": [[0, 0], [10, 10]]});
        let a = kf(
            "a",
            json!({"mark": "cube", "width": 1.0, "encoding": {"x": {"field": "a", "type": "quantitative"},
                   "size": {"value": 0.02}}, "data": data}),
        );
        let b = kf(
            "b",
            json!({"mark": "cube", "width": 2.0, "encoding": {"x": {"field": "a", "type": "quantitative"},
                   "y": {"field": "b", "type": "quantitative"}, "size": {"value": 0.04},
                   "color": {"value": "red"}}, "data": data}),
        );
        (a, b)
    }

    fn full(_: &str) -> (f64, f64) {
        (0.0, 1.0)
    }

    #[test]
    fn endpoints_are_exact() {
        let (a, b) = pair();
        let s0 = apply_tween(&a, &b, &TweenState::new(0.0, Easing::Linear), &full);
        assert_eq!(*s0.spec, *a.spec);
        assert_eq!(*s0.layout, *a.layout);
        let s1 = apply_tween(&a, &b, &TweenState::new(1.0, Easing::Linear), &full);
        assert_eq!(*s1.spec, *b.spec);
        assert_eq!(*s1.layout, *b.layout);
    }

    #[test]
    fn numbers_lerp_and_text_snaps() {
        let (a, b) = pair();
        let s = apply_tween(&a, &b, &TweenState::new(0.25, Easing::Linear), &full);
        assert_eq!(s.spec.to_tree()["width"], json!(1.25));
        assert!(s.spec.to_tree()["encoding"].get("color").is_none());
        let s = apply_tween(&a, &b, &TweenState::new(0.5, Easing::Linear), &full);
        assert_eq!(s.spec.to_tree()["encoding"]["color"]["value"], json!("red"));
        let want = 0.5 * a.layout.marks[1].position[0] + 0.5 * b.layout.marks[1].position[0];
        assert!((s.layout.marks[1].position[0] - want).abs() < 1e-12);
    }

    #[test]
    fn staging_holds_property() {
        let (a, b) = pair();
        let window = |k: &str| if k == "encoding.y" { (0.5, 1.0) } else { (0.0, 1.0) };
        let s = apply_tween(&a, &b, &TweenState::new(0.4, Easing::Linear), &window);
        assert!(s.spec.to_tree()["encoding"].get("y").is_none());
        for (m, m0) in s.layout.marks.iter().zip(&a.layout.marks) {
            assert_eq!(m.position[1], m0.position[1]);
        }
        assert_eq!(s.spec.to_tree()["width"], json!(1.4));
    }

    #[test]
    fn easing_feeds_interpolation() {
        let (a, b) = pair();
        let s = apply_tween(&a, &b, &TweenState::new(0.5, Easing::EaseInQuad), &full);
        assert_eq!(s.spec.to_tree()["width"], json!(1.25));
    }

    #[test]
    fn local_window() {
        let t = TweenState::new(0.75, Easing::Linear);
        assert_eq!(t.local((0.5, 1.0)), 0.5);
        assert_eq!(t.local((0.0, 0.5)), 1.0);
    }
}
