use crate::scene::{query_geometry, tilt_deg, Entity, EntityKind, SceneData};

use super::value::SignalValue;
use super::{Handedness, SourceKind, SourceSignalSpec, ValueToken};

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum SampleFault {
    #[error("no {0} in the scene")]
    MissingSource(String),
    #[error("no target resolved")]
    NoTarget,
    #[error("`{value}` is not available from a {origin} source")]
    Unsupported { origin: &'static str, value: &'static str },
}

fn source_entities<'a>(
    snap: &'a SceneData,
    sig: &SourceSignalSpec,
    context: Option<&str>,
) -> Vec<&'a Entity> {
    let by_id = |kind: EntityKind| -> Vec<&'a Entity> {
        match &sig.id {
            Some(id) => snap.entity(id).filter(|e| e.kind == kind).into_iter().collect(),
            None => snap.of_kind(kind).take(1).collect(),
        }
    };
    match sig.source {
        SourceKind::Hand => match sig.handedness.unwrap_or(Handedness::Any) {
            Handedness::Left => by_id(EntityKind::HandLeft),
            Handedness::Right => by_id(EntityKind::HandRight),
            Handedness::Any => {
                let mut v = by_id(EntityKind::HandLeft);
                v.extend(by_id(EntityKind::HandRight));
                v
            }
        },
        SourceKind::Head => snap.head().into_iter().collect(),
        SourceKind::Vis => {
            let id = sig.id.as_deref().or(context);
            id.and_then(|id| snap.entity(id))
                .filter(|e| e.kind == EntityKind::Vis)
                .into_iter()
                .collect()
        }
        SourceKind::Ui => by_id(EntityKind::UiWidget),
        SourceKind::Object => by_id(EntityKind::Object),
    }
}

fn unsupported(sig: &SourceSignalSpec) -> SampleFault {
    SampleFault::Unsupported {
        origin: sig.source.as_str(),
        value: sig.value.as_str(),
    }
}

fn own_value(e: &Entity, sig: &SourceSignalSpec) -> Result<SignalValue, SampleFault> {
    use SignalValue as V;
    Ok(match sig.value {
        ValueToken::Position => V::Vec3(e.pose.position),
        ValueToken::Rotation => V::Rotation(e.pose.rotation),
        ValueToken::Scale => V::Vec3(e.size()),
        ValueToken::Angle => V::Number(tilt_deg(&e.pose.rotation)),
        ValueToken::Pinch | ValueToken::Select if e.kind.is_hand() => V::Bool(e.pinch),
        ValueToken::Boolean if e.kind.is_hand() => V::Bool(e.grab),
        ValueToken::UiValue | ValueToken::Boolean if e.kind == EntityKind::UiWidget => {
            let v = e.ui_value.map(|u| u.to_signal()).unwrap_or(V::Number(0.0));
            match (sig.value, v) {
                (ValueToken::Boolean, V::Number(n)) => V::Bool(n != 0.0),
                (_, v) => v,
            }
        }
        _ => return Err(unsupported(sig)),
    })
}

fn deictic_value(
    snap: &SceneData,
    e: &Entity,
    sig: &SourceSignalSpec,
    context: Option<&str>,
    tolerance: f64,
) -> Result<SignalValue, SampleFault> {
    use SignalValue as V;
    let target = sig.target.expect("deictic");
    let criteria = sig.criteria.unwrap_or(super::Criteria::Nearest);
    let r = query_geometry(snap, &e.id, target, criteria, context, tolerance);
    let boolean = |b: bool| Ok(V::Bool(b));
    match (sig.value, r) {
        (ValueToken::Boolean | ValueToken::Select, r) => boolean(r.is_some()),
        (ValueToken::Pinch, r) => boolean(r.is_some() && e.pinch),
        (_, None) => Err(SampleFault::NoTarget),
        (ValueToken::Position, Some(r)) => Ok(V::Vec3(r.center)),
        (ValueToken::Rotation, Some(r)) => Ok(V::Rotation(r.rotation)),
        (ValueToken::Scale, Some(r)) => Ok(V::Vec3(r.size)),
        (ValueToken::Distance, Some(r)) => Ok(V::Number(r.distance)),
        (ValueToken::Intersection, Some(r)) => Ok(V::Vec3(r.point)),
        (ValueToken::Angle, Some(r)) => r.angle.map(V::Number).ok_or(SampleFault::NoTarget),
        (ValueToken::UiValue, Some(_)) => Err(unsupported(sig)),
    }
}

/// Samples one source signal against a scene snapshot. `context` is the
/// visualisation the sampling morph instance is bound to.
pub fn sample_source(
    snap: &SceneData,
    sig: &SourceSignalSpec,
    context: Option<&str>,
    tolerance: f64,
) -> Result<SignalValue, SampleFault> {
    let sources = source_entities(snap, sig, context);
    if sources.is_empty() {
        let what = match (&sig.source, &sig.handedness) {
            (SourceKind::Hand, Some(h)) => format!("{h} hand"),
            (s, _) => s.to_string(),
        };
        return Err(SampleFault::MissingSource(what));
    }
    let sample = |e: &Entity| {
        if sig.is_deictic() {
            deictic_value(snap, e, sig, context, tolerance)
        } else {
            own_value(e, sig)
        }
    };
    // With two candidate hands the first one that satisfies the derivation
    // wins; left is listed first.
    let mut first = None;
    for e in &sources {
        let v = sample(e);
        match &v {
            Ok(SignalValue::Bool(false)) | Err(_) => {
                first.get_or_insert(v);
            }
            Ok(_) => return v,
        }
    }
    first.expect("non-empty")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::{Command, EntityDef, Scene};
    use crate::signals::{Criteria, TargetKind, Vec3};
    use serde_json::json;

    fn sig(source: SourceKind, value: ValueToken) -> SourceSignalSpec {
        SourceSignalSpec {
            name: "s".into(),
            source,
            handedness: None,
            id: None,
            target: None,
            criteria: None,
            value,
        }
    }

    fn scene() -> Scene {
        let defs: Vec<EntityDef> = serde_json::from_value(json!([
            {"id": "left", "kind": "hand-left", "position": [0.0, 1.0, 0.0]},
            {"id": "right", "kind": "hand-right", "position": [0.1, 0.1, 0.1], "pinch": true},
            {"id": "table", "kind": "surface", "extent": [1.0, 0.0, 1.0]},
            {"id": "dial", "kind": "object", "rotation": {"axis": [0.0, 1.0, 0.0], "angle": 30.0}},
            {"id": "toggle", "kind": "ui-widget", "value": 0.7},
            {"id": "v", "kind": "vis", "spec": {"mark": "point", "width": 0.2, "height": 0.2, "depth": 0.2}}
        ]))
        .unwrap();
        Scene::from_defs(&defs).unwrap()
    }

    #[test]
    fn left_pinch_select() {
        let mut s = scene();
        let mut spec = sig(SourceKind::Hand, ValueToken::Select);
        spec.handedness = Some(Handedness::Left);
        assert_eq!(sample_source(s.data(), &spec, None, 0.02), Ok(SignalValue::Bool(false)));
        s.apply(&Command::SetGesture {
            id: "left".into(),
            pinch: Some(true),
            grab: None,
        })
        .unwrap();
        assert_eq!(sample_source(s.data(), &spec, None, 0.02), Ok(SignalValue::Bool(true)));
    }

    #[test]
    fn any_hand_prefers_the_satisfying_one() {
        let s = scene();
        let spec = sig(SourceKind::Hand, ValueToken::Pinch);
        assert_eq!(sample_source(s.data(), &spec, None, 0.02), Ok(SignalValue::Bool(true)));
        let pos = sig(SourceKind::Hand, ValueToken::Position);
        assert_eq!(
            sample_source(s.data(), &pos, None, 0.02),
            Ok(SignalValue::Vec3(Vec3::new(0.0, 1.0, 0.0)))
        );
    }

    #[test]
    fn vis_surface_intersection_and_absent_target() {
        let mut s = scene();
        let mut spec = sig(SourceKind::Vis, ValueToken::Intersection);
        spec.target = Some(TargetKind::Surface);
        spec.criteria = Some(Criteria::Touch);
        let p = sample_source(s.data(), &spec, Some("v"), 0.02).unwrap();
        assert_eq!(p, SignalValue::Vec3(Vec3::new(0.1, 0.0, 0.1)));

        s.apply(&Command::SetPose {
            id: "v".into(),
            position: Some([0.0, 0.5, 0.0]),
            rotation: None,
        })
        .unwrap();
        spec.value = ValueToken::Boolean;
        assert_eq!(sample_source(s.data(), &spec, Some("v"), 0.02), Ok(SignalValue::Bool(false)));
        spec.value = ValueToken::Intersection;
        assert_eq!(sample_source(s.data(), &spec, Some("v"), 0.02), Err(SampleFault::NoTarget));
    }

    #[test]
    fn own_values() {
        let mut s = scene();
        let ui = sig(SourceKind::Ui, ValueToken::UiValue);
        assert_eq!(sample_source(s.data(), &ui, None, 0.02), Ok(SignalValue::Number(0.7)));
        let rot = sig(SourceKind::Object, ValueToken::Rotation);
        match sample_source(s.data(), &rot, None, 0.02).unwrap() {
            SignalValue::Rotation(q) => assert!((q.angle().to_degrees() - 30.0).abs() < 1e-9),
            other => panic!("{other:?}"),
        }
        s.apply(&Command::SetPose {
            id: "v".into(),
            position: None,
            rotation: Some(crate::scene::RotationInput::Euler([45.0, 0.0, 0.0])),
        })
        .unwrap();
        let tilt = sig(SourceKind::Vis, ValueToken::Angle);
        let a = sample_source(s.data(), &tilt, Some("v"), 0.02).unwrap().as_f64().unwrap();
        assert!((a - 45.0).abs() < 1e-9);
        let head = sig(SourceKind::Head, ValueToken::Position);
        assert_eq!(
            sample_source(s.data(), &head, None, 0.02),
            Ok(SignalValue::Vec3(Vec3::new(0.0, 1.6, 0.0)))
        );
    }

    #[test]
    fn missing_sources_fault() {
        let s = Scene::new();
        let mut spec = sig(SourceKind::Hand, ValueToken::Pinch);
        spec.handedness = Some(Handedness::Left);
        assert!(matches!(
            sample_source(s.data(), &spec, None, 0.02),
            Err(SampleFault::MissingSource(_))
        ));
        let d = sig(SourceKind::Head, ValueToken::Distance);
        assert!(matches!(
            sample_source(s.data(), &d, None, 0.02),
            Err(SampleFault::Unsupported { .. })
        ));
    }
}
