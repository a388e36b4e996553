use nalgebra::{Unit, UnitQuaternion, Vector3};
use serde::ser::{Serialize, SerializeMap, Serializer};
use serde_json::Value;
use std::fmt;

pub type Vec3 = Vector3<f64>;
pub type Rotation = UnitQuaternion<f64>;

/// Runtime-tagged value flowing through the signal graph. Types are only
/// checked where values are used.
#[derive(Clone, Debug, PartialEq)]
pub enum SignalValue {
    Bool(bool),
    Number(f64),
    Vec3(Vec3),
    Rotation(Rotation),
    Text(String),
}

/// Static shape of a signal, as far as it can be known before sampling.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SignalType {
    Bool,
    Number,
    Vec3,
    Rotation,
    Text,
    Unknown,
}

impl SignalValue {
    pub fn type_of(&self) -> SignalType {
        match self {
            SignalValue::Bool(_) => SignalType::Bool,
            SignalValue::Number(_) => SignalType::Number,
            SignalValue::Vec3(_) => SignalType::Vec3,
            SignalValue::Rotation(_) => SignalType::Rotation,
            SignalValue::Text(_) => SignalType::Text,
        }
    }

    pub fn type_name(&self) -> &'static str {
        match self {
            SignalValue::Bool(_) => "boolean",
            SignalValue::Number(_) => "number",
            SignalValue::Vec3(_) => "vec3",
            SignalValue::Rotation(_) => "rotation",
            SignalValue::Text(_) => "text",
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            SignalValue::Number(n) => Some(*n),
            _ => None,
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            SignalValue::Bool(b) => Some(*b),
            _ => None,
        }
    }

    /// Value a signal holds before its first good sample.
    pub fn default_for(ty: SignalType) -> SignalValue {
        match ty {
            SignalType::Bool => SignalValue::Bool(false),
            SignalType::Vec3 => SignalValue::Vec3(Vec3::zeros()),
            SignalType::Rotation => SignalValue::Rotation(Rotation::identity()),
            SignalType::Text => SignalValue::Text(String::new()),
            SignalType::Number | SignalType::Unknown => SignalValue::Number(0.0),
        }
    }

    /// JSON form used when a signal is substituted into a keyframe.
    pub fn to_json(&self) -> Value {
        serde_json::to_value(self).expect("signal values serialize")
    }

    /// Reads a literal JSON value back into a signal value.
    pub fn from_json(v: &Value) -> Option<SignalValue> {
        match v {
            Value::Bool(b) => Some(SignalValue::Bool(*b)),
            Value::Number(n) => n.as_f64().map(SignalValue::Number),
            Value::String(s) => Some(SignalValue::Text(s.clone())),
            Value::Array(a) if a.len() == 3 => {
                let c: Option<Vec<f64>> = a.iter().map(Value::as_f64).collect();
                c.map(|c| SignalValue::Vec3(Vec3::new(c[0], c[1], c[2])))
            }
            _ => None,
        }
    }
}

impl fmt::Display for SignalValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_json())
    }
}

impl Serialize for SignalValue {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            SignalValue::Bool(b) => s.serialize_bool(*b),
            SignalValue::Number(n) => s.serialize_f64(*n),
            SignalValue::Vec3(v) => [v.x, v.y, v.z].serialize(s),
            SignalValue::Rotation(q) => {
                let mut m = s.serialize_map(Some(1))?;
                m.serialize_entry("quat", &[q.w, q.i, q.j, q.k])?;
                m.end()
            }
            SignalValue::Text(t) => s.serialize_str(t),
        }
    }
}

/// Rotation from XYZ Euler angles in degrees.
pub fn rotation_from_euler_deg(x: f64, y: f64, z: f64) -> Rotation {
    Rotation::from_euler_angles(x.to_radians(), y.to_radians(), z.to_radians())
}

pub fn rotation_from_axis_angle_deg(axis: Vec3, degrees: f64) -> Option<Rotation> {
    let axis = Unit::try_new(axis, 1e-12)?;
    Some(Rotation::from_axis_angle(&axis, degrees.to_radians()))
}

/// Unsigned angle between two vectors in degrees, `[0, 180]`.
pub fn angle_between_deg(a: &Vec3, b: &Vec3) -> Option<f64> {
    let na = a.norm();
    let nb = b.norm();
    if na == 0.0 || nb == 0.0 {
        return None;
    }
    let c = (a.dot(b) / (na * nb)).clamp(-1.0, 1.0);
    Some(c.acos().to_degrees())
}
