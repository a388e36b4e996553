//! Property paths and raw tree access over the JSON view of a visualisation.

use serde_json::{Map, Value};
use std::fmt;

use super::SchemaError;

/// Top-level keys a property path may start with.
pub const ROOT_KEYS: [&str; 6] = ["mark", "width", "height", "depth", "encoding", "data"];

/// A path into a visualisation specification, e.g. `encoding.y.field`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PropPath(Vec<String>);

impl PropPath {
    pub fn new<I, S>(segments: I) -> Result<Self, SchemaError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let segments: Vec<String> = segments.into_iter().map(Into::into).collect();
        let Some(first) = segments.first() else {
            return Err(SchemaError::new("", "property path is empty"));
        };
        if !ROOT_KEYS.contains(&first.as_str()) {
            return Err(SchemaError::new(
                "",
                format!("property path must start with one of {ROOT_KEYS:?}, found `{first}`"),
            ));
        }
        if segments.iter().any(|s| s.is_empty()) {
            return Err(SchemaError::new("", "property path has an empty segment"));
        }
        Ok(Self(segments))
    }

    /// Parses a dotted path such as `encoding.x`.
    pub fn parse_dotted(text: &str) -> Result<Self, SchemaError> {
        Self::new(text.split('.'))
    }

    pub fn segments(&self) -> &[String] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn child(&self, segment: impl Into<String>) -> Self {
        let mut segments = self.0.clone();
        segments.push(segment.into());
        Self(segments)
    }

    /// True when `self` equals `other` or is an ancestor of it.
    pub fn is_prefix_of(&self, other: &PropPath) -> bool {
        other.0.len() >= self.0.len() && other.0[..self.0.len()] == self.0[..]
    }

    /// The property key that owns this path: a top-level key, or
    /// `encoding.<channel>` below the encoding block.
    pub fn property_key(&self) -> String {
        if self.0[0] == "encoding" && self.0.len() > 1 {
            format!("encoding.{}", self.0[1])
        } else {
            self.0[0].clone()
        }
    }

    /// JSON pointer rendering, e.g. `/encoding/y/field`.
    pub fn pointer(&self) -> String {
        self.0.iter().fold(String::new(), |mut acc, s| {
            acc.push('/');
            acc.push_str(&s.replace('~', "~0").replace('/', "~1"));
            acc
        })
    }
}

impl fmt::Display for PropPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0.join("."))
    }
}

/// Reads the value at `path`, or `None` when any segment is missing.
pub fn tree_get<'a>(tree: &'a Value, path: &PropPath) -> Option<&'a Value> {
    let mut node = tree;
    for seg in path.segments() {
        node = node.as_object()?.get(seg)?;
    }
    if node.is_null() {
        None
    } else {
        Some(node)
    }
}

/// Writes (`Some`) or removes (`None`) the value at `path` without any
/// schema validation. Removal prunes parent records left empty.
pub fn tree_write(tree: &mut Value, path: &PropPath, value: Option<Value>) {
    if !tree.is_object() {
        *tree = Value::Object(Map::new());
    }
    match value {
        Some(v) => write_at(tree, path.segments(), v),
        None => {
            remove_at(tree, path.segments());
        }
    }
}

fn write_at(node: &mut Value, segments: &[String], value: Value) {
    let map = match node {
        Value::Object(map) => map,
        other => {
            *other = Value::Object(Map::new());
            other.as_object_mut().expect("just replaced")
        }
    };
    if segments.len() == 1 {
        map.insert(segments[0].clone(), value);
        return;
    }
    let child = map
        .entry(segments[0].clone())
        .or_insert_with(|| Value::Object(Map::new()));
    write_at(child, &segments[1..], value);
}

/// Returns true when the node at this level became an empty record.
fn remove_at(node: &mut Value, segments: &[String]) -> bool {
    let Some(map) = node.as_object_mut() else {
        return false;
    };
    if segments.len() == 1 {
        map.remove(&segments[0]);
    } else if let Some(child) = map.get_mut(&segments[0]) {
        if remove_at(child, &segments[1..]) {
            map.remove(&segments[0]);
        }
    }
    map.is_empty()
}
