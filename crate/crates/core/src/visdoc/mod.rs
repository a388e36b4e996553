//! Visualisation specifications: the documents morphs act on.
//!
//! A [`VisSpec`] is a small DXR/Vega-Lite style document with a mark, view
//! extents, encoding channels and an inline data table. All path-based
//! access goes through a canonical JSON tree view (see [`VisSpec::to_tree`]),
//! which is also the representation the matcher and keyframe rules work on.

mod color;
mod layout;
mod path;

pub use color::{parse_color, Rgb, CATEGORICAL_PALETTE, DEFAULT_MARK_COLOR, RAMP_HIGH, RAMP_LOW};
pub use layout::{compute_layout, LayoutError, MarkLayout, MarkRecord};
pub use path::{tree_get, tree_write, PropPath, ROOT_KEYS};

use serde_json::{Map, Value};
use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::str::FromStr;

/// A schema violation, located by JSON pointer.
#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("{message} (at `{path}`)")]
pub struct SchemaError {
    pub path: String,
    pub message: String,
}

impl SchemaError {
    pub fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            path: path.into(),
            message: message.into(),
        }
    }

    fn under(mut self, prefix: &str) -> Self {
        self.path = format!("{prefix}{}", self.path);
        self
    }
}

#[derive(Debug, thiserror::Error)]
pub enum VisError {
    #[error("syntax error: {0}")]
    Syntax(#[from] serde_json::Error),
    #[error("schema error: {0}")]
    Schema(#[from] SchemaError),
}

/// Encoding channels. The vocabulary is closed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Channel {
    X,
    Y,
    Z,
    Color,
    Size,
    Facetwrap,
    Yoffset,
    Xoffset,
}

impl Channel {
    pub const ALL: [Channel; 8] = [
        Channel::X,
        Channel::Y,
        Channel::Z,
        Channel::Color,
        Channel::Size,
        Channel::Facetwrap,
        Channel::Yoffset,
        Channel::Xoffset,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Channel::X => "x",
            Channel::Y => "y",
            Channel::Z => "z",
            Channel::Color => "color",
            Channel::Size => "size",
            Channel::Facetwrap => "facetwrap",
            Channel::Yoffset => "yoffset",
            Channel::Xoffset => "xoffset",
        }
    }
}

impl FromStr for Channel {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        Channel::ALL.into_iter().find(|c| c.as_str() == s).ok_or(())
    }
}

impl fmt::Display for Channel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum FieldType {
    Quantitative,
    Nominal,
    Ordinal,
}

impl FieldType {
    pub fn as_str(self) -> &'static str {
        match self {
            FieldType::Quantitative => "quantitative",
            FieldType::Nominal => "nominal",
            FieldType::Ordinal => "ordinal",
        }
    }
}

impl FromStr for FieldType {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        match s {
            "quantitative" => Ok(FieldType::Quantitative),
            "nominal" => Ok(FieldType::Nominal),
            "ordinal" => Ok(FieldType::Ordinal),
            _ => Err(()),
        }
    }
}

/// View-level numeric properties.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ViewProp {
    Width,
    Height,
    Depth,
}

impl ViewProp {
    pub const ALL: [ViewProp; 3] = [ViewProp::Width, ViewProp::Height, ViewProp::Depth];

    pub fn as_str(self) -> &'static str {
        match self {
            ViewProp::Width => "width",
            ViewProp::Height => "height",
            ViewProp::Depth => "depth",
        }
    }

    /// Extent used when the spec leaves the property unset.
    pub const DEFAULT_EXTENT: f64 = 1.0;
}

/// A constant encoding value.
#[derive(Clone, Debug, PartialEq)]
pub enum Literal {
    Number(f64),
    Text(String),
    Bool(bool),
}

impl Literal {
    fn from_json(v: &Value) -> Option<Self> {
        match v {
            Value::Number(n) => n.as_f64().map(Literal::Number),
            Value::String(s) => Some(Literal::Text(s.clone())),
            Value::Bool(b) => Some(Literal::Bool(*b)),
            _ => None,
        }
    }

    pub fn to_json(&self) -> Value {
        match self {
            Literal::Number(n) => number(*n),
            Literal::Text(s) => Value::String(s.clone()),
            Literal::Bool(b) => Value::Bool(*b),
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Literal::Number(n) => Some(*n),
            _ => None,
        }
    }
}

/// JSON number from an `f64`; non-finite values become `null`.
pub fn number(n: f64) -> Value {
    serde_json::Number::from_f64(n).map_or(Value::Null, Value::Number)
}

#[derive(Clone, Debug, PartialEq)]
pub struct EncodingDef {
    pub field: Option<String>,
    pub ty: Option<FieldType>,
    pub value: Option<Literal>,
}

impl EncodingDef {
    pub fn field(name: impl Into<String>, ty: FieldType) -> Self {
        Self {
            field: Some(name.into()),
            ty: Some(ty),
            value: None,
        }
    }

    pub fn constant(value: Literal) -> Self {
        Self {
            field: None,
            ty: None,
            value: Some(value),
        }
    }

    fn to_json(&self) -> Value {
        let mut m = Map::new();
        if let Some(f) = &self.field {
            m.insert("field".into(), Value::String(f.clone()));
        }
        if let Some(t) = self.ty {
            m.insert("type".into(), Value::String(t.as_str().into()));
        }
        if let Some(v) = &self.value {
            m.insert("value".into(), v.to_json());
        }
        Value::Object(m)
    }

    fn from_json(v: &Value) -> Result<Self, SchemaError> {
        let Some(obj) = v.as_object() else {
            return Err(SchemaError::new("", "encoding definition must be an object"));
        };
        let mut def = EncodingDef {
            field: None,
            ty: None,
            value: None,
        };
        for (k, v) in obj {
            let at = format!("/{k}");
            match k.as_str() {
                "field" => {
                    let s = v
                        .as_str()
                        .ok_or_else(|| SchemaError::new(&at, "`field` must be a string"))?;
                    def.field = Some(s.to_string());
                }
                "type" => {
                    let t = v
                        .as_str()
                        .and_then(|s| s.parse().ok())
                        .ok_or_else(|| {
                            SchemaError::new(&at, "`type` must be quantitative, nominal or ordinal")
                        })?;
                    def.ty = Some(t);
                }
                "value" => {
                    def.value = Some(Literal::from_json(v).ok_or_else(|| {
                        SchemaError::new(&at, "`value` must be a number, string or boolean")
                    })?);
                }
                other => {
                    return Err(SchemaError::new(
                        &at,
                        format!("unknown encoding property `{other}`"),
                    ))
                }
            }
        }
        def.check()?;
        Ok(def)
    }

    fn check(&self) -> Result<(), SchemaError> {
        match (&self.field, &self.value) {
            (None, None) => Err(SchemaError::new("", "encoding needs one of `field` or `value`")),
            (Some(_), Some(_)) => Err(SchemaError::new(
                "",
                "encoding must not carry both `field` and `value`",
            )),
            (Some(_), None) if self.ty.is_none() => {
                Err(SchemaError::new("/type", "`type` is required when `field` is set"))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ColumnKind {
    Number,
    Text,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Column {
    pub name: String,
    pub kind: ColumnKind,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Number(f64),
    Text(String),
}

impl Cell {
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Cell::Number(n) => Some(*n),
            Cell::Text(_) => None,
        }
    }

    /// Category key used by band and palette scales.
    pub fn category_key(&self) -> String {
        match self {
            Cell::Number(n) => format!("{n}"),
            Cell::Text(s) => s.clone(),
        }
    }
}

/// Inline data table.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct DataTable {
    pub columns: Vec<Column>,
    pub rows: Vec<Vec<Cell>>,
}

impl DataTable {
    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    pub fn column_values(&self, idx: usize) -> impl Iterator<Item = &Cell> + '_ {
        self.rows.iter().map(move |r| &r[idx])
    }

    fn to_json(&self) -> Value {
        let columns = self
            .columns
            .iter()
            .map(|c| {
                let kind = match c.kind {
                    ColumnKind::Number => "number",
                    ColumnKind::Text => "text",
                };
                serde_json::json!({"name": c.name, "kind": kind})
            })
            .collect();
        let rows = self
            .rows
            .iter()
            .map(|r| {
                Value::Array(
                    r.iter()
                        .map(|c| match c {
                            Cell::Number(n) => number(*n),
                            Cell::Text(s) => Value::String(s.clone()),
                        })
                        .collect(),
                )
            })
            .collect();
        let mut m = Map::new();
        m.insert("columns".into(), Value::Array(columns));
        m.insert("rows".into(), Value::Array(rows));
        Value::Object(m)
    }

    fn from_json(v: &Value) -> Result<Self, SchemaError> {
        let obj = v
            .as_object()
            .ok_or_else(|| SchemaError::new("", "`data` must be an object"))?;
        if let Some(k) = obj.keys().find(|k| *k != "columns" && *k != "rows") {
            return Err(SchemaError::new(format!("/{k}"), format!("unknown data key `{k}`")));
        }
        let mut table = DataTable::default();
        let mut seen = HashSet::new();
        let columns = match obj.get("columns") {
            Some(Value::Array(cols)) => cols.as_slice(),
            None => &[],
            Some(_) => return Err(SchemaError::new("/columns", "`columns` must be an array")),
        };
        for (i, col) in columns.iter().enumerate() {
            let at = format!("/columns/{i}");
            let name = col
                .get("name")
                .and_then(Value::as_str)
                .ok_or_else(|| SchemaError::new(&at, "column needs a string `name`"))?;
            let kind = match col.get("kind").and_then(Value::as_str) {
                Some("number") => ColumnKind::Number,
                Some("text") => ColumnKind::Text,
                _ => return Err(SchemaError::new(&at, "column `kind` must be number or text")),
            };
            if !seen.insert(name.to_string()) {
                return Err(SchemaError::new(&at, format!("duplicate column `{name}`")));
            }
            table.columns.push(Column {
                name: name.to_string(),
                kind,
            });
        }
        let rows = match obj.get("rows") {
            Some(Value::Array(rows)) => rows.as_slice(),
            None => &[],
            Some(_) => return Err(SchemaError::new("/rows", "`rows` must be an array")),
        };
        for (i, row) in rows.iter().enumerate() {
            let at = format!("/rows/{i}");
            let cells = row
                .as_array()
                .ok_or_else(|| SchemaError::new(&at, "row must be an array"))?;
            if cells.len() != table.columns.len() {
                return Err(SchemaError::new(
                    &at,
                    format!("row has {} cells, expected {}", cells.len(), table.columns.len()),
                ));
            }
            let mut out = Vec::with_capacity(cells.len());
            for (j, (cell, col)) in cells.iter().zip(&table.columns).enumerate() {
                let c = match (col.kind, cell) {
                    (ColumnKind::Number, Value::Number(n)) => Cell::Number(n.as_f64().unwrap_or(0.0)),
                    (ColumnKind::Text, Value::String(s)) => Cell::Text(s.clone()),
                    _ => {
                        return Err(SchemaError::new(
                            format!("{at}/{j}"),
                            format!("cell does not match column `{}` kind", col.name),
                        ))
                    }
                };
                out.push(c);
            }
            table.rows.push(out);
        }
        Ok(table)
    }
}

/// A validated visualisation specification.
#[derive(Clone, Debug, PartialEq)]
pub struct VisSpec {
    pub mark: String,
    pub view_props: BTreeMap<ViewProp, f64>,
    pub encoding: BTreeMap<Channel, EncodingDef>,
    pub data: DataTable,
}

impl VisSpec {
    pub fn parse(text: &str) -> Result<Self, VisError> {
        let value: Value = serde_json::from_str(text)?;
        Ok(Self::from_tree(&value)?)
    }

    /// Builds a spec from its JSON tree, validating every invariant.
    pub fn from_tree(tree: &Value) -> Result<Self, SchemaError> {
        let obj = tree
            .as_object()
            .ok_or_else(|| SchemaError::new("", "visualisation spec must be an object"))?;
        if let Some(k) = obj.keys().find(|k| !ROOT_KEYS.contains(&k.as_str())) {
            return Err(SchemaError::new(format!("/{k}"), format!("unknown property `{k}`")));
        }
        let mark = match obj.get("mark") {
            Some(Value::String(s)) if !s.is_empty() => s.clone(),
            Some(_) => return Err(SchemaError::new("/mark", "`mark` must be a non-empty string")),
            None => return Err(SchemaError::new("/mark", "missing required property `mark`")),
        };
        let mut view_props = BTreeMap::new();
        for prop in ViewProp::ALL {
            if let Some(v) = obj.get(prop.as_str()) {
                let n = v.as_f64().filter(|n| n.is_finite() && *n >= 0.0).ok_or_else(|| {
                    SchemaError::new(
                        format!("/{}", prop.as_str()),
                        "view extent must be a non-negative number",
                    )
                })?;
                view_props.insert(prop, n);
            }
        }
        let data = match obj.get("data") {
            Some(d) => DataTable::from_json(d).map_err(|e| e.under("/data"))?,
            None => DataTable::default(),
        };
        let mut encoding = BTreeMap::new();
        match obj.get("encoding") {
            None => {}
            Some(Value::Object(enc)) => {
                for (name, def) in enc {
                    let at = format!("/encoding/{name}");
                    let channel: Channel = name
                        .parse()
                        .map_err(|_| SchemaError::new(&at, format!("unknown channel `{name}`")))?;
                    let def = EncodingDef::from_json(def).map_err(|e| e.under(&at))?;
                    if let Some(field) = &def.field {
                        if data.column_index(field).is_none() {
                            return Err(SchemaError::new(
                                format!("{at}/field"),
                                format!("field `{field}` is not a data column"),
                            ));
                        }
                    }
                    encoding.insert(channel, def);
                }
            }
            Some(_) => return Err(SchemaError::new("/encoding", "`encoding` must be an object")),
        }
        Ok(VisSpec {
            mark,
            view_props,
            encoding,
            data,
        })
    }

    /// Canonical JSON tree. Numbers are always written as floats.
    pub fn to_tree(&self) -> Value {
        let mut m = Map::new();
        m.insert("mark".into(), Value::String(self.mark.clone()));
        for (p, v) in &self.view_props {
            m.insert(p.as_str().into(), number(*v));
        }
        if !self.encoding.is_empty() {
            let enc: Map<String, Value> = self
                .encoding
                .iter()
                .map(|(c, d)| (c.as_str().to_string(), d.to_json()))
                .collect();
            m.insert("encoding".into(), Value::Object(enc));
        }
        if !self.data.columns.is_empty() {
            m.insert("data".into(), self.data.to_json());
        }
        Value::Object(m)
    }

    pub fn to_json_string(&self) -> String {
        self.to_tree().to_string()
    }

    /// Reads the literal or sub-record at `path`; `None` means absent.
    pub fn path_get(&self, path: &PropPath) -> Option<Value> {
        tree_get(&self.to_tree(), path).cloned()
    }

    /// Returns a new spec with `value` written at `path` (`None` removes).
    pub fn path_write(&self, path: &PropPath, value: Option<Value>) -> Result<VisSpec, SchemaError> {
        let mut tree = self.to_tree();
        tree_write(&mut tree, path, value);
        VisSpec::from_tree(&tree)
    }

    pub fn extent(&self, prop: ViewProp) -> f64 {
        self.view_props
            .get(&prop)
            .copied()
            .unwrap_or(ViewProp::DEFAULT_EXTENT)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    pub(crate) fn scatter() -> VisSpec {
        VisSpec::from_tree(&json!({
            "mark": "point",
            "encoding": {
                "x": {"field": "A", "type": "quantitative"},
                "y": {"field": "B", "type": "quantitative"}
            },
            "data": {
                "columns": [{"name": "A", "kind": "number"}, {"name": "B", "kind": "number"}],
                "rows": [[0, 1], [5, 2], [10, 3]]
            }
        }))
        .unwrap()
    }

    #[test]
    fn parses_scatterplot() {
        let s = scatter();
        assert_eq!(s.mark, "point");
        assert_eq!(s.encoding.len(), 2);
        assert_eq!(s.data.rows.len(), 3);
    }

    #[test]
    fn empty_document_misses_mark() {
        let err = VisSpec::parse("{}").unwrap_err();
        match err {
            VisError::Schema(e) => assert_eq!(e.path, "/mark"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn malformed_json_is_syntax_error() {
        assert!(matches!(VisSpec::parse("{\"mark\":"), Err(VisError::Syntax(_))));
    }

    #[test]
    fn encoding_without_field_or_value() {
        let err = VisSpec::parse(r#"{"mark":"point","encoding":{"x":{"type":"quantitative"}}}"#)
            .unwrap_err();
        match err {
            VisError::Schema(e) => assert!(e.path.starts_with("/encoding/x"), "{e}"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_keys_and_fields_rejected() {
        assert!(VisSpec::parse(r#"{"mark":"point","pose":{}}"#).is_err());
        assert!(VisSpec::parse(
            r#"{"mark":"point","encoding":{"x":{"field":"Q","type":"nominal"}}}"#
        )
        .is_err());
        assert!(VisSpec::parse(r#"{"mark":"point","encoding":{"w":{"value":1}}}"#).is_err());
    }

    #[test]
    fn path_get_reads() {
        let s = scatter();
        let p = |t: &str| PropPath::parse_dotted(t).unwrap();
        assert_eq!(s.path_get(&p("encoding.x.field")), Some(json!("A")));
        assert_eq!(s.path_get(&p("encoding.color")), None);
        assert_eq!(
            s.path_get(&p("encoding.y")),
            Some(json!({"field": "B", "type": "quantitative"}))
        );
        assert_eq!(s.path_get(&p("mark.deeper")), None);
    }

    #[test]
    fn path_write_sets_constant_color_and_leaves_original() {
        let s = scatter();
        let p = PropPath::parse_dotted("encoding.color.value").unwrap();
        let red = s.path_write(&p, Some(json!("red"))).unwrap();
        assert_eq!(
            red.encoding.get(&Channel::Color),
            Some(&EncodingDef::constant(Literal::Text("red".into())))
        );
        assert_eq!(red.path_get(&p), Some(json!("red")));
        assert!(!s.encoding.contains_key(&Channel::Color));
    }

    #[test]
    fn path_write_absent_removes_channel() {
        let s = scatter();
        let p = PropPath::parse_dotted("encoding.y").unwrap();
        let out = s.path_write(&p, None).unwrap();
        assert!(!out.encoding.contains_key(&Channel::Y));
    }

    #[test]
    fn path_write_rejects_invalid_encoding() {
        let s = scatter();
        let p = PropPath::parse_dotted("encoding.x.value").unwrap();
        assert!(s.path_write(&p, Some(json!(3.0))).is_err());
    }
}
