//! Leaf terms of state partial specifications.

use serde_json::{Map, Value};
use std::fmt;

use crate::signals::{parse_expression, Expr};
use crate::visdoc::{Literal, PropPath};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CmpOp {
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
}

impl CmpOp {
    pub fn as_str(self) -> &'static str {
        match self {
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
            CmpOp::Eq => "==",
            CmpOp::Ne => "!=",
        }
    }

    pub fn holds(self, lhs: f64, rhs: f64) -> bool {
        match self {
            CmpOp::Lt => lhs < rhs,
            CmpOp::Le => lhs <= rhs,
            CmpOp::Gt => lhs > rhs,
            CmpOp::Ge => lhs >= rhs,
            CmpOp::Eq => lhs == rhs,
            CmpOp::Ne => lhs != rhs,
        }
    }
}

/// Substitution primitives resolved when a keyframe is created.
#[derive(Clone, Debug, PartialEq)]
pub enum Placeholder {
    /// `this.<path>` reads the keyframe being resolved, `other.<path>` the
    /// opposite endpoint.
    Accessor { this: bool, path: PropPath },
    Signal(String),
    Expression { text: String, expr: Expr },
}

impl Placeholder {
    pub fn text(&self) -> String {
        match self {
            Placeholder::Accessor { this, path } => {
                format!("{}.{path}", if *this { "this" } else { "other" })
            }
            Placeholder::Signal(s) => s.clone(),
            Placeholder::Expression { text, .. } => text.clone(),
        }
    }

    /// Signal names this placeholder reads.
    pub fn signals(&self) -> Vec<String> {
        match self {
            Placeholder::Accessor { .. } => Vec::new(),
            Placeholder::Signal(s) => vec![s.clone()],
            Placeholder::Expression { expr, .. } => expr
                .variables()
                .into_iter()
                .filter(|v| !is_accessor_text(v))
                .map(str::to_string)
                .collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum MatchTerm {
    Literal(Literal),
    Wildcard,
    Inequality { op: CmpOp, value: f64 },
    Null,
    Placeholder(Placeholder),
}

impl MatchTerm {
    pub fn to_json(&self) -> Value {
        match self {
            MatchTerm::Literal(l) => l.to_json(),
            MatchTerm::Wildcard => Value::String("*".into()),
            MatchTerm::Inequality { op, value } => Value::String(format!("{} {}", op.as_str(), value)),
            MatchTerm::Null => Value::Null,
            MatchTerm::Placeholder(p) => Value::String(p.text()),
        }
    }
}

impl fmt::Display for MatchTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_json())
    }
}

pub(crate) fn is_accessor_text(s: &str) -> bool {
    s.starts_with("this.") || s.starts_with("other.")
}

/// Parses `"<op> <number>"`. The operator is mandatory so that plain
/// numeric strings stay text.
pub fn parse_inequality(text: &str) -> Option<(CmpOp, f64)> {
    let t = text.trim();
    let ops = [
        ("<=", CmpOp::Le),
        (">=", CmpOp::Ge),
        ("==", CmpOp::Eq),
        ("!=", CmpOp::Ne),
        ("<", CmpOp::Lt),
        (">", CmpOp::Gt),
    ];
    let (op, rest) = ops
        .iter()
        .find_map(|(s, op)| t.strip_prefix(s).map(|rest| (*op, rest.trim_start())))?;
    let valid = !rest.is_empty()
        && rest
            .chars()
            .all(|c| c.is_ascii_digit() || matches!(c, '.' | '-' | '+' | 'e' | 'E'));
    let value: f64 = if valid { rest.parse().ok()? } else { return None };
    value.is_finite().then_some((op, value))
}

/// Classifies a string term. `is_signal` answers whether a name (possibly
/// with a `.x/.y/.z` suffix) refers to a declared signal.
pub fn classify_string(text: &str, is_signal: &dyn Fn(&str) -> bool) -> Result<MatchTerm, String> {
    if text == "*" {
        return Ok(MatchTerm::Wildcard);
    }
    if let Some((op, value)) = parse_inequality(text) {
        return Ok(MatchTerm::Inequality { op, value });
    }
    let trimmed = text.trim();
    let bare = !trimmed.is_empty()
        && trimmed
            .chars()
            .all(|c| c.is_alphanumeric() || c == '_' || c == '.');
    if bare && is_accessor_text(trimmed) {
        let (head, rest) = trimmed.split_once('.').expect("has a dot");
        let path = PropPath::parse_dotted(rest).map_err(|e| format!("bad accessor `{text}`: {}", e.message))?;
        return Ok(MatchTerm::Placeholder(Placeholder::Accessor {
            this: head == "this",
            path,
        }));
    }
    if bare && is_signal(trimmed) && !trimmed.contains('.') {
        return Ok(MatchTerm::Placeholder(Placeholder::Signal(trimmed.to_string())));
    }
    if let Ok(expr) = parse_expression(text) {
        let vars = expr.variables();
        let resolvable = !vars.is_empty() && vars.iter().all(|v| is_accessor_text(v) || is_signal(v));
        if resolvable {
            return Ok(MatchTerm::Placeholder(Placeholder::Expression {
                text: text.to_string(),
                expr,
            }));
        }
    }
    Ok(MatchTerm::Literal(Literal::Text(text.to_string())))
}

/// A state's partial specification as a flat list of leaf terms.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Partial {
    leaves: Vec<(PropPath, MatchTerm)>,
}

impl Partial {
    pub fn new(mut leaves: Vec<(PropPath, MatchTerm)>) -> Partial {
        leaves.sort_by(|a, b| a.0.cmp(&b.0));
        Partial { leaves }
    }

    pub fn leaves(&self) -> &[(PropPath, MatchTerm)] {
        &self.leaves
    }

    pub fn get(&self, path: &PropPath) -> Option<&MatchTerm> {
        self.leaves.iter().find(|(p, _)| p == path).map(|(_, t)| t)
    }

    pub fn is_empty(&self) -> bool {
        self.leaves.is_empty()
    }

    /// Same partial with one leaf dropped.
    pub fn without(&self, path: &PropPath) -> Partial {
        Partial {
            leaves: self.leaves.iter().filter(|(p, _)| p != path).cloned().collect(),
        }
    }

    pub fn placeholders(&self) -> impl Iterator<Item = (&PropPath, &Placeholder)> + '_ {
        self.leaves.iter().filter_map(|(p, t)| match t {
            MatchTerm::Placeholder(ph) => Some((p, ph)),
            _ => None,
        })
    }

    /// Rebuilds the JSON object form (without `name`/`restrict`).
    pub fn to_json(&self) -> Map<String, Value> {
        let mut root = Map::new();
        for (path, term) in &self.leaves {
            let segs = path.segments();
            let mut cur = &mut root;
            for s in &segs[..segs.len() - 1] {
                cur = cur
                    .entry(s.clone())
                    .or_insert_with(|| Value::Object(Map::new()))
                    .as_object_mut()
                    .expect("leaves never prefix each other");
            }
            cur.insert(segs[segs.len() - 1].clone(), term.to_json());
        }
        root
    }
}

/// Literal for a JSON scalar in a partial.
pub(crate) fn literal_term(v: &Value) -> Option<MatchTerm> {
    match v {
        Value::Number(n) => n.as_f64().map(|n| MatchTerm::Literal(Literal::Number(n))),
        Value::Bool(b) => Some(MatchTerm::Literal(Literal::Bool(*b))),
        _ => None,
    }
}
