//! Morph specifications: parsing, validation, linting and the derived
//! state-machine graph.
//!
//! A morph file is a JSON object with `name`, `states`, optional `signals`
//! and `transitions`. Parsing happens in three layers, each reported with
//! its own error class: JSON syntax, document shape, and cross references.

mod diag;
mod graph;
mod lint;
mod terms;

pub use diag::{pointer_token, Diagnostic, Severity};
pub use graph::{export_dot, EdgeKind, GraphEdge, GraphNode, NodeKind, StateMachineGraph, ENTRY_NODE, EXIT_NODE};
pub use lint::{lint, static_write_set};
pub use terms::{classify_string, parse_inequality, CmpOp, MatchTerm, Partial, Placeholder};

use serde_json::{json, Map, Value};
use std::collections::{BTreeMap, HashMap, HashSet};

use crate::signals::{
    parse_expression, Criteria, Expr, ExpressionSignalSpec, GraphError, Handedness, ParseError,
    SignalGraph, SignalSpec, SignalType, SourceKind, SourceSignalSpec, TargetKind, ValueToken,
};
use crate::tween::Easing;
use crate::visdoc::{number, Channel, FieldType, Literal, PropPath};

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum MorphError {
    #[error("{0}")]
    Syntax(Diagnostic),
    #[error("{} schema error(s), first: {}", .0.len(), .0[0])]
    Schema(Vec<Diagnostic>),
    #[error("{} semantic error(s), first: {}", .0.len(), .0[0])]
    Semantic(Vec<Diagnostic>),
}

impl MorphError {
    pub fn diagnostics(&self) -> Vec<Diagnostic> {
        match self {
            MorphError::Syntax(d) => vec![d.clone()],
            MorphError::Schema(ds) | MorphError::Semantic(ds) => ds.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StateSpec {
    pub name: String,
    pub restrict: bool,
    pub partial: Partial,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Timing {
    Duration(f64),
    Signal(String),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum InterruptMode {
    Initial,
    #[default]
    Final,
    Ignore,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum CompletedMode {
    Initial,
    #[default]
    Final,
}

impl InterruptMode {
    pub fn as_str(self) -> &'static str {
        match self {
            InterruptMode::Initial => "initial",
            InterruptMode::Final => "final",
            InterruptMode::Ignore => "ignore",
        }
    }
}

impl CompletedMode {
    pub fn as_str(self) -> &'static str {
        match self {
            CompletedMode::Initial => "initial",
            CompletedMode::Final => "final",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ControlSpec {
    pub timing: Timing,
    pub easing: Easing,
    pub interrupted: InterruptMode,
    pub completed: CompletedMode,
    /// Property key (`mark`, `width`, `encoding.x`, ...) to `[a, b]`.
    pub staging: BTreeMap<String, (f64, f64)>,
}

impl Default for ControlSpec {
    fn default() -> Self {
        ControlSpec {
            timing: Timing::Duration(0.0),
            easing: Easing::Linear,
            interrupted: InterruptMode::Final,
            completed: CompletedMode::Final,
            staging: BTreeMap::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trigger {
    pub text: String,
    pub expr: Expr,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TransitionSpec {
    pub name: String,
    pub states: (String, String),
    /// Indices of `states` in the morph's state list.
    pub from: usize,
    pub to: usize,
    pub trigger: Option<Trigger>,
    pub control: ControlSpec,
    pub bidirectional: bool,
    pub disablegrab: bool,
    pub priority: i64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Forward,
    Reverse,
}

impl Direction {
    pub fn as_str(self) -> &'static str {
        match self {
            Direction::Forward => "forward",
            Direction::Reverse => "reverse",
        }
    }
}

impl TransitionSpec {
    /// `(initial, final)` state indices for a leg.
    pub fn endpoints(&self, dir: Direction) -> (usize, usize) {
        match dir {
            Direction::Forward => (self.from, self.to),
            Direction::Reverse => (self.to, self.from),
        }
    }

    /// Forward, plus reverse when bidirectional.
    pub fn legs(&self) -> impl Iterator<Item = Direction> {
        let rev = self.bidirectional.then_some(Direction::Reverse);
        std::iter::once(Direction::Forward).chain(rev)
    }

    /// Staging window for a key on the given leg. Reverse legs mirror it.
    pub fn window(&self, key: &str, dir: Direction) -> (f64, f64) {
        match (self.control.staging.get(key), dir) {
            (None, _) => (0.0, 1.0),
            (Some(&w), Direction::Forward) => w,
            (Some(&(a, b)), Direction::Reverse) => (1.0 - b, 1.0 - a),
        }
    }
}

#[derive(Clone, Debug)]
pub struct MorphSpec {
    pub name: String,
    pub states: Vec<StateSpec>,
    pub signals: SignalGraph,
    pub transitions: Vec<TransitionSpec>,
}

pub fn parse_morph(text: &str) -> Result<MorphSpec, MorphError> {
    let v: Value = serde_json::from_str(text).map_err(|e| {
        MorphError::Syntax(Diagnostic::error(
            "SYNTAX",
            "",
            format!("line {} column {}: {e}", e.line(), e.column()),
        ))
    })?;
    MorphSpec::from_json(&v)
}

struct Ctx {
    diags: Vec<Diagnostic>,
}

impl Ctx {
    fn err(&mut self, code: &'static str, at: &str, msg: impl Into<String>) {
        self.diags.push(Diagnostic::error(code, at, msg));
    }

    fn check_keys(&mut self, obj: &Map<String, Value>, at: &str, allowed: &[&str]) {
        for k in obj.keys() {
            if !allowed.contains(&k.as_str()) {
                self.err(
                    "UNKNOWN_FIELD",
                    &format!("{at}/{}", pointer_token(k)),
                    format!("unknown property `{k}`"),
                );
            }
        }
    }

    fn string(&mut self, obj: &Map<String, Value>, key: &str, at: &str, required: bool) -> Option<String> {
        match obj.get(key) {
            Some(Value::String(s)) if !s.is_empty() => Some(s.clone()),
            Some(_) => {
                self.err("BAD_TYPE", &format!("{at}/{key}"), format!("`{key}` must be a non-empty string"));
                None
            }
            None if required => {
                self.err("MISSING_FIELD", at, format!("missing required property `{key}`"));
                None
            }
            None => None,
        }
    }

    fn boolean(&mut self, obj: &Map<String, Value>, key: &str, at: &str) -> bool {
        match obj.get(key) {
            None => false,
            Some(Value::Bool(b)) => *b,
            Some(_) => {
                self.err("BAD_TYPE", &format!("{at}/{key}"), format!("`{key}` must be a boolean"));
                false
            }
        }
    }

    fn token<T: std::str::FromStr>(
        &mut self,
        obj: &Map<String, Value>,
        key: &str,
        at: &str,
        code: &'static str,
        choices: &str,
    ) -> Option<T> {
        let s = self.string(obj, key, at, false)?;
        match s.parse() {
            Ok(t) => Some(t),
            Err(_) => {
                self.err(code, &format!("{at}/{key}"), format!("`{s}` is not supported; expected one of {choices}"));
                None
            }
        }
    }

    fn array<'a>(&mut self, obj: &'a Map<String, Value>, key: &str, required: bool) -> &'a [Value] {
        match obj.get(key) {
            Some(Value::Array(a)) => a,
            Some(_) => {
                self.err("BAD_TYPE", &format!("/{key}"), format!("`{key}` must be an array"));
                &[]
            }
            None => {
                if required {
                    self.err("MISSING_FIELD", "", format!("missing required property `{key}`"));
                }
                &[]
            }
        }
    }
}

fn expression_error(e: &ParseError) -> String {
    e.to_string()
}

fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    chars
        .next()
        .is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
        && !matches!(s, "this" | "other" | "true" | "false")
}

fn choices<T: std::fmt::Display>(all: &[T]) -> String {
    all.iter().map(|t| t.to_string()).collect::<Vec<_>>().join(", ")
}

fn parse_signal(ctx: &mut Ctx, v: &Value, at: &str) -> Option<SignalSpec> {
    let Some(obj) = v.as_object() else {
        ctx.err("BAD_TYPE", at, "signal must be an object");
        return None;
    };
    let name = ctx.string(obj, "name", at, true);
    if let Some(n) = &name {
        if !is_identifier(n) {
            ctx.err("BAD_NAME", &format!("{at}/name"), format!("signal name `{n}` must be an identifier"));
        }
    }
    if obj.contains_key("expression") {
        ctx.check_keys(obj, at, &["name", "expression"]);
        let text = ctx.string(obj, "expression", at, true)?;
        return match parse_expression(&text) {
            Ok(expr) => Some(SignalSpec::Expression(ExpressionSignalSpec { name: name?, text, expr })),
            Err(e) => {
                ctx.err("EXPR_SYNTAX", &format!("{at}/expression"), expression_error(&e));
                None
            }
        };
    }
    ctx.check_keys(obj, at, &["name", "source", "handedness", "id", "target", "criteria", "value"]);
    let source: Option<SourceKind> = ctx.token(obj, "source", at, "UNKNOWN_SOURCE", &choices(SourceKind::ALL));
    if !obj.contains_key("source") {
        ctx.err("MISSING_FIELD", at, "missing required property `source` (or `expression`)");
    }
    let value: Option<ValueToken> = ctx.token(obj, "value", at, "UNKNOWN_VALUE", &choices(ValueToken::ALL));
    if !obj.contains_key("value") {
        ctx.err("MISSING_FIELD", at, "missing required property `value`");
    }
    let handedness: Option<Handedness> =
        ctx.token(obj, "handedness", at, "UNKNOWN_HANDEDNESS", &choices(Handedness::ALL));
    let target: Option<TargetKind> = ctx.token(obj, "target", at, "UNKNOWN_TARGET", &choices(TargetKind::ALL));
    let criteria: Option<Criteria> =
        ctx.token(obj, "criteria", at, "UNKNOWN_CRITERIA", &choices(Criteria::ALL));
    let id = ctx.string(obj, "id", at, false);
    let source = source?;
    if handedness.is_some() && source != SourceKind::Hand {
        ctx.err("BAD_FIELD", &format!("{at}/handedness"), "only hand sources have a handedness");
    }
    if id.is_some() && !matches!(source, SourceKind::Ui | SourceKind::Object | SourceKind::Vis) {
        ctx.err("BAD_FIELD", &format!("{at}/id"), "`id` selects ui, object or vis sources only");
    }
    match target {
        Some(t) if t.needs_criteria() && criteria.is_none() && !obj.contains_key("criteria") => {
            ctx.err("MISSING_CRITERIA", at, format!("target `{t}` needs a `criteria`"));
        }
        Some(t) if !t.needs_criteria() && obj.contains_key("criteria") => {
            ctx.err("BAD_FIELD", &format!("{at}/criteria"), format!("target `{t}` takes no criteria"));
        }
        None if obj.contains_key("criteria") => {
            ctx.err("BAD_FIELD", &format!("{at}/criteria"), "`criteria` needs a `target`");
        }
        _ => {}
    }
    let value = value?;
    if target.is_none() && matches!(value, ValueToken::Distance | ValueToken::Intersection) {
        ctx.err("VALUE_NEEDS_TARGET", &format!("{at}/value"), format!("`{value}` needs a `target`"));
    }
    Some(SignalSpec::Source(SourceSignalSpec {
        name: name?,
        source,
        handedness,
        id,
        target,
        criteria,
        value,
    }))
}

/// What a leaf position accepts.
#[derive(Clone, Copy, PartialEq)]
enum Slot {
    Mark,
    Number,
    Field,
    Type,
    Value,
    Record,
}

fn parse_term(ctx: &mut Ctx, v: &Value, at: &str, slot: Slot, is_signal: &dyn Fn(&str) -> bool) -> Option<MatchTerm> {
    let bad = |ctx: &mut Ctx, what: &str| {
        ctx.err("BAD_TERM", at, what.to_string());
        None
    };
    match v {
        Value::Null => Some(MatchTerm::Null),
        Value::Object(o) if o.is_empty() => Some(MatchTerm::Wildcard),
        Value::Number(_) | Value::Bool(_) => match slot {
            Slot::Number if v.is_number() => terms::literal_term(v),
            Slot::Value => terms::literal_term(v),
            _ => bad(ctx, "a number or boolean is not valid here"),
        },
        Value::String(s) => {
            let term = match classify_string(s, is_signal) {
                Ok(t) => t,
                Err(m) => return bad(ctx, &m),
            };
            match (&term, slot) {
                (MatchTerm::Inequality { .. }, Slot::Number | Slot::Value) => Some(term),
                (MatchTerm::Inequality { .. }, _) => bad(ctx, "inequalities only apply to numeric properties"),
                (MatchTerm::Literal(Literal::Text(t)), Slot::Type) => {
                    if t.parse::<FieldType>().is_ok() {
                        Some(term)
                    } else {
                        bad(ctx, "`type` must be quantitative, nominal or ordinal")
                    }
                }
                (MatchTerm::Literal(_), Slot::Number | Slot::Record) => {
                    bad(ctx, &format!("`{s}` is not a valid term here"))
                }
                _ => Some(term),
            }
        }
        _ => bad(ctx, "unsupported term"),
    }
}

fn parse_partial(
    ctx: &mut Ctx,
    obj: &Map<String, Value>,
    at: &str,
    is_signal: &dyn Fn(&str) -> bool,
) -> Vec<(PropPath, MatchTerm)> {
    let mut leaves = Vec::new();
    let path = |segs: &[&str]| PropPath::new(segs.iter().copied()).expect("vocabulary paths are valid");
    for (key, v) in obj {
        if key == "name" || key == "restrict" {
            continue;
        }
        let here = format!("{at}/{}", pointer_token(key));
        match key.as_str() {
            "mark" => {
                if let Some(t) = parse_term(ctx, v, &here, Slot::Mark, is_signal) {
                    leaves.push((path(&["mark"]), t));
                }
            }
            "width" | "height" | "depth" => {
                if let Some(t) = parse_term(ctx, v, &here, Slot::Number, is_signal) {
                    leaves.push((path(&[key]), t));
                }
            }
            "data" => ctx.err("DATA_IN_STATE", &here, "states match on structure only and cannot name `data`"),
            "encoding" => match v {
                Value::Object(enc) if !enc.is_empty() => {
                    for (ch, def) in enc {
                        let ch_at = format!("{here}/{}", pointer_token(ch));
                        if ch.parse::<Channel>().is_err() {
                            ctx.err("UNKNOWN_CHANNEL", &ch_at, format!("unknown channel `{ch}`"));
                            continue;
                        }
                        match def {
                            Value::Object(fields) if !fields.is_empty() => {
                                for (f, fv) in fields {
                                    let f_at = format!("{ch_at}/{}", pointer_token(f));
                                    let slot = match f.as_str() {
                                        "field" => Slot::Field,
                                        "type" => Slot::Type,
                                        "value" => Slot::Value,
                                        _ => {
                                            ctx.err("UNKNOWN_FIELD", &f_at, format!("unknown encoding property `{f}`"));
                                            continue;
                                        }
                                    };
                                    if let Some(t) = parse_term(ctx, fv, &f_at, slot, is_signal) {
                                        leaves.push((path(&["encoding", ch, f]), t));
                                    }
                                }
                            }
                            _ => {
                                if let Some(t) = parse_term(ctx, def, &ch_at, Slot::Record, is_signal) {
                                    leaves.push((path(&["encoding", ch]), t));
                                }
                            }
                        }
                    }
                }
                _ => {
                    if let Some(t) = parse_term(ctx, v, &here, Slot::Record, is_signal) {
                        leaves.push((path(&["encoding"]), t));
                    }
                }
            },
            "stagger" => ctx.err("STAGGER_UNSUPPORTED", &here, "staggering is not supported"),
            other => ctx.err("UNKNOWN_FIELD", &here, format!("unknown state property `{other}`")),
        }
    }
    leaves
}

/// Staging keys name a whole property: a top-level key or one channel.
fn parse_staging_key(key: &str) -> Result<String, String> {
    let p = PropPath::parse_dotted(key).map_err(|e| e.message)?;
    let segs = p.segments();
    match segs {
        [k] if k != "encoding" && k != "data" => Ok(key.to_string()),
        [e, ch] if e == "encoding" && ch.parse::<Channel>().is_ok() => Ok(key.to_string()),
        _ => Err(format!("`{key}` is not a stageable property; use a top-level key or `encoding.<channel>`")),
    }
}

fn parse_control(ctx: &mut Ctx, v: &Value, at: &str) -> ControlSpec {
    let mut c = ControlSpec::default();
    let Some(obj) = v.as_object() else {
        ctx.err("BAD_TYPE", at, "`control` must be an object");
        return c;
    };
    if obj.contains_key("stagger") {
        ctx.err("STAGGER_UNSUPPORTED", &format!("{at}/stagger"), "staggering is not supported");
    }
    ctx.check_keys(obj, at, &["timing", "easing", "interrupted", "completed", "staging", "stagger"]);
    match obj.get("timing") {
        None => {}
        Some(Value::Number(n)) => match n.as_f64() {
            Some(d) if d >= 0.0 && d.is_finite() => c.timing = Timing::Duration(d),
            _ => ctx.err("BAD_TIMING", &format!("{at}/timing"), "duration must be a non-negative number"),
        },
        Some(Value::String(s)) if !s.is_empty() => c.timing = Timing::Signal(s.clone()),
        Some(_) => ctx.err("BAD_TIMING", &format!("{at}/timing"), "`timing` is seconds or a signal name"),
    }
    if let Some(e) = ctx.token(obj, "easing", at, "UNKNOWN_EASING", &choices(&Easing::ALL)) {
        c.easing = e;
    }
    match ctx.string(obj, "interrupted", at, false).as_deref() {
        None => {}
        Some("initial") => c.interrupted = InterruptMode::Initial,
        Some("final") => c.interrupted = InterruptMode::Final,
        Some("ignore") => c.interrupted = InterruptMode::Ignore,
        Some(o) => ctx.err("BAD_TOKEN", &format!("{at}/interrupted"), format!("`{o}`: expected initial, final or ignore")),
    }
    match ctx.string(obj, "completed", at, false).as_deref() {
        None => {}
        Some("initial") => c.completed = CompletedMode::Initial,
        Some("final") => c.completed = CompletedMode::Final,
        Some(o) => ctx.err("BAD_TOKEN", &format!("{at}/completed"), format!("`{o}`: expected initial or final")),
    }
    match obj.get("staging") {
        None => {}
        Some(Value::Object(st)) => {
            for (k, range) in st {
                let k_at = format!("{at}/staging/{}", pointer_token(k));
                let key = match parse_staging_key(k) {
                    Ok(key) => key,
                    Err(m) => {
                        ctx.err("BAD_STAGING", &k_at, m);
                        continue;
                    }
                };
                let pair = range
                    .as_array()
                    .filter(|a| a.len() == 2)
                    .and_then(|a| Some((a[0].as_f64()?, a[1].as_f64()?)));
                match pair {
                    Some((a, b)) if 0.0 <= a && a < b && b <= 1.0 => {
                        c.staging.insert(key, (a, b));
                    }
                    _ => ctx.err("BAD_STAGING", &k_at, "staging range must be [a, b] with 0 <= a < b <= 1"),
                }
            }
        }
        Some(_) => ctx.err("BAD_TYPE", &format!("{at}/staging"), "`staging` must be an object"),
    }
    c
}

struct RawTransition {
    name: Option<String>,
    states: Option<(String, String)>,
    trigger: Option<Trigger>,
    control: ControlSpec,
    bidirectional: bool,
    disablegrab: bool,
    priority: i64,
}

fn parse_transition(ctx: &mut Ctx, v: &Value, at: &str) -> Option<RawTransition> {
    let Some(obj) = v.as_object() else {
        ctx.err("BAD_TYPE", at, "transition must be an object");
        return None;
    };
    ctx.check_keys(
        obj,
        at,
        &["name", "states", "trigger", "control", "bidirectional", "disablegrab", "priority"],
    );
    let name = ctx.string(obj, "name", at, true);
    let states = match obj.get("states") {
        Some(Value::Array(a)) if a.len() == 2 && a.iter().all(Value::is_string) => Some((
            a[0].as_str().expect("checked").to_string(),
            a[1].as_str().expect("checked").to_string(),
        )),
        Some(_) => {
            ctx.err("BAD_TYPE", &format!("{at}/states"), "`states` must name exactly two states");
            None
        }
        None => {
            ctx.err("MISSING_FIELD", at, "missing required property `states`");
            None
        }
    };
    let trigger = match ctx.string(obj, "trigger", at, false) {
        Some(text) => match parse_expression(&text) {
            Ok(expr) => Some(Trigger { text, expr }),
            Err(e) => {
                ctx.err("EXPR_SYNTAX", &format!("{at}/trigger"), expression_error(&e));
                None
            }
        },
        None => None,
    };
    let control = match obj.get("control") {
        Some(c) => parse_control(ctx, c, &format!("{at}/control")),
        None => ControlSpec::default(),
    };
    let priority = match obj.get("priority") {
        None => 0,
        Some(p) => p.as_i64().unwrap_or_else(|| {
            ctx.err("BAD_TYPE", &format!("{at}/priority"), "`priority` must be an integer");
            0
        }),
    };
    Some(RawTransition {
        name,
        states,
        trigger,
        control,
        bidirectional: ctx.boolean(obj, "bidirectional", at),
        disablegrab: ctx.boolean(obj, "disablegrab", at),
        priority,
    })
}

fn duplicates<'a>(names: impl Iterator<Item = &'a str>) -> Vec<(usize, &'a str)> {
    let mut seen = HashSet::new();
    names
        .enumerate()
        .filter(|(_, n)| !seen.insert(*n))
        .collect()
}

impl MorphSpec {
    pub fn from_json(v: &Value) -> Result<MorphSpec, MorphError> {
        let mut ctx = Ctx { diags: Vec::new() };
        let Some(obj) = v.as_object() else {
            return Err(MorphError::Schema(vec![Diagnostic::error("BAD_TYPE", "", "morph must be an object")]));
        };
        ctx.check_keys(obj, "", &["$schema", "name", "states", "signals", "transitions"]);
        let name = ctx.string(obj, "name", "", true);

        let raw_signals: Vec<Option<SignalSpec>> = ctx
            .array(obj, "signals", false)
            .iter()
            .enumerate()
            .map(|(i, s)| parse_signal(&mut ctx, s, &format!("/signals/{i}")))
            .collect();
        let signal_names: HashSet<String> = raw_signals.iter().flatten().map(|s| s.name().to_string()).collect();
        let is_signal = |n: &str| {
            signal_names.contains(n)
                || n.rsplit_once('.')
                    .is_some_and(|(b, c)| matches!(c, "x" | "y" | "z") && signal_names.contains(b))
        };

        let state_values = ctx.array(obj, "states", true);
        if obj.contains_key("states") && state_values.len() < 2 {
            ctx.err("TOO_FEW_STATES", "/states", "a morph needs at least two states");
        }
        let mut states = Vec::new();
        for (i, sv) in state_values.iter().enumerate() {
            let at = format!("/states/{i}");
            let Some(so) = sv.as_object() else {
                ctx.err("BAD_TYPE", &at, "state must be an object");
                continue;
            };
            let name = ctx.string(so, "name", &at, true);
            let restrict = ctx.boolean(so, "restrict", &at);
            let leaves = parse_partial(&mut ctx, so, &at, &is_signal);
            if let Some(name) = name {
                states.push(StateSpec {
                    name,
                    restrict,
                    partial: Partial::new(leaves),
                });
            }
        }

        let transition_values = ctx.array(obj, "transitions", true);
        if obj.contains_key("transitions") && transition_values.is_empty() {
            ctx.err("TOO_FEW_TRANSITIONS", "/transitions", "a morph needs at least one transition");
        }
        let raw_transitions: Vec<Option<RawTransition>> = transition_values
            .iter()
            .enumerate()
            .map(|(i, t)| parse_transition(&mut ctx, t, &format!("/transitions/{i}")))
            .collect();

        if !ctx.diags.is_empty() {
            return Err(MorphError::Schema(ctx.diags));
        }
        let name = name.expect("no schema errors");
        let signals: Vec<SignalSpec> = raw_signals.into_iter().map(|s| s.expect("no schema errors")).collect();
        let raw_transitions: Vec<RawTransition> =
            raw_transitions.into_iter().map(|t| t.expect("no schema errors")).collect();

        // Cross references.
        let mut sem = Ctx { diags: Vec::new() };
        for (i, n) in duplicates(states.iter().map(|s| s.name.as_str())) {
            sem.err("DUP_NAME", &format!("/states/{i}/name"), format!("state `{n}` is declared twice"));
        }
        for (i, n) in duplicates(signals.iter().map(|s| s.name())) {
            sem.err("DUP_NAME", &format!("/signals/{i}/name"), format!("signal `{n}` is declared twice"));
        }
        for (i, n) in duplicates(raw_transitions.iter().map(|t| t.name.as_deref().unwrap_or(""))) {
            sem.err("DUP_NAME", &format!("/transitions/{i}/name"), format!("transition `{n}` is declared twice"));
        }
        let sig_index: HashMap<&str, usize> = signals.iter().enumerate().map(|(i, s)| (s.name(), i)).collect();
        let graph = if sem.diags.is_empty() {
            match SignalGraph::build(signals.clone()) {
                Ok(g) => Some(g),
                Err(GraphError::UnknownSignal { signal, reference }) => {
                    let i = sig_index[signal.as_str()];
                    sem.err(
                        "UNKNOWN_SIGNAL",
                        &format!("/signals/{i}/expression"),
                        format!("signal `{signal}` references undeclared signal `{reference}`"),
                    );
                    None
                }
                Err(GraphError::Cycle(cycle)) => {
                    let i = sig_index[cycle[0].as_str()];
                    sem.err(
                        "SIGNAL_CYCLE",
                        &format!("/signals/{i}/expression"),
                        format!("signals form a cycle: {}", cycle.join(" -> ")),
                    );
                    None
                }
                Err(GraphError::Duplicate(_)) => None,
            }
        } else {
            None
        };
        let state_index: HashMap<&str, usize> = states.iter().enumerate().map(|(i, s)| (s.name.as_str(), i)).collect();
        let mut transitions = Vec::new();
        for (i, t) in raw_transitions.into_iter().enumerate() {
            let at = format!("/transitions/{i}");
            let (a, b) = t.states.expect("no schema errors");
            let from = state_index.get(a.as_str()).copied();
            let to = state_index.get(b.as_str()).copied();
            for (j, (name, idx)) in [(&a, from), (&b, to)].into_iter().enumerate() {
                if idx.is_none() {
                    sem.err("UNKNOWN_STATE", &format!("{at}/states/{j}"), format!("unknown state `{name}`"));
                }
            }
            if a == b {
                sem.err("SAME_STATE", &format!("{at}/states"), "a transition needs two different states");
            }
            if let Some(trigger) = &t.trigger {
                for var in trigger.expr.variables() {
                    let known = graph.as_ref().is_some_and(|g| g.resolve(var).is_some())
                        || (graph.is_none() && is_signal(var));
                    if !known {
                        sem.err("UNKNOWN_SIGNAL", &format!("{at}/trigger"), format!("trigger references undeclared signal `{var}`"));
                    }
                }
                if let Some(g) = &graph {
                    let ty = trigger.expr.infer(&|v| g.var_type(v));
                    if !matches!(ty, SignalType::Bool | SignalType::Unknown) {
                        sem.err("TRIGGER_TYPE", &format!("{at}/trigger"), format!("trigger `{}` is not boolean-valued", trigger.text));
                    }
                }
            }
            if let Timing::Signal(s) = &t.control.timing {
                if !signal_names.contains(s) {
                    sem.err("UNKNOWN_SIGNAL", &format!("{at}/control/timing"), format!("timing references undeclared signal `{s}`"));
                }
            }
            if let (Some(from), Some(to), Some(name)) = (from, to, t.name) {
                transitions.push(TransitionSpec {
                    name,
                    states: (a, b),
                    from,
                    to,
                    trigger: t.trigger,
                    control: t.control,
                    bidirectional: t.bidirectional,
                    disablegrab: t.disablegrab,
                    priority: t.priority,
                });
            }
        }
        if !sem.diags.is_empty() {
            return Err(MorphError::Semantic(sem.diags));
        }
        Ok(MorphSpec {
            name,
            states,
            signals: graph.expect("no semantic errors"),
            transitions,
        })
    }

    pub fn state_index(&self, name: &str) -> Option<usize> {
        self.states.iter().position(|s| s.name == name)
    }

    pub fn transition(&self, name: &str) -> Option<&TransitionSpec> {
        self.transitions.iter().find(|t| t.name == name)
    }

    /// Canonical JSON with every default written out.
    pub fn to_json(&self) -> Value {
        let states: Vec<Value> = self
            .states
            .iter()
            .map(|s| {
                let mut m = Map::new();
                m.insert("name".into(), s.name.clone().into());
                m.insert("restrict".into(), s.restrict.into());
                m.extend(s.partial.to_json());
                Value::Object(m)
            })
            .collect();
        let signals: Vec<Value> = self.signals.specs().iter().map(signal_to_json).collect();
        let transitions: Vec<Value> = self
            .transitions
            .iter()
            .map(|t| {
                let c = &t.control;
                let timing = match &c.timing {
                    Timing::Duration(d) => number(*d),
                    Timing::Signal(s) => Value::String(s.clone()),
                };
                let staging: Map<String, Value> = c
                    .staging
                    .iter()
                    .map(|(k, (a, b))| (k.clone(), json!([number(*a), number(*b)])))
                    .collect();
                let mut m = Map::new();
                m.insert("name".into(), t.name.clone().into());
                m.insert("states".into(), json!([t.states.0, t.states.1]));
                if let Some(tr) = &t.trigger {
                    m.insert("trigger".into(), tr.text.clone().into());
                }
                m.insert(
                    "control".into(),
                    json!({
                        "timing": timing,
                        "easing": c.easing.as_str(),
                        "interrupted": c.interrupted.as_str(),
                        "completed": c.completed.as_str(),
                        "staging": staging,
                    }),
                );
                m.insert("bidirectional".into(), t.bidirectional.into());
                m.insert("disablegrab".into(), t.disablegrab.into());
                m.insert("priority".into(), t.priority.into());
                Value::Object(m)
            })
            .collect();
        json!({
            "name": self.name,
            "states": states,
            "signals": signals,
            "transitions": transitions,
        })
    }
}

fn signal_to_json(s: &SignalSpec) -> Value {
    match s {
        SignalSpec::Expression(e) => json!({"name": e.name, "expression": e.text}),
        SignalSpec::Source(s) => {
            let mut m = Map::new();
            m.insert("name".into(), s.name.clone().into());
            m.insert("source".into(), s.source.as_str().into());
            if let Some(h) = s.handedness {
                m.insert("handedness".into(), h.as_str().into());
            }
            if let Some(id) = &s.id {
                m.insert("id".into(), id.clone().into());
            }
            if let Some(t) = s.target {
                m.insert("target".into(), t.as_str().into());
            }
            if let Some(c) = s.criteria {
                m.insert("criteria".into(), c.as_str().into());
            }
            m.insert("value".into(), s.value.as_str().into());
            Value::Object(m)
        }
    }
}
