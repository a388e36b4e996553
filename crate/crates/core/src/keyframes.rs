//! Transition endpoints: keyframe creation, placeholder resolution and the
//! per-instance keyframe store.

use serde_json::Value;
use std::collections::BTreeMap;
use std::sync::Arc;

use crate::matcher::match_state;
use crate::morphspec::{MatchTerm, Placeholder, StateSpec};
use crate::signals::{lookup_var, Env, EvalError, SignalValue};
use crate::visdoc::{compute_layout, number, tree_get, tree_write, LayoutError, MarkLayout, PropPath, SchemaError, VisSpec};

#[derive(Clone, Debug, PartialEq)]
pub struct Keyframe {
    pub state: String,
    pub spec: Arc<VisSpec>,
    pub layout: Arc<MarkLayout>,
}

impl Keyframe {
    pub fn new(state: impl Into<String>, spec: VisSpec) -> Result<Keyframe, LayoutError> {
        let layout = compute_layout(&spec)?;
        Ok(Keyframe {
            state: state.into(),
            spec: Arc::new(spec),
            layout: Arc::new(layout),
        })
    }
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum KeyframeError {
    #[error("vis does not match state `{state}`: {}", failures.join("; "))]
    Precondition { state: String, failures: Vec<String> },
    #[error("merged keyframe for `{state}` is invalid: {error}")]
    Merge { state: String, error: SchemaError },
    #[error("placeholder `{placeholder}` in `{state}`: {reason}")]
    Resolve {
        state: String,
        placeholder: String,
        reason: String,
    },
    #[error("layout failed for `{state}`: {error}")]
    Layout { state: String, error: LayoutError },
}

/// A final keyframe whose placeholders are still unresolved.
#[derive(Clone, Debug, PartialEq)]
pub struct PendingKeyframe {
    pub state: String,
    pub tree: Value,
    pub placeholders: Vec<(PropPath, Placeholder)>,
}

impl PendingKeyframe {
    /// Validates a pending keyframe without placeholders.
    pub fn finish(self) -> Result<Keyframe, KeyframeError> {
        debug_assert!(self.placeholders.is_empty());
        finish_tree(self.state, &self.tree)
    }
}

fn finish_tree(state: String, tree: &Value) -> Result<Keyframe, KeyframeError> {
    let spec = VisSpec::from_tree(tree).map_err(|error| KeyframeError::Merge {
        state: state.clone(),
        error,
    })?;
    Keyframe::new(state.clone(), spec).map_err(|error| KeyframeError::Layout { state, error })
}

/// The initial keyframe is the live spec, unchanged.
pub fn create_initial(vis: &Arc<VisSpec>, state: &StateSpec) -> Result<Keyframe, KeyframeError> {
    let r = match_state(state, vis);
    if !r.matched {
        return Err(KeyframeError::Precondition {
            state: state.name.clone(),
            failures: r.failures.iter().map(|(p, why)| format!("{p}: {why}")).collect(),
        });
    }
    let layout = compute_layout(vis).map_err(|error| KeyframeError::Layout {
        state: state.name.clone(),
        error,
    })?;
    Ok(Keyframe {
        state: state.name.clone(),
        spec: Arc::clone(vis),
        layout: Arc::new(layout),
    })
}

/// Builds the final keyframe from the initial one. Paths only the initial
/// state mentions are removed; paths the final state mentions take their
/// value from `stored` when given, else from the final state's term.
pub fn create_final(
    initial: &Keyframe,
    s_i: &StateSpec,
    s_f: &StateSpec,
    stored: Option<&Keyframe>,
) -> Result<PendingKeyframe, KeyframeError> {
    let mut tree = initial.spec.to_tree();
    for (path, _) in s_i.partial.leaves() {
        if s_f.partial.get(path).is_none() {
            tree_write(&mut tree, path, None);
        }
    }
    let stored_tree = stored.map(|k| k.spec.to_tree());
    let mut placeholders = Vec::new();
    for (path, term) in s_f.partial.leaves() {
        if let Some(st) = &stored_tree {
            tree_write(&mut tree, path, tree_get(st, path).cloned());
            continue;
        }
        match term {
            MatchTerm::Literal(l) => tree_write(&mut tree, path, Some(l.to_json())),
            MatchTerm::Null => tree_write(&mut tree, path, None),
            MatchTerm::Wildcard | MatchTerm::Inequality { .. } => {}
            MatchTerm::Placeholder(p) => placeholders.push((path.clone(), p.clone())),
        }
    }
    let pending = PendingKeyframe {
        state: s_f.name.clone(),
        tree,
        placeholders,
    };
    if pending.placeholders.is_empty() {
        VisSpec::from_tree(&pending.tree).map_err(|error| KeyframeError::Merge {
            state: pending.state.clone(),
            error,
        })?;
    }
    Ok(pending)
}

fn signal_json(v: &SignalValue) -> Option<Value> {
    match v {
        SignalValue::Number(n) => Some(number(*n)),
        SignalValue::Bool(b) => Some(Value::Bool(*b)),
        SignalValue::Text(s) => Some(Value::String(s.clone())),
        _ => None,
    }
}

/// Replaces every placeholder. Accessors read the pre-substitution trees of
/// `this` (the pending keyframe) and `other`; signals read `signals`.
pub fn resolve_placeholders(
    this: PendingKeyframe,
    other: &Keyframe,
    signals: &dyn Env,
) -> Result<Keyframe, KeyframeError> {
    if this.placeholders.is_empty() {
        return this.finish();
    }
    let this_tree = this.tree.clone();
    let other_tree = other.spec.to_tree();
    let read = |this_side: bool, path: &PropPath| {
        tree_get(if this_side { &this_tree } else { &other_tree }, path).cloned()
    };
    let err = |p: &Placeholder, reason: String| KeyframeError::Resolve {
        state: this.state.clone(),
        placeholder: p.text(),
        reason,
    };
    let mut tree = this.tree.clone();
    let (direct, exprs): (Vec<_>, Vec<_>) = this
        .placeholders
        .iter()
        .partition(|(_, p)| !matches!(p, Placeholder::Expression { .. }));
    for (path, p) in direct.into_iter().chain(exprs) {
        let value = match p {
            Placeholder::Accessor { this, path: src } => {
                read(*this, src).ok_or_else(|| err(p, format!("`{src}` is absent")))?
            }
            Placeholder::Signal(name) => {
                let v = lookup_var(signals, name).map_err(|_| err(p, format!("signal `{name}` has no value")))?;
                signal_json(&v).ok_or_else(|| err(p, format!("signal `{name}` is a {}", v.type_name())))?
            }
            Placeholder::Expression { expr, .. } => {
                let env = |name: &str| -> Option<SignalValue> {
                    if let Some(rest) = name.strip_prefix("this.") {
                        return accessor_number(read(true, &PropPath::parse_dotted(rest).ok()?));
                    }
                    if let Some(rest) = name.strip_prefix("other.") {
                        return accessor_number(read(false, &PropPath::parse_dotted(rest).ok()?));
                    }
                    lookup_var(signals, name).ok()
                };
                match expr.eval(&env) {
                    Ok(SignalValue::Number(n)) => number(n),
                    Ok(v) => return Err(err(p, format!("expression gave a {}, expected a number", v.type_name()))),
                    Err(EvalError::UnknownVariable(v)) => {
                        return Err(err(p, format!("`{v}` is absent or not numeric")))
                    }
                    Err(e) => return Err(err(p, e.to_string())),
                }
            }
        };
        tree_write(&mut tree, path, Some(value));
    }
    finish_tree(this.state, &tree)
}

fn accessor_number(v: Option<Value>) -> Option<SignalValue> {
    v?.as_f64().map(SignalValue::Number)
}

/// Stored endpoint keyframes, keyed by vis, morph and state.
#[derive(Clone, Debug, Default)]
pub struct KeyframeStore {
    entries: BTreeMap<(String, String, String), Keyframe>,
}

impl KeyframeStore {
    pub fn get(&self, vis: &str, morph: &str, state: &str) -> Option<&Keyframe> {
        self.entries.get(&(vis.to_string(), morph.to_string(), state.to_string()))
    }

    pub fn store(&mut self, vis: &str, morph: &str, kf: Keyframe) {
        self.entries
            .insert((vis.to_string(), morph.to_string(), kf.state.clone()), kf);
    }

    /// Drops everything stored for one instance.
    pub fn purge(&mut self, vis: &str, morph: &str) {
        self.entries.retain(|(v, m, _), _| v != vis || m != morph);
    }

    pub fn states(&self, vis: &str, morph: &str) -> Vec<&str> {
        self.entries
            .keys()
            .filter(|(v, m, _)| v == vis && m == morph)
            .map(|(_, _, s)| s.as_str())
            .collect()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}
