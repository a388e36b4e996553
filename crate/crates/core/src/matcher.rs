//! Partial matching of visualisation specs against state specs.

use serde_json::Value;
use std::collections::BTreeMap;

use crate::morphspec::{MatchTerm, MorphSpec, StateSpec};
use crate::visdoc::{tree_get, Literal, PropPath, VisSpec};

pub const NUMBER_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Debug, Default, PartialEq)]
pub struct MatchResult {
    pub matched: bool,
    /// Values found at wildcard and placeholder positions.
    pub bindings: BTreeMap<PropPath, Value>,
    pub failures: Vec<(PropPath, String)>,
}

pub fn numbers_equal(a: f64, b: f64) -> bool {
    a == b || (a - b).abs() <= NUMBER_TOLERANCE * a.abs().max(b.abs())
}

/// Checks one term against the vis value at its path (`None` = absent).
pub fn match_term(term: &MatchTerm, value: Option<&Value>) -> Result<(), String> {
    match (term, value) {
        (MatchTerm::Null, None) => Ok(()),
        (MatchTerm::Null, Some(v)) => Err(format!("expected absent, found {v}")),
        (_, None) => Err("expected a value, found none".into()),
        (MatchTerm::Wildcard | MatchTerm::Placeholder(_), Some(_)) => Ok(()),
        (MatchTerm::Inequality { op, value: rhs }, Some(v)) => match v.as_f64() {
            Some(n) if op.holds(n, *rhs) => Ok(()),
            Some(n) => Err(format!("{n} does not satisfy {} {rhs}", op.as_str())),
            None => Err(format!("inequality {} {rhs} needs a number, found {v}", op.as_str())),
        },
        (MatchTerm::Literal(lit), Some(v)) => {
            let ok = match (lit, v) {
                (Literal::Number(a), Value::Number(b)) => b.as_f64().is_some_and(|b| numbers_equal(*a, b)),
                (Literal::Text(a), Value::String(b)) => a == b,
                (Literal::Bool(a), Value::Bool(b)) => a == b,
                _ => false,
            };
            if ok {
                Ok(())
            } else {
                Err(format!("expected {}, found {v}", lit.to_json()))
            }
        }
    }
}

pub fn match_tree(state: &StateSpec, tree: &Value) -> MatchResult {
    let mut r = MatchResult::default();
    for (path, term) in state.partial.leaves() {
        let value = tree_get(tree, path);
        match match_term(term, value) {
            Ok(()) => {
                if let (MatchTerm::Wildcard | MatchTerm::Placeholder(_), Some(v)) = (term, value) {
                    r.bindings.insert(path.clone(), v.clone());
                }
            }
            Err(reason) => r.failures.push((path.clone(), reason)),
        }
    }
    r.matched = r.failures.is_empty();
    if !r.matched {
        r.bindings.clear();
    }
    r
}

pub fn match_state(state: &StateSpec, vis: &VisSpec) -> MatchResult {
    match_tree(state, &vis.to_tree())
}

/// Indices of non-restricted states the vis matches, in declaration order.
pub fn eligible_entry_indices(morph: &MorphSpec, vis: &VisSpec) -> Vec<usize> {
    let tree = vis.to_tree();
    morph
        .states
        .iter()
        .enumerate()
        .filter(|(_, s)| !s.restrict && match_tree(s, &tree).matched)
        .map(|(i, _)| i)
        .collect()
}

pub fn eligible_entries(morph: &MorphSpec, vis: &VisSpec) -> Vec<String> {
    eligible_entry_indices(morph, vis)
        .into_iter()
        .map(|i| morph.states[i].name.clone())
        .collect()
}
