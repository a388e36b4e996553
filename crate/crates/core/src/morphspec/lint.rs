use std::collections::{BTreeSet, HashSet};

use super::{Diagnostic, Direction, MatchTerm, MorphSpec, Timing, TransitionSpec};
use crate::signals::SignalType;
use crate::visdoc::Literal;

/// Property keys a leg may write, judged from the two state partials alone:
/// every key the destination mentions plus keys only the source mentions
/// (those get removed).
pub fn static_write_set(m: &MorphSpec, t: &TransitionSpec, dir: Direction) -> BTreeSet<String> {
    let (i, f) = t.endpoints(dir);
    let s_i = &m.states[i].partial;
    let s_f = &m.states[f].partial;
    let mut keys: BTreeSet<String> = s_f.leaves().iter().map(|(p, _)| p.property_key()).collect();
    keys.extend(
        s_i.leaves()
            .iter()
            .filter(|(p, _)| s_f.get(p).is_none())
            .map(|(p, _)| p.property_key()),
    );
    keys
}

fn literal_mark(m: &MorphSpec, state: usize) -> Option<&str> {
    m.states[state].partial.leaves().iter().find_map(|(p, t)| match t {
        MatchTerm::Literal(Literal::Text(s)) if p.segments() == ["mark"] => Some(s.as_str()),
        _ => None,
    })
}

fn used_signals(m: &MorphSpec) -> HashSet<String> {
    let g = &m.signals;
    let mut pending: Vec<String> = Vec::new();
    let mut direct = |var: &str| {
        if let Some(name) = g.resolve(var) {
            pending.push(name.to_string());
        }
    };
    for t in &m.transitions {
        if let Some(tr) = &t.trigger {
            tr.expr.variables().into_iter().for_each(&mut direct);
        }
        if let Timing::Signal(s) = &t.control.timing {
            direct(s);
        }
    }
    for s in &m.states {
        for (_, ph) in s.partial.placeholders() {
            ph.signals().iter().for_each(|v| direct(v));
        }
    }
    let mut used = HashSet::new();
    while let Some(n) = pending.pop() {
        if used.insert(n.clone()) {
            pending.extend(g.dependencies(&n).into_iter().map(str::to_string));
        }
    }
    used
}

/// Non-fatal findings. Mark changes across a transition are reported as
/// errors because marks cannot be interpolated.
pub fn lint(m: &MorphSpec) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let mut incoming = vec![0usize; m.states.len()];
    let mut touched = vec![false; m.states.len()];
    for t in &m.transitions {
        touched[t.from] = true;
        touched[t.to] = true;
        for dir in t.legs() {
            incoming[t.endpoints(dir).1] += 1;
        }
    }
    for (i, s) in m.states.iter().enumerate() {
        if s.restrict && incoming[i] == 0 {
            out.push(Diagnostic::warning(
                "UNREACHABLE_STATE",
                format!("/states/{i}"),
                format!("state `{}` is restricted and no transition leads into it", s.name),
            ));
        } else if !touched[i] {
            out.push(Diagnostic::warning(
                "DISCONNECTED_STATE",
                format!("/states/{i}"),
                format!("state `{}` takes part in no transition", s.name),
            ));
        }
    }

    let used = used_signals(m);
    for (i, s) in m.signals.specs().iter().enumerate() {
        if !used.contains(s.name()) {
            out.push(Diagnostic::warning(
                "UNUSED_SIGNAL",
                format!("/signals/{i}"),
                format!("signal `{}` is never referenced", s.name()),
            ));
        }
    }

    for (ti, t) in m.transitions.iter().enumerate() {
        if let Timing::Signal(s) = &t.control.timing {
            let ty = m.signals.var_type(s);
            if !matches!(ty, SignalType::Number | SignalType::Unknown) {
                out.push(Diagnostic::warning(
                    "TIMING_NOT_NUMERIC",
                    format!("/transitions/{ti}/control/timing"),
                    format!("timing signal `{s}` is {}, not numeric", format!("{ty:?}").to_lowercase()),
                ));
            }
        }
        if let (Some(a), Some(b)) = (literal_mark(m, t.from), literal_mark(m, t.to)) {
            if a != b {
                out.push(Diagnostic::error(
                    "MARK_CHANGE",
                    format!("/transitions/{ti}"),
                    format!("transition `{}` changes mark `{a}` to `{b}`; marks cannot be interpolated", t.name),
                ));
            }
        }
    }

    // Legs leaving the same node with equal priority that write the same
    // property can block each other at runtime.
    let legs: Vec<(usize, &TransitionSpec, Direction)> = m
        .transitions
        .iter()
        .enumerate()
        .flat_map(|(i, t)| t.legs().map(move |d| (i, t, d)))
        .collect();
    for (x, (ia, a, da)) in legs.iter().enumerate() {
        for (ib, b, db) in &legs[x + 1..] {
            if ia == ib || a.endpoints(*da).0 != b.endpoints(*db).0 || a.priority != b.priority {
                continue;
            }
            let wa = static_write_set(m, a, *da);
            let wb = static_write_set(m, b, *db);
            let shared: Vec<&str> = wa.intersection(&wb).map(String::as_str).collect();
            if !shared.is_empty() {
                out.push(Diagnostic::warning(
                    "CONFLICT",
                    format!("/transitions/{ib}"),
                    format!(
                        "`{}` and `{}` leave `{}` with equal priority {} and both write {}",
                        a.name,
                        b.name,
                        m.states[a.endpoints(*da).0].name,
                        a.priority,
                        shared.join(", ")
                    ),
                ));
            }
        }
    }
    out
}
