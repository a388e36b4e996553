//! `validate`: parse and lint morph files, optionally explaining how each
//! state matches a set of visualisation specs.

use std::path::PathBuf;

use anyhow::Context;
use serde_json::{json, Value};

use morphkit_core::morphspec::lint;
use morphkit_core::{match_state, parse_morph, Severity, VisSpec};

use crate::{exit_code, expand_paths};

#[derive(Debug, Default)]
pub struct Report {
    pub exit: u8,
    /// Diagnostic records, one JSON object per line.
    pub diagnostics: Vec<Value>,
    /// Match explanations, one per (morph, vis, state).
    pub explain: Vec<Value>,
}

impl Report {
    fn raise(&mut self, code: u8) {
        self.exit = self.exit.max(code);
    }
}

pub fn validate(paths: &[PathBuf], explain: &[PathBuf]) -> anyhow::Result<Report> {
    let mut report = Report::default();
    let mut vis_specs = Vec::new();
    for p in expand_paths(explain)? {
        let text = std::fs::read_to_string(&p).with_context(|| format!("cannot read {}", p.display()))?;
        let spec = VisSpec::parse(&text).with_context(|| format!("bad vis spec {}", p.display()))?;
        vis_specs.push((p, spec));
    }
    for path in expand_paths(paths)? {
        let file = path.display().to_string();
        let record = |d: &morphkit_core::Diagnostic| {
            let mut v = serde_json::to_value(d).expect("diagnostics serialize");
            v["file"] = json!(file);
            v
        };
        let text = match std::fs::read_to_string(&path) {
            Ok(t) => t,
            Err(e) => {
                report.diagnostics.push(json!({"file": file, "severity": "error", "code": "IO",
                                               "location": "", "message": e.to_string()}));
                report.raise(1);
                continue;
            }
        };
        let morph = match parse_morph(&text) {
            Ok(m) => m,
            Err(e) => {
                report.diagnostics.extend(e.diagnostics().iter().map(record));
                report.raise(exit_code(&e));
                continue;
            }
        };
        for d in lint(&morph) {
            if d.severity == Severity::Error {
                report.raise(2);
            }
            report.diagnostics.push(record(&d));
        }
        for (vis_path, vis) in &vis_specs {
            for state in &morph.states {
                let r = match_state(state, vis);
                let failures: Vec<Value> = r
                    .failures
                    .iter()
                    .map(|(p, why)| json!({"path": p.to_string(), "reason": why}))
                    .collect();
                report.explain.push(json!({
                    "morph": morph.name,
                    "vis": vis_path.display().to_string(),
                    "state": state.name,
                    "restrict": state.restrict,
                    "matched": r.matched,
                    "failures": failures,
                }));
            }
        }
    }
    Ok(report)
}
