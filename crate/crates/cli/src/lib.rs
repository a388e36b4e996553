//! Library side of the `morphkit` command: each subcommand is a function
//! returning its outputs, so tests can drive them without a subprocess.

pub mod config;
pub mod run;
pub mod validate;

use std::fmt;
use std::path::{Path, PathBuf};

use anyhow::Context;

use morphkit_core::{parse_morph, MorphError, MorphSpec};

/// A failure with a specific process exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for Failure {}

/// Exit code contract: 1 for syntax or schema errors, 2 for semantic ones.
pub fn exit_code(e: &MorphError) -> u8 {
    match e {
        MorphError::Syntax(_) | MorphError::Schema(_) => 1,
        MorphError::Semantic(_) => 2,
    }
}

/// Expands directories into their `*.json` files, sorted by name.
pub fn expand_paths(paths: &[PathBuf]) -> anyhow::Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for p in paths {
        if p.is_dir() {
            let mut files: Vec<PathBuf> = std::fs::read_dir(p)
                .with_context(|| format!("cannot list {}", p.display()))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|f| f.extension().is_some_and(|x| x == "json"))
                .collect();
            files.sort();
            out.extend(files);
        } else {
            out.push(p.clone());
        }
    }
    Ok(out)
}

/// Reads and parses one morph file. Parse errors become a [`Failure`]
/// carrying the diagnostics and the matching exit code.
pub fn load_morph(path: &Path) -> anyhow::Result<MorphSpec> {
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    parse_morph(&text).map_err(|e| {
        let lines: Vec<String> = e.diagnostics().iter().map(|d| format!("{}: {d}", path.display())).collect();
        Failure {
            code: exit_code(&e),
            message: lines.join("\n"),
        }
        .into()
    })
}

pub fn load_morphs(paths: &[PathBuf]) -> anyhow::Result<Vec<MorphSpec>> {
    expand_paths(paths)?.iter().map(|p| load_morph(p)).collect()
}

/// `export-dot`: the state machine of one morph file.
pub fn export_dot(path: &Path) -> anyhow::Result<String> {
    Ok(morphkit_core::morphspec::export_dot(&load_morph(path)?))
}
