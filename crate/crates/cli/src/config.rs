//! `morphkit.toml`: engine settings shared by `run` and `serve`.
//!
//! ```toml
//! dt = 0.016666666666666666   # seconds per tick
//! touch_tolerance = 0.02      # metres
//! snap = 0.5                  # progress at which discrete values switch
//! seed = 7                    # RNG seed for equal-priority tie-breaks
//! ```
//!
//! Every key is optional. The seed resolves as `--seed`, then `DEIMOS_SEED`,
//! then the file, then 0.

use std::path::Path;

use anyhow::Context;
use serde::Deserialize;

use morphkit_core::EngineConfig;

pub const DEFAULT_FILE: &str = "morphkit.toml";

#[derive(Clone, Debug, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub dt: Option<f64>,
    pub touch_tolerance: Option<f64>,
    pub snap: Option<f64>,
    pub seed: Option<u64>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> anyhow::Result<ConfigFile> {
        Ok(toml::from_str(text)?)
    }

    /// Reads `path`, or `morphkit.toml` in the working directory when no
    /// path is given and that file exists.
    pub fn load(path: Option<&Path>) -> anyhow::Result<ConfigFile> {
        let path = match path {
            Some(p) => p,
            None if Path::new(DEFAULT_FILE).is_file() => Path::new(DEFAULT_FILE),
            None => return Ok(ConfigFile::default()),
        };
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
        ConfigFile::parse(&text).with_context(|| format!("bad config {}", path.display()))
    }

    /// Engine settings with `seed` (flag or environment) taking precedence.
    pub fn engine_config(&self, seed: Option<u64>) -> EngineConfig {
        let d = EngineConfig::default();
        EngineConfig {
            dt: self.dt.unwrap_or(d.dt),
            touch_tolerance: self.touch_tolerance.unwrap_or(d.touch_tolerance),
            snap: self.snap.unwrap_or(d.snap),
            seed: seed.or(self.seed).unwrap_or(d.seed),
        }
    }
}
