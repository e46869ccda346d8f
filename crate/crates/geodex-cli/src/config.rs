//! Flat key=value run configuration. Keys are namespaced per subcommand
//! (`expand.p`, `fit.family`, ...); unknown keys are rejected; CLI flags
//! take precedence over file values.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use crate::error::{CliError, CliResult};

/// Every key the toolkit understands.
pub const KNOWN_KEYS: &[&str] = &[
    "variogram.n_bins",
    "variogram.h_max",
    "fit.family",
    "fit.nugget",
    "fit.n_bins",
    "fit.h_max",
    "krige.sigma_f2",
    "krige.length_scale",
    "krige.noise",
    "krige.optimize",
    "krige.mean",
    "equiv.trials",
    "equiv.max_n",
    "equiv.max_m",
    "expand.p",
    "expand.lambda",
    "expand.max_iters",
    "expand.tolerance",
    "expand.optimizer",
    "synth.generator",
    "synth.nx",
    "synth.ny",
    "synth.spacing",
    "synth.sigma_f2",
    "synth.length_scale",
    "synth.noise",
    "synth.gap",
    "synth.geometry",
    "synth.n_sample",
];

#[derive(Debug, Default, Clone)]
pub struct RunConfig {
    map: BTreeMap<String, String>,
}

impl RunConfig {
    pub fn empty() -> Self {
        RunConfig::default()
    }

    /// Parse a config file: one `key=value` per line, `#` comments and blank
    /// lines ignored. Unknown keys are rejected.
    pub fn load(path: &Path) -> CliResult<Self> {
        let content = std::fs::read_to_string(path)?;
        let mut map = BTreeMap::new();
        for (k, raw) in content.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(CliError::Parse {
                    line: k + 1,
                    message: format!("expected key=value, found '{raw}'"),
                });
            };
            let key = key.trim();
            if !KNOWN_KEYS.contains(&key) {
                return Err(CliError::Validation(format!("unknown config key '{key}'")));
            }
            map.insert(key.to_string(), value.trim().to_string());
        }
        Ok(RunConfig { map })
    }

    /// Typed lookup; `None` when the key is absent.
    pub fn get<T: FromStr>(&self, key: &str) -> CliResult<Option<T>> {
        debug_assert!(KNOWN_KEYS.contains(&key), "lookup of unregistered key {key}");
        match self.map.get(key) {
            None => Ok(None),
            Some(raw) => raw.parse::<T>().map(Some).map_err(|_| {
                CliError::Validation(format!("config value '{raw}' invalid for {key}"))
            }),
        }
    }
}

/// CLI flag, then config value, then default.
pub fn resolve<T: FromStr + Clone>(
    flag: &Option<T>,
    config: &RunConfig,
    key: &str,
    default: T,
) -> CliResult<T> {
    if let Some(v) = flag {
        return Ok(v.clone());
    }
    Ok(config.get::<T>(key)?.unwrap_or(default))
}

/// Like [`resolve`] but without a default (optional setting).
pub fn resolve_opt<T: FromStr + Clone>(
    flag: &Option<T>,
    config: &RunConfig,
    key: &str,
) -> CliResult<Option<T>> {
    if let Some(v) = flag {
        return Ok(Some(v.clone()));
    }
    config.get::<T>(key)
}
