use std::path::{Path, PathBuf};

use faf_core::ensemble::SweepPlan;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// Environment variable overriding the worker count.
pub const WORKERS_ENV: &str = "FAFSIM_WORKERS";

/// Contents of a `--config` TOML file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Config {
    /// Output directory for `records.csv` and `aggregate.json`.
    pub output: PathBuf,
    pub workers: Option<usize>,
    pub sweep: SweepPlan,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            output: PathBuf::from("fafsim-out"),
            workers: None,
            sweep: SweepPlan::default(),
        }
    }
}

impl Config {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(CliError::io(path))?;
        toml::from_str(&text).map_err(|e| CliError::Config {
            path: path.to_path_buf(),
            message: e.message().to_string(),
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes to TOML")
    }
}

/// Explicit flag, then the config file, then `FAFSIM_WORKERS`, then the
/// number of available cores.
pub fn resolve_workers(flag: Option<usize>, config: Option<usize>) -> usize {
    flag.or(config)
        .or_else(|| std::env::var(WORKERS_ENV).ok().and_then(|v| v.trim().parse().ok()))
        .or_else(|| std::thread::available_parallelism().ok().map(|n| n.get()))
        .unwrap_or(1)
        .max(1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip_through_toml() {
        let cfg = Config::default();
        let back: Config = toml::from_str(&cfg.to_toml()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(toml::from_str::<Config>("[sweep]\nsites = [8]\nbogus = 1\n").is_err());
        assert!(toml::from_str::<Config>("outptu = \"x\"\n").is_err());
    }

    #[test]
    fn partial_config_keeps_defaults() {
        let cfg: Config = toml::from_str("[sweep]\nsites = [8, 10]\nrealizations = 5\n").unwrap();
        assert_eq!(cfg.sweep.sites, vec![8, 10]);
        assert_eq!(cfg.sweep.realizations, 5);
        assert_eq!(cfg.sweep.kmax, SweepPlan::default().kmax);
    }

    #[test]
    fn explicit_workers_win() {
        assert_eq!(resolve_workers(Some(3), Some(5)), 3);
        assert_eq!(resolve_workers(None, Some(5)), 5);
        assert_eq!(resolve_workers(Some(0), None), 1);
    }
}
