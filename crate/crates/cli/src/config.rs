//! Run configuration files.

use std::path::{Path, PathBuf};

use pmm_core::Variant;
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const CONFIG_SCHEMA_VERSION: u32 = 1;
pub const WORKERS_ENV: &str = "PMM_WORKERS";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ProblemConfig {
    Socp {
        seed: u64,
        n: usize,
        p: usize,
        /// Number of equal second-order cones splitting `n`.
        cones: usize,
    },
    Lmi {
        seed: u64,
        q: usize,
        k: usize,
        #[serde(default = "default_rank")]
        rank: usize,
    },
    SharpL1 {
        n: usize,
        /// Seed of the random starting point.
        #[serde(default)]
        seed: u64,
    },
    /// An instance written by `pmm gen`.
    CustomFromFile {
        path: PathBuf,
        #[serde(default = "default_rank")]
        rank: usize,
    },
}

fn default_rank() -> usize {
    2
}

fn default_epsilon() -> f64 {
    1e-6
}

fn default_max_iterations() -> usize {
    5000
}

fn default_workers() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    pub problem: ProblemConfig,
    pub memory: Vec<usize>,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default = "default_max_iterations")]
    pub max_iterations: usize,
    #[serde(default)]
    pub variant: Variant,
    pub output_dir: PathBuf,
    #[serde(default = "default_workers")]
    pub workers: usize,
}

impl RunConfig {
    /// Reads a config; relative paths inside it resolve against its directory.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg: RunConfig = serde_json::from_str(&text)
            .map_err(|e| CliError::Usage(format!("invalid config {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        if cfg.output_dir.is_relative() {
            cfg.output_dir = base.join(&cfg.output_dir);
        }
        if let ProblemConfig::CustomFromFile { path, .. } = &mut cfg.problem {
            if path.is_relative() {
                *path = base.join(&*path);
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Usage(m));
        if self.schema_version != CONFIG_SCHEMA_VERSION {
            return bad(format!(
                "unsupported schema_version {} (expected {CONFIG_SCHEMA_VERSION})",
                self.schema_version
            ));
        }
        if self.memory.is_empty() {
            return bad("memory list is empty".into());
        }
        if !(self.epsilon > 0.0) || !self.epsilon.is_finite() {
            return bad(format!("epsilon must be positive and finite, got {}", self.epsilon));
        }
        if self.max_iterations == 0 {
            return bad("max_iterations must be at least 1".into());
        }
        if self.workers == 0 {
            return bad("workers must be at least 1".into());
        }
        if !self.output_dir.is_dir() {
            return bad(format!("output directory {} does not exist", self.output_dir.display()));
        }
        Ok(())
    }

    /// Worker slots after applying the environment cap.
    pub fn effective_workers(&self) -> Result<usize, CliError> {
        let cap = match std::env::var(WORKERS_ENV) {
            Ok(v) => match v.trim().parse::<usize>() {
                Ok(n) if n >= 1 => n,
                _ => return Err(CliError::Usage(format!("{WORKERS_ENV} must be a positive integer, got {v:?}"))),
            },
            Err(_) => usize::MAX,
        };
        Ok(self.workers.min(cap).min(self.memory.len()).max(1))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(json: &str) -> Result<RunConfig, serde_json::Error> {
        serde_json::from_str(json)
    }

    #[test]
    fn defaults_fill_optional_fields() {
        let cfg = parse(r#"{"schema_version":1,"problem":{"kind":"sharp-l1","n":10},"memory":[0],"output_dir":"."}"#).unwrap();
        assert_eq!(cfg.epsilon, 1e-6);
        assert_eq!(cfg.max_iterations, 5000);
        assert_eq!(cfg.variant, Variant::Standard);
        assert_eq!(cfg.workers, 1);
        assert_eq!(cfg.problem, ProblemConfig::SharpL1 { n: 10, seed: 0 });
    }

    #[test]
    fn lmi_rank_defaults_to_two() {
        let cfg = parse(r#"{"schema_version":1,"problem":{"kind":"lmi","seed":3,"q":4,"k":2},"memory":[5],"output_dir":"."}"#).unwrap();
        assert_eq!(cfg.problem, ProblemConfig::Lmi { seed: 3, q: 4, k: 2, rank: 2 });
    }

    #[test]
    fn validation_rejects_bad_values() {
        let base = r#"{"schema_version":1,"problem":{"kind":"sharp-l1","n":3},"memory":[0],"output_dir":"."}"#;
        let cfg = parse(base).unwrap();
        assert!(cfg.validate().is_ok());
        for change in [
            RunConfig { memory: vec![], ..cfg.clone() },
            RunConfig { epsilon: 0.0, ..cfg.clone() },
            RunConfig { schema_version: 2, ..cfg.clone() },
            RunConfig { workers: 0, ..cfg.clone() },
            RunConfig { output_dir: "/definitely/not/here".into(), ..cfg.clone() },
        ] {
            assert!(matches!(change.validate(), Err(CliError::Usage(_))));
        }
        assert!(parse(r#"{"schema_version":1,"problem":{"kind":"qp"},"memory":[0],"output_dir":"."}"#).is_err());
    }
}
