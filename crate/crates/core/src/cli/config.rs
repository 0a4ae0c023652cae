//! Experiment configuration files (JSON).

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::CliError;
use crate::datagen::{dyadic_grid, GeneratorSpec, MAX_DYADIC_LEVEL};
use crate::functional::{check_beta, FunctionalSvmConfig};
use crate::kernel::Grid;

/// A single value or a list to sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany {
    One(f64),
    Many(Vec<f64>),
}

impl OneOrMany {
    pub fn values(&self) -> Vec<f64> {
        match self {
            OneOrMany::One(v) => vec![*v],
            OneOrMany::Many(v) => v.clone(),
        }
    }
}

/// `β` for the `C` schedule: one value for every `d`, or a map keyed by `d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BetaOverride {
    All(f64),
    PerDimension(BTreeMap<String, f64>),
}

impl BetaOverride {
    pub fn for_dimension(&self, d: usize) -> Option<f64> {
        match self {
            BetaOverride::All(b) => Some(*b),
            BetaOverride::PerDimension(map) => map.get(&d.to_string()).copied(),
        }
    }
}

fn default_replicates() -> usize {
    1
}

fn default_test_size() -> usize {
    2000
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("fsvm-out")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub generator: GeneratorSpec,
    pub grid_levels: Vec<u32>,
    pub sample_sizes: Vec<usize>,
    pub gamma: OneOrMany,
    #[serde(default)]
    pub beta: Option<BetaOverride>,
    #[serde(default = "default_replicates")]
    pub replicates: usize,
    #[serde(default = "default_test_size")]
    pub test_size: usize,
    #[serde(default)]
    pub jitter: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    /// Fixed `C` instead of the `n^(1−β)` schedule.
    #[serde(default)]
    pub c_override: Option<f64>,
}

fn invalid(field: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("config field `{field}`: {msg}"))
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("cannot read config {}: {e}", path.display())))?;
        let cfg: Self = serde_json::from_str(&text).map_err(|e| {
            CliError::Config(format!(
                "{}:{}:{}: {e}",
                path.display(),
                e.line(),
                e.column()
            ))
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let g = &self.generator;
        if g.anchor_count == 0 {
            return Err(invalid("generator.anchor_count", "must be positive"));
        }
        if !(g.class_separation > 0.0 && g.class_separation.is_finite()) {
            return Err(invalid(
                "generator.class_separation",
                format!("{} must be > 0", g.class_separation),
            ));
        }
        if !(g.noise_scale >= 0.0 && g.noise_scale.is_finite()) {
            return Err(invalid(
                "generator.noise_scale",
                format!("{} must be >= 0", g.noise_scale),
            ));
        }
        if !(0.0..0.5).contains(&g.flip_prob) {
            return Err(invalid(
                "generator.flip_prob",
                format!("{} must lie in [0, 0.5)", g.flip_prob),
            ));
        }
        if self.grid_levels.is_empty() {
            return Err(invalid("grid_levels", "must not be empty"));
        }
        if let Some(j) = self
            .grid_levels
            .iter()
            .find(|j| !(1..=MAX_DYADIC_LEVEL).contains(j))
        {
            return Err(invalid(
                "grid_levels",
                format!("level {j} outside 1..={MAX_DYADIC_LEVEL}"),
            ));
        }
        if self.sample_sizes.is_empty() {
            return Err(invalid("sample_sizes", "must not be empty"));
        }
        if self.sample_sizes.contains(&0) {
            return Err(invalid("sample_sizes", "sizes must be positive"));
        }
        let gammas = self.gamma.values();
        if gammas.is_empty() {
            return Err(invalid("gamma", "must not be empty"));
        }
        if let Some(v) = gammas.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
            return Err(invalid("gamma", format!("{v} must be > 0")));
        }
        if self.replicates == 0 {
            return Err(invalid("replicates", "must be >= 1"));
        }
        if self.test_size == 0 {
            return Err(invalid("test_size", "must be >= 1"));
        }
        if !(self.jitter >= 0.0 && self.jitter.is_finite()) {
            return Err(invalid("jitter", format!("{} must be >= 0", self.jitter)));
        }
        if let Some(c) = self.c_override {
            if !(c > 0.0 && c.is_finite()) {
                return Err(invalid("c_override", format!("{c} must be > 0")));
            }
        }
        if let Some(beta) = &self.beta {
            if let BetaOverride::PerDimension(map) = beta {
                if let Some(k) = map.keys().find(|k| k.parse::<usize>().is_err()) {
                    return Err(invalid("beta", format!("key {k:?} is not a dimension")));
                }
            }
            for &j in &self.grid_levels {
                let d = 1usize << j;
                if let Some(b) = beta.for_dimension(d) {
                    check_beta(b, d).map_err(|_| {
                        invalid(
                            "beta",
                            format!("{b} for d = {d} must lie in (0, {})", 1.0 / d as f64),
                        )
                    })?;
                }
            }
        }
        Ok(())
    }

    pub fn gammas(&self) -> Vec<f64> {
        self.gamma.values()
    }

    pub fn beta_for(&self, d: usize) -> Option<f64> {
        self.beta.as_ref().and_then(|b| b.for_dimension(d))
    }

    /// Grid of the first configured level; used by `generate` and `fit`.
    pub fn primary_grid(&self) -> Result<Grid, CliError> {
        dyadic_grid(self.grid_levels[0]).map_err(|e| invalid("grid_levels", e))
    }

    /// Fit settings for the first grid level and first `γ`.
    pub fn fit_config(&self) -> Result<FunctionalSvmConfig, CliError> {
        let grid = self.primary_grid()?;
        let beta = self.beta_for(grid.len());
        let cfg = FunctionalSvmConfig {
            spec: self.generator.spec,
            grid,
            gamma: self.gammas()[0],
            jitter: self.jitter,
            beta,
            c_override: self.c_override,
        };
        cfg.validate()
            .map_err(|e| CliError::Config(format!("config: {e}")))?;
        Ok(cfg)
    }
}
