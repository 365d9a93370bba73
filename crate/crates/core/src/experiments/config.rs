use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::pi::EngineConfig;
use crate::tensor::MAX_DEGREE;

/// Parameters shared by every experiment. Missing fields take their defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub n_samples: usize,
    pub lambda_ladder: Vec<f64>,
    pub t_max: f64,
    /// Fiber-mode cutoff of random fields.
    #[serde(rename = "K")]
    pub k: usize,
    pub basis_size: usize,
    #[serde(rename = "census_L")]
    pub census_l: f64,
    pub m: usize,
    pub output_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        let e = EngineConfig::default();
        RunConfig {
            seed: e.seed,
            n_samples: e.n_samples,
            lambda_ladder: e.ladder,
            t_max: e.t_max,
            k: 8,
            basis_size: 12,
            census_l: 8.0,
            m: 0,
            output_dir: PathBuf::from("out"),
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(LabError::Config(msg));
        if self.n_samples == 0 || self.k == 0 || self.basis_size == 0 {
            return bad("n_samples, K and basis_size must be at least 1".into());
        }
        if self.lambda_ladder.is_empty() || self.lambda_ladder.iter().any(|l| !(l.is_finite() && *l > 0.0)) {
            return bad(format!("λ values must be positive and finite: {:?}", self.lambda_ladder));
        }
        if self.lambda_ladder.windows(2).any(|w| w[1] >= w[0]) {
            return bad(format!("λ-ladder must be strictly decreasing: {:?}", self.lambda_ladder));
        }
        if !(self.t_max.is_finite() && self.t_max > 0.0) {
            return bad(format!("t_max must be positive, got {}", self.t_max));
        }
        if !(self.census_l.is_finite() && self.census_l > 0.0) {
            return bad(format!("census_L must be positive, got {}", self.census_l));
        }
        if self.m >= MAX_DEGREE {
            return bad(format!("degree m = {} exceeds {}", self.m, MAX_DEGREE - 1));
        }
        Ok(())
    }

    /// Monte-Carlo settings. Small sample counts use fewer batches.
    pub fn engine(&self) -> EngineConfig {
        let d = EngineConfig::default();
        EngineConfig {
            n_samples: self.n_samples,
            n_batches: d.n_batches.min(self.n_samples),
            t_max: self.t_max,
            ladder: self.lambda_ladder.clone(),
            seed: self.seed,
            ..d
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let c: RunConfig = serde_json::from_str(text).map_err(|e| LabError::Config(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| LabError::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}
