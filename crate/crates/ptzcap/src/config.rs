//! Optional TOML configuration. Every key is optional and overrides the
//! defaults of the selected mode; command-line flags override the file.
//!
//! ```toml
//! [solver]
//! outer_iters = 200
//! pose_basis = 25
//!
//! [weights]
//! lambda_rot = 1e4
//!
//! [ransac]
//! threshold_px = 2.0
//!
//! [metrics]
//! fps = 50.0
//! ```

use std::path::{Path, PathBuf};

use ptzcap_core::energy::EnergyWeights;
use ptzcap_core::metrics::EvaluationConfig;
use ptzcap_core::rotation_from_background::RansacConfig;
use ptzcap_core::solver::SolverConfig;
use serde::{Deserialize, Serialize};

use crate::error::FormatError;

/// Environment variable holding the default config path.
pub const CONFIG_ENV: &str = "PTZCAP_CONFIG";

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    pub step_length: Option<f64>,
    pub outer_iters: Option<usize>,
    pub max_inner_iters: Option<usize>,
    pub history_size: Option<usize>,
    pub init_spread_m: Option<f64>,
    pub bootstrap_iters: Option<usize>,
    pub seed: Option<u64>,
    pub pose_basis: Option<usize>,
    pub camera_basis: Option<usize>,
    pub tolerance: Option<f64>,
    pub patience: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightsSection {
    pub lambda_rep: Option<f64>,
    pub lambda_limbs: Option<f64>,
    pub lambda_rot: Option<f64>,
    pub sigma_sq: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RansacSection {
    pub threshold_px: Option<f64>,
    pub max_iters: Option<usize>,
    pub seed: Option<u64>,
    pub confidence: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricsSection {
    pub fps: Option<f64>,
    pub speed_sigma: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub weights: WeightsSection,
    #[serde(default)]
    pub ransac: RansacSection,
    #[serde(default)]
    pub metrics: MetricsSection,
}

macro_rules! apply {
    ($target:expr, $section:expr, [$($field:ident),*]) => {
        $(if let Some(v) = $section.$field { $target.$field = v; })*
    };
}

impl SolverSection {
    pub fn apply(&self, cfg: &mut SolverConfig) {
        apply!(
            cfg,
            self,
            [
                step_length,
                outer_iters,
                max_inner_iters,
                history_size,
                init_spread_m,
                bootstrap_iters,
                seed,
                pose_basis,
                camera_basis,
                tolerance,
                patience
            ]
        );
    }
}

impl WeightsSection {
    pub fn apply(&self, w: &mut EnergyWeights) {
        apply!(w, self, [lambda_rep, lambda_limbs, lambda_rot, sigma_sq]);
    }
}

impl RansacSection {
    pub fn apply(&self, cfg: &mut RansacConfig) {
        apply!(cfg, self, [threshold_px, max_iters, seed, confidence]);
    }
}

impl MetricsSection {
    pub fn apply(&self, cfg: &mut EvaluationConfig) {
        apply!(cfg, self, [fps, speed_sigma]);
    }
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self, FormatError> {
        toml::from_str(text).map_err(|e| FormatError::Toml(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, FormatError> {
        let text = std::fs::read_to_string(path).map_err(|e| FormatError::Open {
            path: path.display().to_string(),
            source: e,
        })?;
        Self::parse(&text)
    }

    /// Loads `explicit`, else the file named by [`CONFIG_ENV`], else
    /// returns the empty configuration.
    pub fn resolve(explicit: Option<&Path>) -> Result<Self, FormatError> {
        let path = explicit
            .map(Path::to_path_buf)
            .or_else(|| std::env::var_os(CONFIG_ENV).map(PathBuf::from));
        match path {
            Some(p) => Self::load(&p),
            None => Ok(Self::default()),
        }
    }
}
