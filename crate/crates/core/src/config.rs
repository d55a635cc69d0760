use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::DEFAULT_MIN_FIT_N;

/// Standard observation rain-day threshold in mm.
pub const DEFAULT_T_X: f64 = 0.85;

/// Settings of the damped fixed-point threshold calibration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CalibrationConfig {
    /// Tolerance on the conditional probabilities.
    pub epsilon: f64,
    /// Damping factor in (0, 1].
    pub lambda: f64,
    pub max_iterations: usize,
    /// Smallest conditioning set that may drive a threshold update.
    pub min_conditional_n: usize,
}

impl Default for CalibrationConfig {
    fn default() -> Self {
        Self {
            epsilon: 0.01,
            lambda: 0.4,
            max_iterations: 50,
            min_conditional_n: 10,
        }
    }
}

impl CalibrationConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0 && self.lambda <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "lambda {} not in (0, 1]",
                self.lambda
            )));
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "epsilon {} must be positive",
                self.epsilon
            )));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidConfig(
                "max_iterations must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// Settings shared by all four correction methods.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CorrectionConfig {
    pub t_x: f64,
    pub min_fit_n: usize,
    /// Map raw values (not threshold excesses) through the fitted CDFs.
    pub qm_map_raw_values: bool,
    /// Use the wet-state threshold inside the dry-state scaling branch.
    pub dry_scale_uses_wet_threshold: bool,
    pub calibration: CalibrationConfig,
}

impl Default for CorrectionConfig {
    fn default() -> Self {
        Self {
            t_x: DEFAULT_T_X,
            min_fit_n: DEFAULT_MIN_FIT_N,
            qm_map_raw_values: false,
            dry_scale_uses_wet_threshold: false,
            calibration: CalibrationConfig::default(),
        }
    }
}

impl CorrectionConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.t_x >= 0.0 && self.t_x.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "t_x {} must be non-negative",
                self.t_x
            )));
        }
        if self.min_fit_n < 2 {
            return Err(Error::InvalidConfig("min_fit_n must be at least 2".into()));
        }
        self.calibration.validate()
    }
}
