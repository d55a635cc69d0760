use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use mcbc::config::{CalibrationConfig, CorrectionConfig, DEFAULT_T_X};
use mcbc::crossval::BlockScheme;
use mcbc::evaluation::{AnnualConfig, EvalConfig};
use mcbc::qc::QcConfig;
use mcbc::series::PeriodScheme;
use mcbc::stats::DEFAULT_MIN_FIT_N;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationConfig {
    pub name: String,
    /// Gauge CSV; relative paths are resolved against the config file.
    pub gauge: PathBuf,
    /// Model (reanalysis) CSV.
    pub model: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvaluationSettings {
    pub monthly_completeness: f64,
    pub annual: AnnualConfig,
    pub discard_spells_adjacent_missing: bool,
    pub n_harmonics: usize,
    pub day_origin: u32,
}

impl Default for EvaluationSettings {
    fn default() -> Self {
        let e = EvalConfig::default();
        Self {
            monthly_completeness: e.monthly_completeness,
            annual: e.annual,
            discard_spells_adjacent_missing: e.discard_spells_adjacent_missing,
            n_harmonics: e.n_harmonics,
            day_origin: e.day_origin,
        }
    }
}

/// Settings of the `synth` command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthSettings {
    pub stations: usize,
    pub years: u32,
    pub seed: u64,
}

impl Default for SynthSettings {
    fn default() -> Self {
        Self {
            stations: 5,
            years: 50,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub stations: Vec<StationConfig>,
    pub t_x: f64,
    pub scheme: PeriodScheme,
    pub blocks: BlockScheme,
    pub calibration: CalibrationConfig,
    pub min_fit_n: usize,
    pub qm_map_raw_values: bool,
    pub dry_scale_uses_wet_threshold: bool,
    pub qc: QcConfig,
    pub evaluation: EvaluationSettings,
    pub output_dir: PathBuf,
    pub synth: SynthSettings,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            stations: vec![],
            t_x: DEFAULT_T_X,
            scheme: PeriodScheme::default(),
            blocks: BlockScheme::default(),
            calibration: CalibrationConfig::default(),
            min_fit_n: DEFAULT_MIN_FIT_N,
            qm_map_raw_values: false,
            dry_scale_uses_wet_threshold: false,
            qc: QcConfig::default(),
            evaluation: EvaluationSettings::default(),
            output_dir: PathBuf::from("out"),
            synth: SynthSettings::default(),
        }
    }
}

fn valid_name(name: &str) -> bool {
    !name.is_empty()
        && name
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'))
        && !name.starts_with('.')
}

impl RunConfig {
    /// Reads a config file and resolves its relative paths against the
    /// file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let mut cfg: RunConfig = serde_json::from_str(&text)
            .with_context(|| format!("parsing config {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        for s in &mut cfg.stations {
            resolve(&mut s.gauge);
            resolve(&mut s.model);
        }
        resolve(&mut cfg.output_dir);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.correction().validate()?;
        self.eval().validate()?;
        self.qc.validate()?;
        let mut seen = std::collections::BTreeSet::new();
        for s in &self.stations {
            if !valid_name(&s.name) {
                bail!(
                    "station name '{}' may only contain letters, digits, '-', '_' and '.'",
                    s.name
                );
            }
            if !seen.insert(&s.name) {
                bail!("station '{}' is listed twice", s.name);
            }
        }
        if self.synth.stations == 0 || self.synth.years == 0 {
            bail!("synth.stations and synth.years must be positive");
        }
        Ok(())
    }

    pub fn correction(&self) -> CorrectionConfig {
        CorrectionConfig {
            t_x: self.t_x,
            min_fit_n: self.min_fit_n,
            qm_map_raw_values: self.qm_map_raw_values,
            dry_scale_uses_wet_threshold: self.dry_scale_uses_wet_threshold,
            calibration: self.calibration.clone(),
        }
    }

    pub fn eval(&self) -> EvalConfig {
        let e = &self.evaluation;
        EvalConfig {
            t_x: self.t_x,
            monthly_completeness: e.monthly_completeness,
            annual: e.annual,
            discard_spells_adjacent_missing: e.discard_spells_adjacent_missing,
            n_harmonics: e.n_harmonics,
            day_origin: e.day_origin,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_round_trips() {
        let cfg = RunConfig::default();
        let text = serde_json::to_string_pretty(&cfg).unwrap();
        assert_eq!(serde_json::from_str::<RunConfig>(&text).unwrap(), cfg);
        assert_eq!(serde_json::from_str::<RunConfig>("{}").unwrap(), cfg);
    }

    #[test]
    fn station_names() {
        assert!(valid_name("Harare_01"));
        assert!(!valid_name("../x"));
        assert!(!valid_name(""));
    }
}
