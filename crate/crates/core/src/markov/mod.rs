//! Markov-chain bias correction: rain-day thresholds conditioned on the
//! previous day's state, calibrated so the corrected series reproduces the
//! observed wet-to-wet and dry-to-wet transition probabilities.

mod amounts;
mod apply;
mod occurrence;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub use amounts::{
    compute_mc_loci_scales, fit_mc_qm_gammas, McAmountParams, PeriodAmounts, PeriodGammas,
    PeriodScales,
};
pub use apply::{apply_mc_loci, apply_mc_qm, recursion_start};
pub use occurrence::{
    block_lagged_states, calibrate_mc_thresholds, calibrate_period, estimate_all_targets,
    estimate_transition_targets, generate_indicator, stationarity_p0, McThresholds,
    OccurrenceSummary, PeriodTargets, PeriodThresholds, TransitionTargets,
};

use crate::config::CorrectionConfig;
use crate::conventional::Correction;
use crate::error::Result;
use crate::series::{
    lagged_state, pairwise_complete, rain_indicator, DailySeries, PeriodId, PeriodScheme,
};

/// Everything produced by a Markov-chain calibration. Serialised period by
/// period: `{t_x, dry_scale_uses_wet_threshold, periods: {m: {targets, thresholds, amounts}}, warnings}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "McParamsRepr", from = "McParamsRepr")]
pub struct McParams {
    pub t_x: f64,
    #[serde(default)]
    pub dry_scale_uses_wet_threshold: bool,
    pub targets: TransitionTargets,
    pub thresholds: McThresholds,
    pub amounts: McAmountParams,
    #[serde(default)]
    pub warnings: Vec<String>,
}

#[derive(Serialize, Deserialize)]
struct McPeriodRepr {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    targets: Option<PeriodTargets>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    thresholds: Option<PeriodThresholds>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    amounts: Option<PeriodAmounts>,
}

#[derive(Serialize, Deserialize)]
struct McParamsRepr {
    t_x: f64,
    #[serde(default)]
    dry_scale_uses_wet_threshold: bool,
    periods: BTreeMap<PeriodId, McPeriodRepr>,
    #[serde(default)]
    warnings: Vec<String>,
}

impl From<McParams> for McParamsRepr {
    fn from(p: McParams) -> Self {
        let mut periods: BTreeMap<PeriodId, McPeriodRepr> = BTreeMap::new();
        fn slot(periods: &mut BTreeMap<PeriodId, McPeriodRepr>, m: PeriodId) -> &mut McPeriodRepr {
            periods.entry(m).or_insert(McPeriodRepr {
                targets: None,
                thresholds: None,
                amounts: None,
            })
        }
        for (m, t) in p.targets.periods {
            slot(&mut periods, m).targets = Some(t);
        }
        for (m, t) in p.thresholds.periods {
            slot(&mut periods, m).thresholds = Some(t);
        }
        for (m, a) in p.amounts.periods {
            slot(&mut periods, m).amounts = Some(a);
        }
        McParamsRepr {
            t_x: p.t_x,
            dry_scale_uses_wet_threshold: p.dry_scale_uses_wet_threshold,
            periods,
            warnings: p.warnings,
        }
    }
}

impl From<McParamsRepr> for McParams {
    fn from(r: McParamsRepr) -> Self {
        let mut p = McParams {
            t_x: r.t_x,
            dry_scale_uses_wet_threshold: r.dry_scale_uses_wet_threshold,
            targets: TransitionTargets::default(),
            thresholds: McThresholds::default(),
            amounts: McAmountParams::default(),
            warnings: r.warnings,
        };
        for (m, period) in r.periods {
            if let Some(t) = period.targets {
                p.targets.periods.insert(m, t);
            }
            if let Some(t) = period.thresholds {
                p.thresholds.periods.insert(m, t);
            }
            if let Some(a) = period.amounts {
                p.amounts.periods.insert(m, a);
            }
        }
        p
    }
}

/// Calibrates thresholds and amount parameters on the days where both series
/// are present. Gamma pairs are fitted only when `with_gamma` is set.
pub fn calibrate_mc(
    obs: &DailySeries,
    model: &DailySeries,
    scheme: &PeriodScheme,
    cfg: &CorrectionConfig,
    with_gamma: bool,
) -> Result<McParams> {
    cfg.validate()?;
    let (obs, model) = pairwise_complete(obs, model)?;
    let obs_ind = rain_indicator(&obs, cfg.t_x);
    let obs_lag = lagged_state(&obs_ind);
    let targets = estimate_all_targets(&obs_ind, &obs_lag, scheme);
    let thresholds = calibrate_mc_thresholds(&model, &targets, scheme, &cfg.calibration)?;
    let model_lag = block_lagged_states(&model, &thresholds, scheme);
    let amounts = if with_gamma {
        fit_mc_qm_gammas(
            &obs,
            &model,
            &obs_lag,
            &model_lag,
            &thresholds,
            scheme,
            cfg.t_x,
            cfg.min_fit_n,
        )
    } else {
        compute_mc_loci_scales(
            &obs,
            &model,
            &obs_lag,
            &model_lag,
            &thresholds,
            scheme,
            cfg.t_x,
        )
    };

    let mut warnings = Vec::new();
    for m in scheme.periods() {
        if !thresholds.periods.contains_key(&m) {
            warnings.push(format!("period {m}: no paired data, period not calibrated"));
        }
    }
    for (m, th) in &thresholds.periods {
        warnings.extend(th.warnings.iter().map(|w| format!("period {m}: {w}")));
    }
    for (m, a) in &amounts.periods {
        warnings.extend(a.fit_warnings.iter().map(|w| format!("period {m}: {w}")));
    }
    Ok(McParams {
        t_x: cfg.t_x,
        dry_scale_uses_wet_threshold: cfg.dry_scale_uses_wet_threshold,
        targets,
        thresholds,
        amounts,
        warnings,
    })
}

impl McParams {
    pub fn apply_loci(&self, model: &DailySeries, scheme: &PeriodScheme) -> Result<Correction> {
        apply_mc_loci(
            model,
            &self.thresholds,
            &self.amounts,
            scheme,
            self.t_x,
            self.dry_scale_uses_wet_threshold,
        )
    }

    pub fn apply_qm(&self, model: &DailySeries, scheme: &PeriodScheme) -> Result<Correction> {
        apply_mc_qm(model, &self.thresholds, &self.amounts, scheme, self.t_x)
    }
}
