//! Local intensity scaling (LOCI) and parametric quantile mapping (QM).
//!
//! Both methods share the occurrence step: a per-period model threshold whose
//! exceedance frequency matches the observed rain-day frequency. LOCI then
//! rescales mean excess intensity; QM maps excesses through fitted Gammas.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::config::CorrectionConfig;
use crate::error::{Error, Result};
use crate::series::{pairwise_complete, DailySeries, PeriodId, PeriodScheme};
use crate::stats::{
    exceedance_fraction, gamma_fit, sorted_present, threshold_for_frequency_sorted, GammaParams,
    IntensityDistribution,
};

/// Observation and model distributions for one quantile map.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaPair {
    pub obs: GammaParams,
    pub model: GammaParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvPeriodParams {
    pub threshold_ty: f64,
    pub obs_threshold_tx: f64,
    /// Observed rain-day frequency (the target).
    pub obs_wet_fraction: f64,
    /// Model exceedance frequency of `threshold_ty` on the calibration days.
    pub model_exceedance: f64,
    pub n_days: usize,
    pub n_obs_wet: usize,
    pub n_model_wet: usize,
    pub loci_scale_s: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<GammaPair>,
    #[serde(default)]
    pub fit_warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvParams {
    pub t_x: f64,
    #[serde(default)]
    pub qm_map_raw_values: bool,
    pub periods: BTreeMap<PeriodId, ConvPeriodParams>,
    #[serde(default)]
    pub warnings: Vec<String>,
}

/// A corrected series plus anything worth telling the user about it.
#[derive(Debug, Clone, PartialEq)]
pub struct Correction {
    pub series: DailySeries,
    pub warnings: Vec<String>,
}

pub fn calibrate_loci(
    obs: &DailySeries,
    model: &DailySeries,
    scheme: &PeriodScheme,
    cfg: &CorrectionConfig,
) -> Result<ConvParams> {
    calibrate(obs, model, scheme, cfg, false)
}

pub fn calibrate_qm(
    obs: &DailySeries,
    model: &DailySeries,
    scheme: &PeriodScheme,
    cfg: &CorrectionConfig,
) -> Result<ConvParams> {
    calibrate(obs, model, scheme, cfg, true)
}

/// Present values of `series` falling in period `m`.
pub(crate) fn period_values(series: &DailySeries, scheme: &PeriodScheme, m: PeriodId) -> Vec<f64> {
    series
        .values()
        .iter()
        .enumerate()
        .filter(|(i, _)| scheme.period_of(series.date(*i)) == m)
        .filter_map(|(_, v)| *v)
        .collect()
}

/// Mean of `x - threshold` over values strictly above `threshold`.
pub(crate) fn mean_excess(values: &[f64], threshold: f64) -> Option<f64> {
    let ex: Vec<f64> = values
        .iter()
        .filter(|&&x| x > threshold)
        .map(|x| x - threshold)
        .collect();
    crate::stats::mean(&ex)
}

/// Ratio of mean excesses, `None` when either side is empty or degenerate.
pub(crate) fn scale_factor(
    obs_excess_mean: Option<f64>,
    model_excess_mean: Option<f64>,
) -> Option<f64> {
    match (obs_excess_mean, model_excess_mean) {
        (Some(o), Some(m)) if o > 0.0 && m > 0.0 => Some(o / m),
        _ => None,
    }
}

fn calibrate(
    obs: &DailySeries,
    model: &DailySeries,
    scheme: &PeriodScheme,
    cfg: &CorrectionConfig,
    with_gamma: bool,
) -> Result<ConvParams> {
    cfg.validate()?;
    let (obs, model) = pairwise_complete(obs, model)?;
    let t_x = cfg.t_x;
    let mut periods = BTreeMap::new();
    let mut warnings = Vec::new();

    for m in scheme.periods() {
        let x = period_values(&obs, scheme, m);
        let y = sorted_present(&period_values(&model, scheme, m));
        if x.is_empty() {
            warnings.push(format!("period {m}: no paired data, period not calibrated"));
            continue;
        }
        let mut fit_warnings = Vec::new();
        let p_obs = exceedance_fraction(&x, t_x).unwrap_or(0.0);
        let t_y = threshold_for_frequency_sorted(&y, p_obs)?;
        let n_obs_wet = x.iter().filter(|&&v| v > t_x).count();
        let n_model_wet = y.iter().filter(|&&v| v > t_y).count();

        let s = match scale_factor(mean_excess(&x, t_x), mean_excess(&y, t_y)) {
            Some(s) => s,
            None => {
                fit_warnings.push(format!(
                    "scale undefined ({n_obs_wet} observed and {n_model_wet} model rain days); using 1"
                ));
                1.0
            }
        };

        let gamma = if with_gamma {
            let (xs, ys): (Vec<f64>, Vec<f64>) = if cfg.qm_map_raw_values {
                (
                    x.iter().copied().filter(|&v| v > t_x).collect(),
                    y.iter().copied().filter(|&v| v > t_y).collect(),
                )
            } else {
                (
                    x.iter().filter(|&&v| v > t_x).map(|v| v - t_x).collect(),
                    y.iter().filter(|&&v| v > t_y).map(|v| v - t_y).collect(),
                )
            };
            match fit_pair(&xs, &ys, cfg.min_fit_n) {
                Ok(pair) => Some(pair),
                Err(e) => {
                    fit_warnings.push(format!(
                        "gamma fit failed ({e}); falling back to LOCI scaling"
                    ));
                    None
                }
            }
        } else {
            None
        };

        warnings.extend(fit_warnings.iter().map(|w| format!("period {m}: {w}")));
        periods.insert(
            m,
            ConvPeriodParams {
                threshold_ty: t_y,
                obs_threshold_tx: t_x,
                obs_wet_fraction: p_obs,
                model_exceedance: exceedance_fraction(&y, t_y).unwrap_or(0.0),
                n_days: x.len(),
                n_obs_wet,
                n_model_wet,
                loci_scale_s: s,
                gamma,
                fit_warnings,
            },
        );
    }
    Ok(ConvParams {
        t_x,
        qm_map_raw_values: cfg.qm_map_raw_values,
        periods,
        warnings,
    })
}

pub(crate) fn fit_pair(obs: &[f64], model: &[f64], min_fit_n: usize) -> Result<GammaPair> {
    Ok(GammaPair {
        obs: gamma_fit(obs, min_fit_n)?,
        model: gamma_fit(model, min_fit_n)?,
    })
}

/// `t_x + excess`, nudged up by one ulp if the sum rounds back to `t_x`, so
/// that a wet model day always yields a corrected value strictly above `t_x`.
pub(crate) fn wet_value(t_x: f64, excess: f64) -> f64 {
    let v = t_x + excess.max(0.0);
    if v > t_x {
        v
    } else {
        t_x.next_up()
    }
}

/// Standard LOCI adjustment: zero below the threshold, otherwise the scaled
/// excess added to `t_x`. A value exactly at the threshold maps to `t_x`.
pub(crate) fn loci_value(y: f64, threshold: f64, scale: f64, t_x: f64) -> f64 {
    if y < threshold {
        0.0
    } else if y == threshold {
        t_x
    } else {
        wet_value(t_x, scale * (y - threshold))
    }
}

/// Scaled-excess branch used after a known previous state: zero at or below
/// the threshold.
pub(crate) fn scaled_excess_value(y: f64, threshold: f64, scale: f64, t_x: f64) -> f64 {
    if y <= threshold {
        0.0
    } else {
        wet_value(t_x, scale * (y - threshold))
    }
}

const SATURATION_LEVEL: f64 = 1.0 - 1e-12;

/// Quantile map of the excess over `threshold`; zero at or below it.
pub(crate) fn qm_value<D: IntensityDistribution>(
    y: f64,
    threshold: f64,
    obs: &D,
    model: &D,
    t_x: f64,
    saturated: &mut bool,
) -> Result<f64> {
    if y <= threshold {
        return Ok(0.0);
    }
    let mut u = model.cdf(y - threshold);
    if u >= SATURATION_LEVEL {
        u = SATURATION_LEVEL;
        *saturated = true;
    }
    Ok(wet_value(t_x, obs.inv_cdf(u)?))
}

/// Quantile map of the raw value, as printed for the conventional method.
fn qm_literal_value<D: IntensityDistribution>(
    y: f64,
    threshold: f64,
    obs: &D,
    model: &D,
    saturated: &mut bool,
) -> Result<f64> {
    if y < threshold {
        return Ok(0.0);
    }
    let mut u = model.cdf(y);
    if u >= SATURATION_LEVEL {
        u = SATURATION_LEVEL;
        *saturated = true;
    }
    obs.inv_cdf(u)
}

fn period_params(
    params: &BTreeMap<PeriodId, ConvPeriodParams>,
    m: PeriodId,
) -> Result<&ConvPeriodParams> {
    params
        .get(&m)
        .ok_or_else(|| Error::Mismatch(format!("no calibrated parameters for period {m}")))
}

pub fn apply_loci(
    model: &DailySeries,
    params: &ConvParams,
    scheme: &PeriodScheme,
) -> Result<DailySeries> {
    let mut out = Vec::with_capacity(model.len());
    for (i, v) in model.values().iter().enumerate() {
        out.push(match v {
            None => None,
            Some(y) => {
                let p = period_params(&params.periods, scheme.period_of(model.date(i)))?;
                Some(loci_value(*y, p.threshold_ty, p.loci_scale_s, params.t_x))
            }
        });
    }
    Ok(DailySeries::from_parts_unchecked(model.start(), out))
}

pub fn apply_qm(
    model: &DailySeries,
    params: &ConvParams,
    scheme: &PeriodScheme,
) -> Result<Correction> {
    let mut out = Vec::with_capacity(model.len());
    let mut warnings = Vec::new();
    for (i, v) in model.values().iter().enumerate() {
        let Some(y) = *v else {
            out.push(None);
            continue;
        };
        let date = model.date(i);
        let p = period_params(&params.periods, scheme.period_of(date))?;
        let mut saturated = false;
        let value = match (&p.gamma, params.qm_map_raw_values) {
            (Some(g), false) => qm_value(
                y,
                p.threshold_ty,
                &g.obs,
                &g.model,
                params.t_x,
                &mut saturated,
            )?,
            (Some(g), true) => {
                qm_literal_value(y, p.threshold_ty, &g.obs, &g.model, &mut saturated)?
            }
            (None, _) => loci_value(y, p.threshold_ty, p.loci_scale_s, params.t_x),
        };
        if saturated {
            warnings.push(format!(
                "{date}: model CDF saturated at {y} mm; mapped through 1 - 1e-12"
            ));
        }
        out.push(Some(value));
    }
    Ok(Correction {
        series: DailySeries::from_parts_unchecked(model.start(), out),
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::NaiveDate;

    fn start() -> NaiveDate {
        NaiveDate::from_ymd_opt(2001, 1, 1).unwrap()
    }

    fn single_period_params(t_y: f64, s: f64, gamma: Option<GammaPair>) -> ConvParams {
        let p = ConvPeriodParams {
            threshold_ty: t_y,
            obs_threshold_tx: 0.85,
            obs_wet_fraction: 0.5,
            model_exceedance: 0.5,
            n_days: 0,
            n_obs_wet: 0,
            n_model_wet: 0,
            loci_scale_s: s,
            gamma,
            fit_warnings: vec![],
        };
        ConvParams {
            t_x: 0.85,
            qm_map_raw_values: false,
            periods: (1..=12).map(|m| (m, p.clone())).collect(),
            warnings: vec![],
        }
    }

    #[test]
    fn loci_branches() {
        let params = single_period_params(2.0, 1.5, None);
        let s = DailySeries::new(start(), vec![Some(4.0), Some(1.0), Some(2.0), None]).unwrap();
        let out = apply_loci(&s, &params, &PeriodScheme::monthly()).unwrap();
        assert!((out.values()[0].unwrap() - 3.85).abs() < 1e-12);
        assert_eq!(out.values()[1], Some(0.0));
        assert_eq!(out.values()[2], Some(0.85));
        assert_eq!(out.values()[3], None);
    }

    #[test]
    fn qm_identity_and_scale_doubling() {
        let g = GammaParams::new(0.9, 6.0).unwrap();
        let ident = single_period_params(2.0, 1.0, Some(GammaPair { obs: g, model: g }));
        let s =
            DailySeries::new(start(), vec![Some(1.0), Some(2.0), Some(7.5), Some(30.0)]).unwrap();
        let out = apply_qm(&s, &ident, &PeriodScheme::monthly())
            .unwrap()
            .series;
        assert_eq!(out.values()[0], Some(0.0));
        assert_eq!(out.values()[1], Some(0.0));
        assert!((out.values()[2].unwrap() - (5.5 + 0.85)).abs() < 1e-8);
        assert!((out.values()[3].unwrap() - (28.0 + 0.85)).abs() < 1e-8);

        let doubled = GammaParams::new(0.9, 12.0).unwrap();
        let dbl = single_period_params(
            2.0,
            1.0,
            Some(GammaPair {
                obs: doubled,
                model: g,
            }),
        );
        let out = apply_qm(&s, &dbl, &PeriodScheme::monthly()).unwrap().series;
        assert!((out.values()[2].unwrap() - 0.85 - 2.0 * 5.5).abs() < 1e-8 * 11.0);
        assert!((out.values()[3].unwrap() - 0.85 - 2.0 * 28.0).abs() < 1e-8 * 56.0);
    }

    #[test]
    fn qm_saturation_warns() {
        let obs = GammaParams::new(1.0, 1.0).unwrap();
        let model = GammaParams::new(1.0, 0.01).unwrap();
        let p = single_period_params(0.0, 1.0, Some(GammaPair { obs, model }));
        let s = DailySeries::new(start(), vec![Some(100.0)]).unwrap();
        let c = apply_qm(&s, &p, &PeriodScheme::monthly()).unwrap();
        assert_eq!(c.warnings.len(), 1);
        assert!(c.series.values()[0].unwrap() > 20.0);
    }

    #[test]
    fn missing_period_params_is_an_error() {
        let mut p = single_period_params(1.0, 1.0, None);
        p.periods.remove(&1);
        let s = DailySeries::new(start(), vec![Some(3.0)]).unwrap();
        assert!(apply_loci(&s, &p, &PeriodScheme::monthly()).is_err());
    }

    #[test]
    fn wet_value_stays_above_threshold() {
        assert!(wet_value(0.85, 1e-300) > 0.85);
        assert_eq!(wet_value(0.85, 1.0), 1.85);
    }
}
