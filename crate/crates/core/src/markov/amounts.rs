//! State-conditional amount parameters: LOCI scaling factors and Gamma pairs
//! for the wet-lag, dry-lag and unconditional partitions.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::conventional::{fit_pair, mean_excess, scale_factor, GammaPair};
use crate::series::{DailySeries, PeriodId, PeriodScheme, WetState};

use super::occurrence::McThresholds;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodScales {
    pub s: f64,
    pub sw: f64,
    pub sd: f64,
    pub n_obs_wet_lag: usize,
    pub n_obs_dry_lag: usize,
    pub n_model_wet_lag: usize,
    pub n_model_dry_lag: usize,
}

/// Gamma pairs for one period. A missing conditional pair falls back to
/// `all`; a missing `all` falls back to LOCI scaling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodGammas {
    pub all: Option<GammaPair>,
    pub wet: Option<GammaPair>,
    pub dry: Option<GammaPair>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodAmounts {
    pub scales: PeriodScales,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gammas: Option<PeriodGammas>,
    #[serde(default)]
    pub fit_warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct McAmountParams {
    pub periods: BTreeMap<PeriodId, PeriodAmounts>,
}

/// Values of period `m` split by lag state: (all, wet-lag, dry-lag).
pub(crate) struct Partition {
    pub all: Vec<f64>,
    pub wet: Vec<f64>,
    pub dry: Vec<f64>,
}

pub(crate) fn partition(
    series: &DailySeries,
    lags: &[WetState],
    scheme: &PeriodScheme,
    m: PeriodId,
) -> Partition {
    let mut p = Partition {
        all: vec![],
        wet: vec![],
        dry: vec![],
    };
    for (i, (v, lag)) in series.values().iter().zip(lags).enumerate() {
        let Some(x) = *v else { continue };
        if scheme.period_of(series.date(i)) != m {
            continue;
        }
        p.all.push(x);
        match lag {
            WetState::Wet => p.wet.push(x),
            WetState::Dry => p.dry.push(x),
            WetState::Missing => {}
        }
    }
    p
}

fn excesses(values: &[f64], threshold: f64) -> Vec<f64> {
    values
        .iter()
        .filter(|&&x| x > threshold)
        .map(|x| x - threshold)
        .collect()
}

fn scales_for(
    obs: &Partition,
    model: &Partition,
    t0: f64,
    tw: f64,
    td: f64,
    t_x: f64,
    warnings: &mut Vec<String>,
) -> PeriodScales {
    let s = scale_factor(mean_excess(&obs.all, t_x), mean_excess(&model.all, t0)).unwrap_or_else(
        || {
            warnings.push("unconditional scale undefined; using 1".into());
            1.0
        },
    );
    let mut conditional = |o: &[f64], mdl: &[f64], t: f64, name: &str| {
        scale_factor(mean_excess(o, t_x), mean_excess(mdl, t)).unwrap_or_else(|| {
            warnings.push(format!(
                "{name} scale undefined; using the unconditional scale"
            ));
            s
        })
    };
    let sw = conditional(&obs.wet, &model.wet, tw, "wet-lag");
    let sd = conditional(&obs.dry, &model.dry, td, "dry-lag");
    PeriodScales {
        s,
        sw,
        sd,
        n_obs_wet_lag: obs.wet.iter().filter(|&&x| x > t_x).count(),
        n_obs_dry_lag: obs.dry.iter().filter(|&&x| x > t_x).count(),
        n_model_wet_lag: model.wet.iter().filter(|&&y| y > tw).count(),
        n_model_dry_lag: model.dry.iter().filter(|&&y| y > td).count(),
    }
}

#[allow(clippy::too_many_arguments)]
fn gammas_for(
    obs: &Partition,
    model: &Partition,
    t0: f64,
    tw: f64,
    td: f64,
    t_x: f64,
    min_fit_n: usize,
    warnings: &mut Vec<String>,
) -> PeriodGammas {
    let mut fit = |o: &[f64], mdl: &[f64], t: f64, name: &str, fallback: &str| match fit_pair(
        &excesses(o, t_x),
        &excesses(mdl, t),
        min_fit_n,
    ) {
        Ok(pair) => Some(pair),
        Err(e) => {
            warnings.push(format!("{name} gamma fit failed ({e}); {fallback}"));
            None
        }
    };
    let all = fit(
        &obs.all,
        &model.all,
        t0,
        "unconditional",
        "falling back to LOCI scaling",
    );
    let wet = fit(
        &obs.wet,
        &model.wet,
        tw,
        "wet-lag",
        "using the unconditional pair",
    );
    let dry = fit(
        &obs.dry,
        &model.dry,
        td,
        "dry-lag",
        "using the unconditional pair",
    );
    PeriodGammas { all, wet, dry }
}

/// Scaling factors `s`, `sw`, `sd` for every calibrated period.
///
/// `obs_lagged` is the previous-day state of the observed rain-day indicator;
/// `model_lagged` the previous-day state of the calibrated model indicator.
pub fn compute_mc_loci_scales(
    obs: &DailySeries,
    model: &DailySeries,
    obs_lagged: &[WetState],
    model_lagged: &[WetState],
    thresholds: &McThresholds,
    scheme: &PeriodScheme,
    t_x: f64,
) -> McAmountParams {
    amounts(
        obs,
        model,
        obs_lagged,
        model_lagged,
        thresholds,
        scheme,
        t_x,
        None,
    )
}

/// Scaling factors plus the six Gamma fits (obs and model for the wet-lag,
/// dry-lag and unconditional partitions) on threshold excesses.
#[allow(clippy::too_many_arguments)]
pub fn fit_mc_qm_gammas(
    obs: &DailySeries,
    model: &DailySeries,
    obs_lagged: &[WetState],
    model_lagged: &[WetState],
    thresholds: &McThresholds,
    scheme: &PeriodScheme,
    t_x: f64,
    min_fit_n: usize,
) -> McAmountParams {
    amounts(
        obs,
        model,
        obs_lagged,
        model_lagged,
        thresholds,
        scheme,
        t_x,
        Some(min_fit_n),
    )
}

#[allow(clippy::too_many_arguments)]
fn amounts(
    obs: &DailySeries,
    model: &DailySeries,
    obs_lagged: &[WetState],
    model_lagged: &[WetState],
    thresholds: &McThresholds,
    scheme: &PeriodScheme,
    t_x: f64,
    min_fit_n: Option<usize>,
) -> McAmountParams {
    let mut periods = BTreeMap::new();
    for (&m, th) in &thresholds.periods {
        let o = partition(obs, obs_lagged, scheme, m);
        let y = partition(model, model_lagged, scheme, m);
        let mut fit_warnings = Vec::new();
        let scales = scales_for(&o, &y, th.t0, th.tw, th.td, t_x, &mut fit_warnings);
        let gammas =
            min_fit_n.map(|n| gammas_for(&o, &y, th.t0, th.tw, th.td, t_x, n, &mut fit_warnings));
        periods.insert(
            m,
            PeriodAmounts {
                scales,
                gammas,
                fit_warnings,
            },
        );
    }
    McAmountParams { periods }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::markov::occurrence::PeriodThresholds;
    use chrono::NaiveDate;

    fn one_period(t0: f64, tw: f64, td: f64) -> McThresholds {
        let mut th = PeriodThresholds::collapsed(t0);
        th.tw = tw;
        th.td = td;
        McThresholds {
            periods: [(1, th)].into_iter().collect(),
        }
    }

    #[test]
    fn wet_scale_is_ratio_of_mean_excesses() {
        use WetState::*;
        let d = NaiveDate::from_ymd_opt(2000, 1, 1).unwrap();
        // obs wet-lag excesses over 0.85: 6 and 10 (mean 8); model wet-lag
        // excesses over tw = 2: 3 and 5 (mean 4).
        let obs = DailySeries::from_f64(d, &[5.0, 6.85, 10.85, 0.0]).unwrap();
        let model = DailySeries::from_f64(d, &[5.0, 5.0, 7.0, 0.0]).unwrap();
        let lags = [Missing, Wet, Wet, Wet];
        let a = compute_mc_loci_scales(
            &obs,
            &model,
            &lags,
            &lags,
            &one_period(2.0, 2.0, 1.0),
            &PeriodScheme::monthly(),
            0.85,
        );
        let sc = &a.periods[&1].scales;
        assert!((sc.sw - 2.0).abs() < 1e-12);
        // no dry-lag days: sd falls back to s
        assert_eq!(sc.sd, sc.s);
        assert!(!a.periods[&1].fit_warnings.is_empty());
    }

    #[test]
    fn sparse_partition_falls_back() {
        use WetState::*;
        let d = NaiveDate::from_ymd_opt(2000, 1, 1).unwrap();
        let obs = DailySeries::from_f64(d, &[3.0, 4.0, 0.0]).unwrap();
        let lags = [Missing, Wet, Wet];
        let a = fit_mc_qm_gammas(
            &obs,
            &obs,
            &lags,
            &lags,
            &one_period(0.85, 0.85, 0.85),
            &PeriodScheme::monthly(),
            0.85,
            10,
        );
        let g = a.periods[&1].gammas.as_ref().unwrap();
        assert!(g.all.is_none() && g.wet.is_none() && g.dry.is_none());
        assert_eq!(
            a.periods[&1]
                .fit_warnings
                .iter()
                .filter(|w| w.contains("gamma"))
                .count(),
            3
        );
    }
}
