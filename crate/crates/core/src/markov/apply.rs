//! Sequential application of the Markov-chain corrections.

use crate::conventional::{
    loci_value, qm_value, scaled_excess_value, wet_value, Correction, GammaPair,
};
use crate::error::{Error, Result};
use crate::series::{DailySeries, PeriodScheme, WetState};

use super::amounts::{McAmountParams, PeriodAmounts};
use super::occurrence::{McThresholds, PeriodThresholds};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Amounts {
    Loci,
    Qm,
}

/// Index at which the conditional recursion starts: the first day of the
/// dry-season start month, or the first day if the series never reaches it.
pub fn recursion_start(model: &DailySeries, scheme: &PeriodScheme) -> usize {
    scheme
        .first_dry_season_start(model.start(), model.len())
        .unwrap_or(0)
}

/// MC LOCI correction. After a corrected wet day the model value is tested
/// against `tw` and scaled by `sw`, after a dry day against `td` with `sd`;
/// after a missing or unknown day the plain LOCI adjustment with `t0`, `s`
/// applies.
pub fn apply_mc_loci(
    model: &DailySeries,
    thresholds: &McThresholds,
    amounts: &McAmountParams,
    scheme: &PeriodScheme,
    t_x: f64,
    dry_scale_uses_wet_threshold: bool,
) -> Result<Correction> {
    apply(
        model,
        thresholds,
        amounts,
        scheme,
        t_x,
        dry_scale_uses_wet_threshold,
        Amounts::Loci,
    )
}

/// MC QM correction: excesses over the state threshold are mapped through the
/// state-conditional Gamma pair, falling back to the unconditional pair and
/// then to LOCI scaling where a fit is unavailable.
pub fn apply_mc_qm(
    model: &DailySeries,
    thresholds: &McThresholds,
    amounts: &McAmountParams,
    scheme: &PeriodScheme,
    t_x: f64,
) -> Result<Correction> {
    apply(model, thresholds, amounts, scheme, t_x, false, Amounts::Qm)
}

fn apply(
    model: &DailySeries,
    thresholds: &McThresholds,
    amounts: &McAmountParams,
    scheme: &PeriodScheme,
    t_x: f64,
    dry_scale_uses_wet_threshold: bool,
    kind: Amounts,
) -> Result<Correction> {
    let start = recursion_start(model, scheme);
    let mut out = Vec::with_capacity(model.len());
    let mut warnings = Vec::new();
    let mut prev = WetState::Missing;
    for (i, v) in model.values().iter().enumerate() {
        let Some(y) = *v else {
            out.push(None);
            prev = WetState::Missing;
            continue;
        };
        let date = model.date(i);
        let m = scheme.period_of(date);
        let th = thresholds.get(m)?;
        let am = amounts
            .periods
            .get(&m)
            .ok_or_else(|| Error::Mismatch(format!("no amount parameters for period {m}")))?;
        let state = if i <= start { WetState::Missing } else { prev };
        let mut saturated = false;
        let value = match kind {
            Amounts::Loci => loci_step(y, state, th, am, t_x, dry_scale_uses_wet_threshold),
            Amounts::Qm => qm_step(y, state, th, am, t_x, &mut saturated)?,
        };
        if saturated {
            warnings.push(format!(
                "{date}: model CDF saturated at {y} mm; mapped through 1 - 1e-12"
            ));
        }
        prev = if value > t_x {
            WetState::Wet
        } else {
            WetState::Dry
        };
        out.push(Some(value));
    }
    Ok(Correction {
        series: DailySeries::from_parts_unchecked(model.start(), out),
        warnings,
    })
}

fn loci_step(
    y: f64,
    state: WetState,
    th: &PeriodThresholds,
    am: &PeriodAmounts,
    t_x: f64,
    dry_scale_uses_wet_threshold: bool,
) -> f64 {
    let sc = &am.scales;
    match state {
        WetState::Wet => scaled_excess_value(y, th.tw, sc.sw, t_x),
        WetState::Dry if dry_scale_uses_wet_threshold => {
            if y <= th.td {
                0.0
            } else {
                (t_x + sc.sd * (y - th.tw)).max(0.0)
            }
        }
        WetState::Dry => scaled_excess_value(y, th.td, sc.sd, t_x),
        WetState::Missing => loci_value(y, th.t0, sc.s, t_x),
    }
}

fn qm_step(
    y: f64,
    state: WetState,
    th: &PeriodThresholds,
    am: &PeriodAmounts,
    t_x: f64,
    saturated: &mut bool,
) -> Result<f64> {
    let sc = &am.scales;
    let gammas = am.gammas.as_ref();
    let all = gammas.and_then(|g| g.all);
    let (threshold, pair, scale): (f64, Option<GammaPair>, f64) = match state {
        WetState::Wet => (th.tw, gammas.and_then(|g| g.wet).or(all), sc.sw),
        WetState::Dry => (th.td, gammas.and_then(|g| g.dry).or(all), sc.sd),
        WetState::Missing => (th.t0, all, sc.s),
    };
    match pair {
        Some(p) => qm_value(y, threshold, &p.obs, &p.model, t_x, saturated),
        None if state == WetState::Missing => Ok(loci_value(y, threshold, scale, t_x)),
        None => Ok(if y <= threshold {
            0.0
        } else {
            wet_value(t_x, scale * (y - threshold))
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::markov::amounts::{PeriodGammas, PeriodScales};
    use crate::stats::GammaParams;
    use chrono::NaiveDate;

    fn params(
        t0: f64,
        tw: f64,
        td: f64,
        s: f64,
        sw: f64,
        sd: f64,
        gammas: Option<PeriodGammas>,
    ) -> (McThresholds, McAmountParams) {
        let mut th = PeriodThresholds::collapsed(t0);
        th.tw = tw;
        th.td = td;
        let am = PeriodAmounts {
            scales: PeriodScales {
                s,
                sw,
                sd,
                n_obs_wet_lag: 0,
                n_obs_dry_lag: 0,
                n_model_wet_lag: 0,
                n_model_dry_lag: 0,
            },
            gammas,
            fit_warnings: vec![],
        };
        (
            McThresholds {
                periods: (1..=12).map(|m| (m, th.clone())).collect(),
            },
            McAmountParams {
                periods: (1..=12).map(|m| (m, am.clone())).collect(),
            },
        )
    }

    // Starts on 1 April so the recursion begins on the first day.
    fn series(v: &[f64]) -> DailySeries {
        DailySeries::from_f64(NaiveDate::from_ymd_opt(2000, 4, 1).unwrap(), v).unwrap()
    }

    fn scheme() -> PeriodScheme {
        PeriodScheme::monthly()
    }

    #[test]
    fn wet_branch() {
        // day 1: 10 > t0 = 3 gives a wet start; day 2 uses tw, sw
        let (th, am) = params(3.0, 2.0, 1.0, 1.0, 1.5, 2.0, None);
        let out = apply_mc_loci(&series(&[10.0, 4.0]), &th, &am, &scheme(), 0.85, false).unwrap();
        assert!((out.series.get(1).unwrap() - 3.85).abs() < 1e-12);
        let out = apply_mc_loci(&series(&[10.0, 2.0]), &th, &am, &scheme(), 0.85, false).unwrap();
        assert_eq!(out.series.get(1), Some(0.0));
    }

    #[test]
    fn dry_branch_uses_td() {
        let (th, am) = params(3.0, 2.0, 1.0, 1.0, 1.5, 2.0, None);
        let out = apply_mc_loci(&series(&[0.0, 4.0]), &th, &am, &scheme(), 0.85, false).unwrap();
        assert!((out.series.get(1).unwrap() - 6.85).abs() < 1e-12);
        let lit = apply_mc_loci(&series(&[0.0, 4.0]), &th, &am, &scheme(), 0.85, true).unwrap();
        assert!((lit.series.get(1).unwrap() - 4.85).abs() < 1e-12);
    }

    #[test]
    fn gap_resets_to_unconditional() {
        let (th, am) = params(5.0, 0.5, 0.5, 1.0, 1.0, 1.0, None);
        let v = DailySeries::new(
            NaiveDate::from_ymd_opt(2000, 4, 1).unwrap(),
            vec![Some(10.0), None, Some(2.0), Some(2.0)],
        )
        .unwrap();
        let out = apply_mc_loci(&v, &th, &am, &scheme(), 0.85, false).unwrap();
        assert_eq!(out.series.values()[2], Some(0.0));
        assert!(out.series.values()[3].unwrap() > 0.85);
    }

    #[test]
    fn days_before_dry_season_are_unconditional() {
        let (th, am) = params(5.0, 0.5, 0.5, 1.0, 1.0, 1.0, None);
        let v = DailySeries::from_f64(
            NaiveDate::from_ymd_opt(2000, 3, 30).unwrap(),
            &[10.0, 2.0, 2.0, 2.0],
        )
        .unwrap();
        let out = apply_mc_loci(&v, &th, &am, &scheme(), 0.85, false).unwrap();
        // 31 March and 1 April both use t0 = 5; 2 April follows a dry day
        assert_eq!(out.series.values()[1], Some(0.0));
        assert_eq!(out.series.values()[2], Some(0.0));
        assert!(out.series.values()[3].unwrap() > 0.85);
    }

    #[test]
    fn qm_identity_gammas() {
        let g = GammaParams::new(0.9, 6.0).unwrap();
        let pair = GammaPair { obs: g, model: g };
        let gam = PeriodGammas {
            all: Some(pair),
            wet: Some(pair),
            dry: Some(pair),
        };
        let (th, am) = params(3.0, 2.0, 1.0, 1.0, 1.0, 1.0, Some(gam));
        let out = apply_mc_qm(&series(&[10.0, 4.0, 0.5, 7.0]), &th, &am, &scheme(), 0.85).unwrap();
        let v = out.series.to_f64();
        assert!((v[0] - (10.0 - 3.0 + 0.85)).abs() < 1e-8);
        assert!((v[1] - (4.0 - 2.0 + 0.85)).abs() < 1e-8);
        assert!((v[2] - 0.0).abs() < 1e-15);
        assert!((v[3] - (7.0 - 1.0 + 0.85)).abs() < 1e-8);
    }

    #[test]
    fn qm_scale_doubling() {
        let model = GammaParams::new(1.3, 4.0).unwrap();
        let obs = GammaParams::new(1.3, 8.0).unwrap();
        let pair = GammaPair { obs, model };
        let gam = PeriodGammas {
            all: Some(pair),
            wet: Some(pair),
            dry: None,
        };
        let (th, am) = params(3.0, 2.0, 1.0, 1.0, 1.0, 1.0, Some(gam));
        let out = apply_mc_qm(&series(&[10.0, 4.0]), &th, &am, &scheme(), 0.85).unwrap();
        assert!((out.series.get(1).unwrap() - (0.85 + 2.0 * 2.0)).abs() < 1e-8);
    }

    #[test]
    fn qm_wet_branch_below_threshold_is_dry() {
        let (th, am) = params(3.0, 2.0, 1.0, 1.0, 1.0, 1.0, None);
        let out = apply_mc_qm(&series(&[10.0, 2.0]), &th, &am, &scheme(), 0.85).unwrap();
        assert_eq!(out.series.get(1), Some(0.0));
    }
}
