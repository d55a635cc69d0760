//! Seasonal occurrence (logistic) and intensity (Gamma, log link) models with
//! Fourier-harmonic regressors, and the RMSE between fitted seasonal curves.

use std::f64::consts::PI;
use std::fmt::Write as _;

use chrono::{Datelike, NaiveDate};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::{DailySeries, IndicatorSeries, WetState};

/// Number of day slots in a seasonal year; 29 February has its own slot.
pub const SEASON_DAYS: usize = 366;

const MONTH_SLOTS: [u32; 12] = [31, 29, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31];
const GRADIENT_TOL: f64 = 1e-8;
const MAX_ITER: usize = 100;
const SAMPLES_PER_PARAMETER: usize = 10;
const SEPARATION_EPS: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Order {
    Zero,
    First,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Response {
    Occurrence,
    Amount,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeasonalModelSpec {
    pub order: Order,
    pub response: Response,
    pub n_harmonics: usize,
    /// Month whose first day is seasonal day 1.
    pub day_origin: u32,
}

impl SeasonalModelSpec {
    pub fn new(order: Order, response: Response) -> Self {
        Self {
            order,
            response,
            n_harmonics: 3,
            day_origin: 8,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_harmonics > 6 {
            return Err(Error::InvalidConfig(format!(
                "{} harmonics; at most 6 are supported",
                self.n_harmonics
            )));
        }
        if !(1..=12).contains(&self.day_origin) {
            return Err(Error::InvalidConfig(format!(
                "day origin {} is not a month",
                self.day_origin
            )));
        }
        Ok(())
    }

    fn n_params(&self) -> usize {
        1 + 2 * self.n_harmonics
    }
}

/// Seasonal day index in `1..=366` counted from the first of `origin_month`,
/// with every month occupying its leap-year number of slots.
pub fn season_day(date: NaiveDate, origin_month: u32) -> usize {
    let mut offset = 0;
    let mut month = origin_month;
    while month != date.month() {
        offset += MONTH_SLOTS[month as usize - 1];
        month = month % 12 + 1;
    }
    (offset + date.day()) as usize
}

/// `[1, sin(2πkd/366), cos(2πkd/366)]` for `k = 1..=n_harmonics`.
pub fn fourier_design(day: usize, n_harmonics: usize) -> Vec<f64> {
    let mut row = Vec::with_capacity(1 + 2 * n_harmonics);
    row.push(1.0);
    for k in 1..=n_harmonics {
        let a = 2.0 * PI * (k * day) as f64 / SEASON_DAYS as f64;
        row.push(a.sin());
        row.push(a.cos());
    }
    row
}

/// Result of one GLM fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlmFit {
    pub coefficients: Vec<f64>,
    pub iterations: usize,
    pub gradient_norm: f64,
    pub n: usize,
    /// Pearson dispersion, Gamma fits only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dispersion: Option<f64>,
}

/// Fitted seasonal curves, one value per seasonal day.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedCurves {
    pub spec: SeasonalModelSpec,
    /// Order-0 curve.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub all: Option<Vec<f64>>,
    /// Order-1 curve after a wet day.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wet: Option<Vec<f64>>,
    /// Order-1 curve after a dry day.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dry: Option<Vec<f64>>,
    pub fits: Vec<GlmFit>,
}

impl FittedCurves {
    /// Curves with their state labels (`all`, `W`, `D`).
    pub fn labelled(&self) -> Vec<(&'static str, &[f64])> {
        [("all", &self.all), ("W", &self.wet), ("D", &self.dry)]
            .into_iter()
            .filter_map(|(l, c)| c.as_deref().map(|c| (l, c)))
            .collect()
    }

    /// CSV with columns `d,state,fitted`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("d,state,fitted\n");
        for (label, curve) in self.labelled() {
            for (i, v) in curve.iter().enumerate() {
                let _ = writeln!(out, "{},{label},{v}", i + 1);
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Family {
    Binomial,
    Gamma,
}

impl Family {
    fn mean(self, eta: f64) -> f64 {
        match self {
            Family::Binomial => 1.0 / (1.0 + (-eta).exp()),
            Family::Gamma => eta.exp(),
        }
    }

    /// Log-likelihood contribution up to terms free of the coefficients.
    fn loglik(self, y: f64, eta: f64) -> f64 {
        match self {
            // y·η − ln(1 + e^η), evaluated stably
            Family::Binomial => y * eta - (eta.max(0.0) + (-eta.abs()).exp().ln_1p()),
            Family::Gamma => -y * (-eta).exp() - eta,
        }
    }

    /// Score weight `∂ℓ/∂η` and the Fisher information weight.
    fn weights(self, y: f64, eta: f64) -> (f64, f64) {
        let mu = self.mean(eta);
        match self {
            Family::Binomial => (y - mu, mu * (1.0 - mu)),
            Family::Gamma => ((y - mu) / mu, 1.0),
        }
    }
}

struct Design {
    rows: Vec<Vec<f64>>,
    y: Vec<f64>,
}

fn loglik(design: &Design, family: Family, beta: &DVector<f64>) -> f64 {
    design
        .rows
        .iter()
        .zip(&design.y)
        .map(|(x, &y)| family.loglik(y, x.iter().zip(beta.iter()).map(|(a, b)| a * b).sum()))
        .sum()
}

/// Fisher scoring (Newton for the logistic model) from `start`, with step
/// halving whenever a full step lowers the likelihood.
fn fit_glm(design: &Design, family: Family, start: DVector<f64>) -> Result<GlmFit> {
    let p = start.len();
    let mut beta = start;
    let mut trace = Vec::new();
    let mut ll = loglik(design, family, &beta);
    for it in 0..=MAX_ITER {
        let mut g: DVector<f64> = DVector::zeros(p);
        let mut info: DMatrix<f64> = DMatrix::zeros(p, p);
        for (x, &y) in design.rows.iter().zip(&design.y) {
            let eta: f64 = x.iter().zip(beta.iter()).map(|(a, b)| a * b).sum();
            let (s, w) = family.weights(y, eta);
            for j in 0..p {
                g[j] += s * x[j];
                for k in 0..=j {
                    info[(j, k)] += w * x[j] * x[k];
                }
            }
        }
        for j in 0..p {
            for k in 0..j {
                info[(k, j)] = info[(j, k)];
            }
        }
        let norm = g.norm();
        trace.push(norm);
        if !norm.is_finite() {
            break;
        }
        if norm < GRADIENT_TOL {
            return Ok(GlmFit {
                coefficients: beta.iter().copied().collect(),
                iterations: it,
                gradient_norm: norm,
                n: design.y.len(),
                dispersion: None,
            });
        }
        if it == MAX_ITER {
            break;
        }
        let Some(chol) = info.cholesky() else { break };
        let step = chol.solve(&g);
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..30 {
            let cand = &beta + &step * t;
            let cand_ll = loglik(design, family, &cand);
            if cand_ll.is_finite() && cand_ll >= ll - 1e-12 * ll.abs() {
                beta = cand;
                ll = cand_ll;
                accepted = true;
                break;
            }
            t /= 2.0;
        }
        if !accepted {
            break;
        }
    }
    Err(Error::NonConvergence {
        iterations: trace.len().saturating_sub(1),
        gradient_norm: trace.last().copied().unwrap_or(f64::NAN),
        trace,
    })
}

fn build(days: &[usize], y: Vec<f64>, n_harmonics: usize) -> Design {
    Design {
        rows: days
            .iter()
            .map(|&d| fourier_design(d, n_harmonics))
            .collect(),
        y,
    }
}

fn curve(beta: &[f64], family: Family, n_harmonics: usize) -> Vec<f64> {
    (1..=SEASON_DAYS)
        .map(|d| {
            let eta: f64 = fourier_design(d, n_harmonics)
                .iter()
                .zip(beta)
                .map(|(a, b)| a * b)
                .sum();
            family.mean(eta)
        })
        .collect()
}

fn check_size(n: usize, spec: &SeasonalModelSpec) -> Result<()> {
    let min = spec.n_params() * SAMPLES_PER_PARAMETER;
    if n < min {
        return Err(Error::FitInsufficientData { n, min });
    }
    Ok(())
}

/// Sample of one lag class: seasonal days and responses.
struct Sample {
    days: Vec<usize>,
    y: Vec<f64>,
}

fn fit_sample(
    sample: Sample,
    family: Family,
    spec: &SeasonalModelSpec,
) -> Result<(Vec<f64>, GlmFit)> {
    check_size(sample.y.len(), spec)?;
    let p = spec.n_params();
    let mut start = DVector::zeros(p);
    if family == Family::Gamma {
        start[0] = (sample.y.iter().sum::<f64>() / sample.y.len() as f64).ln();
    }
    if family == Family::Binomial && sample.y.iter().all(|&y| y == sample.y[0]) {
        return Err(Error::Degenerate(
            "complete separation: every day has the same state".into(),
        ));
    }
    let design = build(&sample.days, sample.y, spec.n_harmonics);
    let mut fit = fit_glm(&design, family, start)?;
    if family == Family::Binomial {
        let beta = DVector::from_vec(fit.coefficients.clone());
        let extreme = design.rows.iter().any(|x| {
            let mu = family.mean(x.iter().zip(beta.iter()).map(|(a, b)| a * b).sum());
            !(SEPARATION_EPS..=1.0 - SEPARATION_EPS).contains(&mu)
        });
        if extreme {
            return Err(Error::Degenerate(
                "quasi-complete separation: fitted probabilities reach 0 or 1".into(),
            ));
        }
    }
    if family == Family::Gamma {
        let beta = DVector::from_vec(fit.coefficients.clone());
        let pearson: f64 = design
            .rows
            .iter()
            .zip(&design.y)
            .map(|(x, &y)| {
                let mu = family.mean(x.iter().zip(beta.iter()).map(|(a, b)| a * b).sum());
                ((y - mu) / mu).powi(2)
            })
            .sum();
        let dof = design.y.len().saturating_sub(p).max(1);
        fit.dispersion = Some(pearson / dof as f64);
    }
    Ok((curve(&fit.coefficients, family, spec.n_harmonics), fit))
}

fn fit_curves(
    samples: [Sample; 3],
    family: Family,
    spec: &SeasonalModelSpec,
) -> Result<FittedCurves> {
    spec.validate()?;
    let [all, wet, dry] = samples;
    let mut out = FittedCurves {
        spec: *spec,
        all: None,
        wet: None,
        dry: None,
        fits: vec![],
    };
    match spec.order {
        Order::Zero => {
            let (c, f) = fit_sample(all, family, spec)?;
            out.all = Some(c);
            out.fits.push(f);
        }
        Order::First => {
            let (cw, fw) = fit_sample(wet, family, spec)?;
            let (cd, fd) = fit_sample(dry, family, spec)?;
            out.wet = Some(cw);
            out.dry = Some(cd);
            out.fits.extend([fw, fd]);
        }
    }
    Ok(out)
}

fn empty() -> Sample {
    Sample {
        days: vec![],
        y: vec![],
    }
}

/// Logistic occurrence model. Order 0 uses every present day; order 1 fits
/// separate curves to days following a wet and a dry day.
pub fn fit_occurrence_model(
    indicator: &IndicatorSeries,
    lagged: &[WetState],
    spec: &SeasonalModelSpec,
) -> Result<FittedCurves> {
    let mut s = [empty(), empty(), empty()];
    for (i, (&state, &lag)) in indicator.states().iter().zip(lagged).enumerate() {
        if !state.is_present() {
            continue;
        }
        let d = season_day(indicator.date(i), spec.day_origin);
        let y = if state.is_wet() { 1.0 } else { 0.0 };
        s[0].days.push(d);
        s[0].y.push(y);
        let k = match lag {
            WetState::Wet => 1,
            WetState::Dry => 2,
            WetState::Missing => continue,
        };
        s[k].days.push(d);
        s[k].y.push(y);
    }
    fit_curves(s, Family::Binomial, spec)
}

/// Gamma intensity model on rain days (value above `t_x`), log link. The
/// lag classes come from `lagged`, the previous-day state of `indicator`.
pub fn fit_amount_model(
    series: &DailySeries,
    indicator: &IndicatorSeries,
    lagged: &[WetState],
    spec: &SeasonalModelSpec,
    t_x: f64,
) -> Result<FittedCurves> {
    let mut s = [empty(), empty(), empty()];
    for (i, (v, &lag)) in series.values().iter().zip(lagged).enumerate() {
        let Some(y) = *v else { continue };
        if !(y > t_x) || !indicator.states()[i].is_wet() {
            continue;
        }
        let d = season_day(series.date(i), spec.day_origin);
        s[0].days.push(d);
        s[0].y.push(y);
        let k = match lag {
            WetState::Wet => 1,
            WetState::Dry => 2,
            WetState::Missing => continue,
        };
        s[k].days.push(d);
        s[k].y.push(y);
    }
    fit_curves(s, Family::Gamma, spec)
}

/// RMSE between two fitted curves over the 366 seasonal days, per state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurveRmse {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub all: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wet: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dry: Option<f64>,
}

fn rmse(a: &[f64], b: &[f64]) -> f64 {
    (a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>() / a.len() as f64).sqrt()
}

pub fn rmse_curve(a: &FittedCurves, b: &FittedCurves) -> Result<CurveRmse> {
    if a.spec.order != b.spec.order || a.spec.response != b.spec.response {
        return Err(Error::Mismatch("curves differ in order or response".into()));
    }
    let pair = |x: &Option<Vec<f64>>, y: &Option<Vec<f64>>| match (x, y) {
        (Some(x), Some(y)) => Some(rmse(x, y)),
        _ => None,
    };
    Ok(CurveRmse {
        all: pair(&a.all, &b.all),
        wet: pair(&a.wet, &b.wet),
        dry: pair(&a.dry, &b.dry),
    })
}
