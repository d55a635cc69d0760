//! Seeded synthetic daily rainfall from a two-state first-order Markov chain
//! with state-conditional Gamma intensities, plus a correlated "model" series
//! derived from the same latent draws.

use std::collections::BTreeMap;

use chrono::{Datelike, NaiveDate};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::DEFAULT_T_X;
use crate::conventional::wet_value;
use crate::error::{Error, Result};
use crate::markov::stationarity_p0;
use crate::series::{DailySeries, PeriodId, PeriodScheme, WetState};
use crate::stats::{gamma_inv_cdf, GammaParams};

/// Chain and intensity parameters of one period.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthPeriod {
    pub pw: f64,
    pub pd: f64,
    /// Excess over `t_x` on wet days following a wet day.
    pub gamma_wet_lag: GammaParams,
    /// Excess over `t_x` on wet days following a dry day.
    pub gamma_dry_lag: GammaParams,
}

/// Transform producing the model series from the truth's latent draws.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Inflation {
    /// Hazard multiplier on both transition probabilities:
    /// `p' = 1 - (1 - p)^wet_multiplier`.
    pub wet_multiplier: f64,
    /// Factor applied to model wet-day amounts.
    pub intensity_scale: f64,
    /// Lag-independent model excess distribution; when absent the truth's
    /// state-conditional Gammas are used with the model's own lag.
    #[serde(default)]
    pub model_gamma: Option<GammaParams>,
}

impl Inflation {
    pub fn inflate(&self, p: f64) -> f64 {
        (1.0 - (1.0 - p).powf(self.wet_multiplier)).clamp(0.0, 1.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub scheme: PeriodScheme,
    pub periods: BTreeMap<PeriodId, SynthPeriod>,
    pub start: NaiveDate,
    pub years: u32,
    pub seed: u64,
    #[serde(default = "default_t_x")]
    pub t_x: f64,
    #[serde(default)]
    pub inflation: Option<Inflation>,
}

fn default_t_x() -> f64 {
    DEFAULT_T_X
}

fn gamma(shape: f64, scale: f64) -> GammaParams {
    GammaParams { shape, scale }
}

impl SynthSpec {
    /// The same chain in every month of a single-period scheme.
    pub fn stationary(
        pw: f64,
        pd: f64,
        gamma_wet_lag: GammaParams,
        gamma_dry_lag: GammaParams,
        years: u32,
        seed: u64,
    ) -> Self {
        let scheme = PeriodScheme::new([1; 12], 4, 8).expect("single-period scheme");
        let period = SynthPeriod {
            pw,
            pd,
            gamma_wet_lag,
            gamma_dry_lag,
        };
        Self {
            scheme,
            periods: [(1, period)].into_iter().collect(),
            start: NaiveDate::from_ymd_opt(1979, 1, 1).expect("valid date"),
            years,
            seed,
            t_x: DEFAULT_T_X,
            inflation: None,
        }
    }

    /// A unimodal tropical climate on the default eight-period scheme: a wet
    /// season peaking in March, a long dry season from May to September,
    /// heavier rain after wet days, and a model with too many rain days and
    /// too little rain per rain day.
    pub fn seasonal(years: u32, seed: u64) -> Self {
        let scheme = PeriodScheme::default();
        let rainy = |pw, pd| SynthPeriod {
            pw,
            pd,
            gamma_wet_lag: gamma(0.9, 12.0),
            gamma_dry_lag: gamma(0.8, 6.0),
        };
        let periods = [
            (1, rainy(0.62, 0.30)),
            (2, rainy(0.60, 0.28)),
            (3, rainy(0.70, 0.35)),
            (4, rainy(0.62, 0.28)),
            (
                5,
                SynthPeriod {
                    pw: 0.30,
                    pd: 0.04,
                    gamma_wet_lag: gamma(0.8, 6.0),
                    gamma_dry_lag: gamma(0.7, 4.0),
                },
            ),
            (6, rainy(0.40, 0.10)),
            (7, rainy(0.50, 0.20)),
            (8, rainy(0.58, 0.27)),
        ]
        .into_iter()
        .collect();
        Self {
            scheme,
            periods,
            start: NaiveDate::from_ymd_opt(1979, 1, 1).expect("valid date"),
            years,
            seed,
            t_x: DEFAULT_T_X,
            inflation: Some(Inflation {
                wet_multiplier: 1.8,
                intensity_scale: 0.8,
                model_gamma: Some(gamma(0.85, 8.0)),
            }),
        }
    }

    pub fn validate(&self) -> Result<()> {
        for m in self.scheme.periods() {
            let p = self
                .periods
                .get(&m)
                .ok_or_else(|| Error::InvalidConfig(format!("synthetic spec lacks period {m}")))?;
            for q in [p.pw, p.pd] {
                if !(0.0..=1.0).contains(&q) {
                    return Err(Error::InvalidConfig(format!(
                        "probability {q} outside [0, 1] in period {m}"
                    )));
                }
            }
            GammaParams::new(p.gamma_wet_lag.shape, p.gamma_wet_lag.scale)?;
            GammaParams::new(p.gamma_dry_lag.shape, p.gamma_dry_lag.scale)?;
        }
        if let Some(inf) = &self.inflation {
            if !(inf.wet_multiplier > 0.0 && inf.intensity_scale > 0.0) {
                return Err(Error::InvalidConfig(
                    "inflation factors must be positive".into(),
                ));
            }
            if let Some(g) = inf.model_gamma {
                GammaParams::new(g.shape, g.scale)?;
            }
        }
        if !(self.t_x >= 0.0) {
            return Err(Error::InvalidConfig("t_x must be non-negative".into()));
        }
        Ok(())
    }

    fn n_days(&self) -> usize {
        let end = NaiveDate::from_ymd_opt(
            self.start.year() + self.years as i32,
            self.start.month(),
            self.start.day(),
        )
        .unwrap_or_else(|| {
            NaiveDate::from_ymd_opt(self.start.year() + self.years as i32, 3, 1)
                .expect("valid date")
        });
        (end - self.start).num_days() as usize
    }
}

/// Probability of a wet day given the previous state; a missing previous
/// state uses the stationary frequency.
fn wet_probability(p: &SynthPeriod, prev: WetState) -> f64 {
    match prev {
        WetState::Wet => p.pw,
        WetState::Dry => p.pd,
        WetState::Missing => stationarity_p0(p.pw, p.pd).unwrap_or(p.pd),
    }
}

fn conditional_gamma(p: &SynthPeriod, prev: WetState) -> &GammaParams {
    if prev.is_wet() {
        &p.gamma_wet_lag
    } else {
        &p.gamma_dry_lag
    }
}

/// Simulates truth and model series. Each day draws one occurrence uniform
/// and one amount uniform, shared by both series. Without inflation the model
/// equals the truth.
pub fn generate(spec: &SynthSpec) -> Result<(DailySeries, DailySeries)> {
    spec.validate()?;
    let n = spec.n_days();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut truth = Vec::with_capacity(n);
    let mut model = Vec::with_capacity(n);
    let (mut prev_t, mut prev_m) = (WetState::Missing, WetState::Missing);

    for i in 0..n {
        let date = spec.start + chrono::Duration::days(i as i64);
        let p = &spec.periods[&spec.scheme.period_of(date)];
        let u_occ: f64 = rng.random();
        let u_amt: f64 = rng.random();

        let t_wet = u_occ < wet_probability(p, prev_t);
        let t_val = if t_wet {
            wet_value(
                spec.t_x,
                gamma_inv_cdf(conditional_gamma(p, prev_t), u_amt)?,
            )
        } else {
            0.0
        };
        truth.push(Some(t_val));
        prev_t = if t_wet { WetState::Wet } else { WetState::Dry };

        match &spec.inflation {
            None => model.push(Some(t_val)),
            Some(inf) => {
                let m_wet = u_occ < inf.inflate(wet_probability(p, prev_m));
                let m_val = if m_wet {
                    let g = inf
                        .model_gamma
                        .as_ref()
                        .unwrap_or_else(|| conditional_gamma(p, prev_m));
                    inf.intensity_scale * wet_value(spec.t_x, gamma_inv_cdf(g, u_amt)?)
                } else {
                    0.0
                };
                model.push(Some(m_val));
                prev_m = if m_wet { WetState::Wet } else { WetState::Dry };
            }
        }
    }
    Ok((
        DailySeries::new(spec.start, truth)?,
        DailySeries::new(spec.start, model)?,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::{lagged_state, rain_indicator};

    fn g() -> GammaParams {
        gamma(0.9, 8.0)
    }

    #[test]
    fn absorbing_chains() {
        let (t, _) = generate(&SynthSpec::stationary(0.0, 0.0, g(), g(), 2, 1)).unwrap();
        assert!(t.to_f64().iter().all(|&x| x == 0.0));
        let (t, _) = generate(&SynthSpec::stationary(1.0, 1.0, g(), g(), 2, 1)).unwrap();
        assert!(t.to_f64().iter().all(|&x| x > DEFAULT_T_X));
    }

    #[test]
    fn length_and_start() {
        let spec = SynthSpec::stationary(0.5, 0.2, g(), g(), 4, 3);
        let (t, m) = generate(&spec).unwrap();
        assert_eq!(t.len(), 365 * 4 + 1);
        assert_eq!(t, m);
        assert_eq!(t.end(), NaiveDate::from_ymd_opt(1982, 12, 31));
    }

    #[test]
    fn same_seed_same_output() {
        let spec = SynthSpec::seasonal(5, 42);
        assert_eq!(generate(&spec).unwrap(), generate(&spec).unwrap());
        let other = SynthSpec {
            seed: 43,
            ..spec.clone()
        };
        assert_ne!(generate(&spec).unwrap().0, generate(&other).unwrap().0);
    }

    #[test]
    fn model_is_wetter_and_lighter() {
        let (t, m) = generate(&SynthSpec::seasonal(20, 5)).unwrap();
        let wet = |s: &DailySeries| s.to_f64().iter().filter(|&&x| x > DEFAULT_T_X).count();
        assert!(wet(&m) > wet(&t));
        let ind_t = rain_indicator(&t, DEFAULT_T_X);
        assert_eq!(lagged_state(&ind_t).len(), t.len());
    }
}
