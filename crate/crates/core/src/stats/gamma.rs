//! Two-parameter Gamma distribution: maximum-likelihood fitting, CDF and
//! quantile function.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::{digamma, gamma_lr, ln_gamma};

use crate::error::{Error, Result};

pub const DEFAULT_MIN_FIT_N: usize = 10;

const FIT_REL_TOL: f64 = 1e-10;
const FIT_MAX_ITER: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaParams {
    pub shape: f64,
    pub scale: f64,
}

impl GammaParams {
    pub fn new(shape: f64, scale: f64) -> Result<Self> {
        if !(shape > 0.0 && shape.is_finite() && scale > 0.0 && scale.is_finite()) {
            return Err(Error::Domain(format!(
                "gamma parameters must be positive (shape {shape}, scale {scale})"
            )));
        }
        Ok(Self { shape, scale })
    }

    pub fn mean(&self) -> f64 {
        self.shape * self.scale
    }
}

/// Continuous intensity distribution used by the quantile-mapping routines.
pub trait IntensityDistribution {
    fn cdf(&self, x: f64) -> f64;
    fn inv_cdf(&self, u: f64) -> Result<f64>;
}

impl IntensityDistribution for GammaParams {
    fn cdf(&self, x: f64) -> f64 {
        gamma_cdf(self, x)
    }

    fn inv_cdf(&self, u: f64) -> Result<f64> {
        gamma_inv_cdf(self, u)
    }
}

/// Maximum-likelihood fit. The shape solves `ln k - digamma(k) = ln(mean) -
/// mean(ln x)` by Newton iteration seeded with the method-of-moments shape.
pub fn gamma_fit(sample: &[f64], min_fit_n: usize) -> Result<GammaParams> {
    let n = sample.len();
    if n < min_fit_n.max(2) {
        return Err(Error::FitInsufficientData {
            n,
            min: min_fit_n.max(2),
        });
    }
    if let Some(x) = sample.iter().find(|x| !(**x > 0.0 && x.is_finite())) {
        return Err(Error::Domain(format!(
            "gamma fit needs positive values, got {x}"
        )));
    }
    let nf = n as f64;
    let mean = sample.iter().sum::<f64>() / nf;
    let mean_log = sample.iter().map(|x| x.ln()).sum::<f64>() / nf;
    let s = mean.ln() - mean_log;
    let var = sample.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / nf;
    if !(s > 1e-14) || var <= 0.0 {
        return Err(Error::Degenerate("all values identical".into()));
    }

    let mut k = mean * mean / var;
    for _ in 0..FIT_MAX_ITER {
        let f = k.ln() - digamma(k) - s;
        let df = 1.0 / k - trigamma(k);
        let mut next = k - f / df;
        if !(next > 0.0) || !next.is_finite() {
            next = k / 2.0;
        }
        let done = ((next - k) / k).abs() < FIT_REL_TOL;
        k = next;
        if done {
            break;
        }
    }
    GammaParams::new(k, mean / k)
}

pub fn gamma_cdf(params: &GammaParams, x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x <= 0.0 {
        return 0.0;
    }
    if x.is_infinite() {
        return 1.0;
    }
    gamma_lr(params.shape, x / params.scale).clamp(0.0, 1.0)
}

/// Numerical inverse of [`gamma_cdf`] for `u` in `[0, 1)`.
pub fn gamma_inv_cdf(params: &GammaParams, u: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&u) {
        return Err(Error::Domain(format!("quantile level {u} outside [0, 1)")));
    }
    if u == 0.0 {
        return Ok(0.0);
    }
    Ok(params.scale * standard_quantile(params.shape, u))
}

/// Quantile of the unit-scale Gamma(k) by safeguarded Newton iteration.
fn standard_quantile(k: f64, u: f64) -> f64 {
    let cdf = |z: f64| gamma_lr(k, z);
    let ln_gk = ln_gamma(k);

    let mut lo = 0.0;
    let mut hi = k.max(1.0);
    while cdf(hi) < u {
        lo = hi;
        hi *= 2.0;
        if hi > 1e300 {
            return hi;
        }
    }
    // Lower-tail series approximation P(z) ~ z^k / Gamma(k + 1).
    let small = ((u.ln() + ln_gamma(k + 1.0)) / k).exp();
    let mut z = if small > lo && small < hi {
        small
    } else {
        0.5 * (lo + hi)
    };

    for _ in 0..300 {
        let f = cdf(z) - u;
        if f == 0.0 {
            return z;
        }
        if f < 0.0 {
            lo = z;
        } else {
            hi = z;
        }
        let pdf = ((k - 1.0) * z.ln() - z - ln_gk).exp();
        let newton = z - f / pdf;
        let next = if newton.is_finite() && newton > lo && newton < hi {
            newton
        } else if lo > 0.0 {
            (lo * hi).sqrt()
        } else {
            hi / 16.0
        };
        if (next - z).abs() <= 1e-15 * next || hi - lo <= 1e-15 * hi {
            return next;
        }
        z = next;
    }
    z
}

/// Second derivative of `ln Gamma`.
pub(crate) fn trigamma(mut x: f64) -> f64 {
    let mut acc = 0.0;
    while x < 12.0 {
        acc += 1.0 / (x * x);
        x += 1.0;
    }
    let x2 = 1.0 / (x * x);
    acc + 1.0 / x
        + x2 / 2.0
        + (1.0 / x) * x2 * (1.0 / 6.0 - x2 * (1.0 / 30.0 - x2 * (1.0 / 42.0 - x2 / 30.0)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn draw(params: GammaParams, n: usize, seed: u64) -> Vec<f64> {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| gamma_inv_cdf(&params, rng.random::<f64>()).unwrap())
            .collect()
    }

    #[test]
    fn exponential_special_case() {
        let p = GammaParams::new(1.0, 2.0).unwrap();
        assert!((gamma_cdf(&p, 2.0) - (1.0 - (-1.0f64).exp())).abs() < 1e-12);
        assert_eq!(gamma_cdf(&p, 0.0), 0.0);
        assert_eq!(gamma_cdf(&p, -3.0), 0.0);
    }

    #[test]
    fn round_trip_example() {
        let p = GammaParams::new(2.3, 7.1).unwrap();
        let x = gamma_inv_cdf(&p, gamma_cdf(&p, 10.0)).unwrap();
        assert!((x - 10.0).abs() < 1e-6, "{x}");
    }

    #[test]
    fn unit_level_is_an_error() {
        let p = GammaParams::new(2.0, 1.0).unwrap();
        assert!(gamma_inv_cdf(&p, 1.0).is_err());
        assert_eq!(gamma_inv_cdf(&p, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn trigamma_known_values() {
        // trigamma(1) = pi^2/6, trigamma(1/2) = pi^2/2
        let pi2 = std::f64::consts::PI.powi(2);
        assert!((trigamma(1.0) - pi2 / 6.0).abs() < 1e-12);
        assert!((trigamma(0.5) - pi2 / 2.0).abs() < 1e-11);
    }

    #[test]
    fn fit_recovers_parameters() {
        for (shape, scale, seed) in [(0.8, 8.0, 1), (1.0, 5.0, 2), (2.5, 3.0, 3)] {
            let truth = GammaParams::new(shape, scale).unwrap();
            let x = draw(truth, 10_000, seed);
            let fit = gamma_fit(&x, DEFAULT_MIN_FIT_N).unwrap();
            assert!((fit.shape / shape - 1.0).abs() < 0.05, "{fit:?}");
            assert!((fit.scale / scale - 1.0).abs() < 0.05, "{fit:?}");
            let mean = x.iter().sum::<f64>() / x.len() as f64;
            // MLE preserves the sample mean exactly
            assert!((fit.mean() - mean).abs() < 1e-9 * mean);
        }
    }

    #[test]
    fn fit_satisfies_score_equation() {
        let x = draw(GammaParams::new(0.7, 4.0).unwrap(), 500, 9);
        let fit = gamma_fit(&x, 10).unwrap();
        let n = x.len() as f64;
        let s = (x.iter().sum::<f64>() / n).ln() - x.iter().map(|v| v.ln()).sum::<f64>() / n;
        assert!((fit.shape.ln() - digamma(fit.shape) - s).abs() < 1e-10);
    }

    #[test]
    fn fit_errors() {
        assert!(matches!(
            gamma_fit(&[1.0, 2.0, 3.0], 10),
            Err(Error::FitInsufficientData { n: 3, min: 10 })
        ));
        assert!(matches!(
            gamma_fit(&[2.0; 20], 10),
            Err(Error::Degenerate(_))
        ));
        assert!(gamma_fit(&[0.0, 1.0, 2.0], 2).is_err());
    }

    proptest! {
        #[test]
        fn cdf_inverse_round_trip(shape in 0.2f64..20.0, scale in 0.1f64..30.0, z in 0.01f64..3.0) {
            let p = GammaParams::new(shape, scale).unwrap();
            let x = z * p.mean();
            let u = gamma_cdf(&p, x);
            prop_assume!(u > 1e-12 && u < 1.0 - 1e-6);
            let back = gamma_inv_cdf(&p, u).unwrap();
            prop_assert!((back - x).abs() <= 1e-8 * x, "x {} back {}", x, back);
        }

        #[test]
        fn monotone(shape in 0.2f64..20.0, scale in 0.1f64..30.0, a in 0.0f64..100.0, b in 0.0f64..100.0) {
            let p = GammaParams::new(shape, scale).unwrap();
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(gamma_cdf(&p, lo) <= gamma_cdf(&p, hi));
            let (ul, uh) = (lo / 100.0 * 0.999, hi / 100.0 * 0.999);
            prop_assert!(gamma_inv_cdf(&p, ul).unwrap() <= gamma_inv_cdf(&p, uh).unwrap());
        }
    }
}
