use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Mean error, RMSE, Pearson correlation and ratio of standard deviations of
/// a model series against observations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComparisonMetrics {
    pub n: usize,
    pub mean_error: f64,
    pub rmse: f64,
    pub correlation: Option<f64>,
    pub sd_ratio: Option<f64>,
}

/// Compares `model` (Y) against `obs` (X). Pairs with NaN on either side are
/// dropped. ME and RMSE divide by N; both standard deviations use N - 1.
pub fn comparison_metrics(model: &[f64], obs: &[f64]) -> Result<ComparisonMetrics> {
    if model.len() != obs.len() {
        return Err(Error::Mismatch(format!(
            "series lengths differ ({} vs {})",
            model.len(),
            obs.len()
        )));
    }
    let pairs: Vec<(f64, f64)> = model
        .iter()
        .zip(obs)
        .filter(|(y, x)| !y.is_nan() && !x.is_nan())
        .map(|(&y, &x)| (y, x))
        .collect();
    if pairs.is_empty() {
        return Err(Error::EmptySample);
    }
    let n = pairs.len() as f64;
    let mean_error = pairs.iter().map(|(y, x)| y - x).sum::<f64>() / n;
    let rmse = (pairs.iter().map(|(y, x)| (y - x).powi(2)).sum::<f64>() / n).sqrt();

    let (mut correlation, mut sd_ratio) = (None, None);
    if pairs.len() >= 2 {
        let my = pairs.iter().map(|p| p.0).sum::<f64>() / n;
        let mx = pairs.iter().map(|p| p.1).sum::<f64>() / n;
        let (mut syy, mut sxx, mut sxy) = (0.0, 0.0, 0.0);
        for (y, x) in &pairs {
            syy += (y - my).powi(2);
            sxx += (x - mx).powi(2);
            sxy += (y - my) * (x - mx);
        }
        if syy > 0.0 && sxx > 0.0 {
            correlation = Some((sxy / (syy * sxx).sqrt()).clamp(-1.0, 1.0));
            sd_ratio = Some((syy / (n - 1.0)).sqrt() / (sxx / (n - 1.0)).sqrt());
        }
    }
    Ok(ComparisonMetrics {
        n: pairs.len(),
        mean_error,
        rmse,
        correlation,
        sd_ratio,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ideal_values_on_self() {
        let x = [1.0, 4.0, 2.0, 8.0];
        let m = comparison_metrics(&x, &x).unwrap();
        assert_eq!(m.mean_error, 0.0);
        assert_eq!(m.rmse, 0.0);
        assert_eq!(m.correlation, Some(1.0));
        assert_eq!(m.sd_ratio, Some(1.0));
    }

    #[test]
    fn constant_shift() {
        let x = [1.0, 4.0, 2.0, 8.0];
        let y: Vec<f64> = x.iter().map(|v| v + 2.0).collect();
        let m = comparison_metrics(&y, &x).unwrap();
        assert!((m.mean_error - 2.0).abs() < 1e-12);
        assert!((m.rmse - 2.0).abs() < 1e-12);
        assert!((m.correlation.unwrap() - 1.0).abs() < 1e-12);
        assert!((m.sd_ratio.unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn perfect_anticorrelation() {
        let m = comparison_metrics(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]).unwrap();
        assert_eq!(m.correlation, Some(-1.0));
    }

    #[test]
    fn zero_variance_is_undefined() {
        let m = comparison_metrics(&[2.0, 2.0, 2.0], &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(m.correlation, None);
        assert_eq!(m.sd_ratio, None);
        assert!((m.mean_error - 0.0).abs() < 1e-12);
    }

    #[test]
    fn pairwise_deletion() {
        let m = comparison_metrics(&[1.0, f64::NAN, 3.0], &[1.0, 2.0, f64::NAN]).unwrap();
        assert_eq!(m.n, 1);
        assert_eq!(m.correlation, None);
        assert!(comparison_metrics(&[1.0], &[1.0, 2.0]).is_err());
    }
}
