//! Statistical primitives shared by calibration and evaluation.

mod gamma;
mod ks;
mod metrics;
mod quantile;

pub use gamma::{
    gamma_cdf, gamma_fit, gamma_inv_cdf, GammaParams, IntensityDistribution, DEFAULT_MIN_FIT_N,
};
pub use ks::{kolmogorov_survival, ks_two_sample, KsResult};
pub use metrics::{comparison_metrics, ComparisonMetrics};
pub use quantile::{
    empirical_quantile, exceedance_fraction, quantile_sorted, sorted_present,
    threshold_for_frequency, threshold_for_frequency_sorted,
};

/// Arithmetic mean, `None` for an empty slice.
pub fn mean(values: &[f64]) -> Option<f64> {
    (!values.is_empty()).then(|| values.iter().sum::<f64>() / values.len() as f64)
}
