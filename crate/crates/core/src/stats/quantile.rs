use crate::error::{Error, Result};

/// Sorted copy of the finite values in `sample` (NaN marks missing).
pub fn sorted_present(sample: &[f64]) -> Vec<f64> {
    let mut v: Vec<f64> = sample.iter().copied().filter(|x| !x.is_nan()).collect();
    v.sort_by(f64::total_cmp);
    v
}

/// Order statistic `x_(k)` with `k = ceil(p n)` clamped to `[1, n]`.
pub fn empirical_quantile(sample: &[f64], p: f64) -> Result<f64> {
    let v = sorted_present(sample);
    quantile_sorted(&v, p)
}

/// [`empirical_quantile`] on data that is already sorted and free of NaN.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> Result<f64> {
    if sorted.is_empty() {
        return Err(Error::EmptySample);
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Domain(format!("probability {p} outside [0, 1]")));
    }
    let n = sorted.len();
    // Guard against p*n landing a hair above an integer through rounding.
    let k = (p * n as f64 - 1e-9).ceil().clamp(1.0, n as f64) as usize;
    Ok(sorted[k - 1])
}

/// Threshold whose exceedance frequency in `values` is as close as the
/// order statistics allow to `target_p`, floored at zero.
pub fn threshold_for_frequency(values: &[f64], target_p: f64) -> Result<f64> {
    let v = sorted_present(values);
    threshold_for_frequency_sorted(&v, target_p)
}

pub fn threshold_for_frequency_sorted(sorted: &[f64], target_p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&target_p) {
        return Err(Error::Domain(format!(
            "probability {target_p} outside [0, 1]"
        )));
    }
    Ok(quantile_sorted(sorted, 1.0 - target_p)?.max(0.0))
}

/// Fraction of present values strictly above `threshold`.
pub fn exceedance_fraction(values: &[f64], threshold: f64) -> Option<f64> {
    let mut n = 0usize;
    let mut k = 0usize;
    for &x in values.iter().filter(|x| !x.is_nan()) {
        n += 1;
        if x > threshold {
            k += 1;
        }
    }
    (n > 0).then(|| k as f64 / n as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Brute-force inverse ECDF: smallest order statistic whose ECDF reaches p.
    fn brute_quantile(sample: &[f64], p: f64) -> f64 {
        let v = sorted_present(sample);
        let n = v.len() as f64;
        for (i, x) in v.iter().enumerate() {
            if (i + 1) as f64 >= p * n - 1e-9 {
                return *x;
            }
        }
        *v.last().unwrap()
    }

    #[test]
    fn examples() {
        assert_eq!(
            empirical_quantile(&[1.0, 2.0, 3.0, 4.0, 5.0], 0.5).unwrap(),
            3.0
        );
        for p in [0.0, 0.3, 1.0] {
            assert_eq!(empirical_quantile(&[7.0], p).unwrap(), 7.0);
        }
        assert_eq!(empirical_quantile(&[1.0, 2.0, 3.0, 4.0], 0.9).unwrap(), 4.0);
        assert_eq!(brute_quantile(&[1.0, 2.0, 3.0, 4.0], 0.9), 4.0);
        assert_eq!(empirical_quantile(&[4.0, 1.0, 3.0], 0.0).unwrap(), 1.0);
        assert!(matches!(
            empirical_quantile(&[], 0.5),
            Err(Error::EmptySample)
        ));
        assert!(matches!(
            empirical_quantile(&[f64::NAN], 0.5),
            Err(Error::EmptySample)
        ));
    }

    #[test]
    fn threshold_is_seventh_order_statistic() {
        let v = [0.0, 0.0, 1.0, 2.0, 2.5, 3.0, 4.0, 6.0, 7.5, 9.0];
        let t = threshold_for_frequency(&v, 0.3).unwrap();
        assert_eq!(t, 4.0);
        assert_eq!(exceedance_fraction(&v, t), Some(0.3));
    }

    #[test]
    fn threshold_with_zero_ties_floors_at_zero() {
        // 4 of 10 positive; asking for 70% exceedance cannot be met.
        let v = [0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 2.0, 3.0, 4.0];
        let t = threshold_for_frequency(&v, 0.7).unwrap();
        assert_eq!(t, 0.0);
        // Brute force over every candidate cut: best achievable is 0.4.
        let best = v
            .iter()
            .map(|&c| exceedance_fraction(&v, c).unwrap())
            .fold(0.0f64, f64::max);
        assert_eq!(exceedance_fraction(&v, t), Some(best));
        assert!(best < 0.7);
    }

    #[test]
    fn zero_target_gives_maximum() {
        let v = [3.0, 9.0, 1.0];
        assert_eq!(threshold_for_frequency(&v, 0.0).unwrap(), 9.0);
    }

    proptest! {
        #[test]
        fn matches_brute_force(v in proptest::collection::vec(0.0f64..100.0, 1..60), p in 0.0f64..=1.0) {
            prop_assert_eq!(empirical_quantile(&v, p).unwrap(), brute_quantile(&v, p));
        }

        #[test]
        fn monotone_in_p(v in proptest::collection::vec(-5.0f64..100.0, 1..60), a in 0.0f64..=1.0, b in 0.0f64..=1.0) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(empirical_quantile(&v, lo).unwrap() <= empirical_quantile(&v, hi).unwrap());
        }

        #[test]
        fn frequency_within_one_step_for_distinct(
            v in proptest::collection::btree_set(1u32..100_000, 1..200),
            p in 0.0f64..=1.0,
        ) {
            let v: Vec<f64> = v.into_iter().map(|x| x as f64 / 100.0).collect();
            let t = threshold_for_frequency(&v, p).unwrap();
            let achieved = exceedance_fraction(&v, t).unwrap();
            prop_assert!((achieved - p).abs() <= 1.0 / v.len() as f64 + 1e-12);
        }
    }
}
