use serde::{Deserialize, Serialize};

use super::{check_finite, mean, StatsError};

/// Summary of a sample in the input's units. `sd` is the sample standard
/// deviation (n - 1 denominator); quartiles interpolate linearly between
/// order statistics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Descriptives {
    pub n: usize,
    pub mean: f64,
    pub median: f64,
    pub sd: f64,
    pub q1: f64,
    pub q3: f64,
    pub iqr: f64,
    pub range: f64,
    pub min: f64,
    pub max: f64,
    /// Set when `n == 1`: `sd` is reported as 0 rather than undefined.
    pub single_observation: bool,
}

/// Quantile of sorted data by linear interpolation between order
/// statistics (position `(n - 1) * p`).
pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let h = (sorted.len() - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn descriptives(xs: &[f64]) -> Result<Descriptives, StatsError> {
    if xs.is_empty() {
        return Err(StatsError::Empty);
    }
    check_finite(xs)?;
    let mut sorted = xs.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = xs.len();
    let m = mean(xs);
    let sd = if n > 1 {
        (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
    } else {
        0.0
    };
    let min = sorted[0];
    let max = sorted[n - 1];
    let q1 = quantile(&sorted, 0.25);
    let q3 = quantile(&sorted, 0.75);
    Ok(Descriptives {
        n,
        mean: m,
        median: quantile(&sorted, 0.5),
        sd,
        q1,
        q3,
        iqr: q3 - q1,
        range: max - min,
        min,
        max,
        single_observation: n == 1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn table_extremes_give_range() {
        let d = descriptives(&[617.0, 322.0, 700.0, 1443.0, 500.0]).unwrap();
        assert_eq!(d.range, 1121.0);
        // numpy.percentile (linear): [500, 617, 700]
        assert_eq!((d.q1, d.median, d.q3), (500.0, 617.0, 700.0));
        let d = descriptives(&[315.0, 454.0, 1336.0]).unwrap();
        assert_eq!(d.range, 1021.0);
    }

    #[test]
    fn single_value() {
        let d = descriptives(&[5.0]).unwrap();
        assert_eq!((d.mean, d.median, d.min, d.max, d.sd, d.range), (5.0, 5.0, 5.0, 5.0, 0.0, 0.0));
        assert!(d.single_observation);
    }

    #[test]
    fn one_to_four() {
        let d = descriptives(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(d.mean, 2.5);
        assert_eq!(d.median, 2.5);
        // sqrt(5/3)
        assert!((d.sd - 1.290_994_448_735_806).abs() < 1e-12);
        assert_eq!((d.q1, d.q3, d.iqr), (1.75, 3.25, 1.5));
        assert!(!d.single_observation);
    }

    #[test]
    fn rejects_empty_and_nan() {
        assert_eq!(descriptives(&[]), Err(StatsError::Empty));
        assert_eq!(
            descriptives(&[1.0, f64::NAN]),
            Err(StatsError::NonFinite { index: 1 })
        );
    }

    proptest! {
        #[test]
        fn permutation_invariant(mut xs in prop::collection::vec(-1e4f64..1e4, 1..40), seed in any::<u64>()) {
            let a = descriptives(&xs).unwrap();
            // deterministic shuffle
            let mut s = seed;
            for i in (1..xs.len()).rev() {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                xs.swap(i, (s >> 33) as usize % (i + 1));
            }
            let b = descriptives(&xs).unwrap();
            prop_assert_eq!(a.median, b.median);
            prop_assert_eq!(a.min, b.min);
            prop_assert_eq!(a.max, b.max);
            prop_assert_eq!(a.iqr, b.iqr);
            prop_assert!((a.mean - b.mean).abs() <= 1e-9 * (1.0 + a.mean.abs()));
            prop_assert!((a.sd - b.sd).abs() <= 1e-9 * (1.0 + a.sd));
        }

        #[test]
        fn affine_maps(xs in prop::collection::vec(-1e3f64..1e3, 1..40), a in -20.0f64..20.0, b in -500.0f64..500.0) {
            prop_assume!(a.abs() > 1e-3);
            let d = descriptives(&xs).unwrap();
            let ys: Vec<f64> = xs.iter().map(|x| a * x + b).collect();
            let e = descriptives(&ys).unwrap();
            let tol = |v: f64| 1e-9 * (1.0 + v.abs());
            prop_assert!((e.mean - (a * d.mean + b)).abs() <= tol(e.mean) * 1e3);
            prop_assert!((e.median - (a * d.median + b)).abs() <= tol(e.median) * 1e3);
            let (lo, hi) = if a > 0.0 { (d.min, d.max) } else { (d.max, d.min) };
            prop_assert!((e.min - (a * lo + b)).abs() <= tol(e.min));
            prop_assert!((e.max - (a * hi + b)).abs() <= tol(e.max));
            prop_assert!((e.sd - a.abs() * d.sd).abs() <= tol(e.sd) * 1e3);
            prop_assert!((e.range - a.abs() * d.range).abs() <= tol(e.range) * 1e3);
            prop_assert!(e.min <= e.median && e.median <= e.max && e.sd >= 0.0);
        }
    }
}
