use serde::{Deserialize, Serialize};

use super::special::student_t_two_tailed;
use super::{check_finite, mean, StatsError};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairedTTestResult {
    pub t: f64,
    pub df: u64,
    /// Two-tailed probability.
    pub p: f64,
    pub n: usize,
    /// Mean of `x - y`.
    pub mean_diff: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelationResult {
    pub r: f64,
    /// Two-tailed probability of |r| at least this large under no correlation.
    pub p: f64,
    pub n: usize,
}

fn check_pair(xs: &[f64], ys: &[f64], required: usize) -> Result<(), StatsError> {
    if xs.len() != ys.len() {
        return Err(StatsError::LengthMismatch {
            left: xs.len(),
            right: ys.len(),
        });
    }
    if xs.len() < required {
        return Err(StatsError::TooFew {
            required,
            got: xs.len(),
        });
    }
    check_finite(xs)?;
    check_finite(ys)
}

/// Paired-sample t-test on `x - y`.
pub fn paired_t_test(xs: &[f64], ys: &[f64]) -> Result<PairedTTestResult, StatsError> {
    check_pair(xs, ys, 2)?;
    let diffs: Vec<f64> = xs.iter().zip(ys).map(|(x, y)| x - y).collect();
    let n = diffs.len();
    let m = mean(&diffs);
    let var = diffs.iter().map(|d| (d - m).powi(2)).sum::<f64>() / (n - 1) as f64;
    if var == 0.0 {
        return Err(StatsError::ZeroVariance);
    }
    let t = m / (var.sqrt() / (n as f64).sqrt());
    let df = (n - 1) as u64;
    Ok(PairedTTestResult {
        t,
        df,
        p: student_t_two_tailed(t, df as f64),
        n,
        mean_diff: m,
    })
}

/// Pearson product-moment correlation with a two-tailed p-value from
/// `t = r * sqrt((n - 2) / (1 - r²))` on `n - 2` degrees of freedom.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Result<CorrelationResult, StatsError> {
    check_pair(xs, ys, 3)?;
    let mx = mean(xs);
    let my = mean(ys);
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let dx = x - mx;
        let dy = y - my;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(StatsError::ConstantInput);
    }
    let r = (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0);
    let n = xs.len();
    let df = (n - 2) as f64;
    let p = if r.abs() == 1.0 {
        0.0
    } else {
        student_t_two_tailed(r * (df / (1.0 - r * r)).sqrt(), df)
    };
    Ok(CorrelationResult { r, p, n })
}
