//! Thresholds, tail-index estimators and log-log plot data.

use serde::{Deserialize, Serialize};

use crate::numerics::empirical_quantile;
use crate::{Error, Result};

pub const MIN_THRESHOLD_SAMPLE: usize = 10;
pub const MIN_TAIL: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TailMethod {
    Hill,
    RankHalf,
}

/// Observations at or above a threshold, stored as log excesses.
#[derive(Debug, Clone, PartialEq)]
pub struct TailSample {
    pub threshold: f64,
    pub excess_logs: Vec<f64>,
}

impl TailSample {
    /// Collect `log(x / threshold)` for every `x >= threshold`.
    pub fn new(xs: &[f64], threshold: f64) -> Result<Self> {
        if !(threshold > 0.0) || !threshold.is_finite() {
            return Err(Error::Domain(format!("threshold must be positive, got {threshold}")));
        }
        let mut excess_logs = Vec::new();
        for &x in xs.iter().filter(|&&x| x >= threshold) {
            excess_logs.push((x / threshold).ln());
        }
        Ok(Self {
            threshold,
            excess_logs,
        })
    }

    pub fn k(&self) -> usize {
        self.excess_logs.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailIndexEstimate {
    pub alpha_hat: f64,
    pub se: f64,
    pub k: usize,
    pub method: TailMethod,
}

/// Empirical `q`-quantile of `xs`; the tail is `{x >= threshold}`.
pub fn select_threshold(xs: &[f64], q: f64) -> Result<f64> {
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::InvalidParameter(format!("tail quantile must lie in (0, 1), got {q}")));
    }
    if xs.len() < MIN_THRESHOLD_SAMPLE {
        return Err(Error::InsufficientData(format!(
            "threshold selection needs at least {MIN_THRESHOLD_SAMPLE} observations, got {}",
            xs.len()
        )));
    }
    empirical_quantile(xs, q)
}

fn check_positive(xs: &[f64]) -> Result<()> {
    match xs.iter().position(|&x| !(x > 0.0) || !x.is_finite()) {
        Some(i) => Err(Error::Domain(format!(
            "observation {} is not a positive finite value ({})",
            i + 1,
            xs[i]
        ))),
        None => Ok(()),
    }
}

/// Hill estimator `k / sum log(x_i / threshold)` over the tail.
pub fn hill_estimate(xs: &[f64], threshold: f64) -> Result<TailIndexEstimate> {
    if !(threshold > 0.0) {
        return Err(Error::Domain(format!("threshold must be positive, got {threshold}")));
    }
    let tail: Vec<f64> = xs.iter().copied().filter(|&x| x >= threshold).collect();
    check_positive(&tail)?;
    let k = tail.len();
    if k < MIN_TAIL {
        return Err(Error::InsufficientTail(format!(
            "{k} observations at or above {threshold}, need {MIN_TAIL}"
        )));
    }
    let sum: f64 = tail.iter().map(|&x| (x / threshold).ln()).sum();
    if !(sum > 0.0) {
        return Err(Error::DegenerateTail(
            "every tail observation equals the threshold".into(),
        ));
    }
    let alpha_hat = k as f64 / sum;
    Ok(TailIndexEstimate {
        alpha_hat,
        se: alpha_hat / (k as f64).sqrt(),
        k,
        method: TailMethod::Hill,
    })
}

/// Rank-1/2 estimator: OLS of `log(rank - 1/2)` on `log x` over the tail
/// sorted in descending order; `alpha = -slope`, `se = alpha sqrt(2/k)`.
pub fn rank_half_estimate(xs: &[f64], threshold: f64) -> Result<TailIndexEstimate> {
    if !(threshold > 0.0) {
        return Err(Error::Domain(format!("threshold must be positive, got {threshold}")));
    }
    let mut tail: Vec<f64> = xs.iter().copied().filter(|&x| x >= threshold).collect();
    check_positive(&tail)?;
    let k = tail.len();
    if k < MIN_TAIL {
        return Err(Error::InsufficientTail(format!(
            "{k} observations at or above {threshold}, need {MIN_TAIL}"
        )));
    }
    // Stable sort keeps input order among ties.
    tail.sort_by(|a, b| b.total_cmp(a));
    let kf = k as f64;
    let lx: Vec<f64> = tail.iter().map(|x| x.ln()).collect();
    let lr: Vec<f64> = (1..=k).map(|r| (r as f64 - 0.5).ln()).collect();
    let mx = lx.iter().sum::<f64>() / kf;
    let mr = lr.iter().sum::<f64>() / kf;
    let sxx: f64 = lx.iter().map(|v| (v - mx).powi(2)).sum();
    if !(sxx > 0.0) {
        return Err(Error::DegenerateTail("log tail values have zero variance".into()));
    }
    let sxy: f64 = lx.iter().zip(&lr).map(|(a, b)| (a - mx) * (b - mr)).sum();
    let alpha_hat = -sxy / sxx;
    Ok(TailIndexEstimate {
        alpha_hat,
        se: alpha_hat * (2.0 / kf).sqrt(),
        k,
        method: TailMethod::RankHalf,
    })
}

pub fn estimate(method: TailMethod, xs: &[f64], threshold: f64) -> Result<TailIndexEstimate> {
    match method {
        TailMethod::Hill => hill_estimate(xs, threshold),
        TailMethod::RankHalf => rank_half_estimate(xs, threshold),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogLogPoint {
    pub log_x: f64,
    pub log_survival: f64,
}

/// Empirical survival on log-log axes with plotting position
/// `(n - i + 1/2) / n` for the i-th smallest value.
pub fn loglog_points(xs: &[f64]) -> Result<Vec<LogLogPoint>> {
    check_positive(xs)?;
    let mut sorted = xs.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    Ok(sorted
        .iter()
        .enumerate()
        .map(|(i, x)| LogLogPoint {
            log_x: x.ln(),
            log_survival: ((n - (i as f64 + 1.0) + 0.5) / n).ln(),
        })
        .collect())
}
