//! Forecast scoring and Monte Carlo summaries.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::{clamp_prob, Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastRecord {
    pub unit: String,
    pub p_hat: f64,
    pub y: u8,
}

impl ForecastRecord {
    pub fn new(unit: impl Into<String>, p_hat: f64, y: u8) -> Self {
        Self {
            unit: unit.into(),
            p_hat: clamp_prob(p_hat),
            y,
        }
    }

    /// `log p` if `y = 1`, else `log(1 - p)`.
    pub fn score(&self) -> f64 {
        if self.y == 1 {
            self.p_hat.ln()
        } else {
            (1.0 - self.p_hat).ln()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Lps {
    pub mean: f64,
    pub sum: f64,
    pub n: usize,
}

pub fn log_predictive_score(fs: &[ForecastRecord]) -> Result<Lps> {
    if fs.is_empty() {
        return Err(Error::EmptyData("no forecasts to score".into()));
    }
    let sum: f64 = fs.iter().map(ForecastRecord::score).sum();
    let n = fs.len();
    Ok(Lps {
        mean: sum / n as f64,
        sum,
        n,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiffTest {
    pub mean_diff: f64,
    pub t: f64,
    /// Two-sided normal p-value; `None` when the differences have no spread.
    pub p: Option<f64>,
    pub n: usize,
}

impl DiffTest {
    pub fn is_degenerate(&self) -> bool {
        self.p.is_none()
    }
}

/// Paired t-test on score differences `d_i = score_a,i - score_b,i`.
pub fn paired_test(d: &[f64]) -> Result<DiffTest> {
    let n = d.len();
    if n < 2 {
        return Err(Error::InsufficientData(format!("{n} paired differences")));
    }
    let mean = d.iter().sum::<f64>() / n as f64;
    let var = d.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let se = (var / n as f64).sqrt();
    if !(se > 0.0) {
        return Ok(DiffTest {
            mean_diff: mean,
            t: if mean == 0.0 { 0.0 } else { f64::INFINITY.copysign(mean) },
            p: None,
            n,
        });
    }
    let t = mean / se;
    let normal = Normal::standard();
    let p = 2.0 * normal.cdf(-t.abs());
    Ok(DiffTest {
        mean_diff: mean,
        t,
        p: Some(p),
        n,
    })
}

/// Compare two forecast sets matched by unit.
pub fn lps_diff_test(a: &[ForecastRecord], b: &[ForecastRecord]) -> Result<DiffTest> {
    if a.len() != b.len() {
        return Err(Error::Alignment(format!("{} vs {} forecasts", a.len(), b.len())));
    }
    let index: HashMap<&str, &ForecastRecord> = b.iter().map(|r| (r.unit.as_str(), r)).collect();
    if index.len() != b.len() {
        return Err(Error::Alignment("duplicate unit in forecast set".into()));
    }
    let mut d = Vec::with_capacity(a.len());
    for r in a {
        let other = index
            .get(r.unit.as_str())
            .ok_or_else(|| Error::Alignment(format!("unit {} has no match", r.unit)))?;
        if other.y != r.y {
            return Err(Error::Alignment(format!("unit {}: realized outcomes differ", r.unit)));
        }
        d.push(r.score() - other.score());
    }
    if d.len() < 10 {
        return Err(Error::InsufficientData(format!("{} matched units, need 10", d.len())));
    }
    paired_test(&d)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BiasSdRmse {
    pub bias: f64,
    pub sd: f64,
    pub rmse: f64,
    pub n: usize,
}

/// Bias, population SD and RMSE of `estimates` around `truth`.
pub fn bias_sd_rmse(estimates: &[f64], truth: f64) -> Result<BiasSdRmse> {
    let n = estimates.len();
    if n == 0 {
        return Err(Error::EmptyData("no estimates".into()));
    }
    let nf = n as f64;
    let mean = estimates.iter().sum::<f64>() / nf;
    let sd = (estimates.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / nf).sqrt();
    let rmse = (estimates.iter().map(|e| (e - truth).powi(2)).sum::<f64>() / nf).sqrt();
    Ok(BiasSdRmse {
        bias: mean - truth,
        sd,
        rmse,
        n,
    })
}
