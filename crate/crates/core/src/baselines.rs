//! Comparison estimators: logit on all or tail observations, fixed-effects
//! panel logit in the raw covariate, and Gaussian-kernel local linear and
//! local logit regressions.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::cs_model::CrossSection;
use crate::logistic::{fit_logistic, sigmoid};
use crate::panel::{fit_panel_fe, Correction, FeFit, PanelData, Transform};
use crate::{clamp_prob, Error, Result};

/// `1.06 * sd * n^(-1/5)` with the `n - 1` standard deviation.
pub fn silverman_bandwidth(values: &[f64]) -> Result<f64> {
    let n = values.len();
    if n < 2 {
        return Err(Error::InsufficientData("bandwidth needs at least two values".into()));
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let sd = var.sqrt();
    if !(sd > 0.0) || !sd.is_finite() {
        return Err(Error::DegenerateData(format!("standard deviation is {sd}")));
    }
    Ok(1.06 * sd * (n as f64).powf(-0.2))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Subset {
    All,
    Tail,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogitFit {
    /// `(intercept, slope on x)`.
    pub beta: Vec<f64>,
    pub cov: Option<DMatrix<f64>>,
    pub subset: Subset,
    /// Per-outcome thresholds for the tail subset.
    pub thresholds: Option<[f64; 2]>,
    pub n: usize,
    pub converged: bool,
    pub separated: bool,
}

impl LogitFit {
    pub fn predict(&self, x: f64) -> f64 {
        clamp_prob(sigmoid(self.beta[0] + self.beta[1] * x))
    }
}

/// Logistic regression of `y` on `(1, x)`.
///
/// The tail subset keeps observations with `x_i` at or above the `q`
/// quantile of their own outcome's subsample, the same cutoffs used by the
/// tail estimator.
pub fn fit_logit_cs(data: &CrossSection, subset: Subset, q: Option<f64>) -> Result<LogitFit> {
    let (keep, thresholds): (Vec<usize>, _) = match subset {
        Subset::All => ((0..data.len()).collect(), None),
        Subset::Tail => {
            let q = q.ok_or_else(|| Error::InvalidParameter("tail subset needs a quantile".into()))?;
            let mut thr = [0.0; 2];
            for y in 0..2u8 {
                let xs: Vec<f64> = (0..data.len())
                    .filter(|&i| data.y()[i] == y)
                    .map(|i| data.x()[i])
                    .collect();
                thr[y as usize] = crate::tail_index::select_threshold(&xs, q)?;
            }
            let keep = (0..data.len())
                .filter(|&i| data.x()[i] >= thr[data.y()[i] as usize])
                .collect();
            (keep, Some(thr))
        }
    };
    let n = keep.len();
    if n == 0 {
        return Err(Error::EmptyData("logit subset is empty".into()));
    }
    let design = DMatrix::from_fn(n, 2, |i, j| if j == 0 { 1.0 } else { data.x()[keep[i]] });
    let y: Vec<f64> = keep.iter().map(|&i| data.y()[i] as f64).collect();
    let fit = fit_logistic(&design, &y, None)?;
    Ok(LogitFit {
        beta: fit.beta.as_slice().to_vec(),
        cov: fit.cov,
        subset,
        thresholds,
        n,
        converged: fit.converged,
        separated: fit.separated,
    })
}

/// Fixed-effects panel logit in the raw covariate.
pub fn fit_logit_panel(panel: &PanelData, subset: Subset, q: f64, correction: Correction) -> Result<FeFit> {
    let transform = match subset {
        Subset::All => Transform::RawAll,
        Subset::Tail => Transform::RawTail,
    };
    fit_panel_fe(panel, q, transform, correction)
}

/// Extra conditioning variable for the local estimators (for panels, the
/// time sum of `x`).
#[derive(Debug, Clone, Copy)]
pub struct Conditioning<'a> {
    pub v: &'a [f64],
    pub v0: f64,
    pub h: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalEstimate {
    /// Estimate used for scoring: clamped to `[0, 1]` for local linear and to
    /// `(1e-12, 1 - 1e-12)` for local logit.
    pub value: f64,
    /// Unclamped fitted intercept (local linear) or probability (local logit).
    pub raw: f64,
    pub separated: bool,
}

fn gaussian(u: f64) -> f64 {
    (-0.5 * u * u).exp()
}

struct LocalDesign {
    design: DMatrix<f64>,
    weights: Vec<f64>,
}

fn local_design(x: &[f64], x0: f64, h: f64, cond: Option<Conditioning<'_>>) -> Result<LocalDesign> {
    if !(h > 0.0) {
        return Err(Error::InvalidParameter(format!("bandwidth must be positive, got {h}")));
    }
    let n = x.len();
    if let Some(c) = cond {
        if c.v.len() != n {
            return Err(Error::InvalidInput("conditioning values do not match the data".into()));
        }
        if !(c.h > 0.0) {
            return Err(Error::InvalidParameter("conditioning bandwidth must be positive".into()));
        }
    }
    let p = if cond.is_some() { 3 } else { 2 };
    // Offsets are expressed in bandwidth units; the intercept is unaffected.
    let design = DMatrix::from_fn(n, p, |i, j| match j {
        0 => 1.0,
        1 => (x[i] - x0) / h,
        _ => {
            let c = cond.unwrap();
            (c.v[i] - c.v0) / c.h
        }
    });
    let weights: Vec<f64> = (0..n)
        .map(|i| {
            let mut w = gaussian((x[i] - x0) / h);
            if let Some(c) = cond {
                w *= gaussian((c.v[i] - c.v0) / c.h);
            }
            w
        })
        .collect();
    let mass: f64 = weights.iter().sum();
    if !(mass > 1e-10) {
        return Err(Error::EffectiveSample(format!("kernel mass {mass:e} at x0 = {x0}")));
    }
    Ok(LocalDesign { design, weights })
}

/// Kernel-weighted least squares of `y` on `(1, x - x0 [, v - v0])`.
pub fn local_linear(x: &[f64], y: &[f64], x0: f64, h: f64, cond: Option<Conditioning<'_>>) -> Result<LocalEstimate> {
    if x.len() != y.len() {
        return Err(Error::InvalidInput("x and y lengths differ".into()));
    }
    let LocalDesign { design, weights } = local_design(x, x0, h, cond)?;
    let p = design.ncols();
    let mut xtwx = DMatrix::zeros(p, p);
    let mut xtwy = DVector::zeros(p);
    for i in 0..design.nrows() {
        let w = weights[i];
        if w == 0.0 {
            continue;
        }
        let row = design.row(i).transpose();
        xtwx += &row * row.transpose() * w;
        xtwy += &row * (w * y[i]);
    }
    let beta = xtwx
        .cholesky()
        .map(|c| c.solve(&xtwy))
        .filter(|b| b.iter().all(|v| v.is_finite()))
        .ok_or_else(|| Error::DegenerateDesign(format!("weighted design is singular at x0 = {x0}")))?;
    Ok(LocalEstimate {
        value: beta[0].clamp(0.0, 1.0),
        raw: beta[0],
        separated: false,
    })
}

/// Kernel-weighted logistic regression; the estimate is `logistic(b0)`.
pub fn local_logit(x: &[f64], y: &[f64], x0: f64, h: f64, cond: Option<Conditioning<'_>>) -> Result<LocalEstimate> {
    if x.len() != y.len() {
        return Err(Error::InvalidInput("x and y lengths differ".into()));
    }
    let LocalDesign { design, weights } = local_design(x, x0, h, cond)?;
    let fit = fit_logistic(&design, y, Some(&weights))?;
    let raw = sigmoid(fit.beta[0]);
    Ok(LocalEstimate {
        value: clamp_prob(raw),
        raw,
        separated: fit.separated,
    })
}
