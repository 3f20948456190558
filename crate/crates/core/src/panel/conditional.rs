//! Conditional likelihood for small-`T` panels.
//!
//! Conditioning on the number of ones among a unit's tail periods removes the
//! unit effect. With per-period regressors `v_t = z log x_t` and
//! `beta = -theta*` a unit contributes
//!
//! ```text
//! beta . sum_{t: y_t = 1} v_t - log sum_{|S| = s} exp(beta . sum_{t in S} v_t)
//! ```
//!
//! The denominator is an elementary symmetric sum, evaluated by a dynamic
//! program that also carries first and second moments.

use nalgebra::{DMatrix, DVector};

use super::{PanelData, PanelFit};
use crate::numerics::linalg::inv_neg;
use crate::numerics::optim::{maximize_concave, Eval, Tolerances};
use crate::{Error, Result};

/// One contributing unit: regressors per period (row-major, `dz` each),
/// outcomes, and a likelihood weight.
#[derive(Debug, Clone, PartialEq)]
pub struct Group {
    pub v: Vec<f64>,
    pub y: Vec<u8>,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalSample {
    pub dz: usize,
    pub groups: Vec<Group>,
}

impl ConditionalSample {
    /// Tail switchers at `threshold`: units with at least two tail periods and
    /// both outcome values among them.
    pub fn from_panel(panel: &PanelData, threshold: f64) -> Self {
        let dz = panel.dz();
        let groups = panel
            .units()
            .iter()
            .filter_map(|u| {
                let tail = u.tail_positions(threshold);
                if tail.len() < 2 {
                    return None;
                }
                let y: Vec<u8> = tail.iter().map(|&k| u.y[k]).collect();
                if !y.contains(&0) || !y.contains(&1) {
                    return None;
                }
                let v = tail
                    .iter()
                    .flat_map(|&k| {
                        let lx = u.x[k].ln();
                        u.z_at(k, dz).iter().map(move |z| z * lx)
                    })
                    .collect();
                Some(Group { v, y, weight: 1.0 })
            })
            .collect();
        Self { dz, groups }
    }

    pub fn len(&self) -> usize {
        self.groups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    /// True when every group's regressors are identical across periods.
    pub fn is_flat(&self) -> bool {
        self.groups.iter().all(|g| {
            let first = &g.v[..self.dz];
            g.v.chunks(self.dz).all(|c| c.iter().zip(first).all(|(a, b)| (a - b).abs() < 1e-14))
        })
    }

    /// Weighted conditional log-likelihood in `theta*` with gradient and
    /// Hessian.
    pub fn objective(&self, theta: &[f64]) -> Eval {
        let d = self.dz;
        let mut value = 0.0;
        let mut grad = DVector::zeros(d);
        let mut hess = DMatrix::zeros(d, d);
        for g in &self.groups {
            if g.weight == 0.0 {
                continue;
            }
            let (lv, gb, hb) = group_loglik(&g.v, &g.y, d, theta);
            value += g.weight * lv;
            // d/dtheta = -d/dbeta; the Hessian is unchanged.
            grad -= gb * g.weight;
            hess += hb * g.weight;
        }
        Eval {
            value,
            gradient: grad,
            hessian: hess,
        }
    }
}

/// Log-likelihood of one group in terms of `beta = -theta`, with gradient
/// and Hessian with respect to `beta`.
fn group_loglik(v: &[f64], y: &[u8], d: usize, theta: &[f64]) -> (f64, DVector<f64>, DMatrix<f64>) {
    let n = y.len();
    let s = y.iter().filter(|&&b| b == 1).count();
    let rows: Vec<DVector<f64>> = (0..n)
        .map(|t| DVector::from_column_slice(&v[t * d..(t + 1) * d]))
        .collect();
    let u: Vec<f64> = rows
        .iter()
        .map(|r| -r.iter().zip(theta).map(|(a, b)| a * b).sum::<f64>())
        .collect();
    let m = u.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));

    // e[k], g[k], h[k]: scaled sums over subsets of size k of
    // exp(u_S), exp(u_S) v_S and exp(u_S) v_S v_S'.
    let mut e = vec![0.0; s + 1];
    let mut g = vec![DVector::zeros(d); s + 1];
    let mut h = vec![DMatrix::zeros(d, d); s + 1];
    e[0] = 1.0;
    for t in 0..n {
        let w = (u[t] - m).exp();
        let vt = &rows[t];
        let vv = vt * vt.transpose();
        for k in (1..=s.min(t + 1)).rev() {
            let (e1, g1) = (e[k - 1], g[k - 1].clone());
            let h1 = &h[k - 1];
            let add_h = h1 + &g1 * vt.transpose() + vt * g1.transpose() + &vv * e1;
            h[k] += add_h * w;
            g[k] += (g1 + vt * e1) * w;
            e[k] += e1 * w;
        }
    }
    let es = e[s];
    let mean = &g[s] / es;
    let second = &h[s] / es;
    let mut obs = DVector::zeros(d);
    let mut u_obs = 0.0;
    for t in 0..n {
        if y[t] == 1 {
            obs += &rows[t];
            u_obs += u[t];
        }
    }
    let value = u_obs - (es.ln() + s as f64 * m);
    let grad = obs - &mean;
    let hess = -(second - &mean * mean.transpose());
    (value, grad, hess)
}

/// Share of units that are tail switchers at the pooled `q` quantile.
pub fn tail_switcher_share(panel: &PanelData, q: f64) -> Result<f64> {
    let threshold = panel.threshold(q)?;
    let n = panel.n_units();
    if n == 0 {
        return Err(Error::EmptyData("panel has no units".into()));
    }
    Ok(ConditionalSample::from_panel(panel, threshold).len() as f64 / n as f64)
}

/// Conditional MLE of `theta*` over tail switchers at the pooled `q`
/// threshold.
pub fn fit_panel_conditional(panel: &PanelData, q: f64) -> Result<PanelFit> {
    panel.require_constant_z()?;
    let threshold = panel.threshold(q)?;
    let sample = ConditionalSample::from_panel(panel, threshold);
    fit_sample(&sample, threshold, None)
}

pub(crate) fn fit_sample(sample: &ConditionalSample, threshold: f64, bandwidth: Option<f64>) -> Result<PanelFit> {
    let need = 10.max(3 * sample.dz);
    if sample.len() < need {
        return Err(Error::InsufficientTail(format!(
            "{} contributing units, need {need}",
            sample.len()
        )));
    }
    if sample.is_flat() {
        return Err(Error::FlatLikelihood(
            "log x is identical across tail periods for every contributing unit".into(),
        ));
    }
    let res = maximize_concave(
        |t| sample.objective(t.as_slice()),
        DVector::zeros(sample.dz),
        None,
        Tolerances::default(),
    )?;
    let cov = inv_neg(&res.hessian_at_opt)
        .ok_or_else(|| Error::DegenerateDesign("conditional information matrix is singular".into()))?;
    Ok(PanelFit {
        theta_star: res.argmax.as_slice().to_vec(),
        cov,
        threshold,
        n_contributing: sample.len(),
        converged: res.converged,
        iterations: res.iterations,
        bandwidth,
    })
}
