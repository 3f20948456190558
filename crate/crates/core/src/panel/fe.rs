//! Large-`T` fixed-effects logit in the tail:
//! `P(Y_it = 1) = 1 / (1 + exp(-A~_i + r_it . theta*))`.
//!
//! The joint maximum over `theta*` and the unit intercepts uses Newton steps
//! solved through the Schur complement of the diagonal intercept block.
//! Incidental-parameter bias is reduced with a split-panel jackknife.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::PanelData;
use crate::logistic::{log1pexp, sigmoid};
use crate::numerics::central_derivative;
use crate::numerics::linalg::{dot, inv_neg, sup_norm};
use crate::{clamp_prob, Error, Result};

/// Regressor used for the slope.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Transform {
    /// `z log x` over tail periods: the tail estimator.
    LogTail,
    /// `z x` over all periods.
    RawAll,
    /// `z x` over tail periods.
    RawTail,
}

impl Transform {
    pub fn regressor(self, x: f64) -> f64 {
        match self {
            Transform::LogTail => x.ln(),
            Transform::RawAll | Transform::RawTail => x,
        }
    }

    pub fn tail_only(self) -> bool {
        !matches!(self, Transform::RawAll)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Correction {
    None,
    Jackknife,
}

impl std::str::FromStr for Correction {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(Self::None),
            "jackknife" => Ok(Self::Jackknife),
            other => Err(Error::InvalidInput(format!("unknown correction `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DroppedUnit {
    pub id: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeFit {
    pub theta_star: Vec<f64>,
    /// Estimate before any correction.
    pub theta_uncorrected: Vec<f64>,
    pub cov: DMatrix<f64>,
    pub a_tilde: BTreeMap<String, f64>,
    /// Covariate row used for each retained unit.
    pub z: BTreeMap<String, Vec<f64>>,
    pub threshold: f64,
    pub transform: Transform,
    pub correction: Correction,
    pub dropped_units: Vec<DroppedUnit>,
    pub n_obs: usize,
    pub converged: bool,
}

/// `(theta, intercepts, profile information, converged)`.
pub type JointFit = (Vec<f64>, Vec<f64>, DMatrix<f64>, bool);

/// Estimation sample of one unit: regressor rows (`dz` each) and outcomes.
#[derive(Debug, Clone, PartialEq)]
pub struct FeUnit {
    pub id: String,
    pub z: Vec<f64>,
    pub r: Vec<f64>,
    pub y: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeSample {
    pub dz: usize,
    pub units: Vec<FeUnit>,
    pub dropped: Vec<DroppedUnit>,
}

impl FeSample {
    pub fn from_panel(panel: &PanelData, threshold: f64, transform: Transform) -> Self {
        let dz = panel.dz();
        let mut units = Vec::new();
        let mut dropped = Vec::new();
        for u in panel.units() {
            let keep: Vec<usize> = if transform.tail_only() {
                u.tail_positions(threshold)
            } else {
                (0..u.len()).collect()
            };
            let y: Vec<f64> = keep.iter().map(|&k| u.y[k] as f64).collect();
            if keep.is_empty() || y.iter().all(|&v| v == y[0]) {
                dropped.push(DroppedUnit {
                    id: u.id.clone(),
                    reason: "no outcome variation".into(),
                });
                continue;
            }
            let z = u.z_at(0, dz).to_vec();
            let r = keep
                .iter()
                .flat_map(|&k| {
                    let g = transform.regressor(u.x[k]);
                    z.iter().map(move |zj| zj * g).collect::<Vec<_>>()
                })
                .collect();
            units.push(FeUnit { id: u.id.clone(), z, r, y });
        }
        Self { dz, units, dropped }
    }

    pub fn n_obs(&self) -> usize {
        self.units.iter().map(|u| u.y.len()).sum()
    }

    /// Joint log-likelihood and its gradient in `(theta, a_1, ..., a_N)`.
    pub fn loglik(&self, theta: &[f64], a: &[f64]) -> (f64, Vec<f64>) {
        let d = self.dz;
        let mut value = 0.0;
        let mut grad = vec![0.0; d + self.units.len()];
        for (i, u) in self.units.iter().enumerate() {
            for (t, &y) in u.y.iter().enumerate() {
                let r = &u.r[t * d..(t + 1) * d];
                let eta = a[i] - dot(r, theta);
                value += y * eta - log1pexp(eta);
                let res = y - sigmoid(eta);
                grad[d + i] += res;
                for j in 0..d {
                    grad[j] -= res * r[j];
                }
            }
        }
        (value, grad)
    }

    fn unit_stats(&self, i: usize, theta: &[f64], a: f64) -> UnitStats {
        let d = self.dz;
        let u = &self.units[i];
        let mut st = UnitStats {
            value: 0.0,
            ga: 0.0,
            gt: DVector::zeros(d),
            haa: 0.0,
            hat: DVector::zeros(d),
            htt: DMatrix::zeros(d, d),
        };
        for (t, &y) in u.y.iter().enumerate() {
            let r = DVector::from_column_slice(&u.r[t * d..(t + 1) * d]);
            let eta = a - r.dot(&DVector::from_column_slice(theta));
            let p = sigmoid(eta);
            let w = p * (1.0 - p);
            st.value += y * eta - log1pexp(eta);
            st.ga += y - p;
            st.gt -= &r * (y - p);
            st.haa -= w;
            st.hat += &r * w;
            st.htt -= &r * r.transpose() * w;
        }
        st
    }

    fn total(&self, theta: &[f64], a: &[f64]) -> f64 {
        self.loglik(theta, a).0
    }

    /// Maximize over `a` for fixed `theta`, unit by unit.
    pub fn profile_intercepts(&self, theta: &[f64], init: Option<&[f64]>) -> Vec<f64> {
        (0..self.units.len())
            .into_par_iter()
            .map(|i| {
                let mut a = init.map(|v| v[i]).unwrap_or_else(|| self.start_intercept(i));
                let mut cur = self.unit_stats(i, theta, a);
                for _ in 0..200 {
                    let decrement = cur.ga * cur.ga / (-cur.haa).max(f64::MIN_POSITIVE);
                    if cur.ga.abs() <= 1e-10 || 0.5 * decrement <= 1e-14 * cur.value.abs().max(1.0) {
                        break;
                    }
                    let mut step = -cur.ga / cur.haa;
                    let mut accepted = false;
                    for _ in 0..60 {
                        let trial = self.unit_stats(i, theta, a + step);
                        if trial.value.is_finite() && trial.value >= cur.value {
                            a += step;
                            cur = trial;
                            accepted = true;
                            break;
                        }
                        step *= 0.5;
                    }
                    if !accepted {
                        break;
                    }
                }
                a
            })
            .collect()
    }

    fn start_intercept(&self, i: usize) -> f64 {
        let y = &self.units[i].y;
        let m = y.iter().sum::<f64>() / y.len() as f64;
        let m = m.clamp(0.01, 0.99);
        (m / (1.0 - m)).ln()
    }

    /// Joint Newton over `(theta, a)`. Returns the estimate, intercepts, the
    /// profile information for `theta` and a convergence flag.
    pub fn fit(&self) -> Result<JointFit> {
        if self.units.is_empty() {
            return Err(Error::NoContributingUnits);
        }
        let d = self.dz;
        let n = self.units.len();
        let mut theta = vec![0.0; d];
        let mut a: Vec<f64> = (0..n).map(|i| self.start_intercept(i)).collect();
        let mut value = self.total(&theta, &a);
        let mut converged = false;
        let mut schur = DMatrix::zeros(d, d);
        for _ in 0..200 {
            let stats: Vec<UnitStats> = (0..n)
                .into_par_iter()
                .map(|i| self.unit_stats(i, &theta, a[i]))
                .collect();
            let mut gt = DVector::zeros(d);
            let mut htt = DMatrix::zeros(d, d);
            let mut rhs_corr = DVector::zeros(d);
            let mut gmax = 0.0f64;
            for st in &stats {
                gt += &st.gt;
                htt += &st.htt;
                let haa = st.haa.min(-1e-300);
                htt -= &st.hat * st.hat.transpose() / haa;
                rhs_corr += &st.hat * (st.ga / haa);
                gmax = gmax.max(st.ga.abs());
            }
            schur = htt.clone();
            gmax = gmax.max(sup_norm(&gt));
            if gmax <= 1e-8 {
                converged = true;
                break;
            }
            let rhs = &gt - &rhs_corr;
            let neg = -&htt;
            let dtheta = match neg.cholesky() {
                Some(c) => c.solve(&rhs),
                None => {
                    let scale = 1.0 / (1.0 + sup_norm(&gt));
                    &gt * scale
                }
            };
            let da: Vec<f64> = stats
                .iter()
                .map(|st| {
                    let haa = st.haa.min(-1e-300);
                    (-st.ga - st.hat.dot(&dtheta)) / haa
                })
                .collect();
            // Newton decrement: the predicted gain of the full step.
            let decrement = gt.dot(&dtheta) + stats.iter().zip(&da).map(|(st, d)| st.ga * d).sum::<f64>();
            let tiny = 1e-12 * value.abs().max(1.0);
            if 0.5 * decrement.abs() <= tiny {
                converged = true;
                break;
            }
            let mut step = 1.0;
            let mut accepted = false;
            for _ in 0..60 {
                let t_new: Vec<f64> = theta.iter().zip(dtheta.iter()).map(|(t, s)| t + step * s).collect();
                let a_new: Vec<f64> = a.iter().zip(&da).map(|(x, s)| x + step * s).collect();
                let v_new = self.total(&t_new, &a_new);
                if v_new.is_finite() && v_new >= value {
                    let rel = (v_new - value).abs() / value.abs().max(1.0);
                    theta = t_new;
                    a = a_new;
                    value = v_new;
                    accepted = true;
                    if step == 1.0 && rel <= 1e-14 {
                        converged = true;
                    }
                    break;
                }
                step *= 0.5;
            }
            if !accepted || converged {
                converged = converged || gmax <= 1e-6;
                break;
            }
        }
        Ok((theta, a, -schur, converged))
    }
}

struct UnitStats {
    value: f64,
    ga: f64,
    gt: DVector<f64>,
    haa: f64,
    hat: DVector<f64>,
    htt: DMatrix<f64>,
}

/// Fixed-effects fit of `theta*` and unit intercepts.
///
/// The threshold is the pooled `q` quantile; it selects the estimation sample
/// for the tail transforms and is kept for the jackknife halves.
pub fn fit_panel_fe(panel: &PanelData, q: f64, transform: Transform, correction: Correction) -> Result<FeFit> {
    panel.require_constant_z()?;
    let threshold = panel.threshold(q)?;
    let sample = FeSample::from_panel(panel, threshold, transform);
    let (theta_hat, a_hat, info, converged) = sample.fit()?;
    let cov = inv_neg(&-info.clone())
        .ok_or_else(|| Error::DegenerateDesign("fixed-effects information matrix is singular".into()))?;

    let (theta, a) = match correction {
        Correction::None => (theta_hat.clone(), a_hat),
        Correction::Jackknife => {
            let (first, second) = panel.split_halves();
            let halves: Vec<Result<Vec<f64>>> = [first, second]
                .par_iter()
                .map(|half| FeSample::from_panel(half, threshold, transform).fit().map(|f| f.0))
                .collect();
            let mut hs = Vec::with_capacity(2);
            for h in halves {
                hs.push(h?);
            }
            let theta_c: Vec<f64> = (0..sample.dz)
                .map(|j| 2.0 * theta_hat[j] - 0.5 * (hs[0][j] + hs[1][j]))
                .collect();
            let a_c = sample.profile_intercepts(&theta_c, Some(&a_hat));
            (theta_c, a_c)
        }
    };

    let a_tilde = sample.units.iter().zip(&a).map(|(u, &v)| (u.id.clone(), v)).collect();
    let z = sample.units.iter().map(|u| (u.id.clone(), u.z.clone())).collect();
    Ok(FeFit {
        theta_star: theta,
        theta_uncorrected: theta_hat,
        cov,
        a_tilde,
        z,
        threshold,
        transform,
        correction,
        dropped_units: sample.dropped.clone(),
        n_obs: sample.n_obs(),
        converged,
    })
}

/// Forecast probability for a retained unit at a new `x`.
pub fn forecast_unit(fit: &FeFit, unit_id: &str, x_new: f64, z: &[f64]) -> Result<f64> {
    let a = *fit
        .a_tilde
        .get(unit_id)
        .ok_or_else(|| Error::MissingUnit(unit_id.to_string()))?;
    if !(x_new > 0.0) {
        return Err(Error::Domain(format!("x must be positive, got {x_new}")));
    }
    if z.len() != fit.theta_star.len() {
        return Err(Error::InvalidInput("z dimension does not match the fit".into()));
    }
    let index = dot(z, &fit.theta_star) * fit.transform.regressor(x_new);
    Ok(clamp_prob(sigmoid(a - index)))
}

/// Average over retained units' tail observations of `d forecast / d x`.
pub fn ape_panel(fit: &FeFit, panel: &PanelData, q: f64) -> Result<f64> {
    let threshold = panel.threshold(q)?;
    let dz = panel.dz();
    let mut total = 0.0;
    let mut count = 0usize;
    for u in panel.units() {
        if !fit.a_tilde.contains_key(&u.id) {
            continue;
        }
        for k in u.tail_positions(threshold) {
            let z = u.z_at(k, dz);
            let f = |x: f64| forecast_unit(fit, &u.id, x, z).unwrap_or(f64::NAN);
            total += central_derivative(f, u.x[k]);
            count += 1;
        }
    }
    if count == 0 {
        return Err(Error::InsufficientTail("no tail observations among retained units".into()));
    }
    Ok(total / count as f64)
}

/// Unit-level limit elasticity `-|z . theta*|`.
pub fn extreme_elasticity_panel(theta_star: &[f64], z: &[f64]) -> f64 {
    -dot(theta_star, z).abs()
}
