//! Cross-sectional tail estimation.
//!
//! For each outcome `y` the upper tail of `X | Y = y, Z = z` is approximated
//! by a Pareto law with exponent `alpha_y(z) = z . theta_y`. Both exponents are
//! fitted on the tail of their own outcome subsample and combined through
//! Bayes' rule into the plug-in probability
//!
//! ```text
//! pi(x, z) = 1 / (1 + R(z) (a0 / a1) (xl0^a0 / xl1^a1) x^(a1 - a0))
//! ```
//!
//! where `R(z)` is the ratio of the tail probabilities
//! `P(Y = 0, X >= xl0 | z) / P(Y = 1, X >= xl1 | z)`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::logistic::{fit_logistic, sigmoid};
use crate::numerics::linalg::{dot, inv_neg};
use crate::numerics::optim::{maximize_concave, ConeConstraint, Eval, Tolerances};
use crate::numerics::{central_derivative, default_step, empirical_quantile};
use crate::tail_index::{self, TailMethod};
use crate::{clamp_prob, Error, Result};

/// Binary outcomes, a positive extreme covariate and `dz` additional
/// covariates per observation (row-major). A single constant column stands
/// for the no-covariate case.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossSection {
    y: Vec<u8>,
    x: Vec<f64>,
    z: Vec<f64>,
    dz: usize,
}

impl CrossSection {
    pub fn new(y: Vec<u8>, x: Vec<f64>, z: Vec<f64>, dz: usize) -> Result<Self> {
        if dz == 0 {
            return Err(Error::InvalidInput("at least one z column is required".into()));
        }
        if y.len() != x.len() || z.len() != x.len() * dz {
            return Err(Error::InvalidInput(format!(
                "length mismatch: {} outcomes, {} covariate values, {} z entries for dz = {dz}",
                y.len(),
                x.len(),
                z.len()
            )));
        }
        if let Some(i) = y.iter().position(|&v| v > 1) {
            return Err(Error::InvalidInput(format!("row {}: y must be 0 or 1", i + 1)));
        }
        if let Some(i) = x.iter().position(|&v| !(v > 0.0) || !v.is_finite()) {
            return Err(Error::Domain(format!("row {}: x must be positive, got {}", i + 1, x[i])));
        }
        if !y.contains(&0) || !y.contains(&1) {
            return Err(Error::DegenerateOutcome("both outcome values must be present".into()));
        }
        Ok(Self { y, x, z, dz })
    }

    /// No-covariate data: `z` is the constant column 1.
    pub fn with_constant(y: Vec<u8>, x: Vec<f64>) -> Result<Self> {
        let n = x.len();
        Self::new(y, x, vec![1.0; n], 1)
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn dz(&self) -> usize {
        self.dz
    }

    pub fn y(&self) -> &[u8] {
        &self.y
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn z_row(&self, i: usize) -> &[f64] {
        &self.z[i * self.dz..(i + 1) * self.dz]
    }

    pub fn z_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.len(), self.dz, &self.z)
    }

    /// Index of a column holding the same non-zero value in every row.
    pub fn constant_column(&self) -> Option<(usize, f64)> {
        (0..self.dz).find_map(|j| {
            let c = self.z[j];
            (c != 0.0 && (0..self.len()).all(|i| self.z[i * self.dz + j] == c)).then_some((j, c))
        })
    }

    fn distinct_z_rows(&self) -> Vec<&[f64]> {
        let mut rows: Vec<&[f64]> = (0..self.len()).map(|i| self.z_row(i)).collect();
        rows.sort_by(|a, b| {
            a.iter()
                .zip(b.iter())
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        rows.dedup();
        rows
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CsMethod {
    Mle,
    Hill,
    RankHalf,
}

impl std::str::FromStr for CsMethod {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mle" => Ok(Self::Mle),
            "hill" => Ok(Self::Hill),
            "rank-half" | "rank_half" => Ok(Self::RankHalf),
            other => Err(Error::InvalidInput(format!("unknown method `{other}`"))),
        }
    }
}

/// Model for `P(Y = y, X >= xl_y | Z = z)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TailProbModel {
    /// Sample frequencies `N_y / N` (no covariates).
    Frequencies { p0: f64, p1: f64 },
    /// Logistic index on `z` for each outcome.
    Logistic { beta0: Vec<f64>, beta1: Vec<f64> },
}

impl TailProbModel {
    pub fn probabilities(&self, z: &[f64]) -> (f64, f64) {
        match self {
            Self::Frequencies { p0, p1 } => (*p0, *p1),
            Self::Logistic { beta0, beta1 } => (sigmoid(dot(beta0, z)), sigmoid(dot(beta1, z))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CsFit {
    pub theta0: Vec<f64>,
    pub theta1: Vec<f64>,
    pub cov0: DMatrix<f64>,
    pub cov1: DMatrix<f64>,
    pub thresholds: [f64; 2],
    pub tail_counts: [usize; 2],
    pub n: usize,
    pub tailprob: TailProbModel,
    pub method: CsMethod,
    pub converged: bool,
}

impl CsFit {
    pub fn dz(&self) -> usize {
        self.theta0.len()
    }

    pub fn theta(&self, y: u8) -> &[f64] {
        if y == 0 {
            &self.theta0
        } else {
            &self.theta1
        }
    }

    /// Tail exponents `(alpha_0(z), alpha_1(z))`.
    pub fn alphas(&self, z: &[f64]) -> (f64, f64) {
        (dot(&self.theta0, z), dot(&self.theta1, z))
    }
}

/// Tail log-likelihood `sum_i log(z_i . theta) - (z_i . theta) l_i` with its
/// gradient and Hessian; `l_i = log(x_i / threshold)`. Points outside the
/// cone evaluate to `-inf`.
pub fn tail_objective(theta: &[f64], z_rows: &[&[f64]], log_excess: &[f64]) -> Eval {
    let d = theta.len();
    let mut value = 0.0;
    let mut grad = DVector::zeros(d);
    let mut hess = DMatrix::zeros(d, d);
    for (z, &l) in z_rows.iter().zip(log_excess) {
        let a = dot(z, theta);
        if !(a > 0.0) {
            value = f64::NEG_INFINITY;
            continue;
        }
        value += a.ln() - a * l;
        let inv = 1.0 / a;
        for j in 0..d {
            grad[j] += z[j] * (inv - l);
            for k in 0..d {
                hess[(j, k)] -= z[j] * z[k] * inv * inv;
            }
        }
    }
    Eval {
        value,
        gradient: grad,
        hessian: hess,
    }
}

struct SideFit {
    theta: Vec<f64>,
    cov: DMatrix<f64>,
    threshold: f64,
    tail: Vec<usize>,
    converged: bool,
}

fn fit_side(data: &CrossSection, y: u8, q: f64, method: CsMethod, cone: &ConeConstraint) -> Result<SideFit> {
    let idx: Vec<usize> = (0..data.len()).filter(|&i| data.y[i] == y).collect();
    let xs: Vec<f64> = idx.iter().map(|&i| data.x[i]).collect();
    let threshold = tail_index::select_threshold(&xs, q)?;
    let tail: Vec<usize> = idx.iter().copied().filter(|&i| data.x[i] >= threshold).collect();
    let need = 10.max(3 * data.dz);
    if tail.len() < need {
        return Err(Error::InsufficientTail(format!(
            "outcome {y}: {} tail observations, need {need}",
            tail.len()
        )));
    }

    let constant = data.constant_column();
    match method {
        CsMethod::Hill | CsMethod::RankHalf => {
            let (_, c) = match constant {
                Some(cc) if data.dz == 1 => cc,
                _ => {
                    return Err(Error::InvalidInput(
                        "hill and rank-half methods require a single constant z column".into(),
                    ))
                }
            };
            let tm = if method == CsMethod::Hill {
                TailMethod::Hill
            } else {
                TailMethod::RankHalf
            };
            let est = tail_index::estimate(tm, &xs, threshold)?;
            Ok(SideFit {
                theta: vec![est.alpha_hat / c],
                cov: DMatrix::from_element(1, 1, (est.se / c).powi(2)),
                threshold,
                tail,
                converged: true,
            })
        }
        CsMethod::Mle => {
            let hill = tail_index::hill_estimate(&xs, threshold)?.alpha_hat;
            let mut init = DVector::zeros(data.dz);
            if let Some((j, c)) = constant {
                init[j] = hill / c;
            } else if let Some(j) = (0..data.dz).find(|&j| {
                let col: Vec<f64> = (0..data.len()).map(|i| data.z[i * data.dz + j]).collect();
                col.iter().all(|&v| v > 0.0) || col.iter().all(|&v| v < 0.0)
            }) {
                let mean_abs =
                    (0..data.len()).map(|i| data.z[i * data.dz + j].abs()).sum::<f64>() / data.len() as f64;
                init[j] = data.z[j].signum() * hill / mean_abs;
            }
            let z_rows: Vec<&[f64]> = tail.iter().map(|&i| data.z_row(i)).collect();
            let logs: Vec<f64> = tail.iter().map(|&i| (data.x[i] / threshold).ln()).collect();
            let res = maximize_concave(
                |t| tail_objective(t.as_slice(), &z_rows, &logs),
                init,
                Some(cone),
                Tolerances::default(),
            )?;
            let cov = inv_neg(&res.hessian_at_opt).ok_or_else(|| {
                Error::DegenerateDesign(format!("outcome {y}: tail information matrix is singular"))
            })?;
            Ok(SideFit {
                theta: res.argmax.as_slice().to_vec(),
                cov,
                threshold,
                tail,
                converged: res.converged,
            })
        }
    }
}

/// Fit both tail exponents with per-outcome thresholds at the `q` quantile.
pub fn fit_cs_tail(data: &CrossSection, q: f64, method: CsMethod) -> Result<CsFit> {
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::InvalidParameter(format!("tail quantile must lie in (0, 1), got {q}")));
    }
    let cone = ConeConstraint::from_rows(data.dz, data.distinct_z_rows());
    let s0 = fit_side(data, 0, q, method, &cone)?;
    let s1 = fit_side(data, 1, q, method, &cone)?;
    let n = data.len();

    let tailprob = match data.constant_column() {
        Some(_) if data.dz == 1 => TailProbModel::Frequencies {
            p0: s0.tail.len() as f64 / n as f64,
            p1: s1.tail.len() as f64 / n as f64,
        },
        _ => {
            let zm = data.z_matrix();
            let mut betas = Vec::with_capacity(2);
            for side in [&s0, &s1] {
                let mut ind = vec![0.0; n];
                for &i in &side.tail {
                    ind[i] = 1.0;
                }
                betas.push(fit_logistic(&zm, &ind, None)?.beta.as_slice().to_vec());
            }
            let beta1 = betas.pop().unwrap();
            let beta0 = betas.pop().unwrap();
            TailProbModel::Logistic { beta0, beta1 }
        }
    };

    Ok(CsFit {
        converged: s0.converged && s1.converged,
        theta0: s0.theta,
        theta1: s1.theta,
        cov0: s0.cov,
        cov1: s1.cov,
        thresholds: [s0.threshold, s1.threshold],
        tail_counts: [s0.tail.len(), s1.tail.len()],
        n,
        tailprob,
        method,
    })
}

/// Log of the odds `P(Y=0 | x, z) / P(Y=1 | x, z)` implied by the fit.
fn log_odds_zero(fit: &CsFit, x: f64, z: &[f64]) -> Result<f64> {
    if z.len() != fit.dz() {
        return Err(Error::InvalidInput(format!(
            "z has {} entries, fit expects {}",
            z.len(),
            fit.dz()
        )));
    }
    let (a0, a1) = fit.alphas(z);
    if !(a0 > 0.0 && a1 > 0.0) {
        return Err(Error::ConeViolation(format!(
            "tail exponents must be positive at z, got ({a0}, {a1})"
        )));
    }
    if !(x > 0.0) {
        return Err(Error::Domain(format!("x must be positive, got {x}")));
    }
    let (p0, p1) = fit.tailprob.probabilities(z);
    let [xl0, xl1] = fit.thresholds;
    Ok(p0.ln() - p1.ln() + a0.ln() - a1.ln() + a0 * xl0.ln() - a1 * xl1.ln() + (a1 - a0) * x.ln())
}

/// Plug-in conditional probability `P(Y = 1 | X = x, Z = z)`, clamped.
pub fn predict_prob_cs(fit: &CsFit, x: f64, z: &[f64]) -> Result<f64> {
    Ok(clamp_prob(sigmoid(-log_odds_zero(fit, x, z)?)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Elasticity {
    pub value: f64,
    pub se: f64,
}

/// Limit elasticity `-|z . (theta1 - theta0)|` with a delta-method standard
/// error from `cov0 + cov1`.
pub fn extreme_elasticity_cs(fit: &CsFit, z: &[f64]) -> Result<Elasticity> {
    if z.len() != fit.dz() {
        return Err(Error::InvalidInput("z dimension does not match the fit".into()));
    }
    let diff: Vec<f64> = fit.theta1.iter().zip(&fit.theta0).map(|(a, b)| a - b).collect();
    let zv = DVector::from_column_slice(z);
    let var = zv.dot(&((&fit.cov0 + &fit.cov1) * &zv));
    Ok(Elasticity {
        value: -dot(z, &diff).abs(),
        se: var.max(0.0).sqrt(),
    })
}

/// Elasticity of `pi (1 - pi)` with respect to `x`, by central differences.
pub fn elasticity_numeric<F>(prob_fn: F, x: f64) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    let var = |t: f64| {
        let p = prob_fn(t);
        p * (1.0 - p)
    };
    let v = var(x);
    if !(v >= 1e-12) {
        return Err(Error::DegenerateData(format!(
            "pi(1 - pi) = {v:e} at x = {x} is too small for an elasticity"
        )));
    }
    let h = default_step(x);
    let dv = (var(x + h) - var(x - h)) / (2.0 * h);
    Ok(dv * x / v)
}

/// Central-difference derivative of `prob_fn` at `x`.
pub fn partial_effect<F>(prob_fn: F, x: f64) -> f64
where
    F: Fn(f64) -> f64,
{
    central_derivative(prob_fn, x)
}

/// Mean partial effect of the plug-in probability over observations with
/// `x_i >= x_lower`.
pub fn tail_avg_partial_effect(fit: &CsFit, data: &CrossSection, x_lower: f64) -> Result<f64> {
    let tail: Vec<usize> = (0..data.len()).filter(|&i| data.x[i] >= x_lower).collect();
    if tail.len() < 10 {
        return Err(Error::InsufficientTail(format!(
            "{} observations at or above {x_lower}, need 10",
            tail.len()
        )));
    }
    // Validate the cone once per distinct z before differencing.
    let mut total = 0.0;
    for &i in &tail {
        let z = data.z_row(i);
        predict_prob_cs(fit, data.x[i], z)?;
        total += partial_effect(|t| predict_prob_cs(fit, t, z).unwrap_or(f64::NAN), data.x[i]);
    }
    Ok(total / tail.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailShare {
    /// `N_y / N` at the fitted thresholds, indexed by outcome.
    pub observed: [f64; 2],
    /// Sample analog of the asymptotic tail proportion (no-covariate fits).
    pub implied_xi: Option<[f64; 2]>,
    pub note: String,
}

pub fn tail_share_diagnostic(data: &CrossSection, fit: &CsFit) -> TailShare {
    let n = data.len().max(1) as f64;
    let mut counts = [0usize; 2];
    for i in 0..data.len() {
        let y = data.y[i] as usize;
        if data.x[i] >= fit.thresholds[y] {
            counts[y] += 1;
        }
    }
    let observed = [counts[0] as f64 / n, counts[1] as f64 / n];
    let constant = data.dz == 1 && data.constant_column().is_some();
    let note = if counts.contains(&0) {
        "warning: no observations above the threshold for at least one outcome".to_string()
    } else {
        format!("tail counts {} (y=0) and {} (y=1) out of {}", counts[0], counts[1], data.len())
    };
    TailShare {
        observed,
        implied_xi: constant.then_some(observed),
        note,
    }
}

/// Type-7 quantile of the pooled covariate, exposed for evaluation grids.
pub fn covariate_quantile(data: &CrossSection, p: f64) -> Result<f64> {
    empirical_quantile(&data.x, p)
}


#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{finite_diff_grad, make_rng_stream};
    use rand::RngCore;

    fn pareto_sample(seed: u64, n: usize, alpha: f64) -> Vec<f64> {
        let mut s = make_rng_stream(seed, 0);
        (0..n)
            .map(|_| {
                let u = (s.next_u64() >> 11) as f64 / (1u64 << 53) as f64;
                (1.0 - u).powf(-1.0 / alpha)
            })
            .collect()
    }

    fn synthetic(seed: u64, n: usize) -> CrossSection {
        let x0 = pareto_sample(seed, n, 2.0);
        let x1 = pareto_sample(seed + 1, n, 1.0);
        let mut y = vec![0u8; n];
        y.extend(vec![1u8; n]);
        let mut x = x0;
        x.extend(x1);
        CrossSection::with_constant(y, x).unwrap()
    }

    #[test]
    fn mle_equals_hill_without_covariates() {
        let data = synthetic(5, 2000);
        let fit = fit_cs_tail(&data, 0.9, CsMethod::Mle).unwrap();
        for y in 0..2u8 {
            let xs: Vec<f64> = (0..data.len())
                .filter(|&i| data.y[i] == y)
                .map(|i| data.x[i])
                .collect();
            let h = tail_index::hill_estimate(&xs, fit.thresholds[y as usize]).unwrap();
            assert!((fit.theta(y)[0] - h.alpha_hat).abs() < 1e-9);
            let se = fit.cov0[(0, 0)].sqrt();
            if y == 0 {
                assert!((se - h.se).abs() < 1e-9);
            }
        }
        assert!(fit.converged);
        assert_eq!(fit.tailprob, TailProbModel::Frequencies {
            p0: fit.tail_counts[0] as f64 / 4000.0,
            p1: fit.tail_counts[1] as f64 / 4000.0,
        });
    }

    #[test]
    fn equal_tails_give_one_half() {
        let fit = CsFit {
            theta0: vec![1.5],
            theta1: vec![1.5],
            cov0: DMatrix::identity(1, 1),
            cov1: DMatrix::identity(1, 1),
            thresholds: [3.0, 3.0],
            tail_counts: [10, 10],
            n: 100,
            tailprob: TailProbModel::Frequencies { p0: 0.1, p1: 0.1 },
            method: CsMethod::Mle,
            converged: true,
        };
        for x in [3.0, 10.0, 1e4] {
            assert!((predict_prob_cs(&fit, x, &[1.0]).unwrap() - 0.5).abs() < 1e-15);
        }
        assert_eq!(extreme_elasticity_cs(&fit, &[1.0]).unwrap().value, 0.0);
        let data = CrossSection::with_constant(
            (0..20).map(|i| (i % 2) as u8).collect(),
            (0..20).map(|i| 4.0 + i as f64).collect(),
        )
        .unwrap();
        assert!(tail_avg_partial_effect(&fit, &data, 4.0).unwrap().abs() < 1e-12);
    }

    #[test]
    fn probability_increases_when_y1_tail_is_heavier() {
        let data = synthetic(9, 3000);
        let fit = fit_cs_tail(&data, 0.9, CsMethod::Mle).unwrap();
        assert!(fit.theta1[0] < fit.theta0[0]);
        let mut prev = 0.0;
        for k in 0..30 {
            let x = 2.0 * 1.5f64.powi(k);
            let p = predict_prob_cs(&fit, x, &[1.0]).unwrap();
            assert!(p > prev || p == 1.0 - crate::PROB_CLAMP);
            prev = p;
        }
    }

    #[test]
    fn cone_violation_is_reported() {
        let data = synthetic(2, 500);
        let fit = fit_cs_tail(&data, 0.9, CsMethod::Mle).unwrap();
        assert!(matches!(
            predict_prob_cs(&fit, 5.0, &[-1.0]),
            Err(Error::ConeViolation(_))
        ));
    }

    #[test]
    fn tail_objective_gradient_matches_differences() {
        let z_owned: Vec<Vec<f64>> = (0..40).map(|i| vec![1.0, 0.5 + (i % 7) as f64 * 0.3]).collect();
        let z: Vec<&[f64]> = z_owned.iter().map(|r| r.as_slice()).collect();
        let l: Vec<f64> = (0..40).map(|i| 0.05 + (i as f64 * 0.37) % 2.0).collect();
        let theta = [0.8, 0.4];
        let ev = tail_objective(&theta, &z, &l);
        let num = finite_diff_grad(|t| tail_objective(t, &z, &l).value, &theta, None);
        for j in 0..2 {
            let rel = (ev.gradient[j] - num[j]).abs() / ev.gradient[j].abs().max(1e-8);
            assert!(rel < 1e-6, "{rel}");
        }
    }

    #[test]
    fn elasticity_examples() {
        let p = |x: f64| 1.0 / (1.0 + x);
        assert!(elasticity_numeric(p, 1.0).unwrap().abs() < 1e-8);
        assert!(elasticity_numeric(|_| 0.3, 5.0).unwrap().abs() < 1e-12);
        let d = elasticity_numeric(|x: f64| 1.0 / (1.0 + 1.0 / x), 1e4).unwrap();
        assert!((d + 1.0).abs() < 0.02, "{d}");
        assert!(matches!(
            elasticity_numeric(|_| 1.0, 2.0),
            Err(Error::DegenerateData(_))
        ));
    }

    #[test]
    fn partial_effect_examples() {
        assert!((partial_effect(|x| 0.2 + 0.3 * x, 0.7) - 0.3).abs() < 1e-6);
        assert_eq!(partial_effect(|_| 0.4, 3.0), 0.0);
    }

    #[test]
    fn tail_share_reports_empty_tails() {
        let data = synthetic(3, 400);
        let mut fit = fit_cs_tail(&data, 0.9, CsMethod::Mle).unwrap();
        let share = tail_share_diagnostic(&data, &fit);
        assert!((share.observed[0] - fit.tail_counts[0] as f64 / 800.0).abs() < 1e-15);
        fit.thresholds = [1e300, 1e300];
        let share = tail_share_diagnostic(&data, &fit);
        assert_eq!(share.observed, [0.0, 0.0]);
        assert!(share.note.starts_with("warning"));
    }
}
