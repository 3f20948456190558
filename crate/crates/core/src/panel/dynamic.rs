//! Dynamic panel with first-order Markov outcomes.
//!
//! A window is five consecutive periods, all in the tail, whose outcomes form
//! one of
//!
//! ```text
//! E1 = (0,0,1,1,0)  E2 = (0,1,1,0,0)  E3 = (1,1,0,0,1)  E4 = (1,0,0,1,1)
//! ```
//!
//! Conditional on the union of the four events each has weight
//! `prod x_t^(-z . theta^(from,to))` over the transitions it does not share
//! with the others, with `theta^(00) = 0`. The likelihood is a multinomial
//! logit that is linear in `(theta^(01), theta^(10), theta^(11))`.

use nalgebra::{DMatrix, DVector};

use super::PanelData;
use crate::numerics::linalg::symmetric_rank;
use crate::numerics::optim::{maximize_concave, Eval, Tolerances};
use crate::{Error, Result};

/// Parameter blocks in order.
const B01: usize = 0;
const B10: usize = 1;
const B11: usize = 2;

pub const EVENTS: [[u8; 5]; 4] = [
    [0, 0, 1, 1, 0],
    [0, 1, 1, 0, 0],
    [1, 1, 0, 0, 1],
    [1, 0, 0, 1, 1],
];

/// `(block, position)` pairs of each event weight; positions are 0-based
/// within the window.
const TERMS: [[(usize, usize); 3]; 4] = [
    [(B01, 2), (B11, 3), (B10, 4)],
    [(B01, 1), (B11, 2), (B10, 3)],
    [(B11, 1), (B10, 2), (B01, 4)],
    [(B10, 1), (B01, 3), (B11, 4)],
];

#[derive(Debug, Clone, PartialEq)]
pub struct DynFit {
    pub theta_01: Vec<f64>,
    pub theta_10: Vec<f64>,
    pub theta_11: Vec<f64>,
    /// Covariance of `(theta_01, theta_10, theta_11)`; a pseudo-inverse when
    /// the information matrix is rank deficient.
    pub cov: DMatrix<f64>,
    pub hessian_rank: usize,
    pub n_windows: usize,
    pub threshold: f64,
    pub converged: bool,
}

/// One window: the observed event and the feature vector of every event,
/// `phi_e` such that the event's log weight is `-phi_e . theta`.
#[derive(Debug, Clone, PartialEq)]
pub struct Window {
    pub event: usize,
    pub phi: [Vec<f64>; 4],
}

#[derive(Debug, Clone, PartialEq)]
pub struct DynamicSample {
    pub dz: usize,
    pub windows: Vec<Window>,
}

impl Window {
    /// Build from five tail values of `x`, the unit covariates and the event.
    pub fn new(x: &[f64; 5], z: &[f64], event: usize) -> Self {
        let dz = z.len();
        let phi = std::array::from_fn(|e| {
            let mut f = vec![0.0; 3 * dz];
            for &(block, pos) in &TERMS[e] {
                let lx = x[pos].ln();
                for j in 0..dz {
                    f[block * dz + j] += z[j] * lx;
                }
            }
            f
        });
        Self { event, phi }
    }

    /// Probabilities of the four events given the union.
    pub fn probabilities(&self, theta: &[f64]) -> [f64; 4] {
        let s: [f64; 4] = std::array::from_fn(|e| -dot(&self.phi[e], theta));
        let m = s.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
        let w: [f64; 4] = std::array::from_fn(|e| (s[e] - m).exp());
        let total: f64 = w.iter().sum();
        std::array::from_fn(|e| w[e] / total)
    }

    fn is_flat(&self) -> bool {
        self.phi.iter().all(|f| f.iter().zip(&self.phi[0]).all(|(a, b)| (a - b).abs() < 1e-14))
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl DynamicSample {
    /// Sliding windows of five consecutive periods with all `x` at or above
    /// `threshold` and an outcome pattern in E1-E4.
    pub fn from_panel(panel: &PanelData, threshold: f64) -> Self {
        let dz = panel.dz();
        let mut windows = Vec::new();
        for u in panel.units() {
            if u.len() < 5 {
                continue;
            }
            for s in 0..=u.len() - 5 {
                let consecutive = (s..s + 4).all(|k| u.periods[k + 1] == u.periods[k] + 1);
                if !consecutive || (s..s + 5).any(|k| u.x[k] < threshold) {
                    continue;
                }
                let y = &u.y[s..s + 5];
                if let Some(e) = EVENTS.iter().position(|ev| ev[..] == *y) {
                    let x: [f64; 5] = std::array::from_fn(|k| u.x[s + k]);
                    windows.push(Window::new(&x, u.z_at(s, dz), e));
                }
            }
        }
        Self { dz, windows }
    }

    pub fn objective(&self, theta: &[f64]) -> Eval {
        let p = 3 * self.dz;
        let mut value = 0.0;
        let mut grad = DVector::zeros(p);
        let mut hess = DMatrix::zeros(p, p);
        for w in &self.windows {
            let pr = w.probabilities(theta);
            value += pr[w.event].ln();
            let mut mean = DVector::zeros(p);
            let mut second = DMatrix::zeros(p, p);
            for e in 0..4 {
                let f = DVector::from_column_slice(&w.phi[e]);
                mean += &f * pr[e];
                second += &f * f.transpose() * pr[e];
            }
            grad += mean.clone() - DVector::from_column_slice(&w.phi[w.event]);
            hess -= second - &mean * mean.transpose();
        }
        Eval {
            value,
            gradient: grad,
            hessian: hess,
        }
    }
}

/// Conditional MLE of the transition exponents over E1-E4 windows.
pub fn fit_panel_dynamic(panel: &PanelData, q: f64) -> Result<DynFit> {
    if panel.max_periods() < 5 {
        return Err(Error::InvalidInput(
            "dynamic panel estimation requires at least five periods".into(),
        ));
    }
    panel.require_constant_z()?;
    let threshold = panel.threshold(q)?;
    let sample = DynamicSample::from_panel(panel, threshold);
    fit_sample(&sample, threshold)
}

pub fn fit_sample(sample: &DynamicSample, threshold: f64) -> Result<DynFit> {
    let dz = sample.dz;
    let need = 20.max(5 * dz);
    if sample.windows.len() < need {
        return Err(Error::InsufficientTail(format!(
            "{} contributing windows, need {need}",
            sample.windows.len()
        )));
    }
    if sample.windows.iter().all(Window::is_flat) {
        return Err(Error::FlatLikelihood("all five x are equal within every window".into()));
    }
    let res = maximize_concave(
        |t| sample.objective(t.as_slice()),
        DVector::zeros(3 * dz),
        None,
        Tolerances::default(),
    )?;
    let info = -&res.hessian_at_opt;
    let hessian_rank = symmetric_rank(&info, 1e-10);
    let cov = match info.clone().cholesky() {
        Some(c) => c.inverse(),
        None => {
            let eps = 1e-10 * info.amax().max(f64::MIN_POSITIVE);
            info.pseudo_inverse(eps)
                .map_err(|e| Error::DegenerateDesign(e.to_string()))?
        }
    };
    let th = res.argmax.as_slice();
    Ok(DynFit {
        theta_01: th[B01 * dz..(B01 + 1) * dz].to_vec(),
        theta_10: th[B10 * dz..(B10 + 1) * dz].to_vec(),
        theta_11: th[B11 * dz..(B11 + 1) * dz].to_vec(),
        cov,
        hessian_rank,
        n_windows: sample.windows.len(),
        threshold,
        converged: res.converged,
    })
}
