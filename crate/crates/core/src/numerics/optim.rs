//! Damped Newton maximization of concave objectives with optional linear cone
//! constraints `v . theta >= slack`.

use nalgebra::{DMatrix, DVector};

use super::linalg::{newton_direction, sup_norm};
use crate::{Error, Result};

pub const DEFAULT_SLACK: f64 = 1e-8;

/// Value, gradient and Hessian of an objective at a point.
#[derive(Debug, Clone)]
pub struct Eval {
    pub value: f64,
    pub gradient: DVector<f64>,
    pub hessian: DMatrix<f64>,
}

#[derive(Debug, Clone)]
pub struct ConeConstraint {
    rows: DMatrix<f64>,
    slack: f64,
}

impl ConeConstraint {
    pub fn new(rows: DMatrix<f64>, slack: f64) -> Result<Self> {
        if !(slack > 0.0) {
            return Err(Error::InvalidParameter("cone slack must be positive".into()));
        }
        Ok(Self { rows, slack })
    }

    /// Cone spanned by the given covariate rows with the default slack.
    pub fn from_rows<'a, I>(dim: usize, rows: I) -> Self
    where
        I: IntoIterator<Item = &'a [f64]>,
    {
        let flat: Vec<f64> = rows.into_iter().flat_map(|r| r.iter().copied()).collect();
        let m = flat.len() / dim.max(1);
        Self {
            rows: DMatrix::from_row_slice(m, dim, &flat),
            slack: DEFAULT_SLACK,
        }
    }

    pub fn slack(&self) -> f64 {
        self.slack
    }

    pub fn rows(&self) -> &DMatrix<f64> {
        &self.rows
    }

    /// `min_rows v . theta` (infinite when there are no rows).
    pub fn min_value(&self, theta: &DVector<f64>) -> f64 {
        (&self.rows * theta)
            .iter()
            .fold(f64::INFINITY, |a, &v| a.min(v))
    }

    pub fn is_feasible(&self, theta: &DVector<f64>) -> bool {
        self.min_value(theta) >= self.slack
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Tolerances {
    pub gradient: f64,
    pub relative_objective: f64,
    pub max_iterations: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            gradient: 1e-9,
            relative_objective: 1e-12,
            max_iterations: 200,
        }
    }
}

#[derive(Debug, Clone)]
pub struct OptimResult {
    pub argmax: DVector<f64>,
    pub hessian_at_opt: DMatrix<f64>,
    pub gradient_at_opt: DVector<f64>,
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
}

const MAX_HALVINGS: usize = 60;

/// Maximize a concave objective by damped Newton with step halving.
///
/// Trial points that violate the cone slack or produce a non-finite or lower
/// objective are halved. When the Hessian is not negative definite the
/// iteration falls back to a scaled gradient step. Convergence is declared
/// when the gradient sup-norm reaches `tol.gradient` or a Newton step changes
/// the objective by less than `tol.relative_objective` in relative terms.
pub fn maximize_concave<F>(
    mut objective: F,
    init: DVector<f64>,
    cone: Option<&ConeConstraint>,
    tol: Tolerances,
) -> Result<OptimResult>
where
    F: FnMut(&DVector<f64>) -> Eval,
{
    if let Some(c) = cone {
        let m = c.min_value(&init);
        if m < c.slack() {
            return Err(Error::Infeasible(m));
        }
    }
    let mut theta = init;
    let mut cur = objective(&theta);
    if !cur.value.is_finite() {
        return Err(Error::InvalidParameter(
            "objective is not finite at the initial point".into(),
        ));
    }
    let mut converged = false;
    let mut iterations = 0;

    while iterations < tol.max_iterations {
        if sup_norm(&cur.gradient) <= tol.gradient {
            converged = true;
            break;
        }
        iterations += 1;
        let (direction, is_newton) = match newton_direction(&cur.hessian, &cur.gradient) {
            Some(d) => (d, true),
            None => {
                let scale = sup_norm(&cur.gradient).max(1.0);
                (&cur.gradient / scale, false)
            }
        };
        let decrement = cur.gradient.dot(&direction);

        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..MAX_HALVINGS {
            let trial = &theta + &direction * step;
            let feasible = cone.is_none_or(|c| c.is_feasible(&trial));
            if feasible {
                let ev = objective(&trial);
                if ev.value.is_finite() && ev.value >= cur.value {
                    accepted = Some((trial, ev));
                    break;
                }
            }
            step *= 0.5;
        }

        match accepted {
            Some((trial, ev)) => {
                let change = (ev.value - cur.value).abs();
                theta = trial;
                cur = ev;
                if sup_norm(&cur.gradient) <= tol.gradient {
                    converged = true;
                    break;
                }
                let scale = cur.value.abs().max(1.0);
                // A damped step is also final once the predicted Newton gain
                // is at the rounding level of the objective.
                if is_newton
                    && change <= tol.relative_objective * scale
                    && (step == 1.0 || decrement <= tol.relative_objective * scale)
                {
                    converged = true;
                    break;
                }
            }
            None => {
                // No ascent possible at working precision.
                converged = is_newton && decrement.abs() <= 1e-10 * cur.value.abs().max(1.0);
                break;
            }
        }
    }

    Ok(OptimResult {
        argmax: theta,
        hessian_at_opt: cur.hessian,
        gradient_at_opt: cur.gradient,
        objective: cur.value,
        iterations,
        converged,
    })
}
