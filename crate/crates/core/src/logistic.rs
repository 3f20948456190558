//! Weighted logistic regression by damped Newton, shared by the tail-probability
//! component of the cross-sectional fit and the logistic baselines.

use nalgebra::{DMatrix, DVector};

use crate::numerics::linalg::inv_neg;
use crate::numerics::optim::{maximize_concave, Eval, Tolerances};
use crate::{Error, Result};

/// Coefficient magnitude at which a fit is declared separated and rescaled.
pub const COEF_CAP: f64 = 50.0;

#[derive(Debug, Clone, PartialEq)]
pub struct LogisticFit {
    pub beta: DVector<f64>,
    /// Inverse negative Hessian at the estimate; `None` when singular.
    pub cov: Option<DMatrix<f64>>,
    pub loglik: f64,
    pub converged: bool,
    pub separated: bool,
}

pub fn sigmoid(eta: f64) -> f64 {
    if eta >= 0.0 {
        1.0 / (1.0 + (-eta).exp())
    } else {
        let e = eta.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + exp(eta))` without overflow.
pub fn log1pexp(eta: f64) -> f64 {
    if eta > 35.0 {
        eta
    } else if eta < -35.0 {
        eta.exp()
    } else {
        eta.exp().ln_1p()
    }
}

fn evaluate(design: &DMatrix<f64>, y: &[f64], w: &[f64], beta: &DVector<f64>) -> Eval {
    let p = design.ncols();
    let mut value = 0.0;
    let mut grad = DVector::zeros(p);
    let mut hess = DMatrix::zeros(p, p);
    for i in 0..design.nrows() {
        if w[i] == 0.0 {
            continue;
        }
        let row = design.row(i);
        let eta = row.dot(&beta.transpose());
        let pr = sigmoid(eta);
        value += w[i] * (y[i] * eta - log1pexp(eta));
        let r = w[i] * (y[i] - pr);
        let v = w[i] * pr * (1.0 - pr);
        for a in 0..p {
            grad[a] += r * row[a];
            for b in 0..=a {
                hess[(a, b)] -= v * row[a] * row[b];
            }
        }
    }
    for a in 0..p {
        for b in 0..a {
            hess[(b, a)] = hess[(a, b)];
        }
    }
    Eval {
        value,
        gradient: grad,
        hessian: hess,
    }
}

/// Maximize `sum_i w_i [y_i eta_i - log(1 + exp(eta_i))]`, `eta = X beta`.
///
/// Both outcome classes must carry positive weight. Separation (coefficients
/// beyond [`COEF_CAP`] or fitted probabilities reproducing every outcome)
/// yields coefficients rescaled to the cap with `separated = true`.
pub fn fit_logistic(
    design: &DMatrix<f64>,
    y: &[f64],
    weights: Option<&[f64]>,
) -> Result<LogisticFit> {
    let n = design.nrows();
    if n == 0 || y.len() != n {
        return Err(Error::EmptyData("logistic regression needs matching rows".into()));
    }
    let ones;
    let w = match weights {
        Some(w) => w,
        None => {
            ones = vec![1.0; n];
            &ones
        }
    };
    let total: f64 = w.iter().sum();
    let mass1: f64 = w.iter().zip(y).map(|(w, y)| w * y).sum();
    let mass0: f64 = w.iter().zip(y).map(|(w, y)| w * (1.0 - y)).sum();
    if !(total > 0.0) {
        return Err(Error::EffectiveSample("all weights are zero".into()));
    }
    if mass1 <= 0.0 || mass0 <= 0.0 {
        return Err(Error::DegenerateOutcome(
            "only one outcome value carries weight".into(),
        ));
    }

    let mut init = DVector::zeros(design.ncols());
    // Start from the weighted share on a constant column when one exists.
    if let Some(j) = (0..design.ncols()).find(|&j| {
        let c = design[(0, j)];
        c != 0.0 && design.column(j).iter().all(|&v| v == c)
    }) {
        let share = (mass1 / total).clamp(1e-10, 1.0 - 1e-10);
        init[j] = (share / (1.0 - share)).ln() / design[(0, j)];
    }

    let mut capped = false;
    let result = maximize_concave(
        |b| {
            if b.amax() > COEF_CAP * 4.0 {
                capped = true;
            }
            evaluate(design, y, w, b)
        },
        init,
        None,
        Tolerances::default(),
    )?;

    let mut beta = result.argmax;
    let mut separated = capped || beta.amax() > COEF_CAP;
    // A class with negligible relative mass is separated for practical
    // purposes even though its likelihood contribution is finite.
    separated |= mass0.min(mass1) < 1e-12 * total;
    if !separated {
        let w_max = w.iter().fold(0.0f64, |a, &b| a.max(b));
        let max_resid = (0..n)
            .filter(|&i| w[i] > 1e-12 * w_max)
            .map(|i| (y[i] - sigmoid(design.row(i).dot(&beta.transpose()))).abs())
            .fold(0.0f64, f64::max);
        separated = max_resid < 1e-8;
    }
    // Shrinking the whole vector keeps the separating hyperplane in place.
    if separated && beta.amax() > COEF_CAP {
        beta *= COEF_CAP / beta.amax();
    }
    let ev = evaluate(design, y, w, &beta);
    Ok(LogisticFit {
        cov: inv_neg(&ev.hessian),
        loglik: ev.value,
        converged: result.converged && !separated,
        separated,
        beta,
    })
}
