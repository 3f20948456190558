//! Estimation of binary-outcome models when a covariate takes extreme values.
//!
//! The crate is organized bottom-up:
//!
//! * [`numerics`] – random streams, heavy-tailed samplers, quantiles and a
//!   damped Newton maximizer shared by every estimator.
//! * [`tail_index`] – thresholds, Hill and rank-1/2 estimators, log-log data.
//! * [`cs_model`] – cross-sectional tail MLE, plug-in probabilities,
//!   elasticities and partial effects.
//! * [`panel`] – conditional, fixed-effects, dynamic and local panel fits.
//! * [`baselines`] – logistic and kernel comparison estimators.
//! * [`evaluation`] – log predictive scores and bias/SD/RMSE summaries.
//! * [`experiments`] – simulation designs and replication drivers.
//! * [`io`] – CSV schemas and JSON fit artifacts used by the CLI.

// Domain guards are written as `!(x > 0.0)` so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod baselines;
pub mod cs_model;
pub mod error;
pub mod evaluation;
pub mod experiments;
pub mod io;
pub mod logistic;
pub mod numerics;
pub mod panel;
pub mod tail_index;

pub use error::{Error, Result};

/// Lower/upper clamp applied to every reported probability.
pub const PROB_CLAMP: f64 = 1e-12;

/// Clamp a probability into `(PROB_CLAMP, 1 - PROB_CLAMP)`.
pub fn clamp_prob(p: f64) -> f64 {
    if p.is_nan() {
        return p;
    }
    p.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP)
}
