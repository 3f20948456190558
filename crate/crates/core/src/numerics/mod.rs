//! Shared numerical machinery: random streams, heavy-tailed samplers,
//! quantiles, a damped Newton maximizer and finite differences.

pub mod dist;
pub mod fdiff;
pub mod linalg;
pub mod optim;
pub mod quantile;
pub mod rng;

pub use dist::{cdf_abs_t, pdf_abs_t, quantile_abs_t, sample_abs_t, survival_abs_t};
pub use fdiff::{central_derivative, default_step, finite_diff_grad};
pub use optim::{maximize_concave, ConeConstraint, OptimResult, Tolerances};
pub use quantile::empirical_quantile;
pub use rng::{make_rng_stream, RngStream};
