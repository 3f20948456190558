//! Central finite differences.

/// `cbrt(machine epsilon) * max(|x|, 1)`.
pub fn default_step(x: f64) -> f64 {
    f64::EPSILON.cbrt() * x.abs().max(1.0)
}

/// Central-difference gradient. `h = None` uses [`default_step`] per
/// coordinate; `Some(h)` applies the same absolute step everywhere.
pub fn finite_diff_grad<F>(mut f: F, theta: &[f64], h: Option<f64>) -> Vec<f64>
where
    F: FnMut(&[f64]) -> f64,
{
    let mut point = theta.to_vec();
    (0..theta.len())
        .map(|j| {
            let step = h.unwrap_or_else(|| default_step(theta[j]));
            point[j] = theta[j] + step;
            let up = f(&point);
            point[j] = theta[j] - step;
            let down = f(&point);
            point[j] = theta[j];
            (up - down) / (2.0 * step)
        })
        .collect()
}

/// Central-difference derivative of a scalar function.
pub fn central_derivative<F>(mut f: F, x: f64) -> f64
where
    F: FnMut(f64) -> f64,
{
    let h = default_step(x);
    (f(x + h) - f(x - h)) / (2.0 * h)
}
