//! Absolute Student-t distribution: sampling, CDF, density and quantiles.
//!
//! `|T|` with `df` degrees of freedom has survival function
//! `P(|T| > q) = I_{df/(df+q^2)}(df/2, 1/2)`, the regularized incomplete beta
//! function. Fractional `df` (e.g. 0.5) is supported throughout.

use rand_distr::{Distribution, Gamma, StandardNormal};
use statrs::function::beta::beta_reg;
use statrs::function::gamma::ln_gamma;

use super::rng::RngStream;
use crate::{Error, Result};

fn check_df(df: f64) -> Result<()> {
    if df.is_finite() && df > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "degrees of freedom must be positive and finite, got {df}"
        )))
    }
}

/// Reusable sampler for `|T|`, `T ~ t(df)`.
#[derive(Debug, Clone)]
pub struct AbsT {
    df: f64,
    chi2: Gamma<f64>,
}

impl AbsT {
    pub fn new(df: f64) -> Result<Self> {
        check_df(df)?;
        let chi2 = Gamma::new(df / 2.0, 2.0)
            .map_err(|e| Error::InvalidParameter(format!("gamma({df}/2, 2): {e}")))?;
        Ok(Self { df, chi2 })
    }

    pub fn df(&self) -> f64 {
        self.df
    }

    /// One draw of `|Z| / sqrt(G / df)` with `G ~ chi2(df)`. Draws that
    /// underflow or overflow are rejected, so the result is strictly positive
    /// and finite.
    pub fn sample(&self, stream: &mut RngStream) -> f64 {
        loop {
            let z: f64 = StandardNormal.sample(stream);
            let g = self.chi2.sample(stream);
            let v = z.abs() / (g / self.df).sqrt();
            if v.is_finite() && v > 0.0 {
                return v;
            }
        }
    }
}

pub fn sample_abs_t(stream: &mut RngStream, df: f64) -> Result<f64> {
    Ok(AbsT::new(df)?.sample(stream))
}

/// `P(|T| > q)`.
pub fn survival_abs_t(df: f64, q: f64) -> Result<f64> {
    check_df(df)?;
    if q.is_nan() {
        return Err(Error::InvalidParameter("q is NaN".into()));
    }
    if q <= 0.0 {
        return Ok(1.0);
    }
    if q.is_infinite() {
        return Ok(0.0);
    }
    let q2 = q * q;
    if q2 < df {
        // Small q: the complementary form keeps precision near zero.
        Ok(1.0 - beta_reg(0.5, df / 2.0, q2 / (df + q2)))
    } else {
        Ok(beta_reg(df / 2.0, 0.5, df / (df + q2)))
    }
}

/// `P(|T| <= q)`.
pub fn cdf_abs_t(df: f64, q: f64) -> Result<f64> {
    check_df(df)?;
    if q <= 0.0 {
        return Ok(0.0);
    }
    if q.is_infinite() {
        return Ok(1.0);
    }
    let q2 = q * q;
    if q2 < df {
        Ok(beta_reg(0.5, df / 2.0, q2 / (df + q2)))
    } else {
        Ok(1.0 - beta_reg(df / 2.0, 0.5, df / (df + q2)))
    }
}

/// Density of `|T|` at `x` (zero for negative `x`).
pub fn pdf_abs_t(df: f64, x: f64) -> Result<f64> {
    check_df(df)?;
    if x < 0.0 {
        return Ok(0.0);
    }
    let ln_c = ln_gamma((df + 1.0) / 2.0)
        - ln_gamma(df / 2.0)
        - 0.5 * (df * std::f64::consts::PI).ln();
    let ln_k = -(df + 1.0) / 2.0 * (x * x / df).ln_1p();
    Ok(2.0 * (ln_c + ln_k).exp())
}

/// `q` with `P(|T| <= q) = p`, i.e. the Student-t quantile at `(1+p)/2`.
///
/// Found by bracketing and bisection on [`cdf_abs_t`].
pub fn quantile_abs_t(df: f64, p: f64) -> Result<f64> {
    check_df(df)?;
    if !(0.0..1.0).contains(&p) {
        return Err(Error::InvalidParameter(format!(
            "probability must lie in [0, 1), got {p}"
        )));
    }
    if p == 0.0 {
        return Ok(0.0);
    }
    let mut lo = 0.0_f64;
    let mut hi = 1.0_f64;
    while cdf_abs_t(df, hi)? < p {
        lo = hi;
        hi *= 2.0;
        if !hi.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "quantile of |t({df})| at {p} overflows"
            )));
        }
    }
    for _ in 0..2000 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if cdf_abs_t(df, mid)? < p {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-13 * hi.max(1.0) {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}
