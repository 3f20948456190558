//! Threshold-crossing designs with absolute Student-t covariates and errors.

use rand_distr::{Distribution, StandardNormal};

use crate::cs_model::CrossSection;
use crate::numerics::dist::AbsT;
use crate::numerics::{cdf_abs_t, pdf_abs_t, quantile_abs_t, RngStream};
use crate::panel::{PanelData, PanelUnit};
use crate::Result;

/// Smallest degrees of freedom used for a unit's covariate distribution.
pub const MIN_DF: f64 = 0.05;

/// Ground truth of `Y = 1{X - e >= med_X - med_e}` with `X ~ |t(alpha_x)|`
/// and `e ~ |t(alpha_eps)|`.
#[derive(Debug, Clone, PartialEq)]
pub struct DgpTruth {
    pub alpha_x: f64,
    pub alpha_eps: f64,
    pub med_x: f64,
    pub med_eps: f64,
    /// Per-unit covariate degrees of freedom (panel design only).
    pub unit_df: Vec<f64>,
}

impl DgpTruth {
    pub fn new(alpha_x: f64, alpha_eps: f64) -> Result<Self> {
        Ok(Self {
            alpha_x,
            alpha_eps,
            med_x: quantile_abs_t(alpha_x, 0.5)?,
            med_eps: quantile_abs_t(alpha_eps, 0.5)?,
            unit_df: Vec::new(),
        })
    }

    pub fn cutoff(&self) -> f64 {
        self.med_x - self.med_eps
    }

    /// `P(Y = 1 | X = x) = P(e <= x - med_X + med_e)`.
    pub fn prob(&self, x: f64) -> f64 {
        let q = x - self.cutoff();
        if q <= 0.0 {
            0.0
        } else {
            cdf_abs_t(self.alpha_eps, q).unwrap_or(f64::NAN)
        }
    }

    /// `d P(Y = 1 | X = x) / dx`.
    pub fn partial_effect(&self, x: f64) -> f64 {
        let q = x - self.cutoff();
        if q <= 0.0 {
            0.0
        } else {
            pdf_abs_t(self.alpha_eps, q).unwrap_or(f64::NAN)
        }
    }

    /// Limit elasticity `-|alpha^(1) - alpha^(0)| = -alpha_eps`.
    pub fn elasticity(&self) -> f64 {
        -self.alpha_eps
    }

    /// Tail index of `X | Y = 0`.
    pub fn alpha0(&self) -> f64 {
        self.alpha_x + self.alpha_eps
    }

    /// Tail index of `X | Y = 1`.
    pub fn alpha1(&self) -> f64 {
        self.alpha_x
    }

    /// Population quantile of `X`.
    pub fn x_quantile(&self, p: f64) -> Result<f64> {
        quantile_abs_t(self.alpha_x, p)
    }
}

/// Cross-sectional design: `n` draws of `(x, e)` in that order.
pub fn dgp_exp1(stream: &mut RngStream, alpha_x: f64, alpha_eps: f64, n: usize) -> Result<(CrossSection, DgpTruth)> {
    let truth = DgpTruth::new(alpha_x, alpha_eps)?;
    let dx = AbsT::new(alpha_x)?;
    let de = AbsT::new(alpha_eps)?;
    let cut = truth.cutoff();
    let mut x = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    for _ in 0..n {
        let xi = dx.sample(stream);
        let ei = de.sample(stream);
        x.push(xi);
        y.push((xi - ei >= cut) as u8);
    }
    Ok((CrossSection::with_constant(y, x)?, truth))
}

/// Draw from `0.2 N(-0.25, 0.1^2) + 0.8 N(0.25, 0.1^2)`.
pub fn draw_lambda_shift(stream: &mut RngStream) -> f64 {
    let u = stream.uniform_open();
    let z: f64 = StandardNormal.sample(stream);
    let mean = if u < 0.2 { -0.25 } else { 0.25 };
    mean + 0.1 * z
}

/// Panel design with unit-specific covariate tails over `periods` periods.
/// Each unit draws its tail shift, then `(x, e)` period by period.
pub fn dgp_exp2(
    stream: &mut RngStream,
    alpha_x: f64,
    alpha_eps: f64,
    n: usize,
    periods: usize,
) -> Result<(PanelData, DgpTruth)> {
    let mut truth = DgpTruth::new(alpha_x, alpha_eps)?;
    let de = AbsT::new(alpha_eps)?;
    let cut = truth.cutoff();
    let mut units = Vec::with_capacity(n);
    for i in 0..n {
        let df = (alpha_x + draw_lambda_shift(stream)).max(MIN_DF);
        truth.unit_df.push(df);
        let dx = AbsT::new(df)?;
        let mut x = Vec::with_capacity(periods);
        let mut y = Vec::with_capacity(periods);
        for _ in 0..periods {
            let xi = dx.sample(stream);
            let ei = de.sample(stream);
            x.push(xi);
            y.push((xi - ei >= cut) as u8);
        }
        units.push(PanelUnit {
            id: format!("{}", i + 1),
            periods: (1..=periods as i64).collect(),
            y,
            x,
            z: vec![1.0; periods],
        });
    }
    Ok((PanelData::new(units, 1)?, truth))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::make_rng_stream;

    #[test]
    fn median_point_has_probability_one_half() {
        let t = DgpTruth::new(1.0, 2.0).unwrap();
        assert!((t.prob(t.med_x) - 0.5).abs() < 1e-10);
        assert_eq!(t.elasticity(), -2.0);
        assert_eq!(t.alpha0(), 3.0);
    }

    #[test]
    fn outcome_share_is_balanced() {
        let mut s = make_rng_stream(11, 0);
        let (d, _) = dgp_exp1(&mut s, 1.0, 1.0, 10_000).unwrap();
        let share = d.y().iter().map(|&v| v as f64).sum::<f64>() / 10_000.0;
        assert!((share - 0.5).abs() < 0.02, "{share}");
    }

    #[test]
    fn lambda_mixture_mean() {
        let mut s = make_rng_stream(5, 0);
        let n = 200_000;
        let m = (0..n).map(|_| draw_lambda_shift(&mut s)).sum::<f64>() / n as f64;
        assert!((m - 0.15).abs() < 0.003, "{m}");
    }

    #[test]
    fn panel_shape() {
        let mut s = make_rng_stream(5, 1);
        let (p, t) = dgp_exp2(&mut s, 1.0, 1.0, 20, 7).unwrap();
        assert_eq!(p.n_units(), 20);
        assert_eq!(p.max_periods(), 7);
        assert!(t.unit_df.iter().all(|&d| d >= MIN_DF));
    }
}
