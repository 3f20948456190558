//! Local conditional likelihood for time-varying covariates.
//!
//! Each unit contributes its first two tail periods. The two-period
//! conditional log-likelihood, with index `z_i1 . theta*`, is weighted by a
//! product Gaussian kernel in `(z_i1 - z_i2) / h`. The common `1 / h^dz`
//! factor does not move the maximizer and is omitted.

use super::conditional::{fit_sample, ConditionalSample, Group};
use super::{PanelData, PanelFit};
use crate::baselines::silverman_bandwidth;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Bandwidth {
    Fixed(f64),
    /// Silverman's rule on the pooled coordinate differences `z_i1 - z_i2`;
    /// `h = 1` when those differences have no spread.
    Silverman,
}

impl std::str::FromStr for Bandwidth {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        if s == "silverman" {
            return Ok(Self::Silverman);
        }
        match s.parse::<f64>() {
            Ok(h) if h > 0.0 && h.is_finite() => Ok(Self::Fixed(h)),
            _ => Err(Error::InvalidInput(format!(
                "bandwidth must be a positive number or `silverman`, got `{s}`"
            ))),
        }
    }
}

const MIN_WEIGHT: f64 = 1e-12;

fn gaussian(u: f64) -> f64 {
    (-0.5 * u * u).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Kernel-weighted two-period conditional MLE of `theta*`.
pub fn fit_panel_local(panel: &PanelData, q: f64, bandwidth: Bandwidth) -> Result<PanelFit> {
    let threshold = panel.threshold(q)?;
    let dz = panel.dz();
    let mut pairs = Vec::new();
    for u in panel.units() {
        let tail = u.tail_positions(threshold);
        if tail.len() < 2 {
            continue;
        }
        let (k1, k2) = (tail[0], tail[1]);
        if u.y[k1] == u.y[k2] {
            continue;
        }
        let z1 = u.z_at(k1, dz).to_vec();
        let diff: Vec<f64> = z1.iter().zip(u.z_at(k2, dz)).map(|(a, b)| a - b).collect();
        let v: Vec<f64> = [u.x[k1].ln(), u.x[k2].ln()]
            .iter()
            .flat_map(|lx| z1.iter().map(move |z| z * lx))
            .collect();
        pairs.push((diff, Group { v, y: vec![u.y[k1], u.y[k2]], weight: 1.0 }));
    }

    let h = match bandwidth {
        Bandwidth::Fixed(h) if h > 0.0 => h,
        Bandwidth::Fixed(h) => {
            return Err(Error::InvalidParameter(format!("bandwidth must be positive, got {h}")))
        }
        Bandwidth::Silverman => {
            // Coordinates that never change (such as a constant column) carry
            // no information about the spread and are left out.
            let varying: Vec<usize> = (0..dz)
                .filter(|&j| pairs.iter().any(|(d, _)| d[j] != 0.0))
                .collect();
            let pooled: Vec<f64> = pairs
                .iter()
                .flat_map(|(d, _)| varying.iter().map(move |&j| d[j]))
                .collect();
            if pooled.len() < 2 {
                1.0
            } else {
                silverman_bandwidth(&pooled).unwrap_or(1.0)
            }
        }
    };

    let mut groups = Vec::with_capacity(pairs.len());
    for (diff, mut g) in pairs {
        g.weight = diff.iter().map(|d| gaussian(d / h)).product();
        groups.push(g);
    }
    if !groups.is_empty() && groups.iter().all(|g| g.weight < MIN_WEIGHT) {
        return Err(Error::EffectiveSample(format!(
            "all kernel weights are below {MIN_WEIGHT:e} at h = {h}"
        )));
    }
    groups.retain(|g| g.weight >= MIN_WEIGHT);
    let sample = ConditionalSample { dz, groups };
    fit_sample(&sample, threshold, Some(h))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::panel::{fit_panel_conditional, PanelUnit};
    use crate::numerics::make_rng_stream;

    fn panel(seed: u64, n: usize, time_varying: bool) -> PanelData {
        let mut s = make_rng_stream(seed, 0);
        let units = (0..n)
            .map(|i| {
                let z1 = 0.5 + s.uniform_open();
                let z2 = if time_varying { z1 + 0.3 * (s.uniform_open() - 0.5) } else { z1 };
                let x = vec![1.0 / s.uniform_open(), 1.0 / s.uniform_open()];
                let y0 = (s.uniform_open() < 0.5) as u8;
                PanelUnit {
                    id: i.to_string(),
                    periods: vec![1, 2],
                    y: vec![y0, 1 - y0 * (s.uniform_open() < 0.8) as u8],
                    x,
                    z: vec![1.0, z1, 1.0, z2],
                }
            })
            .collect();
        PanelData::new(units, 2).unwrap()
    }

    #[test]
    fn constant_covariates_match_conditional_fit() {
        let p = panel(1, 400, false);
        let a = fit_panel_local(&p, 0.2, Bandwidth::Silverman).unwrap();
        let b = fit_panel_conditional(&p, 0.2).unwrap();
        for j in 0..2 {
            assert!((a.theta_star[j] - b.theta_star[j]).abs() < 1e-8);
        }
        assert_eq!(a.bandwidth, Some(1.0));
    }

    #[test]
    fn huge_bandwidth_approaches_unweighted_fit() {
        let p = panel(2, 400, true);
        let wide = fit_panel_local(&p, 0.2, Bandwidth::Fixed(1e6)).unwrap();
        let narrow = fit_panel_local(&p, 0.2, Bandwidth::Fixed(0.05)).unwrap();
        // Unweighted reference: the same pairs with unit weights.
        let unit_w = fit_panel_local(&p, 0.2, Bandwidth::Fixed(1e12)).unwrap();
        for j in 0..2 {
            assert!((wide.theta_star[j] - unit_w.theta_star[j]).abs() < 1e-6);
        }
        assert_ne!(narrow.theta_star, wide.theta_star);
    }

    #[test]
    fn bandwidth_parsing() {
        assert_eq!("silverman".parse::<Bandwidth>().unwrap(), Bandwidth::Silverman);
        assert_eq!("0.5".parse::<Bandwidth>().unwrap(), Bandwidth::Fixed(0.5));
        assert!("-1".parse::<Bandwidth>().is_err());
    }
}
