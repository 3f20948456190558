//! Panel tail estimators.
//!
//! In the tail, unit `i`'s outcome probability behaves like
//! `1 / (1 + A_i x^(z_i . theta*))`. The unit effect `A_i` is either
//! conditioned out (small `T`, [`conditional`], [`local`], [`dynamic`]) or
//! estimated jointly as a fixed effect (large `T`, [`fe`]).

pub mod conditional;
pub mod dynamic;
pub mod fe;
pub mod local;

use std::collections::HashMap;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::numerics::empirical_quantile;
use crate::{Error, Result};

pub use conditional::{fit_panel_conditional, tail_switcher_share, ConditionalSample};
pub use dynamic::{fit_panel_dynamic, DynFit, DynamicSample};
pub use fe::{
    ape_panel, extreme_elasticity_panel, fit_panel_fe, forecast_unit, Correction, DroppedUnit,
    FeFit, FeSample, Transform,
};
pub use local::{fit_panel_local, Bandwidth};

/// One unit's observed periods, sorted by period index. `z` holds one row of
/// `dz` covariates per period (row-major).
#[derive(Debug, Clone, PartialEq)]
pub struct PanelUnit {
    pub id: String,
    pub periods: Vec<i64>,
    pub y: Vec<u8>,
    pub x: Vec<f64>,
    pub z: Vec<f64>,
}

impl PanelUnit {
    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn z_at(&self, k: usize, dz: usize) -> &[f64] {
        &self.z[k * dz..(k + 1) * dz]
    }

    pub fn z_is_constant(&self, dz: usize) -> bool {
        (1..self.len()).all(|k| self.z_at(k, dz) == self.z_at(0, dz))
    }

    /// Positions of the observations with `x >= threshold`.
    pub fn tail_positions(&self, threshold: f64) -> Vec<usize> {
        (0..self.len()).filter(|&k| self.x[k] >= threshold).collect()
    }

    fn slice(&self, range: std::ops::Range<usize>, dz: usize) -> PanelUnit {
        PanelUnit {
            id: self.id.clone(),
            periods: self.periods[range.clone()].to_vec(),
            y: self.y[range.clone()].to_vec(),
            x: self.x[range.clone()].to_vec(),
            z: self.z[range.start * dz..range.end * dz].to_vec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PanelData {
    units: Vec<PanelUnit>,
    dz: usize,
}

impl PanelData {
    /// Validates lengths, outcome values and positivity of `x`, and sorts
    /// each unit by period.
    pub fn new(mut units: Vec<PanelUnit>, dz: usize) -> Result<Self> {
        if dz == 0 {
            return Err(Error::InvalidInput("at least one z column is required".into()));
        }
        if units.is_empty() {
            return Err(Error::EmptyData("panel has no units".into()));
        }
        for u in &mut units {
            let n = u.x.len();
            if u.y.len() != n || u.periods.len() != n || u.z.len() != n * dz {
                return Err(Error::InvalidInput(format!("unit {}: inconsistent lengths", u.id)));
            }
            if let Some(k) = u.y.iter().position(|&v| v > 1) {
                return Err(Error::InvalidInput(format!(
                    "unit {} period {}: y must be 0 or 1",
                    u.id, u.periods[k]
                )));
            }
            if let Some(k) = u.x.iter().position(|&v| !(v > 0.0) || !v.is_finite()) {
                return Err(Error::Domain(format!(
                    "unit {} period {}: x must be positive, got {}",
                    u.id, u.periods[k], u.x[k]
                )));
            }
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by_key(|&k| u.periods[k]);
            if order.windows(2).any(|w| u.periods[w[0]] == u.periods[w[1]]) {
                return Err(Error::InvalidInput(format!("unit {}: duplicate period", u.id)));
            }
            if order.iter().enumerate().any(|(a, &b)| a != b) {
                u.x = order.iter().map(|&k| u.x[k]).collect();
                u.y = order.iter().map(|&k| u.y[k]).collect();
                u.periods = order.iter().map(|&k| u.periods[k]).collect();
                u.z = order
                    .iter()
                    .flat_map(|&k| u.z[k * dz..(k + 1) * dz].to_vec())
                    .collect();
            }
        }
        Ok(Self { units, dz })
    }

    /// Build from long-format rows `(unit, t, y, x, z)`. Units keep the order
    /// of their first appearance.
    pub fn from_rows<I>(rows: I, dz: usize) -> Result<Self>
    where
        I: IntoIterator<Item = (String, i64, u8, f64, Vec<f64>)>,
    {
        let mut index: HashMap<String, usize> = HashMap::new();
        let mut units: Vec<PanelUnit> = Vec::new();
        for (id, t, y, x, z) in rows {
            if z.len() != dz {
                return Err(Error::InvalidInput(format!("unit {id}: expected {dz} z values")));
            }
            let k = *index.entry(id.clone()).or_insert_with(|| {
                units.push(PanelUnit {
                    id: id.clone(),
                    periods: Vec::new(),
                    y: Vec::new(),
                    x: Vec::new(),
                    z: Vec::new(),
                });
                units.len() - 1
            });
            let u = &mut units[k];
            u.periods.push(t);
            u.y.push(y);
            u.x.push(x);
            u.z.extend(z);
        }
        Self::new(units, dz)
    }

    pub fn units(&self) -> &[PanelUnit] {
        &self.units
    }

    pub fn dz(&self) -> usize {
        self.dz
    }

    pub fn n_units(&self) -> usize {
        self.units.len()
    }

    pub fn max_periods(&self) -> usize {
        self.units.iter().map(|u| u.len()).max().unwrap_or(0)
    }

    pub fn unit(&self, id: &str) -> Option<&PanelUnit> {
        self.units.iter().find(|u| u.id == id)
    }

    /// Common threshold: type-7 quantile of all observed `x`.
    pub fn threshold(&self, q: f64) -> Result<f64> {
        if !(q > 0.0 && q < 1.0) {
            return Err(Error::InvalidParameter(format!("tail quantile must lie in (0, 1), got {q}")));
        }
        let pooled: Vec<f64> = self.units.iter().flat_map(|u| u.x.iter().copied()).collect();
        empirical_quantile(&pooled, q)
    }

    pub fn require_constant_z(&self) -> Result<()> {
        match self.units.iter().find(|u| !u.z_is_constant(self.dz)) {
            Some(u) => Err(Error::InvalidInput(format!(
                "unit {}: z varies over time; use the local estimator",
                u.id
            ))),
            None => Ok(()),
        }
    }

    /// First and second halves of every unit's observations; the first half
    /// receives the extra period when a unit has an odd count.
    pub fn split_halves(&self) -> (PanelData, PanelData) {
        let mut first = Vec::with_capacity(self.units.len());
        let mut second = Vec::with_capacity(self.units.len());
        for u in &self.units {
            let cut = u.len().div_ceil(2);
            first.push(u.slice(0..cut, self.dz));
            second.push(u.slice(cut..u.len(), self.dz));
        }
        (
            PanelData { units: first, dz: self.dz },
            PanelData { units: second, dz: self.dz },
        )
    }

    /// Keep the first `t` observations of every unit.
    pub fn truncate(&self, t: usize) -> PanelData {
        PanelData {
            units: self
                .units
                .iter()
                .map(|u| u.slice(0..t.min(u.len()), self.dz))
                .collect(),
            dz: self.dz,
        }
    }
}

/// Small-`T` conditional (or kernel-weighted local) fit of `theta*`.
#[derive(Debug, Clone, PartialEq)]
pub struct PanelFit {
    pub theta_star: Vec<f64>,
    pub cov: DMatrix<f64>,
    pub threshold: f64,
    pub n_contributing: usize,
    pub converged: bool,
    pub iterations: usize,
    /// Kernel bandwidth (local fits only).
    pub bandwidth: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PanelMode {
    Conditional,
    Fe,
    Dynamic,
    Local,
}
