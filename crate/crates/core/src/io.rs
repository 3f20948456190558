//! CSV schemas for data and forecasts, and JSON fit artifacts.
//!
//! Cross-section files have the header `y,x,z1,...,zK` and panel files
//! `unit,t,y,x,z1,...,zK`. Without `z` columns a constant covariate is
//! used. Rows with an empty `y` or `x` are skipped and counted; any other
//! malformed cell is an error naming its data row (1-based, header
//! excluded).

use std::collections::BTreeMap;
use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::baselines::{LogitFit, Subset};
use crate::cs_model::{CrossSection, CsFit, CsMethod, TailProbModel};
use crate::evaluation::ForecastRecord;
use crate::panel::{Correction, DroppedUnit, DynFit, FeFit, PanelData, PanelFit, Transform};
use crate::{Error, Result};

/// Version of the artifact layout.
pub const SPEC_VERSION: &str = "1";

fn row_err(row: usize, msg: impl std::fmt::Display) -> Error {
    Error::InvalidInput(format!("row {row}: {msg}"))
}

fn check_header(found: &csv::StringRecord, fixed: &[&str]) -> Result<usize> {
    let names: Vec<&str> = found.iter().collect();
    if names.len() < fixed.len() || names[..fixed.len()] != *fixed {
        return Err(Error::InvalidInput(format!(
            "header must start with `{}`, found `{}`",
            fixed.join(","),
            names.join(",")
        )));
    }
    for (k, name) in names[fixed.len()..].iter().enumerate() {
        if *name != format!("z{}", k + 1) {
            return Err(Error::InvalidInput(format!(
                "column {} must be named `z{}`, found `{name}`",
                fixed.len() + k + 1,
                k + 1
            )));
        }
    }
    Ok(names.len() - fixed.len())
}

fn parse_y(cell: &str, row: usize) -> Result<Option<u8>> {
    match cell {
        "" => Ok(None),
        "0" => Ok(Some(0)),
        "1" => Ok(Some(1)),
        other => Err(row_err(row, format!("y must be 0 or 1, found `{other}`"))),
    }
}

fn parse_x(cell: &str, row: usize) -> Result<Option<f64>> {
    if cell.is_empty() {
        return Ok(None);
    }
    let x: f64 = cell
        .parse()
        .map_err(|_| row_err(row, format!("x is not a number: `{cell}`")))?;
    if !(x > 0.0) || !x.is_finite() {
        return Err(row_err(row, format!("x must be positive, found {cell}")));
    }
    Ok(Some(x))
}

fn parse_z(cells: &[&str], row: usize) -> Result<Vec<f64>> {
    cells
        .iter()
        .enumerate()
        .map(|(k, c)| match c.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            _ => Err(row_err(row, format!("z{} is not a finite number: `{c}`", k + 1))),
        })
        .collect()
}

fn records<R: Read>(reader: R) -> Result<(csv::StringRecord, Vec<csv::StringRecord>)> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let header = rdr
        .headers()
        .map_err(|e| Error::InvalidInput(format!("cannot read header: {e}")))?
        .clone();
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        out.push(rec.map_err(|e| row_err(i + 1, e))?);
    }
    Ok((header, out))
}

/// Data together with the number of skipped rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Loaded<T> {
    pub data: T,
    pub excluded: usize,
}

/// One parsed cross-section row; `y` is optional so forecast inputs can omit it.
#[derive(Debug, Clone, PartialEq)]
pub struct CsRow {
    pub row: usize,
    pub y: Option<u8>,
    pub x: f64,
    pub z: Vec<f64>,
}

/// Rows with a usable `x`; the second value counts rows skipped for an empty `x`.
pub fn read_cs_rows<R: Read>(reader: R) -> Result<(Vec<CsRow>, usize, usize)> {
    let (header, recs) = records(reader)?;
    let k = check_header(&header, &["y", "x"])?;
    let mut rows = Vec::with_capacity(recs.len());
    let mut skipped = 0;
    for (i, rec) in recs.iter().enumerate() {
        let row = i + 1;
        let cells: Vec<&str> = rec.iter().collect();
        let y = parse_y(cells[0], row)?;
        let Some(x) = parse_x(cells[1], row)? else {
            skipped += 1;
            continue;
        };
        let z = if k == 0 { vec![1.0] } else { parse_z(&cells[2..], row)? };
        rows.push(CsRow { row, y, x, z });
    }
    Ok((rows, skipped, k.max(1)))
}

pub fn read_cross_section<R: Read>(reader: R) -> Result<Loaded<CrossSection>> {
    let (rows, mut excluded, dz) = read_cs_rows(reader)?;
    let mut y = Vec::with_capacity(rows.len());
    let mut x = Vec::with_capacity(rows.len());
    let mut z = Vec::with_capacity(rows.len() * dz);
    for r in rows {
        match r.y {
            Some(v) => {
                y.push(v);
                x.push(r.x);
                z.extend(r.z);
            }
            None => excluded += 1,
        }
    }
    Ok(Loaded {
        data: CrossSection::new(y, x, z, dz)?,
        excluded,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PanelRow {
    pub row: usize,
    pub unit: String,
    pub t: i64,
    pub y: Option<u8>,
    pub x: f64,
    pub z: Vec<f64>,
}

/// Rows with a usable `x`, the count of rows skipped for an empty `x`, and `dz`.
pub fn read_panel_rows<R: Read>(reader: R) -> Result<(Vec<PanelRow>, usize, usize)> {
    let (header, recs) = records(reader)?;
    let k = check_header(&header, &["unit", "t", "y", "x"])?;
    let mut rows = Vec::with_capacity(recs.len());
    let mut skipped = 0;
    for (i, rec) in recs.iter().enumerate() {
        let row = i + 1;
        let cells: Vec<&str> = rec.iter().collect();
        if cells[0].is_empty() {
            return Err(row_err(row, "unit is empty"));
        }
        let t: i64 = cells[1]
            .parse()
            .map_err(|_| row_err(row, format!("t must be an integer, found `{}`", cells[1])))?;
        let y = parse_y(cells[2], row)?;
        let Some(x) = parse_x(cells[3], row)? else {
            skipped += 1;
            continue;
        };
        let z = if k == 0 { vec![1.0] } else { parse_z(&cells[4..], row)? };
        rows.push(PanelRow {
            row,
            unit: cells[0].to_string(),
            t,
            y,
            x,
            z,
        });
    }
    Ok((rows, skipped, k.max(1)))
}

pub fn read_panel<R: Read>(reader: R) -> Result<Loaded<PanelData>> {
    let (rows, skipped, dz) = read_panel_rows(reader)?;
    let complete = rows.iter().filter(|r| r.y.is_some()).count();
    let excluded = skipped + rows.len() - complete;
    let data = PanelData::from_rows(
        rows.into_iter()
            .filter_map(|r| r.y.map(|y| (r.unit, r.t, y, r.x, r.z))),
        dz,
    )?;
    Ok(Loaded { data, excluded })
}

/// Forecast rows `unit,p_hat[,y_realized]`.
pub fn write_forecasts<W: Write>(rows: &[(String, f64, Option<u8>)], w: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    let with_y = rows.iter().any(|r| r.2.is_some());
    let io = |e: csv::Error| Error::InvalidInput(e.to_string());
    if with_y {
        wtr.write_record(["unit", "p_hat", "y_realized"]).map_err(io)?;
    } else {
        wtr.write_record(["unit", "p_hat"]).map_err(io)?;
    }
    for (unit, p, y) in rows {
        let p = p.to_string();
        if with_y {
            let y = y.map(|v| v.to_string()).unwrap_or_default();
            wtr.write_record([unit.as_str(), &p, &y]).map_err(io)?;
        } else {
            wtr.write_record([unit.as_str(), &p]).map_err(io)?;
        }
    }
    wtr.flush().map_err(|e| Error::InvalidInput(e.to_string()))?;
    Ok(())
}

/// Scored forecasts; rows without a realized outcome are skipped and counted.
pub fn read_forecasts<R: Read>(reader: R) -> Result<Loaded<Vec<ForecastRecord>>> {
    let (header, recs) = records(reader)?;
    let names: Vec<&str> = header.iter().collect();
    if names != ["unit", "p_hat", "y_realized"] {
        return Err(Error::InvalidInput(format!(
            "forecast header must be `unit,p_hat,y_realized`, found `{}`",
            names.join(",")
        )));
    }
    let mut out = Vec::with_capacity(recs.len());
    let mut excluded = 0;
    for (i, rec) in recs.iter().enumerate() {
        let row = i + 1;
        let p: f64 = rec[1]
            .parse()
            .map_err(|_| row_err(row, format!("p_hat is not a number: `{}`", &rec[1])))?;
        if !(0.0..=1.0).contains(&p) {
            return Err(row_err(row, format!("p_hat must lie in [0, 1], found {p}")));
        }
        match parse_y(&rec[2], row)? {
            Some(y) => out.push(ForecastRecord::new(&rec[0], p, y)),
            None => excluded += 1,
        }
    }
    Ok(Loaded { data: out, excluded })
}

/// Write through a sibling temporary file and rename into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = path
        .file_name()
        .ok_or_else(|| std::io::Error::new(std::io::ErrorKind::InvalidInput, "path has no file name"))?;
    let tmp = dir.join(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    result
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    CsTail,
    PanelConditional,
    PanelLocal,
    PanelFe,
    PanelDynamic,
    Logit,
}

/// Serialized fit. `cov` is row-major with `cov_dim` rows; `tail_counts`
/// holds the per-outcome tail sizes (cross-section) or the number of
/// contributing units, observations or windows (panels).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitArtifact {
    pub model: ModelKind,
    pub params: BTreeMap<String, Vec<f64>>,
    pub cov: Vec<f64>,
    pub cov_dim: usize,
    pub threshold: Vec<f64>,
    pub tail_counts: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a_tilde: Option<BTreeMap<String, f64>>,
    pub converged: bool,
    pub seed: Option<u64>,
    pub spec_version: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub method: Option<CsMethod>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tailprob: Option<TailProbModel>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transform: Option<Transform>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub correction: Option<Correction>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dropped_units: Option<Vec<DroppedUnit>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z: Option<BTreeMap<String, Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iterations: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bandwidth: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hessian_rank: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subset: Option<Subset>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub separated: Option<bool>,
}

fn flatten(m: &DMatrix<f64>) -> Vec<f64> {
    (0..m.nrows())
        .flat_map(|i| (0..m.ncols()).map(move |j| m[(i, j)]))
        .collect()
}

fn block_diag(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let (p, q) = (a.nrows(), b.nrows());
    let mut m = DMatrix::zeros(p + q, p + q);
    m.view_mut((0, 0), (p, p)).copy_from(a);
    m.view_mut((p, p), (q, q)).copy_from(b);
    m
}

fn missing(what: &str) -> Error {
    Error::InvalidInput(format!("artifact is missing `{what}`"))
}

impl FitArtifact {
    fn base(model: ModelKind, cov: &DMatrix<f64>, threshold: Vec<f64>, tail_counts: Vec<usize>, converged: bool) -> Self {
        Self {
            model,
            params: BTreeMap::new(),
            cov: flatten(cov),
            cov_dim: cov.nrows(),
            threshold,
            tail_counts,
            a_tilde: None,
            converged,
            seed: None,
            spec_version: SPEC_VERSION.into(),
            n: None,
            method: None,
            tailprob: None,
            transform: None,
            correction: None,
            dropped_units: None,
            z: None,
            iterations: None,
            bandwidth: None,
            hessian_rank: None,
            subset: None,
            separated: None,
        }
    }

    pub fn cov_matrix(&self) -> Result<DMatrix<f64>> {
        if self.cov.len() != self.cov_dim * self.cov_dim {
            return Err(Error::InvalidInput(format!(
                "cov has {} entries, expected {}",
                self.cov.len(),
                self.cov_dim * self.cov_dim
            )));
        }
        Ok(DMatrix::from_row_slice(self.cov_dim, self.cov_dim, &self.cov))
    }

    fn param(&self, name: &str) -> Result<Vec<f64>> {
        self.params.get(name).cloned().ok_or_else(|| missing(&format!("params.{name}")))
    }

    fn expect(&self, kinds: &[ModelKind]) -> Result<()> {
        if kinds.contains(&self.model) {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!("artifact holds a {:?} fit", self.model)))
        }
    }

    pub fn from_cs(fit: &CsFit) -> Self {
        let mut a = Self::base(
            ModelKind::CsTail,
            &block_diag(&fit.cov0, &fit.cov1),
            fit.thresholds.to_vec(),
            fit.tail_counts.to_vec(),
            fit.converged,
        );
        a.params.insert("theta0".into(), fit.theta0.clone());
        a.params.insert("theta1".into(), fit.theta1.clone());
        a.n = Some(fit.n);
        a.method = Some(fit.method);
        a.tailprob = Some(fit.tailprob.clone());
        a
    }

    pub fn to_cs(&self) -> Result<CsFit> {
        self.expect(&[ModelKind::CsTail])?;
        let theta0 = self.param("theta0")?;
        let theta1 = self.param("theta1")?;
        let (p, q) = (theta0.len(), theta1.len());
        let cov = self.cov_matrix()?;
        if cov.nrows() != p + q || self.threshold.len() != 2 || self.tail_counts.len() != 2 {
            return Err(Error::InvalidInput("cross-section artifact has inconsistent sizes".into()));
        }
        Ok(CsFit {
            theta0,
            theta1,
            cov0: cov.view((0, 0), (p, p)).into_owned(),
            cov1: cov.view((p, p), (q, q)).into_owned(),
            thresholds: [self.threshold[0], self.threshold[1]],
            tail_counts: [self.tail_counts[0], self.tail_counts[1]],
            n: self.n.ok_or_else(|| missing("n"))?,
            tailprob: self.tailprob.clone().ok_or_else(|| missing("tailprob"))?,
            method: self.method.ok_or_else(|| missing("method"))?,
            converged: self.converged,
        })
    }

    /// Conditional (`bandwidth` absent) or local (`bandwidth` present) fit.
    pub fn from_panel(fit: &PanelFit) -> Self {
        let kind = if fit.bandwidth.is_some() {
            ModelKind::PanelLocal
        } else {
            ModelKind::PanelConditional
        };
        let mut a = Self::base(kind, &fit.cov, vec![fit.threshold], vec![fit.n_contributing], fit.converged);
        a.params.insert("theta_star".into(), fit.theta_star.clone());
        a.iterations = Some(fit.iterations);
        a.bandwidth = fit.bandwidth;
        a
    }

    pub fn to_panel(&self) -> Result<PanelFit> {
        self.expect(&[ModelKind::PanelConditional, ModelKind::PanelLocal])?;
        Ok(PanelFit {
            theta_star: self.param("theta_star")?,
            cov: self.cov_matrix()?,
            threshold: *self.threshold.first().ok_or_else(|| missing("threshold"))?,
            n_contributing: *self.tail_counts.first().ok_or_else(|| missing("tail_counts"))?,
            converged: self.converged,
            iterations: self.iterations.ok_or_else(|| missing("iterations"))?,
            bandwidth: self.bandwidth,
        })
    }

    pub fn from_fe(fit: &FeFit) -> Self {
        let mut a = Self::base(ModelKind::PanelFe, &fit.cov, vec![fit.threshold], vec![fit.n_obs], fit.converged);
        a.params.insert("theta_star".into(), fit.theta_star.clone());
        a.params.insert("theta_uncorrected".into(), fit.theta_uncorrected.clone());
        a.a_tilde = Some(fit.a_tilde.clone());
        a.z = Some(fit.z.clone());
        a.transform = Some(fit.transform);
        a.correction = Some(fit.correction);
        a.dropped_units = Some(fit.dropped_units.clone());
        a
    }

    pub fn to_fe(&self) -> Result<FeFit> {
        self.expect(&[ModelKind::PanelFe])?;
        Ok(FeFit {
            theta_star: self.param("theta_star")?,
            theta_uncorrected: self.param("theta_uncorrected")?,
            cov: self.cov_matrix()?,
            a_tilde: self.a_tilde.clone().ok_or_else(|| missing("a_tilde"))?,
            z: self.z.clone().ok_or_else(|| missing("z"))?,
            threshold: *self.threshold.first().ok_or_else(|| missing("threshold"))?,
            transform: self.transform.ok_or_else(|| missing("transform"))?,
            correction: self.correction.ok_or_else(|| missing("correction"))?,
            dropped_units: self.dropped_units.clone().ok_or_else(|| missing("dropped_units"))?,
            n_obs: *self.tail_counts.first().ok_or_else(|| missing("tail_counts"))?,
            converged: self.converged,
        })
    }

    pub fn from_dynamic(fit: &DynFit) -> Self {
        let mut a = Self::base(
            ModelKind::PanelDynamic,
            &fit.cov,
            vec![fit.threshold],
            vec![fit.n_windows],
            fit.converged,
        );
        a.params.insert("theta_01".into(), fit.theta_01.clone());
        a.params.insert("theta_10".into(), fit.theta_10.clone());
        a.params.insert("theta_11".into(), fit.theta_11.clone());
        a.hessian_rank = Some(fit.hessian_rank);
        a
    }

    pub fn to_dynamic(&self) -> Result<DynFit> {
        self.expect(&[ModelKind::PanelDynamic])?;
        Ok(DynFit {
            theta_01: self.param("theta_01")?,
            theta_10: self.param("theta_10")?,
            theta_11: self.param("theta_11")?,
            cov: self.cov_matrix()?,
            hessian_rank: self.hessian_rank.ok_or_else(|| missing("hessian_rank"))?,
            n_windows: *self.tail_counts.first().ok_or_else(|| missing("tail_counts"))?,
            threshold: *self.threshold.first().ok_or_else(|| missing("threshold"))?,
            converged: self.converged,
        })
    }

    pub fn from_logit(fit: &LogitFit) -> Self {
        let empty = DMatrix::zeros(0, 0);
        let mut a = Self::base(
            ModelKind::Logit,
            fit.cov.as_ref().unwrap_or(&empty),
            fit.thresholds.map(|t| t.to_vec()).unwrap_or_default(),
            vec![fit.n],
            fit.converged,
        );
        a.params.insert("beta".into(), fit.beta.clone());
        a.subset = Some(fit.subset);
        a.separated = Some(fit.separated);
        a.n = Some(fit.n);
        a
    }

    pub fn to_logit(&self) -> Result<LogitFit> {
        self.expect(&[ModelKind::Logit])?;
        let thresholds = match self.threshold.as_slice() {
            [] => None,
            [a, b] => Some([*a, *b]),
            _ => return Err(Error::InvalidInput("logit artifact needs zero or two thresholds".into())),
        };
        Ok(LogitFit {
            beta: self.param("beta")?,
            cov: (self.cov_dim > 0).then(|| self.cov_matrix()).transpose()?,
            subset: self.subset.ok_or_else(|| missing("subset"))?,
            thresholds,
            n: self.n.ok_or_else(|| missing("n"))?,
            converged: self.converged,
            separated: self.separated.ok_or_else(|| missing("separated"))?,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        if self.cov.iter().chain(self.params.values().flatten()).any(|v| !v.is_finite()) {
            return Err(Error::DegenerateDesign("fit contains non-finite values".into()));
        }
        serde_json::to_string_pretty(self).map_err(|e| Error::InvalidInput(e.to_string()))
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let a: Self = serde_json::from_str(s).map_err(|e| Error::InvalidInput(format!("invalid artifact: {e}")))?;
        if a.spec_version != SPEC_VERSION {
            return Err(Error::InvalidInput(format!(
                "artifact version {} is not supported (expected {SPEC_VERSION})",
                a.spec_version
            )));
        }
        a.cov_matrix()?;
        Ok(a)
    }
}
