//! Monte Carlo designs and replication drivers.
//!
//! Repetition `r` draws from stream `(base_seed, r)` only, so its results do
//! not depend on which other repetitions run or on the thread schedule.
//! Repetitions run in parallel and are aggregated in index order.

pub mod dgp;
pub mod exp1;
pub mod exp2;

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::cs_model::CsMethod;
use crate::evaluation::bias_sd_rmse;
use crate::panel::Correction;
use crate::{Error, Result};

pub use dgp::{dgp_exp1, dgp_exp2, DgpTruth};
pub use exp1::{run_experiment1, Exp1Output, Exp1Rep};
pub use exp2::{run_experiment2, Exp2Output, Exp2Rep};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    Exp1,
    Exp2,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Exp1 => "exp1",
            Experiment::Exp2 => "exp2",
        }
    }
}

impl std::str::FromStr for Experiment {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exp1" => Ok(Self::Exp1),
            "exp2" => Ok(Self::Exp2),
            other => Err(Error::InvalidInput(format!("unknown experiment `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    Tail,
    LogitAll,
    LogitTail,
    LocalLinear,
    LocalLogit,
}

impl Estimator {
    pub fn name(self) -> &'static str {
        match self {
            Estimator::Tail => "tail",
            Estimator::LogitAll => "logit_all",
            Estimator::LogitTail => "logit_tail",
            Estimator::LocalLinear => "local_linear",
            Estimator::LocalLogit => "local_logit",
        }
    }
}

/// A scalar or a list in the configuration file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany {
    One(f64),
    Many(Vec<f64>),
}

impl OneOrMany {
    pub fn values(&self) -> Vec<f64> {
        match self {
            OneOrMany::One(v) => vec![*v],
            OneOrMany::Many(v) => v.clone(),
        }
    }
}

fn default_n() -> usize {
    10_000
}
fn default_t() -> usize {
    100
}
fn default_reps() -> usize {
    1000
}
fn default_seed() -> u64 {
    1
}
fn default_eval_quantiles() -> Vec<f64> {
    vec![0.90, 0.95, 0.975, 0.99]
}
fn default_elasticity_quantile() -> f64 {
    0.975
}
fn default_cs_method() -> CsMethod {
    CsMethod::RankHalf
}
fn default_correction() -> Correction {
    Correction::Jackknife
}

/// Simulation design. `alpha_x` and `alpha_eps` accept a number or a list;
/// every combination is run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub experiment: Option<Experiment>,
    pub alpha_x: OneOrMany,
    pub alpha_eps: OneOrMany,
    #[serde(default = "default_n")]
    pub n: usize,
    /// Estimation periods (the panel design simulates one more).
    #[serde(default = "default_t")]
    pub t: usize,
    #[serde(default = "default_reps")]
    pub reps: usize,
    #[serde(default = "default_seed")]
    pub base_seed: u64,
    /// Defaults to 0.975 for the cross-section and 0.90 for the panel.
    #[serde(default)]
    pub tail_q: Option<f64>,
    #[serde(default = "default_eval_quantiles")]
    pub eval_quantiles: Vec<f64>,
    #[serde(default = "default_elasticity_quantile")]
    pub elasticity_quantile: f64,
    #[serde(default)]
    pub estimators: Option<Vec<Estimator>>,
    #[serde(default = "default_cs_method")]
    pub cs_method: CsMethod,
    #[serde(default = "default_correction")]
    pub correction: Correction,
}

impl ExperimentConfig {
    /// Minimal configuration with defaults for everything else.
    pub fn new(experiment: Experiment, alpha_x: f64, alpha_eps: f64) -> Self {
        Self {
            experiment: Some(experiment),
            alpha_x: OneOrMany::One(alpha_x),
            alpha_eps: OneOrMany::One(alpha_eps),
            n: default_n(),
            t: default_t(),
            reps: default_reps(),
            base_seed: default_seed(),
            tail_q: None,
            eval_quantiles: default_eval_quantiles(),
            elasticity_quantile: default_elasticity_quantile(),
            estimators: None,
            cs_method: default_cs_method(),
            correction: default_correction(),
        }
    }

    pub fn experiment(&self) -> Result<Experiment> {
        self.experiment
            .ok_or_else(|| Error::InvalidInput("missing field `experiment`".into()))
    }

    pub fn tail_q(&self) -> f64 {
        self.tail_q.unwrap_or(match self.experiment {
            Some(Experiment::Exp2) => 0.90,
            _ => 0.975,
        })
    }

    pub fn estimators(&self) -> Vec<Estimator> {
        let mut e = self.estimators.clone().unwrap_or_else(|| match self.experiment {
            Some(Experiment::Exp2) => vec![Estimator::Tail, Estimator::LogitAll, Estimator::LogitTail],
            _ => vec![
                Estimator::Tail,
                Estimator::LogitAll,
                Estimator::LogitTail,
                Estimator::LocalLinear,
                Estimator::LocalLogit,
            ],
        });
        e.sort();
        e.dedup();
        e
    }

    /// `(alpha_x, alpha_eps)` pairs in file order, `alpha_eps` varying fastest.
    pub fn grid(&self) -> Vec<(f64, f64)> {
        let ae = self.alpha_eps.values();
        self.alpha_x
            .values()
            .into_iter()
            .flat_map(|ax| ae.iter().map(move |&e| (ax, e)))
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        let exp = self.experiment()?;
        let bad = |field: &str, msg: &str| Err(Error::InvalidInput(format!("field `{field}`: {msg}")));
        for (field, v) in [("alpha_x", &self.alpha_x), ("alpha_eps", &self.alpha_eps)] {
            let vals = v.values();
            if vals.is_empty() || vals.iter().any(|&a| !(a > 0.0) || !a.is_finite()) {
                return bad(field, "values must be positive");
            }
        }
        if self.reps == 0 {
            return bad("reps", "must be at least 1");
        }
        if self.n < 20 {
            return bad("n", "must be at least 20");
        }
        let q = self.tail_q();
        if !(q > 0.0 && q < 1.0) {
            return bad("tail_q", "must lie in (0, 1)");
        }
        if self
            .eval_quantiles
            .iter()
            .chain(std::iter::once(&self.elasticity_quantile))
            .any(|&p| !(p > 0.0 && p < 1.0))
        {
            return bad("eval_quantiles", "must lie in (0, 1)");
        }
        if exp == Experiment::Exp2 {
            if self.t < 2 {
                return bad("t", "must be at least 2");
            }
            if self
                .estimators()
                .iter()
                .any(|e| matches!(e, Estimator::LocalLinear | Estimator::LocalLogit))
            {
                return bad("estimators", "the panel design supports tail, logit_all and logit_tail");
            }
        }
        if self.estimators().is_empty() {
            return bad("estimators", "at least one estimator is required");
        }
        Ok(())
    }
}

/// One aggregated cell of a Monte Carlo table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub experiment: String,
    pub alpha_x: f64,
    pub alpha_eps: f64,
    pub estimator: String,
    pub estimand: String,
    pub eval_point: String,
    pub bias: Option<f64>,
    pub sd: Option<f64>,
    pub rmse: Option<f64>,
    pub n_ok: usize,
}

impl SummaryRow {
    /// Aggregate the non-missing values against `truth`.
    pub fn aggregate(
        experiment: Experiment,
        (alpha_x, alpha_eps): (f64, f64),
        estimator: &str,
        estimand: &str,
        eval_point: &str,
        values: &[Option<f64>],
        truth: f64,
    ) -> Self {
        let ok: Vec<f64> = values.iter().flatten().copied().filter(|v| v.is_finite()).collect();
        let stats = bias_sd_rmse(&ok, truth).ok();
        Self {
            experiment: experiment.name().into(),
            alpha_x,
            alpha_eps,
            estimator: estimator.into(),
            estimand: estimand.into(),
            eval_point: eval_point.into(),
            bias: stats.map(|s| s.bias),
            sd: stats.map(|s| s.sd),
            rmse: stats.map(|s| s.rmse),
            n_ok: ok.len(),
        }
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_else(|| "NA".into())
}

pub const SUMMARY_HEADER: &str = "experiment,alpha_x,alpha_eps,estimator,estimand,eval_point,bias,sd,rmse,n_ok";
pub const LPS_HEADER: &str = "alpha_x,alpha_eps,estimator,sum_lps,mean_lps,n_f,t_vs_tail,p_vs_tail";

pub fn write_summary_csv<W: Write>(rows: &[SummaryRow], mut w: W) -> std::io::Result<()> {
    writeln!(w, "{SUMMARY_HEADER}")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{}",
            r.experiment,
            r.alpha_x,
            r.alpha_eps,
            r.estimator,
            r.estimand,
            r.eval_point,
            fmt_opt(r.bias),
            fmt_opt(r.sd),
            fmt_opt(r.rmse),
            r.n_ok
        )?;
    }
    Ok(())
}

/// Forecast comparison row; score sums and means are averaged over
/// repetitions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpsRow {
    pub alpha_x: f64,
    pub alpha_eps: f64,
    pub estimator: String,
    pub sum_lps: Option<f64>,
    pub mean_lps: Option<f64>,
    pub n_f: Option<f64>,
    pub t_vs_tail: Option<f64>,
    pub p_vs_tail: Option<f64>,
}

pub fn write_lps_csv<W: Write>(rows: &[LpsRow], mut w: W) -> std::io::Result<()> {
    writeln!(w, "{LPS_HEADER}")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{}",
            r.alpha_x,
            r.alpha_eps,
            r.estimator,
            fmt_opt(r.sum_lps),
            fmt_opt(r.mean_lps),
            fmt_opt(r.n_f),
            fmt_opt(r.t_vs_tail),
            fmt_opt(r.p_vs_tail)
        )?;
    }
    Ok(())
}

pub(crate) fn fmt_point(p: f64) -> String {
    format!("{p}")
}
