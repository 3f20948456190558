//! Panel replication: fixed-effects tail fit against raw-covariate logits,
//! scored on one-period-ahead forecasts.

use std::collections::BTreeMap;

use rayon::prelude::*;

use super::dgp::dgp_exp2;
use super::{Estimator, Experiment, ExperimentConfig, LpsRow, SummaryRow};
use crate::baselines::{fit_logit_panel, Subset};
use crate::evaluation::{log_predictive_score, paired_test, ForecastRecord, Lps};
use crate::numerics::make_rng_stream;
use crate::panel::{fit_panel_fe, forecast_unit, FeFit, Transform};
use crate::Result;

#[derive(Debug, Clone, PartialEq)]
pub struct Exp2Rep {
    pub alpha_x: f64,
    pub alpha_eps: f64,
    pub rep: usize,
    /// Corrected tail estimate; `None` when the tail fit failed.
    pub theta_star: Option<f64>,
    /// Forecasts of every estimator that fitted, on a common unit set.
    pub forecasts: BTreeMap<Estimator, Vec<ForecastRecord>>,
}

impl Exp2Rep {
    pub fn lps(&self, estimator: Estimator) -> Option<Lps> {
        self.forecasts
            .get(&estimator)
            .and_then(|f| log_predictive_score(f).ok())
    }

    /// Per-unit score differences `other - tail`.
    pub fn score_diffs(&self, other: Estimator) -> Vec<f64> {
        match (self.forecasts.get(&other), self.forecasts.get(&Estimator::Tail)) {
            (Some(o), Some(t)) => o.iter().zip(t).map(|(a, b)| a.score() - b.score()).collect(),
            _ => Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Exp2Output {
    pub summary: Vec<SummaryRow>,
    pub lps: Vec<LpsRow>,
    pub reps: Vec<Exp2Rep>,
}

/// One repetition for one `(alpha_x, alpha_eps)` pair.
pub fn run_rep(cfg: &ExperimentConfig, alpha_x: f64, alpha_eps: f64, rep: usize) -> Result<Exp2Rep> {
    let mut stream = make_rng_stream(cfg.base_seed, rep as u32);
    let (full, _) = dgp_exp2(&mut stream, alpha_x, alpha_eps, cfg.n, cfg.t + 1)?;
    let panel = full.truncate(cfg.t);
    let q = cfg.tail_q();

    let fits: BTreeMap<Estimator, FeFit> = cfg
        .estimators()
        .into_iter()
        .filter_map(|est| {
            let fit = match est {
                Estimator::Tail => fit_panel_fe(&panel, q, Transform::LogTail, cfg.correction),
                Estimator::LogitAll => fit_logit_panel(&panel, Subset::All, q, cfg.correction),
                Estimator::LogitTail => fit_logit_panel(&panel, Subset::Tail, q, cfg.correction),
                Estimator::LocalLinear | Estimator::LocalLogit => return None,
            };
            fit.ok().map(|f| (est, f))
        })
        .collect();

    let theta_star = fits.get(&Estimator::Tail).map(|f| f.theta_star[0]);
    let mut forecasts = BTreeMap::new();
    if let Some(tail) = fits.get(&Estimator::Tail) {
        // Units the tail fit retains, that every other fit also retains and
        // whose next covariate value is in the tail.
        let last = cfg.t;
        let units: Vec<_> = full
            .units()
            .iter()
            .filter(|u| u.len() > last && u.x[last] >= tail.threshold)
            .filter(|u| fits.values().all(|f| f.a_tilde.contains_key(&u.id)))
            .collect();
        for (&est, fit) in &fits {
            let recs: Vec<ForecastRecord> = units
                .iter()
                .map(|u| {
                    let p = forecast_unit(fit, &u.id, u.x[last], u.z_at(last, full.dz()))?;
                    Ok(ForecastRecord::new(u.id.clone(), p, u.y[last]))
                })
                .collect::<Result<_>>()?;
            if !recs.is_empty() {
                forecasts.insert(est, recs);
            }
        }
    }
    Ok(Exp2Rep {
        alpha_x,
        alpha_eps,
        rep,
        theta_star,
        forecasts,
    })
}

fn mean(v: &[f64]) -> Option<f64> {
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

fn lps_rows(cfg: &ExperimentConfig, (ax, ae): (f64, f64), reps: &[Exp2Rep]) -> Vec<LpsRow> {
    cfg.estimators()
        .into_iter()
        .filter(|e| !matches!(e, Estimator::LocalLinear | Estimator::LocalLogit))
        .map(|est| {
            let scored: Vec<Lps> = reps.iter().filter_map(|r| r.lps(est)).collect();
            let sums: Vec<f64> = scored.iter().map(|l| l.sum).collect();
            let means: Vec<f64> = scored.iter().map(|l| l.mean).collect();
            let ns: Vec<f64> = scored.iter().map(|l| l.n as f64).collect();
            let test = if est == Estimator::Tail {
                None
            } else {
                let d: Vec<f64> = reps.iter().flat_map(|r| r.score_diffs(est)).collect();
                paired_test(&d).ok()
            };
            LpsRow {
                alpha_x: ax,
                alpha_eps: ae,
                estimator: est.name().into(),
                sum_lps: mean(&sums),
                mean_lps: mean(&means),
                n_f: mean(&ns),
                t_vs_tail: test.filter(|t| !t.is_degenerate()).map(|t| t.t),
                p_vs_tail: test.and_then(|t| t.p),
            }
        })
        .collect()
}

/// Run every repetition of every `(alpha_x, alpha_eps)` pair and aggregate.
pub fn run_experiment2(cfg: &ExperimentConfig) -> Result<Exp2Output> {
    let mut cfg = cfg.clone();
    cfg.experiment = Some(Experiment::Exp2);
    cfg.validate()?;
    let mut summary = Vec::new();
    let mut lps = Vec::new();
    let mut all_reps = Vec::new();
    for (ax, ae) in cfg.grid() {
        let reps: Vec<Exp2Rep> = (0..cfg.reps)
            .into_par_iter()
            .map(|r| run_rep(&cfg, ax, ae, r))
            .collect::<Result<_>>()?;
        if cfg.estimators().contains(&Estimator::Tail) {
            let values: Vec<Option<f64>> = reps.iter().map(|r| r.theta_star).collect();
            summary.push(SummaryRow::aggregate(
                Experiment::Exp2,
                (ax, ae),
                Estimator::Tail.name(),
                "theta_star",
                "",
                &values,
                -ae,
            ));
        }
        lps.extend(lps_rows(&cfg, (ax, ae), &reps));
        all_reps.extend(reps);
    }
    Ok(Exp2Output {
        summary,
        lps,
        reps: all_reps,
    })
}
