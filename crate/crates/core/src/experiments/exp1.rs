//! Cross-sectional replication: tail indices, elasticity, probabilities and
//! partial effects at population quantiles of `X`.

use rayon::prelude::*;

use super::dgp::{dgp_exp1, DgpTruth};
use super::{fmt_point, Estimator, Experiment, ExperimentConfig, SummaryRow};
use crate::baselines::{fit_logit_cs, local_linear, local_logit, silverman_bandwidth, Subset};
use crate::cs_model::{
    elasticity_numeric, extreme_elasticity_cs, fit_cs_tail, partial_effect, predict_prob_cs, CrossSection,
};
use crate::numerics::make_rng_stream;
use crate::{clamp_prob, Result};

/// One estimate of one repetition; `None` when the estimator failed.
#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub estimator: Estimator,
    pub estimand: &'static str,
    pub eval_point: String,
    pub value: Option<f64>,
    pub truth: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Exp1Rep {
    pub alpha_x: f64,
    pub alpha_eps: f64,
    pub rep: usize,
    pub cells: Vec<Cell>,
}

impl Exp1Rep {
    pub fn value(&self, estimator: Estimator, estimand: &str, eval_point: &str) -> Option<f64> {
        self.cells
            .iter()
            .find(|c| c.estimator == estimator && c.estimand == estimand && c.eval_point == eval_point)
            .and_then(|c| c.value)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Exp1Output {
    pub summary: Vec<SummaryRow>,
    pub reps: Vec<Exp1Rep>,
}

/// Evaluation points: `(label, x)` at population quantiles of `X`.
fn points(truth: &DgpTruth, qs: &[f64]) -> Result<Vec<(String, f64)>> {
    qs.iter().map(|&p| Ok((fmt_point(p), truth.x_quantile(p)?))).collect()
}

fn curve_cells<F>(
    out: &mut Vec<Cell>,
    estimator: Estimator,
    prob: Option<F>,
    truth: &DgpTruth,
    elas_point: &(String, f64),
    eval_points: &[(String, f64)],
) where
    F: Fn(f64) -> f64,
{
    let elas = prob
        .as_ref()
        .and_then(|f| elasticity_numeric(|x| clamp_prob(f(x)), elas_point.1).ok());
    out.push(Cell {
        estimator,
        estimand: "elasticity",
        eval_point: elas_point.0.clone(),
        value: elas,
        truth: truth.elasticity(),
    });
    for (label, x) in eval_points {
        out.push(Cell {
            estimator,
            estimand: "prob",
            eval_point: label.clone(),
            value: prob.as_ref().map(|f| f(*x)),
            truth: truth.prob(*x),
        });
    }
    for (label, x) in eval_points {
        out.push(Cell {
            estimator,
            estimand: "partial_effect",
            eval_point: label.clone(),
            value: prob.as_ref().map(|f| partial_effect(f, *x)),
            truth: truth.partial_effect(*x),
        });
    }
}

fn tail_cells(
    out: &mut Vec<Cell>,
    data: &CrossSection,
    cfg: &ExperimentConfig,
    truth: &DgpTruth,
    elas_point: &(String, f64),
    eval_points: &[(String, f64)],
) {
    let fit = fit_cs_tail(data, cfg.tail_q(), cfg.cs_method).ok();
    let a0 = fit.as_ref().map(|f| f.theta0[0]);
    let a1 = fit.as_ref().map(|f| f.theta1[0]);
    for (estimand, value, t) in [
        ("alpha0", a0, truth.alpha0()),
        ("alpha1", a1, truth.alpha1()),
        ("alpha_diff", a0.zip(a1).map(|(a, b)| a - b), truth.alpha_eps),
    ] {
        out.push(Cell {
            estimator: Estimator::Tail,
            estimand,
            eval_point: String::new(),
            value,
            truth: t,
        });
    }
    out.push(Cell {
        estimator: Estimator::Tail,
        estimand: "elasticity",
        eval_point: elas_point.0.clone(),
        value: fit
            .as_ref()
            .and_then(|f| extreme_elasticity_cs(f, &[1.0]).ok())
            .map(|e| e.value),
        truth: truth.elasticity(),
    });
    let prob = fit
        .as_ref()
        .map(|f| move |x: f64| predict_prob_cs(f, x, &[1.0]).unwrap_or(f64::NAN));
    // The elasticity cell was written above; keep only probability and
    // partial-effect cells from the shared helper.
    let mut rest = Vec::new();
    curve_cells(&mut rest, Estimator::Tail, prob, truth, elas_point, eval_points);
    out.extend(rest.into_iter().filter(|c| c.estimand != "elasticity"));
}

/// One repetition for one `(alpha_x, alpha_eps)` pair.
pub fn run_rep(cfg: &ExperimentConfig, alpha_x: f64, alpha_eps: f64, rep: usize) -> Result<Exp1Rep> {
    let mut stream = make_rng_stream(cfg.base_seed, rep as u32);
    let (data, truth) = dgp_exp1(&mut stream, alpha_x, alpha_eps, cfg.n)?;
    let eval_points = points(&truth, &cfg.eval_quantiles)?;
    let elas_point = (
        fmt_point(cfg.elasticity_quantile),
        truth.x_quantile(cfg.elasticity_quantile)?,
    );
    let x = data.x().to_vec();
    let y: Vec<f64> = data.y().iter().map(|&v| v as f64).collect();
    let h = silverman_bandwidth(&x).ok();

    let mut cells = Vec::new();
    for est in cfg.estimators() {
        match est {
            Estimator::Tail => tail_cells(&mut cells, &data, cfg, &truth, &elas_point, &eval_points),
            Estimator::LogitAll | Estimator::LogitTail => {
                let subset = if est == Estimator::LogitAll { Subset::All } else { Subset::Tail };
                let fit = fit_logit_cs(&data, subset, Some(cfg.tail_q())).ok();
                let prob = fit.as_ref().map(|f| move |x: f64| f.predict(x));
                curve_cells(&mut cells, est, prob, &truth, &elas_point, &eval_points);
            }
            Estimator::LocalLinear => {
                let prob = h.map(|h| {
                    let (x, y) = (&x, &y);
                    move |x0: f64| local_linear(x, y, x0, h, None).map(|e| e.value).unwrap_or(f64::NAN)
                });
                curve_cells(&mut cells, est, prob, &truth, &elas_point, &eval_points);
            }
            Estimator::LocalLogit => {
                let prob = h.map(|h| {
                    let (x, y) = (&x, &y);
                    move |x0: f64| local_logit(x, y, x0, h, None).map(|e| e.value).unwrap_or(f64::NAN)
                });
                curve_cells(&mut cells, est, prob, &truth, &elas_point, &eval_points);
            }
        }
    }
    Ok(Exp1Rep {
        alpha_x,
        alpha_eps,
        rep,
        cells,
    })
}

/// Run every repetition of every `(alpha_x, alpha_eps)` pair and aggregate.
pub fn run_experiment1(cfg: &ExperimentConfig) -> Result<Exp1Output> {
    let mut cfg = cfg.clone();
    cfg.experiment = Some(Experiment::Exp1);
    cfg.validate()?;
    let mut summary = Vec::new();
    let mut all_reps = Vec::new();
    for (ax, ae) in cfg.grid() {
        let reps: Vec<Exp1Rep> = (0..cfg.reps)
            .into_par_iter()
            .map(|r| run_rep(&cfg, ax, ae, r))
            .collect::<Result<_>>()?;
        let template = &reps[0].cells;
        for (k, cell) in template.iter().enumerate() {
            let values: Vec<Option<f64>> = reps.iter().map(|r| r.cells[k].value).collect();
            summary.push(SummaryRow::aggregate(
                Experiment::Exp1,
                (ax, ae),
                cell.estimator.name(),
                cell.estimand,
                &cell.eval_point,
                &values,
                cell.truth,
            ));
        }
        all_reps.extend(reps);
    }
    Ok(Exp1Output {
        summary,
        reps: all_reps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> ExperimentConfig {
        let mut c = ExperimentConfig::new(Experiment::Exp1, 1.0, 1.0);
        c.n = 2000;
        c.reps = 2;
        c
    }

    #[test]
    fn only_requested_estimators_appear() {
        let mut c = small();
        c.estimators = Some(vec![Estimator::Tail]);
        let out = run_experiment1(&c).unwrap();
        assert!(out.summary.iter().all(|r| r.estimator == "tail"));
        assert!(out.summary.iter().any(|r| r.estimand == "alpha0"));
    }

    #[test]
    fn repetitions_do_not_depend_on_each_other() {
        let c = small();
        let a = run_rep(&c, 1.0, 1.0, 1).unwrap();
        let out = run_experiment1(&c).unwrap();
        assert_eq!(out.reps[1], a);
    }
}
