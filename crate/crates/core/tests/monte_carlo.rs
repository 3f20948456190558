//! Monte Carlo checks of estimators against known population values.

use tailbin::evaluation::{lps_diff_test, ForecastRecord};
use tailbin::experiments::dgp::draw_lambda_shift;
use tailbin::experiments::{dgp_exp1, dgp_exp2, run_experiment2, Estimator, Experiment, ExperimentConfig};
use tailbin::numerics::dist::AbsT;
use tailbin::numerics::{make_rng_stream, RngStream};
use tailbin::panel::{
    fit_panel_conditional, fit_panel_fe, fit_panel_local, Bandwidth, Correction, PanelData, PanelUnit, Transform,
};
use tailbin::tail_index::{hill_estimate, loglog_points, rank_half_estimate, select_threshold};

fn pareto_sample(seed: u64, alpha: f64, n: usize) -> Vec<f64> {
    let mut s = make_rng_stream(seed, 0);
    (0..n).map(|_| s.uniform_open().powf(-1.0 / alpha)).collect()
}

fn logistic(v: f64) -> f64 {
    1.0 / (1.0 + (-v).exp())
}

fn mean_sd(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    (m, (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0)).sqrt())
}

#[test]
fn hill_recovers_pareto_index() {
    let x = pareto_sample(1, 2.0, 100_000);
    let u = select_threshold(&x, 0.9).unwrap();
    let est = hill_estimate(&x, u).unwrap();
    assert!((est.alpha_hat - 2.0).abs() <= 0.07, "{}", est.alpha_hat);
}

#[test]
fn rank_half_recovers_pareto_index() {
    let x = pareto_sample(2, 1.0, 100_000);
    let u = select_threshold(&x, 0.975).unwrap();
    let est = rank_half_estimate(&x, u).unwrap();
    assert!((est.alpha_hat - 1.0).abs() <= 0.09, "{}", est.alpha_hat);
}

#[test]
fn loglog_slope_over_top_decile() {
    let x = pareto_sample(3, 1.0, 100_000);
    let pts = loglog_points(&x).unwrap();
    let top = &pts[pts.len() * 9 / 10..];
    let n = top.len() as f64;
    let mx = top.iter().map(|p| p.log_x).sum::<f64>() / n;
    let my = top.iter().map(|p| p.log_survival).sum::<f64>() / n;
    let sxy: f64 = top.iter().map(|p| (p.log_x - mx) * (p.log_survival - my)).sum();
    let sxx: f64 = top.iter().map(|p| (p.log_x - mx).powi(2)).sum();
    let slope = sxy / sxx;
    assert!((slope + 1.0).abs() <= 0.1, "{slope}");
}

#[test]
fn outcome_subsamples_have_the_implied_tail_indices() {
    let mut s = make_rng_stream(4, 0);
    let (data, truth) = dgp_exp1(&mut s, 1.0, 1.0, 100_000).unwrap();
    for (label, alpha) in [(0u8, truth.alpha0()), (1, truth.alpha1())] {
        let xs: Vec<f64> = data.x().iter().zip(data.y()).filter(|(_, &y)| y == label).map(|(&x, _)| x).collect();
        let u = select_threshold(&xs, 0.975).unwrap();
        let est = rank_half_estimate(&xs, u).unwrap();
        assert!(
            (est.alpha_hat - alpha).abs() <= 3.0 * est.se,
            "y = {label}: {} vs {alpha} (se {})",
            est.alpha_hat,
            est.se
        );
    }
}

#[test]
fn unit_tail_thickness_is_never_clamped_at_alpha_one() {
    let mut s = make_rng_stream(5, 0);
    let clamped = (0..1_000_000).filter(|_| 1.0 + draw_lambda_shift(&mut s) < 0.05).count();
    assert_eq!(clamped, 0);
}

#[test]
fn unit_series_tail_index_matches_its_df() {
    let mut s = make_rng_stream(6, 0);
    for _ in 0..3 {
        let df = 1.0 + draw_lambda_shift(&mut s);
        let dist = AbsT::new(df).unwrap();
        let x: Vec<f64> = (0..100_000).map(|_| dist.sample(&mut s)).collect();
        let u = select_threshold(&x, 0.95).unwrap();
        let est = rank_half_estimate(&x, u).unwrap();
        assert!((est.alpha_hat - df).abs() <= 3.0 * est.se, "{} vs {df}", est.alpha_hat);
    }
}

#[test]
fn two_period_conditional_fit_is_centred_on_minus_alpha_eps() {
    let estimates: Vec<f64> = (0..100)
        .map(|rep| {
            let mut s = make_rng_stream(7, rep);
            let (panel, _) = dgp_exp2(&mut s, 1.0, 1.0, 20_000, 2).unwrap();
            fit_panel_conditional(&panel, 0.75).unwrap().theta_star[0]
        })
        .collect();
    let (m, _) = mean_sd(&estimates);
    assert!((m + 1.0).abs() <= 0.15, "{m}");
}

/// Logistic panel with `P(y = 1) = logistic(a_i - theta* log x)` and Pareto `x`.
fn logistic_panel(s: &mut RngStream, n: usize, t: usize, theta: f64) -> PanelData {
    let units = (0..n)
        .map(|i| {
            let a = -3.0 + 3.0 * (i as f64 + 0.5) / n as f64;
            let x: Vec<f64> = (0..t).map(|_| 1.0 / s.uniform_open()).collect();
            let y = x.iter().map(|&v| (s.uniform_open() < logistic(a - theta * v.ln())) as u8).collect();
            PanelUnit {
                id: i.to_string(),
                periods: (1..=t as i64).collect(),
                y,
                x,
                z: vec![1.0; t],
            }
        })
        .collect();
    PanelData::new(units, 1).unwrap()
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

#[test]
fn fixed_effects_fit_recovers_slope_on_long_panels() {
    let mut s = make_rng_stream(8, 0);
    let panel = logistic_panel(&mut s, 500, 100, -1.5);
    let fit = fit_panel_fe(&panel, 0.01, Transform::LogTail, Correction::Jackknife).unwrap();
    assert!((fit.theta_star[0] + 1.5).abs() <= 0.1, "{}", fit.theta_star[0]);
}

#[test]
fn jackknife_reduces_incidental_parameter_bias() {
    let mut plain = Vec::new();
    let mut corrected = Vec::new();
    for rep in 0..50 {
        let mut s = make_rng_stream(9, rep);
        let panel = logistic_panel(&mut s, 500, 20, -1.5);
        let fit = fit_panel_fe(&panel, 0.01, Transform::LogTail, Correction::Jackknife).unwrap();
        plain.push(fit.theta_uncorrected[0]);
        corrected.push(fit.theta_star[0]);
    }
    let bias_plain = (median(plain) + 1.5).abs();
    let bias_corrected = (median(corrected) + 1.5).abs();
    assert!(bias_corrected < bias_plain, "{bias_corrected} vs {bias_plain}");
}

#[test]
fn local_fit_recovers_slope_with_time_varying_covariate() {
    let theta = [-1.0, 0.5];
    let mut est = [Vec::new(), Vec::new()];
    for rep in 0..50 {
        let mut s = make_rng_stream(10, rep);
        let units = (0..4000)
            .map(|i| {
                let a = -1.0 + 2.0 * s.uniform_open();
                let base = 2.0 * s.uniform_open() - 1.0;
                let z: Vec<f64> = (0..2).flat_map(|_| [1.0, base + 0.2 * (s.uniform_open() - 0.5)]).collect();
                let x: Vec<f64> = (0..2).map(|_| 1.0 / s.uniform_open()).collect();
                let y = (0..2)
                    .map(|k| {
                        let index = theta[0] * z[2 * k] + theta[1] * z[2 * k + 1];
                        (s.uniform_open() < logistic(a - index * x[k].ln())) as u8
                    })
                    .collect();
                PanelUnit {
                    id: i.to_string(),
                    periods: vec![1, 2],
                    y,
                    x,
                    z,
                }
            })
            .collect();
        let panel = PanelData::new(units, 2).unwrap();
        let fit = fit_panel_local(&panel, 0.01, Bandwidth::Silverman).unwrap();
        est[0].push(fit.theta_star[0]);
        est[1].push(fit.theta_star[1]);
    }
    for j in 0..2 {
        let (m, sd) = mean_sd(&est[j]);
        let band = 3.0 * sd / (est[j].len() as f64).sqrt();
        assert!((m - theta[j]).abs() <= band, "coordinate {j}: {m} vs {} (band {band})", theta[j]);
    }
}

#[test]
fn forecasts_moved_toward_truth_score_better() {
    let mut s = make_rng_stream(11, 0);
    let mut better = Vec::new();
    let mut worse = Vec::new();
    for i in 0..1000 {
        let p = 0.2 + 0.6 * s.uniform_open();
        let y = (s.uniform_open() < p) as u8;
        let off = if s.uniform_open() < 0.5 { -0.15 } else { 0.15 };
        let q = p + off;
        worse.push(ForecastRecord::new(i.to_string(), q, y));
        better.push(ForecastRecord::new(i.to_string(), q - off.signum() * 0.1, y));
    }
    let t = lps_diff_test(&better, &worse).unwrap();
    assert!(t.mean_diff > 0.0 && t.p.unwrap() < 0.05, "{t:?}");
}

#[test]
#[ignore = "per-repetition score differences are heavy-tailed at 2000 units; see the decisions ledger"]
fn tail_forecasts_beat_all_data_logit_significantly_in_most_repetitions() {
    let mut c = ExperimentConfig::new(Experiment::Exp2, 1.0, 1.0);
    c.n = 2000;
    c.t = 60;
    c.reps = 20;
    let out = run_experiment2(&c).unwrap();
    let significant = out
        .reps
        .iter()
        .filter(|r| {
            let t = lps_diff_test(&r.forecasts[&Estimator::Tail], &r.forecasts[&Estimator::LogitAll]).unwrap();
            t.mean_diff > 0.0 && t.p.is_some_and(|p| p < 0.01)
        })
        .count();
    assert!(significant * 2 > out.reps.len(), "{significant}/{}", out.reps.len());
}
