//! Command-line front end.
//!
//! Exit codes: 0 success, 2 input or configuration error, 3 I/O error,
//! 4 estimation error.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use tailbin::cs_model::{fit_cs_tail, predict_prob_cs, CsMethod};
use tailbin::evaluation::{log_predictive_score, lps_diff_test, ForecastRecord};
use tailbin::experiments::{
    run_experiment1, run_experiment2, write_lps_csv, write_summary_csv, Experiment, ExperimentConfig,
};
use tailbin::io::{
    read_cross_section, read_cs_rows, read_forecasts, read_panel, read_panel_rows, write_atomic, write_forecasts,
    FitArtifact, ModelKind,
};
use tailbin::panel::{
    fit_panel_conditional, fit_panel_dynamic, fit_panel_fe, fit_panel_local, forecast_unit, Bandwidth, Correction,
    Transform,
};
use tailbin::tail_index::loglog_points;

enum Failure {
    Input(String),
    Io(String),
    Estimation(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Input(_) => 2,
            Failure::Io(_) => 3,
            Failure::Estimation(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Input(m) | Failure::Io(m) | Failure::Estimation(m) => m,
        }
    }
}

impl From<tailbin::Error> for Failure {
    fn from(e: tailbin::Error) -> Self {
        if e.is_input_error() {
            Failure::Input(e.to_string())
        } else {
            Failure::Estimation(e.to_string())
        }
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

fn input(e: tailbin::Error) -> Failure {
    Failure::Input(e.to_string())
}

fn open(path: &Path) -> CliResult<fs::File> {
    fs::File::open(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
}

fn save(path: &Path, bytes: &[u8]) -> CliResult<()> {
    write_atomic(path, bytes).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
}

#[derive(Parser)]
#[command(name = "tailbin", version, about = "Binary outcomes with heavy-tailed covariates")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Conditional,
    Fe,
    Dynamic,
    Local,
}

#[derive(Subcommand)]
enum Command {
    /// Run a Monte Carlo design and write summary tables.
    Simulate {
        #[arg(long)]
        experiment: Experiment,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        reps: Option<usize>,
    },
    /// Fit the cross-sectional tail model.
    FitCs {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        tail_q: f64,
        #[arg(long, default_value = "mle")]
        method: CsMethod,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit a panel tail model.
    FitPanel {
        #[arg(long)]
        data: PathBuf,
        #[arg(long, value_enum)]
        mode: Mode,
        #[arg(long)]
        tail_q: f64,
        #[arg(long, default_value = "jackknife")]
        correction: Correction,
        #[arg(long, default_value = "silverman")]
        bandwidth: Bandwidth,
        #[arg(long)]
        out: PathBuf,
    },
    /// Predict probabilities from a fitted artifact.
    Forecast {
        #[arg(long)]
        fit: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score forecast files and compare them with the first.
    Evaluate {
        #[arg(long, num_args = 1.., required = true)]
        forecasts: Vec<PathBuf>,
        #[arg(long)]
        pairwise: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Empirical survival on log-log axes.
    Loglog {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        by_y: bool,
        #[arg(long)]
        out: PathBuf,
    },
}

fn thread_pool() -> CliResult<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var("TAILBIN_THREADS") {
        let n: usize = v
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| Failure::Input(format!("TAILBIN_THREADS must be a positive integer, got `{v}`")))?;
        b = b.num_threads(n);
    }
    b.build().map_err(|e| Failure::Io(format!("cannot start worker threads: {e}")))
}

fn simulate(experiment: Experiment, config: &Path, out: &Path, seed: Option<u64>, reps: Option<usize>) -> CliResult<()> {
    let text = fs::read_to_string(config).map_err(|e| Failure::Io(format!("{}: {e}", config.display())))?;
    let mut cfg: ExperimentConfig =
        serde_json::from_str(&text).map_err(|e| Failure::Input(format!("{}: {e}", config.display())))?;
    match cfg.experiment {
        Some(e) if e != experiment => {
            return Err(Failure::Input(format!(
                "config names experiment `{}` but --experiment is `{}`",
                e.name(),
                experiment.name()
            )))
        }
        _ => cfg.experiment = Some(experiment),
    }
    if let Some(s) = seed {
        cfg.base_seed = s;
    }
    if let Some(r) = reps {
        cfg.reps = r;
    }
    cfg.validate().map_err(input)?;
    fs::create_dir_all(out).map_err(|e| Failure::Io(format!("{}: {e}", out.display())))?;

    let pool = thread_pool()?;
    let mut summary = Vec::new();
    let mut lps = Vec::new();
    match experiment {
        Experiment::Exp1 => {
            let o = pool.install(|| run_experiment1(&cfg))?;
            write_summary_csv(&o.summary, &mut summary).map_err(|e| Failure::Io(e.to_string()))?;
        }
        Experiment::Exp2 => {
            let o = pool.install(|| run_experiment2(&cfg))?;
            write_summary_csv(&o.summary, &mut summary).map_err(|e| Failure::Io(e.to_string()))?;
            write_lps_csv(&o.lps, &mut lps).map_err(|e| Failure::Io(e.to_string()))?;
        }
    }
    save(&out.join("summary.csv"), &summary)?;
    if experiment == Experiment::Exp2 {
        save(&out.join("lps.csv"), &lps)?;
    }
    let mut resolved = cfg.clone();
    resolved.tail_q = Some(cfg.tail_q());
    resolved.estimators = Some(cfg.estimators());
    let manifest = json!({
        "tool": "tailbin",
        "version": env!("CARGO_PKG_VERSION"),
        "experiment": experiment.name(),
        "seed": cfg.base_seed,
        "config": resolved,
    });
    let text = serde_json::to_string_pretty(&manifest).map_err(|e| Failure::Io(e.to_string()))?;
    save(&out.join("manifest.json"), text.as_bytes())?;
    println!("wrote {}", out.display());
    Ok(())
}

fn fmt_vec(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.4}")).collect();
    format!("[{}]", parts.join(", "))
}

fn diag_se(cov: &nalgebra::DMatrix<f64>) -> Vec<f64> {
    (0..cov.nrows()).map(|i| cov[(i, i)].max(0.0).sqrt()).collect()
}

fn fit_cs(data: &Path, q: f64, method: CsMethod, out: &Path) -> CliResult<()> {
    let loaded = read_cross_section(open(data)?).map_err(input)?;
    if loaded.excluded > 0 {
        eprintln!("excluded {} rows with missing y or x", loaded.excluded);
    }
    let fit = fit_cs_tail(&loaded.data, q, method)?;
    let art = FitArtifact::from_cs(&fit);
    save(out, art.to_json()?.as_bytes())?;
    println!(
        "cs_tail: y=0 theta {} se {}; y=1 theta {} se {}; tail counts {} and {}",
        fmt_vec(&fit.theta0),
        fmt_vec(&diag_se(&fit.cov0)),
        fmt_vec(&fit.theta1),
        fmt_vec(&diag_se(&fit.cov1)),
        fit.tail_counts[0],
        fit.tail_counts[1]
    );
    Ok(())
}

fn fit_panel(data: &Path, mode: Mode, q: f64, correction: Correction, bandwidth: Bandwidth, out: &Path) -> CliResult<()> {
    let loaded = read_panel(open(data)?).map_err(input)?;
    if loaded.excluded > 0 {
        eprintln!("excluded {} rows with missing y or x", loaded.excluded);
    }
    let panel = &loaded.data;
    let (art, line) = match mode {
        Mode::Conditional | Mode::Local => {
            let fit = match mode {
                Mode::Conditional => fit_panel_conditional(panel, q)?,
                _ => fit_panel_local(panel, q, bandwidth)?,
            };
            let line = format!(
                "theta* {} se {}; {} contributing units",
                fmt_vec(&fit.theta_star),
                fmt_vec(&diag_se(&fit.cov)),
                fit.n_contributing
            );
            (FitArtifact::from_panel(&fit), line)
        }
        Mode::Fe => {
            let fit = fit_panel_fe(panel, q, Transform::LogTail, correction)?;
            let line = format!(
                "theta* {} se {}; {} retained units, {} dropped",
                fmt_vec(&fit.theta_star),
                fmt_vec(&diag_se(&fit.cov)),
                fit.a_tilde.len(),
                fit.dropped_units.len()
            );
            (FitArtifact::from_fe(&fit), line)
        }
        Mode::Dynamic => {
            let fit = fit_panel_dynamic(panel, q)?;
            let line = format!(
                "theta01 {} theta10 {} theta11 {}; {} windows, information rank {}",
                fmt_vec(&fit.theta_01),
                fmt_vec(&fit.theta_10),
                fmt_vec(&fit.theta_11),
                fit.n_windows,
                fit.hessian_rank
            );
            (FitArtifact::from_dynamic(&fit), line)
        }
    };
    save(out, art.to_json()?.as_bytes())?;
    println!("{line}");
    Ok(())
}

fn forecast(fit: &Path, data: &Path, out: &Path) -> CliResult<()> {
    let text = fs::read_to_string(fit).map_err(|e| Failure::Io(format!("{}: {e}", fit.display())))?;
    let art = FitArtifact::from_json(&text).map_err(input)?;
    let mut rows = Vec::new();
    match art.model {
        ModelKind::PanelFe => {
            let fe = art.to_fe().map_err(input)?;
            let (data_rows, _, _) = read_panel_rows(open(data)?).map_err(input)?;
            let mut unknown = std::collections::BTreeSet::new();
            for r in data_rows {
                if !fe.a_tilde.contains_key(&r.unit) {
                    unknown.insert(r.unit);
                    continue;
                }
                let p = forecast_unit(&fe, &r.unit, r.x, &r.z).map_err(input)?;
                rows.push((r.unit, p, r.y));
            }
            for u in unknown {
                eprintln!("skipped unit `{u}`: not retained by the fit");
            }
        }
        ModelKind::CsTail | ModelKind::Logit => {
            let (data_rows, _, _) = read_cs_rows(open(data)?).map_err(input)?;
            let cs = (art.model == ModelKind::CsTail).then(|| art.to_cs()).transpose().map_err(input)?;
            let logit = (art.model == ModelKind::Logit).then(|| art.to_logit()).transpose().map_err(input)?;
            for r in data_rows {
                let p = match (&cs, &logit) {
                    (Some(f), _) => predict_prob_cs(f, r.x, &r.z).map_err(input)?,
                    (_, Some(f)) => f.predict(r.x),
                    _ => unreachable!(),
                };
                rows.push((r.row.to_string(), p, r.y));
            }
        }
        other => {
            return Err(Failure::Input(format!(
                "a {other:?} fit has no unit intercepts and cannot forecast"
            )))
        }
    }
    let mut buf = Vec::new();
    write_forecasts(&rows, &mut buf).map_err(input)?;
    save(out, &buf)?;
    println!("wrote {} forecasts", rows.len());
    Ok(())
}

fn evaluate(files: &[PathBuf], pairwise: bool, out: Option<&Path>) -> CliResult<()> {
    let mut sets: Vec<(String, Vec<ForecastRecord>)> = Vec::new();
    for f in files {
        let loaded = read_forecasts(open(f)?).map_err(input)?;
        let name = f.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        sets.push((name, loaded.data));
    }
    let mut table = String::from("estimator,sum_lps,mean_lps,n\n");
    for (name, fs) in &sets {
        let l = log_predictive_score(fs)?;
        writeln!(table, "{name},{},{},{}", l.sum, l.mean, l.n).unwrap();
    }
    print!("{table}");
    if pairwise {
        let mut pairs = String::from("pair,mean_diff,t,p\n");
        let (base_name, base) = &sets[0];
        for (name, fs) in &sets[1..] {
            let d = lps_diff_test(fs, base)?;
            let p = d.p.map(|v| v.to_string()).unwrap_or_else(|| "NA".into());
            writeln!(pairs, "{name}-{base_name},{},{},{p}", d.mean_diff, d.t).unwrap();
        }
        print!("{pairs}");
        table.push_str(&pairs);
    }
    if let Some(out) = out {
        save(out, table.as_bytes())?;
    }
    Ok(())
}

fn loglog(data: &Path, by_y: bool, out: &Path) -> CliResult<()> {
    let loaded = read_cross_section(open(data)?).map_err(input)?;
    let d = &loaded.data;
    let mut groups = vec![("all", d.x().to_vec())];
    if by_y {
        for (label, y) in [("0", 0u8), ("1", 1u8)] {
            let xs = d.x().iter().zip(d.y()).filter(|(_, &v)| v == y).map(|(&x, _)| x).collect();
            groups.push((label, xs));
        }
    }
    let mut text = String::from("group,log_x,log_survival\n");
    for (label, xs) in groups {
        if xs.is_empty() {
            continue;
        }
        for p in loglog_points(&xs)? {
            writeln!(text, "{label},{},{}", p.log_x, p.log_survival).unwrap();
        }
    }
    save(out, text.as_bytes())
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Simulate {
            experiment,
            config,
            out,
            seed,
            reps,
        } => simulate(experiment, &config, &out, seed, reps),
        Command::FitCs {
            data,
            tail_q,
            method,
            out,
        } => fit_cs(&data, tail_q, method, &out),
        Command::FitPanel {
            data,
            mode,
            tail_q,
            correction,
            bandwidth,
            out,
        } => fit_panel(&data, mode, tail_q, correction, bandwidth, &out),
        Command::Forecast { fit, data, out } => forecast(&fit, &data, &out),
        Command::Evaluate {
            forecasts,
            pairwise,
            out,
        } => evaluate(&forecasts, pairwise, out.as_deref()),
        Command::Loglog { data, by_y, out } => loglog(&data, by_y, &out),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
