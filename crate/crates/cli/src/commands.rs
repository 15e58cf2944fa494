use std::path::{Path, PathBuf};

use serde_json::json;

use pwarx_core::benchmark::{generate_with_noise, run_montecarlo, NOISE_RANGE};
use pwarx_core::coord_descent::{multi_start_fit, FitResult};
use pwarx_core::data::build_regressors;
use pwarx_core::metrics::bfr;
use pwarx_core::structure::{select_num_modes, select_order};

use crate::config::{RunConfig, Task};
use crate::csv_io::{load_csv, write_columns, write_csv, write_file};
use crate::error::{CliError, Result};
use crate::model_file::{load_model, save_model};

/// What a command printed and wrote.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Outcome {
    pub summary: Vec<String>,
    pub files: Vec<PathBuf>,
}

impl Outcome {
    fn wrote(&mut self, path: PathBuf) {
        self.files.push(path);
    }
}

fn write_jsonl(path: &Path, lines: impl IntoIterator<Item = serde_json::Value>) -> Result<()> {
    let mut out = String::new();
    for v in lines {
        out.push_str(&v.to_string());
        out.push('\n');
    }
    write_file(path, &out)
}

fn one_based(ix: &[usize]) -> Vec<usize> {
    ix.iter().map(|i| i + 1).collect()
}

fn fit_trace(fit: &FitResult) -> Vec<serde_json::Value> {
    const STEPS: [&str; 3] = ["local-models", "separator", "modes"];
    fit.objective_trace
        .iter()
        .enumerate()
        .map(|(i, v)| json!({"iteration": i / 3 + 1, "step": STEPS[i % 3], "objective": v}))
        .collect()
}

fn log(cfg: &RunConfig, msg: impl AsRef<str>) {
    if cfg.verbosity > 0 {
        eprintln!("pwarx: {}", msg.as_ref());
    }
}

pub fn run(cfg: &RunConfig) -> Result<Outcome> {
    std::fs::create_dir_all(&cfg.out_dir).map_err(|e| CliError::io(&cfg.out_dir, e))?;
    let path = |name: &str| cfg.out_dir.join(name);
    let h = &cfg.hyper;
    let mut out = Outcome::default();

    match &cfg.task {
        Task::Generate {
            samples,
            seed,
            noiseless,
        } => {
            let amplitude = if *noiseless { 0.0 } else { NOISE_RANGE };
            let g = generate_with_noise(*samples, *seed, amplitude)?;
            write_csv(&path("data.csv"), &g.data)?;
            out.wrote(path("data.csv"));
            let mut modes = String::from("t,mode\n");
            for (i, m) in g.modes.iter().enumerate() {
                modes.push_str(&format!("{},{}\n", i + 1, m + 1));
            }
            write_file(&path("modes.csv"), &modes)?;
            out.wrote(path("modes.csv"));
            out.summary.push(format!("generated {samples} samples (seed {seed})"));
        }
        Task::Fit { data, k, n_a, n_b } => {
            let d = load_csv(data)?;
            let set = build_regressors(&d, *n_a, *n_b)?;
            log(cfg, format!("fitting K={k} with {} restarts", h.restarts));
            let fit = multi_start_fit(&set, *k, h)?;
            save_model(&path("model.txt"), &fit.model)?;
            out.wrote(path("model.txt"));
            write_jsonl(&path("fit-trace.jsonl"), fit_trace(&fit))?;
            out.wrote(path("fit-trace.jsonl"));
            out.summary.push(format!(
                "objective {:.6} after {} outer iterations ({})",
                fit.objective,
                fit.outer_iterations,
                if fit.converged { "converged" } else { "not converged" }
            ));
        }
        Task::SelectK { data, n_a, n_b } => {
            let d = load_csv(data)?;
            log(cfg, format!("selecting K from K_max={}", h.k_max));
            let sel = select_num_modes(&d, *n_a, *n_b, h)?;
            let trace = sel.trace.records.iter().map(|r| {
                json!({
                    "iteration": r.iteration,
                    "k_in": r.k_in,
                    "k_out": r.k_out,
                    "redundant": one_based(&r.redundant),
                    "empty": one_based(&r.empty),
                    "objective": r.objective,
                })
            });
            write_jsonl(&path("select-k-trace.jsonl"), trace)?;
            out.wrote(path("select-k-trace.jsonl"));
            save_model(&path("model.txt"), &sel.fit.model)?;
            out.wrote(path("model.txt"));
            out.summary.push(format!(
                "selected K = {} after {} iterations{}",
                sel.k,
                sel.trace.records.len(),
                if sel.trace.clamped { " (clamped at 1)" } else { "" }
            ));
        }
        Task::SelectOrder { data, k } => {
            let d = load_csv(data)?;
            log(cfg, format!("selecting orders from ({}, {})", h.n_a_max, h.n_b_max));
            let sel = select_order(&d, *k, h)?;
            let trace = sel.trace.records.iter().map(|r| {
                json!({
                    "iteration": r.iteration,
                    "n_a_in": r.n_a_in,
                    "n_b_in": r.n_b_in,
                    "n_a_out": r.n_a_out,
                    "n_b_out": r.n_b_out,
                    "objective": r.objective,
                })
            });
            write_jsonl(&path("select-order-trace.jsonl"), trace)?;
            out.wrote(path("select-order-trace.jsonl"));
            save_model(&path("model.txt"), &sel.fit.model)?;
            out.wrote(path("model.txt"));
            out.summary.push(format!(
                "selected n_a = {}, n_b = {} after {} iterations{}",
                sel.n_a,
                sel.n_b,
                sel.trace.records.len(),
                if sel.trace.floored { " (order floored at 1)" } else { "" }
            ));
        }
        Task::Simulate { model, data } => {
            let m = load_model(model)?;
            let d = load_csv(data)?;
            let t0 = m.n_a().max(m.n_b());
            if d.len() <= t0 {
                return Err(pwarx_core::error::PwarxError::DatasetTooShort {
                    len: d.len(),
                    required: t0,
                }
                .into());
            }
            let y_hat = m.simulate_open_loop(d.u(), &d.y()[..t0])?;
            let y = &d.y()[t0..];
            let fit = bfr(y, &y_hat)?;
            write_columns(&path("predictions.csv"), &["y", "y_hat"], t0 as i64, &[y, &y_hat])?;
            out.wrote(path("predictions.csv"));
            out.summary.push(format!("BFR = {fit:.2}%"));
        }
        Task::MonteCarlo { kind, runs, samples } => {
            log(cfg, format!("{runs} runs of {samples} samples, {} restarts", h.restarts));
            let report = run_montecarlo(*kind, *runs, *samples, h)?;
            let lines = report.runs.iter().map(|r| match &r.outcome {
                Ok(o) => json!({
                    "run": r.run,
                    "data_seed": r.data_seed,
                    "fit_seed": r.fit_seed,
                    "k": o.k,
                    "n_a": o.n_a,
                    "n_b": o.n_b,
                    "aligned": o.aligned,
                    "objective": o.objective,
                    "snr_db": o.snr_db,
                    "iterations": o.iterations,
                }),
                Err(e) => json!({
                    "run": r.run,
                    "data_seed": r.data_seed,
                    "fit_seed": r.fit_seed,
                    "error": e,
                }),
            });
            write_jsonl(&path("runs.jsonl"), lines)?;
            out.wrote(path("runs.jsonl"));
            for (name, csv) in [
                ("parameters.csv", report.parameter_csv()),
                ("boundaries.csv", report.boundary_csv()),
                ("histogram.csv", report.histogram_csv()),
            ] {
                write_file(&path(name), &csv)?;
                out.wrote(path(name));
            }
            let succeeded = report.successful().len();
            out.summary.push(format!(
                "{succeeded}/{runs} runs with K = 3 aligned, {} failed",
                report.failures()
            ));
            for ((q, v), c) in report.histogram() {
                out.summary.push(format!("{q} = {v}: {c} runs"));
            }
        }
    }
    Ok(out)
}
