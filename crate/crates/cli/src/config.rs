//! Resolution of file settings, flags and defaults into a [`RunConfig`].
//!
//! Precedence: command-line flag, then config file, then default.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use pwarx_core::benchmark::Task as McKind;
use pwarx_core::coord_descent::{HyperParams, RegularizerKind};

use crate::args::{Cli, Command, HyperArgs, McTask, RegChoice};
use crate::error::{CliError, Result};

pub const DEFAULT_MU: f64 = 0.1;
pub const DESK_RUNS: usize = 20;
pub const DESK_RESTARTS: usize = 5;
pub const DEFAULT_SAMPLES: usize = 2000;

/// Keys accepted in the TOML config file.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub rho: Option<f64>,
    pub lambda: Option<f64>,
    pub mu: Option<f64>,
    pub nu: Option<f64>,
    pub delta: Option<f64>,
    pub k_max: Option<usize>,
    pub n_max: Option<usize>,
    pub na_max: Option<usize>,
    pub nb_max: Option<usize>,
    pub restarts: Option<usize>,
    pub max_outer: Option<usize>,
    pub tol: Option<f64>,
    pub max_iters: Option<usize>,
    pub seed: Option<u64>,
    pub runs: Option<usize>,
    pub samples: Option<usize>,
    pub out_dir: Option<PathBuf>,
}

impl FileConfig {
    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        toml::from_str(text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text, path)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegFamily {
    Ridge,
    RidgeLinf,
    ElasticNet,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Task {
    Generate { samples: usize, seed: u64, noiseless: bool },
    Fit { data: PathBuf, k: usize, n_a: usize, n_b: usize },
    SelectK { data: PathBuf, n_a: usize, n_b: usize },
    SelectOrder { data: PathBuf, k: usize },
    Simulate { model: PathBuf, data: PathBuf },
    MonteCarlo { kind: McKind, runs: usize, samples: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub task: Task,
    pub hyper: HyperParams,
    pub out_dir: PathBuf,
    pub verbosity: u8,
}

fn pick<T: Copy>(flag: Option<T>, file: Option<T>, default: T) -> T {
    flag.or(file).unwrap_or(default)
}

fn non_negative(name: &str, v: f64) -> Result<f64> {
    if v.is_finite() && v >= 0.0 {
        Ok(v)
    } else {
        Err(CliError::Config(format!("{name} must be a finite non-negative number, got {v}")))
    }
}

fn positive(name: &str, v: f64) -> Result<f64> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(CliError::Config(format!("{name} must be positive, got {v}")))
    }
}

/// Hyper-parameters with defaults `ρ=1, λ=1e-3, μ=0.1, ν=1-μ, δ=0.01,
/// K_max=10, n_max=10`.
pub fn resolve_hyper(
    flags: &HyperArgs,
    file: &FileConfig,
    family: RegFamily,
    default_restarts: usize,
) -> Result<HyperParams> {
    let d = HyperParams::default();
    let mu = non_negative("mu", pick(flags.mu, file.mu, DEFAULT_MU))?;
    let nu = match flags.nu.or(file.nu) {
        Some(nu) => non_negative("nu", nu)?,
        None if mu <= 1.0 => 1.0 - mu,
        None => {
            return Err(CliError::Config(format!(
                "mu = {mu} > 1 leaves no default for nu = 1 - mu; set nu explicitly"
            )))
        }
    };
    let reg = match family {
        RegFamily::Ridge => RegularizerKind::RidgeOnly { mu },
        RegFamily::RidgeLinf => RegularizerKind::RidgeLinf { mu, nu },
        RegFamily::ElasticNet => RegularizerKind::ElasticNet { mu, nu },
    };
    let mut solver = d.solver;
    solver.tol = positive("tol", pick(flags.tol, file.tol, solver.tol))?;
    solver.max_iters = pick(flags.max_iters, file.max_iters, solver.max_iters);
    let h = HyperParams {
        rho: positive("rho", pick(flags.rho, file.rho, d.rho))?,
        lambda: positive("lambda", pick(flags.lambda, file.lambda, d.lambda))?,
        reg,
        delta: positive("delta", pick(flags.delta, file.delta, d.delta))?,
        k_max: pick(flags.k_max, file.k_max, d.k_max),
        n_a_max: [flags.na_max, flags.n_max, file.na_max, file.n_max]
            .into_iter()
            .flatten()
            .next()
            .unwrap_or(d.n_a_max),
        n_b_max: [flags.nb_max, flags.n_max, file.nb_max, file.n_max]
            .into_iter()
            .flatten()
            .next()
            .unwrap_or(d.n_b_max),
        restarts: pick(flags.restarts, file.restarts, default_restarts),
        max_outer: pick(flags.max_outer, file.max_outer, d.max_outer),
        solver,
        seed: pick(flags.seed, file.seed, d.seed),
    };
    h.validate().map_err(|e| CliError::Config(e.to_string()))?;
    Ok(h)
}

pub fn parse_config(cli: Cli) -> Result<RunConfig> {
    let file = match &cli.config {
        Some(p) => FileConfig::load(p)?,
        None => FileConfig::default(),
    };
    let none = HyperArgs::default();
    let full = HyperParams::default().restarts;
    let (task, hyper) = match cli.command {
        Command::Generate {
            samples,
            seed,
            noiseless,
        } => (
            Task::Generate {
                samples,
                seed,
                noiseless,
            },
            resolve_hyper(&none, &file, RegFamily::Ridge, full)?,
        ),
        Command::Fit {
            data,
            k,
            na,
            nb,
            reg,
            hyper,
        } => {
            let family = match reg {
                RegChoice::Ridge => RegFamily::Ridge,
                RegChoice::RidgeLinf => RegFamily::RidgeLinf,
                RegChoice::ElasticNet => RegFamily::ElasticNet,
            };
            (
                Task::Fit {
                    data,
                    k,
                    n_a: na,
                    n_b: nb,
                },
                resolve_hyper(&hyper, &file, family, full)?,
            )
        }
        Command::SelectK { data, na, nb, hyper } => (
            Task::SelectK { data, n_a: na, n_b: nb },
            resolve_hyper(&hyper, &file, RegFamily::RidgeLinf, full)?,
        ),
        Command::SelectOrder { data, k, hyper } => (
            Task::SelectOrder { data, k },
            resolve_hyper(&hyper, &file, RegFamily::ElasticNet, full)?,
        ),
        Command::Simulate { model, data } => (
            Task::Simulate { model, data },
            resolve_hyper(&none, &file, RegFamily::Ridge, full)?,
        ),
        Command::Montecarlo {
            task,
            runs,
            samples,
            hyper,
        } => {
            let (kind, family) = match task {
                McTask::SelectK => (McKind::SelectK, RegFamily::RidgeLinf),
                McTask::SelectOrder => (McKind::SelectOrder, RegFamily::ElasticNet),
            };
            let runs = pick(runs, file.runs, DESK_RUNS);
            if runs == 0 {
                return Err(CliError::Config("runs must be at least 1".into()));
            }
            (
                Task::MonteCarlo {
                    kind,
                    runs,
                    samples: pick(samples, file.samples, DEFAULT_SAMPLES),
                },
                resolve_hyper(&hyper, &file, family, DESK_RESTARTS)?,
            )
        }
    };
    let out_dir = cli.out_dir.or(file.out_dir).unwrap_or_else(|| PathBuf::from("."));
    Ok(RunConfig {
        task,
        hyper,
        out_dir,
        verbosity: cli.verbose,
    })
}
