use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "pwarx", version, about = "Piecewise-affine ARX identification with structure selection")]
pub struct Cli {
    /// TOML file with hyper-parameters; command-line flags take precedence.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Directory for every file the command writes.
    #[arg(long, global = true, env = "PWARX_OUT_DIR", value_name = "DIR")]
    pub out_dir: Option<PathBuf>,

    /// Progress on stderr; repeat for more detail.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate the three-mode benchmark system.
    Generate {
        #[arg(long = "T", visible_alias = "samples", default_value_t = 2000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Disable the measurement noise.
        #[arg(long)]
        noiseless: bool,
    },
    /// Fit a model with a fixed number of modes and fixed orders.
    Fit {
        #[arg(long, value_name = "CSV")]
        data: PathBuf,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 1)]
        na: usize,
        #[arg(long, default_value_t = 1)]
        nb: usize,
        /// Regularizer on the local models.
        #[arg(long, value_enum, default_value_t = RegChoice::Ridge)]
        reg: RegChoice,
        #[command(flatten)]
        hyper: HyperArgs,
    },
    /// Select the number of modes for fixed orders.
    SelectK {
        #[arg(long, value_name = "CSV")]
        data: PathBuf,
        #[arg(long, default_value_t = 1)]
        na: usize,
        #[arg(long, default_value_t = 1)]
        nb: usize,
        #[command(flatten)]
        hyper: HyperArgs,
    },
    /// Select the model orders for a fixed number of modes.
    SelectOrder {
        #[arg(long, value_name = "CSV")]
        data: PathBuf,
        #[arg(long)]
        k: usize,
        #[command(flatten)]
        hyper: HyperArgs,
    },
    /// Open-loop simulation of a saved model on measured data.
    Simulate {
        #[arg(long, value_name = "FILE")]
        model: PathBuf,
        #[arg(long, value_name = "CSV")]
        data: PathBuf,
    },
    /// Monte Carlo study on the benchmark system.
    Montecarlo {
        #[arg(long, value_enum, default_value_t = McTask::SelectK)]
        task: McTask,
        #[arg(long)]
        runs: Option<usize>,
        #[arg(long = "T", visible_alias = "samples")]
        samples: Option<usize>,
        #[command(flatten)]
        hyper: HyperArgs,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RegChoice {
    Ridge,
    RidgeLinf,
    ElasticNet,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum McTask {
    SelectK,
    SelectOrder,
}

#[derive(Debug, Clone, Default, Args)]
pub struct HyperArgs {
    #[arg(long)]
    pub rho: Option<f64>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub mu: Option<f64>,
    /// Defaults to 1 - mu.
    #[arg(long)]
    pub nu: Option<f64>,
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub k_max: Option<usize>,
    /// Sets both n_a_max and n_b_max.
    #[arg(long)]
    pub n_max: Option<usize>,
    #[arg(long)]
    pub na_max: Option<usize>,
    #[arg(long)]
    pub nb_max: Option<usize>,
    /// Random initial mode sequences per fit.
    #[arg(long)]
    pub restarts: Option<usize>,
    #[arg(long)]
    pub max_outer: Option<usize>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub max_iters: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
}
