//! Command-line harness for the `noisy-gs` solver: single runs, noise-level
//! sweeps, post-hoc verification of run directories, and the network
//! training demo.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::commands::{cmd_run, cmd_sweep, cmd_train, cmd_verify, GoldsteinRequest};
use crate::config::{AutoValue, ExperimentConfig};
use crate::error::{CliError, EXIT_OK, EXIT_USAGE};

#[derive(Debug, Parser)]
#[command(name = "noisygs", version, about = "Noise-tolerant gradient sampling solver")]
pub struct Cli {
    /// TOML experiment configuration; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve one problem and write history.csv, trajectory.csv and run.toml.
    Run(CommonArgs),
    /// Solve over a grid of noise levels and seeds; writes sweep.csv.
    Sweep(SweepArgs),
    /// Check a run directory for the terminal stationarity bound.
    Verify(VerifyArgs),
    /// Train the network demo for a grid of line-search slacks.
    Train(TrainArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// rosenbrock, abs_composite or max_linear:<file>
    #[arg(long)]
    pub problem: Option<String>,
    /// Function-noise bound.
    #[arg(long)]
    pub eps_f: Option<f64>,
    /// Gradient-noise bound, or `auto` for sqrt(eps_f).
    #[arg(long)]
    pub eps_g: Option<AutoValue>,
    /// Line-search slack, or `auto` for 2.1 * eps_f.
    #[arg(long)]
    pub eps_ls: Option<AutoValue>,
    /// Master seed for sampling (and noise unless --noise-seed is given).
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub noise_seed: Option<u64>,
    #[arg(long)]
    pub budget: Option<usize>,
    #[arg(long)]
    pub eps_min: Option<f64>,
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long)]
    pub theta: Option<f64>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub eta: Option<f64>,
    #[arg(long)]
    pub nu: Option<f64>,
    #[arg(long)]
    pub eps1: Option<f64>,
    /// Lipschitz constant; switches the line search to the Lipschitz cutoff.
    #[arg(long)]
    pub lipschitz: Option<f64>,
    /// Reject parameters that violate the convergence requirements.
    #[arg(long)]
    pub strict_requires: bool,
    #[arg(long)]
    pub repeats: Option<usize>,
    /// Output directory.
    #[arg(long, env = "NOISYGS_OUT_DIR")]
    pub out: Option<PathBuf>,
}

impl CommonArgs {
    fn to_config(&self) -> ExperimentConfig {
        let mut c = ExperimentConfig::default();
        c.problem.name = self.problem.clone();
        c.noise.eps_f = self.eps_f;
        c.noise.eps_g = self.eps_g;
        c.noise.noise_seed = self.noise_seed;
        c.solver.eps_ls = self.eps_ls;
        c.solver.seed = self.seed;
        c.solver.budget = self.budget;
        c.solver.eps_min = self.eps_min;
        c.solver.m = self.m;
        c.solver.theta = self.theta;
        c.solver.gamma = self.gamma;
        c.solver.eta = self.eta;
        c.solver.nu = self.nu;
        c.solver.eps1 = self.eps1;
        c.solver.lipschitz = self.lipschitz;
        c.solver.strict_requires = self.strict_requires.then_some(true);
        c.repeats = self.repeats;
        c.output_dir = self.out.clone();
        c
    }
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Comma-separated noise levels (default 1e-1,1e-2,1e-3,1e-4).
    #[arg(long, value_delimiter = ',')]
    pub levels: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    /// Run directory written by `run` (or one sweep cell).
    pub run_dir: PathBuf,
    /// Also estimate the Goldstein stationarity measure at the final iterate.
    #[arg(long)]
    pub goldstein_samples: Option<usize>,
    /// Ball radius for the estimate (default: the run's final radius).
    #[arg(long)]
    pub goldstein_eps: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub goldstein_seed: u64,
}

#[derive(Debug, Clone, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// full, fixed or adaptive
    #[arg(long)]
    pub mode: Option<String>,
    /// Fixed mini-batch size.
    #[arg(long)]
    pub batch: Option<usize>,
    /// Comma-separated line-search slacks (default 1e-3,1e-2,1e-1,1,10,100).
    #[arg(long, value_delimiter = ',')]
    pub eps_ls_grid: Option<Vec<f64>>,
    #[arg(long)]
    pub n_samples: Option<usize>,
    #[arg(long)]
    pub features: Option<usize>,
    #[arg(long)]
    pub separation: Option<f64>,
    #[arg(long)]
    pub data_seed: Option<u64>,
    /// CSV dataset (header f1..fp,label) instead of synthetic data.
    #[arg(long)]
    pub data: Option<PathBuf>,
}

fn load_config(path: &Option<PathBuf>, flags: ExperimentConfig) -> Result<ExperimentConfig, CliError> {
    let base = match path {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    Ok(base.overlay(&flags))
}

/// Executes a parsed command line and returns the process exit code.
pub fn execute(cli: Cli) -> Result<i32, CliError> {
    match cli.command {
        Command::Run(args) => {
            let cfg = load_config(&cli.config, args.to_config())?;
            cmd_run(&cfg)
        }
        Command::Sweep(args) => {
            let mut flags = args.common.to_config();
            flags.sweep.levels = args.levels;
            let cfg = load_config(&cli.config, flags)?;
            let rows = cmd_sweep(&cfg)?;
            println!("{} runs; wrote {}", rows.len(), cfg.output_dir().join(commands::SWEEP_FILE).display());
            Ok(EXIT_OK)
        }
        Command::Verify(args) => {
            let goldstein = args.goldstein_samples.map(|samples| GoldsteinRequest {
                samples,
                eps: args.goldstein_eps,
                seed: args.goldstein_seed,
            });
            let report = cmd_verify(&args.run_dir, goldstein)?;
            print!("{}", report.render());
            Ok(EXIT_OK)
        }
        Command::Train(args) => {
            let mut flags = args.common.to_config();
            flags.train.mode = args.mode;
            flags.train.batch = args.batch;
            flags.train.eps_ls_grid = args.eps_ls_grid;
            flags.train.n_samples = args.n_samples;
            flags.train.features = args.features;
            flags.train.separation = args.separation;
            flags.train.data_seed = args.data_seed;
            flags.train.data = args.data;
            let cfg = load_config(&cli.config, flags)?;
            let outcomes = cmd_train(&cfg)?;
            for o in &outcomes {
                println!(
                    "eps_ls {} seed {}: accuracy {} ({})",
                    output::fmt_f64(o.eps_ls),
                    o.seed,
                    output::fmt_f64(o.accuracy),
                    o.status
                );
            }
            Ok(EXIT_OK)
        }
    }
}

/// Parses `args` (including the program name), runs the command, and
/// returns the exit code. Usage errors print to stderr and return 64.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            if matches!(e, CliError::Usage(_)) {
                eprintln!("run `noisygs --help` for usage");
            }
            e.exit_code()
        }
    }
}
