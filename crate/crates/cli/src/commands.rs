use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use noisy_gs::ml::{accuracy, synth_dataset, BatchMode, BceOracle, Dataset, MlpShape};
use noisy_gs::problems::build;
use noisy_gs::sampler::SampleStream;
use noisy_gs::solver::{estimate_lipschitz, run, run_observed, terminal_bound_witness, IterateRecord};
use noisy_gs::stationarity::estimate_goldstein;
use noisy_gs::{Oracle, SolverParams, Status};
use rayon::prelude::*;

use crate::config::{ExperimentConfig, DEFAULT_EPS_LS_GRID, DEFAULT_SWEEP_LEVELS};
use crate::error::{CliError, EXIT_DIVERGING, EXIT_OK, EXIT_QP_FAILURE};
use crate::output::{
    fmt_f64, moving_average, parse_history, parse_trajectory, read_meta, write_atomic, write_run, RunMeta,
    HISTORY_FILE, TRAJECTORY_FILE,
};

pub const SWEEP_FILE: &str = "sweep.csv";
pub const SWEEP_HEADER: &str = "eps_f,seed,final_f_true,iters,total_f_evals,status";
pub const TRAIN_SUMMARY_FILE: &str = "train_summary.csv";
pub const TRAIN_SUMMARY_HEADER: &str = "eps_ls,seed,accuracy,final_f_true,iters,total_samples,status";
pub const TRAIN_HEADER: &str = "k,f_true,norm_g_tilde,eps_f_k,eps_g_k,f_true_ma,norm_g_tilde_ma,eps_f_k_ma,eps_g_k_ma,batch,samples_used";
pub const MOVING_AVERAGE_WINDOW: usize = 8;
/// Sample count for the network demo; `max(n + 1, 10)` would be in the
/// hundreds for a 151-weight model.
pub const TRAIN_DEFAULT_M: usize = 10;

pub fn exit_code_for(status: Status) -> i32 {
    match status {
        Status::Stationary | Status::BudgetExhausted => EXIT_OK,
        Status::ObjectiveDiverging => EXIT_DIVERGING,
        Status::QpFailure => EXIT_QP_FAILURE,
    }
}

/// Solves one problem instance and writes its run directory.
pub fn run_to_dir(cfg: &ExperimentConfig, eps_f: f64, seed: u64, dir: &Path) -> Result<RunMeta, CliError> {
    let params = cfg.params_for(eps_f, seed)?;
    let noise_seed = cfg.noise_seed(seed);
    let problem = build(cfg.problem_name(), params.bounds, noise_seed)?;
    let start = problem.spec.default_start.clone();
    let result = run(&problem.oracle, &start, &params)?;
    let final_f_true = problem.oracle.truth().map(|t| t.value(&result.final_x));
    write_run(dir, cfg.problem_name(), noise_seed, &start, &result, final_f_true, &params)
}

pub fn cmd_run(cfg: &ExperimentConfig) -> Result<i32, CliError> {
    let dir = cfg.output_dir();
    let meta = run_to_dir(cfg, cfg.eps_f(), cfg.seed(), &dir)?;
    println!(
        "status: {}  iterations: {}  final f_tilde: {}  final f_true: {}",
        meta.status,
        meta.iterations,
        fmt_f64(meta.final_f_tilde),
        meta.final_f_true.map(fmt_f64).unwrap_or_else(|| "n/a".into())
    );
    println!("wrote {}", dir.display());
    Ok(exit_code_for(meta.status()?))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub eps_f: f64,
    pub seed: u64,
    pub final_f_true: Option<f64>,
    pub iters: usize,
    pub total_f_evals: usize,
    pub status: String,
    pub run_dir: PathBuf,
}

pub fn cell_dir(root: &Path, eps_f: f64, seed: u64) -> PathBuf {
    root.join("runs").join(format!("ef{}_s{seed}", fmt_f64(eps_f)))
}

/// Runs every `(noise level, seed)` cell, possibly in parallel, and writes
/// `sweep.csv` once all cells have finished.
pub fn cmd_sweep(cfg: &ExperimentConfig) -> Result<Vec<SweepRow>, CliError> {
    let levels = cfg.sweep.levels.clone().unwrap_or_else(|| DEFAULT_SWEEP_LEVELS.to_vec());
    if levels.is_empty() {
        return Err(CliError::Usage("sweep needs at least one noise level".into()));
    }
    let repeats = cfg.repeats()? as u64;
    let base = cfg.seed();
    let root = cfg.output_dir();
    fs::create_dir_all(&root)?;
    let cells: Vec<(f64, u64)> = levels
        .iter()
        .flat_map(|&ef| (0..repeats).map(move |r| (ef, base + r)))
        .collect();
    let rows: Vec<SweepRow> = cells
        .par_iter()
        .map(|&(eps_f, seed)| {
            let dir = cell_dir(&root, eps_f, seed);
            // A sweep cell never inherits a fixed noise seed: pairing is by seed.
            let mut cell_cfg = cfg.clone();
            cell_cfg.noise.noise_seed = None;
            match run_to_dir(&cell_cfg, eps_f, seed, &dir) {
                Ok(meta) => SweepRow {
                    eps_f,
                    seed,
                    final_f_true: meta.final_f_true,
                    iters: meta.iterations,
                    total_f_evals: meta.f_evals,
                    status: meta.status,
                    run_dir: dir,
                },
                Err(e) => SweepRow {
                    eps_f,
                    seed,
                    final_f_true: None,
                    iters: 0,
                    total_f_evals: 0,
                    status: format!("Error: {}", e.to_string().replace([',', '\n'], ";")),
                    run_dir: dir,
                },
            }
        })
        .collect();
    let mut out = String::from(SWEEP_HEADER);
    out.push('\n');
    for r in &rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            fmt_f64(r.eps_f),
            r.seed,
            r.final_f_true.map(fmt_f64).unwrap_or_default(),
            r.iters,
            r.total_f_evals,
            r.status
        );
    }
    write_atomic(&root.join(SWEEP_FILE), &out)?;
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GoldsteinReport {
    pub estimate: f64,
    pub eps: f64,
    pub samples: usize,
    /// `ε_g + max{ε_ls^(1/3), ε_g}`, the order of the guaranteed bound.
    pub scale: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyReport {
    pub status: Status,
    pub iterations: usize,
    pub lipschitz: Option<f64>,
    pub lipschitz_source: &'static str,
    pub terminal_bound: Option<f64>,
    pub critical_radius: Option<f64>,
    pub witness_k: Option<usize>,
    pub goldstein: Option<GoldsteinReport>,
}

impl VerifyReport {
    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "status: {}  iterations: {}", self.status, self.iterations);
        match (self.lipschitz, self.terminal_bound) {
            (Some(l), Some(b)) => {
                let _ = writeln!(
                    s,
                    "lipschitz ({}): {}  terminal bound: {}",
                    self.lipschitz_source,
                    fmt_f64(l),
                    fmt_f64(b)
                );
            }
            _ => {
                let _ = writeln!(s, "lipschitz: unavailable (no qualifying steps)");
            }
        }
        match self.witness_k {
            Some(k) => {
                let _ = writeln!(s, "stationarity bound met at k={k}");
            }
            None => {
                let _ = writeln!(s, "stationarity bound not witnessed");
            }
        }
        if let Some(g) = &self.goldstein {
            let _ = writeln!(
                s,
                "goldstein estimate (eps={}, {} samples): {}  scale: {}",
                fmt_f64(g.eps),
                g.samples,
                fmt_f64(g.estimate),
                fmt_f64(g.scale)
            );
        }
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GoldsteinRequest {
    pub samples: usize,
    /// Ball radius; `None` uses the run's final sampling radius.
    pub eps: Option<f64>,
    pub seed: u64,
}

/// Re-reads a run directory and checks the terminal stationarity bound
/// `‖g̃ₖ‖ ≤ θ⁻¹νεₖ` with `εₖ` below the critical radius.
pub fn cmd_verify(dir: &Path, goldstein: Option<GoldsteinRequest>) -> Result<VerifyReport, CliError> {
    let meta = read_meta(dir)?;
    let status = meta.status()?;
    let hist_path = dir.join(HISTORY_FILE);
    let text = fs::read_to_string(&hist_path).map_err(|e| CliError::Data(format!("{}: {e}", hist_path.display())))?;
    let rows = parse_history(&text)?;
    if rows.len() != meta.iterations {
        return Err(CliError::Data(format!(
            "history has {} rows but run metadata records {} iterations",
            rows.len(),
            meta.iterations
        )));
    }
    let params = &meta.params;

    // Rebuild the records; the radius test is recomputed exactly as the
    // solver evaluated it.
    let records: Vec<IterateRecord> = rows
        .iter()
        .map(|r| IterateRecord {
            k: r.k,
            eps_k: r.eps_k,
            norm_g_tilde: r.norm_g_tilde,
            alpha: r.alpha,
            backtracks: r.backtracks,
            f_tilde: r.f_tilde,
            f_true: r.f_true,
            radius_reduced: r.norm_g_tilde <= (params.nu * r.eps_k).max(5.0 * params.bounds.eps_g),
            x: None,
        })
        .collect();

    let traj_path = dir.join(TRAJECTORY_FILE);
    let (lipschitz, source) = if let Some(l) = params.lipschitz {
        (Some(l), "configured")
    } else if traj_path.exists() {
        let traj = parse_trajectory(&fs::read_to_string(&traj_path)?)?;
        if traj.len() != rows.len() {
            return Err(CliError::Data("trajectory and history lengths differ".into()));
        }
        let trail = traj.iter().zip(&rows).map(|((_, x), r)| (x.as_slice(), r.f_tilde));
        (estimate_lipschitz(trail, params.lipschitz_min_step()).ok(), "estimated from trajectory")
    } else {
        (meta.lipschitz_estimate, "recorded estimate")
    };

    let witness_k = lipschitz.and_then(|l| terminal_bound_witness(&records, params, l));
    let goldstein = match goldstein {
        Some(req) => Some(goldstein_at(&meta, params, req)?),
        None => None,
    };
    Ok(VerifyReport {
        status,
        iterations: rows.len(),
        lipschitz,
        lipschitz_source: source,
        terminal_bound: lipschitz.map(|l| params.terminal_bound(l)),
        critical_radius: lipschitz.map(|l| params.critical_radius(l)),
        witness_k,
        goldstein,
    })
}

fn goldstein_at(meta: &RunMeta, params: &SolverParams, req: GoldsteinRequest) -> Result<GoldsteinReport, CliError> {
    let problem = build(&meta.problem, params.bounds, meta.noise_seed)?;
    let eps = req.eps.unwrap_or(meta.final_eps);
    let est = estimate_goldstein(
        problem.oracle.as_ref(),
        &meta.final_x,
        eps,
        req.samples,
        &mut SampleStream::new(req.seed, 0),
    )?;
    let eg = params.bounds.eps_g;
    Ok(GoldsteinReport {
        estimate: est.value,
        eps,
        samples: est.sample_count,
        scale: eg + params.eps_ls.cbrt().max(eg),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrainMode {
    Full,
    Fixed,
    Adaptive,
}

impl std::str::FromStr for TrainMode {
    type Err = CliError;
    fn from_str(s: &str) -> Result<Self, CliError> {
        match s {
            "full" => Ok(TrainMode::Full),
            "fixed" => Ok(TrainMode::Fixed),
            "adaptive" => Ok(TrainMode::Adaptive),
            other => Err(CliError::Usage(format!("unknown mode '{other}' (full, fixed, adaptive)"))),
        }
    }
}

/// Per-iteration training metrics.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainRow {
    pub k: usize,
    pub f_true: f64,
    pub norm_g_tilde: f64,
    pub eps_f_k: f64,
    pub eps_g_k: f64,
    pub batch: usize,
    pub samples_used: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub eps_ls: f64,
    pub seed: u64,
    pub accuracy: f64,
    pub final_f_true: f64,
    pub status: Status,
    pub total_samples: u64,
    pub rows: Vec<TrainRow>,
}

pub fn train_dataset(cfg: &ExperimentConfig) -> Result<Dataset, CliError> {
    let t = &cfg.train;
    if let Some(path) = &t.data {
        let mut d = Dataset::read_csv(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        if !d.is_standardized() {
            d.standardize();
        }
        return Ok(d);
    }
    Ok(synth_dataset(
        t.n_samples.unwrap_or(1024),
        t.features.unwrap_or(13),
        t.separation.unwrap_or(4.0),
        t.data_seed.unwrap_or(0),
    )?)
}

/// Trains the classifier once with the given line-search slack and seed.
pub fn train_once(cfg: &ExperimentConfig, data: &Arc<Dataset>, eps_ls: f64, seed: u64) -> Result<TrainOutcome, CliError> {
    let mode: TrainMode = cfg.train.mode.as_deref().unwrap_or("fixed").parse()?;
    let eps_f = cfg.eps_f();
    let batch_mode = match mode {
        TrainMode::Full => BatchMode::Full,
        TrainMode::Fixed => BatchMode::Fixed {
            batch_size: cfg.train.batch.unwrap_or(128),
        },
        TrainMode::Adaptive => BatchMode::Adaptive { eps_f },
    };
    let shape = MlpShape::new(data.features_dim());
    let oracle = BceOracle::new(data.clone(), shape, batch_mode, seed)?;
    let mut params = cfg.params_for(eps_f, seed)?;
    params.eps_ls = eps_ls;
    params.m = Some(cfg.solver.m.unwrap_or(TRAIN_DEFAULT_M));
    let truth = oracle.truth().expect("network oracles expose the full-batch loss");
    let w0 = shape.init_weights(seed);
    let mut rows = Vec::new();
    let result = run_observed(&oracle, &w0, &params, |rec, view| {
        let f_true = rec.f_true.unwrap_or(f64::NAN);
        let g_true = truth.subgradient(view.x);
        let eps_g_k = g_true
            .iter()
            .zip(view.g_tilde)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        rows.push(TrainRow {
            k: rec.k,
            f_true,
            norm_g_tilde: rec.norm_g_tilde,
            eps_f_k: (rec.f_tilde - f_true).abs(),
            eps_g_k,
            batch: oracle.last_batch_size(),
            samples_used: oracle.total_samples(),
        });
    })?;
    Ok(TrainOutcome {
        eps_ls,
        seed,
        accuracy: accuracy(&shape, data, &result.final_x),
        final_f_true: truth.value(&result.final_x),
        status: result.status,
        total_samples: oracle.total_samples(),
        rows,
    })
}

pub fn train_csv(rows: &[TrainRow]) -> String {
    let col = |f: fn(&TrainRow) -> f64| moving_average(&rows.iter().map(f).collect::<Vec<_>>(), MOVING_AVERAGE_WINDOW);
    let ma_f = col(|r| r.f_true);
    let ma_g = col(|r| r.norm_g_tilde);
    let ma_ef = col(|r| r.eps_f_k);
    let ma_eg = col(|r| r.eps_g_k);
    let mut out = String::from(TRAIN_HEADER);
    out.push('\n');
    for (i, r) in rows.iter().enumerate() {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{}",
            r.k,
            fmt_f64(r.f_true),
            fmt_f64(r.norm_g_tilde),
            fmt_f64(r.eps_f_k),
            fmt_f64(r.eps_g_k),
            fmt_f64(ma_f[i]),
            fmt_f64(ma_g[i]),
            fmt_f64(ma_ef[i]),
            fmt_f64(ma_eg[i]),
            r.batch,
            r.samples_used
        );
    }
    out
}

pub fn train_file_name(eps_ls: f64, seed: u64) -> String {
    format!("train_epsls{}_s{seed}.csv", fmt_f64(eps_ls))
}

/// Trains once per `(eps_ls, seed)` and writes one metrics CSV each plus a
/// summary.
pub fn cmd_train(cfg: &ExperimentConfig) -> Result<Vec<TrainOutcome>, CliError> {
    let grid = match (&cfg.train.eps_ls_grid, cfg.solver.eps_ls) {
        (Some(g), _) => g.clone(),
        (None, Some(crate::config::AutoValue::Value(v))) => vec![v],
        (None, Some(crate::config::AutoValue::Auto)) => vec![crate::config::AUTO_EPS_LS_FACTOR * cfg.eps_f()],
        (None, None) => DEFAULT_EPS_LS_GRID.to_vec(),
    };
    if grid.is_empty() {
        return Err(CliError::Usage("eps_ls grid is empty".into()));
    }
    let repeats = cfg.repeats()? as u64;
    let base = cfg.seed();
    let data = Arc::new(train_dataset(cfg)?);
    let root = cfg.output_dir();
    fs::create_dir_all(&root)?;
    let jobs: Vec<(f64, u64)> = grid
        .iter()
        .flat_map(|&e| (0..repeats).map(move |r| (e, base + r)))
        .collect();
    let outcomes = jobs
        .par_iter()
        .map(|&(eps_ls, seed)| {
            let out = train_once(cfg, &data, eps_ls, seed)?;
            write_atomic(&root.join(train_file_name(eps_ls, seed)), &train_csv(&out.rows))?;
            Ok(out)
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let mut summary = String::from(TRAIN_SUMMARY_HEADER);
    summary.push('\n');
    for o in &outcomes {
        let _ = writeln!(
            summary,
            "{},{},{},{},{},{},{}",
            fmt_f64(o.eps_ls),
            o.seed,
            fmt_f64(o.accuracy),
            fmt_f64(o.final_f_true),
            o.rows.len(),
            o.total_samples,
            o.status
        );
    }
    write_atomic(&root.join(TRAIN_SUMMARY_FILE), &summary)?;
    Ok(outcomes)
}
