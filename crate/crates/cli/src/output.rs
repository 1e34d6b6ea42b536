//! CSV and run-metadata files. Floats use Rust's shortest round-trip format so
//! files are byte-stable and parse back to the same bits.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use noisy_gs::solver::{IterateRecord, RunResult};
use noisy_gs::{SolverParams, Status};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const HISTORY_FILE: &str = "history.csv";
pub const TRAJECTORY_FILE: &str = "trajectory.csv";
pub const META_FILE: &str = "run.toml";
pub const HISTORY_HEADER: &str = "k,eps_k,norm_g_tilde,alpha,backtracks,f_tilde,f_true";

pub fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

/// Writes through a temporary sibling and renames, so readers never see a
/// partially written file.
pub fn write_atomic(path: &Path, contents: &str) -> Result<(), CliError> {
    let tmp = path.with_extension(format!(
        "{}.tmp",
        path.extension().and_then(|e| e.to_str()).unwrap_or("")
    ));
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn history_csv(history: &[IterateRecord]) -> String {
    let mut out = String::from(HISTORY_HEADER);
    out.push('\n');
    for r in history {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.k,
            fmt_f64(r.eps_k),
            fmt_f64(r.norm_g_tilde),
            fmt_f64(r.alpha),
            r.backtracks,
            fmt_f64(r.f_tilde),
            fmt_opt(r.f_true)
        );
    }
    out
}

/// `k,x1..xn`; `None` when the history does not store iterates.
pub fn trajectory_csv(history: &[IterateRecord], n: usize) -> Option<String> {
    if history.iter().any(|r| r.x.is_none()) {
        return None;
    }
    let mut out = String::from("k");
    for i in 1..=n {
        let _ = write!(out, ",x{i}");
    }
    out.push('\n');
    for r in history {
        let _ = write!(out, "{}", r.k);
        for v in r.x.as_deref().expect("checked") {
            let _ = write!(out, ",{}", fmt_f64(*v));
        }
        out.push('\n');
    }
    Some(out)
}

/// One parsed row of `history.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct HistoryRow {
    pub k: usize,
    pub eps_k: f64,
    pub norm_g_tilde: f64,
    pub alpha: f64,
    pub backtracks: usize,
    pub f_tilde: f64,
    pub f_true: Option<f64>,
}

fn field<T: std::str::FromStr>(raw: &str, name: &str, line: usize) -> Result<T, CliError> {
    raw.parse()
        .map_err(|_| CliError::Data(format!("line {line}: bad {name} '{raw}'")))
}

pub fn parse_history(text: &str) -> Result<Vec<HistoryRow>, CliError> {
    let mut lines = text.split('\n');
    match lines.next() {
        Some(h) if h == HISTORY_HEADER => {}
        Some(h) => return Err(CliError::Data(format!("unexpected history header '{h}'"))),
        None => return Err(CliError::Data("empty history file".into())),
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let lineno = i + 2;
        if line.is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 7 {
            return Err(CliError::Data(format!("line {lineno}: expected 7 fields, found {}", f.len())));
        }
        rows.push(HistoryRow {
            k: field(f[0], "k", lineno)?,
            eps_k: field(f[1], "eps_k", lineno)?,
            norm_g_tilde: field(f[2], "norm_g_tilde", lineno)?,
            alpha: field(f[3], "alpha", lineno)?,
            backtracks: field(f[4], "backtracks", lineno)?,
            f_tilde: field(f[5], "f_tilde", lineno)?,
            f_true: if f[6].is_empty() { None } else { Some(field(f[6], "f_true", lineno)?) },
        });
    }
    for (i, r) in rows.iter().enumerate() {
        if r.k != i + 1 {
            return Err(CliError::Data(format!("iteration numbers not consecutive at k={}", r.k)));
        }
    }
    Ok(rows)
}

/// Parses `trajectory.csv` into `(k, x_k)` rows.
pub fn parse_trajectory(text: &str) -> Result<Vec<(usize, Vec<f64>)>, CliError> {
    let mut lines = text.split('\n');
    let header = lines.next().ok_or_else(|| CliError::Data("empty trajectory file".into()))?;
    let cols: Vec<&str> = header.split(',').collect();
    if cols.first() != Some(&"k") || cols.len() < 2 {
        return Err(CliError::Data(format!("unexpected trajectory header '{header}'")));
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != cols.len() {
            return Err(CliError::Data(format!("trajectory line {}: wrong field count", i + 2)));
        }
        let k = field(f[0], "k", i + 2)?;
        let x = f[1..].iter().map(|v| field(v, "x", i + 2)).collect::<Result<_, _>>()?;
        rows.push((k, x));
    }
    Ok(rows)
}

/// Everything needed to reproduce and audit one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMeta {
    pub problem: String,
    pub noise_seed: u64,
    pub start: Vec<f64>,
    pub status: String,
    pub iterations: usize,
    pub final_x: Vec<f64>,
    pub final_f_tilde: f64,
    pub final_f_true: Option<f64>,
    pub final_eps: f64,
    pub terminal_bound: Option<f64>,
    pub witness_k: Option<usize>,
    pub lipschitz_estimate: Option<f64>,
    pub f_evals: usize,
    pub g_evals: usize,
    pub warnings: Vec<String>,
    pub params: SolverParams,
}

impl RunMeta {
    pub fn status(&self) -> Result<Status, CliError> {
        self.status
            .parse()
            .map_err(|_| CliError::Data(format!("unknown status '{}'", self.status)))
    }
}

pub fn write_run(
    dir: &Path,
    problem: &str,
    noise_seed: u64,
    start: &[f64],
    result: &RunResult,
    final_f_true: Option<f64>,
    params: &SolverParams,
) -> Result<RunMeta, CliError> {
    fs::create_dir_all(dir)?;
    write_atomic(&dir.join(HISTORY_FILE), &history_csv(&result.history))?;
    let traj = dir.join(TRAJECTORY_FILE);
    match trajectory_csv(&result.history, start.len()) {
        Some(t) if start.len() <= 3 => write_atomic(&traj, &t)?,
        _ => {
            if traj.exists() {
                fs::remove_file(&traj)?;
            }
        }
    }
    let meta = RunMeta {
        problem: problem.to_string(),
        noise_seed,
        start: start.to_vec(),
        status: result.status.to_string(),
        iterations: result.history.len(),
        final_x: result.final_x.clone(),
        final_f_tilde: result.final_f_tilde,
        final_f_true,
        final_eps: result.final_eps,
        terminal_bound: result.terminal_bound,
        witness_k: result.witness_k,
        lipschitz_estimate: result.lipschitz_estimate,
        f_evals: result.f_evals,
        g_evals: result.g_evals,
        warnings: result.warnings.iter().map(|w| w.to_string()).collect(),
        params: params.clone(),
    };
    let text = toml::to_string(&meta).map_err(|e| CliError::Data(format!("cannot encode run metadata: {e}")))?;
    write_atomic(&dir.join(META_FILE), &text)?;
    Ok(meta)
}

pub fn read_meta(dir: &Path) -> Result<RunMeta, CliError> {
    let path = dir.join(META_FILE);
    let text = fs::read_to_string(&path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

/// Trailing mean over the last `window` entries (fewer at the start).
pub fn moving_average(values: &[f64], window: usize) -> Vec<f64> {
    (0..values.len())
        .map(|i| {
            let lo = (i + 1).saturating_sub(window);
            values[lo..=i].iter().sum::<f64>() / (i + 1 - lo) as f64
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(k: usize, f_true: Option<f64>) -> IterateRecord {
        IterateRecord {
            k,
            eps_k: 0.1,
            norm_g_tilde: 1e-7,
            alpha: 0.5,
            backtracks: 2,
            f_tilde: -3.25,
            f_true,
            radius_reduced: false,
            x: Some(vec![1.0, -0.0]),
        }
    }

    #[test]
    fn history_round_trips() {
        let h = vec![rec(1, Some(0.1 + 0.2)), rec(2, None)];
        let text = history_csv(&h);
        assert!(text.starts_with("k,eps_k,norm_g_tilde,alpha,backtracks,f_tilde,f_true\n"));
        assert!(text.contains("1e-7"));
        let rows = parse_history(&text).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].f_true, Some(0.1 + 0.2));
        assert_eq!(rows[1].f_true, None);
        assert_eq!(rows[0].norm_g_tilde, 1e-7);
    }

    #[test]
    fn malformed_history_is_rejected() {
        assert!(matches!(parse_history("k,eps\n"), Err(CliError::Data(_))));
        let bad = format!("{HISTORY_HEADER}\n1,0.1,x,0,0,1,1\n");
        assert!(matches!(parse_history(&bad), Err(CliError::Data(_))));
        let gap = format!("{HISTORY_HEADER}\n2,0.1,1,0,0,1,1\n");
        assert!(parse_history(&gap).is_err());
        assert_eq!(parse_history(&format!("{HISTORY_HEADER}\n")).unwrap(), vec![]);
    }

    #[test]
    fn trajectory_round_trips() {
        let h = vec![rec(1, None), rec(2, None)];
        let t = trajectory_csv(&h, 2).unwrap();
        assert!(t.starts_with("k,x1,x2\n1,1.0,-0.0\n"));
        let rows = parse_trajectory(&t).unwrap();
        assert_eq!(rows[1], (2, vec![1.0, -0.0]));
    }

    #[test]
    fn moving_average_window() {
        let v: Vec<f64> = (1..=10).map(|i| i as f64).collect();
        let ma = moving_average(&v, 8);
        assert_eq!(ma[0], 1.0);
        assert_eq!(ma[1], 1.5);
        assert_eq!(ma[7], 4.5);
        assert_eq!(ma[9], 6.5);
    }
}
