//! Independent oracles used by the workspace's property and acceptance tests.
//!
//! Nothing here depends on `noisy-gs`; every helper recomputes its answer by
//! brute force so it can be used to check the solver's components.

use std::fs;
use std::io;
use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum TestkitError {
    #[error("grid search supports 2 or 3 columns, got {0}")]
    TooManyColumns(usize),
    #[error("resolution must lie in (0, 1], got {0}")]
    BadResolution(f64),
    #[error("columns have inconsistent lengths")]
    RaggedColumns,
    #[error("finite-difference step must be positive, got {0}")]
    BadStep(f64),
}

/// Best simplex combination found by [`simplex_grid_min_norm`].
#[derive(Debug, Clone, PartialEq)]
pub struct GridOracleResult {
    pub best_weights: Vec<f64>,
    pub best_norm: f64,
    pub resolution: f64,
}

fn combo_norm(columns: &[Vec<f64>], weights: &[f64]) -> f64 {
    let n = columns[0].len();
    let mut acc = 0.0;
    for r in 0..n {
        let v: f64 = columns.iter().zip(weights).map(|(c, w)| c[r] * w).sum();
        acc += v * v;
    }
    acc.sqrt()
}

/// Exhaustive search over simplex weights on a grid of spacing `resolution`.
///
/// Limited to two or three columns; the grid has `O(resolution^(1-c))` points.
pub fn simplex_grid_min_norm(
    columns: &[Vec<f64>],
    resolution: f64,
) -> Result<GridOracleResult, TestkitError> {
    let c = columns.len();
    if !(2..=3).contains(&c) {
        return Err(TestkitError::TooManyColumns(c));
    }
    if !(resolution > 0.0 && resolution <= 1.0) {
        return Err(TestkitError::BadResolution(resolution));
    }
    let n = columns[0].len();
    if columns.iter().any(|col| col.len() != n) {
        return Err(TestkitError::RaggedColumns);
    }
    let steps = (1.0 / resolution).round() as usize;
    let h = 1.0 / steps as f64;
    let mut best = GridOracleResult {
        best_weights: vec![0.0; c],
        best_norm: f64::INFINITY,
        resolution,
    };
    let mut consider = |w: Vec<f64>| {
        let norm = combo_norm(columns, &w);
        if norm < best.best_norm {
            best.best_norm = norm;
            best.best_weights = w;
        }
    };
    if c == 2 {
        for i in 0..=steps {
            let t = i as f64 * h;
            consider(vec![t, 1.0 - t]);
        }
    } else {
        for i in 0..=steps {
            for j in 0..=(steps - i) {
                let a = i as f64 * h;
                let b = j as f64 * h;
                consider(vec![a, b, (1.0 - a - b).max(0.0)]);
            }
        }
    }
    Ok(best)
}

/// Central finite-difference gradient of `f` at `x`.
pub fn finite_diff_grad<F>(f: F, x: &[f64], step: f64) -> Result<Vec<f64>, TestkitError>
where
    F: Fn(&[f64]) -> f64,
{
    if !(step > 0.0) {
        return Err(TestkitError::BadStep(step));
    }
    let mut probe = x.to_vec();
    let mut grad = Vec::with_capacity(x.len());
    for i in 0..x.len() {
        probe[i] = x[i] + step;
        let fp = f(&probe);
        probe[i] = x[i] - step;
        let fm = f(&probe);
        probe[i] = x[i];
        grad.push((fp - fm) / (2.0 * step));
    }
    Ok(grad)
}

/// One-sample Kolmogorov-Smirnov statistic of `samples` against `cdf`.
pub fn ks_statistic<F>(samples: &[f64], cdf: F) -> f64
where
    F: Fn(f64) -> f64,
{
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("NaN sample"));
    let n = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &s)| {
            let c = cdf(s);
            let lo = c - i as f64 / n;
            let hi = (i + 1) as f64 / n - c;
            lo.max(hi)
        })
        .fold(0.0, f64::max)
}

/// Asymptotic KS critical value at the 1% level, `1.6276 / sqrt(n)`.
pub fn ks_critical_1pct(n: usize) -> f64 {
    1.6276 / (n as f64).sqrt()
}

/// Standard deviation of a binomial proportion estimate.
pub fn binomial_sigma(p: f64, trials: usize) -> f64 {
    (p * (1.0 - p) / trials as f64).sqrt()
}

pub fn median(values: &[f64]) -> f64 {
    assert!(!values.is_empty(), "median of empty slice");
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let mid = v.len() / 2;
    if v.len() % 2 == 1 {
        v[mid]
    } else {
        0.5 * (v[mid - 1] + v[mid])
    }
}

/// First point where two golden files diverge.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GoldenMismatch {
    pub line: usize,
    pub left: String,
    pub right: String,
}

/// Compares two files byte-for-byte, reporting the first differing line.
pub fn compare_golden(left: &Path, right: &Path) -> io::Result<Option<GoldenMismatch>> {
    let a = fs::read(left)?;
    let b = fs::read(right)?;
    if a == b {
        return Ok(None);
    }
    let a = String::from_utf8_lossy(&a);
    let b = String::from_utf8_lossy(&b);
    let mut la = a.split('\n');
    let mut lb = b.split('\n');
    let mut line = 1;
    loop {
        match (la.next(), lb.next()) {
            (Some(x), Some(y)) if x == y => line += 1,
            (x, y) => {
                return Ok(Some(GoldenMismatch {
                    line,
                    left: x.unwrap_or("<eof>").to_string(),
                    right: y.unwrap_or("<eof>").to_string(),
                }))
            }
        }
    }
}
