//! Minimum-norm point of the convex hull of a finite point set.
//!
//! Solving `min ‖G y‖ s.t. 1ᵀy = 1, y ≥ 0` is the dual of the direction QP
//! `min z + ½‖d‖² s.t. Gᵀd ≤ z·1`; the primal solution is `d = −G y`,
//! `z = maxᵢ cᵢᵀd`. We use Wolfe's method: a major cycle adds the column most
//! violating the optimality condition `gᵀcᵢ ≥ ‖g‖²`, minor cycles project onto
//! the affine hull of the current corral and drop vertices whose weight goes
//! to zero.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{all_finite, dot, norm2_sq};

/// Default certificate tolerance for [`solve_min_norm`].
pub const DEFAULT_TOL: f64 = 1e-10;

/// Sampled generalized-gradient approximations around `center`.
///
/// Column 0 is the gradient at the center, the rest are at the sample points.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientBundle {
    pub columns: Vec<Vec<f64>>,
    pub center: Vec<f64>,
    pub radius: f64,
}

impl GradientBundle {
    pub fn new(columns: Vec<Vec<f64>>, center: Vec<f64>, radius: f64) -> Result<Self> {
        if columns.len() < 2 {
            return Err(Error::InvalidArgument(format!(
                "a gradient bundle needs at least 2 columns, got {}",
                columns.len()
            )));
        }
        check_columns(&columns)?;
        if columns[0].len() != center.len() {
            return Err(Error::DimensionMismatch {
                expected: center.len(),
                got: columns[0].len(),
            });
        }
        Ok(Self {
            columns,
            center,
            radius,
        })
    }
}

/// Primal-dual solution of the direction QP.
#[derive(Debug, Clone, PartialEq)]
pub struct QpSolution {
    /// Simplex weights `y`, one per column.
    pub weights: Vec<f64>,
    /// `g = G y`.
    pub aggregate: Vec<f64>,
    /// `d = −g`.
    pub direction: Vec<f64>,
    /// `z = maxᵢ cᵢᵀd ≈ −‖g‖²`.
    pub primal_value: f64,
    pub iterations: usize,
}

impl QpSolution {
    pub fn norm(&self) -> f64 {
        norm2_sq(&self.aggregate).sqrt()
    }
}

fn check_columns(columns: &[Vec<f64>]) -> Result<()> {
    let Some(first) = columns.first() else {
        return Err(Error::InvalidArgument("no columns".into()));
    };
    let n = first.len();
    for c in columns {
        if c.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: c.len() });
        }
        if !all_finite(c) {
            return Err(Error::NonFinite);
        }
    }
    Ok(())
}

/// Solves the direction QP for a gradient bundle.
pub fn solve_min_norm(bundle: &GradientBundle, tol: f64) -> Result<QpSolution> {
    min_norm_point(&bundle.columns, tol)
}

/// Minimum-norm element of `conv(columns)`, certified by
/// `gᵀcᵢ ≥ ‖g‖² − tol·(1 + ‖g‖²) − 64·ε_mach·max‖cᵢ‖²` for every column.
pub fn min_norm_point(columns: &[Vec<f64>], tol: f64) -> Result<QpSolution> {
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance must be positive, got {tol}")));
    }
    check_columns(columns)?;
    let k = columns.len();
    let cap = 50 * k;

    let start = (0..k)
        .min_by(|&a, &b| norm2_sq(&columns[a]).total_cmp(&norm2_sq(&columns[b])))
        .expect("nonempty");
    let mut corral = vec![start];
    let mut lam = vec![1.0];
    let mut x = columns[start].clone();

    // The computed combination is only accurate to about ε·max‖cᵢ‖, so its
    // dot products with the columns carry error of order ε·max‖cᵢ‖². A
    // certificate tighter than that cannot be checked in floating point.
    let floor = 64.0 * f64::EPSILON * columns.iter().map(|c| norm2_sq(c)).fold(0.0, f64::max);
    let slack = |x: &[f64]| tol * (1.0 + norm2_sq(x)) + floor;

    for iter in 0..cap {
        let xx = norm2_sq(&x);
        let (j, min_dot) = most_violating(columns, &x);
        let gap = xx - slack(&x) - min_dot;
        if gap <= 0.0 {
            return Ok(finish(columns, &corral, &lam, iter));
        }
        if corral.contains(&j) {
            return Err(Error::QpNonConvergence { iterations: iter, gap });
        }
        corral.push(j);
        lam.push(0.0);

        loop {
            let alpha = affine_min_weights(columns, &corral);
            if alpha.iter().all(|&a| a > 0.0) {
                lam = alpha;
                break;
            }
            // Walk from lam toward alpha until the first weight hits zero.
            let ratios: Vec<Option<f64>> = lam
                .iter()
                .zip(&alpha)
                .map(|(l, a)| {
                    (*a <= 0.0).then(|| if l - a > 0.0 { l / (l - a) } else { 0.0 })
                })
                .collect();
            let theta = ratios.iter().flatten().copied().fold(1.0f64, f64::min).clamp(0.0, 1.0);
            for (l, a) in lam.iter_mut().zip(&alpha) {
                *l = (1.0 - theta) * *l + theta * a;
            }
            // Among the blocking vertices, drop the one with the smallest column index.
            let drop = (0..corral.len())
                .filter(|&i| matches!(ratios[i], Some(t) if t <= theta))
                .min_by_key(|&i| corral[i])
                .expect("some weight is nonpositive");
            corral.remove(drop);
            lam.remove(drop);
            for l in lam.iter_mut() {
                *l = l.max(0.0);
            }
            let s: f64 = lam.iter().sum();
            if s > 0.0 {
                lam.iter_mut().for_each(|l| *l /= s);
            } else {
                lam.iter_mut().for_each(|l| *l = 1.0 / corral.len() as f64);
            }
        }
        x = combine(columns, &corral, &lam);
    }

    let (_, min_dot) = most_violating(columns, &x);
    Err(Error::QpNonConvergence {
        iterations: cap,
        gap: norm2_sq(&x) - slack(&x) - min_dot,
    })
}

fn most_violating(columns: &[Vec<f64>], x: &[f64]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (i, c) in columns.iter().enumerate() {
        let v = dot(x, c);
        if v < best.1 {
            best = (i, v);
        }
    }
    best
}

fn combine(columns: &[Vec<f64>], corral: &[usize], lam: &[f64]) -> Vec<f64> {
    let n = columns[0].len();
    let mut x = vec![0.0; n];
    for (&i, &l) in corral.iter().zip(lam) {
        for (xr, cr) in x.iter_mut().zip(&columns[i]) {
            *xr += l * cr;
        }
    }
    x
}

/// Weights (summing to one) of the minimum-norm point of the affine hull of
/// the corral, via least squares on the differences `cᵢ − c₀`.
fn affine_min_weights(columns: &[Vec<f64>], corral: &[usize]) -> Vec<f64> {
    let s = corral.len();
    if s == 1 {
        return vec![1.0];
    }
    let n = columns[0].len();
    let p0 = &columns[corral[0]];
    let d = DMatrix::from_fn(n, s - 1, |r, c| columns[corral[c + 1]][r] - p0[r]);
    let rhs = DVector::from_iterator(n, p0.iter().map(|v| -v));
    let svd = d.svd(true, true);
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let mu = svd
        .solve(&rhs, 1e-13 * smax.max(f64::MIN_POSITIVE))
        .unwrap_or_else(|_| DVector::zeros(s - 1));
    let mut w = Vec::with_capacity(s);
    w.push(1.0 - mu.iter().sum::<f64>());
    w.extend(mu.iter().copied());
    w
}

fn finish(columns: &[Vec<f64>], corral: &[usize], lam: &[f64], iterations: usize) -> QpSolution {
    let k = columns.len();
    let mut weights = vec![0.0; k];
    for (&i, &l) in corral.iter().zip(lam) {
        weights[i] += l;
    }
    let aggregate = combine(columns, corral, lam);
    let direction: Vec<f64> = aggregate.iter().map(|v| -v).collect();
    let primal_value = columns
        .iter()
        .map(|c| dot(c, &direction))
        .fold(f64::NEG_INFINITY, f64::max);
    QpSolution {
        weights,
        aggregate,
        direction,
        primal_value,
        iterations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use noisy_gs_testkit::simplex_grid_min_norm;
    use proptest::prelude::*;

    fn certificate_slack(cols: &[Vec<f64>], sol: &QpSolution, tol: f64) -> f64 {
        let g = &sol.aggregate;
        let gg = norm2_sq(g);
        let min_dot = cols.iter().map(|c| dot(g, c)).fold(f64::INFINITY, f64::min);
        let floor = 64.0 * f64::EPSILON * cols.iter().map(|c| norm2_sq(c)).fold(0.0, f64::max);
        min_dot - (gg - tol * (1.0 + gg) - floor)
    }

    #[test]
    fn symmetric_pair_gives_origin() {
        let s = min_norm_point(&[vec![1.0], vec![-1.0]], DEFAULT_TOL).unwrap();
        assert!(s.aggregate[0].abs() < 1e-15);
        assert!((s.weights[0] - 0.5).abs() < 1e-12 && (s.weights[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn duplicated_column() {
        let v = vec![2.0, -1.0, 0.5];
        let s = min_norm_point(&[v.clone(), v.clone()], DEFAULT_TOL).unwrap();
        assert_eq!(s.aggregate, v);
        assert!((s.weights.iter().sum::<f64>() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn segment_endpoint() {
        let s = min_norm_point(&[vec![3.0, 4.0], vec![0.0, 4.0]], DEFAULT_TOL).unwrap();
        assert_eq!(s.aggregate, vec![0.0, 4.0]);
        assert_eq!(s.weights, vec![0.0, 1.0]);
    }

    #[test]
    fn origin_inside_triangle() {
        let cols = vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![-1.0, -1.0]];
        let s = min_norm_point(&cols, DEFAULT_TOL).unwrap();
        assert!(norm2_sq(&s.aggregate).sqrt() < 1e-12);
        for w in &s.weights {
            assert!((w - 1.0 / 3.0).abs() < 1e-9);
        }
    }

    #[test]
    fn bundle_validation() {
        assert!(GradientBundle::new(vec![vec![1.0]], vec![0.0], 1.0).is_err());
        assert!(GradientBundle::new(vec![vec![1.0], vec![1.0, 2.0]], vec![0.0], 1.0).is_err());
        assert!(matches!(
            GradientBundle::new(vec![vec![1.0], vec![f64::NAN]], vec![0.0], 1.0),
            Err(Error::NonFinite)
        ));
        let b = GradientBundle::new(vec![vec![1.0], vec![-3.0]], vec![0.0], 1.0).unwrap();
        assert!(solve_min_norm(&b, DEFAULT_TOL).unwrap().norm() < 1e-15);
    }

    #[test]
    fn solution_invariants_on_large_scale_columns() {
        // Gradients of the nonsmooth Rosenbrock function straddling its kink.
        let cols = vec![
            vec![-484.4, -100.0],
            vec![475.6, 100.0],
            vec![-480.0, -100.0],
            vec![470.1, 100.0],
            vec![-2.0, 100.0],
        ];
        let s = min_norm_point(&cols, DEFAULT_TOL).unwrap();
        assert!(certificate_slack(&cols, &s, DEFAULT_TOL) >= 0.0);
        let gg = norm2_sq(&s.aggregate);
        assert!((s.primal_value + gg).abs() <= 1e-8 * (1.0 + gg));
        assert!(s.direction.iter().zip(&s.aggregate).all(|(d, g)| *d == -*g));
    }

    fn bundle_strategy(max_n: usize, max_c: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
        (1..=max_n, 2..=max_c).prop_flat_map(|(n, c)| {
            prop::collection::vec(prop::collection::vec(-10.0f64..10.0, n), c)
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(300))]

        #[test]
        fn weights_form_a_simplex(cols in bundle_strategy(5, 8)) {
            let s = min_norm_point(&cols, DEFAULT_TOL).unwrap();
            prop_assert!(s.weights.iter().all(|&w| w >= 0.0));
            prop_assert!((s.weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            prop_assert!(certificate_slack(&cols, &s, DEFAULT_TOL) >= 0.0);
        }

        #[test]
        fn matches_grid_search(cols in bundle_strategy(3, 3)) {
            let s = min_norm_point(&cols, DEFAULT_TOL).unwrap();
            let grid = simplex_grid_min_norm(&cols, 1e-3).unwrap();
            let norm = s.norm();
            prop_assert!(norm <= grid.best_norm + 1e-12);
            // Rounding optimal weights to the grid moves the combination by at
            // most resolution times the column spread.
            let spread = cols
                .iter()
                .flat_map(|a| cols.iter().map(move |b| crate::linalg::dist(a, b)))
                .fold(0.0, f64::max);
            prop_assert!(grid.best_norm - norm <= 1e-3 * spread + 1e-12);
        }

        #[test]
        fn permutation_and_duplicates(cols in bundle_strategy(4, 6), rot in 0usize..6, dup in 0usize..6) {
            let base = min_norm_point(&cols, DEFAULT_TOL).unwrap();
            let mut rotated = cols.clone();
            rotated.rotate_left(rot % cols.len());
            let r = min_norm_point(&rotated, DEFAULT_TOL).unwrap();
            prop_assert!((r.norm() - base.norm()).abs() <= 1e-12 * (1.0 + base.norm()).max(1.0) * 10.0);
            let mut with_dup = cols.clone();
            with_dup.push(cols[dup % cols.len()].clone());
            let d = min_norm_point(&with_dup, DEFAULT_TOL).unwrap();
            for (a, b) in d.aggregate.iter().zip(&base.aggregate) {
                prop_assert!((a - b).abs() <= 1e-10);
            }
        }

        #[test]
        fn origin_in_hull_gives_small_norm(cols in bundle_strategy(3, 5)) {
            // Append the negated centroid so that 0 lies in the hull.
            let n = cols[0].len();
            let mut closed = cols.clone();
            let centroid: Vec<f64> = (0..n).map(|r| cols.iter().map(|c| c[r]).sum::<f64>() / cols.len() as f64).collect();
            closed.push(centroid.iter().map(|v| -v).collect());
            let s = min_norm_point(&closed, DEFAULT_TOL).unwrap();
            let max_norm = closed.iter().map(|c| norm2_sq(c).sqrt()).fold(0.0, f64::max);
            prop_assert!(s.norm() <= DEFAULT_TOL.sqrt() * (1.0 + max_norm));
        }
    }
}
