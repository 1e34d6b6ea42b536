//! Sampled estimate of the Goldstein ε-stationarity measure.
//!
//! The Goldstein ε-subdifferential at `x` is the closed convex hull of all
//! gradients within `B(x, ε)`. Sampling finitely many of those gradients and
//! taking the min-norm point of their hull gives an upper bound on
//! `dist(0, ∂_ε f(x))` that tightens as the sample grows.

use crate::error::{Error, Result};
use crate::minnorm::{min_norm_point, DEFAULT_TOL};
use crate::oracle::{Objective, Oracle};
use crate::sampler::{sample_ball, SampleStream};

#[derive(Debug, Clone, PartialEq)]
pub struct StationarityEstimate {
    /// Norm of `witness`; an upper bound on the true measure.
    pub value: f64,
    pub eps: f64,
    /// Number of subgradients in the hull, `x` itself included.
    pub sample_count: usize,
    /// The achieving convex combination.
    pub witness: Vec<f64>,
}

/// Estimates `dist(0, ∂_ε f(x))` from `num_samples` points drawn in `B(x, eps)`
/// plus `x` itself, using the oracle's exact subgradients.
pub fn estimate_goldstein(
    oracle: &dyn Oracle,
    x: &[f64],
    eps: f64,
    num_samples: usize,
    stream: &mut SampleStream,
) -> Result<StationarityEstimate> {
    let truth = oracle.truth().ok_or(Error::NoTruthAccess)?;
    let n = truth.dims();
    if x.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: x.len() });
    }
    if num_samples < n + 1 {
        return Err(Error::InvalidArgument(format!(
            "need at least n + 1 = {} samples, got {num_samples}",
            n + 1
        )));
    }
    if !(eps > 0.0) {
        return Err(Error::InvalidArgument(format!("eps must be positive, got {eps}")));
    }
    let set = sample_ball(x, eps, num_samples, stream)?;
    let mut points = Vec::with_capacity(num_samples + 1);
    points.push(x.to_vec());
    points.extend(set.points);
    estimate_from_points(truth, &points, eps)
}

/// Min-norm point of the hull of exact subgradients at the given points.
pub fn estimate_from_points(truth: &dyn Objective, points: &[Vec<f64>], eps: f64) -> Result<StationarityEstimate> {
    let grads: Vec<Vec<f64>> = points.iter().map(|p| truth.subgradient(p)).collect();
    estimate_from_gradients(grads, eps)
}

/// Min-norm point of the hull of the given subgradients.
pub fn estimate_from_gradients(mut grads: Vec<Vec<f64>>, eps: f64) -> Result<StationarityEstimate> {
    if grads.is_empty() {
        return Err(Error::InvalidArgument("no subgradients supplied".into()));
    }
    let sample_count = grads.len();
    if grads.len() == 1 {
        // The QP needs two columns; a duplicate leaves the hull unchanged.
        grads.push(grads[0].clone());
    }
    let qp = min_norm_point(&grads, DEFAULT_TOL)?;
    Ok(StationarityEstimate {
        value: qp.norm(),
        eps,
        sample_count,
        witness: qp.aggregate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::norm2;
    use crate::oracle::{Exact, FnObjective};
    use crate::problems::max_of_linear;
    use crate::sampler::ball_offset;

    #[test]
    fn abs_at_kink_is_stationary() {
        let (abs, _) = max_of_linear(vec![vec![1.0], vec![-1.0]], vec![0.0, 0.0]).unwrap();
        let o = Exact(abs);
        let est = estimate_goldstein(&o, &[0.0], 0.1, 1000, &mut SampleStream::new(1, 0)).unwrap();
        assert!(est.value <= 1e-6, "{}", est.value);
        assert_eq!(est.sample_count, 1001);
        assert!((norm2(&est.witness) - est.value).abs() < 1e-15);
    }

    #[test]
    fn constant_gradient_gives_its_norm() {
        let o = Exact(FnObjective::new(2, |x| 3.0 * x[0] + 4.0 * x[1], |_| vec![3.0, 4.0]));
        for eps in [1e-6, 0.1, 10.0] {
            let est = estimate_goldstein(&o, &[0.3, -0.2], eps, 20, &mut SampleStream::new(2, 0)).unwrap();
            assert!((est.value - 5.0).abs() < 1e-6);
        }
    }

    #[test]
    fn quadratic_with_gradient_three_four() {
        // f = ½‖x‖², gradient at (3,4) is (3,4).
        let o = Exact(FnObjective::new(2, |x| 0.5 * (x[0] * x[0] + x[1] * x[1]), |x| x.to_vec()));
        let est = estimate_goldstein(&o, &[3.0, 4.0], 1e-8, 50, &mut SampleStream::new(3, 0)).unwrap();
        assert!((est.value - 5.0).abs() < 1e-6, "{}", est.value);
    }

    #[test]
    fn polyhedral_kink_matches_closed_form() {
        let rows = vec![vec![1.0, 2.0], vec![-2.0, 1.0], vec![0.5, -3.0], vec![10.0, 10.0]];
        let offsets = vec![0.0, 0.0, 0.0, -100.0];
        let (f, _) = max_of_linear(rows, offsets).unwrap();
        let exact = min_norm_point(&f.clarke_generators(&[0.0, 0.0], 1e-12), DEFAULT_TOL).unwrap();
        let o = Exact(f);
        let est = estimate_goldstein(&o, &[0.0, 0.0], 1e-3, 2000, &mut SampleStream::new(4, 0)).unwrap();
        assert!((est.value - exact.norm()).abs() <= 1e-6, "{} vs {}", est.value, exact.norm());
    }

    #[test]
    fn more_samples_never_increase_estimate() {
        let (f, _) = max_of_linear(vec![vec![1.0, 0.0], vec![-1.0, 0.5], vec![0.2, -1.0]], vec![0.0, 0.1, 0.05]).unwrap();
        let x = [0.05, 0.02];
        let mut stream = SampleStream::new(5, 0);
        let mut points = vec![x.to_vec()];
        let mut last = f64::INFINITY;
        for _ in 0..10 {
            points.extend(sample_ball(&x, 0.2, 5, &mut stream).unwrap().points);
            let est = estimate_from_points(&f, &points, 0.2).unwrap();
            assert!(est.value <= last + 1e-12);
            last = est.value;
        }
    }

    #[test]
    fn inflated_cloud_never_increases_estimate() {
        let (f, _) = max_of_linear(vec![vec![1.0, 0.0], vec![-1.0, 0.5], vec![0.2, -1.0]], vec![0.0, 0.3, 0.25]).unwrap();
        let x = [0.1, 0.0];
        let mut stream = SampleStream::new(6, 0);
        let unit: Vec<Vec<f64>> = (0..30).map(|_| ball_offset(stream.rng(), 2, 1.0)).collect();
        let cloud = |eps: f64| -> Vec<Vec<f64>> {
            let mut pts = vec![x.to_vec()];
            pts.extend(unit.iter().map(|u| vec![x[0] + eps * u[0], x[1] + eps * u[1]]));
            pts
        };
        let mut pts = cloud(0.01);
        let mut last = estimate_from_points(&f, &pts, 0.01).unwrap().value;
        for eps in [0.03, 0.1, 0.3, 1.0] {
            pts.extend(cloud(eps));
            let v = estimate_from_points(&f, &pts, eps).unwrap().value;
            assert!(v <= last + 1e-12);
            last = v;
        }
    }

    #[test]
    fn rejects_oracles_without_truth() {
        struct Blind;
        impl Oracle for Blind {
            fn dims(&self) -> usize {
                1
            }
            fn eval_f(&self, _: &[f64]) -> f64 {
                0.0
            }
            fn eval_g(&self, _: &[f64]) -> Vec<f64> {
                vec![0.0]
            }
        }
        assert!(matches!(
            estimate_goldstein(&Blind, &[0.0], 0.1, 10, &mut SampleStream::new(0, 0)),
            Err(Error::NoTruthAccess)
        ));
        let o = Exact(FnObjective::new(2, |_| 0.0, |_| vec![0.0, 0.0]));
        assert!(estimate_goldstein(&o, &[0.0, 0.0], 0.1, 2, &mut SampleStream::new(0, 0)).is_err());
    }
}
