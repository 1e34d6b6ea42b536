//! Uniform sampling from closed Euclidean balls.
//!
//! Every iteration of the solver draws from its own ChaCha substream, keyed by
//! the master seed and the iteration number, so raising the iteration budget
//! never changes the samples seen by earlier iterations.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::{dist, norm2};

/// A reproducible random stream identified by `(master_seed, stream_id)`.
#[derive(Debug, Clone)]
pub struct SampleStream {
    id: u64,
    rng: ChaCha8Rng,
}

impl SampleStream {
    pub fn new(master_seed: u64, stream_id: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
        rng.set_stream(stream_id);
        Self { id: stream_id, rng }
    }

    pub fn id(&self) -> u64 {
        self.id
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }
}

/// Sample points drawn uniformly from `B(center, radius)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    pub points: Vec<Vec<f64>>,
    pub center: Vec<f64>,
    pub radius: f64,
    pub stream_id: u64,
}

/// Draws a vector uniformly from the ball of the given radius around the origin.
///
/// Direction is a normalized standard Gaussian, length is `radius * U^(1/n)`.
pub fn ball_offset<R: Rng + ?Sized>(rng: &mut R, n: usize, radius: f64) -> Vec<f64> {
    if n == 0 {
        return Vec::new();
    }
    let dir = loop {
        let g: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let len = norm2(&g);
        if len > 0.0 && len.is_finite() {
            break g.into_iter().map(|v| v / len).collect::<Vec<_>>();
        }
    };
    let u: f64 = rng.random();
    let r = radius * u.powf(1.0 / n as f64);
    dir.into_iter().map(|v| v * r).collect()
}

/// Places `center + offset` so that the computed distance to `center` does not
/// exceed `radius`, shrinking the offset when rounding would push it outside.
pub(crate) fn place_in_ball(center: &[f64], offset: &[f64], radius: f64) -> Vec<f64> {
    let mut scale = 1.0;
    for attempt in 0..128 {
        let p: Vec<f64> = center.iter().zip(offset).map(|(c, o)| c + scale * o).collect();
        if dist(&p, center) <= radius {
            return p;
        }
        scale *= if attempt < 8 { 1.0 - 1e-12 } else { 0.5 };
    }
    center.to_vec()
}

/// Draws `m` independent points uniformly from the closed ball `B(center, radius)`.
pub fn sample_ball(
    center: &[f64],
    radius: f64,
    m: usize,
    stream: &mut SampleStream,
) -> Result<SampleSet> {
    if !(radius >= 0.0) || !radius.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "sampling radius must be finite and nonnegative, got {radius}"
        )));
    }
    if m == 0 {
        return Err(Error::InvalidArgument("sample count must be at least 1".into()));
    }
    let n = center.len();
    let points = (0..m)
        .map(|_| {
            if radius == 0.0 {
                center.to_vec()
            } else {
                let off = ball_offset(stream.rng(), n, radius);
                place_in_ball(center, &off, radius)
            }
        })
        .collect();
    Ok(SampleSet {
        points,
        center: center.to_vec(),
        radius,
        stream_id: stream.id(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use noisy_gs_testkit::{binomial_sigma, ks_critical_1pct, ks_statistic};

    #[test]
    fn zero_radius_returns_center() {
        let c = vec![1.5, -2.0, 0.25];
        let s = sample_ball(&c, 0.0, 7, &mut SampleStream::new(3, 1)).unwrap();
        assert_eq!(s.points.len(), 7);
        assert!(s.points.iter().all(|p| *p == c));
    }

    #[test]
    fn same_stream_is_bitwise_identical() {
        let c = vec![0.1, 0.2];
        let a = sample_ball(&c, 0.7, 20, &mut SampleStream::new(42, 5)).unwrap();
        let b = sample_ball(&c, 0.7, 20, &mut SampleStream::new(42, 5)).unwrap();
        assert_eq!(a, b);
        let other = sample_ball(&c, 0.7, 20, &mut SampleStream::new(42, 6)).unwrap();
        assert_ne!(a.points, other.points);
    }

    #[test]
    fn rejects_negative_radius_and_zero_m() {
        let mut s = SampleStream::new(0, 0);
        assert!(sample_ball(&[0.0], -1.0, 3, &mut s).is_err());
        assert!(sample_ball(&[0.0], 1.0, 0, &mut s).is_err());
    }

    #[test]
    fn inner_half_ball_fraction_2d() {
        let n_draws = 100_000;
        let s = sample_ball(&[0.0, 0.0], 1.0, n_draws, &mut SampleStream::new(11, 0)).unwrap();
        let inside = s.points.iter().filter(|p| norm2(p) <= 0.5).count();
        let frac = inside as f64 / n_draws as f64;
        assert!((frac - 0.25).abs() <= 0.01, "fraction {frac}");
        assert!((frac - 0.25).abs() <= 4.0 * binomial_sigma(0.25, n_draws));
    }

    #[test]
    fn radial_law_and_containment() {
        for n in [1usize, 2, 5] {
            let c = vec![3.0; n];
            let s = sample_ball(&c, 2.0, 10_000, &mut SampleStream::new(n as u64, 9)).unwrap();
            assert!(s.points.iter().all(|p| dist(p, &c) <= 2.0));
            let radii: Vec<f64> = s.points.iter().map(|p| dist(p, &c) / 2.0).collect();
            let d = ks_statistic(&radii, |t| t.clamp(0.0, 1.0).powi(n as i32));
            assert!(d < ks_critical_1pct(radii.len()), "n={n} ks={d}");
        }
    }

    #[test]
    fn mean_is_centered() {
        let c = vec![-1.0, 4.0, 0.5];
        let draws = 10_000;
        let s = sample_ball(&c, 1.0, draws, &mut SampleStream::new(77, 2)).unwrap();
        // each coordinate of a uniform point in the unit 3-ball has variance 1/5
        let sigma = (0.2 / draws as f64).sqrt();
        for i in 0..3 {
            let mean = s.points.iter().map(|p| p[i]).sum::<f64>() / draws as f64;
            assert!((mean - c[i]).abs() <= 3.0 * sigma, "coord {i} mean {mean}");
        }
    }

    #[test]
    fn containment_survives_large_center() {
        let c = vec![1e8, -3e7];
        let s = sample_ball(&c, 1e-6, 2000, &mut SampleStream::new(1, 1)).unwrap();
        assert!(s.points.iter().all(|p| dist(p, &c) <= 1e-6));
    }
}
