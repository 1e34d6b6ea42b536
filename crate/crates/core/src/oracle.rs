//! Evaluation oracles with bounded, repeatable errors.
//!
//! An [`Objective`] is an exact locally Lipschitz function together with one
//! Clarke subgradient selection. An [`Oracle`] is what the solver sees: values
//! `f̃(x)`, `g̃(x)` that may be off by at most the declared [`NoiseBounds`], and
//! that are a pure function of `x` (same bits in, same bits out).

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::linalg::{dist, norm2};
use crate::sampler::{ball_offset, sample_ball, SampleStream};

/// Exact objective with a subgradient selection.
pub trait Objective: Send + Sync {
    fn dims(&self) -> usize;
    fn value(&self, x: &[f64]) -> f64;
    /// One element of the Clarke generalized gradient at `x`.
    fn subgradient(&self, x: &[f64]) -> Vec<f64>;
}

/// Inexact evaluation oracle consumed by the solver.
pub trait Oracle {
    fn dims(&self) -> usize;
    fn eval_f(&self, x: &[f64]) -> f64;
    fn eval_g(&self, x: &[f64]) -> Vec<f64>;

    /// Exact evaluators, for verification only. The solver never reads them
    /// to make decisions.
    fn truth(&self) -> Option<&dyn Objective> {
        None
    }

    /// Whether repeated queries at the same point return the same values.
    fn is_repeatable(&self) -> bool {
        true
    }
}

impl<T: Oracle + ?Sized> Oracle for &T {
    fn dims(&self) -> usize {
        (**self).dims()
    }
    fn eval_f(&self, x: &[f64]) -> f64 {
        (**self).eval_f(x)
    }
    fn eval_g(&self, x: &[f64]) -> Vec<f64> {
        (**self).eval_g(x)
    }
    fn truth(&self) -> Option<&dyn Objective> {
        (**self).truth()
    }
    fn is_repeatable(&self) -> bool {
        (**self).is_repeatable()
    }
}

impl<T: Oracle + ?Sized> Oracle for Box<T> {
    fn dims(&self) -> usize {
        (**self).dims()
    }
    fn eval_f(&self, x: &[f64]) -> f64 {
        (**self).eval_f(x)
    }
    fn eval_g(&self, x: &[f64]) -> Vec<f64> {
        (**self).eval_g(x)
    }
    fn truth(&self) -> Option<&dyn Objective> {
        (**self).truth()
    }
    fn is_repeatable(&self) -> bool {
        (**self).is_repeatable()
    }
}

impl<T: Objective + ?Sized> Objective for Arc<T> {
    fn dims(&self) -> usize {
        (**self).dims()
    }
    fn value(&self, x: &[f64]) -> f64 {
        (**self).value(x)
    }
    fn subgradient(&self, x: &[f64]) -> Vec<f64> {
        (**self).subgradient(x)
    }
}

impl<T: Objective + ?Sized> Objective for Box<T> {
    fn dims(&self) -> usize {
        (**self).dims()
    }
    fn value(&self, x: &[f64]) -> f64 {
        (**self).value(x)
    }
    fn subgradient(&self, x: &[f64]) -> Vec<f64> {
        (**self).subgradient(x)
    }
}

type ValueFn = dyn Fn(&[f64]) -> f64 + Send + Sync;
type GradFn = dyn Fn(&[f64]) -> Vec<f64> + Send + Sync;

/// An [`Objective`] built from a pair of closures.
#[derive(Clone)]
pub struct FnObjective {
    dims: usize,
    value: Arc<ValueFn>,
    grad: Arc<GradFn>,
}

impl FnObjective {
    pub fn new<F, G>(dims: usize, value: F, grad: G) -> Self
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
        G: Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    {
        Self {
            dims,
            value: Arc::new(value),
            grad: Arc::new(grad),
        }
    }
}

impl std::fmt::Debug for FnObjective {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FnObjective").field("dims", &self.dims).finish()
    }
}

impl Objective for FnObjective {
    fn dims(&self) -> usize {
        self.dims
    }
    fn value(&self, x: &[f64]) -> f64 {
        (self.value)(x)
    }
    fn subgradient(&self, x: &[f64]) -> Vec<f64> {
        (self.grad)(x)
    }
}

/// Noise-free oracle: `f̃ = f`, `g̃ = g`, with truth access.
#[derive(Debug, Clone)]
pub struct Exact<O>(pub O);

impl<O: Objective> Oracle for Exact<O> {
    fn dims(&self) -> usize {
        self.0.dims()
    }
    fn eval_f(&self, x: &[f64]) -> f64 {
        self.0.value(x)
    }
    fn eval_g(&self, x: &[f64]) -> Vec<f64> {
        self.0.subgradient(x)
    }
    fn truth(&self) -> Option<&dyn Objective> {
        Some(&self.0)
    }
}

/// Worst-case errors `|f̃ − f| ≤ eps_f` and `‖g̃ − g‖₂ ≤ eps_g`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct NoiseBounds {
    pub eps_f: f64,
    pub eps_g: f64,
}

impl NoiseBounds {
    pub fn new(eps_f: f64, eps_g: f64) -> Result<Self> {
        let b = Self { eps_f, eps_g };
        b.check()?;
        Ok(b)
    }

    pub const fn zero() -> Self {
        Self { eps_f: 0.0, eps_g: 0.0 }
    }

    /// `eps_g = sqrt(eps_f)`, the finite-difference style coupling.
    pub fn sqrt_coupled(eps_f: f64) -> Result<Self> {
        Self::new(eps_f, eps_f.sqrt())
    }

    pub fn check(&self) -> Result<()> {
        if !(self.eps_f >= 0.0 && self.eps_f.is_finite()) {
            return Err(Error::InvalidArgument(format!("eps_f must be finite and >= 0, got {}", self.eps_f)));
        }
        if !(self.eps_g >= 0.0 && self.eps_g.is_finite()) {
            return Err(Error::InvalidArgument(format!("eps_g must be finite and >= 0, got {}", self.eps_g)));
        }
        Ok(())
    }
}

/// Appends the canonical encoding of `x` (little-endian IEEE bits, `-0.0`
/// folded into `+0.0`).
fn encode_point(hasher: &mut Sha256, x: &[f64]) {
    hasher.update((x.len() as u64).to_le_bytes());
    for &v in x {
        let v = if v == 0.0 { 0.0 } else { v };
        hasher.update(v.to_bits().to_le_bytes());
    }
}

/// Deterministic RNG keyed by `(seed, tag, x)`.
///
/// This is the counter-free pseudo-random function behind every repeatable
/// noise field in the crate; distinct tags give independent fields.
pub fn keyed_rng(seed: u64, tag: &[u8], x: &[f64]) -> ChaCha8Rng {
    let mut h = Sha256::new();
    h.update((tag.len() as u64).to_le_bytes());
    h.update(tag);
    h.update(seed.to_le_bytes());
    encode_point(&mut h, x);
    let digest: [u8; 32] = h.finalize().into();
    ChaCha8Rng::from_seed(digest)
}

/// Uniform scalar noise on `[-bound, bound]`, repeatable in `x`.
pub fn keyed_uniform(seed: u64, tag: &[u8], x: &[f64], bound: f64) -> f64 {
    if bound == 0.0 {
        return 0.0;
    }
    let u: f64 = keyed_rng(seed, tag, x).random();
    bound * (2.0 * u - 1.0)
}

const TAG_F: &[u8] = b"noise/f";
const TAG_G: &[u8] = b"noise/g";

/// Adds `xi` to `base` and shrinks the perturbation until the computed error
/// respects `bound`.
fn perturb_scalar(base: f64, xi: f64, bound: f64) -> f64 {
    let mut xi = xi;
    for _ in 0..64 {
        let v = base + xi;
        if (v - base).abs() <= bound {
            return v;
        }
        xi *= 0.5;
    }
    base
}

fn perturb_vector(base: &[f64], xi: &[f64], bound: f64) -> Vec<f64> {
    let mut scale = 1.0;
    for attempt in 0..128 {
        let v: Vec<f64> = base.iter().zip(xi).map(|(b, e)| b + scale * e).collect();
        if dist(&v, base) <= bound {
            return v;
        }
        scale *= if attempt < 8 { 1.0 - 1e-12 } else { 0.5 };
    }
    base.to_vec()
}

/// Wraps an exact objective with repeatable uniform noise: `f̃ = f + ξ_f`
/// with `ξ_f ~ U[-eps_f, eps_f]` and `g̃ = g + ξ_g` with `ξ_g` uniform in the
/// `eps_g` ball. The realization at `x` depends only on `(noise_seed, x)`.
#[derive(Debug, Clone)]
pub struct UniformNoise<O> {
    exact: O,
    bounds: NoiseBounds,
    seed: u64,
}

impl<O: Objective> UniformNoise<O> {
    pub fn new(exact: O, bounds: NoiseBounds, noise_seed: u64) -> Result<Self> {
        bounds.check()?;
        Ok(Self {
            exact,
            bounds,
            seed: noise_seed,
        })
    }

    pub fn bounds(&self) -> NoiseBounds {
        self.bounds
    }

    pub fn inner(&self) -> &O {
        &self.exact
    }
}

/// Convenience constructor for [`UniformNoise`].
pub fn wrap_with_uniform_noise<O: Objective>(
    exact: O,
    bounds: NoiseBounds,
    noise_seed: u64,
) -> Result<UniformNoise<O>> {
    UniformNoise::new(exact, bounds, noise_seed)
}

impl<O: Objective> Oracle for UniformNoise<O> {
    fn dims(&self) -> usize {
        self.exact.dims()
    }

    fn eval_f(&self, x: &[f64]) -> f64 {
        let f = self.exact.value(x);
        if self.bounds.eps_f == 0.0 {
            return f;
        }
        let xi = keyed_uniform(self.seed, TAG_F, x, self.bounds.eps_f);
        perturb_scalar(f, xi, self.bounds.eps_f)
    }

    fn eval_g(&self, x: &[f64]) -> Vec<f64> {
        let g = self.exact.subgradient(x);
        if self.bounds.eps_g == 0.0 {
            return g;
        }
        let mut rng = keyed_rng(self.seed, TAG_G, x);
        let xi = ball_offset(&mut rng, g.len(), self.bounds.eps_g);
        perturb_vector(&g, &xi, self.bounds.eps_g)
    }

    fn truth(&self) -> Option<&dyn Objective> {
        Some(&self.exact)
    }
}

/// Empirical lower bound on the gradient error an oracle must tolerate near
/// `x`: the largest pairwise distance among exact subgradients sampled
/// uniformly in `B(x, eps)`.
///
/// Any valid `eps_g` has to be at least as large as the diameter of the
/// Clarke gradient, and sampled gradients around a kink approach that diameter.
pub fn estimate_diam_caveat(
    oracle: &dyn Oracle,
    x: &[f64],
    eps: f64,
    num_samples: usize,
    rng_seed: u64,
) -> Result<f64> {
    let truth = oracle.truth().ok_or(Error::NoTruthAccess)?;
    if num_samples < 2 {
        return Err(Error::InvalidArgument(format!(
            "need at least 2 samples, got {num_samples}"
        )));
    }
    if x.len() != truth.dims() {
        return Err(Error::DimensionMismatch {
            expected: truth.dims(),
            got: x.len(),
        });
    }
    let set = sample_ball(x, eps, num_samples, &mut SampleStream::new(rng_seed, 0))?;
    let grads: Vec<Vec<f64>> = set.points.iter().map(|p| truth.subgradient(p)).collect();
    // Diameter of a finite set is attained between two extreme points; the
    // quadratic scan is fine for the sample sizes used here.
    let mut best = 0.0f64;
    for i in 0..grads.len() {
        for j in (i + 1)..grads.len() {
            best = best.max(dist(&grads[i], &grads[j]));
        }
    }
    Ok(best)
}

/// Largest observed `|f̃ − f|` and `‖g̃ − g‖` of `oracle` at `x`.
pub fn observed_errors(oracle: &dyn Oracle, x: &[f64]) -> Option<(f64, f64)> {
    let t = oracle.truth()?;
    let ef = (oracle.eval_f(x) - t.value(x)).abs();
    let g = oracle.eval_g(x);
    let gt = t.subgradient(x);
    let eg = norm2(&g.iter().zip(&gt).map(|(a, b)| a - b).collect::<Vec<_>>());
    Some((ef, eg))
}
