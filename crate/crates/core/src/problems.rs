//! Exact test objectives with Clarke subgradient selections, and the name
//! registry the CLI uses to look them up.

use std::fmt;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::dot;
use crate::oracle::{keyed_uniform, NoiseBounds, Objective, Oracle, UniformNoise};

/// Metadata attached to a test problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemSpec {
    pub name: String,
    pub dims: usize,
    pub default_start: Vec<f64>,
    pub known_optimum: Option<(Vec<f64>, f64)>,
    pub lipschitz_hint: Option<f64>,
}

/// `f(x, y) = (1 − x)² + 100·|y − 2x² + 1|`.
#[derive(Debug, Clone, Copy, Default)]
pub struct NonsmoothRosenbrock;

impl NonsmoothRosenbrock {
    #[inline]
    fn kink(x: &[f64]) -> f64 {
        x[1] - 2.0 * x[0] * x[0] + 1.0
    }
}

impl Objective for NonsmoothRosenbrock {
    fn dims(&self) -> usize {
        2
    }

    fn value(&self, x: &[f64]) -> f64 {
        (1.0 - x[0]).powi(2) + 100.0 * Self::kink(x).abs()
    }

    fn subgradient(&self, x: &[f64]) -> Vec<f64> {
        // On the kink take the t >= 0 branch.
        let s = if Self::kink(x) >= 0.0 { 1.0 } else { -1.0 };
        vec![-2.0 * (1.0 - x[0]) - 400.0 * x[0] * s, 100.0 * s]
    }
}

pub fn rosenbrock_ns() -> (NonsmoothRosenbrock, ProblemSpec) {
    (
        NonsmoothRosenbrock,
        ProblemSpec {
            name: "rosenbrock".into(),
            dims: 2,
            default_start: vec![-1.2, 1.0],
            known_optimum: Some((vec![1.0, 1.0], 0.0)),
            lipschitz_hint: None,
        },
    )
}

/// `f(x) = maxᵢ (aᵢᵀx + bᵢ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MaxOfLinear {
    rows: Vec<Vec<f64>>,
    offsets: Vec<f64>,
}

impl MaxOfLinear {
    pub fn new(rows: Vec<Vec<f64>>, offsets: Vec<f64>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::InvalidArgument("max_of_linear needs at least one piece".into()));
        }
        if rows.len() != offsets.len() {
            return Err(Error::DimensionMismatch {
                expected: rows.len(),
                got: offsets.len(),
            });
        }
        let n = rows[0].len();
        if n == 0 {
            return Err(Error::InvalidArgument("pieces must have at least one coefficient".into()));
        }
        if let Some(r) = rows.iter().find(|r| r.len() != n) {
            return Err(Error::DimensionMismatch { expected: n, got: r.len() });
        }
        if rows.iter().flatten().chain(&offsets).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self { rows, offsets })
    }

    /// Parses pieces from text: one piece per nonblank line, `n` coefficients
    /// followed by the offset, whitespace separated. Lines starting with `#`
    /// are comments.
    pub fn parse(text: &str) -> Result<Self> {
        let mut rows = Vec::new();
        let mut offsets = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let nums = line
                .split_whitespace()
                .map(|t| t.parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::InvalidArgument(format!("line {}: {e}", lineno + 1)))?;
            if nums.len() < 2 {
                return Err(Error::InvalidArgument(format!(
                    "line {}: expected coefficients followed by an offset",
                    lineno + 1
                )));
            }
            let (b, a) = nums.split_last().expect("len >= 2");
            rows.push(a.to_vec());
            offsets.push(*b);
        }
        Self::new(rows, offsets)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn pieces(&self) -> usize {
        self.rows.len()
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    fn piece_values(&self, x: &[f64]) -> impl Iterator<Item = f64> + '_ {
        let x = x.to_vec();
        self.rows.iter().zip(&self.offsets).map(move |(a, b)| dot(a, &x) + b)
    }

    /// Indices of pieces within `tol` of the maximum at `x`.
    pub fn active_set(&self, x: &[f64], tol: f64) -> Vec<usize> {
        let vals: Vec<f64> = self.piece_values(x).collect();
        let top = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        (0..vals.len()).filter(|&i| vals[i] >= top - tol).collect()
    }

    /// Generators of the Clarke generalized gradient at `x`: the active `aᵢ`.
    pub fn clarke_generators(&self, x: &[f64], tol: f64) -> Vec<Vec<f64>> {
        self.active_set(x, tol).into_iter().map(|i| self.rows[i].clone()).collect()
    }

    pub fn spec(&self, name: &str) -> ProblemSpec {
        let n = self.rows[0].len();
        let hint = self
            .rows
            .iter()
            .map(|a| dot(a, a).sqrt())
            .fold(0.0, f64::max);
        ProblemSpec {
            name: name.into(),
            dims: n,
            default_start: vec![0.0; n],
            known_optimum: None,
            lipschitz_hint: Some(hint),
        }
    }
}

impl Objective for MaxOfLinear {
    fn dims(&self) -> usize {
        self.rows[0].len()
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.piece_values(x).fold(f64::NEG_INFINITY, f64::max)
    }

    fn subgradient(&self, x: &[f64]) -> Vec<f64> {
        // First maximizing piece.
        let mut best = (0, f64::NEG_INFINITY);
        for (i, v) in self.piece_values(x).enumerate() {
            if v > best.1 {
                best = (i, v);
            }
        }
        self.rows[best.0].clone()
    }
}

pub fn max_of_linear(rows: Vec<Vec<f64>>, offsets: Vec<f64>) -> Result<(MaxOfLinear, ProblemSpec)> {
    let m = MaxOfLinear::new(rows, offsets)?;
    let spec = m.spec("max_linear");
    Ok((m, spec))
}

type Scalar1 = dyn Fn(f64) -> f64 + Send + Sync;

/// Exact `f(x) = |φ(x)|` in one dimension.
#[derive(Clone)]
pub struct AbsOfSmooth {
    phi: Arc<Scalar1>,
    dphi: Arc<Scalar1>,
}

impl fmt::Debug for AbsOfSmooth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("AbsOfSmooth")
    }
}

impl Objective for AbsOfSmooth {
    fn dims(&self) -> usize {
        1
    }

    fn value(&self, x: &[f64]) -> f64 {
        (self.phi)(x[0]).abs()
    }

    fn subgradient(&self, x: &[f64]) -> Vec<f64> {
        let d = (self.dphi)(x[0]);
        vec![if (self.phi)(x[0]) >= 0.0 { d } else { -d }]
    }
}

/// Source of the error in `φ̃(x) = φ(x) + ξ(x)`.
#[derive(Clone)]
pub enum PhiNoise {
    /// Repeatable uniform noise on `[-bound, bound]`.
    Keyed { seed: u64, bound: f64 },
    /// A caller-supplied realization; must stay within the declared bound.
    Custom(Arc<Scalar1>),
}

/// Composite `|φ|` oracle whose gradient follows the sign of the noisy
/// inner value: `g̃ = −φ'` if `φ̃ < 0`, `0` if `φ̃ = 0`, `φ'` if `φ̃ > 0`.
///
/// With `φ(x) = x` and small positive `x`, a negative noise realization flips
/// the reported gradient to `−1` while the true gradient is `+1`, so any valid
/// gradient error bound has to be at least 2.
#[derive(Clone)]
pub struct AbsComposite {
    exact: AbsOfSmooth,
    noise: PhiNoise,
}

impl fmt::Debug for AbsComposite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let noise = match &self.noise {
            PhiNoise::Keyed { seed, bound } => format!("Keyed {{ seed: {seed}, bound: {bound} }}"),
            PhiNoise::Custom(_) => "Custom".into(),
        };
        f.debug_struct("AbsComposite").field("noise", &noise).finish()
    }
}

const TAG_PHI: &[u8] = b"noise/phi";

impl AbsComposite {
    pub fn new<P, D>(phi: P, dphi: D, noise: PhiNoise) -> Self
    where
        P: Fn(f64) -> f64 + Send + Sync + 'static,
        D: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self {
            exact: AbsOfSmooth {
                phi: Arc::new(phi),
                dphi: Arc::new(dphi),
            },
            noise,
        }
    }

    pub fn phi_noise(&self, x: f64) -> f64 {
        match &self.noise {
            PhiNoise::Keyed { seed, bound } => keyed_uniform(*seed, TAG_PHI, &[x], *bound),
            PhiNoise::Custom(f) => f(x),
        }
    }

    pub fn phi_tilde(&self, x: f64) -> f64 {
        (self.exact.phi)(x) + self.phi_noise(x)
    }
}

pub fn abs_composite<P, D>(phi: P, dphi: D, noise: PhiNoise) -> AbsComposite
where
    P: Fn(f64) -> f64 + Send + Sync + 'static,
    D: Fn(f64) -> f64 + Send + Sync + 'static,
{
    AbsComposite::new(phi, dphi, noise)
}

impl Oracle for AbsComposite {
    fn dims(&self) -> usize {
        1
    }

    fn eval_f(&self, x: &[f64]) -> f64 {
        self.phi_tilde(x[0]).abs()
    }

    fn eval_g(&self, x: &[f64]) -> Vec<f64> {
        let pt = self.phi_tilde(x[0]);
        let d = (self.exact.dphi)(x[0]);
        vec![if pt < 0.0 {
            -d
        } else if pt == 0.0 {
            0.0
        } else {
            d
        }]
    }

    fn truth(&self) -> Option<&dyn Objective> {
        Some(&self.exact)
    }
}

/// A registry entry: an oracle (with its noise already attached) plus metadata.
pub struct Problem {
    pub oracle: Box<dyn Oracle + Send + Sync>,
    pub spec: ProblemSpec,
}

impl fmt::Debug for Problem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Problem").field("spec", &self.spec).finish()
    }
}

/// Builds a problem by name: `rosenbrock`, `abs_composite`, or
/// `max_linear:<path>`.
///
/// `abs_composite` uses `φ(x) = x` and injects its own `φ` noise with bound
/// `bounds.eps_f`; the others are wrapped in [`UniformNoise`].
pub fn build(name: &str, bounds: NoiseBounds, noise_seed: u64) -> Result<Problem> {
    if name == "rosenbrock" {
        let (obj, spec) = rosenbrock_ns();
        return Ok(Problem {
            oracle: Box::new(UniformNoise::new(obj, bounds, noise_seed)?),
            spec,
        });
    }
    if name == "abs_composite" {
        bounds.check()?;
        let oracle = abs_composite(
            |x| x,
            |_| 1.0,
            PhiNoise::Keyed {
                seed: noise_seed,
                bound: bounds.eps_f,
            },
        );
        return Ok(Problem {
            oracle: Box::new(oracle),
            spec: ProblemSpec {
                name: name.into(),
                dims: 1,
                default_start: vec![1.0],
                known_optimum: Some((vec![0.0], 0.0)),
                lipschitz_hint: Some(1.0),
            },
        });
    }
    if let Some(path) = name.strip_prefix("max_linear:") {
        let m = MaxOfLinear::from_file(Path::new(path))?;
        let spec = m.spec(name);
        return Ok(Problem {
            oracle: Box::new(UniformNoise::new(m, bounds, noise_seed)?),
            spec,
        });
    }
    Err(Error::InvalidArgument(format!(
        "unknown problem '{name}' (expected rosenbrock, abs_composite or max_linear:<file>)"
    )))
}
