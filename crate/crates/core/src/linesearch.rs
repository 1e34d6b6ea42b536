//! Backtracking line search with a perturbed sufficient-decrease test.
//!
//! A trial step `α = γʲ` is accepted when
//!
//! ```text
//! f̃(x + αd) < f̃(x) − η·α·‖d‖² + ε_ls    and    f̃(x + αd) ≤ f̃(x₁)
//! ```
//!
//! The search gives up (returns `α = 0`) once the step falls below a cutoff:
//! either `γ·ε_k / (3(L + ε_g))` when a Lipschitz constant is known, or a fixed
//! floor otherwise.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{norm2_sq, step};
use crate::oracle::Oracle;

/// How the line search decides it has backtracked too far.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum StepCutoff {
    /// Stop once `γʲ < γ·ε_k / (3(L + ε_g))`.
    Lipschitz { lipschitz: f64, eps_g: f64 },
    /// Stop once `γʲ < alpha_min`.
    Floor { alpha_min: f64 },
}

impl StepCutoff {
    pub const DEFAULT_FLOOR: f64 = 1e-20;

    pub fn threshold(&self, gamma: f64, eps_k: f64) -> f64 {
        match *self {
            StepCutoff::Lipschitz { lipschitz, eps_g } => gamma * eps_k / (3.0 * (lipschitz + eps_g)),
            StepCutoff::Floor { alpha_min } => alpha_min,
        }
    }
}

impl Default for StepCutoff {
    fn default() -> Self {
        StepCutoff::Floor {
            alpha_min: Self::DEFAULT_FLOOR,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineSearchParams {
    pub gamma: f64,
    pub eta: f64,
    pub eps_ls: f64,
    pub cutoff: StepCutoff,
    /// `f̃(x₁)`; accepted points must stay in its sublevel set.
    pub f1_cap: f64,
}

impl LineSearchParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return bad(format!("gamma must lie in (0, 1), got {}", self.gamma));
        }
        if !(self.eta > 0.0 && self.eta < 0.5) {
            return bad(format!("eta must lie in (0, 1/2), got {}", self.eta));
        }
        if !(self.eps_ls >= 0.0) {
            return bad(format!("eps_ls must be nonnegative, got {}", self.eps_ls));
        }
        match self.cutoff {
            StepCutoff::Lipschitz { lipschitz, eps_g } => {
                if !(lipschitz > 0.0) || !(eps_g >= 0.0) {
                    return bad(format!(
                        "Lipschitz cutoff needs L > 0 and eps_g >= 0, got L={lipschitz}, eps_g={eps_g}"
                    ));
                }
            }
            StepCutoff::Floor { alpha_min } => {
                if !(alpha_min > 0.0) {
                    return bad(format!("alpha_min must be positive, got {alpha_min}"));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LineSearchOutcome {
    /// Accepted step, or 0 when the cutoff was reached.
    pub alpha: f64,
    /// Number of `f̃` evaluations performed.
    pub trial_count: usize,
    pub accepted_f: Option<f64>,
    pub accepted_x: Option<Vec<f64>>,
    /// Exponent `j` of the last step that was tried and rejected.
    pub last_rejected: Option<u32>,
}

/// Runs the backtracking search from `x` along `d`.
///
/// `f_at_x` must equal `oracle.eval_f(x)`; it is passed in so callers can
/// reuse the value from the previous accepted trial.
pub fn backtrack<O: Oracle + ?Sized>(
    oracle: &O,
    x: &[f64],
    d: &[f64],
    f_at_x: f64,
    params: &LineSearchParams,
    eps_k: f64,
) -> Result<LineSearchOutcome> {
    params.validate()?;
    if x.len() != d.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            got: d.len(),
        });
    }
    let dd = norm2_sq(d);
    if dd == 0.0 {
        return Err(Error::ZeroDirection);
    }
    let threshold = params.cutoff.threshold(params.gamma, eps_k);
    let mut last_rejected = None;
    let mut trial_count = 0;
    let mut j: u32 = 0;
    loop {
        let alpha = params.gamma.powi(j as i32);
        if alpha < threshold || alpha == 0.0 {
            return Ok(LineSearchOutcome {
                alpha: 0.0,
                trial_count,
                accepted_f: None,
                accepted_x: None,
                last_rejected,
            });
        }
        let trial = step(x, alpha, d);
        let f_trial = oracle.eval_f(&trial);
        trial_count += 1;
        let decrease_ok = f_trial < f_at_x - params.eta * alpha * dd + params.eps_ls;
        let sublevel_ok = f_trial <= params.f1_cap;
        if decrease_ok && sublevel_ok {
            return Ok(LineSearchOutcome {
                alpha,
                trial_count,
                accepted_f: Some(f_trial),
                accepted_x: Some(trial),
                last_rejected,
            });
        }
        last_rejected = Some(j);
        j += 1;
    }
}
