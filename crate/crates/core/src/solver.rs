//! The outer gradient-sampling loop.
//!
//! Per iteration `k`:
//!
//! 1. sample `m` points uniformly in `B(x_k, ε_k)`;
//! 2. stack `g̃(x_k), g̃(x_{k,1}), …, g̃(x_{k,m})` as the columns of `G̃_k`;
//! 3. take `g̃_k` as the minimum-norm point of `conv(G̃_k)`, `d̃_k = −g̃_k`;
//! 4. if `‖g̃_k‖ ≤ max{ν·ε_k, 5·ε_g}` shrink the radius (`ε_{k+1} = θ·ε_k`) and
//!    take a null step, otherwise keep the radius and backtrack along `d̃_k`;
//! 5. `x_{k+1} = x_k + α_k·d̃_k`.
//!
//! The loop itself never ends; [`run`] stops on a radius floor, an iteration
//! budget, or a function value below `f_low`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{all_finite, dist};
use crate::linesearch::{backtrack, LineSearchParams, StepCutoff};
use crate::minnorm::{min_norm_point, DEFAULT_TOL};
use crate::oracle::{NoiseBounds, Oracle};
use crate::sampler::{sample_ball, SampleStream};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverParams {
    /// Sample count; `None` means `max(n + 1, 10)`.
    pub m: Option<usize>,
    pub theta: f64,
    pub gamma: f64,
    pub eta: f64,
    pub eps_ls: f64,
    pub nu: f64,
    pub eps1: f64,
    pub bounds: NoiseBounds,
    /// Lipschitz constant of `f` over the sublevel region. When set, the line
    /// search uses the Lipschitz step cutoff instead of `alpha_min`.
    pub lipschitz: Option<f64>,
    pub alpha_min: f64,
    pub budget: usize,
    pub eps_min: f64,
    pub f_low: f64,
    pub master_seed: u64,
    pub strict_requires: bool,
    pub qp_tol: f64,
    /// Smallest `‖x_{k+1} − x_k‖` that feeds the running Lipschitz estimate;
    /// `None` means `max(eps_f, 1e-8)`.
    pub lipschitz_min_step: Option<f64>,
}

impl Default for SolverParams {
    fn default() -> Self {
        Self {
            m: None,
            theta: 0.1,
            gamma: 0.5,
            eta: 1e-10,
            eps_ls: 0.0,
            nu: 1.0,
            eps1: 10.0,
            bounds: NoiseBounds::zero(),
            lipschitz: None,
            alpha_min: StepCutoff::DEFAULT_FLOOR,
            budget: 10_000,
            eps_min: 1e-6,
            f_low: -1e12,
            master_seed: 0,
            strict_requires: false,
            qp_tol: DEFAULT_TOL,
            lipschitz_min_step: None,
        }
    }
}

impl SolverParams {
    pub fn sample_count(&self, n: usize) -> usize {
        self.m.unwrap_or((n + 1).max(10))
    }

    pub fn cutoff(&self) -> StepCutoff {
        match self.lipschitz {
            Some(l) => StepCutoff::Lipschitz {
                lipschitz: l,
                eps_g: self.bounds.eps_g,
            },
            None => StepCutoff::Floor {
                alpha_min: self.alpha_min,
            },
        }
    }

    pub fn lipschitz_min_step(&self) -> f64 {
        self.lipschitz_min_step
            .unwrap_or_else(|| self.bounds.eps_f.max(1e-8))
    }

    /// Lower end of the admissible initial-radius interval,
    /// `max{(6·ε_ls·(L + ε_g) / (η·γ·ν²))^(1/3), 5·ε_g}`.
    pub fn critical_radius(&self, lipschitz: f64) -> f64 {
        let eg = self.bounds.eps_g;
        let cube = 6.0 * self.eps_ls * (lipschitz + eg) / (self.eta * self.gamma * self.nu * self.nu);
        cube.cbrt().max(5.0 * eg)
    }

    /// Right-hand side of the terminal stationarity bound,
    /// `θ⁻¹·ν·critical_radius(L)`.
    pub fn terminal_bound(&self, lipschitz: f64) -> f64 {
        self.nu / self.theta * self.critical_radius(lipschitz)
    }

    /// Checks that do not depend on the theory: malformed values that make
    /// the iteration itself ill-defined.
    fn check_well_formed(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        self.bounds.check()?;
        if matches!(self.m, Some(0)) {
            return bad("m must be at least 1".into());
        }
        if !(self.theta > 0.0 && self.theta <= 1.0) {
            return bad(format!("theta must lie in (0, 1], got {}", self.theta));
        }
        if !(self.nu > 0.0) {
            return bad(format!("nu must be positive, got {}", self.nu));
        }
        if !(self.eps1 > 0.0 && self.eps1.is_finite()) {
            return bad(format!("eps1 must be positive, got {}", self.eps1));
        }
        if !(self.eps_min >= 0.0) {
            return bad(format!("eps_min must be nonnegative, got {}", self.eps_min));
        }
        if !(self.qp_tol > 0.0) {
            return bad(format!("qp_tol must be positive, got {}", self.qp_tol));
        }
        if let Some(l) = self.lipschitz {
            if !(l > 0.0 && l.is_finite()) {
                return bad(format!("lipschitz must be positive, got {l}"));
            }
        }
        LineSearchParams {
            gamma: self.gamma,
            eta: self.eta,
            eps_ls: self.eps_ls,
            cutoff: self.cutoff(),
            f1_cap: 0.0,
        }
        .validate()
    }
}

/// A violated requirement of the algorithm's convergence theory.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    TooFewSamples { m: usize, n: usize },
    NonPositiveNoise,
    EpsLsTooSmall { eps_ls: f64, eps_f: f64 },
    MissingLipschitz,
    LipschitzTooSmall { lipschitz: f64, eps_g: f64 },
    Eps1OutOfRange { eps1: f64, low: f64, high: f64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::TooFewSamples { m, n } => write!(f, "m = {m} must be at least n + 1 = {}", n + 1),
            Violation::NonPositiveNoise => write!(f, "eps_f and eps_g must be positive"),
            Violation::EpsLsTooSmall { eps_ls, eps_f } => {
                write!(f, "eps_ls must exceed 2*eps_f (eps_ls = {eps_ls}, eps_f = {eps_f})")
            }
            Violation::MissingLipschitz => write!(f, "no Lipschitz constant supplied"),
            Violation::LipschitzTooSmall { lipschitz, eps_g } => {
                write!(f, "lipschitz must exceed 2*eps_g (L = {lipschitz}, eps_g = {eps_g})")
            }
            Violation::Eps1OutOfRange { eps1, low, high } => {
                write!(f, "eps1 = {eps1} must lie in ({low}, {high})")
            }
        }
    }
}

/// Lists the violated requirements; an empty list means the parameters are
/// admissible for the convergence theory.
pub fn validate_params(params: &SolverParams, n: usize) -> Vec<Violation> {
    let mut out = Vec::new();
    let m = params.sample_count(n);
    if m < n + 1 {
        out.push(Violation::TooFewSamples { m, n });
    }
    let NoiseBounds { eps_f, eps_g } = params.bounds;
    if !(eps_f > 0.0 && eps_g > 0.0) {
        out.push(Violation::NonPositiveNoise);
    }
    if !(params.eps_ls > 2.0 * eps_f) {
        out.push(Violation::EpsLsTooSmall {
            eps_ls: params.eps_ls,
            eps_f,
        });
    }
    match params.lipschitz {
        None => out.push(Violation::MissingLipschitz),
        Some(l) => {
            if !(l > 2.0 * eps_g) {
                out.push(Violation::LipschitzTooSmall { lipschitz: l, eps_g });
            }
            let low = params.critical_radius(l);
            let high = 3.0 * (l + eps_g);
            if !(params.eps1 > low && params.eps1 < high) {
                out.push(Violation::Eps1OutOfRange {
                    eps1: params.eps1,
                    low,
                    high,
                });
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Status {
    Stationary,
    BudgetExhausted,
    ObjectiveDiverging,
    QpFailure,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Status::Stationary => "Stationary",
            Status::BudgetExhausted => "BudgetExhausted",
            Status::ObjectiveDiverging => "ObjectiveDiverging",
            Status::QpFailure => "QPFailure",
        };
        f.write_str(s)
    }
}

impl std::str::FromStr for Status {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "Stationary" => Ok(Status::Stationary),
            "BudgetExhausted" => Ok(Status::BudgetExhausted),
            "ObjectiveDiverging" => Ok(Status::ObjectiveDiverging),
            "QPFailure" => Ok(Status::QpFailure),
            other => Err(Error::InvalidArgument(format!("unknown status '{other}'"))),
        }
    }
}

/// One row of the iteration trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterateRecord {
    pub k: usize,
    pub eps_k: f64,
    pub norm_g_tilde: f64,
    pub alpha: f64,
    pub backtracks: usize,
    /// `f̃(x_k)`.
    pub f_tilde: f64,
    pub f_true: Option<f64>,
    pub radius_reduced: bool,
    /// `x_k`, kept only for problems with at most three variables.
    pub x: Option<Vec<f64>>,
}

/// Read-only view of the iterate handed to an observer after each iteration.
#[derive(Debug)]
pub struct IterateView<'a> {
    pub x: &'a [f64],
    /// `g̃(x_k)`, the first bundle column.
    pub g_tilde: &'a [f64],
    /// Minimum-norm aggregate `g̃_k`.
    pub aggregate: &'a [f64],
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub status: Status,
    pub final_x: Vec<f64>,
    pub final_f_tilde: f64,
    pub final_eps: f64,
    pub history: Vec<IterateRecord>,
    /// `θ⁻¹·ν·max{(6ε_ls(L+ε_g)/(ηγν²))^(1/3), 5ε_g}` with `L` the supplied
    /// constant or, failing that, the running estimate.
    pub terminal_bound: Option<f64>,
    pub terminal_bound_met: bool,
    /// First iteration witnessing the terminal bound.
    pub witness_k: Option<usize>,
    pub lipschitz_estimate: Option<f64>,
    pub f_evals: usize,
    pub g_evals: usize,
    pub warnings: Vec<Violation>,
}

/// Running maximum of `|f̃(x_{k+1}) − f̃(x_k)| / ‖x_{k+1} − x_k‖` over steps
/// of length at least `min_step`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LipschitzEstimator {
    min_step: f64,
    best: Option<f64>,
}

impl LipschitzEstimator {
    pub fn new(min_step: f64) -> Self {
        Self { min_step, best: None }
    }

    pub fn observe(&mut self, x_prev: &[f64], f_prev: f64, x_next: &[f64], f_next: f64) {
        let step = dist(x_prev, x_next);
        if step >= self.min_step && step > 0.0 {
            let r = (f_next - f_prev).abs() / step;
            if r.is_finite() {
                self.best = Some(self.best.map_or(r, |b| b.max(r)));
            }
        }
    }

    pub fn estimate(&self) -> Option<f64> {
        self.best
    }
}

/// Lipschitz estimate from a trail of consecutive `(x_k, f̃(x_k))` pairs.
pub fn estimate_lipschitz<'a, I>(trail: I, min_step: f64) -> Result<f64>
where
    I: IntoIterator<Item = (&'a [f64], f64)>,
{
    let mut est = LipschitzEstimator::new(min_step);
    let mut prev: Option<(&[f64], f64)> = None;
    for (x, f) in trail {
        if let Some((px, pf)) = prev {
            est.observe(px, pf, x, f);
        }
        prev = Some((x, f));
    }
    est.estimate().ok_or(Error::NoQualifyingSteps { min_step })
}

/// Lipschitz estimate from a recorded history (requires stored iterates).
pub fn estimate_lipschitz_from_history(history: &[IterateRecord], min_step: f64) -> Result<f64> {
    if history.iter().any(|r| r.x.is_none()) {
        return Err(Error::InvalidArgument("history does not store iterates".into()));
    }
    estimate_lipschitz(
        history.iter().map(|r| (r.x.as_deref().expect("checked"), r.f_tilde)),
        min_step,
    )
}

/// First radius-reducing iteration with `‖g̃_k‖ ≤ θ⁻¹·ν·ε_k` and
/// `ε_k ≤ critical_radius(L)`.
pub fn terminal_bound_witness(history: &[IterateRecord], params: &SolverParams, lipschitz: f64) -> Option<usize> {
    let crit = params.critical_radius(lipschitz);
    history
        .iter()
        .find(|r| r.radius_reduced && r.norm_g_tilde <= params.nu / params.theta * r.eps_k && r.eps_k <= crit)
        .map(|r| r.k)
}

/// Runs the solver from `x1`.
pub fn run<O: Oracle + ?Sized>(oracle: &O, x1: &[f64], params: &SolverParams) -> Result<RunResult> {
    run_observed(oracle, x1, params, |_, _| {})
}

/// Like [`run`], calling `observer` after every iteration.
pub fn run_observed<O, F>(oracle: &O, x1: &[f64], params: &SolverParams, mut observer: F) -> Result<RunResult>
where
    O: Oracle + ?Sized,
    F: FnMut(&IterateRecord, &IterateView<'_>),
{
    let n = oracle.dims();
    if x1.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: x1.len() });
    }
    if !all_finite(x1) {
        return Err(Error::InvalidArgument("starting point must be finite".into()));
    }
    params.check_well_formed()?;
    let warnings = validate_params(params, n);
    if params.strict_requires && !warnings.is_empty() {
        return Err(Error::RequirementsViolated(warnings));
    }
    for w in &warnings {
        log::warn!("requirement not met: {w}");
    }
    if !oracle.is_repeatable() {
        log::warn!("oracle is not repeatable in x; convergence guarantees do not apply");
    }

    let m = params.sample_count(n);
    let truth = oracle.truth();
    let keep_x = n <= 3;

    let mut x = x1.to_vec();
    let mut eps = params.eps1;
    let mut f_x = oracle.eval_f(&x);
    let mut f_evals = 1;
    let mut g_evals = 0;
    if f_x.is_nan() {
        return Err(Error::NonFinite);
    }
    let f1 = f_x;
    let ls_params = LineSearchParams {
        gamma: params.gamma,
        eta: params.eta,
        eps_ls: params.eps_ls,
        cutoff: params.cutoff(),
        f1_cap: f1,
    };
    let mut lip = LipschitzEstimator::new(params.lipschitz_min_step());
    let mut history = Vec::with_capacity(params.budget.min(100_000));
    let mut status = if f_x < params.f_low {
        Status::ObjectiveDiverging
    } else {
        Status::BudgetExhausted
    };

    if status == Status::BudgetExhausted {
        for k in 1..=params.budget {
            let mut stream = SampleStream::new(params.master_seed, k as u64);
            let samples = sample_ball(&x, eps, m, &mut stream)?;
            let mut columns = Vec::with_capacity(m + 1);
            columns.push(oracle.eval_g(&x));
            columns.extend(samples.points.iter().map(|p| oracle.eval_g(p)));
            g_evals += m + 1;

            let qp = match min_norm_point(&columns, params.qp_tol) {
                Ok(q) => q,
                Err(Error::QpNonConvergence { iterations, gap }) => {
                    log::warn!("min-norm QP failed at k={k} after {iterations} iterations (gap {gap:e})");
                    status = Status::QpFailure;
                    break;
                }
                Err(Error::NonFinite) => return Err(Error::NonFinite),
                Err(e) => return Err(e),
            };
            let norm = qp.norm();
            let reduce = norm <= (params.nu * eps).max(5.0 * params.bounds.eps_g);

            let (alpha, backtracks, next) = if reduce {
                (0.0, 0, None)
            } else {
                let out = backtrack(oracle, &x, &qp.direction, f_x, &ls_params, eps)?;
                f_evals += out.trial_count;
                let next = out.accepted_x.zip(out.accepted_f);
                (out.alpha, out.trial_count, next)
            };

            let record = IterateRecord {
                k,
                eps_k: eps,
                norm_g_tilde: norm,
                alpha,
                backtracks,
                f_tilde: f_x,
                f_true: truth.map(|t| t.value(&x)),
                radius_reduced: reduce,
                x: keep_x.then(|| x.clone()),
            };
            observer(
                &record,
                &IterateView {
                    x: &x,
                    g_tilde: &columns[0],
                    aggregate: &qp.aggregate,
                },
            );
            history.push(record);

            if let Some((x_new, f_new)) = next {
                lip.observe(&x, f_x, &x_new, f_new);
                x = x_new;
                f_x = f_new;
                if f_x < params.f_low {
                    status = Status::ObjectiveDiverging;
                    break;
                }
            }
            if reduce {
                eps *= params.theta;
                if eps <= params.eps_min {
                    status = Status::Stationary;
                    break;
                }
            }
        }
    }

    let lipschitz_estimate = lip.estimate();
    let bound_l = params.lipschitz.or(lipschitz_estimate);
    let terminal_bound = bound_l.map(|l| params.terminal_bound(l));
    let witness_k = bound_l.and_then(|l| terminal_bound_witness(&history, params, l));
    if status == Status::Stationary && bound_l.is_some() && witness_k.is_none() {
        log::warn!("run ended stationary without witnessing the terminal bound");
    }

    Ok(RunResult {
        status,
        final_x: x,
        final_f_tilde: f_x,
        final_eps: eps,
        history,
        terminal_bound,
        terminal_bound_met: witness_k.is_some(),
        witness_k,
        lipschitz_estimate,
        f_evals,
        g_evals,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{Exact, FnObjective, UniformNoise};
    use crate::problems::{max_of_linear, rosenbrock_ns};

    fn abs1() -> Exact<FnObjective> {
        Exact(FnObjective::new(1, |x| x[0].abs(), |x| vec![if x[0] >= 0.0 { 1.0 } else { -1.0 }]))
    }

    #[test]
    fn validate_interval_arithmetic() {
        let p = SolverParams {
            eta: 0.25,
            gamma: 0.5,
            nu: 1.0,
            eps_ls: 0.05,
            bounds: NoiseBounds::new(0.02, 0.1).unwrap(),
            lipschitz: Some(1.0),
            eps1: 2.0,
            m: Some(3),
            ..SolverParams::default()
        };
        let low = p.critical_radius(1.0);
        assert!((low - (6.0f64 * 0.05 * 1.1 / 0.125).cbrt()).abs() < 1e-12);
        assert!((low - 1.3821).abs() < 1e-4, "{low}");
        assert!(validate_params(&p, 2).is_empty(), "{:?}", validate_params(&p, 2));
        let mut q = p.clone();
        q.eps1 = 1.0;
        assert!(matches!(validate_params(&q, 2)[..], [Violation::Eps1OutOfRange { .. }]));
        q.eps1 = 3.31;
        assert!(matches!(validate_params(&q, 2)[..], [Violation::Eps1OutOfRange { .. }]));
    }

    #[test]
    fn validate_boundaries() {
        let base = SolverParams {
            eps_ls: 0.05,
            bounds: NoiseBounds::new(0.02, 0.1).unwrap(),
            lipschitz: Some(1.0),
            eps1: 2.0,
            eta: 0.25,
            m: Some(3),
            ..SolverParams::default()
        };
        let mut p = base.clone();
        p.eps_ls = 0.04;
        let v = validate_params(&p, 2);
        assert!(v.iter().any(|v| matches!(v, Violation::EpsLsTooSmall { .. })));
        assert!(v.iter().any(|v| v.to_string().contains("eps_ls must exceed 2*eps_f")));

        let mut p = base.clone();
        p.lipschitz = Some(0.2);
        assert!(validate_params(&p, 2)
            .iter()
            .any(|v| matches!(v, Violation::LipschitzTooSmall { .. })));

        let mut p = base.clone();
        p.m = Some(2);
        assert!(validate_params(&p, 2)
            .iter()
            .any(|v| matches!(v, Violation::TooFewSamples { m: 2, n: 2 })));

        let p = SolverParams::default();
        assert!(validate_params(&p, 2).contains(&Violation::MissingLipschitz));
    }

    #[test]
    fn strict_requires_rejects_defaults() {
        let p = SolverParams {
            strict_requires: true,
            budget: 1,
            ..SolverParams::default()
        };
        assert!(matches!(run(&abs1(), &[1.0], &p), Err(Error::RequirementsViolated(_))));
    }

    #[test]
    fn budget_zero_is_empty() {
        let p = SolverParams { budget: 0, ..SolverParams::default() };
        let r = run(&abs1(), &[10.0], &p).unwrap();
        assert_eq!(r.status, Status::BudgetExhausted);
        assert!(r.history.is_empty());
        assert_eq!(r.final_x, vec![10.0]);
    }

    #[test]
    fn abs_value_reaches_stationarity() {
        let p = SolverParams {
            eps_ls: 1e-12,
            budget: 2000,
            master_seed: 3,
            ..SolverParams::default()
        };
        let r = run(&abs1(), &[10.0], &p).unwrap();
        assert_eq!(r.status, Status::Stationary);
        assert!(r.final_x[0].abs() <= r.final_eps / p.theta, "{:?} eps {}", r.final_x, r.final_eps);
        let mut last = f64::INFINITY;
        for rec in &r.history {
            assert!(rec.f_tilde <= last);
            last = rec.f_tilde;
        }
    }

    #[test]
    fn unbounded_linear_diverges() {
        // f(x) = -x moves one unit per accepted step.
        let (lin, _) = max_of_linear(vec![vec![-1.0]], vec![0.0]).unwrap();
        let p = SolverParams {
            f_low: -1e3,
            budget: 10_000,
            ..SolverParams::default()
        };
        let r = run(&Exact(lin), &[0.0], &p).unwrap();
        assert_eq!(r.status, Status::ObjectiveDiverging);
        assert!(r.final_f_tilde < -1e3);
        assert!(r.history.len() < 1100);
    }

    #[test]
    fn trace_invariants_on_noisy_rosenbrock() {
        let (obj, spec) = rosenbrock_ns();
        let bounds = NoiseBounds::sqrt_coupled(1e-2).unwrap();
        let oracle = UniformNoise::new(obj, bounds, 11).unwrap();
        let p = SolverParams {
            bounds,
            eps_ls: 2.1e-2,
            budget: 400,
            master_seed: 5,
            ..SolverParams::default()
        };
        let r = run(&oracle, &spec.default_start, &p).unwrap();
        let f1 = r.history[0].f_tilde;
        for w in r.history.windows(2) {
            let (a, b) = (&w[0], &w[1]);
            assert!(b.eps_k == a.eps_k || b.eps_k == a.eps_k * p.theta);
            assert!(b.eps_k <= a.eps_k);
            if a.alpha == 0.0 {
                assert_eq!(a.x, b.x);
            } else {
                assert!(!a.radius_reduced);
            }
        }
        for rec in &r.history {
            assert!(rec.f_tilde <= f1);
            let thr = (p.nu * rec.eps_k).max(5.0 * bounds.eps_g);
            assert_eq!(rec.radius_reduced, rec.norm_g_tilde <= thr);
            if rec.radius_reduced {
                assert_eq!(rec.alpha, 0.0);
                assert_eq!(rec.backtracks, 0);
            }
        }
    }

    #[test]
    fn runs_are_deterministic() {
        let (obj, spec) = rosenbrock_ns();
        let bounds = NoiseBounds::sqrt_coupled(1e-3).unwrap();
        let oracle = UniformNoise::new(obj, bounds, 2).unwrap();
        let p = SolverParams {
            bounds,
            eps_ls: 2.1e-3,
            budget: 150,
            master_seed: 8,
            ..SolverParams::default()
        };
        let a = run(&oracle, &spec.default_start, &p).unwrap();
        let b = run(&oracle, &spec.default_start, &p).unwrap();
        assert_eq!(a, b);
        // extending the budget leaves the prefix untouched
        let mut longer = p.clone();
        longer.budget = 300;
        let c = run(&oracle, &spec.default_start, &longer).unwrap();
        assert_eq!(&c.history[..a.history.len()], &a.history[..]);
    }

    #[test]
    fn lipschitz_cutoff_mode_runs() {
        let (obj, spec) = rosenbrock_ns();
        let p = SolverParams {
            eps_ls: 1e-10,
            lipschitz: Some(1000.0),
            budget: 300,
            ..SolverParams::default()
        };
        let r = run(&Exact(obj), &spec.default_start, &p).unwrap();
        assert!(r.history.last().unwrap().f_true.unwrap() < r.history[0].f_true.unwrap());
        assert!(r.terminal_bound.is_some());
    }

    #[test]
    fn lipschitz_estimates() {
        let a = [0.0];
        let b = [0.5];
        assert_eq!(estimate_lipschitz([(&a[..], 1.0), (&b[..], 3.0)], 1e-3).unwrap(), 4.0);
        assert!(matches!(
            estimate_lipschitz([(&a[..], 1.0), (&b[..], 3.0)], 1.0),
            Err(Error::NoQualifyingSteps { .. })
        ));
        let pts: Vec<[f64; 1]> = vec![[0.0], [1.0], [3.5], [-2.0], [-2.0], [7.25]];
        let trail: Vec<(&[f64], f64)> = pts.iter().map(|p| (&p[..], 3.0 * p[0])).collect();
        assert_eq!(estimate_lipschitz(trail, 1e-6).unwrap(), 3.0);
    }

    #[test]
    fn lipschitz_from_linear_run_history() {
        let (lin, _) = max_of_linear(vec![vec![3.0]], vec![0.0]).unwrap();
        let p = SolverParams { budget: 20, ..SolverParams::default() };
        let r = run(&Exact(lin), &[0.0], &p).unwrap();
        let est = estimate_lipschitz_from_history(&r.history, 1e-8).unwrap();
        assert!((est - 3.0).abs() < 1e-12);
        assert!((r.lipschitz_estimate.unwrap() - 3.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_inputs() {
        let p = SolverParams::default();
        assert!(matches!(run(&abs1(), &[1.0, 2.0], &p), Err(Error::DimensionMismatch { .. })));
        assert!(run(&abs1(), &[f64::NAN], &p).is_err());
        let bad = SolverParams { theta: 0.0, ..SolverParams::default() };
        assert!(run(&abs1(), &[1.0], &bad).is_err());
        let bad = SolverParams { gamma: 1.0, ..SolverParams::default() };
        assert!(run(&abs1(), &[1.0], &bad).is_err());
    }
}
