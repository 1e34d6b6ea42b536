//! Noise-tolerant gradient sampling.
//!
//! Minimizes locally Lipschitz (possibly nonsmooth and nonconvex) functions
//! when the solver can only observe function values and generalized gradients
//! up to bounded, deterministic errors `ε_f` and `ε_g`.
//!
//! Each iteration samples gradients in a ball of radius `ε_k` around the
//! iterate, takes the minimum-norm element of their convex hull as the
//! negated search direction, and either shrinks the radius (when that element
//! is small) or runs a backtracking line search whose sufficient-decrease test
//! is relaxed by `ε_ls` so that function noise cannot make every trial fail.
//!
//! ```
//! use noisy_gs::problems::rosenbrock_ns;
//! use noisy_gs::oracle::{wrap_with_uniform_noise, NoiseBounds};
//! use noisy_gs::solver::{run, SolverParams, Status};
//!
//! let (objective, spec) = rosenbrock_ns();
//! let bounds = NoiseBounds::sqrt_coupled(1e-4).unwrap();
//! let oracle = wrap_with_uniform_noise(objective, bounds, 7).unwrap();
//! let params = SolverParams {
//!     bounds,
//!     eps_ls: 2.1 * bounds.eps_f,
//!     budget: 200,
//!     ..SolverParams::default()
//! };
//! let result = run(&oracle, &spec.default_start, &params).unwrap();
//! assert!(matches!(result.status, Status::Stationary | Status::BudgetExhausted));
//! ```

mod error;
mod linalg;

pub mod linesearch;
pub mod minnorm;
pub mod ml;
pub mod oracle;
pub mod problems;
pub mod sampler;
pub mod solver;
pub mod stationarity;

pub use error::{Error, Result};
pub use linesearch::{backtrack, LineSearchOutcome, LineSearchParams, StepCutoff};
pub use minnorm::{min_norm_point, solve_min_norm, GradientBundle, QpSolution};
pub use oracle::{Exact, FnObjective, NoiseBounds, Objective, Oracle, UniformNoise};
pub use problems::ProblemSpec;
pub use sampler::{sample_ball, SampleSet, SampleStream};
pub use solver::{run, IterateRecord, RunResult, SolverParams, Status};
pub use stationarity::{estimate_goldstein, StationarityEstimate};
