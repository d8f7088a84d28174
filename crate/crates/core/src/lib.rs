//! Mesh adaptive direct search for constrained blackbox optimization.
//!
//! The solver minimizes `f(x)` subject to bound and general inequality
//! constraints using only function values — no derivatives, no smoothness
//! assumptions, and tolerance for evaluations that crash or return garbage.
//! Trial points live on a mesh that adapts as the run progresses: successes
//! coarsen it, failures refine it, and the poll directions asymptotically
//! cover every direction in the unit sphere.
//!
//! Entry points:
//!
//! - [`Problem`] describes the blackbox (dimension, outputs, bounds, starting
//!   points).
//! - [`Params`] carries every tunable with sensible defaults from
//!   [`Params::default_for`].
//! - [`Mads::run`] drives the single-process algorithm;
//!   [`psd::PsdMads::run`] runs the parallel space decomposition variant.
//!
//! ```
//! use mads::{Mads, OutputKind, Params, Problem};
//!
//! let objective = mads::objective_blackbox(|x| (x[0] - 1.0).powi(2) + x[1].powi(2));
//! let problem = Problem::new(2, vec![OutputKind::Obj], objective)
//!     .with_x0(vec![5.0, 5.0])
//!     .validate()
//!     .unwrap();
//! let params = Params::default_for(&problem);
//! let outcome = Mads::new(problem, params).unwrap().run().unwrap();
//! let best = outcome.best_feasible.unwrap();
//! assert!(best.eval.f < 1e-6);
//! ```

mod barrier;
mod cache;
mod engine;
mod evaluation;
mod floats;
mod linalg;
mod mads;
mod mega;
mod mesh;
mod params;
mod point;
mod problem;
mod queue;
mod restart;
mod step;
mod trial;

pub mod psd;
pub mod search;

pub use barrier::{extreme_barrier_value, h_measure, BarrierState, Incumbent, SuccessKind};
pub use cache::{Cache, Claim};
pub use engine::{
    group_sizes, BurstResult, Engine, EvalCounter, HistoryLog, HistoryRecord, RunContext,
    StopReason,
};
pub use evaluation::{objective_blackbox, Blackbox, EvalStatus, Evaluation, FnBlackbox};
pub use mads::{Mads, MadsOutcome, NoEvaluableStart};
pub use mesh::{clip_to_bounds, ortho_2n_directions, MeshError, MeshState};
pub use params::{BarrierKind, OrderingStrategy, Params, ParamsError, Searches};
pub use point::Point;
pub use problem::{OutputKind, Problem, ProblemError, ValidatedProblem};
pub use queue::EvalQueue;
pub use restart::{warm_restart, RestartError, RestartSnapshot};
pub use step::{run_step, Step, StepError};
pub use trial::{Generator, TrialPoint};
