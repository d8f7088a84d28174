//! Run parameters and their defaults.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::problem::Problem;

/// How infeasible points are handled.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum BarrierKind {
    /// Reject every infeasible point outright (`f` is `+inf` outside the
    /// feasible set).
    Extreme,
    /// Keep a second, infeasible incumbent and drive its constraint
    /// violation down over time.
    Progressive,
}

/// Strategy used to order the evaluation queue before each dispatch burst.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum OrderingStrategy {
    /// Points whose generating direction best aligns with the last direction
    /// of success go first.
    LastSuccessDirection,
    /// First generated, first evaluated.
    GenerationOrder,
    /// Lexicographic comparison of coordinates.
    Lexicographic,
    /// Seeded random shuffle.
    Random,
}

/// Which search methods run ahead of the poll in every iteration.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Searches {
    pub speculative: bool,
    pub latin_hypercube: bool,
    pub nelder_mead: bool,
    pub quad_model: bool,
}

impl Searches {
    pub fn none() -> Self {
        Searches {
            speculative: false,
            latin_hypercube: false,
            nelder_mead: false,
            quad_model: false,
        }
    }

    pub fn all() -> Self {
        Searches {
            speculative: true,
            latin_hypercube: true,
            nelder_mead: true,
            quad_model: true,
        }
    }

    pub fn any(&self) -> bool {
        self.speculative || self.latin_hypercube || self.nelder_mead || self.quad_model
    }
}

impl Default for Searches {
    /// Speculative, Nelder-Mead and quadratic-model searches are on by
    /// default; Latin hypercube sampling is opt-in (it is a space-filling
    /// method, most useful early or as a standalone sampler).
    fn default() -> Self {
        Searches {
            speculative: true,
            latin_hypercube: false,
            nelder_mead: true,
            quad_model: true,
        }
    }
}

/// All tunable parameters of a run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Params {
    /// Initial frame size `Δ^0`.
    pub delta0: f64,
    /// Mesh refinement factor `τ` in `(0, 1)`; the frame shrinks by `τ` on
    /// failure and grows by `1/τ` on full success.
    pub tau: f64,
    /// Stop once the frame size drops below this tolerance.
    pub eps_stop: f64,
    /// Maximum number of blackbox evaluations for this run.
    pub max_bb_eval: usize,
    /// Optional hard cap on the number of iterations.
    pub max_iterations: Option<usize>,
    pub seed: u64,
    /// Stop a dispatch burst as soon as a full success is observed.
    pub opportunism: bool,
    pub ordering: OrderingStrategy,
    pub searches: Searches,
    /// Evaluation workers (`1` = evaluate inline, deterministic).
    pub n_workers: usize,
    /// Largest group of points passed to the blackbox in one call.
    pub group_max_size: usize,
    /// Generate all search and poll points of an iteration first, then
    /// evaluate them as a single burst.
    pub mega_search_poll: bool,
    pub barrier: BarrierKind,
}

impl Params {
    /// Defaults calibrated for a given problem.
    ///
    /// The initial frame size is a tenth of the smallest finite bound range;
    /// without any finite range it falls back to `1.0`.
    pub fn default_for(problem: &Problem) -> Params {
        let mut smallest_range = f64::INFINITY;
        for (lo, hi) in problem.lower.iter().zip(&problem.upper) {
            if lo.is_finite() && hi.is_finite() {
                smallest_range = smallest_range.min(hi - lo);
            }
        }
        let delta0 = if smallest_range.is_finite() {
            0.1 * smallest_range
        } else {
            1.0
        };
        Params {
            delta0,
            tau: 0.5,
            eps_stop: 1e-13,
            max_bb_eval: 20_000,
            max_iterations: None,
            seed: 0,
            opportunism: true,
            ordering: OrderingStrategy::LastSuccessDirection,
            searches: Searches::default(),
            n_workers: 1,
            group_max_size: 1,
            mega_search_poll: false,
            barrier: BarrierKind::Progressive,
        }
    }

    pub fn validate(&self) -> Result<(), ParamsError> {
        if !(self.delta0 > 0.0 && self.delta0.is_finite()) {
            return Err(ParamsError::InvalidParams {
                what: format!("delta0 must be positive and finite, got {}", self.delta0),
            });
        }
        if !(self.tau > 0.0 && self.tau < 1.0) {
            return Err(ParamsError::InvalidParams {
                what: format!("tau must lie in (0, 1), got {}", self.tau),
            });
        }
        if self.eps_stop < 0.0 || self.eps_stop.is_nan() {
            return Err(ParamsError::InvalidParams {
                what: format!("eps_stop must be nonnegative, got {}", self.eps_stop),
            });
        }
        if self.n_workers == 0 {
            return Err(ParamsError::InvalidParams {
                what: "n_workers must be at least 1".into(),
            });
        }
        if self.group_max_size == 0 {
            return Err(ParamsError::InvalidParams {
                what: "group_max_size must be at least 1".into(),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum ParamsError {
    #[error("invalid parameters: {what}")]
    InvalidParams { what: String },
}
