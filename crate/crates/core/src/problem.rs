//! Problem definition and validation.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::evaluation::Blackbox;
use crate::point::Point;

/// Kind of one blackbox output.
///
/// `Obj` is the objective (exactly one per problem). `Pb` constraints are
/// relaxable — the progressive barrier may visit points violating them. `Eb`
/// constraints are unrelaxable and always handled by the extreme barrier.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum OutputKind {
    Obj,
    Pb,
    Eb,
}

/// A blackbox optimization problem: minimize `f(x)` for `x` in the box
/// `[lower, upper]` subject to `c_j(x) <= 0`.
///
/// Bounds are always materialized; a coordinate without a bound carries
/// `-inf` / `+inf`. The blackbox produces the outputs declared in
/// `output_kinds`, in that order.
#[derive(Clone)]
pub struct Problem {
    pub n: usize,
    pub output_kinds: Vec<OutputKind>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub x0: Vec<Point>,
    pub blackbox: Arc<dyn Blackbox>,
}

impl Problem {
    /// A problem with no bounds and no start point yet.
    pub fn new(n: usize, output_kinds: Vec<OutputKind>, blackbox: Arc<dyn Blackbox>) -> Self {
        Problem {
            n,
            output_kinds,
            lower: vec![f64::NEG_INFINITY; n],
            upper: vec![f64::INFINITY; n],
            x0: Vec::new(),
            blackbox,
        }
    }

    pub fn with_bounds(mut self, lower: Vec<f64>, upper: Vec<f64>) -> Self {
        self.lower = lower;
        self.upper = upper;
        self
    }

    pub fn with_x0(mut self, x0: Vec<f64>) -> Self {
        self.x0.push(Point::new(x0));
        self
    }

    /// Number of constraints (outputs other than the objective).
    pub fn m(&self) -> usize {
        self.output_kinds
            .iter()
            .filter(|k| **k != OutputKind::Obj)
            .count()
    }

    /// Is `x` inside the variable bounds?
    pub fn in_bounds(&self, x: &Point) -> bool {
        x.as_slice()
            .iter()
            .zip(self.lower.iter().zip(&self.upper))
            .all(|(v, (lo, hi))| *v >= *lo && *v <= *hi)
    }

    /// Validates the definition and returns the checked problem.
    pub fn validate(self) -> Result<ValidatedProblem, ProblemError> {
        if self.n == 0 {
            return Err(ProblemError::DimensionMismatch {
                what: "dimension must be at least 1".into(),
            });
        }
        let obj_count = self
            .output_kinds
            .iter()
            .filter(|k| **k == OutputKind::Obj)
            .count();
        if obj_count != 1 {
            return Err(ProblemError::NoObjective { found: obj_count });
        }
        if self.lower.len() != self.n || self.upper.len() != self.n {
            return Err(ProblemError::DimensionMismatch {
                what: format!(
                    "bounds have lengths {} and {}, expected {}",
                    self.lower.len(),
                    self.upper.len(),
                    self.n
                ),
            });
        }
        for (i, (lo, hi)) in self.lower.iter().zip(&self.upper).enumerate() {
            if lo > hi {
                return Err(ProblemError::EmptyBounds {
                    index: i,
                    lower: *lo,
                    upper: *hi,
                });
            }
        }
        if self.x0.is_empty() {
            return Err(ProblemError::NoStartPoint);
        }
        for x in &self.x0 {
            if x.dim() != self.n {
                return Err(ProblemError::DimensionMismatch {
                    what: format!("start point has dimension {}, expected {}", x.dim(), self.n),
                });
            }
            for (i, v) in x.as_slice().iter().enumerate() {
                if *v < self.lower[i] || *v > self.upper[i] {
                    return Err(ProblemError::BoundViolation {
                        index: i,
                        value: *v,
                        lower: self.lower[i],
                        upper: self.upper[i],
                    });
                }
            }
        }
        Ok(ValidatedProblem(self))
    }
}

impl fmt::Debug for Problem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Problem")
            .field("n", &self.n)
            .field("output_kinds", &self.output_kinds)
            .field("lower", &self.lower)
            .field("upper", &self.upper)
            .field("x0", &self.x0)
            .finish_non_exhaustive()
    }
}

/// A [`Problem`] whose invariants have been checked.
#[derive(Clone, Debug)]
pub struct ValidatedProblem(Problem);

impl ValidatedProblem {
    pub fn into_inner(self) -> Problem {
        self.0
    }
}

impl std::ops::Deref for ValidatedProblem {
    type Target = Problem;

    fn deref(&self) -> &Problem {
        &self.0
    }
}

#[derive(Debug, Error)]
pub enum ProblemError {
    #[error("dimension mismatch: {what}")]
    DimensionMismatch { what: String },
    #[error("start point coordinate {index} = {value} violates bounds [{lower}, {upper}]")]
    BoundViolation {
        index: usize,
        value: f64,
        lower: f64,
        upper: f64,
    },
    #[error("problem must declare exactly one objective output, found {found}")]
    NoObjective { found: usize },
    #[error("bounds are empty at coordinate {index}: lower {lower} > upper {upper}")]
    EmptyBounds {
        index: usize,
        lower: f64,
        upper: f64,
    },
    #[error("at least one start point is required")]
    NoStartPoint,
}
