//! Constraint handling: extreme and progressive barriers.
//!
//! Infeasibility is aggregated into the scalar
//!
//! ```text
//! h(x) = sum over relaxable constraints of max(c_j(x), 0)^2
//! ```
//!
//! (`+inf` for failed evaluations or violated unrelaxable constraints).
//! The squared hinge is smooth at the boundary, which rewards even small
//! violation reductions near feasibility. `h(x) = 0` iff `x` is feasible.
//!
//! The extreme barrier keeps a single feasible incumbent and treats every
//! infeasible point as `f = +inf`. The progressive barrier additionally
//! tracks the best infeasible point and a violation budget `h_max` that
//! tightens as the run progresses, letting the method approach a constrained
//! optimum from the infeasible side.

use serde::{Deserialize, Serialize};

use crate::evaluation::Evaluation;
use crate::params::BarrierKind;
use crate::point::Point;
use crate::problem::OutputKind;

/// Outcome of comparing one evaluated trial point against the incumbents.
///
/// Ordered: `Failure < PartialSuccess < FullSuccess`, so the best outcome of
/// a burst is simply the maximum.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SuccessKind {
    Failure,
    PartialSuccess,
    FullSuccess,
}

/// An incumbent: a point, its evaluation, and its violation measure.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Incumbent {
    pub point: Point,
    pub eval: Evaluation,
    pub h: f64,
}

/// Aggregated constraint violation of an evaluation.
///
/// Failed evaluations and violated unrelaxable (`Eb`) constraints yield
/// `+inf`; otherwise the squared hinge of the relaxable (`Pb`) constraints.
pub fn h_measure(eval: &Evaluation, kinds: &[OutputKind]) -> f64 {
    if !eval.is_ok() {
        return f64::INFINITY;
    }
    let mut h = 0.0;
    let mut c_iter = eval.c.iter();
    for kind in kinds {
        match kind {
            OutputKind::Obj => {}
            OutputKind::Eb => {
                let c = *c_iter.next().expect("constraint arity checked upstream");
                if c > 0.0 {
                    return f64::INFINITY;
                }
            }
            OutputKind::Pb => {
                let c = *c_iter.next().expect("constraint arity checked upstream");
                if c > 0.0 {
                    h += c * c;
                }
            }
        }
    }
    h
}

/// The extreme-barrier objective: `f` where feasible, `+inf` elsewhere.
pub fn extreme_barrier_value(eval: &Evaluation, kinds: &[OutputKind]) -> f64 {
    if !eval.is_ok() {
        return f64::INFINITY;
    }
    let feasible = {
        let mut c_iter = eval.c.iter();
        kinds
            .iter()
            .filter(|k| **k != OutputKind::Obj)
            .all(|_| *c_iter.next().unwrap() <= 0.0)
    };
    if feasible {
        eval.f
    } else {
        f64::INFINITY
    }
}

/// Incumbents plus progressive-barrier bookkeeping.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BarrierState {
    kind: BarrierKind,
    output_kinds: Vec<OutputKind>,
    best_feasible: Option<Incumbent>,
    best_infeasible: Option<Incumbent>,
    #[serde(with = "crate::floats::total")]
    h_max: f64,
    /// Violation measures of everything classified so far; the `h_max`
    /// tightening rule after a partial success consults this.
    seen_h: Vec<f64>,
}

impl BarrierState {
    pub fn new(kind: BarrierKind, output_kinds: Vec<OutputKind>) -> Self {
        BarrierState {
            kind,
            output_kinds,
            best_feasible: None,
            best_infeasible: None,
            h_max: f64::INFINITY,
            seen_h: Vec::new(),
        }
    }

    pub fn kind(&self) -> BarrierKind {
        self.kind
    }

    pub fn best_feasible(&self) -> Option<&Incumbent> {
        self.best_feasible.as_ref()
    }

    pub fn best_infeasible(&self) -> Option<&Incumbent> {
        self.best_infeasible.as_ref()
    }

    pub fn h_max(&self) -> f64 {
        self.h_max
    }

    /// The point polling is centered on: the feasible incumbent when one
    /// exists, otherwise the best infeasible point.
    pub fn frame_center(&self) -> Option<&Incumbent> {
        self.best_feasible.as_ref().or(self.best_infeasible.as_ref())
    }

    pub fn h_of(&self, eval: &Evaluation) -> f64 {
        h_measure(eval, &self.output_kinds)
    }

    /// Classifies an evaluated trial point and updates the incumbents.
    pub fn classify(&mut self, point: &Point, eval: &Evaluation) -> SuccessKind {
        match self.kind {
            BarrierKind::Extreme => self.classify_extreme(point, eval),
            BarrierKind::Progressive => self.classify_progressive(point, eval),
        }
    }

    fn classify_extreme(&mut self, point: &Point, eval: &Evaluation) -> SuccessKind {
        let value = extreme_barrier_value(eval, &self.output_kinds);
        let incumbent = self
            .best_feasible
            .as_ref()
            .map_or(f64::INFINITY, |b| b.eval.f);
        if value < incumbent {
            self.best_feasible = Some(Incumbent {
                point: point.clone(),
                eval: eval.clone(),
                h: 0.0,
            });
            SuccessKind::FullSuccess
        } else {
            SuccessKind::Failure
        }
    }

    fn classify_progressive(&mut self, point: &Point, eval: &Evaluation) -> SuccessKind {
        let h = self.h_of(eval);
        if h.is_finite() {
            self.seen_h.push(h);
        }
        if h == 0.0 {
            // Feasible: compete with the feasible incumbent on f alone.
            let incumbent_f = self
                .best_feasible
                .as_ref()
                .map_or(f64::INFINITY, |b| b.eval.f);
            return if eval.f < incumbent_f {
                self.best_feasible = Some(Incumbent {
                    point: point.clone(),
                    eval: eval.clone(),
                    h,
                });
                SuccessKind::FullSuccess
            } else {
                SuccessKind::Failure
            };
        }
        if !h.is_finite() || h > self.h_max {
            return SuccessKind::Failure;
        }
        // Infeasible but within the violation budget: dominance against the
        // infeasible incumbent.
        let (inc_f, inc_h) = self
            .best_infeasible
            .as_ref()
            .map_or((f64::INFINITY, f64::INFINITY), |b| (b.eval.f, b.h));
        if h >= inc_h {
            return SuccessKind::Failure;
        }
        let new_incumbent = Incumbent {
            point: point.clone(),
            eval: eval.clone(),
            h,
        };
        if eval.f < inc_f {
            // Dominates the infeasible incumbent.
            self.best_infeasible = Some(new_incumbent);
            self.h_max = h;
            SuccessKind::FullSuccess
        } else {
            // Smaller violation at a worse objective: accept the point as the
            // new infeasible incumbent and tighten the budget to the largest
            // violation seen strictly below the previous incumbent's.
            self.h_max = self
                .seen_h
                .iter()
                .copied()
                .filter(|v| *v < inc_h)
                .fold(f64::NEG_INFINITY, f64::max);
            debug_assert!(self.h_max >= h, "the new incumbent itself qualifies");
            self.best_infeasible = Some(new_incumbent);
            SuccessKind::PartialSuccess
        }
    }
}
