//! Blackbox outputs and the evaluator abstraction.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::point::Point;
use crate::problem::OutputKind;

/// Outcome status of a single blackbox call.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum EvalStatus {
    Ok,
    Failed,
}

/// The recorded result of evaluating one point.
///
/// `f` is the objective and `c` the constraint values in declaration order.
/// A failed evaluation carries `f = +inf` and `c = +inf` so that it compares
/// worse than any successful evaluation under both the objective and every
/// constraint-violation measure.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    #[serde(with = "crate::floats::total")]
    pub f: f64,
    #[serde(with = "crate::floats::total_vec")]
    pub c: Vec<f64>,
    pub status: EvalStatus,
}

impl Evaluation {
    /// A successful evaluation. NaN outputs are treated as `+inf`: they carry
    /// no ordering information and must not poison comparisons.
    pub fn ok(f: f64, c: Vec<f64>) -> Self {
        let sanitize = |v: f64| if v.is_nan() { f64::INFINITY } else { v };
        Evaluation {
            f: sanitize(f),
            c: c.into_iter().map(sanitize).collect(),
            status: EvalStatus::Ok,
        }
    }

    /// A failed evaluation of a problem with `m` constraints.
    pub fn failed(m: usize) -> Self {
        Evaluation {
            f: f64::INFINITY,
            c: vec![f64::INFINITY; m],
            status: EvalStatus::Failed,
        }
    }

    pub fn is_ok(&self) -> bool {
        self.status == EvalStatus::Ok
    }

    /// Maps raw blackbox outputs onto (objective, constraints) according to
    /// the declared output kinds. `None` or a length mismatch yields a failed
    /// evaluation.
    pub fn from_raw(raw: Option<Vec<f64>>, kinds: &[OutputKind]) -> Self {
        let m = kinds.iter().filter(|k| **k != OutputKind::Obj).count();
        let Some(values) = raw else {
            return Evaluation::failed(m);
        };
        if values.len() != kinds.len() {
            return Evaluation::failed(m);
        }
        let mut f = f64::INFINITY;
        let mut c = Vec::with_capacity(m);
        for (kind, value) in kinds.iter().zip(values) {
            match kind {
                OutputKind::Obj => f = value,
                OutputKind::Pb | OutputKind::Eb => c.push(value),
            }
        }
        Evaluation::ok(f, c)
    }
}

/// A blackbox: something that maps a point to raw output values.
///
/// Implementations return the outputs in the order declared by the problem's
/// output kinds, or `None` to signal an evaluation failure (crashed
/// simulation, unparsable output, ...). Panics inside an implementation are
/// caught by the evaluation engine and likewise recorded as failures.
pub trait Blackbox: Send + Sync {
    fn eval_raw(&self, x: &Point) -> Option<Vec<f64>>;

    /// Evaluates a group of points in one call. The default forwards to
    /// [`Blackbox::eval_raw`] point by point; batching evaluators (e.g. an
    /// external process fed several lines at once) override this.
    fn eval_batch(&self, xs: &[Point]) -> Vec<Option<Vec<f64>>> {
        xs.iter().map(|x| self.eval_raw(x)).collect()
    }
}

/// Wraps a plain closure as a [`Blackbox`].
pub struct FnBlackbox<F> {
    func: F,
}

impl<F> FnBlackbox<F>
where
    F: Fn(&[f64]) -> Vec<f64> + Send + Sync,
{
    pub fn new(func: F) -> Self {
        FnBlackbox { func }
    }
}

impl<F> Blackbox for FnBlackbox<F>
where
    F: Fn(&[f64]) -> Vec<f64> + Send + Sync,
{
    fn eval_raw(&self, x: &Point) -> Option<Vec<f64>> {
        Some((self.func)(x.as_slice()))
    }
}

/// Convenience constructor for unconstrained problems: a single objective
/// output computed by `f`.
pub fn objective_blackbox<F>(f: F) -> Arc<dyn Blackbox>
where
    F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
{
    Arc::new(FnBlackbox::new(move |x: &[f64]| vec![f(x)]))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn failed_evaluation_is_all_infinite() {
        let e = Evaluation::failed(3);
        assert_eq!(e.f, f64::INFINITY);
        assert_eq!(e.c, vec![f64::INFINITY; 3]);
        assert!(!e.is_ok());
    }

    #[test]
    fn nan_outputs_become_infinite() {
        let e = Evaluation::ok(f64::NAN, vec![1.0, f64::NAN]);
        assert_eq!(e.f, f64::INFINITY);
        assert_eq!(e.c, vec![1.0, f64::INFINITY]);
        assert!(e.is_ok());
    }

    #[test]
    fn raw_outputs_follow_declared_kinds() {
        use OutputKind::*;
        // Objective sandwiched between two constraints.
        let kinds = [Pb, Obj, Eb];
        let e = Evaluation::from_raw(Some(vec![-1.0, 3.5, 0.25]), &kinds);
        assert_eq!(e.f, 3.5);
        assert_eq!(e.c, vec![-1.0, 0.25]);

        // Wrong arity is a failure, not a panic.
        let e = Evaluation::from_raw(Some(vec![1.0]), &kinds);
        assert_eq!(e.status, EvalStatus::Failed);
        assert_eq!(e.c.len(), 2);
    }
}
