//! Built-in analytic test problems.
//!
//! Every problem here is deterministic and side-effect free, so benchmark
//! runs are reproducible down to the bit. The bundled set covers the shapes
//! a direct-search solver has to cope with: smooth bowls, curved valleys,
//! nonlinear inequality constraints with infeasible starting points, and a
//! narrow feasible band. Anything beyond the bundled set can be supplied
//! through [`BenchProblem::new`] — the runner does not care where a problem
//! came from.

use std::sync::Arc;
use std::time::Duration;

use mads::{Blackbox, FnBlackbox, OutputKind, Problem, ValidatedProblem};

type EvalFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

/// An analytic problem plus the metadata the benchmark harness needs.
#[derive(Clone)]
pub struct BenchProblem {
    pub name: String,
    pub n: usize,
    /// Output layout; first entry is the objective.
    pub output_kinds: Vec<OutputKind>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub x0: Vec<f64>,
    /// Best objective value known analytically, when there is one.
    pub known_best: Option<f64>,
    eval: EvalFn,
}

impl BenchProblem {
    pub fn new<F>(name: &str, n: usize, output_kinds: Vec<OutputKind>, eval: F) -> BenchProblem
    where
        F: Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    {
        BenchProblem {
            name: name.to_owned(),
            n,
            output_kinds,
            lower: vec![f64::NEG_INFINITY; n],
            upper: vec![f64::INFINITY; n],
            x0: vec![0.0; n],
            known_best: None,
            eval: Arc::new(eval),
        }
    }

    pub fn with_bounds(mut self, lower: Vec<f64>, upper: Vec<f64>) -> Self {
        self.lower = lower;
        self.upper = upper;
        self
    }

    pub fn with_x0(mut self, x0: Vec<f64>) -> Self {
        self.x0 = x0;
        self
    }

    pub fn with_known_best(mut self, f: f64) -> Self {
        self.known_best = Some(f);
        self
    }

    /// Number of constraint outputs.
    pub fn m(&self) -> usize {
        self.output_kinds.len() - 1
    }

    /// Raw outputs at `x`, in `output_kinds` order.
    pub fn values(&self, x: &[f64]) -> Vec<f64> {
        (self.eval)(x)
    }

    /// The evaluation closure, for callers that want to wrap it.
    pub fn eval_fn(&self) -> EvalFn {
        Arc::clone(&self.eval)
    }

    /// Builds the solver-facing problem description.
    pub fn problem(&self) -> ValidatedProblem {
        let eval = Arc::clone(&self.eval);
        self.problem_with(Arc::new(FnBlackbox::new(move |x: &[f64]| eval(x))))
    }

    /// Like [`BenchProblem::problem`] but with a caller-supplied blackbox
    /// (typically this problem's closure wrapped with timing or delays).
    pub fn problem_with(&self, blackbox: Arc<dyn Blackbox>) -> ValidatedProblem {
        Problem::new(self.n, self.output_kinds.clone(), blackbox)
            .with_bounds(self.lower.clone(), self.upper.clone())
            .with_x0(self.x0.clone())
            .validate()
            .expect("built-in problems are well-formed")
    }
}

impl std::fmt::Debug for BenchProblem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BenchProblem")
            .field("name", &self.name)
            .field("n", &self.n)
            .field("output_kinds", &self.output_kinds)
            .field("known_best", &self.known_best)
            .finish_non_exhaustive()
    }
}

/// `f(x) = Σ xᵢ²`; minimum 0 at the origin.
pub fn sphere(n: usize) -> BenchProblem {
    BenchProblem::new(&format!("SPHERE{n}"), n, vec![OutputKind::Obj], |x| {
        vec![x.iter().map(|v| v * v).sum()]
    })
    .with_bounds(vec![-10.0; n], vec![10.0; n])
    .with_x0(vec![3.0; n])
    .with_known_best(0.0)
}

/// A smooth 10-dimensional quartic, `f(x) = Σ i·xᵢ⁴`; minimum 0 at the
/// origin. Steeper than the sphere in later coordinates, so poll orderings
/// that exploit past successes show up clearly on it.
pub fn quartic10() -> BenchProblem {
    BenchProblem::new("QUARTIC10", 10, vec![OutputKind::Obj], |x| {
        vec![x
            .iter()
            .enumerate()
            .map(|(i, v)| (i + 1) as f64 * v.powi(4))
            .sum()]
    })
    .with_bounds(vec![-4.0; 10], vec![4.0; 10])
    .with_x0(vec![2.0; 10])
    .with_known_best(0.0)
}

/// The extended Rosenbrock function,
/// `Σ_{i=1}^{n−1} 100(x_{i+1} − xᵢ²)² + (1 − xᵢ)²`. Requires `x.len() ≥ 2`.
pub fn rosenbrock(x: &[f64]) -> f64 {
    assert!(x.len() >= 2, "rosenbrock needs at least two variables");
    x.windows(2)
        .map(|w| 100.0 * (w[1] - w[0] * w[0]).powi(2) + (1.0 - w[0]).powi(2))
        .sum()
}

/// Bound-constrained extended Rosenbrock in dimension `n`: bounds
/// `[−10, 10]ⁿ`, every starting coordinate 0.5, minimum 0 at `(1, …, 1)`.
pub fn make_srosenbr(n: usize) -> BenchProblem {
    BenchProblem::new(&format!("SROSENBR{n}"), n, vec![OutputKind::Obj], |x| {
        vec![rosenbrock(x)]
    })
    .with_bounds(vec![-10.0; n], vec![10.0; n])
    .with_x0(vec![0.5; n])
    .with_known_best(0.0)
}

/// Crescent-shaped feasible region between two offset spheres in 10
/// variables: `Σ(xᵢ−1)² ≤ 9` and `Σ(xᵢ+1)² ≥ 9`, objective `x₁₀`. The
/// origin starts infeasible (it violates the first constraint by 1), and the
/// minimum sits on the inner sphere at `(1, …, 1, −2)` with `f = −2`.
pub fn crescent() -> BenchProblem {
    BenchProblem::new(
        "CRESCENT",
        10,
        vec![OutputKind::Obj, OutputKind::Pb, OutputKind::Pb],
        |x| {
            let inner: f64 = x.iter().map(|v| (v - 1.0) * (v - 1.0)).sum();
            let outer: f64 = x.iter().map(|v| (v + 1.0) * (v + 1.0)).sum();
            vec![x[9], inner - 9.0, 9.0 - outer]
        },
    )
    .with_known_best(-2.0)
}

/// Minimize the last coordinate inside the radius-3 ball in 10 variables.
/// The all-ones start is just outside the ball, so the solver has to recover
/// feasibility before it can make progress; minimum `−3` at
/// `(0, …, 0, −3)`.
pub fn disk() -> BenchProblem {
    BenchProblem::new(
        "DISK",
        10,
        vec![OutputKind::Obj, OutputKind::Pb],
        |x| {
            let norm2: f64 = x.iter().map(|v| v * v).sum();
            vec![x[9], norm2 - 9.0]
        },
    )
    .with_x0(vec![1.0; 10])
    .with_known_best(-3.0)
}

/// A two-variable problem whose feasible set is the thin sinusoidal band
/// `sin x₁ ≤ x₂ ≤ sin x₁ + 0.1`. The objective pulls toward `(6, sin 6)`,
/// which lies on the lower edge of the band; the start `(0, 0.5)` sits above
/// the band and is infeasible.
pub fn snake() -> BenchProblem {
    BenchProblem::new(
        "SNAKE",
        2,
        vec![OutputKind::Obj, OutputKind::Pb, OutputKind::Pb],
        |x| {
            let f = (x[0] - 6.0).powi(2) + (x[1] - 6.0_f64.sin()).powi(2);
            vec![f, x[0].sin() - x[1], x[1] - x[0].sin() - 0.1]
        },
    )
    .with_x0(vec![0.0, 0.5])
    .with_known_best(0.0)
}

/// Spread three planar points inside a regular pentagon: maximize the
/// smallest pairwise distance (encoded as minimizing its negative). The six
/// variables are the points' coordinates and the 15 constraints keep each
/// point on the half-plane side of each pentagon edge.
pub fn pentagon() -> BenchProblem {
    let mut kinds = vec![OutputKind::Obj];
    kinds.extend(std::iter::repeat(OutputKind::Pb).take(15));
    BenchProblem::new("PENTAGON", 6, kinds, |x| {
        let pts = [(x[0], x[1]), (x[2], x[3]), (x[4], x[5])];
        let dist = |a: (f64, f64), b: (f64, f64)| ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt();
        let closest = dist(pts[0], pts[1])
            .min(dist(pts[1], pts[2]))
            .min(dist(pts[0], pts[2]));
        let mut out = Vec::with_capacity(16);
        out.push(-closest);
        let edge = (std::f64::consts::PI / 5.0).cos();
        for p in pts {
            for k in 0..5 {
                let theta = 2.0 * std::f64::consts::PI * k as f64 / 5.0;
                out.push(p.0 * theta.cos() + p.1 * theta.sin() - edge);
            }
        }
        out
    })
    .with_x0(vec![0.0, 0.0, 0.5, 0.0, 0.0, 0.5])
}

/// Wraps a problem so every evaluation additionally sleeps for `delay`.
/// Values are identical to the base problem; only wall-clock time changes.
/// This stands in for expensive simulations in speedup studies.
pub fn synthetic_slow_blackbox(base: &BenchProblem, delay: Duration) -> BenchProblem {
    let inner = base.eval_fn();
    BenchProblem {
        name: base.name.clone(),
        n: base.n,
        output_kinds: base.output_kinds.clone(),
        lower: base.lower.clone(),
        upper: base.upper.clone(),
        x0: base.x0.clone(),
        known_best: base.known_best,
        eval: Arc::new(move |x: &[f64]| {
            std::thread::sleep(delay);
            inner(x)
        }),
    }
}

/// The bundled suite, in a stable order.
pub fn bundled() -> Vec<BenchProblem> {
    vec![
        sphere(2),
        sphere(5),
        sphere(10),
        quartic10(),
        make_srosenbr(2),
        make_srosenbr(50),
        make_srosenbr(250),
        crescent(),
        disk(),
        snake(),
        pentagon(),
    ]
}
