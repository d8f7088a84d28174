//! Capturing solver runs for later aggregation.

use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use mads::psd::{PsdMads, PsdParams};
use mads::{Blackbox, FnBlackbox, HistoryRecord, Mads, Params, StopReason};

use crate::problems::BenchProblem;

/// One solver run on one problem with one seed, reduced to the numbers the
/// profiles and plots consume.
#[derive(Clone, Debug)]
pub struct RunRecord {
    pub problem: String,
    pub solver: String,
    pub seed: u64,
    /// `(eval_index, best feasible objective so far)` per evaluation, in
    /// completion order. The second component is `+inf` until the run sees
    /// its first feasible point, and non-increasing afterwards.
    pub steps: Vec<(usize, f64)>,
    /// Wall time of each blackbox call, in call order. With several workers
    /// this order may differ from `steps`; the multiset is what matters.
    pub wall_times: Vec<Duration>,
    pub stop: StopReason,
}

impl RunRecord {
    /// Best value after the final evaluation.
    pub fn final_best(&self) -> f64 {
        self.steps.last().map_or(f64::INFINITY, |s| s.1)
    }

    /// Best value once `evals` evaluations have completed, carrying the last
    /// known value forward past the end of the run.
    pub fn best_at(&self, evals: usize) -> f64 {
        self.steps
            .iter()
            .take_while(|(i, _)| *i <= evals)
            .last()
            .map_or(f64::INFINITY, |s| s.1)
    }

    /// The first finite best-so-far value — the baseline `f(x⁰)` for
    /// convergence tests. `None` when the run never found a feasible point.
    pub fn baseline(&self) -> Option<f64> {
        self.steps.iter().map(|s| s.1).find(|f| f.is_finite())
    }
}

fn steps_of(history: &[HistoryRecord]) -> Vec<(usize, f64)> {
    history.iter().map(|r| (r.eval_index, r.best_f)).collect()
}

/// Wraps the problem's closure so each call's duration lands in a shared log.
fn timed_blackbox(bp: &BenchProblem) -> (Arc<dyn Blackbox>, Arc<Mutex<Vec<Duration>>>) {
    let times = Arc::new(Mutex::new(Vec::new()));
    let sink = Arc::clone(&times);
    let inner = bp.eval_fn();
    let blackbox = Arc::new(FnBlackbox::new(move |x: &[f64]| {
        let t0 = Instant::now();
        let out = inner(x);
        sink.lock().unwrap().push(t0.elapsed());
        out
    }));
    (blackbox, times)
}

/// Runs plain Mads on a benchmark problem and records the trajectory. The
/// seed is taken from `params.seed`.
pub fn run_mads(bp: &BenchProblem, params: Params, solver: &str) -> RunRecord {
    let (blackbox, times) = timed_blackbox(bp);
    let problem = bp.problem_with(blackbox);
    let seed = params.seed;
    let outcome = Mads::new(problem, params)
        .expect("benchmark configuration is valid")
        .run()
        .expect("benchmark run completes");
    let wall_times = std::mem::take(&mut *times.lock().unwrap());
    RunRecord {
        problem: bp.name.clone(),
        solver: solver.to_owned(),
        seed,
        steps: steps_of(&outcome.history),
        wall_times,
        stop: outcome.stop,
    }
}

/// Runs the parallel space decomposition solver and records the trajectory.
pub fn run_psd(bp: &BenchProblem, params: Params, psd: PsdParams, solver: &str) -> RunRecord {
    let (blackbox, times) = timed_blackbox(bp);
    let problem = bp.problem_with(blackbox);
    let seed = params.seed;
    let outcome = PsdMads::new(problem, params, psd)
        .expect("benchmark configuration is valid")
        .run()
        .expect("benchmark run completes");
    let wall_times = std::mem::take(&mut *times.lock().unwrap());
    RunRecord {
        problem: bp.name.clone(),
        solver: solver.to_owned(),
        seed,
        steps: steps_of(&outcome.history),
        wall_times,
        stop: outcome.stop,
    }
}
