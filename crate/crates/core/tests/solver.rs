//! End-to-end exercises of the public API, the way a library consumer would
//! drive it.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use mads::psd::{PsdMads, PsdParams};
use mads::{
    warm_restart, FnBlackbox, Mads, OutputKind, Params, Problem, StopReason, SuccessKind,
};

/// Minimize x₂ inside the unit disk, starting infeasible.
fn disk_problem() -> mads::ValidatedProblem {
    let blackbox = Arc::new(FnBlackbox::new(|x: &[f64]| {
        vec![x[1], x[0] * x[0] + x[1] * x[1] - 1.0]
    }));
    Problem::new(2, vec![OutputKind::Obj, OutputKind::Pb], blackbox)
        .with_x0(vec![1.0, 1.0])
        .validate()
        .unwrap()
}

#[test]
fn progressive_barrier_recovers_feasibility_and_descends() {
    let problem = disk_problem();
    let mut params = Params::default_for(&problem);
    params.max_bb_eval = 600;
    params.seed = 42;
    let outcome = Mads::new(problem, params).unwrap().run().unwrap();

    let best = outcome.best_feasible.expect("found a feasible point");
    assert_eq!(best.h, 0.0);
    // The constrained minimum is (0, −1); the solver should get close.
    assert!(best.eval.f < -0.9, "f = {}", best.eval.f);

    // The feasible-incumbent trace in the history never increases.
    let mut last = f64::INFINITY;
    for r in &outcome.history {
        assert!(r.best_f <= last);
        last = r.best_f;
    }
}

#[test]
fn extreme_barrier_never_admits_an_infeasible_incumbent() {
    let blackbox = Arc::new(FnBlackbox::new(|x: &[f64]| {
        vec![x[0] + x[1], -x[0], -x[1]]
    }));
    let problem = Problem::new(
        2,
        vec![OutputKind::Obj, OutputKind::Eb, OutputKind::Eb],
        blackbox,
    )
    .with_x0(vec![2.0, 2.0])
    .validate()
    .unwrap();
    let mut params = Params::default_for(&problem);
    params.max_bb_eval = 300;
    let outcome = Mads::new(problem, params).unwrap().run().unwrap();

    assert!(outcome.best_infeasible.is_none());
    let best = outcome.best_feasible.unwrap();
    assert!(best.point[0] >= 0.0 && best.point[1] >= 0.0);
    // Under the extreme barrier every history row is feasible or failed.
    for r in &outcome.history {
        assert!(r.h == 0.0 || !r.eval.is_ok() || r.h.is_infinite());
    }
}

#[test]
fn crashing_evaluations_are_recorded_as_failures_not_aborts() {
    let calls = Arc::new(AtomicUsize::new(0));
    let counter = Arc::clone(&calls);
    let blackbox = Arc::new(FnBlackbox::new(move |x: &[f64]| {
        // Every third call dies mid-evaluation.
        if counter.fetch_add(1, Ordering::SeqCst) % 3 == 2 {
            panic!("simulated evaluator crash");
        }
        vec![x.iter().map(|v| v * v).sum()]
    }));
    let problem = Problem::new(2, vec![OutputKind::Obj], blackbox)
        .with_x0(vec![4.0, -3.0])
        .validate()
        .unwrap();
    let mut params = Params::default_for(&problem);
    params.max_bb_eval = 150;
    let outcome = Mads::new(problem, params).unwrap().run().unwrap();

    let failures = outcome.history.iter().filter(|r| !r.eval.is_ok()).count();
    assert!(failures > 0, "the crash path was exercised");
    assert!(outcome.best_feasible.unwrap().eval.f < 1.0);
}

#[test]
fn stepping_api_exposes_solver_state_between_iterations() {
    let problem = disk_problem();
    let mut params = Params::default_for(&problem);
    params.max_bb_eval = 200;
    let mut solver = Mads::new(problem, params).unwrap();
    solver.initialize().unwrap();
    assert!(solver.barrier().frame_center().is_some());

    let mut frame_sizes = vec![solver.mesh().big_delta()];
    while solver.stopped().is_none() && solver.k() < 25 {
        solver.iterate().unwrap();
        frame_sizes.push(solver.mesh().big_delta());
        // The mesh law holds at every observable boundary.
        let m = solver.mesh();
        assert_eq!(m.delta(), m.big_delta().min(m.big_delta() * m.big_delta()));
        if solver.last_iteration_success() == SuccessKind::Failure {
            let len = frame_sizes.len();
            assert!(frame_sizes[len - 1] < frame_sizes[len - 2]);
        }
    }
    assert!(solver.evaluations() > 0);
}

#[test]
fn warm_restart_extends_a_budget_limited_run() {
    let problem = disk_problem();
    let mut params = Params::default_for(&problem);
    params.max_bb_eval = 50;
    params.seed = 9;
    let mut solver = Mads::new(problem, params.clone()).unwrap();
    solver.initialize().unwrap();
    while solver.stopped().is_none() {
        solver.iterate().unwrap();
    }
    assert_eq!(solver.stopped(), Some(StopReason::BudgetExhausted));
    let snapshot = solver.snapshot();
    let coarse = solver.into_outcome();

    let mut extended = params;
    extended.max_bb_eval = 400;
    let continued = warm_restart(snapshot, extended, disk_problem()).unwrap();
    let outcome = continued.run().unwrap();

    // The continuation spends only the difference…
    assert!(outcome.evaluations <= 400);
    // …and does at least as well as the truncated run.
    let before = coarse.best_feasible.map_or(f64::INFINITY, |b| b.eval.f);
    let after = outcome.best_feasible.map_or(f64::INFINITY, |b| b.eval.f);
    assert!(after <= before);
}

#[test]
fn decomposition_runs_through_the_public_surface() {
    let blackbox = Arc::new(FnBlackbox::new(|x: &[f64]| {
        vec![x.iter().map(|v| v * v).sum()]
    }));
    let problem = Problem::new(6, vec![OutputKind::Obj], blackbox)
        .with_bounds(vec![-5.0; 6], vec![5.0; 6])
        .with_x0(vec![4.0; 6])
        .validate()
        .unwrap();
    let mut params = Params::default_for(&problem);
    params.max_bb_eval = 600;
    params.seed = 5;
    let psd = PsdParams::default_for(&problem);
    let outcome = PsdMads::new(problem, params, psd).unwrap().run().unwrap();

    assert!(outcome.evaluations <= 600);
    let best = outcome.best_feasible.expect("sphere always has a center");
    assert!(best.eval.f < 96.0, "improved on f(x0): f = {}", best.eval.f);
}
