//! Parallel space decomposition.
//!
//! Large problems are attacked by a crowd of small solvers: lane 0, the
//! *pollster*, polls the full space one evaluation at a time to retain the
//! convergence guarantees, while the remaining lanes run short sessions on
//! random low-dimensional subproblems with every other variable frozen at
//! the incumbent. All lanes share one cache, one history, and one budget, so
//! nothing is ever evaluated twice and progress by any lane is visible to
//! all the others as soon as its session reports in.
//!
//! A master mesh ties the lanes together. Each session inherits its frame
//! from the master, and the master itself enlarges or refines only once
//! enough variables have been covered by worker subproblems since the last
//! update — a full-space notion of "this frame size has been given a fair
//! chance".

use std::collections::HashSet;
use std::sync::atomic::Ordering as AtomicOrdering;
use std::sync::{Arc, Mutex};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::barrier::{BarrierState, Incumbent, SuccessKind};
use crate::cache::{Cache, Claim};
use crate::engine::{Engine, HistoryRecord, RunContext, StopReason};
use crate::evaluation::{Blackbox, Evaluation};
use crate::mads::Mads;
use crate::mesh::MeshState;
use crate::params::{Params, ParamsError};
use crate::point::Point;
use crate::problem::{OutputKind, Problem, ValidatedProblem};
use crate::queue::EvalQueue;
use crate::trial::{Generator, TrialPoint};

/// Decomposition-specific knobs on top of the base [`Params`].
#[derive(Clone, Debug)]
pub struct PsdParams {
    /// Subproblem dimension for worker lanes.
    pub n_s: usize,
    /// Main lanes: lane 0 is the pollster, lanes `1..n_mt` are workers.
    pub n_mt: usize,
    /// Master mesh update waits until this many distinct variables have been
    /// explored by worker sessions. Defaults to `n`: every variable gets a
    /// look before the frame size is judged.
    pub coverage_threshold: usize,
    /// Fresh-evaluation budget of one worker session.
    pub worker_budget: usize,
}

impl PsdParams {
    pub fn default_for(problem: &Problem) -> PsdParams {
        PsdParams {
            n_s: 2.min(problem.n),
            n_mt: 4,
            coverage_threshold: problem.n,
            worker_budget: 40,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum PsdError {
    #[error(transparent)]
    InvalidParams(#[from] ParamsError),
    #[error("no usable starting point: every initial evaluation failed or was infeasible under the extreme barrier")]
    NoEvaluableStart,
}

/// A worker lane's slice of the space.
#[derive(Clone, Debug)]
pub struct SubspaceAssignment {
    /// Distinct variable indices, in increasing order.
    pub indices: Vec<usize>,
    /// Full-space point supplying the frozen complement coordinates.
    pub fixed: Point,
}

/// Draws `n_s` distinct variable indices uniformly at random; the complement
/// stays frozen at the incumbent.
pub fn select_subspace(
    rng: &mut ChaCha8Rng,
    n: usize,
    n_s: usize,
    incumbent: &Point,
) -> SubspaceAssignment {
    assert!(n_s >= 1 && n_s <= n, "subspace dimension out of range");
    let mut indices = rand::seq::index::sample(rng, n, n_s).into_vec();
    indices.sort_unstable();
    SubspaceAssignment {
        indices,
        fixed: incumbent.clone(),
    }
}

/// Embeds a subproblem point into the full space.
fn lift_point(sub: &[f64], indices: &[usize], fixed: &Point) -> Point {
    let mut coords = fixed.as_slice().to_vec();
    for (j, &i) in indices.iter().enumerate() {
        coords[i] = sub[j];
    }
    Point::new(coords)
}

/// Rebuilds the raw output vector a cached evaluation came from.
fn raw_from_eval(eval: &Evaluation, kinds: &[OutputKind]) -> Option<Vec<f64>> {
    if !eval.is_ok() {
        return None;
    }
    let mut c_slot = 0;
    Some(
        kinds
            .iter()
            .map(|k| match k {
                OutputKind::Obj => eval.f,
                _ => {
                    let v = eval.c[c_slot];
                    c_slot += 1;
                    v
                }
            })
            .collect(),
    )
}

/// The blackbox a worker session sees: sub-dimensional in, full-space out.
///
/// Every call lifts the point into the full space and arbitrates through the
/// shared cache, so concurrent lanes converging on one full-space point
/// resolve to a single real evaluation. A shared-cache hit refunds the
/// budget slot the calling engine had already acquired.
struct LiftedBlackbox {
    inner: Arc<dyn Blackbox>,
    indices: Vec<usize>,
    fixed: Point,
    kinds: Vec<OutputKind>,
    shared: Arc<Cache>,
    counter: Arc<crate::engine::EvalCounter>,
}

impl Blackbox for LiftedBlackbox {
    fn eval_raw(&self, x: &Point) -> Option<Vec<f64>> {
        let full = lift_point(x.as_slice(), &self.indices, &self.fixed);
        loop {
            match self.shared.claim(&full) {
                Claim::Known(eval) => {
                    self.counter.release(1);
                    return raw_from_eval(&eval, &self.kinds);
                }
                Claim::InFlight => {
                    std::thread::sleep(std::time::Duration::from_millis(1));
                }
                Claim::Fresh => {
                    let inner = &self.inner;
                    let raw = std::panic::catch_unwind(std::panic::AssertUnwindSafe(|| {
                        inner.eval_raw(&full)
                    }))
                    .unwrap_or(None);
                    let eval = Evaluation::from_raw(raw.clone(), &self.kinds);
                    self.shared.fulfill(&full, eval);
                    return raw;
                }
            }
        }
    }
}

/// What one lane session hands back to the coordinator.
struct SessionReport {
    /// Variables this session explored (empty for the pollster).
    indices: Vec<usize>,
    best_feasible: Option<Incumbent>,
    best_infeasible: Option<Incumbent>,
}

impl SessionReport {
    fn empty() -> Self {
        SessionReport {
            indices: Vec::new(),
            best_feasible: None,
            best_infeasible: None,
        }
    }
}

/// Per-lane, per-session seed: decorrelates lanes while keeping each one
/// reproducible. SplitMix-style finalizer.
pub(crate) fn lane_seed(seed: u64, lane: usize, session: usize) -> u64 {
    let mut z = seed
        ^ (lane as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
        ^ (session as u64).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Parameters for one lane session derived from the master state.
fn lane_params(base: &Params, seed: u64, budget: usize, delta: f64, tolerance: f64) -> Params {
    let mut p = base.clone();
    p.delta0 = delta;
    p.eps_stop = tolerance;
    p.max_bb_eval = budget;
    p.max_iterations = None;
    p.seed = seed;
    p.n_workers = 1;
    p.mega_search_poll = false;
    p
}

/// One worker session: a short solve of a random subproblem.
fn worker_session(
    problem: &ValidatedProblem,
    base: &Params,
    psd: &PsdParams,
    global: &RunContext,
    frame: (f64, f64),
    incumbent: &Incumbent,
    lane: usize,
    session: usize,
) -> SessionReport {
    let seed = lane_seed(base.seed, lane, session);
    // The subspace draw gets its own stream so the inner solver's stream
    // starts exactly at `seed` — a full-dimensional worker session is then
    // step-for-step a plain solve with that seed.
    let mut pick_rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5u64.wrapping_mul(0xA076_1D64_78BD_642F));
    let assignment = select_subspace(&mut pick_rng, problem.n, psd.n_s, &incumbent.point);

    let sub_lower: Vec<f64> = assignment.indices.iter().map(|&i| problem.lower[i]).collect();
    let sub_upper: Vec<f64> = assignment.indices.iter().map(|&i| problem.upper[i]).collect();
    let sub_x0: Vec<f64> = assignment
        .indices
        .iter()
        .map(|&i| incumbent.point[i])
        .collect();

    let lifted = LiftedBlackbox {
        inner: problem.blackbox.clone(),
        indices: assignment.indices.clone(),
        fixed: assignment.fixed.clone(),
        kinds: problem.output_kinds.clone(),
        shared: Arc::clone(&global.cache),
        counter: Arc::clone(&global.evals),
    };
    let sub_problem = Problem::new(psd.n_s, problem.output_kinds.clone(), Arc::new(lifted))
        .with_bounds(sub_lower, sub_upper)
        .with_x0(sub_x0.clone())
        .validate();
    let Ok(sub_problem) = sub_problem else {
        return SessionReport::empty();
    };

    let (big_delta, delta) = frame;
    let params = lane_params(base, seed, psd.worker_budget, big_delta, delta);
    // Private point cache (sub-dimensional keys), shared everything else.
    // The incumbent slice is preloaded so the session's start costs nothing.
    let private = Cache::new();
    private.preload([(Point::new(sub_x0), incumbent.eval.clone())]);
    let ctx = RunContext {
        cache: Arc::new(private),
        history: Arc::clone(&global.history),
        evals: Arc::clone(&global.evals),
        interrupt: Arc::clone(&global.interrupt),
    };
    let Ok(mut solver) = Mads::with_context(sub_problem, params, ctx) else {
        return SessionReport::empty();
    };
    solver.state_mut().frame_cap = Some(big_delta);
    solver.state_mut().generator_label = Some(Generator::PsdWorker);
    let Ok(outcome) = solver.run() else {
        return SessionReport::empty();
    };

    let lift_incumbent = |inc: Incumbent| Incumbent {
        point: lift_point(inc.point.as_slice(), &assignment.indices, &assignment.fixed),
        eval: inc.eval,
        h: inc.h,
    };
    let best_feasible = outcome.best_feasible.map(&lift_incumbent);
    let best_infeasible = outcome.best_infeasible.map(&lift_incumbent);
    SessionReport {
        indices: assignment.indices,
        best_feasible,
        best_infeasible,
    }
}

/// One pollster session: a single rigorous full-space poll evaluation.
fn pollster_session(
    problem: &ValidatedProblem,
    base: &Params,
    global: &RunContext,
    frame: (f64, f64),
    incumbent: &Incumbent,
    session: usize,
) -> SessionReport {
    let seed = lane_seed(base.seed, 0, session);
    let (big_delta, delta) = frame;
    let mut params = lane_params(base, seed, 1, big_delta, delta);
    params.searches = crate::params::Searches::none();

    let full_problem = Problem::new(problem.n, problem.output_kinds.clone(), problem.blackbox.clone())
        .with_bounds(problem.lower.clone(), problem.upper.clone())
        .with_x0(incumbent.point.as_slice().to_vec())
        .validate();
    let Ok(full_problem) = full_problem else {
        return SessionReport::empty();
    };

    // The pollster works directly against the shared cache: its start point
    // is the incumbent, already evaluated, so the single budget unit goes to
    // one fresh poll point.
    let Ok(mut solver) = Mads::with_context(full_problem, params, global.clone()) else {
        return SessionReport::empty();
    };
    solver.state_mut().frame_cap = Some(big_delta);
    solver.state_mut().generator_label = Some(Generator::PsdPollster);
    let Ok(outcome) = solver.run() else {
        return SessionReport::empty();
    };
    SessionReport {
        indices: Vec::new(),
        best_feasible: outcome.best_feasible,
        best_infeasible: outcome.best_infeasible,
    }
}

/// Coordinator state shared by all lanes.
struct Master {
    mesh: MeshState,
    barrier: BarrierState,
    coverage: HashSet<usize>,
    full_success_since_update: bool,
}

/// Outcome of a decomposition run.
#[derive(Clone, Debug)]
pub struct PsdOutcome {
    pub best_feasible: Option<Incumbent>,
    pub best_infeasible: Option<Incumbent>,
    pub stop: StopReason,
    /// Fresh blackbox evaluations across all lanes.
    pub evaluations: usize,
    pub history: Vec<HistoryRecord>,
}

/// The decomposition solver.
pub struct PsdMads {
    problem: ValidatedProblem,
    params: Params,
    psd: PsdParams,
    ctx: RunContext,
}

impl PsdMads {
    pub fn new(
        problem: ValidatedProblem,
        params: Params,
        psd: PsdParams,
    ) -> Result<PsdMads, PsdError> {
        let ctx = RunContext::new(params.max_bb_eval);
        PsdMads::with_context(problem, params, psd, ctx)
    }

    /// A decomposition solver over an externally owned context, so callers
    /// can pre-seed the cache or share the interrupt flag.
    pub fn with_context(
        problem: ValidatedProblem,
        params: Params,
        psd: PsdParams,
        ctx: RunContext,
    ) -> Result<PsdMads, PsdError> {
        params.validate()?;
        if psd.n_s < 1 || psd.n_s > problem.n {
            return Err(ParamsError::InvalidParams {
                what: format!(
                    "subspace dimension {} out of range for n = {}",
                    psd.n_s, problem.n
                ),
            }
            .into());
        }
        if psd.n_mt < 2 {
            return Err(ParamsError::InvalidParams {
                what: "decomposition needs at least 2 lanes (pollster + 1 worker)".into(),
            }
            .into());
        }
        if psd.worker_budget == 0 || psd.coverage_threshold == 0 {
            return Err(ParamsError::InvalidParams {
                what: "worker budget and coverage threshold must be positive".into(),
            }
            .into());
        }
        Ok(PsdMads {
            problem,
            params,
            psd,
            ctx,
        })
    }

    /// The shared context (cache, history, budget, interrupt flag).
    pub fn context(&self) -> &RunContext {
        &self.ctx
    }

    pub fn run(self) -> Result<PsdOutcome, PsdError> {
        let PsdMads {
            problem,
            params,
            psd,
            ctx,
        } = self;

        // Evaluate the starting points into the shared structures.
        let mut barrier = BarrierState::new(params.barrier, problem.output_kinds.clone());
        let mesh0 = MeshState::new(problem.x0[0].clone(), params.delta0, params.tau)
            .map_err(|e| ParamsError::InvalidParams {
                what: e.to_string(),
            })?;
        let mut queue = EvalQueue::new(params.ordering, params.seed);
        for p in problem.x0.clone() {
            queue.push(
                TrialPoint::new(p, Generator::Initial).with_mesh(mesh0.clone()),
                &ctx.cache,
            );
        }
        let engine = Engine {
            ctx: ctx.clone(),
            blackbox: problem.blackbox.clone(),
            output_kinds: problem.output_kinds.clone(),
            n_workers: 1,
            opportunism: false,
            group_max_size: params.group_max_size,
            relabel: None,
        };
        engine.run_queue(&mut queue, &mut barrier, params.max_bb_eval, None);
        let Some(first) = barrier.frame_center().cloned() else {
            return Err(PsdError::NoEvaluableStart);
        };

        let mut mesh = mesh0;
        mesh.recenter(first.point.clone());
        let master = Mutex::new(Master {
            mesh,
            barrier,
            coverage: HashSet::new(),
            full_success_since_update: false,
        });

        let eps_stop = params.eps_stop;
        std::thread::scope(|scope| {
            for lane in 0..psd.n_mt {
                let master = &master;
                let problem = &problem;
                let params = &params;
                let psd = &psd;
                let ctx = &ctx;
                scope.spawn(move || {
                    let mut session = 0usize;
                    loop {
                        let (frame, incumbent) = {
                            let m = master.lock().unwrap();
                            if m.mesh.big_delta() < eps_stop {
                                break;
                            }
                            if ctx.evals.exhausted()
                                || ctx.interrupt.load(AtomicOrdering::SeqCst)
                            {
                                break;
                            }
                            (
                                (m.mesh.big_delta(), m.mesh.delta()),
                                m.barrier
                                    .frame_center()
                                    .cloned()
                                    .expect("initialization established an incumbent"),
                            )
                        };
                        let report = if lane == 0 {
                            pollster_session(problem, params, ctx, frame, &incumbent, session)
                        } else {
                            worker_session(
                                problem, params, psd, ctx, frame, &incumbent, lane, session,
                            )
                        };
                        integrate_report(master, psd, lane, report);
                        session += 1;
                    }
                });
            }
        });

        let master = master.into_inner().unwrap();
        let stop = if ctx.interrupt.load(AtomicOrdering::SeqCst) {
            StopReason::UserInterrupt
        } else if master.mesh.big_delta() < eps_stop {
            StopReason::MeshTolerance
        } else {
            StopReason::BudgetExhausted
        };
        Ok(PsdOutcome {
            best_feasible: master.barrier.best_feasible().cloned(),
            best_infeasible: master.barrier.best_infeasible().cloned(),
            stop,
            evaluations: ctx.evals.used(),
            history: ctx.history.snapshot(),
        })
    }
}

/// Folds a finished session into the master state; applies the delayed mesh
/// update once coverage reaches the threshold.
fn integrate_report(master: &Mutex<Master>, psd: &PsdParams, lane: usize, report: SessionReport) {
    let mut m = master.lock().unwrap();
    let mut any_full = false;
    for best in [&report.best_feasible, &report.best_infeasible] {
        if let Some(inc) = best {
            if m.barrier.classify(&inc.point, &inc.eval) == SuccessKind::FullSuccess {
                any_full = true;
            }
        }
    }
    m.full_success_since_update |= any_full;
    if lane > 0 {
        m.coverage.extend(report.indices.iter().copied());
    }
    if m.coverage.len() >= psd.coverage_threshold {
        if m.full_success_since_update {
            m.mesh.enlarge();
        } else {
            m.mesh.refine();
        }
        m.coverage.clear();
        m.full_success_since_update = false;
    }
    if let Some(inc) = m.barrier.frame_center() {
        let p = inc.point.clone();
        m.mesh.recenter(p);
    }
}
