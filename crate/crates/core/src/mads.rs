//! The solver: initialization and the iteration loop.
//!
//! One iteration follows a fixed script. Update recenters the mesh on the
//! incumbent. Each enabled search then proposes trial points — cheap bets
//! with no convergence duty — and a full success among them ends the
//! iteration early. Otherwise the poll evaluates a positive spanning set of
//! frame points, the rigorous part that carries the convergence theory. The
//! frame then grows on a full success, shrinks on a failure, and holds on a
//! partial one.
//!
//! Everything is wired as [`Step`] components, so the pieces can be driven
//! one at a time (see [`Mads::initialize`] / [`Mads::iterate`]) or as a whole
//! run ([`Mads::run`]).

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::barrier::{BarrierState, Incumbent, SuccessKind};
use crate::engine::{Engine, HistoryRecord, RunContext, StopReason};
use crate::mesh::{clip_to_bounds, ortho_2n_directions, MeshState};
use crate::params::{Params, ParamsError};
use crate::problem::ValidatedProblem;
use crate::queue::EvalQueue;
use crate::search;
use crate::step::{run_step, Step, StepError};
use crate::trial::{Generator, TrialPoint};

/// Raised when no starting point yields an incumbent: every `x0` evaluation
/// failed, or none was feasible under the extreme barrier.
#[derive(Clone, Copy, Debug, thiserror::Error)]
#[error("no usable starting point: every initial evaluation failed or was infeasible under the extreme barrier")]
pub struct NoEvaluableStart;

/// Everything a run mutates, shared by all steps.
pub(crate) struct MadsState {
    pub(crate) problem: ValidatedProblem,
    pub(crate) params: Params,
    pub(crate) k: usize,
    pub(crate) mesh: MeshState,
    pub(crate) barrier: BarrierState,
    pub(crate) queue: EvalQueue,
    pub(crate) ctx: RunContext,
    pub(crate) rng: ChaCha8Rng,
    pub(crate) stop: Option<StopReason>,
    pub(crate) last_success_direction: Option<Vec<f64>>,
    /// Fresh blackbox calls made by this run (recalls excluded).
    pub(crate) local_evals: usize,
    /// Best success kind observed in the current iteration.
    pub(crate) iteration_success: SuccessKind,
    /// Upper bound on the frame size (decomposition lanes inherit the master
    /// frame); `None` for a standalone run.
    pub(crate) frame_cap: Option<f64>,
    /// Generator tag stamped on this run's history rows instead of the true
    /// per-step tag; decomposition lanes label themselves this way.
    pub(crate) generator_label: Option<Generator>,
}

impl MadsState {
    /// Queues trial points for evaluation. Points already in the cache are
    /// not re-queued (the queue refuses them); instead their stored outcome
    /// is folded into the barrier right here, at no budget cost. A run that
    /// starts from a preloaded cache therefore re-traces its recorded steps
    /// for free and only starts spending once it generates new ground.
    pub(crate) fn enqueue(&mut self, trials: Vec<TrialPoint>) {
        for t in trials {
            if let Some(eval) = self.ctx.cache.lookup(&t.point) {
                let success = self.barrier.classify(&t.point, &eval);
                self.note_success(success, &t);
            } else {
                self.queue.push(t, &self.ctx.cache);
            }
        }
    }

    fn note_success(&mut self, success: SuccessKind, trial: &TrialPoint) {
        if success > self.iteration_success {
            self.iteration_success = success;
        }
        if success == SuccessKind::FullSuccess {
            if let Some(snapshot) = &trial.mesh {
                let d = trial.point.sub(snapshot.center()).into_vec();
                if d.iter().any(|v| *v != 0.0) {
                    self.queue.set_last_success_direction(d.clone());
                    self.last_success_direction = Some(d);
                }
            }
        }
    }

    /// Runs the engine over the queued points and folds the results into the
    /// barrier, the success bookkeeping, and the budget accounting.
    pub(crate) fn dispatch(&mut self, iteration: Option<usize>, opportunism: bool) {
        // A full success absorbed from the cache ends the iteration the same
        // way an evaluated one would: under opportunism the rest of the queue
        // is dropped unevaluated.
        if opportunism && self.iteration_success == SuccessKind::FullSuccess {
            self.queue.clear();
            return;
        }
        let engine = Engine {
            ctx: self.ctx.clone(),
            blackbox: self.problem.blackbox.clone(),
            output_kinds: self.problem.output_kinds.clone(),
            n_workers: self.params.n_workers,
            opportunism,
            group_max_size: self.params.group_max_size,
            relabel: self.generator_label,
        };
        let session = self.params.max_bb_eval.saturating_sub(self.local_evals);
        let (results, reason) =
            engine.run_queue(&mut self.queue, &mut self.barrier, session, iteration);
        for r in results {
            if !r.recalled {
                self.local_evals += 1;
            }
            self.note_success(r.success, &r.trial);
        }
        match reason {
            // A denied fresh evaluation means some budget is spent for good;
            // stopping here saves the remaining steps pointless generation
            // work (the checks in `check_termination` would agree).
            StopReason::BudgetExhausted => self.stop = Some(StopReason::BudgetExhausted),
            StopReason::UserInterrupt => self.stop = Some(StopReason::UserInterrupt),
            _ => {}
        }
    }

    pub(crate) fn search_enabled(&self, generator: Generator) -> bool {
        let s = &self.params.searches;
        match generator {
            Generator::Speculative => s.speculative,
            Generator::LatinHypercube => s.latin_hypercube,
            Generator::NelderMead => s.nelder_mead,
            Generator::QuadModel => s.quad_model,
            _ => false,
        }
    }

    pub(crate) fn search_trials(&mut self, generator: Generator) -> Vec<TrialPoint> {
        let lower = &self.problem.lower;
        let upper = &self.problem.upper;
        match generator {
            Generator::Speculative => search::speculative_search_points(
                &self.mesh,
                self.last_success_direction.as_deref(),
                1,
                lower,
                upper,
            ),
            Generator::LatinHypercube => search::lh_search_trials(
                lower,
                upper,
                self.problem.n,
                &mut self.rng,
                &self.mesh,
            ),
            Generator::NelderMead => search::nm_search_points(
                &self.ctx.cache,
                &self.problem.output_kinds,
                &self.mesh,
                lower,
                upper,
            ),
            Generator::QuadModel => search::quad_model_search_points(
                &self.ctx.cache,
                &self.problem.output_kinds,
                &self.mesh,
                lower,
                upper,
                &mut self.rng,
            ),
            _ => Vec::new(),
        }
    }

    pub(crate) fn check_termination(&self) -> Option<StopReason> {
        if self
            .ctx
            .interrupt
            .load(std::sync::atomic::Ordering::SeqCst)
        {
            return Some(StopReason::UserInterrupt);
        }
        if self.ctx.evals.exhausted() || self.local_evals >= self.params.max_bb_eval {
            return Some(StopReason::BudgetExhausted);
        }
        if let Some(max_k) = self.params.max_iterations {
            if self.k >= max_k {
                return Some(StopReason::BudgetExhausted);
            }
        }
        if self.mesh.big_delta() < self.params.eps_stop {
            return Some(StopReason::MeshTolerance);
        }
        None
    }
}

/// Frame points along a positive spanning set of mesh directions.
pub(crate) fn poll_trials(state: &mut MadsState) -> Vec<TrialPoint> {
    let directions = ortho_2n_directions(&mut state.rng, &state.mesh);
    let mut out = Vec::new();
    for d in directions {
        let raw = state.mesh.point_from_direction(&d);
        let clipped = clip_to_bounds(&raw, &state.mesh, &state.problem.lower, &state.problem.upper);
        if let Some(p) = clipped {
            if p == *state.mesh.center() {
                continue; // clipped all the way back; nothing to try
            }
            let direction = p.sub(state.mesh.center()).into_vec();
            out.push(
                TrialPoint::new(p, Generator::Poll)
                    .with_direction(direction)
                    .with_mesh(state.mesh.clone()),
            );
        }
    }
    out
}

/// Evaluates the starting points and seeds the barrier.
struct Initialization;

impl Step<MadsState> for Initialization {
    fn name(&self) -> &'static str {
        "Initialization"
    }

    fn start(&mut self, s: &mut MadsState) -> Result<(), StepError> {
        let trials: Vec<TrialPoint> = s
            .problem
            .x0
            .clone()
            .into_iter()
            .map(|p| TrialPoint::new(p, Generator::Initial).with_mesh(s.mesh.clone()))
            .collect();
        s.enqueue(trials);
        Ok(())
    }

    fn run(&mut self, s: &mut MadsState) -> Result<(), StepError> {
        // Every provided start deserves a look: no opportunistic cutoff here.
        s.dispatch(None, false);
        Ok(())
    }

    fn end(&mut self, s: &mut MadsState) -> Result<(), StepError> {
        if s.barrier.frame_center().is_none() {
            return Err(StepError::new(NoEvaluableStart));
        }
        Ok(())
    }
}

/// Recenters the mesh on the incumbent and resets iteration bookkeeping.
struct Update;

impl Step<MadsState> for Update {
    fn name(&self) -> &'static str {
        "Update"
    }

    fn run(&mut self, s: &mut MadsState) -> Result<(), StepError> {
        let center = s
            .barrier
            .frame_center()
            .expect("initialization established an incumbent")
            .point
            .clone();
        s.mesh.recenter(center);
        s.iteration_success = SuccessKind::Failure;
        Ok(())
    }
}

/// One search method: generate in `start`, evaluate in `run`.
struct SearchStep {
    generator: Generator,
}

impl Step<MadsState> for SearchStep {
    fn name(&self) -> &'static str {
        match self.generator {
            Generator::Speculative => "SpeculativeSearch",
            Generator::LatinHypercube => "LhSearch",
            Generator::NelderMead => "NmSearch",
            Generator::QuadModel => "QuadModelSearch",
            _ => "Search",
        }
    }

    fn start(&mut self, s: &mut MadsState) -> Result<(), StepError> {
        let skip = s.stop.is_some()
            || s.iteration_success == SuccessKind::FullSuccess
            || !s.search_enabled(self.generator);
        if !skip {
            let trials = s.search_trials(self.generator);
            s.enqueue(trials);
        }
        Ok(())
    }

    fn run(&mut self, s: &mut MadsState) -> Result<(), StepError> {
        if !s.queue.is_empty() {
            s.dispatch(Some(s.k), s.params.opportunism);
        }
        Ok(())
    }
}

/// The rigorous local exploration around the frame center.
struct Poll;

impl Step<MadsState> for Poll {
    fn name(&self) -> &'static str {
        "Poll"
    }

    fn start(&mut self, s: &mut MadsState) -> Result<(), StepError> {
        if s.stop.is_none() && s.iteration_success != SuccessKind::FullSuccess {
            let trials = poll_trials(s);
            s.enqueue(trials);
        }
        Ok(())
    }

    fn run(&mut self, s: &mut MadsState) -> Result<(), StepError> {
        if !s.queue.is_empty() {
            s.dispatch(Some(s.k), s.params.opportunism);
        }
        Ok(())
    }
}

/// Update, searches, poll, then the frame-size verdict.
struct Iteration;

impl Step<MadsState> for Iteration {
    fn name(&self) -> &'static str {
        "Iteration"
    }

    fn start(&mut self, s: &mut MadsState) -> Result<(), StepError> {
        run_step(&mut Update, self.name(), s)
    }

    fn run(&mut self, s: &mut MadsState) -> Result<(), StepError> {
        if s.params.mega_search_poll {
            return run_step(&mut crate::mega::MegaSearchPoll, self.name(), s);
        }
        for generator in [
            Generator::Speculative,
            Generator::LatinHypercube,
            Generator::NelderMead,
            Generator::QuadModel,
        ] {
            run_step(&mut SearchStep { generator }, self.name(), s)?;
        }
        run_step(&mut Poll, self.name(), s)
    }

    fn end(&mut self, s: &mut MadsState) -> Result<(), StepError> {
        match s.iteration_success {
            SuccessKind::FullSuccess => {
                s.mesh.enlarge();
                if let Some(cap) = s.frame_cap {
                    if s.mesh.big_delta() > cap {
                        s.mesh
                            .set_frame_size(cap)
                            .expect("cap is positive");
                    }
                }
            }
            SuccessKind::Failure => s.mesh.refine(),
            SuccessKind::PartialSuccess => {}
        }
        s.k += 1;
        if s.stop.is_none() {
            s.stop = s.check_termination();
        }
        Ok(())
    }
}

/// Outcome of a completed run.
#[derive(Clone, Debug)]
pub struct MadsOutcome {
    pub best_feasible: Option<Incumbent>,
    pub best_infeasible: Option<Incumbent>,
    pub stop: StopReason,
    /// Iterations completed (initialization not counted).
    pub iterations: usize,
    /// Fresh blackbox evaluations spent by this run.
    pub evaluations: usize,
    /// Evaluation log, in completion order (shared lanes interleave here).
    pub history: Vec<HistoryRecord>,
}

/// A configured solver instance.
///
/// [`Mads::run`] drives a whole run; [`Mads::initialize`] and
/// [`Mads::iterate`] expose the same machinery one step at a time for
/// callers that want to watch or steer the trajectory.
pub struct Mads {
    state: MadsState,
}

impl Mads {
    pub fn new(problem: ValidatedProblem, params: Params) -> Result<Mads, ParamsError> {
        let ctx = RunContext::new(params.max_bb_eval);
        Mads::with_context(problem, params, ctx)
    }

    /// A solver sharing an externally owned cache, history, and budget —
    /// decomposition lanes and restarted runs use this.
    pub fn with_context(
        problem: ValidatedProblem,
        params: Params,
        ctx: RunContext,
    ) -> Result<Mads, ParamsError> {
        params.validate()?;
        let mesh = MeshState::new(problem.x0[0].clone(), params.delta0, params.tau)
            .map_err(|e| ParamsError::InvalidParams {
                what: e.to_string(),
            })?;
        let barrier = BarrierState::new(params.barrier, problem.output_kinds.clone());
        let queue = EvalQueue::new(params.ordering, params.seed);
        let rng = ChaCha8Rng::seed_from_u64(params.seed);
        Ok(Mads {
            state: MadsState {
                problem,
                k: 0,
                mesh,
                barrier,
                queue,
                ctx,
                rng,
                stop: None,
                last_success_direction: None,
                local_evals: 0,
                iteration_success: SuccessKind::Failure,
                frame_cap: None,
                generator_label: None,
                params,
            },
        })
    }

    pub(crate) fn state(&self) -> &MadsState {
        &self.state
    }

    pub(crate) fn state_mut(&mut self) -> &mut MadsState {
        &mut self.state
    }

    /// Evaluates the starting points and seeds the incumbents. Must be
    /// called once, before [`Mads::iterate`].
    pub fn initialize(&mut self) -> Result<(), StepError> {
        run_step(&mut Initialization, "Mads", &mut self.state)?;
        if self.state.stop.is_none() {
            self.state.stop = self.state.check_termination();
        }
        Ok(())
    }

    /// Runs one full iteration; a no-op once the run has stopped.
    pub fn iterate(&mut self) -> Result<(), StepError> {
        if self.state.stop.is_some() {
            return Ok(());
        }
        run_step(&mut Iteration, "Mads", &mut self.state)
    }

    /// Why the run stopped, once it has.
    pub fn stopped(&self) -> Option<StopReason> {
        self.state.stop
    }

    pub fn mesh(&self) -> &MeshState {
        &self.state.mesh
    }

    pub fn barrier(&self) -> &BarrierState {
        &self.state.barrier
    }

    pub fn context(&self) -> &RunContext {
        &self.state.ctx
    }

    /// Iterations completed so far.
    pub fn k(&self) -> usize {
        self.state.k
    }

    /// Fresh evaluations spent so far by this instance.
    pub fn evaluations(&self) -> usize {
        self.state.local_evals
    }

    /// Success level of the most recently completed iteration.
    pub fn last_iteration_success(&self) -> SuccessKind {
        self.state.iteration_success
    }

    /// Initialization plus iterations until a stop condition holds.
    pub fn run(mut self) -> Result<MadsOutcome, StepError> {
        let mut root = MadsRoot;
        run_step(&mut root, "", &mut self.state)?;
        Ok(self.into_outcome())
    }

    /// Collects the outcome after manual stepping.
    pub fn into_outcome(self) -> MadsOutcome {
        let s = self.state;
        MadsOutcome {
            best_feasible: s.barrier.best_feasible().cloned(),
            best_infeasible: s.barrier.best_infeasible().cloned(),
            stop: s.stop.unwrap_or(StopReason::UserInterrupt),
            iterations: s.k,
            evaluations: s.local_evals,
            history: s.ctx.history.snapshot(),
        }
    }
}

/// The whole algorithm as one component.
struct MadsRoot;

impl Step<MadsState> for MadsRoot {
    fn name(&self) -> &'static str {
        "Mads"
    }

    fn run(&mut self, s: &mut MadsState) -> Result<(), StepError> {
        run_step(&mut Initialization, self.name(), s)?;
        if s.stop.is_none() {
            s.stop = s.check_termination();
        }
        while s.stop.is_none() {
            run_step(&mut Iteration, self.name(), s)?;
        }
        Ok(())
    }
}
