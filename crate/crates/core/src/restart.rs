//! Warm restarts: resume a run that already terminated.
//!
//! A snapshot carries the full solver state — mesh, barrier, random streams,
//! iteration counter — plus the cache contents, so an in-process restart
//! continues the trajectory exactly. The durable on-disk form keeps only the
//! cache: replaying a run with the same seed against a preloaded cache
//! reconstructs everything else for free, since every previously evaluated
//! point comes back as a recall that costs no budget.

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::barrier::BarrierState;
use crate::engine::{RunContext, StopReason};
use crate::evaluation::Evaluation;
use crate::mads::Mads;
use crate::mesh::MeshState;
use crate::params::{Params, ParamsError};
use crate::point::Point;
use crate::problem::{OutputKind, ValidatedProblem};
use crate::queue::EvalQueue;

/// Everything needed to resume a run, minus the blackbox itself.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RestartSnapshot {
    pub params: Params,
    pub k: usize,
    pub mesh: MeshState,
    pub barrier: BarrierState,
    pub rng: ChaCha8Rng,
    pub queue_rng: ChaCha8Rng,
    pub local_evals: usize,
    pub last_success_direction: Option<Vec<f64>>,
    pub stop: Option<StopReason>,
    pub cache: Vec<(Point, Evaluation)>,
    pub n: usize,
    pub output_kinds: Vec<OutputKind>,
}

#[derive(Debug, thiserror::Error)]
pub enum RestartError {
    #[error("snapshot does not fit the problem: {what}")]
    IncompatibleParams { what: String },
    #[error(transparent)]
    InvalidParams(#[from] ParamsError),
}

impl Mads {
    /// Applies mid-run parameter changes in place — the hot-restart path,
    /// where a paused run continues from its current state under new
    /// tunables.
    ///
    /// Only the parameters that are safe to change between iterations are
    /// taken from `new_params`: the evaluation budget, the stop tolerance,
    /// the search toggles, the queue ordering, and opportunism. Everything
    /// else (mesh geometry, seed, worker count, barrier) keeps its running
    /// value. A stop reason already recorded is cleared; if it still holds
    /// — say the budget was not actually raised — the next iteration's
    /// termination check reinstates it.
    pub fn hot_update(&mut self, new_params: Params) -> Result<(), RestartError> {
        new_params.validate()?;
        let state = self.state_mut();
        state.params.max_bb_eval = new_params.max_bb_eval;
        state.ctx.evals.set_max(new_params.max_bb_eval);
        state.params.eps_stop = new_params.eps_stop;
        state.params.searches = new_params.searches;
        state.params.opportunism = new_params.opportunism;
        if new_params.ordering != state.params.ordering {
            state.params.ordering = new_params.ordering;
            // The queue is empty between iterations; rebuild it under the
            // new strategy but keep the shuffle stream and the success
            // direction so the run stays one continuous trajectory.
            let shuffle = state.queue.shuffle_rng_state();
            let mut queue = EvalQueue::new(new_params.ordering, state.params.seed);
            queue.restore_shuffle_rng(shuffle);
            queue.restore_last_success_direction(state.last_success_direction.clone());
            state.queue = queue;
        }
        state.stop = None;
        Ok(())
    }

    /// Captures the current solver state for a later [`warm_restart`].
    pub fn snapshot(&self) -> RestartSnapshot {
        let s = self.state();
        RestartSnapshot {
            params: s.params.clone(),
            k: s.k,
            mesh: s.mesh.clone(),
            barrier: s.barrier.clone(),
            rng: s.rng.clone(),
            queue_rng: s.queue.shuffle_rng_state(),
            local_evals: s.local_evals,
            last_success_direction: s.last_success_direction.clone(),
            stop: s.stop,
            cache: s.ctx.cache.snapshot(),
            n: s.problem.n,
            output_kinds: s.problem.output_kinds.clone(),
        }
    }
}

/// Rebuilds a solver from a snapshot under possibly changed parameters.
///
/// The cache is carried over intact, the stop reason is cleared, and the new
/// parameters take effect (budget extensions, tolerance changes, search
/// toggles). After a mesh-tolerance stop the frame is reopened to
/// `max(current Δ, Δ⁰/10)` so further progress is possible; any other stop
/// leaves the mesh untouched, which makes the continuation of an
/// interrupted single-worker run exact.
pub fn warm_restart(
    snapshot: RestartSnapshot,
    new_params: Params,
    problem: ValidatedProblem,
) -> Result<Mads, RestartError> {
    if problem.n != snapshot.n {
        return Err(RestartError::IncompatibleParams {
            what: format!("dimension changed from {} to {}", snapshot.n, problem.n),
        });
    }
    if problem.output_kinds != snapshot.output_kinds {
        return Err(RestartError::IncompatibleParams {
            what: "blackbox output kinds changed".to_string(),
        });
    }
    new_params.validate()?;

    let ctx = RunContext::with_preloaded(
        new_params.max_bb_eval,
        snapshot.cache,
        snapshot.local_evals,
    );

    let mut mesh = snapshot.mesh;
    if snapshot.stop == Some(StopReason::MeshTolerance) {
        let reopened = mesh.big_delta().max(new_params.delta0 / 10.0);
        mesh.set_frame_size(reopened)
            .expect("reopened frame size is positive");
    }

    let mut queue = EvalQueue::new(new_params.ordering, new_params.seed);
    queue.restore_shuffle_rng(snapshot.queue_rng);
    queue.restore_last_success_direction(snapshot.last_success_direction.clone());

    let mut solver = Mads::with_context(problem, new_params, ctx)?;
    let state = solver.state_mut();
    state.k = snapshot.k;
    state.mesh = mesh;
    state.barrier = snapshot.barrier;
    state.rng = snapshot.rng;
    state.queue = queue;
    state.local_evals = snapshot.local_evals;
    state.last_success_direction = snapshot.last_success_direction;
    state.stop = None;
    Ok(solver)
}
