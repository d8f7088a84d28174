//! Evaluation dispatch.
//!
//! The engine drains the evaluation queue in sorted order, pushes points (or
//! groups of points) to worker threads, and feeds completed evaluations — in
//! completion order — through the barrier, the cache, and the history log.
//! With a single worker everything happens inline on the calling thread, and
//! a fixed seed reproduces a run bit for bit.
//!
//! Opportunism: when enabled, the first full success stops further
//! dispatching; evaluations already in flight are completed and recorded, and
//! the rest of the queue is dropped.

use std::collections::VecDeque;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering as AtomicOrdering};
use std::sync::mpsc;
use std::sync::{Arc, Condvar, Mutex};

use serde::{Deserialize, Serialize};

use crate::barrier::{BarrierState, SuccessKind};
use crate::cache::{Cache, Claim};
use crate::evaluation::{Blackbox, Evaluation};
use crate::point::Point;
use crate::problem::OutputKind;
use crate::queue::EvalQueue;
use crate::trial::{Generator, TrialPoint};

/// Why a dispatch burst — or a whole run — came to an end.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum StopReason {
    /// A full success stopped the burst early.
    OpportunisticSuccess,
    /// The evaluation budget (per burst or global) ran out.
    BudgetExhausted,
    /// Nothing left to evaluate.
    QueueEmpty,
    /// An interrupt was requested (hot restart or shutdown).
    UserInterrupt,
    /// The frame size dropped below the stopping tolerance.
    MeshTolerance,
}

impl std::fmt::Display for StopReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let text = match self {
            StopReason::OpportunisticSuccess => "opportunistic success",
            StopReason::BudgetExhausted => "budget exhausted",
            StopReason::QueueEmpty => "queue empty",
            StopReason::UserInterrupt => "user interrupt",
            StopReason::MeshTolerance => "mesh tolerance reached",
        };
        f.write_str(text)
    }
}

/// Shared, thread-safe evaluation budget.
pub struct EvalCounter {
    used: AtomicUsize,
    max: AtomicUsize,
}

impl EvalCounter {
    pub fn new(max: usize) -> Self {
        EvalCounter {
            used: AtomicUsize::new(0),
            max: AtomicUsize::new(max),
        }
    }

    /// Starts the counter at `used` already spent (warm restarts count the
    /// evaluations paid for by a previous run).
    pub fn new_with_used(max: usize, used: usize) -> Self {
        EvalCounter {
            used: AtomicUsize::new(used),
            max: AtomicUsize::new(max),
        }
    }

    pub fn used(&self) -> usize {
        self.used.load(AtomicOrdering::SeqCst)
    }

    pub fn max(&self) -> usize {
        self.max.load(AtomicOrdering::SeqCst)
    }

    /// Raises (or lowers) the budget mid-run; hot restarts use this so every
    /// holder of the shared counter sees the new limit at once.
    pub fn set_max(&self, max: usize) {
        self.max.store(max, AtomicOrdering::SeqCst);
    }

    pub fn exhausted(&self) -> bool {
        self.used() >= self.max()
    }

    /// Reserves up to `want` evaluation slots; returns how many were granted.
    pub fn try_acquire(&self, want: usize) -> usize {
        let mut granted = 0;
        let max = self.max();
        let _ = self
            .used
            .fetch_update(AtomicOrdering::SeqCst, AtomicOrdering::SeqCst, |used| {
                granted = want.min(max.saturating_sub(used));
                if granted == 0 {
                    None
                } else {
                    Some(used + granted)
                }
            });
        granted
    }

    /// Returns unused slots (acquired but never spent).
    pub fn release(&self, count: usize) {
        self.used.fetch_sub(count, AtomicOrdering::SeqCst);
    }
}

/// One line of the evaluation history.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HistoryRecord {
    /// 1-based blackbox invocation ordinal, in completion order.
    pub eval_index: usize,
    /// Iteration the point was generated in; `None` for starting points.
    pub iteration: Option<usize>,
    pub point: Point,
    pub eval: Evaluation,
    pub h: f64,
    /// Best feasible objective seen up to and including this record.
    pub best_f: f64,
    pub success: SuccessKind,
    pub generator: Generator,
    /// `(delta, Delta)` of the generating mesh, when the point came from one.
    pub mesh_size: Option<(f64, f64)>,
}

#[derive(Default)]
struct HistoryInner {
    records: Vec<HistoryRecord>,
    best_f: f64,
}

/// Append-only evaluation history, merged across all evaluating lanes.
pub struct HistoryLog {
    inner: Mutex<HistoryInner>,
}

impl Default for HistoryLog {
    fn default() -> Self {
        HistoryLog {
            inner: Mutex::new(HistoryInner {
                records: Vec::new(),
                best_f: f64::INFINITY,
            }),
        }
    }
}

impl HistoryLog {
    pub fn new() -> Self {
        HistoryLog::default()
    }

    /// Appends a record, assigning its evaluation index and the running best
    /// feasible objective.
    #[allow(clippy::too_many_arguments)]
    pub fn push(
        &self,
        iteration: Option<usize>,
        trial: &TrialPoint,
        eval: &Evaluation,
        h: f64,
        success: SuccessKind,
    ) -> usize {
        let mut inner = self.inner.lock().unwrap();
        if eval.is_ok() && h == 0.0 {
            inner.best_f = inner.best_f.min(eval.f);
        }
        let record = HistoryRecord {
            eval_index: inner.records.len() + 1,
            iteration,
            point: trial.point.clone(),
            eval: eval.clone(),
            h,
            best_f: inner.best_f,
            success,
            generator: trial.generator,
            mesh_size: trial.mesh.as_ref().map(|m| (m.delta(), m.big_delta())),
        };
        let index = record.eval_index;
        inner.records.push(record);
        index
    }

    pub fn len(&self) -> usize {
        self.inner.lock().unwrap().records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn snapshot(&self) -> Vec<HistoryRecord> {
        self.inner.lock().unwrap().records.clone()
    }

    /// Best feasible objective recorded so far (`+inf` before any).
    pub fn best_f(&self) -> f64 {
        self.inner.lock().unwrap().best_f
    }

    /// Renders the pinned CSV schema `eval_index,f,h,best_f`.
    pub fn to_csv(&self) -> String {
        let inner = self.inner.lock().unwrap();
        let mut out = String::from("eval_index,f,h,best_f\n");
        for r in &inner.records {
            out.push_str(&format!("{},{},{},{}\n", r.eval_index, r.eval.f, r.h, r.best_f));
        }
        out
    }
}

/// Shared machinery of one run: cache, history, budget, interrupt flag.
///
/// Everything is behind `Arc` so decomposition lanes can share a single
/// context.
#[derive(Clone)]
pub struct RunContext {
    pub cache: Arc<Cache>,
    pub history: Arc<HistoryLog>,
    pub evals: Arc<EvalCounter>,
    pub interrupt: Arc<AtomicBool>,
}

impl RunContext {
    pub fn new(max_evals: usize) -> Self {
        RunContext {
            cache: Arc::new(Cache::new()),
            history: Arc::new(HistoryLog::new()),
            evals: Arc::new(EvalCounter::new(max_evals)),
            interrupt: Arc::new(AtomicBool::new(false)),
        }
    }

    /// A context whose cache is pre-seeded and whose budget already counts
    /// `used` spent calls — the restart pathway. Replaying a run against
    /// this context turns every previously seen point into a free recall.
    pub fn with_preloaded(
        max_evals: usize,
        entries: impl IntoIterator<Item = (Point, Evaluation)>,
        used: usize,
    ) -> Self {
        let cache = Cache::new();
        cache.preload(entries);
        RunContext {
            cache: Arc::new(cache),
            history: Arc::new(HistoryLog::new()),
            evals: Arc::new(EvalCounter::new_with_used(max_evals, used)),
            interrupt: Arc::new(AtomicBool::new(false)),
        }
    }
}

/// One classified evaluation out of a dispatch burst.
#[derive(Clone, Debug)]
pub struct BurstResult {
    pub trial: TrialPoint,
    pub eval: Evaluation,
    pub h: f64,
    pub success: SuccessKind,
    /// True when the value came from the cache instead of a blackbox call.
    pub recalled: bool,
}

/// Dispatches queued points to the blackbox.
pub struct Engine {
    pub ctx: RunContext,
    pub blackbox: Arc<dyn Blackbox>,
    pub output_kinds: Vec<OutputKind>,
    pub n_workers: usize,
    pub opportunism: bool,
    pub group_max_size: usize,
    /// Overrides the generator tag on history rows; decomposition lanes use
    /// this so merged histories say which lane produced a row.
    pub relabel: Option<Generator>,
}

/// Internal outcome of trying to assemble the next chunk for dispatch.
enum Assembled {
    /// Claimed, budget-approved points ready for a worker.
    Chunk(Vec<TrialPoint>),
    /// The queue ran dry (recalls may still have been processed).
    QueueDrained,
    Stop(StopReason),
}

impl Engine {
    /// Evaluates the queued points and classifies every result.
    ///
    /// `session_budget` caps the number of fresh blackbox calls made by this
    /// burst; the shared global budget is enforced on top of it. Points whose
    /// value is already cached are replayed through the barrier at no cost.
    /// Whatever the stop reason, the queue is left empty: a burst consumes
    /// its points, and un-dispatched leftovers are dropped.
    pub fn run_queue(
        &self,
        queue: &mut EvalQueue,
        barrier: &mut BarrierState,
        session_budget: usize,
        iteration: Option<usize>,
    ) -> (Vec<BurstResult>, StopReason) {
        queue.sort_for_dispatch();
        let mut results = Vec::new();
        let mut dispatched = 0usize;
        let stop = if self.n_workers <= 1 {
            self.run_sequential(queue, barrier, session_budget, iteration, &mut results, &mut dispatched)
        } else {
            self.run_parallel(queue, barrier, session_budget, iteration, &mut results, &mut dispatched)
        };
        queue.clear();
        let reason = stop.unwrap_or(StopReason::QueueEmpty);
        (results, reason)
    }

    fn run_sequential(
        &self,
        queue: &mut EvalQueue,
        barrier: &mut BarrierState,
        session_budget: usize,
        iteration: Option<usize>,
        results: &mut Vec<BurstResult>,
        dispatched: &mut usize,
    ) -> Option<StopReason> {
        loop {
            match self.assemble_chunk(queue, barrier, session_budget, results, dispatched) {
                Assembled::Stop(reason) => return Some(reason),
                Assembled::QueueDrained => return None,
                Assembled::Chunk(points) => {
                    let evals = evaluate_points(&*self.blackbox, &self.output_kinds, &points);
                    // The whole chunk was paid for and evaluated, so every
                    // result is recorded; an opportunistic stop only cuts off
                    // further dispatch.
                    let mut opportunistic = false;
                    for (trial, eval) in points.into_iter().zip(evals) {
                        let success = self.record(barrier, iteration, &trial, &eval, false);
                        opportunistic |= success == SuccessKind::FullSuccess && self.opportunism;
                        results.push(BurstResult {
                            trial,
                            h: barrier.h_of(&eval),
                            eval,
                            success,
                            recalled: false,
                        });
                    }
                    if opportunistic {
                        return Some(StopReason::OpportunisticSuccess);
                    }
                }
            }
        }
    }

    fn run_parallel(
        &self,
        queue: &mut EvalQueue,
        barrier: &mut BarrierState,
        session_budget: usize,
        iteration: Option<usize>,
        results: &mut Vec<BurstResult>,
        dispatched: &mut usize,
    ) -> Option<StopReason> {
        let board = JobBoard::new();
        let (result_tx, result_rx) = mpsc::channel::<Vec<(TrialPoint, Evaluation)>>();
        let mut stop: Option<StopReason> = None;
        std::thread::scope(|scope| {
            for _ in 0..self.n_workers {
                let board = &board;
                let tx = result_tx.clone();
                let blackbox = &*self.blackbox;
                let kinds = &self.output_kinds;
                scope.spawn(move || {
                    while let Some(points) = board.take() {
                        let evals = evaluate_points(blackbox, kinds, &points);
                        let batch = points.into_iter().zip(evals).collect();
                        if tx.send(batch).is_err() {
                            break;
                        }
                    }
                });
            }
            drop(result_tx);

            let mut in_flight = 0usize;
            loop {
                // Keep every worker busy until a stop condition arises.
                while stop.is_none() && in_flight < self.n_workers {
                    match self.assemble_chunk(
                        queue,
                        barrier,
                        session_budget,
                        results,
                        dispatched,
                    ) {
                        Assembled::Chunk(points) => {
                            board.push(points);
                            in_flight += 1;
                        }
                        Assembled::QueueDrained => break,
                        Assembled::Stop(reason) => stop = Some(reason),
                    }
                }
                if in_flight == 0 {
                    break;
                }
                // In-flight evaluations are always completed and recorded,
                // even after a stop decision.
                let batch = result_rx.recv().expect("workers outlive in-flight jobs");
                in_flight -= 1;
                for (trial, eval) in batch {
                    let success = self.record(barrier, iteration, &trial, &eval, false);
                    let full = success == SuccessKind::FullSuccess;
                    results.push(BurstResult {
                        trial,
                        h: barrier.h_of(&eval),
                        eval,
                        success,
                        recalled: false,
                    });
                    if full && self.opportunism && stop.is_none() {
                        stop = Some(StopReason::OpportunisticSuccess);
                    }
                }
            }
            board.close();
        });
        stop
    }

    /// Pops queue entries until a dispatchable chunk is full. Cached points
    /// encountered on the way are classified immediately (a recall costs no
    /// budget); claims denied by the budget put the engine into its stop
    /// state.
    fn assemble_chunk(
        &self,
        queue: &mut EvalQueue,
        barrier: &mut BarrierState,
        session_budget: usize,
        results: &mut Vec<BurstResult>,
        dispatched: &mut usize,
    ) -> Assembled {
        if self.ctx.interrupt.load(AtomicOrdering::SeqCst) {
            return Assembled::Stop(StopReason::UserInterrupt);
        }
        let mut chunk: Vec<TrialPoint> = Vec::new();
        loop {
            if chunk.len() >= self.group_max_size {
                return Assembled::Chunk(chunk);
            }
            let Some(trial) = queue.pop_front() else {
                return if chunk.is_empty() {
                    Assembled::QueueDrained
                } else {
                    Assembled::Chunk(chunk)
                };
            };
            match self.ctx.cache.claim(&trial.point) {
                Claim::Known(eval) => {
                    let success = self.classify_recall(barrier, &trial, &eval);
                    let full = success == SuccessKind::FullSuccess;
                    results.push(BurstResult {
                        h: barrier.h_of(&eval),
                        trial,
                        eval,
                        success,
                        recalled: true,
                    });
                    if full && self.opportunism {
                        return if chunk.is_empty() {
                            Assembled::Stop(StopReason::OpportunisticSuccess)
                        } else {
                            // Dispatch what is already claimed; the stop is
                            // picked up right after this chunk.
                            Assembled::Chunk(chunk)
                        };
                    }
                }
                Claim::InFlight => {
                    // Another lane owns this point; its result will land in
                    // the shared cache.
                    continue;
                }
                Claim::Fresh => {
                    let session_ok = *dispatched < session_budget;
                    if !session_ok || self.ctx.evals.try_acquire(1) == 0 {
                        self.ctx.cache.unclaim(&trial.point);
                        return if chunk.is_empty() {
                            Assembled::Stop(StopReason::BudgetExhausted)
                        } else {
                            Assembled::Chunk(chunk)
                        };
                    }
                    *dispatched += 1;
                    chunk.push(trial);
                }
            }
        }
    }

    /// Caches, logs, and classifies one fresh evaluation.
    fn record(
        &self,
        barrier: &mut BarrierState,
        iteration: Option<usize>,
        trial: &TrialPoint,
        eval: &Evaluation,
        _recalled: bool,
    ) -> SuccessKind {
        self.ctx.cache.fulfill(&trial.point, eval.clone());
        let h = barrier.h_of(eval);
        let success = barrier.classify(&trial.point, eval);
        match self.relabel {
            None => self.ctx.history.push(iteration, trial, eval, h, success),
            Some(generator) => {
                let mut labeled = trial.clone();
                labeled.generator = generator;
                self.ctx.history.push(iteration, &labeled, eval, h, success)
            }
        };
        success
    }

    fn classify_recall(
        &self,
        barrier: &mut BarrierState,
        trial: &TrialPoint,
        eval: &Evaluation,
    ) -> SuccessKind {
        barrier.classify(&trial.point, eval)
    }
}

/// Splits `total` queued points into dispatch groups of at most `max`.
pub fn group_sizes(total: usize, max: usize) -> Vec<usize> {
    assert!(max >= 1);
    let mut out = Vec::new();
    let mut remaining = total;
    while remaining > 0 {
        let take = remaining.min(max);
        out.push(take);
        remaining -= take;
    }
    out
}

/// Evaluates a group of points, converting panics and malformed output into
/// failed evaluations.
fn evaluate_points(
    blackbox: &dyn Blackbox,
    kinds: &[OutputKind],
    points: &[TrialPoint],
) -> Vec<Evaluation> {
    let coords: Vec<Point> = points.iter().map(|t| t.point.clone()).collect();
    let raw = catch_unwind(AssertUnwindSafe(|| {
        if coords.len() == 1 {
            vec![blackbox.eval_raw(&coords[0])]
        } else {
            blackbox.eval_batch(&coords)
        }
    }));
    let m = kinds.iter().filter(|k| **k != OutputKind::Obj).count();
    match raw {
        Ok(outputs) if outputs.len() == points.len() => outputs
            .into_iter()
            .map(|o| Evaluation::from_raw(o, kinds))
            .collect(),
        _ => (0..points.len()).map(|_| Evaluation::failed(m)).collect(),
    }
}

/// A minimal multi-producer multi-consumer job queue for the worker pool.
struct JobBoard {
    state: Mutex<(VecDeque<Vec<TrialPoint>>, bool)>,
    available: Condvar,
}

impl JobBoard {
    fn new() -> Self {
        JobBoard {
            state: Mutex::new((VecDeque::new(), false)),
            available: Condvar::new(),
        }
    }

    fn push(&self, job: Vec<TrialPoint>) {
        let mut state = self.state.lock().unwrap();
        state.0.push_back(job);
        self.available.notify_one();
    }

    fn take(&self) -> Option<Vec<TrialPoint>> {
        let mut state = self.state.lock().unwrap();
        loop {
            if let Some(job) = state.0.pop_front() {
                return Some(job);
            }
            if state.1 {
                return None;
            }
            state = self.available.wait(state).unwrap();
        }
    }

    fn close(&self) {
        let mut state = self.state.lock().unwrap();
        state.1 = true;
        self.available.notify_all();
    }
}
