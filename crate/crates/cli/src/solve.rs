//! The `solve` command: drive a run described by a parameter file.
//!
//! The solver is stepped one iteration at a time so the command can look up
//! between iterations: it checkpoints the cache file after every iteration
//! (atomically, so a killed run resumes from the last completed one) and
//! watches the interrupt flag for hot-restart requests.
//!
//! # Hot restart
//!
//! An interrupt (SIGINT on the binary) does not kill the run. Once in-flight
//! evaluations have completed, the parameter file is re-read and the mutable
//! parameters — `MAX_BB_EVAL`, `EPSILON`, `SEARCHES`, `ORDERING`,
//! `OPPORTUNISM` — are applied in place; the run then continues from its
//! current state. Any other change (dimension, outputs, starting points,
//! bounds, seed, threads, ...) rejects the restart and the run continues
//! under the old parameters, as does a file that no longer parses. To
//! actually terminate early, send SIGTERM.
//!
//! # Warm restart
//!
//! When `CACHE_FILE` (or `--cache`) names an existing file, its entries are
//! preloaded and counted against the budget, so a rerun replays the cached
//! stretch for free and spends fresh evaluations only past it. The history
//! file covers only the current process's evaluations and is rewritten each
//! run.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;

use mads::psd::PsdMads;
use mads::{Incumbent, Mads, Params, RunContext, StopReason};

use crate::cachefile::{read_cache, write_cache_atomic};
use crate::paramfile::{immutable_change, parse_spec, RunSpec};
use crate::CliError;

/// Command-line overrides and wiring for one `solve` invocation.
#[derive(Clone, Default)]
pub struct SolveOptions {
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub cache: Option<PathBuf>,
    /// Directory for CSV output; `history.csv` lands here when the
    /// parameter file names no `HISTORY_FILE`.
    pub csv_dir: Option<PathBuf>,
    /// Hot-restart trigger. The binary points this at its SIGINT flag;
    /// tests set it directly.
    pub interrupt: Arc<AtomicBool>,
}

/// What a hot-restart attempt did, in the order they happened.
#[derive(Clone, Debug, PartialEq)]
pub enum RestartEvent {
    Applied,
    /// The restart was rejected and the run kept its previous parameters.
    Rejected(String),
}

/// Everything a finished run reports back.
pub struct SolveReport {
    /// Best feasible incumbent, or the least-infeasible one when nothing
    /// feasible was found.
    pub best: Option<Incumbent>,
    pub stop: StopReason,
    pub iterations: usize,
    /// Fresh blackbox evaluations spent by this process.
    pub evaluations: usize,
    /// Total cache entries, preloaded ones included.
    pub cache_size: usize,
    pub restarts: Vec<RestartEvent>,
    pub history_path: Option<PathBuf>,
    pub cache_path: Option<PathBuf>,
}

/// The final `x* | f | h` solution line.
pub fn format_solution(report: &SolveReport) -> String {
    match &report.best {
        Some(inc) => {
            let coords: Vec<String> = inc.point.as_slice().iter().map(f64::to_string).collect();
            format!("{} | {} | {}", coords.join(" "), inc.eval.f, inc.h)
        }
        None => "no evaluated point".to_owned(),
    }
}

fn apply_overrides(spec: &mut RunSpec, opts: &SolveOptions) {
    if let Some(seed) = opts.seed {
        spec.seed = Some(seed);
    }
    if let Some(threads) = opts.threads {
        spec.nb_threads = Some(threads);
    }
    if let Some(cache) = &opts.cache {
        spec.cache_file = Some(cache.clone());
    }
}

/// Re-reads the parameter file for a hot restart. Returns the new spec and
/// parameters, or the reason the restart cannot be honored.
fn reload(
    paramfile: &Path,
    current: &RunSpec,
    opts: &SolveOptions,
) -> Result<(RunSpec, Params), String> {
    let mut spec = parse_spec(paramfile).map_err(|e| e.to_string())?;
    apply_overrides(&mut spec, opts);
    if let Some(key) = immutable_change(current, &spec) {
        return Err(format!("immutable parameter {key} changed"));
    }
    let built = spec.build().map_err(|e| e.to_string())?;
    Ok((spec, built.params))
}

/// Runs the `solve` command end to end and returns the report; printing is
/// left to the caller.
pub fn run_solve(paramfile: &Path, opts: &SolveOptions) -> Result<SolveReport, CliError> {
    let mut spec = parse_spec(paramfile)?;
    apply_overrides(&mut spec, opts);
    let built = spec.build()?;

    let cache_path = built.cache_file.clone();
    let history_path = built
        .history_file
        .clone()
        .or_else(|| opts.csv_dir.as_ref().map(|d| d.join("history.csv")));

    let preloaded = match &cache_path {
        Some(p) if p.exists() => read_cache(p)?,
        _ => Vec::new(),
    };
    let used = preloaded.len();
    let mut ctx = RunContext::with_preloaded(built.params.max_bb_eval, preloaded, used);
    ctx.interrupt = Arc::clone(&opts.interrupt);

    // An interrupt that predates the run asks for what is happening right
    // now — reading the parameter file — so it is simply consumed. Left
    // set, it would abort the very first evaluation burst.
    opts.interrupt.store(false, Ordering::SeqCst);

    let mut restarts = Vec::new();
    let as_param = |e: mads::StepError| CliError::Param(e.to_string());

    let outcome = if let Some(psd) = built.psd {
        // Decomposition runs as one blocking call; an interrupt winds the
        // lanes down cleanly instead of hot-restarting.
        let solver = PsdMads::with_context(built.problem, built.params, psd, ctx.clone())
            .map_err(|e| CliError::Param(e.to_string()))?;
        let out = solver.run().map_err(|e| CliError::Param(e.to_string()))?;
        opts.interrupt.store(false, Ordering::SeqCst);
        (out.best_feasible, out.best_infeasible, out.stop, 0, out.evaluations)
    } else {
        let mut params = built.params;
        let mut solver = Mads::with_context(built.problem, params.clone(), ctx.clone())
            .map_err(|e| CliError::Param(e.to_string()))?;
        solver.initialize().map_err(as_param)?;
        let mut current_spec = spec;
        loop {
            if opts.interrupt.swap(false, Ordering::SeqCst) {
                match reload(paramfile, &current_spec, opts) {
                    Ok((new_spec, new_params)) => {
                        solver
                            .hot_update(new_params.clone())
                            .map_err(|e| CliError::Param(e.to_string()))?;
                        current_spec = new_spec;
                        params = new_params;
                        restarts.push(RestartEvent::Applied);
                    }
                    Err(reason) => {
                        // Reapplying the current parameters clears a
                        // mid-burst UserInterrupt stop; the next termination
                        // check reinstates any stop still warranted.
                        eprintln!("hot restart ignored: {reason}");
                        solver
                            .hot_update(params.clone())
                            .map_err(|e| CliError::Param(e.to_string()))?;
                        restarts.push(RestartEvent::Rejected(reason));
                    }
                }
            }
            if solver.stopped().is_some() {
                break;
            }
            solver.iterate().map_err(as_param)?;
            if let Some(path) = &cache_path {
                write_cache_atomic(path, &ctx.cache.snapshot())?;
            }
        }
        let out = solver.into_outcome();
        (
            out.best_feasible,
            out.best_infeasible,
            out.stop,
            out.iterations,
            out.evaluations,
        )
    };
    let (best_feasible, best_infeasible, stop, iterations, evaluations) = outcome;

    if let Some(path) = &history_path {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        }
        fs::write(path, ctx.history.to_csv()).map_err(|e| CliError::io(path, e))?;
    }
    if let Some(path) = &cache_path {
        write_cache_atomic(path, &ctx.cache.snapshot())?;
    }

    Ok(SolveReport {
        best: best_feasible.or(best_infeasible),
        stop,
        iterations,
        evaluations,
        cache_size: ctx.cache.len(),
        restarts,
        history_path,
        cache_path,
    })
}
