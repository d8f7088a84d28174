//! The `bench` command: run a suite of bundled problems across seeds and
//! solvers, then write the data-profile and envelope CSVs.
//!
//! Budgets follow the benchmarking convention used throughout the crate:
//! `400·(n+1)` evaluations for unconstrained problems, `1000·(n+1)` when
//! constraints are present (feasibility has to be bought before descent).

use std::fs;
use std::path::PathBuf;

use mads::psd::PsdParams;
use mads::Params;
use mads_bench::{
    bundled, data_profile, default_checkpoints, convergence_envelope, envelope_csv, profile_csv,
    resolve_reference_values, run_mads, run_psd, BenchProblem, RunRecord,
};

use crate::CliError;

#[derive(Clone, Debug)]
pub struct BenchOptions {
    pub suite: String,
    pub solvers: Vec<String>,
    pub seeds: u64,
    pub tau: f64,
    /// Where the CSVs land; the working directory when absent.
    pub csv_dir: Option<PathBuf>,
}

fn suite_problems(suite: &str) -> Result<Vec<BenchProblem>, CliError> {
    let all = bundled();
    let names: Vec<&str> = match suite {
        "smoke" => vec!["SPHERE2", "SROSENBR2"],
        "unconstrained" => vec![
            "SPHERE2",
            "SPHERE5",
            "SPHERE10",
            "QUARTIC10",
            "SROSENBR2",
            "SROSENBR50",
        ],
        "constrained" => vec!["CRESCENT", "DISK", "SNAKE", "PENTAGON"],
        "large" => vec!["SROSENBR250"],
        "all" => {
            return Ok(all
                .into_iter()
                .filter(|p| p.name != "SROSENBR250")
                .collect())
        }
        other => {
            return Err(CliError::Param(format!(
                "unknown suite {other} (choices: smoke, unconstrained, constrained, large, all)"
            )))
        }
    };
    Ok(all.into_iter().filter(|p| names.contains(&p.name.as_str())).collect())
}

fn budget(bp: &BenchProblem) -> usize {
    let per_group = bp.n + 1;
    if bp.m() == 0 {
        400 * per_group
    } else {
        1000 * per_group
    }
}

fn run_one(bp: &BenchProblem, solver: &str, seed: u64) -> Result<RunRecord, CliError> {
    let mut params = Params::default_for(&bp.problem());
    params.max_bb_eval = budget(bp);
    params.seed = seed;
    match solver {
        "mads" => Ok(run_mads(bp, params, solver)),
        "psd" => {
            let psd = PsdParams::default_for(&bp.problem());
            Ok(run_psd(bp, params, psd, solver))
        }
        other => Err(CliError::Param(format!(
            "unknown solver {other} (choices: mads, psd)"
        ))),
    }
}

/// Runs the whole suite and writes `profile.csv` plus one
/// `envelope_<problem>_<solver>.csv` per pair. Returns a plain-text summary
/// for the terminal.
pub fn run_bench(opts: &BenchOptions) -> Result<String, CliError> {
    if opts.seeds == 0 {
        return Err(CliError::Param("--seeds must be at least 1".into()));
    }
    if !(opts.tau > 0.0 && opts.tau < 1.0) {
        return Err(CliError::Param("--tau must lie in (0, 1)".into()));
    }
    let problems = suite_problems(&opts.suite)?;
    let dir = opts.csv_dir.clone().unwrap_or_else(|| PathBuf::from("."));
    fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;

    let mut records = Vec::new();
    for bp in &problems {
        for solver in &opts.solvers {
            for seed in 0..opts.seeds {
                records.push(run_one(bp, solver, seed)?);
            }
        }
    }

    // Data profile over every (problem, seed) instance.
    let meta: Vec<(String, usize, Option<f64>)> = problems
        .iter()
        .map(|p| (p.name.clone(), p.n, p.known_best))
        .collect();
    let meta = resolve_reference_values(&records, &meta);
    let max_kappa = problems
        .iter()
        .map(|p| budget(p) / (p.n + 1))
        .max()
        .unwrap_or(0);
    let kappas: Vec<f64> = (1..=max_kappa).map(|k| k as f64).collect();
    let profiles = data_profile(&records, &meta, opts.tau, &kappas);
    let profile_path = dir.join("profile.csv");
    fs::write(&profile_path, profile_csv(&profiles)).map_err(|e| CliError::io(&profile_path, e))?;

    // One envelope per (problem, solver) pair across its seeds.
    for bp in &problems {
        for solver in &opts.solvers {
            let runs: Vec<RunRecord> = records
                .iter()
                .filter(|r| r.problem == bp.name && r.solver == *solver)
                .cloned()
                .collect();
            let mut checkpoints = default_checkpoints(bp.n);
            let b = budget(bp);
            if !checkpoints.contains(&b) {
                checkpoints.push(b);
            }
            let envelope = convergence_envelope(&runs, &checkpoints);
            let path = dir.join(format!(
                "envelope_{}_{}.csv",
                bp.name.to_lowercase(),
                solver
            ));
            fs::write(&path, envelope_csv(&envelope)).map_err(|e| CliError::io(&path, e))?;
        }
    }

    // Terminal summary: how each solver did, problem by problem.
    let mut lines = vec![format!(
        "suite {} | {} problems x {} solvers x {} seeds | tau = {}",
        opts.suite,
        problems.len(),
        opts.solvers.len(),
        opts.seeds,
        opts.tau
    )];
    for bp in &problems {
        for solver in &opts.solvers {
            let mut finals: Vec<f64> = records
                .iter()
                .filter(|r| r.problem == bp.name && r.solver == *solver)
                .map(|r| r.final_best())
                .collect();
            finals.sort_by(f64::total_cmp);
            let median = finals[finals.len() / 2];
            lines.push(format!(
                "  {:<12} {:<6} median final f = {median:.6e}",
                bp.name, solver
            ));
        }
    }
    for p in &profiles {
        let solved = p.curve.last().map_or(0.0, |(_, frac)| *frac);
        lines.push(format!(
            "  {:<12} solves {:.0}% of instances within budget",
            p.solver,
            100.0 * solved
        ));
    }
    lines.push(format!("wrote {}", profile_path.display()));
    Ok(lines.join("\n"))
}
