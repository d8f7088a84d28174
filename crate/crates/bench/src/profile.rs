//! Convergence tests, data profiles, and envelope statistics.
//!
//! A run "solves" a problem at tolerance `τ` once its best feasible value
//! drops to `f_L + τ·(f⁰ − f_L)`, where `f_L` is the best value known for
//! the problem and `f⁰` the run's baseline. Data profiles then report, for
//! a growing budget of `κ` groups of `n+1` evaluations, the fraction of
//! (problem, seed) instances each solver has solved.

use std::collections::BTreeMap;

use crate::record::RunRecord;

/// The smallest evaluation index at which `record` reaches
/// `f_L + τ·(f⁰ − f_L)`, or `None` if it never does within its budget.
pub fn convergence_eval_count(
    record: &RunRecord,
    f_l: f64,
    f0: f64,
    tau: f64,
) -> Option<usize> {
    let threshold = f_l + tau * (f0 - f_l);
    record
        .steps
        .iter()
        .find(|(_, best)| *best <= threshold)
        .map(|(i, _)| *i)
}

/// Per-problem metadata a profile needs: dimension and the reference value.
#[derive(Clone, Debug)]
pub struct ProblemMeta {
    pub name: String,
    pub n: usize,
    pub f_l: f64,
}

/// Resolves each problem's reference value `f_L` as the smaller of its
/// analytic optimum (when known) and the best value any recorded run found
/// — the usual convention when optima are unknown.
pub fn resolve_reference_values(
    records: &[RunRecord],
    problems: &[(String, usize, Option<f64>)],
) -> Vec<ProblemMeta> {
    problems
        .iter()
        .map(|(name, n, known)| {
            let observed = records
                .iter()
                .filter(|r| r.problem == *name)
                .map(|r| r.final_best())
                .fold(f64::INFINITY, f64::min);
            ProblemMeta {
                name: name.clone(),
                n: *n,
                f_l: known.map_or(observed, |k| k.min(observed)),
            }
        })
        .collect()
}

/// One solver's data-profile curve: fraction of instances solved within
/// `κ·(n+1)` evaluations, per `κ`.
#[derive(Clone, Debug)]
pub struct DataProfile {
    pub solver: String,
    pub tau: f64,
    /// `(κ, fraction)` pairs, in the κ order given to [`data_profile`].
    pub curve: Vec<(f64, f64)>,
}

/// Builds one profile per solver appearing in `records`. Every record is one
/// instance; its baseline is its first finite best value (a run that never
/// found a feasible point counts as unsolved at every κ).
pub fn data_profile(
    records: &[RunRecord],
    meta: &[ProblemMeta],
    tau: f64,
    kappas: &[f64],
) -> Vec<DataProfile> {
    let lookup: BTreeMap<&str, &ProblemMeta> =
        meta.iter().map(|m| (m.name.as_str(), m)).collect();
    let mut by_solver: BTreeMap<&str, Vec<&RunRecord>> = BTreeMap::new();
    for r in records {
        by_solver.entry(r.solver.as_str()).or_default().push(r);
    }

    by_solver
        .into_iter()
        .map(|(solver, runs)| {
            // Budget (in evaluations) each instance needed, or None.
            let needed: Vec<(usize, Option<usize>)> = runs
                .iter()
                .map(|r| {
                    let m = lookup
                        .get(r.problem.as_str())
                        .unwrap_or_else(|| panic!("no metadata for problem {}", r.problem));
                    let count = r
                        .baseline()
                        .and_then(|f0| convergence_eval_count(r, m.f_l, f0, tau));
                    (m.n, count)
                })
                .collect();
            let total = needed.len().max(1);
            let curve = kappas
                .iter()
                .map(|&kappa| {
                    let solved = needed
                        .iter()
                        .filter(|(n, count)| {
                            count.is_some_and(|c| c as f64 <= kappa * (*n as f64 + 1.0))
                        })
                        .count();
                    (kappa, solved as f64 / total as f64)
                })
                .collect();
            DataProfile {
                solver: solver.to_owned(),
                tau,
                curve,
            }
        })
        .collect()
}

/// Mean/min/max of the best-so-far value across seeds at each checkpoint.
#[derive(Clone, Debug, PartialEq)]
pub struct EnvelopePoint {
    pub checkpoint: usize,
    pub mean: f64,
    pub min: f64,
    pub max: f64,
}

/// Aggregates several runs of one problem into an error-bar envelope. Values
/// past a run's end carry its final value forward; a run with no feasible
/// point yet contributes `+inf` at that checkpoint.
pub fn convergence_envelope(records: &[RunRecord], checkpoints: &[usize]) -> Vec<EnvelopePoint> {
    assert!(!records.is_empty(), "envelope needs at least one run");
    checkpoints
        .iter()
        .map(|&c| {
            let values: Vec<f64> = records.iter().map(|r| r.best_at(c)).collect();
            let min = values.iter().copied().fold(f64::INFINITY, f64::min);
            let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let mean = values.iter().sum::<f64>() / values.len() as f64;
            EnvelopePoint {
                checkpoint: c,
                mean,
                min,
                max,
            }
        })
        .collect()
}

/// The checkpoint grid used for envelope plots: 1, then every thousandth
/// evaluation up to `100·n`.
pub fn default_checkpoints(n: usize) -> Vec<usize> {
    let mut points = vec![1];
    let mut c = 1000;
    while c <= 100 * n {
        points.push(c);
        c += 1000;
    }
    points
}

/// Renders `profile.csv`: one row per (solver, κ) pair.
pub fn profile_csv(profiles: &[DataProfile]) -> String {
    let mut out = String::from("solver,kappa,fraction\n");
    for p in profiles {
        for (kappa, fraction) in &p.curve {
            out.push_str(&format!("{},{},{}\n", p.solver, kappa, fraction));
        }
    }
    out
}

/// Renders `envelope.csv`.
pub fn envelope_csv(points: &[EnvelopePoint]) -> String {
    let mut out = String::from("checkpoint,mean,min,max\n");
    for p in points {
        out.push_str(&format!(
            "{},{},{},{}\n",
            p.checkpoint, p.mean, p.min, p.max
        ));
    }
    out
}
