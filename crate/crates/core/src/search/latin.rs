//! Latin hypercube sampling, both as a search step and standalone.
//!
//! Inside a solver run the sample is projected onto the current mesh; used
//! standalone (design-of-experiments style) the raw stratified points are
//! returned as-is, since without a solver there is no mesh.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::engine::{Engine, RunContext};
use crate::evaluation::Evaluation;
use crate::mesh::MeshState;
use crate::params::OrderingStrategy;
use crate::point::Point;
use crate::problem::ValidatedProblem;
use crate::queue::EvalQueue;
use crate::step::{run_step, Step, StepError};
use crate::trial::{Generator, TrialPoint};

/// Draws `count` points in the box `[lower, upper]`; for every coordinate,
/// each of the `count` equal-width strata contains exactly one point.
pub fn lh_sample<R: Rng>(lower: &[f64], upper: &[f64], count: usize, rng: &mut R) -> Vec<Point> {
    let n = lower.len();
    if count == 0 {
        return Vec::new();
    }
    // One independent stratum permutation per coordinate.
    let mut strata: Vec<Vec<usize>> = Vec::with_capacity(n);
    for _ in 0..n {
        let mut order: Vec<usize> = (0..count).collect();
        order.shuffle(rng);
        strata.push(order);
    }
    (0..count)
        .map(|i| {
            let coords = (0..n)
                .map(|j| {
                    let width = (upper[j] - lower[j]) / count as f64;
                    let u: f64 = rng.gen();
                    lower[j] + (strata[j][i] as f64 + u) * width
                })
                .collect();
            Point::new(coords)
        })
        .collect()
}

/// The box to sample: the variable bounds where finite, otherwise a
/// `±10·delta0` box around the start point.
pub fn sampling_box(
    lower: &[f64],
    upper: &[f64],
    x0: &Point,
    delta0: f64,
) -> (Vec<f64>, Vec<f64>) {
    let span = 10.0 * delta0;
    let lo = lower
        .iter()
        .zip(x0.as_slice())
        .map(|(l, c)| if l.is_finite() { *l } else { c - span })
        .collect();
    let hi = upper
        .iter()
        .zip(x0.as_slice())
        .map(|(u, c)| if u.is_finite() { *u } else { c + span })
        .collect();
    (lo, hi)
}

/// Search-step adapter: samples the box and projects onto the mesh.
pub(crate) fn lh_search_trials<R: Rng>(
    lower: &[f64],
    upper: &[f64],
    count: usize,
    rng: &mut R,
    mesh: &MeshState,
) -> Vec<TrialPoint> {
    let (lo, hi) = sampling_box(lower, upper, mesh.center(), mesh.big_delta());
    lh_sample(&lo, &hi, count, rng)
        .into_iter()
        .filter_map(|p| {
            let projected = mesh.project(&p);
            crate::mesh::clip_to_bounds(&projected, mesh, lower, upper)
        })
        .map(|p| {
            let direction = p.sub(mesh.center()).into_vec();
            TrialPoint::new(p, Generator::LatinHypercube)
                .with_direction(direction)
                .with_mesh(mesh.clone())
        })
        .collect()
}

/// A standalone design-of-experiments component: sample, evaluate, report.
///
/// This is a complete little algorithm in its own right, built from the same
/// Start/Run/End skeleton as the solver — Start generates the sample, Run
/// evaluates it through the engine, End keeps the best point.
pub struct LhExplorer {
    pub problem: ValidatedProblem,
    pub count: usize,
    pub rng: ChaCha8Rng,
    pub results: Vec<(Point, Evaluation)>,
    pub best: Option<(Point, Evaluation)>,
    queue: EvalQueue,
    ctx: RunContext,
}

impl LhExplorer {
    pub fn new(problem: ValidatedProblem, count: usize, seed: u64) -> Self {
        use rand::SeedableRng;
        LhExplorer {
            ctx: RunContext::new(count),
            queue: EvalQueue::new(OrderingStrategy::GenerationOrder, seed),
            problem,
            count,
            rng: ChaCha8Rng::seed_from_u64(seed),
            results: Vec::new(),
            best: None,
        }
    }

    /// Runs the three phases; inspect `results` and `best` afterwards.
    pub fn explore(mut self) -> Self {
        let mut component = LhPhases;
        run_step(&mut component, "", &mut self).expect("LH phases are infallible");
        self
    }
}

struct LhPhases;

impl Step<LhExplorer> for LhPhases {
    fn name(&self) -> &'static str {
        "LatinHypercube"
    }

    fn start(&mut self, s: &mut LhExplorer) -> Result<(), StepError> {
        let x0 = s.problem.x0[0].clone();
        let (lo, hi) = sampling_box(&s.problem.lower, &s.problem.upper, &x0, 1.0);
        for p in lh_sample(&lo, &hi, s.count, &mut s.rng) {
            s.queue
                .push(TrialPoint::new(p, Generator::LatinHypercube), &s.ctx.cache);
        }
        Ok(())
    }

    fn run(&mut self, s: &mut LhExplorer) -> Result<(), StepError> {
        let engine = Engine {
            ctx: s.ctx.clone(),
            blackbox: s.problem.blackbox.clone(),
            output_kinds: s.problem.output_kinds.clone(),
            n_workers: 1,
            opportunism: false,
            group_max_size: 1,
            relabel: None,
        };
        let mut barrier = crate::barrier::BarrierState::new(
            crate::params::BarrierKind::Progressive,
            s.problem.output_kinds.clone(),
        );
        let (results, _) = engine.run_queue(&mut s.queue, &mut barrier, s.count, None);
        s.results = results
            .into_iter()
            .map(|r| (r.trial.point, r.eval))
            .collect();
        Ok(())
    }

    fn end(&mut self, s: &mut LhExplorer) -> Result<(), StepError> {
        s.best = s
            .results
            .iter()
            .filter(|(_, e)| e.is_ok())
            .min_by(|(_, a), (_, b)| a.f.total_cmp(&b.f))
            .cloned();
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evaluation::objective_blackbox;
    use crate::problem::{OutputKind, Problem};
    use rand::SeedableRng;

    #[test]
    fn one_point_lands_inside_the_box() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let pts = lh_sample(&[-1.0, 0.0], &[1.0, 10.0], 1, &mut rng);
        assert_eq!(pts.len(), 1);
        assert!(pts[0][0] >= -1.0 && pts[0][0] <= 1.0);
        assert!(pts[0][1] >= 0.0 && pts[0][1] <= 10.0);
    }

    #[test]
    fn each_stratum_holds_exactly_one_sample() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let count = 4;
        let pts = lh_sample(&[0.0, -8.0], &[1.0, 8.0], count, &mut rng);
        for j in 0..2 {
            let (lo, hi) = ([0.0, -8.0][j], [1.0, 8.0][j]);
            let width = (hi - lo) / count as f64;
            let mut seen = vec![false; count];
            for p in &pts {
                let stratum = (((p[j] - lo) / width) as usize).min(count - 1);
                assert!(!seen[stratum], "stratum {stratum} hit twice in axis {j}");
                seen[stratum] = true;
            }
            assert!(seen.iter().all(|s| *s));
        }
    }

    #[test]
    fn stratification_holds_for_many_seeds() {
        for seed in 0..25 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let count = 9;
            let pts = lh_sample(&[2.0], &[3.8], count, &mut rng);
            let width = 1.8 / count as f64;
            let mut seen = vec![false; count];
            for p in &pts {
                let stratum = (((p[0] - 2.0) / width) as usize).min(count - 1);
                assert!(!seen[stratum]);
                seen[stratum] = true;
            }
        }
    }

    #[test]
    fn standalone_sample_ignores_any_mesh() {
        // Raw samples are continuous: the odds of all landing on a coarse
        // lattice are nil, and no projection is applied standalone.
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mesh = MeshState::new(Point::new(vec![0.0]), 1.0, 0.5).unwrap();
        let pts = lh_sample(&[0.0], &[1.0], 8, &mut rng);
        assert!(pts.iter().any(|p| !mesh.on_mesh(p)));
    }

    #[test]
    fn search_trials_are_projected_and_tagged() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mesh = MeshState::new(Point::new(vec![0.5, 0.5]), 1.0, 0.5).unwrap();
        let trials = lh_search_trials(&[0.0, 0.0], &[1.0, 1.0], 6, &mut rng, &mesh);
        assert!(!trials.is_empty());
        for t in &trials {
            assert!(mesh.on_mesh(&t.point));
            assert_eq!(t.generator, Generator::LatinHypercube);
        }
    }

    #[test]
    fn unbounded_variables_sample_around_the_start() {
        let (lo, hi) = sampling_box(
            &[0.0, f64::NEG_INFINITY],
            &[1.0, f64::INFINITY],
            &Point::new(vec![0.5, 3.0]),
            0.2,
        );
        assert_eq!(lo, vec![0.0, 1.0]);
        assert_eq!(hi, vec![1.0, 5.0]);
    }

    #[test]
    fn explorer_runs_all_three_phases() {
        let problem = Problem::new(
            2,
            vec![OutputKind::Obj],
            objective_blackbox(|x| x[0] * x[0] + x[1] * x[1]),
        )
        .with_bounds(vec![-1.0, -1.0], vec![1.0, 1.0])
        .with_x0(vec![0.0, 0.0])
        .validate()
        .unwrap();
        let explorer = LhExplorer::new(problem, 10, 5).explore();
        assert_eq!(explorer.results.len(), 10);
        assert!(explorer.results.iter().all(|(p, _)| p[0].abs() <= 1.0));
        let (best_point, best_eval) = explorer.best.as_ref().unwrap();
        let true_best = explorer
            .results
            .iter()
            .map(|(_, e)| e.f)
            .fold(f64::INFINITY, f64::min);
        assert_eq!(best_eval.f, true_best);
        assert!(best_point[0].abs() <= 1.0);
    }
}
