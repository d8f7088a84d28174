//! Quadratic model search.
//!
//! Past evaluations near the incumbent are free data: fit a least-squares
//! quadratic to them, minimize the model — a smooth, instant surrogate — with
//! a small nested solver instance, and propose the surrogate's favorite
//! points to the real blackbox. The nested instance runs with this search
//! disabled, so the recursion is one level deep by construction.

use std::sync::Arc;

use rand::RngCore;
use rand_chacha::ChaCha8Rng;

use crate::cache::Cache;
use crate::evaluation::{Evaluation, FnBlackbox};
use crate::linalg::{ridge_least_squares, Matrix};
use crate::mads::Mads;
use crate::mesh::{clip_to_bounds, MeshState};
use crate::params::{BarrierKind, OrderingStrategy, Params, Searches};
use crate::point::Point;
use crate::problem::{OutputKind, Problem};
use crate::trial::{Generator, TrialPoint};

const RIDGE: f64 = 1e-10;
const NESTED_BUDGET: usize = 80;

/// Incumbent candidates of a quadratic surrogate fitted to cached
/// evaluations within `2Δ` of the frame center.
///
/// Falls back to a linear-plus-diagonal model when samples are scarce and
/// returns nothing when even that is underfed or the fit breaks down.
pub fn quad_model_search_points(
    cache: &Cache,
    kinds: &[OutputKind],
    mesh: &MeshState,
    lower: &[f64],
    upper: &[f64],
    rng: &mut ChaCha8Rng,
) -> Vec<TrialPoint> {
    let n = mesh.center().dim();
    let center = mesh.center().clone();
    let radius = 2.0 * mesh.big_delta();

    let samples: Vec<(Point, Evaluation)> = cache
        .snapshot()
        .into_iter()
        .filter(|(p, e)| e.is_ok() && p.sub(&center).norm_inf() <= radius)
        .collect();
    let full_dim = (n + 1) * (n + 2) / 2;
    let full = samples.len() >= full_dim;
    if !full && samples.len() < n + 2 {
        return Vec::new();
    }

    // Design matrix over trust-region coordinates z = (x - center)/radius.
    let basis_dim = if full { full_dim } else { 2 * n + 1 };
    let mut a = Matrix::zeros(samples.len(), basis_dim);
    for (row, (p, _)) in samples.iter().enumerate() {
        for (col, value) in basis(&scaled(p, &center, radius), full).into_iter().enumerate() {
            *a.at_mut(row, col) = value;
        }
    }

    // One model per blackbox output, in declared order.
    let mut models: Vec<Vec<f64>> = Vec::with_capacity(kinds.len());
    let mut constraint_slot = 0usize;
    for kind in kinds {
        let targets: Vec<f64> = samples
            .iter()
            .map(|(_, e)| match kind {
                OutputKind::Obj => e.f,
                _ => e.c[constraint_slot],
            })
            .collect();
        if *kind != OutputKind::Obj {
            constraint_slot += 1;
        }
        match ridge_least_squares(&a, &targets, RIDGE) {
            Some(coeffs) => models.push(coeffs),
            None => return Vec::new(),
        }
    }

    // Minimize the surrogate in the trust box with a nested instance. Its
    // evaluations cost nothing — the model is a handful of flops — and it
    // gets a private context, so nothing leaks into the outer run.
    let model_center = center.clone();
    let model_blackbox = FnBlackbox::new(move |x: &[f64]| {
        let z = scaled(&Point::new(x.to_vec()), &model_center, radius);
        let phi = basis(&z, full);
        models
            .iter()
            .map(|coeffs| coeffs.iter().zip(&phi).map(|(c, b)| c * b).sum())
            .collect()
    });
    // An EB constraint means "never step over the line"; the model's guess
    // of that line is too soft to enforce absolutely, so the surrogate
    // problem relaxes every constraint to PB.
    let nested_kinds: Vec<OutputKind> = kinds
        .iter()
        .map(|k| match k {
            OutputKind::Obj => OutputKind::Obj,
            _ => OutputKind::Pb,
        })
        .collect();
    let nested_lower: Vec<f64> = center
        .as_slice()
        .iter()
        .zip(lower)
        .map(|(c, lo)| (c - radius).max(*lo))
        .collect();
    let nested_upper: Vec<f64> = center
        .as_slice()
        .iter()
        .zip(upper)
        .map(|(c, hi)| (c + radius).min(*hi))
        .collect();
    let nested_problem = Problem::new(n, nested_kinds, Arc::new(model_blackbox))
        .with_bounds(nested_lower, nested_upper)
        .with_x0(center.as_slice().to_vec());
    let Ok(nested_problem) = nested_problem.validate() else {
        return Vec::new();
    };
    let params = nested_model_params(radius, rng.next_u64());
    let Ok(solver) = Mads::new(nested_problem, params) else {
        return Vec::new();
    };
    let Ok(outcome) = solver.run() else {
        return Vec::new();
    };

    let mut out: Vec<TrialPoint> = Vec::new();
    for incumbent in [outcome.best_feasible, outcome.best_infeasible]
        .into_iter()
        .flatten()
    {
        let projected = mesh.project(&incumbent.point);
        if let Some(p) = clip_to_bounds(&projected, mesh, lower, upper) {
            if out.iter().any(|t| t.point == p) {
                continue;
            }
            let direction = p.sub(&center).into_vec();
            out.push(
                TrialPoint::new(p, Generator::QuadModel)
                    .with_direction(direction)
                    .with_mesh(mesh.clone()),
            );
        }
    }
    out
}

/// Parameters of the nested surrogate minimization. The quadratic-model
/// search is off: the nesting never goes deeper than one level.
pub(crate) fn nested_model_params(radius: f64, seed: u64) -> Params {
    Params {
        delta0: radius / 4.0,
        tau: 0.5,
        eps_stop: 1e-9,
        max_bb_eval: NESTED_BUDGET,
        max_iterations: None,
        seed,
        opportunism: true,
        ordering: OrderingStrategy::LastSuccessDirection,
        searches: Searches {
            speculative: true,
            latin_hypercube: false,
            nelder_mead: false,
            quad_model: false,
        },
        n_workers: 1,
        group_max_size: 1,
        mega_search_poll: false,
        barrier: BarrierKind::Progressive,
    }
}

fn scaled(x: &Point, center: &Point, radius: f64) -> Vec<f64> {
    x.as_slice()
        .iter()
        .zip(center.as_slice())
        .map(|(v, c)| (v - c) / radius)
        .collect()
}

/// Polynomial basis at `z`: constant, linear, then either all degree-two
/// monomials (full) or squares only (diagonal fallback).
fn basis(z: &[f64], full: bool) -> Vec<f64> {
    let n = z.len();
    let mut phi = Vec::with_capacity(if full { (n + 1) * (n + 2) / 2 } else { 2 * n + 1 });
    phi.push(1.0);
    phi.extend_from_slice(z);
    if full {
        for i in 0..n {
            for j in i..n {
                phi.push(z[i] * z[j]);
            }
        }
    } else {
        for zi in z {
            phi.push(zi * zi);
        }
    }
    phi
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn obj_only() -> Vec<OutputKind> {
        vec![OutputKind::Obj]
    }

    fn unbounded(n: usize) -> (Vec<f64>, Vec<f64>) {
        (vec![f64::NEG_INFINITY; n], vec![f64::INFINITY; n])
    }

    /// delta = 1/64, frame 1/8, trust radius 1/4.
    fn mesh_at_origin() -> MeshState {
        let m = MeshState::new(Point::new(vec![0.0, 0.0]), 0.125, 0.5).unwrap();
        assert_eq!(m.delta(), 1.0 / 64.0);
        m
    }

    fn grid_cache(f: impl Fn(&[f64]) -> f64, offsets: &[f64]) -> Cache {
        let cache = Cache::new();
        for dx in offsets {
            for dy in offsets {
                let p = Point::new(vec![*dx, *dy]);
                cache.fulfill(&p, Evaluation::ok(f(p.as_slice()), vec![]));
            }
        }
        cache
    }

    #[test]
    fn exact_quadratic_is_recovered_to_one_mesh_cell() {
        // Minimizer chosen on the outer mesh lattice, inside the trust box.
        let target = [3.0 / 64.0, -2.0 / 64.0];
        let f = move |x: &[f64]| (x[0] - target[0]).powi(2) + 2.0 * (x[1] - target[1]).powi(2) + 5.0;
        // 3x3 grid spanning the trust region: 9 samples ≥ 6 needed for the
        // full 2-D quadratic, and the tensor grid makes the fit unisolvent.
        let cache = grid_cache(f, &[-0.125, 0.0, 0.125]);
        let mesh = mesh_at_origin();
        let (lo, hi) = unbounded(2);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let pts = quad_model_search_points(&cache, &obj_only(), &mesh, &lo, &hi, &mut rng);
        assert!(!pts.is_empty(), "surrogate produced no candidate");
        let best = &pts[0].point;
        assert!(
            (best[0] - target[0]).abs() <= 1.0 / 64.0 + 1e-12
                && (best[1] - target[1]).abs() <= 1.0 / 64.0 + 1e-12,
            "surrogate candidate {best:?} missed the true minimizer {target:?}"
        );
        assert!(mesh.on_mesh(best));
    }

    #[test]
    fn too_few_samples_is_a_clean_skip() {
        let cache = Cache::new();
        cache.fulfill(&Point::new(vec![0.0, 0.0]), Evaluation::ok(1.0, vec![]));
        cache.fulfill(&Point::new(vec![0.1, 0.0]), Evaluation::ok(2.0, vec![]));
        cache.fulfill(&Point::new(vec![0.0, 0.1]), Evaluation::ok(3.0, vec![]));
        let mesh = mesh_at_origin();
        let (lo, hi) = unbounded(2);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        // n+2 = 4 usable samples required; only 3 present.
        assert!(quad_model_search_points(&cache, &obj_only(), &mesh, &lo, &hi, &mut rng).is_empty());
    }

    #[test]
    fn diagonal_fallback_works_from_five_samples() {
        let target = [4.0 / 64.0, -4.0 / 64.0];
        let f = move |x: &[f64]| (x[0] - target[0]).powi(2) + (x[1] - target[1]).powi(2);
        let cache = Cache::new();
        let s = 0.125;
        for p in [
            vec![0.0, 0.0],
            vec![s, 0.0],
            vec![-s, 0.0],
            vec![0.0, s],
            vec![0.0, -s],
        ] {
            let e = Evaluation::ok(f(&p), vec![]);
            cache.fulfill(&Point::new(p), e);
        }
        let mesh = mesh_at_origin();
        let (lo, hi) = unbounded(2);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let pts = quad_model_search_points(&cache, &obj_only(), &mesh, &lo, &hi, &mut rng);
        assert!(!pts.is_empty());
        let best = &pts[0].point;
        // 5 samples < 6: the diagonal model was used, and for this separable
        // objective it is exact.
        assert!((best[0] - target[0]).abs() <= 1.0 / 64.0 + 1e-12);
        assert!((best[1] - target[1]).abs() <= 1.0 / 64.0 + 1e-12);
    }

    #[test]
    fn nested_instance_cannot_recurse() {
        let params = nested_model_params(0.25, 123);
        assert!(!params.searches.quad_model);
        assert!(params.validate().is_ok());
    }

    #[test]
    fn constraints_are_modeled_and_relaxed() {
        let kinds = vec![OutputKind::Obj, OutputKind::Eb];
        // Feasible half-plane x0 ≤ 0.05: constraint c = x0 - 0.05.
        let cache = Cache::new();
        for dx in [-0.125, 0.0, 0.125] {
            for dy in [-0.125, 0.0, 0.125] {
                let p = Point::new(vec![dx, dy]);
                let f = (dx - 0.125).powi(2) + dy * dy; // pulls toward x0 = 0.125, infeasible
                cache.fulfill(&p, Evaluation::ok(f, vec![dx - 0.05]));
            }
        }
        let mesh = mesh_at_origin();
        let (lo, hi) = unbounded(2);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let pts = quad_model_search_points(&cache, &kinds, &mesh, &lo, &hi, &mut rng);
        assert!(!pts.is_empty());
        // The nested solve respects the modeled constraint: its feasible
        // incumbent sits at the boundary, not at the unconstrained pull.
        let feasible_candidate = pts
            .iter()
            .map(|t| t.point[0])
            .fold(f64::INFINITY, f64::min);
        assert!(
            feasible_candidate <= 0.05 + 1.0 / 64.0 + 1e-9,
            "candidate x0 = {feasible_candidate} ignored the constraint model"
        );
    }
}
