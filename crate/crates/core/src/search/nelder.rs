//! Nelder-Mead search: simplex moves suggested by past evaluations.
//!
//! Rather than running a full simplex optimization, this search plays one
//! round: build a simplex from the `n+1` best points already evaluated,
//! aim at the worst vertex, and propose the classic four moves (reflection,
//! expansion, outside and inside contraction) as trial points. The solver's
//! own machinery evaluates them and decides what counts as progress.

use crate::barrier::h_measure;
use crate::cache::Cache;
use crate::linalg::{rank, Matrix};
use crate::mesh::{clip_to_bounds, MeshState};
use crate::point::Point;
use crate::problem::OutputKind;
use crate::trial::{Generator, TrialPoint};

/// The four simplex moves against the worst vertex, projected to the mesh
/// and clipped to bounds. Empty when the cache is too thin or the best
/// points are affinely dependent.
pub fn nm_search_points(
    cache: &Cache,
    kinds: &[OutputKind],
    mesh: &MeshState,
    lower: &[f64],
    upper: &[f64],
) -> Vec<TrialPoint> {
    let n = mesh.center().dim();
    let Some(simplex) = best_simplex(cache, kinds, n) else {
        return Vec::new();
    };
    let worst = &simplex[n];
    let mut centroid = vec![0.0; n];
    for vertex in &simplex[..n] {
        for (c, v) in centroid.iter_mut().zip(vertex.as_slice()) {
            *c += v / n as f64;
        }
    }
    // Moves along the worst-to-centroid axis: x(t) = centroid + t (centroid - worst).
    [1.0, 2.0, 0.5, -0.5]
        .iter()
        .filter_map(|t| {
            let coords: Vec<f64> = centroid
                .iter()
                .zip(worst.as_slice())
                .map(|(c, w)| c + t * (c - w))
                .collect();
            let projected = mesh.project(&Point::new(coords));
            clip_to_bounds(&projected, mesh, lower, upper)
        })
        .map(|p| {
            let direction = p.sub(mesh.center()).into_vec();
            TrialPoint::new(p, Generator::NelderMead)
                .with_direction(direction)
                .with_mesh(mesh.clone())
        })
        .collect()
}

/// The `n+1` best evaluated points in barrier order — feasible points by
/// objective, then infeasible by (violation, objective) — best first,
/// provided they form a non-degenerate simplex.
fn best_simplex(cache: &Cache, kinds: &[OutputKind], n: usize) -> Option<Vec<Point>> {
    let mut scored: Vec<(Point, f64, f64)> = cache
        .snapshot()
        .into_iter()
        .filter(|(_, e)| e.is_ok())
        .map(|(p, e)| {
            let h = h_measure(&e, kinds);
            (p, h, e.f)
        })
        .filter(|(_, h, _)| h.is_finite())
        .collect();
    if scored.len() < n + 1 {
        return None;
    }
    scored.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.2.total_cmp(&b.2)));
    let vertices: Vec<Point> = scored.into_iter().take(n + 1).map(|(p, _, _)| p).collect();

    // Degenerate (affinely dependent) vertices give a flat simplex whose
    // centroid axis is meaningless; skip the search in that case.
    let mut edges = Matrix::zeros(n, n);
    for j in 0..n {
        for i in 0..n {
            *edges.at_mut(i, j) = vertices[j + 1][i] - vertices[0][i];
        }
    }
    (rank(&edges) == n).then_some(vertices)
}
