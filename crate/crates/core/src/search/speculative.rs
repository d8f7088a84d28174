//! Speculative search: a rudimentary line search along the last success.
//!
//! If moving along `d` just improved the incumbent, it is worth betting the
//! improvement continues: try `x + d`, `x + 2d`, `x + 4d`, … from the new
//! incumbent `x`.

use crate::mesh::{clip_to_bounds, MeshState};
use crate::point::Point;
use crate::trial::{Generator, TrialPoint};

/// Trial points `x^k + 2^{i-1} d` for `i = 1..=count`, projected to the mesh
/// and clipped to the bounds. Empty when there is no success to speculate on.
pub fn speculative_search_points(
    mesh: &MeshState,
    last_direction: Option<&[f64]>,
    count: usize,
    lower: &[f64],
    upper: &[f64],
) -> Vec<TrialPoint> {
    let Some(d) = last_direction else {
        return Vec::new();
    };
    if d.len() != mesh.center().dim() || d.iter().all(|v| *v == 0.0) {
        return Vec::new();
    }
    let center = mesh.center();
    let mut out = Vec::new();
    let mut factor = 1.0;
    for _ in 0..count {
        let raw: Vec<f64> = center
            .as_slice()
            .iter()
            .zip(d)
            .map(|(c, di)| c + factor * di)
            .collect();
        let projected = mesh.project(&Point::new(raw));
        if let Some(p) = clip_to_bounds(&projected, mesh, lower, upper) {
            let direction = p.sub(center).into_vec();
            out.push(
                TrialPoint::new(p, Generator::Speculative)
                    .with_direction(direction)
                    .with_mesh(mesh.clone()),
            );
        }
        factor *= 2.0;
    }
    out
}
