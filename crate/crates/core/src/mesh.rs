//! The underlying mesh and frame geometry.
//!
//! All trial points live on the mesh `M = {center + delta * y : y integer}`,
//! a lattice of spacing `delta` (the *mesh size*) anchored at the current
//! incumbent. Poll points are additionally confined to the *frame* of radius
//! `Delta >= delta` around the center. The two sizes are coupled by
//!
//! ```text
//! delta = min(Delta, Delta^2)
//! ```
//!
//! so that refining the frame (`Delta *= tau`) shrinks the mesh quadratically
//! once `Delta < 1`: the set of reachable poll directions grows denser as the
//! algorithm closes in, which is what makes the method *mesh adaptive*.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{householder, rank, Matrix};
use crate::point::Point;

/// Mesh and frame state for one optimization instance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeshState {
    center: Point,
    delta: f64,
    big_delta: f64,
    tau: f64,
}

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("frame size must be positive and finite, got {0}")]
    NonPositiveFrame(f64),
}

impl MeshState {
    pub fn new(center: Point, delta0: f64, tau: f64) -> Result<Self, MeshError> {
        if !(delta0 > 0.0) || !delta0.is_finite() {
            return Err(MeshError::NonPositiveFrame(delta0));
        }
        debug_assert!(tau > 0.0 && tau < 1.0);
        Ok(MeshState {
            center,
            delta: mesh_size(delta0),
            big_delta: delta0,
            tau,
        })
    }

    /// Mesh size `delta` (lattice spacing).
    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Frame size `Delta` (poll radius).
    pub fn big_delta(&self) -> f64 {
        self.big_delta
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn center(&self) -> &Point {
        &self.center
    }

    /// Moves the mesh origin (the incumbent changed).
    pub fn recenter(&mut self, center: Point) {
        self.center = center;
    }

    /// Grows the frame by `1/tau` after a full success.
    pub fn enlarge(&mut self) {
        self.set_frame_size(self.big_delta / self.tau)
            .expect("enlarging a valid frame keeps it valid");
    }

    /// Shrinks the frame by `tau` after a failed iteration.
    pub fn refine(&mut self) {
        self.set_frame_size(self.big_delta * self.tau)
            .expect("refining a valid frame keeps it valid");
    }

    /// Sets the frame size directly, recomputing the mesh size law.
    pub fn set_frame_size(&mut self, big_delta: f64) -> Result<(), MeshError> {
        if !(big_delta > 0.0) || !big_delta.is_finite() {
            return Err(MeshError::NonPositiveFrame(big_delta));
        }
        self.big_delta = big_delta;
        self.delta = mesh_size(big_delta);
        Ok(())
    }

    /// Nearest mesh point, rounding halves away from zero.
    pub fn project(&self, x: &Point) -> Point {
        let coords = x
            .as_slice()
            .iter()
            .zip(self.center.as_slice())
            .map(|(xi, ci)| ci + self.delta * ((xi - ci) / self.delta).round())
            .collect();
        Point::new(coords)
    }

    /// Is `x` exactly a mesh point?
    ///
    /// Equivalent to `(x - center) / delta` being integer, expressed as a
    /// reconstruction check so that every point actually generated via
    /// `center + delta * y` tests true even after floating-point rounding.
    pub fn on_mesh(&self, x: &Point) -> bool {
        self.project(x) == *x
    }

    /// The trial point `center + delta * d`.
    pub fn point_from_direction(&self, d: &[f64]) -> Point {
        let coords = self
            .center
            .as_slice()
            .iter()
            .zip(d)
            .map(|(c, di)| c + self.delta * di)
            .collect();
        Point::new(coords)
    }

    /// Integer scale available to poll directions: the largest multiple of
    /// `delta` that stays within the frame, preferring the rounded ratio when
    /// it fits.
    fn direction_scale(&self) -> f64 {
        let ratio = self.big_delta / self.delta;
        let mut s = ratio.round();
        if s * self.delta > self.big_delta {
            s = ratio.floor();
        }
        while s > 1.0 && s * self.delta > self.big_delta {
            s -= 1.0;
        }
        s.max(1.0)
    }
}

/// The mesh size law `delta = min(Delta, Delta^2)`.
fn mesh_size(big_delta: f64) -> f64 {
    big_delta.min(big_delta * big_delta)
}

/// Generates `2n` poll directions from a random Householder reflector.
///
/// A random unit vector `v` defines `H = I - 2 v v^T`, whose columns are
/// orthonormal. Each column is stretched to the frame boundary (infinity
/// norm) and rounded to integers, and the set is completed with the
/// negatives, giving a positive spanning set of integer directions whose
/// poll points stay inside the frame.
///
/// Rounding can in principle collapse directions onto each other; the
/// construction checks the span and redraws `v` in that event, falling back
/// to signed coordinate directions if randomness keeps failing.
pub fn ortho_2n_directions<R: Rng>(rng: &mut R, mesh: &MeshState) -> Vec<Vec<f64>> {
    let n = mesh.center().dim();
    let scale = mesh.direction_scale();
    for _ in 0..8 {
        let v = random_unit_vector(rng, n);
        let dirs = directions_from_unit(&v, scale);
        if spans(&dirs, n) {
            return complete_with_negatives(dirs);
        }
    }
    // Extremely unlikely; keep polling well-defined regardless.
    let mut axes = Vec::with_capacity(n);
    for i in 0..n {
        let mut d = vec![0.0; n];
        d[i] = scale;
        axes.push(d);
    }
    complete_with_negatives(axes)
}

fn random_unit_vector<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-9 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}

/// The positive half of the direction set: Householder columns normalized to
/// the frame boundary and rounded to integer multiples of the mesh size.
fn directions_from_unit(v: &[f64], scale: f64) -> Vec<Vec<f64>> {
    let n = v.len();
    let h = householder(v);
    let mut dirs = Vec::with_capacity(n);
    for j in 0..n {
        let col = h.column(j);
        let max = col.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        debug_assert!(max > 0.0, "Householder columns are unit vectors");
        dirs.push(col.iter().map(|x| (scale * x / max).round()).collect());
    }
    dirs
}

fn spans(dirs: &[Vec<f64>], n: usize) -> bool {
    let mut m = Matrix::zeros(n, dirs.len());
    for (j, d) in dirs.iter().enumerate() {
        for (i, value) in d.iter().enumerate() {
            *m.at_mut(i, j) = *value;
        }
    }
    rank(&m) == n
}

fn complete_with_negatives(mut dirs: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    let negatives: Vec<Vec<f64>> = dirs
        .iter()
        .map(|d| d.iter().map(|x| -x).collect())
        .collect();
    dirs.extend(negatives);
    dirs
}

/// Snaps a candidate into the variable bounds and back onto the mesh.
///
/// Returns `None` when the re-projected point still violates a bound (the
/// nearest mesh point in range may not exist near tight bounds).
pub fn clip_to_bounds(
    candidate: &Point,
    mesh: &MeshState,
    lower: &[f64],
    upper: &[f64],
) -> Option<Point> {
    let mut coords: Vec<f64> = candidate.as_slice().to_vec();
    let mut snapped = false;
    for (i, c) in coords.iter_mut().enumerate() {
        if *c < lower[i] {
            *c = lower[i];
            snapped = true;
        } else if *c > upper[i] {
            *c = upper[i];
            snapped = true;
        }
    }
    let point = if snapped {
        mesh.project(&Point::new(coords))
    } else {
        // Already in bounds; trust the caller to have placed it on the mesh.
        return Some(candidate.clone());
    };
    let ok = point
        .as_slice()
        .iter()
        .enumerate()
        .all(|(i, c)| *c >= lower[i] && *c <= upper[i]);
    ok.then_some(point)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn mesh(center: Vec<f64>, delta0: f64) -> MeshState {
        MeshState::new(Point::new(center), delta0, 0.5).unwrap()
    }

    #[test]
    fn mesh_size_law() {
        assert_eq!(mesh_size(0.5), 0.25);
        assert_eq!(mesh_size(1.0), 1.0);
        assert_eq!(mesh_size(4.0), 4.0);
    }

    #[test]
    fn frame_updates_track_the_law() {
        let mut m = mesh(vec![0.0], 0.25);
        assert_eq!(m.delta(), 0.0625);
        m.enlarge();
        assert_eq!((m.big_delta(), m.delta()), (0.5, 0.25));
        m.refine();
        m.refine();
        assert_eq!((m.big_delta(), m.delta()), (0.125, 0.015625));
        // refine then enlarge is the identity for tau = 1/2 (exact in binary).
        let before = m.clone();
        m.refine();
        m.enlarge();
        assert_eq!(m, before);
    }

    #[test]
    fn repeated_refinement_is_exact_in_binary() {
        let mut m = mesh(vec![0.0, 0.0], 1.0);
        for j in 1..=40u32 {
            m.refine();
            assert_eq!(m.big_delta(), 2.0f64.powi(-(j as i32)));
            assert_eq!(m.delta(), 4.0f64.powi(-(j as i32)));
        }
    }

    #[test]
    fn rejects_nonpositive_frame() {
        assert!(MeshState::new(Point::new(vec![0.0]), 0.0, 0.5).is_err());
        assert!(MeshState::new(Point::new(vec![0.0]), -1.0, 0.5).is_err());
        assert!(MeshState::new(Point::new(vec![0.0]), f64::NAN, 0.5).is_err());
    }

    #[test]
    fn projection_rounds_to_nearest_mesh_point() {
        let m = mesh(vec![0.0], 0.5); // delta = 0.25
        assert_eq!(m.project(&Point::new(vec![0.3])), Point::new(vec![0.25]));
        assert_eq!(m.project(&Point::new(vec![0.37])), Point::new(vec![0.25]));
        assert_eq!(m.project(&Point::new(vec![0.38])), Point::new(vec![0.5]));
    }

    #[test]
    fn projection_ties_round_away_from_zero() {
        let m = mesh(vec![0.0], 0.5); // delta = 0.25
        // 0.375 is exactly between mesh points 0.25 and 0.5; both distances
        // are 0.125 exactly (all powers of two), so the tie rule decides.
        let x = 0.375_f64;
        assert_eq!((x - 0.25).abs(), (0.5 - x).abs());
        assert_eq!(m.project(&Point::new(vec![x])), Point::new(vec![0.5]));
        assert_eq!(m.project(&Point::new(vec![-x])), Point::new(vec![-0.5]));
    }

    #[test]
    fn on_mesh_examples() {
        // A lattice of spacing 0.5 around the origin (mesh size set directly;
        // only exercising the membership predicate here).
        let m = MeshState {
            center: Point::new(vec![0.0, 0.0]),
            delta: 0.5,
            big_delta: 1.0,
            tau: 0.5,
        };
        assert!(m.on_mesh(&Point::new(vec![1.5, -2.0]))); // quotients (3, -4)
        assert!(!m.on_mesh(&Point::new(vec![0.3, 0.0]))); // 0.3 / 0.5 is not integer
        assert!(m.on_mesh(m.center()));
    }

    #[test]
    fn every_projected_point_is_on_mesh() {
        let m = mesh(vec![0.3, -1.7], 0.7);
        for i in 0..100 {
            let x = Point::new(vec![i as f64 * 0.13 - 5.0, (i as f64).sin() * 3.0]);
            let p = m.project(&x);
            assert!(m.on_mesh(&p), "projection of {x:?} not on mesh: {p:?}");
            // Idempotence.
            assert_eq!(m.project(&p), p);
        }
    }

    #[test]
    fn one_dimensional_directions_reach_the_frame() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let m = {
            let mut m = mesh(vec![0.0], 1.0);
            m.refine();
            m.refine(); // big_delta 0.25, delta 0.0625, scale 4
            m
        };
        let dirs = ortho_2n_directions(&mut rng, &m);
        let mut flat: Vec<f64> = dirs.iter().map(|d| d[0]).collect();
        flat.sort_by(f64::total_cmp);
        assert_eq!(flat, vec![-4.0, 4.0]);
    }

    #[test]
    fn axis_aligned_reflector_gives_signed_axes() {
        // v = (1, 0): H = [[-1, 0], [0, 1]] so the positive half is
        // {(-s, 0), (0, s)}.
        let dirs = directions_from_unit(&[1.0, 0.0], 3.0);
        assert_eq!(dirs, vec![vec![-3.0, 0.0], vec![0.0, 3.0]]);
    }

    #[test]
    fn directions_come_in_opposite_pairs_and_span() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for n in [1usize, 2, 3, 5, 8] {
            let m = mesh(vec![0.0; n], 0.5);
            let dirs = ortho_2n_directions(&mut rng, &m);
            assert_eq!(dirs.len(), 2 * n);
            for i in 0..n {
                let sum_zero = dirs[i]
                    .iter()
                    .zip(&dirs[i + n])
                    .all(|(a, b)| *a + *b == 0.0);
                assert!(sum_zero, "direction {i} is not mirrored");
            }
            assert!(spans(&dirs, n));
        }
    }

    #[test]
    fn poll_offsets_stay_inside_the_frame() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        // Include frame sizes whose ratio big_delta/delta is not an integer.
        for delta0 in [1.0, 2.0, 0.3, 0.7, 1.3] {
            let mut m = mesh(vec![0.0; 4], delta0);
            for _ in 0..6 {
                let dirs = ortho_2n_directions(&mut rng, &m);
                for d in &dirs {
                    let offset = d.iter().fold(0.0f64, |acc, x| acc.max(x.abs())) * m.delta();
                    assert!(
                        offset <= m.big_delta(),
                        "offset {offset} exceeds frame {} at delta0 {delta0}",
                        m.big_delta()
                    );
                    // Directions are integer vectors.
                    assert!(d.iter().all(|x| x.fract() == 0.0));
                }
                m.refine();
            }
        }
    }

    #[test]
    fn clipping_snaps_to_bound_then_remeshes() {
        let m = mesh(vec![0.0, 0.0], 0.5); // delta 0.25
        let lower = [-10.0, -10.0];
        let upper = [0.6, 10.0];
        // In bounds: untouched.
        let inside = Point::new(vec![0.5, 0.25]);
        assert_eq!(
            clip_to_bounds(&inside, &m, &lower, &upper),
            Some(inside.clone())
        );
        // Outside: snapped to 0.6, re-projected to the nearest mesh point at
        // or below the bound (0.5).
        let outside = Point::new(vec![1.25, 0.0]);
        assert_eq!(
            clip_to_bounds(&outside, &m, &lower, &upper),
            Some(Point::new(vec![0.5, 0.0]))
        );
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn projection_is_idempotent(
            cx in -100.0f64..100.0,
            x in -100.0f64..100.0,
            refines in 0usize..10,
        ) {
            let mut m = mesh(vec![cx], 1.0);
            for _ in 0..refines {
                m.refine();
            }
            let p = m.project(&Point::new(vec![x]));
            prop_assert_eq!(m.project(&p), p.clone());
            prop_assert!(m.on_mesh(&p));
        }

        #[test]
        fn random_witnesses_have_an_ascending_direction(seed in 0u64..500, n in 1usize..6) {
            // Positive spanning: for any nonzero witness y there is a
            // direction with positive inner product.
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let m = mesh(vec![0.0; n], 1.0);
            let dirs = ortho_2n_directions(&mut rng, &m);
            for w in 0..20 {
                let y: Vec<f64> = (0..n)
                    .map(|i| ((seed as f64 + w as f64) * 0.7 + i as f64 * 1.3).sin())
                    .collect();
                if y.iter().all(|v| v.abs() < 1e-12) {
                    continue;
                }
                let best = dirs
                    .iter()
                    .map(|d| d.iter().zip(&y).map(|(a, b)| a * b).sum::<f64>())
                    .fold(f64::NEG_INFINITY, f64::max);
                prop_assert!(best > 0.0, "no ascending direction for witness {:?}", y);
            }
        }
    }
}
