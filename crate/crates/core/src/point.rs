//! Points in decision space.
//!
//! A [`Point`] is an immutable coordinate vector with two extra guarantees on
//! top of `Vec<f64>`: every coordinate is finite, and negative zero is
//! normalized to positive zero. Together these make bitwise equality coincide
//! with numeric equality, so points can serve directly as hash-map keys — the
//! evaluation cache relies on that.

use std::fmt;
use std::hash::{Hash, Hasher};

use serde::{Deserialize, Serialize};

/// An immutable point in `R^n`, usable as a cache key.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "Vec<f64>", into = "Vec<f64>")]
pub struct Point {
    coords: Vec<f64>,
}

impl Point {
    /// Wraps a coordinate vector.
    ///
    /// Negative zeros are normalized so that equal-valued points are also
    /// bit-equal. Coordinates are expected to be finite; this is a programmer
    /// invariant, checked in debug builds.
    pub fn new(mut coords: Vec<f64>) -> Self {
        for c in coords.iter_mut() {
            debug_assert!(c.is_finite(), "point coordinate must be finite, got {c}");
            if *c == 0.0 {
                *c = 0.0; // collapses -0.0
            }
        }
        Point { coords }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.coords
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.coords
    }

    /// Euclidean inner product with another point of the same dimension.
    pub fn dot(&self, other: &Point) -> f64 {
        debug_assert_eq!(self.dim(), other.dim());
        self.coords
            .iter()
            .zip(&other.coords)
            .map(|(a, b)| a * b)
            .sum()
    }

    /// Componentwise difference `self - other`.
    pub fn sub(&self, other: &Point) -> Point {
        debug_assert_eq!(self.dim(), other.dim());
        Point::new(
            self.coords
                .iter()
                .zip(&other.coords)
                .map(|(a, b)| a - b)
                .collect(),
        )
    }

    /// Largest absolute coordinate (the `l_inf` norm).
    pub fn norm_inf(&self) -> f64 {
        self.coords.iter().fold(0.0, |m, c| m.max(c.abs()))
    }

    pub fn norm2(&self) -> f64 {
        self.dot(self).sqrt()
    }
}

impl Eq for Point {}

impl Hash for Point {
    fn hash<H: Hasher>(&self, state: &mut H) {
        // Finite, canonicalized coordinates make bit patterns a sound identity.
        for c in &self.coords {
            state.write_u64(c.to_bits());
        }
    }
}

impl From<Vec<f64>> for Point {
    fn from(coords: Vec<f64>) -> Self {
        Point::new(coords)
    }
}

impl From<Point> for Vec<f64> {
    fn from(p: Point) -> Self {
        p.coords
    }
}

impl From<&[f64]> for Point {
    fn from(coords: &[f64]) -> Self {
        Point::new(coords.to_vec())
    }
}

impl std::ops::Index<usize> for Point {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.coords[i]
    }
}

impl fmt::Debug for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.coords.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, c) in self.coords.iter().enumerate() {
            if i > 0 {
                write!(f, " ")?;
            }
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashMap;

    #[test]
    fn negative_zero_is_normalized() {
        let a = Point::new(vec![0.0, 1.0]);
        let b = Point::new(vec![-0.0, 1.0]);
        assert_eq!(a, b);
        let mut map = HashMap::new();
        map.insert(a, 1);
        assert_eq!(map.get(&b), Some(&1));
    }

    #[test]
    fn equality_is_exact() {
        let a = Point::new(vec![0.1 + 0.2]);
        let b = Point::new(vec![0.3]);
        // 0.1 + 0.2 != 0.3 in f64; the cache must treat these as distinct.
        assert_ne!(a, b);
    }

    #[test]
    fn display_round_trips_through_parse() {
        let p = Point::new(vec![0.1, -2.5e-17, 318.5]);
        let text = p.to_string();
        let back: Vec<f64> = text
            .split_whitespace()
            .map(|t| t.parse::<f64>().unwrap())
            .collect();
        assert_eq!(Point::new(back), p);
    }

    #[test]
    fn dot_and_norms() {
        let p = Point::new(vec![3.0, -4.0]);
        assert_eq!(p.dot(&p), 25.0);
        assert_eq!(p.norm2(), 5.0);
        assert_eq!(p.norm_inf(), 4.0);
    }
}
