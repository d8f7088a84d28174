//! Minimal dense linear algebra for small matrices.
//!
//! The algorithm only ever needs three kernels — a Householder reflector, a
//! rank check, and a damped least-squares solve — on matrices no larger than
//! a few hundred rows, so these are written directly rather than pulling in a
//! matrix library.

/// Row-major dense matrix.
#[derive(Clone, Debug)]
pub(crate) struct Matrix {
    pub rows: usize,
    pub cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    #[inline]
    pub fn at(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn at_mut(&mut self, r: usize, c: usize) -> &mut f64 {
        &mut self.data[r * self.cols + c]
    }

    pub fn column(&self, c: usize) -> Vec<f64> {
        (0..self.rows).map(|r| self.at(r, c)).collect()
    }
}

/// The Householder reflector `H = I - 2 v v^T` for a unit vector `v`.
///
/// Its columns are mutually orthogonal and span `R^n` together with their
/// negatives, which is what the poll direction construction needs.
pub(crate) fn householder(v: &[f64]) -> Matrix {
    let n = v.len();
    let mut h = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let id = if i == j { 1.0 } else { 0.0 };
            *h.at_mut(i, j) = id - 2.0 * v[i] * v[j];
        }
    }
    h
}

/// Rank of a small matrix by Gaussian elimination with partial pivoting.
pub(crate) fn rank(m: &Matrix) -> usize {
    let mut a = m.clone();
    let mut rank = 0;
    let mut row = 0;
    // Scale-aware tolerance: entries below this ratio of the largest pivot
    // candidate count as zero.
    let scale = a.data.iter().fold(0.0f64, |s, v| s.max(v.abs()));
    if scale == 0.0 {
        return 0;
    }
    let tol = scale * 1e-12 * (a.rows.max(a.cols) as f64);
    for col in 0..a.cols {
        if row >= a.rows {
            break;
        }
        let (pivot_row, pivot_abs) = (row..a.rows)
            .map(|r| (r, a.at(r, col).abs()))
            .max_by(|x, y| x.1.total_cmp(&y.1))
            .unwrap();
        if pivot_abs <= tol {
            continue;
        }
        if pivot_row != row {
            for c in 0..a.cols {
                let tmp = a.at(row, c);
                *a.at_mut(row, c) = a.at(pivot_row, c);
                *a.at_mut(pivot_row, c) = tmp;
            }
        }
        for r in row + 1..a.rows {
            let factor = a.at(r, col) / a.at(row, col);
            for c in col..a.cols {
                *a.at_mut(r, c) -= factor * a.at(row, c);
            }
        }
        row += 1;
        rank += 1;
    }
    rank
}

/// Solves the regularized normal equations `(A^T A + ridge I) x = A^T b`.
///
/// The ridge keeps the system positive definite even when `A` has fewer rows
/// than columns, so underdetermined fits degrade gracefully instead of
/// failing. Returns `None` if the factorization still breaks down
/// numerically.
pub(crate) fn ridge_least_squares(a: &Matrix, b: &[f64], ridge: f64) -> Option<Vec<f64>> {
    assert_eq!(a.rows, b.len());
    let n = a.cols;
    // Normal matrix and right-hand side.
    let mut ata = Matrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let mut s = 0.0;
            for r in 0..a.rows {
                s += a.at(r, i) * a.at(r, j);
            }
            *ata.at_mut(i, j) = s;
            *ata.at_mut(j, i) = s;
        }
        *ata.at_mut(i, i) += ridge;
    }
    let mut atb = vec![0.0; n];
    for (i, slot) in atb.iter_mut().enumerate() {
        *slot = (0..a.rows).map(|r| a.at(r, i) * b[r]).sum();
    }
    cholesky_solve(&mut ata, &mut atb).then_some(atb)
}

/// In-place Cholesky factorization and solve; `a` must be symmetric positive
/// definite. Returns false if a pivot is not strictly positive.
fn cholesky_solve(a: &mut Matrix, b: &mut [f64]) -> bool {
    let n = a.rows;
    for j in 0..n {
        let mut d = a.at(j, j);
        for k in 0..j {
            d -= a.at(j, k) * a.at(j, k);
        }
        if !(d > 0.0) || !d.is_finite() {
            return false;
        }
        let d = d.sqrt();
        *a.at_mut(j, j) = d;
        for i in j + 1..n {
            let mut s = a.at(i, j);
            for k in 0..j {
                s -= a.at(i, k) * a.at(j, k);
            }
            *a.at_mut(i, j) = s / d;
        }
    }
    // Forward substitution L y = b.
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= a.at(i, k) * b[k];
        }
        b[i] = s / a.at(i, i);
    }
    // Back substitution L^T x = y.
    for i in (0..n).rev() {
        let mut s = b[i];
        for k in i + 1..n {
            s -= a.at(k, i) * b[k];
        }
        b[i] = s / a.at(i, i);
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn householder_matches_direct_formula() {
        // v = (3/5, 4/5): H = [[7/25, -24/25], [-24/25, -7/25]].
        let h = householder(&[0.6, 0.8]);
        let expected = [[7.0 / 25.0, -24.0 / 25.0], [-24.0 / 25.0, -7.0 / 25.0]];
        for i in 0..2 {
            for j in 0..2 {
                assert!(
                    (h.at(i, j) - expected[i][j]).abs() < 1e-15,
                    "H[{i}][{j}] = {}, expected {}",
                    h.at(i, j),
                    expected[i][j]
                );
            }
        }
    }

    #[test]
    fn householder_columns_are_orthogonal() {
        let v = [0.5, -0.5, 0.5, 0.5];
        let h = householder(&v);
        for i in 0..4 {
            for j in 0..4 {
                let dot: f64 = (0..4).map(|r| h.at(r, i) * h.at(r, j)).sum();
                let expected = if i == j { 1.0 } else { 0.0 };
                assert!((dot - expected).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn rank_detects_deficiency() {
        let mut full = Matrix::zeros(3, 3);
        for i in 0..3 {
            *full.at_mut(i, i) = 1.0;
        }
        assert_eq!(rank(&full), 3);

        let mut deficient = Matrix::zeros(3, 3);
        for j in 0..3 {
            *deficient.at_mut(0, j) = j as f64 + 1.0;
            *deficient.at_mut(1, j) = 2.0 * (j as f64 + 1.0);
            *deficient.at_mut(2, j) = -1.0;
        }
        assert_eq!(rank(&deficient), 2);
        assert_eq!(rank(&Matrix::zeros(2, 5)), 0);
    }

    #[test]
    fn least_squares_recovers_exact_solution() {
        // Overdetermined consistent system: y = 2 x - 1 sampled at 4 points.
        let xs = [0.0, 1.0, 2.0, 3.0];
        let mut a = Matrix::zeros(4, 2);
        let mut b = vec![0.0; 4];
        for (r, x) in xs.iter().enumerate() {
            *a.at_mut(r, 0) = 1.0;
            *a.at_mut(r, 1) = *x;
            b[r] = 2.0 * x - 1.0;
        }
        let sol = ridge_least_squares(&a, &b, 1e-10).unwrap();
        assert!((sol[0] + 1.0).abs() < 1e-8);
        assert!((sol[1] - 2.0).abs() < 1e-8);
    }
}
