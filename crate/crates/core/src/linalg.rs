//! Small dense linear-algebra helpers shared by the solvers.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::Matrix;

/// Eigenpairs of a symmetric matrix, eigenvalues in descending order.
#[derive(Debug, Clone)]
pub struct SymEigen {
    pub values: DVector<f64>,
    /// Columns are unit eigenvectors matching `values`.
    pub vectors: Matrix,
}

impl SymEigen {
    /// `V diag(f(λ)) Vᵗ`.
    pub fn reconstruct_with(&self, f: impl Fn(f64) -> f64) -> Matrix {
        let mut scaled = self.vectors.clone();
        for (j, mut col) in scaled.column_iter_mut().enumerate() {
            col *= f(self.values[j]);
        }
        &scaled * self.vectors.transpose()
    }

    /// `V diag(values) Vᵗ` with replacement eigenvalues.
    pub fn reconstruct_with_values(&self, values: &[f64]) -> Matrix {
        let mut scaled = self.vectors.clone();
        for (j, mut col) in scaled.column_iter_mut().enumerate() {
            col *= values[j];
        }
        &scaled * self.vectors.transpose()
    }
}

/// Symmetric eigendecomposition sorted by decreasing eigenvalue.
///
/// The input is symmetrized first; only its symmetric part is decomposed.
pub fn sym_eigen(m: &Matrix) -> Result<SymEigen> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch {
            what: "eigendecomposition (square input)",
            expected: m.nrows(),
            found: m.ncols(),
        });
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::Eigen("input contains non-finite entries".into()));
    }
    let n = m.nrows();
    if n == 0 {
        return Ok(SymEigen {
            values: DVector::zeros(0),
            vectors: Matrix::zeros(0, 0),
        });
    }
    let sym = symmetrize(m);
    let eig = SymmetricEigen::try_new(sym, f64::EPSILON, 0)
        .ok_or_else(|| Error::Eigen(format!("QR iteration did not converge for {n}x{n} input")))?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let vectors = Matrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    Ok(SymEigen { values, vectors })
}

pub fn symmetrize(m: &Matrix) -> Matrix {
    (m + m.transpose()) * 0.5
}

/// Frobenius inner product `⟨a, b⟩ = tr(aᵗ b)`.
pub fn frobenius_dot(a: &Matrix, b: &Matrix) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

pub fn max_abs(m: &Matrix) -> f64 {
    m.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

pub fn max_asymmetry(m: &Matrix) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in (i + 1)..n {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst
}

pub fn min_eigenvalue(m: &Matrix) -> Result<f64> {
    let e = sym_eigen(m)?;
    Ok(e.values.iter().copied().fold(f64::INFINITY, f64::min))
}

/// Euclidean projection of `v` onto `{x ≥ 0, Σx = total}`.
pub fn project_onto_simplex(v: &[f64], total: f64) -> Vec<f64> {
    if v.is_empty() {
        return Vec::new();
    }
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    // The largest entry always belongs to the support (or ties at zero when
    // `total = 0`).
    let mut theta = sorted[0] - total;
    for (i, &u) in sorted.iter().enumerate() {
        cumsum += u;
        let t = (cumsum - total) / (i + 1) as f64;
        if u - t > 0.0 {
            theta = t;
        }
    }
    v.iter().map(|&x| (x - theta).max(0.0)).collect()
}

/// Pivoted Cholesky factor of a PSD matrix.
///
/// Returns `L` (n×r) with `L Lᵗ ≈ m`, where `r` is the numerical rank: the
/// factorization stops once the largest remaining pivot is below
/// `tol · max(1, max diag)`. Rank-deficient inputs are therefore accepted.
pub fn pivoted_cholesky(m: &Matrix, tol: f64) -> Result<Matrix> {
    let n = m.nrows();
    if !m.is_square() {
        return Err(Error::DimensionMismatch {
            what: "pivoted Cholesky (square input)",
            expected: n,
            found: m.ncols(),
        });
    }
    let scale = (0..n).map(|i| m[(i, i)].abs()).fold(1.0_f64, f64::max);
    let cutoff = tol * scale;

    let mut work = symmetrize(m);
    let mut perm: Vec<usize> = (0..n).collect();
    // Columns of the factor in permuted coordinates.
    let mut cols: Vec<DVector<f64>> = Vec::new();

    for k in 0..n {
        let (piv, dmax) = (k..n)
            .map(|i| (i, work[(perm[i], perm[i])]))
            .fold((k, f64::NEG_INFINITY), |best, cur| if cur.1 > best.1 { cur } else { best });
        if dmax <= cutoff {
            break;
        }
        perm.swap(k, piv);
        let pk = perm[k];
        let root = dmax.sqrt();
        let mut col = DVector::zeros(n);
        col[pk] = root;
        for &pi in &perm[(k + 1)..] {
            col[pi] = work[(pi, pk)] / root;
        }
        for &pi in &perm[k..] {
            for &pj in &perm[k..] {
                work[(pi, pj)] -= col[pi] * col[pj];
            }
        }
        cols.push(col);
    }

    let r = cols.len();
    let factor = Matrix::from_fn(n, r, |i, j| cols[j][i]);
    Ok(factor)
}

/// Identity-shaped helper: `J/p`, the all-ones matrix scaled by `1/p`.
pub fn uniform(p: usize) -> Matrix {
    DMatrix::from_element(p, p, 1.0 / p as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn eigen_sorted_and_reconstructs() {
        let m = Matrix::from_row_slice(3, 3, &[2.0, 1.0, 0.0, 1.0, 3.0, 1.0, 0.0, 1.0, 4.0]);
        let e = sym_eigen(&m).unwrap();
        assert!(e.values[0] >= e.values[1] && e.values[1] >= e.values[2]);
        let back = e.reconstruct_with(|l| l);
        assert!(max_abs(&(back - &m)) <= 1e-12 * max_abs(&m));
    }

    #[test]
    fn simplex_projection() {
        let x = project_onto_simplex(&[0.5, 0.5, 0.5], 3.0);
        for v in &x {
            assert_abs_diff_eq!(*v, 1.0, epsilon = 1e-15);
        }
        let y = project_onto_simplex(&[3.0, -1.0, 0.0], 1.0);
        assert_eq!(y, vec![1.0, 0.0, 0.0]);
        let z = project_onto_simplex(&[0.2, 0.1], 0.0);
        assert_eq!(z, vec![0.0, 0.0]);
    }

    #[test]
    fn pivoted_cholesky_rank_deficient() {
        let m = Matrix::from_element(3, 3, 2.0);
        let l = pivoted_cholesky(&m, 1e-10).unwrap();
        assert_eq!(l.ncols(), 1);
        assert!(max_abs(&(&l * l.transpose() - &m)) < 1e-12);

        let full = Matrix::from_row_slice(2, 2, &[4.0, 1.0, 1.0, 3.0]);
        let l = pivoted_cholesky(&full, 1e-10).unwrap();
        assert_eq!(l.ncols(), 2);
        assert!(max_abs(&(&l * l.transpose() - &full)) < 1e-12);
    }
}
