//! Euclidean projections onto the pieces of the PECOK feasible sets.
//!
//! The feasible set for a fixed number of groups is
//! `{B ⪰ 0, B1 = 1, B ≥ 0, tr B = K}`; dropping the trace constraint gives
//! the set used by the adaptive estimator. Each piece has a cheap exact
//! projection. [`project_psd_affine`] handles the first two (or three)
//! constraints jointly through a spectral decomposition restricted to `1⊥`.

use nalgebra::DVector;

use crate::error::Result;
use crate::linalg::{self, project_onto_simplex, sym_eigen};
use crate::Matrix;

/// Clips negative eigenvalues of the symmetric part of `m`.
pub fn project_psd(m: &Matrix) -> Result<Matrix> {
    let e = sym_eigen(m)?;
    Ok(linalg::symmetrize(&e.reconstruct_with(|l| l.max(0.0))))
}

/// Entrywise `max(·, 0)` of the symmetric part of `m`.
pub fn project_nonneg(m: &Matrix) -> Matrix {
    let mut out = linalg::symmetrize(m);
    out.apply(|v| *v = v.max(0.0));
    out
}

/// Projection onto `{B symmetric, B1 = 1, tr B = K}`.
pub fn project_affine_fixed_k(m: &Matrix, k: usize) -> Matrix {
    project_affine(m, Some(k as f64))
}

/// Projection onto `{B symmetric, B1 = 1}`.
pub fn project_affine_rowsum(m: &Matrix) -> Matrix {
    project_affine(m, None)
}

/// Closed-form solution of the Lagrange system: the projection of the
/// symmetric part `S` has the form `S + ½(μ1ᵗ + 1μᵗ) + νI`, with `ν = 0`
/// when no trace is imposed.
fn project_affine(m: &Matrix, trace: Option<f64>) -> Matrix {
    let p = m.nrows();
    let s = linalg::symmetrize(m);
    if p == 1 {
        return Matrix::from_element(1, 1, 1.0);
    }
    let pf = p as f64;
    let row_sums: DVector<f64> = DVector::from_iterator(p, s.row_iter().map(|r| r.sum()));
    let total = row_sums.sum();
    let nu = match trace {
        Some(k) => (k - 1.0 - s.trace() + total / pf) / (pf - 1.0),
        None => 0.0,
    };
    let mu_sum = 1.0 - total / pf - nu;
    let mu: DVector<f64> = row_sums.map(|r| (2.0 / pf) * (1.0 - r - nu) - mu_sum / pf);
    let mut out = s;
    for i in 0..p {
        for j in 0..p {
            out[(i, j)] += 0.5 * (mu[i] + mu[j]);
        }
        out[(i, i)] += nu;
    }
    out
}

/// Householder reflector exchanging `e₁` and `1/√p`.
///
/// Stored as the vector `v` with `H = I − 2 v vᵗ / (vᵗ v)`.
struct OnesReflector {
    v: DVector<f64>,
    scale: f64,
}

impl OnesReflector {
    fn new(p: usize) -> Self {
        let u = 1.0 / (p as f64).sqrt();
        let mut v = DVector::from_element(p, u);
        v[0] -= 1.0;
        let vv = v.dot(&v);
        Self { v, scale: 2.0 / vv }
    }

    /// `H M H` via two rank-one updates.
    fn conjugate(&self, m: &Matrix) -> Matrix {
        let vt_m = self.v.transpose() * m;
        let hm = m - (&self.v * vt_m) * self.scale;
        let hm_v = &hm * &self.v;
        hm - (hm_v * self.v.transpose()) * self.scale
    }
}

/// Joint projection onto `{B ⪰ 0, B1 = 1}` and, when `k` is given, `tr B = k`.
///
/// Every such `B` equals `J/p + W` with `W ⪰ 0` supported on `1⊥`, so the
/// problem reduces to projecting the compression of `m` onto `1⊥` onto the
/// PSD cone (or onto PSD matrices of trace `k − 1`).
pub fn project_psd_affine(m: &Matrix, k: Option<usize>) -> Result<Matrix> {
    let p = m.nrows();
    if p == 1 {
        return Ok(Matrix::from_element(1, 1, 1.0));
    }
    let reflector = OnesReflector::new(p);
    let rotated = reflector.conjugate(&linalg::symmetrize(m));
    let inner = rotated.view((1, 1), (p - 1, p - 1)).into_owned();
    let e = sym_eigen(&inner)?;
    let clipped: Vec<f64> = match k {
        Some(k) => project_onto_simplex(e.values.as_slice(), k as f64 - 1.0),
        None => e.values.iter().map(|l| l.max(0.0)).collect(),
    };
    let w = e.reconstruct_with_values(&clipped);
    let mut block = Matrix::zeros(p, p);
    block[(0, 0)] = 1.0;
    block.view_mut((1, 1), (p - 1, p - 1)).copy_from(&w);
    Ok(linalg::symmetrize(&reflector.conjugate(&block)))
}
