//! Corrected spectral clustering (CSC).
//!
//! Take the `K` leading eigenvectors `Û` of `Σ̃ = Σ̂ − Γ̂` and run K-means on
//! the rows of `Û`. Passing [`GammaEstimate::zero`] gives the uncorrected
//! variant.
//!
//! CSC is equivalent to maximising `⟨Σ̃, B⟩` over `{tr B = K, I ⪰ B ⪰ 0}`,
//! whose maximiser is the spectral projector `B̄ = ÛÛᵗ`; see [`bbar`].

use serde::Serialize;

use crate::error::{Error, Result};
use crate::gamma::GammaEstimate;
use crate::kmeans::{kmeans, KmeansOptions};
use crate::linalg;
use crate::model::{sample_covariance, DataMatrix, Partition};
use crate::Matrix;

/// Relative-free threshold under which `λ_K` and `λ_{K+1}` are considered tied.
pub const EIGENGAP_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectralResult {
    pub partition: Partition,
    /// `p × K` leading eigenvectors.
    #[serde(skip)]
    pub u_hat: Matrix,
    /// Descending.
    pub eigenvalues: Vec<f64>,
    pub eigengap_warning: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Bbar {
    pub matrix: Matrix,
    /// `⟨Σ̃, B̄⟩`, the sum of the `K` largest eigenvalues.
    pub objective: f64,
    /// `λ_K` and `λ_{K+1}` tie, so `B̄` is not unique.
    pub eigengap_warning: bool,
}

fn check_k(k: usize, p: usize) -> Result<()> {
    if k < 1 || k > p {
        return Err(Error::invalid(format!("K = {k} out of range 1..={p}")));
    }
    Ok(())
}

fn check_square(m: &Matrix, what: &'static str) -> Result<()> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch {
            what,
            expected: m.nrows(),
            found: m.ncols(),
        });
    }
    Ok(())
}

struct Leading {
    u: Matrix,
    values: Vec<f64>,
    gap_warning: bool,
}

fn leading(sigma_tilde: &Matrix, k: usize) -> Result<Leading> {
    check_square(sigma_tilde, "spectral input")?;
    let p = sigma_tilde.nrows();
    check_k(k, p)?;
    let eig = linalg::sym_eigen(sigma_tilde)?;
    let gap_warning = k < p && (eig.values[k - 1] - eig.values[k]).abs() <= EIGENGAP_TOL;
    Ok(Leading {
        u: eig.vectors.columns(0, k).into_owned(),
        values: eig.values.as_slice()[..k].to_vec(),
        gap_warning,
    })
}

/// CSC on an explicit matrix `Σ̃` (population tests pass `Σ − Γ`).
pub fn spectral_from_matrix(
    sigma_tilde: &Matrix,
    k: usize,
    seed: u64,
    opts: &KmeansOptions,
) -> Result<SpectralResult> {
    let lead = leading(sigma_tilde, k)?;
    let km = kmeans(&lead.u, k, seed, opts)?;
    Ok(SpectralResult {
        partition: km.partition(),
        u_hat: lead.u,
        eigenvalues: lead.values,
        eigengap_warning: lead.gap_warning,
    })
}

/// CSC on data: eigenvectors of `Σ̂ − Γ̂` with the uncentered sample
/// covariance, then K-means with default options.
pub fn corrected_spectral(
    x: &DataMatrix,
    k: usize,
    gamma_hat: &GammaEstimate,
    seed: u64,
) -> Result<SpectralResult> {
    corrected_spectral_with(x, k, gamma_hat, seed, false, &KmeansOptions::default())
}

pub fn corrected_spectral_with(
    x: &DataMatrix,
    k: usize,
    gamma_hat: &GammaEstimate,
    seed: u64,
    center: bool,
    opts: &KmeansOptions,
) -> Result<SpectralResult> {
    let s = gamma_hat.subtract_from(&sample_covariance(x, center))?;
    spectral_from_matrix(&s, k, seed, opts)
}

/// `B̄ = ÛÛᵗ`, the maximiser of `⟨Σ̃, B⟩` over `{tr B = K, I ⪰ B ⪰ 0}`.
pub fn bbar(sigma_tilde: &Matrix, k: usize) -> Result<Bbar> {
    let lead = leading(sigma_tilde, k)?;
    Ok(Bbar {
        matrix: &lead.u * lead.u.transpose(),
        objective: lead.values.iter().sum(),
        eigengap_warning: lead.gap_warning,
    })
}

/// `tr(Σ) / ‖Σ‖_op`.
pub fn effective_rank(sigma: &Matrix) -> Result<f64> {
    check_square(sigma, "effective rank input")?;
    let eig = linalg::sym_eigen(sigma)?;
    let op = eig.values.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
    if op == 0.0 {
        return Err(Error::invalid("effective rank of the zero matrix"));
    }
    Ok(sigma.trace() / op)
}
