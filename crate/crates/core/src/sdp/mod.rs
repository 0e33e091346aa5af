//! Semidefinite programs behind PECOK.
//!
//! Two problems are solved:
//!
//! * fixed `K`: `max ⟨S, B⟩` over `𝒞 = {B ⪰ 0, B1 = 1, B ≥ 0, tr B = K}`;
//! * adaptive: `max ⟨S, B⟩ − κ tr B` over `𝒞₀`, the same set without the
//!   trace constraint.
//!
//! The default backend is a two-block ADMM splitting `𝒞` into the spectral
//! piece `{B ⪰ 0, B1 = 1 (, tr B = K)}` and the cone `{B ≥ 0}`. A proximal
//! point method whose projections are computed by Dykstra's algorithm over
//! the three elementary sets is available as an independent cross-check.

mod admm;
mod dykstra;
pub mod project;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gamma::GammaEstimate;
use crate::linalg;
use crate::Matrix;

pub use project::{
    project_affine_fixed_k, project_affine_rowsum, project_nonneg, project_psd, project_psd_affine,
};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SdpBackend {
    #[default]
    Admm,
    Dykstra,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SdpOptions {
    pub max_iters: usize,
    pub eps_abs: f64,
    pub eps_rel: f64,
    /// Initial ADMM penalty; the Dykstra backend uses `1/rho` as its first
    /// proximal step.
    pub rho: f64,
    pub backend: SdpBackend,
}

impl Default for SdpOptions {
    fn default() -> Self {
        Self {
            max_iters: 20_000,
            eps_abs: 1e-6,
            eps_rel: 1e-6,
            rho: 1.0,
            backend: SdpBackend::Admm,
        }
    }
}

impl SdpOptions {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return Err(Error::invalid("max_iters must be at least 1"));
        }
        if !(self.eps_abs > 0.0 && self.eps_rel > 0.0) {
            return Err(Error::invalid("solver tolerances must be positive"));
        }
        if !(self.rho > 0.0 && self.rho.is_finite()) {
            return Err(Error::invalid("rho must be positive"));
        }
        Ok(())
    }

    pub fn with_tolerance(mut self, tol: f64) -> Self {
        self.eps_abs = tol;
        self.eps_rel = tol;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SdpSolution {
    #[serde(skip)]
    pub b_hat: Matrix,
    pub iterations: usize,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub converged: bool,
    pub objective: f64,
}

/// Constraint violations of a candidate matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Feasibility {
    pub row_sum_error: f64,
    pub min_eigenvalue: f64,
    pub min_entry: f64,
    pub asymmetry: f64,
    pub trace: f64,
}

impl Feasibility {
    pub fn of(b: &Matrix) -> Result<Self> {
        Ok(Self {
            row_sum_error: b.row_iter().map(|r| (r.sum() - 1.0).abs()).fold(0.0, f64::max),
            min_eigenvalue: linalg::min_eigenvalue(b)?,
            min_entry: b.iter().copied().fold(f64::INFINITY, f64::min),
            asymmetry: linalg::max_asymmetry(b),
            trace: b.trace(),
        })
    }

    /// Largest violation of `B ⪰ 0`, `B1 = 1`, `B ≥ 0` and symmetry.
    pub fn worst_violation(&self) -> f64 {
        self.row_sum_error
            .max(-self.min_eigenvalue)
            .max(-self.min_entry)
            .max(self.asymmetry)
            .max(0.0)
    }
}

impl SdpSolution {
    pub fn feasibility(&self) -> Result<Feasibility> {
        Feasibility::of(&self.b_hat)
    }

    /// Writes `b_hat` as CSV and the diagnostics as a JSON sidecar.
    pub fn write_dump(
        &self,
        matrix_path: impl AsRef<std::path::Path>,
        diagnostics_path: impl AsRef<std::path::Path>,
    ) -> Result<()> {
        crate::io::save_matrix_csv(matrix_path, &self.b_hat)?;
        crate::io::save_json(diagnostics_path, self)
    }
}

/// Which feasible set a solve targets.
#[derive(Debug, Clone, Copy)]
pub(crate) enum Domain {
    FixedK(usize),
    Free,
}

impl Domain {
    fn trace(self) -> Option<usize> {
        match self {
            Domain::FixedK(k) => Some(k),
            Domain::Free => None,
        }
    }
}

fn check_input(s: &Matrix) -> Result<()> {
    if !s.is_square() || s.nrows() == 0 {
        return Err(Error::invalid("objective matrix must be square and non-empty"));
    }
    if s.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("objective matrix has non-finite entries"));
    }
    let scale = linalg::max_abs(s).max(1.0);
    if linalg::max_asymmetry(s) > 1e-9 * scale {
        return Err(Error::invalid("objective matrix must be symmetric"));
    }
    Ok(())
}

fn solve(target: &Matrix, domain: Domain, opts: &SdpOptions) -> Result<SdpSolution> {
    match opts.backend {
        SdpBackend::Admm => admm::solve(target, domain, opts),
        SdpBackend::Dykstra => dykstra::solve(target, domain, opts),
    }
}

/// `argmax ⟨s, B⟩` over `{B ⪰ 0, B1 = 1, B ≥ 0, tr B = K}`.
pub fn solve_fixed_k(s: &Matrix, k: usize, opts: &SdpOptions) -> Result<SdpSolution> {
    opts.validate()?;
    check_input(s)?;
    let p = s.nrows();
    if k < 1 || k > p {
        return Err(Error::invalid(format!("K = {k} out of range 1..={p}")));
    }
    let mut sol = solve(s, Domain::FixedK(k), opts)?;
    sol.objective = linalg::frobenius_dot(s, &sol.b_hat);
    Ok(sol)
}

/// `argmax ⟨s, B⟩ − κ tr B` over `{B ⪰ 0, B1 = 1, B ≥ 0}`.
pub fn solve_adaptive(s: &Matrix, kappa: f64, opts: &SdpOptions) -> Result<SdpSolution> {
    opts.validate()?;
    check_input(s)?;
    if !(kappa > 0.0 && kappa.is_finite()) {
        return Err(Error::invalid("kappa must be positive and finite"));
    }
    let p = s.nrows();
    let shifted = s - Matrix::identity(p, p) * kappa;
    let mut sol = solve(&shifted, Domain::Free, opts)?;
    sol.objective = linalg::frobenius_dot(s, &sol.b_hat) - kappa * sol.b_hat.trace();
    Ok(sol)
}

/// Data-driven trace penalty `κ̂ = 5 |Γ̂|_∞ (√(p/n) + p/n)`.
pub fn kappa_hat(gamma_hat: &GammaEstimate, n: usize, p: usize) -> Result<f64> {
    if n < 1 {
        return Err(Error::invalid("kappa_hat needs n >= 1"));
    }
    let ratio = p as f64 / n as f64;
    Ok(5.0 * gamma_hat.sup_norm() * (ratio.sqrt() + ratio))
}
