//! Proximal point iteration `B ← P_𝒞(B + t T)` where each projection onto
//! the feasible set is computed by Dykstra's alternating projections over
//! the affine subspace, the PSD cone and the nonnegative orthant.
//!
//! Much slower than ADMM; meant for cross-checking on small instances.

use super::project::{project_affine_fixed_k, project_affine_rowsum, project_nonneg, project_psd};
use super::{Domain, Feasibility, SdpOptions, SdpSolution};
use crate::error::Result;
use crate::linalg;
use crate::Matrix;

const INNER_MAX_ITERS: usize = 20_000;
const STEP_GROWTH: f64 = 2.0;
const STEP_MAX: f64 = 1e6;

fn project_affine(m: &Matrix, domain: Domain) -> Matrix {
    match domain {
        Domain::FixedK(k) => project_affine_fixed_k(m, k),
        Domain::Free => project_affine_rowsum(m),
    }
}

/// Dykstra projection of `start` onto the intersection of the three sets.
pub(super) fn project_feasible(start: &Matrix, domain: Domain, tol: f64) -> Result<Matrix> {
    let p = start.nrows();
    let mut x = start.clone();
    let mut incr = [Matrix::zeros(p, p), Matrix::zeros(p, p), Matrix::zeros(p, p)];
    for _ in 0..INNER_MAX_ITERS {
        let before = x.clone();
        for (i, inc) in incr.iter_mut().enumerate() {
            let shifted = &x + &*inc;
            let y = match i {
                0 => project_nonneg(&shifted),
                1 => project_psd(&shifted)?,
                _ => project_affine(&shifted, domain),
            };
            *inc = shifted - &y;
            x = y;
        }
        if (&x - &before).norm() <= tol {
            break;
        }
    }
    Ok(x)
}

pub(super) fn solve(target: &Matrix, domain: Domain, opts: &SdpOptions) -> Result<SdpSolution> {
    let p = target.nrows();
    let inner_tol = 1e-3 * opts.eps_abs;
    let mut step = 1.0 / opts.rho;
    let mut b = project_feasible(&linalg::uniform(p), domain, inner_tol)?;

    let mut primal = f64::INFINITY;
    let mut dual = f64::INFINITY;
    let mut converged = false;
    let mut iterations = 0;

    for it in 1..=opts.max_iters {
        iterations = it;
        let next = project_feasible(&(&b + target * step), domain, inner_tol)?;
        let change = (&next - &b).norm();
        dual = change / step;
        b = next;
        primal = Feasibility::of(&b)?.worst_violation();
        if let Domain::FixedK(k) = domain {
            primal = primal.max((b.trace() - k as f64).abs());
        }
        if change <= opts.eps_abs + opts.eps_rel * b.norm() && primal <= opts.eps_abs {
            converged = true;
            break;
        }
        step = (step * STEP_GROWTH).min(STEP_MAX);
    }

    Ok(SdpSolution {
        b_hat: b,
        iterations,
        primal_residual: primal,
        dual_residual: dual,
        converged,
        objective: f64::NAN,
    })
}
