//! Two-block ADMM for `max ⟨T, B⟩` over `A ∩ N`, where `A` is the spectral
//! set handled by `project_psd_affine` and `N` the nonnegative orthant.
//!
//! Scaled form, with `X ∈ A`, `Y ∈ N`, constraint `X = Y`:
//!
//! ```text
//! X ← P_A(Y − U + T/ρ)
//! Y ← P_N(X + U)
//! U ← U + X − Y
//! ```
//!
//! The returned matrix is `X`, which satisfies the PSD and affine
//! constraints exactly; its negative entries are bounded by the primal
//! residual `‖X − Y‖_F`.

use super::project::{project_nonneg, project_psd_affine};
use super::{Domain, SdpOptions, SdpSolution};
use crate::error::Result;
use crate::linalg;
use crate::Matrix;

const BALANCE_EVERY: usize = 10;
const BALANCE_RATIO: f64 = 10.0;
const RHO_MIN: f64 = 1e-6;
const RHO_MAX: f64 = 1e6;

pub(super) fn solve(target: &Matrix, domain: Domain, opts: &SdpOptions) -> Result<SdpSolution> {
    let p = target.nrows();
    let trace = domain.trace();
    let mut rho = opts.rho;

    let mut x = project_psd_affine(&linalg::uniform(p), trace)?;
    let mut y = project_nonneg(&x);
    let mut u = Matrix::zeros(p, p);

    let mut primal = f64::INFINITY;
    let mut dual = f64::INFINITY;
    let mut converged = false;
    let mut iterations = 0;

    for it in 1..=opts.max_iters {
        iterations = it;
        let v = &y - &u + target / rho;
        x = project_psd_affine(&v, trace)?;
        let y_prev = std::mem::replace(&mut y, project_nonneg(&(&x + &u)));
        u += &x - &y;

        primal = (&x - &y).norm();
        dual = rho * (&y - &y_prev).norm();
        let eps_primal = opts.eps_abs + opts.eps_rel * x.norm().max(y.norm());
        let eps_dual = opts.eps_abs + opts.eps_rel * rho * u.norm();
        if primal <= eps_primal && dual <= eps_dual {
            converged = true;
            break;
        }

        if it % BALANCE_EVERY == 0 {
            if primal > BALANCE_RATIO * dual && rho < RHO_MAX {
                rho *= 2.0;
                u /= 2.0;
            } else if dual > BALANCE_RATIO * primal && rho > RHO_MIN {
                rho /= 2.0;
                u *= 2.0;
            }
        }
    }

    Ok(SdpSolution {
        b_hat: x,
        iterations,
        primal_residual: primal,
        dual_residual: dual,
        converged,
        objective: f64::NAN,
    })
}
