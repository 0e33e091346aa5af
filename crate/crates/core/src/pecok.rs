//! End-to-end PECOK: noise estimate, SDP, rounding.
//!
//! ```text
//! Γ̂ ← estimate(X)
//! B̂ ← argmax_{B ∈ 𝒞} ⟨Σ̂ − Γ̂, B⟩            (fixed K)
//!   or argmax_{B ∈ 𝒞₀} ⟨Σ̂ − Γ̂, B⟩ − κ̂ tr B,  K̂ = round(tr B̂)   (adaptive)
//! Ĝ ← kmeans(rows of B̂, K)
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::gamma::{self, GammaEstimate, GammaMethod};
use crate::kmeans::{kmeans, KmeansOptions};
use crate::model::{sample_covariance, DataMatrix, ModelSpec, Partition};
use crate::sdp::{self, SdpOptions, SdpSolution};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PecokOptions {
    pub gamma_method: GammaMethod,
    pub sdp: SdpOptions,
    pub kmeans: KmeansOptions,
    /// Remove column means before forming `Σ̂`. The model is centered, so
    /// this is off by default.
    pub center: bool,
    #[serde(skip)]
    pub execution: Execution,
}

impl Default for PecokOptions {
    fn default() -> Self {
        Self {
            gamma_method: GammaMethod::Main,
            sdp: SdpOptions::default(),
            kmeans: KmeansOptions::default(),
            center: false,
            execution: Execution::default(),
        }
    }
}

/// How the number of groups is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GroupCount {
    Fixed(usize),
    /// Trace-penalised SDP; `None` uses `κ̂` from the noise estimate.
    Adaptive(Option<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PecokResult {
    pub partition: Partition,
    pub k: usize,
    pub tr_bhat: f64,
    /// Penalty used in adaptive mode.
    pub kappa: Option<f64>,
    pub solution: SdpSolution,
    pub gamma: GammaEstimate,
}

/// Runs the pipeline on data. `truth` is only consulted for the oracle
/// noise estimate.
pub fn pecok(
    x: &DataMatrix,
    groups: GroupCount,
    seed: u64,
    truth: Option<&ModelSpec>,
    opts: &PecokOptions,
) -> Result<PecokResult> {
    let gamma_hat = gamma::estimate(x, opts.gamma_method, truth, opts.execution)?;
    let s = gamma_hat.subtract_from(&sample_covariance(x, opts.center))?;
    let kappa = match groups {
        GroupCount::Adaptive(Some(kappa)) => Some(kappa),
        GroupCount::Adaptive(None) => {
            let kappa = sdp::kappa_hat(&gamma_hat, x.n(), x.p())?;
            if kappa <= 0.0 {
                return Err(Error::invalid(
                    "adaptive mode needs a nonzero noise estimate (kappa would be 0)",
                ));
            }
            Some(kappa)
        }
        GroupCount::Fixed(_) => None,
    };
    round_solution(&s, groups, kappa, seed, gamma_hat, opts)
}

/// Pipeline on an explicit target matrix `s` (for population inputs).
pub fn pecok_from_matrix(
    s: &crate::Matrix,
    groups: GroupCount,
    seed: u64,
    opts: &PecokOptions,
) -> Result<PecokResult> {
    let kappa = match groups {
        GroupCount::Adaptive(None) => {
            return Err(Error::invalid("matrix input needs an explicit kappa"))
        }
        GroupCount::Adaptive(k) => k,
        GroupCount::Fixed(_) => None,
    };
    round_solution(s, groups, kappa, seed, GammaEstimate::zero(s.nrows()), opts)
}

fn round_solution(
    s: &crate::Matrix,
    groups: GroupCount,
    kappa: Option<f64>,
    seed: u64,
    gamma: GammaEstimate,
    opts: &PecokOptions,
) -> Result<PecokResult> {
    let p = s.nrows();
    let solution = match (groups, kappa) {
        (GroupCount::Fixed(k), _) => sdp::solve_fixed_k(s, k, &opts.sdp)?,
        (GroupCount::Adaptive(_), Some(kappa)) => sdp::solve_adaptive(s, kappa, &opts.sdp)?,
        (GroupCount::Adaptive(_), None) => unreachable!("kappa resolved by caller"),
    };
    let tr_bhat = solution.b_hat.trace();
    let k = match groups {
        GroupCount::Fixed(k) => k,
        GroupCount::Adaptive(_) => (tr_bhat.round() as usize).clamp(1, p),
    };
    let km = kmeans(&solution.b_hat, k, seed, &opts.kmeans)?;
    Ok(PecokResult {
        partition: km.partition(),
        k,
        tr_bhat,
        kappa,
        solution,
        gamma,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_bstar, sample};
    use crate::Matrix;

    fn population_target(model: &ModelSpec) -> Matrix {
        let mut s = model.sigma();
        for (a, g) in model.gamma().iter().enumerate() {
            s[(a, a)] -= g;
        }
        s
    }

    #[test]
    fn population_fixed_k() {
        let part = Partition::from_sizes(&[4, 3, 5]).unwrap();
        let model = ModelSpec::identity_blocks(part.clone(), 1.0).unwrap();
        let r = pecok_from_matrix(&population_target(&model), GroupCount::Fixed(3), 0, &Default::default())
            .unwrap();
        assert_eq!(r.partition, part);
        assert!((&r.solution.b_hat - build_bstar(&part)).norm() <= 1e-3);
    }

    #[test]
    fn population_adaptive() {
        let part = Partition::equal(3, 4).unwrap();
        let model = ModelSpec::identity_blocks(part.clone(), 2.0).unwrap();
        // Inside (0, mΔ/8) = (0, 2).
        let r = pecok_from_matrix(
            &population_target(&model),
            GroupCount::Adaptive(Some(1.0)),
            0,
            &Default::default(),
        )
        .unwrap();
        assert_eq!(r.k, 3);
        assert_eq!(r.partition, part);
    }

    #[test]
    fn sampled_recovery_and_adaptive() {
        let part = Partition::equal(3, 6).unwrap();
        let model = ModelSpec::identity_blocks(part.clone(), 3.0).unwrap();
        let x = sample(&model, 400, 5).unwrap();
        let opts = PecokOptions::default();
        let fixed = pecok(&x, GroupCount::Fixed(3), 1, None, &opts).unwrap();
        assert_eq!(fixed.partition, part);
        let adaptive = pecok(&x, GroupCount::Adaptive(None), 1, None, &opts).unwrap();
        assert_eq!(adaptive.k, 3);
        assert_eq!(adaptive.partition, part);
        assert!(adaptive.kappa.unwrap() > 0.0);
    }

    #[test]
    fn adaptive_with_zero_gamma_is_rejected() {
        let model = ModelSpec::identity_blocks(Partition::equal(2, 3).unwrap(), 1.0).unwrap();
        let x = sample(&model, 50, 0).unwrap();
        let opts = PecokOptions {
            gamma_method: GammaMethod::Zero,
            ..Default::default()
        };
        assert!(pecok(&x, GroupCount::Adaptive(None), 0, None, &opts).is_err());
    }

    #[test]
    fn oracle_needs_truth() {
        let model = ModelSpec::identity_blocks(Partition::equal(2, 3).unwrap(), 1.0).unwrap();
        let x = sample(&model, 50, 0).unwrap();
        let opts = PecokOptions {
            gamma_method: GammaMethod::Oracle,
            ..Default::default()
        };
        assert!(pecok(&x, GroupCount::Fixed(2), 0, None, &opts).is_err());
        assert!(pecok(&x, GroupCount::Fixed(2), 0, Some(&model), &opts).is_ok());
    }
}
