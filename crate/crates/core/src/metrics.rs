//! Comparing an estimated partition with the truth.
//!
//! Besides exact recovery, partitions are compared through the misclassification
//! proportion
//!
//! ```text
//! L̄(Ĝ, G*) = min_σ Σ_k |G*_k \ Ĝ_σ(k)| / m,   m = min_k |G*_k|
//! ```
//!
//! The minimum over permutations is a linear assignment problem on the cost
//! matrix `c_kj = |G*_k \ Ĝ_j|`; it is enumerated for up to eight groups and
//! solved with the Hungarian algorithm beyond that. When the group counts
//! differ the smaller side is padded with empty groups.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::Partition;

const BRUTE_FORCE_MAX_K: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub exact: bool,
    pub lbar: f64,
    /// `matched_permutation[k]` is the estimated group matched to true group
    /// `k` (indices past `k_est` are padding).
    pub matched_permutation: Vec<usize>,
    pub k_true: usize,
    pub k_est: usize,
}

fn check_lengths(est: &Partition, truth: &Partition) -> Result<()> {
    if est.len() != truth.len() {
        return Err(Error::DimensionMismatch {
            what: "partition lengths",
            expected: truth.len(),
            found: est.len(),
        });
    }
    Ok(())
}

/// True iff the two partitions coincide up to relabelling.
pub fn exact_match(est: &Partition, truth: &Partition) -> Result<bool> {
    check_lengths(est, truth)?;
    Ok(est == truth)
}

/// Padded `K'×K'` cost matrix `|G*_k \ Ĝ_j|`.
fn miss_counts(est: &Partition, truth: &Partition) -> Vec<Vec<f64>> {
    let size = est.k().max(truth.k());
    let mut overlap = vec![vec![0usize; size]; size];
    for (&t, &e) in truth.labels().iter().zip(est.labels()) {
        overlap[t][e] += 1;
    }
    (0..size)
        .map(|k| {
            let group = truth.group_sizes().get(k).copied().unwrap_or(0);
            (0..size).map(|j| (group - overlap[k][j]) as f64).collect()
        })
        .collect()
}

/// Full comparison report.
pub fn compare(est: &Partition, truth: &Partition) -> Result<ComparisonReport> {
    check_lengths(est, truth)?;
    let cost = miss_counts(est, truth);
    let (perm, total) = if cost.len() <= BRUTE_FORCE_MAX_K {
        brute_force_assignment(&cost)
    } else {
        hungarian(&cost)
    };
    let m = truth.min_group_size() as f64;
    let lbar = total / m;
    let exact = est == truth;
    Ok(ComparisonReport {
        exact,
        lbar: if exact { 0.0 } else { lbar },
        matched_permutation: perm,
        k_true: truth.k(),
        k_est: est.k(),
    })
}

pub fn lbar(est: &Partition, truth: &Partition) -> Result<f64> {
    Ok(compare(est, truth)?.lbar)
}

/// Heap's algorithm over all permutations.
fn brute_force_assignment(cost: &[Vec<f64>]) -> (Vec<usize>, f64) {
    let n = cost.len();
    let mut perm: Vec<usize> = (0..n).collect();
    let score = |p: &[usize]| p.iter().enumerate().map(|(k, &j)| cost[k][j]).sum::<f64>();
    let mut best = (perm.clone(), score(&perm));
    let mut c = vec![0usize; n];
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(c[i], i);
            }
            let s = score(&perm);
            if s < best.1 {
                best = (perm.clone(), s);
            }
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    best
}

/// Minimum-cost perfect matching on a square cost matrix.
///
/// Returns `assignment[row] = column` and the total cost. O(n³) shortest
/// augmenting path formulation with row/column potentials.
pub fn hungarian(cost: &[Vec<f64>]) -> (Vec<usize>, f64) {
    let n = cost.len();
    if n == 0 {
        return (Vec::new(), 0.0);
    }
    debug_assert!(cost.iter().all(|r| r.len() == n));
    // 1-based arrays; index 0 is the virtual source.
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut matched_row = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];

    for i in 1..=n {
        matched_row[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = matched_row[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[matched_row[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if matched_row[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            matched_row[j0] = matched_row[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut assignment = vec![0usize; n];
    for j in 1..=n {
        if matched_row[j] > 0 {
            assignment[matched_row[j] - 1] = j - 1;
        }
    }
    let total = assignment.iter().enumerate().map(|(r, &c)| cost[r][c]).sum();
    (assignment, total)
}
