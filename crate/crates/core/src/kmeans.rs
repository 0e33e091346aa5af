//! K-means on the rows of a matrix: kmeans++ seeding, Lloyd iterations and
//! best-of-restarts selection.
//!
//! Used to round SDP solutions (rows of `B̂`) and to cluster spectral
//! embeddings (rows of `Û`). The only hard requirement is that the
//! rounding recovers the partition from an exact partnership matrix; restarts
//! make the approximation factor good in practice.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::{self, Execution};
use crate::model::Partition;
use crate::seed;
use crate::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct KmeansOptions {
    pub restarts: usize,
    pub max_iters: usize,
    #[serde(skip)]
    pub execution: Execution,
}

impl Default for KmeansOptions {
    fn default() -> Self {
        Self {
            restarts: 20,
            max_iters: 300,
            execution: Execution::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KmeansResult {
    /// Cluster index of each row, `0..k`.
    pub labels: Vec<usize>,
    /// `k × q` cluster means.
    pub centers: Matrix,
    /// Sum of squared distances of rows to their assigned center.
    pub objective: f64,
    pub restarts_used: usize,
    /// Empty clusters re-seeded during the winning restart.
    pub empty_repairs: usize,
}

impl KmeansResult {
    pub fn partition(&self) -> Partition {
        Partition::new(&self.labels).expect("k-means labels are non-empty")
    }
}

fn sq_dist(points: &Matrix, row: usize, centers: &Matrix, c: usize) -> f64 {
    points
        .row(row)
        .iter()
        .zip(centers.row(c).iter())
        .map(|(a, b)| (a - b) * (a - b))
        .sum()
}

/// `Σ_i ‖x_i − mean(cluster(i))‖²` for a fixed assignment.
pub fn assignment_objective(points: &Matrix, labels: &[usize], k: usize) -> f64 {
    let centers = cluster_means(points, labels, k).0;
    (0..points.nrows()).map(|i| sq_dist(points, i, &centers, labels[i])).sum()
}

fn cluster_means(points: &Matrix, labels: &[usize], k: usize) -> (Matrix, Vec<usize>) {
    let q = points.ncols();
    let mut centers = Matrix::zeros(k, q);
    let mut counts = vec![0usize; k];
    for (i, &l) in labels.iter().enumerate() {
        counts[l] += 1;
        let mut row = centers.row_mut(l);
        row += points.row(i);
    }
    for (c, &cnt) in counts.iter().enumerate() {
        if cnt > 0 {
            let mut row = centers.row_mut(c);
            row /= cnt as f64;
        }
    }
    (centers, counts)
}

fn kmeanspp_seed(points: &Matrix, k: usize, rng: &mut ChaCha8Rng) -> Matrix {
    let n = points.nrows();
    let mut chosen = Vec::with_capacity(k);
    chosen.push(rng.random_range(0..n));
    let mut d2: Vec<f64> = (0..n)
        .map(|i| {
            points
                .row(i)
                .iter()
                .zip(points.row(chosen[0]).iter())
                .map(|(a, b)| (a - b) * (a - b))
                .sum()
        })
        .collect();
    while chosen.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut pick = n - 1;
            for (i, &w) in d2.iter().enumerate() {
                if w <= 0.0 {
                    continue;
                }
                if target < w {
                    pick = i;
                    break;
                }
                target -= w;
            }
            if d2[pick] <= 0.0 {
                pick = d2.iter().rposition(|&w| w > 0.0).unwrap_or(pick);
            }
            pick
        } else {
            rng.random_range(0..n)
        };
        chosen.push(next);
        for (i, d) in d2.iter_mut().enumerate() {
            let dist: f64 = points
                .row(i)
                .iter()
                .zip(points.row(next).iter())
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            *d = d.min(dist);
        }
    }
    Matrix::from_fn(k, points.ncols(), |c, j| points[(chosen[c], j)])
}

fn assign(points: &Matrix, centers: &Matrix, labels: &mut [usize]) -> bool {
    let mut changed = false;
    for (i, label) in labels.iter_mut().enumerate() {
        let mut best = (0, f64::INFINITY);
        for c in 0..centers.nrows() {
            let d = sq_dist(points, i, centers, c);
            if d < best.1 {
                best = (c, d);
            }
        }
        if *label != best.0 {
            *label = best.0;
            changed = true;
        }
    }
    changed
}

/// Moves the row farthest from its center (among clusters with more than
/// one member) into each empty cluster.
fn repair_empty(points: &Matrix, labels: &mut [usize], k: usize) -> (Matrix, usize) {
    let mut repairs = 0;
    loop {
        let (centers, counts) = cluster_means(points, labels, k);
        let Some(empty) = counts.iter().position(|&c| c == 0) else {
            return (centers, repairs);
        };
        let mut far = (usize::MAX, f64::NEG_INFINITY);
        for i in 0..points.nrows() {
            if counts[labels[i]] < 2 {
                continue;
            }
            let d = sq_dist(points, i, &centers, labels[i]);
            if d > far.1 {
                far = (i, d);
            }
        }
        labels[far.0] = empty;
        repairs += 1;
    }
}

struct Run {
    labels: Vec<usize>,
    centers: Matrix,
    objective: f64,
    repairs: usize,
}

fn lloyd(points: &Matrix, k: usize, rng: &mut ChaCha8Rng, max_iters: usize) -> Run {
    let n = points.nrows();
    let mut centers = kmeanspp_seed(points, k, rng);
    let mut labels = vec![usize::MAX; n];
    assign(points, &centers, &mut labels);
    let mut repairs = 0;
    let mut last = f64::INFINITY;
    for _ in 0..max_iters {
        let (c, r) = repair_empty(points, &mut labels, k);
        centers = c;
        repairs += r;
        let objective: f64 = (0..n).map(|i| sq_dist(points, i, &centers, labels[i])).sum();
        debug_assert!(
            objective <= last * (1.0 + 1e-12) + 1e-12,
            "Lloyd objective increased: {last} -> {objective}"
        );
        last = objective;
        if !assign(points, &centers, &mut labels) {
            break;
        }
    }
    let (centers, r) = repair_empty(points, &mut labels, k);
    repairs += r;
    let objective = (0..n).map(|i| sq_dist(points, i, &centers, labels[i])).sum();
    Run {
        labels,
        centers,
        objective,
        repairs,
    }
}

/// Best of `opts.restarts` kmeans++/Lloyd runs on the rows of `points`.
///
/// Restart `r` draws from its own stream seeded by `(seed, r)`, so results
/// do not depend on the execution strategy.
pub fn kmeans(points: &Matrix, k: usize, seed: u64, opts: &KmeansOptions) -> Result<KmeansResult> {
    let n = points.nrows();
    if points.ncols() == 0 || n == 0 {
        return Err(Error::invalid("k-means needs a non-empty point matrix"));
    }
    if k < 1 || k > n {
        return Err(Error::invalid(format!("K = {k} out of range 1..={n}")));
    }
    if points.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("k-means input has non-finite values"));
    }
    let restarts = opts.restarts.max(1);
    let runs = exec::map_indexed(opts.execution, restarts, |r| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed::derive(&[seed, r as u64]));
        lloyd(points, k, &mut rng, opts.max_iters.max(1))
    });
    let best = runs
        .into_iter()
        .reduce(|best, run| if run.objective < best.objective { run } else { best })
        .expect("at least one restart");
    Ok(KmeansResult {
        labels: best.labels,
        centers: best.centers,
        objective: best.objective,
        restarts_used: restarts,
        empty_repairs: best.repairs,
    })
}
