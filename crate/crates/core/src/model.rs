//! G-latent models: partitions, block covariances, separation metrics and
//! Gaussian sampling.
//!
//! A model is a partition of the `p` variables into `K` groups, a latent
//! covariance `C` (K×K) and a diagonal noise `Γ`. Each variable is its
//! group's latent generator plus independent noise, so the covariance is
//! `Σ = A C Aᵗ + Γ` with `A` the p×K assignment matrix.

use nalgebra::{Cholesky, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::Matrix;

const SYMMETRY_TOL: f64 = 1e-12;
const PSD_TOL: f64 = 1e-10;

/// Assignment of `p` variables to `K` non-empty groups.
///
/// Labels are kept in canonical form: groups are numbered in order of first
/// appearance, so two partitions are equal iff their label vectors are.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct Partition {
    labels: Vec<usize>,
    sizes: Vec<usize>,
}

impl Partition {
    /// Builds a partition from arbitrary group labels, relabelling them
    /// canonically.
    pub fn new(labels: &[usize]) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::invalid("partition must cover at least one variable"));
        }
        let mut map = std::collections::HashMap::new();
        let mut sizes = Vec::new();
        let canonical = labels
            .iter()
            .map(|l| {
                let next = map.len();
                let g = *map.entry(*l).or_insert(next);
                if g == sizes.len() {
                    sizes.push(0);
                }
                sizes[g] += 1;
                g
            })
            .collect();
        Ok(Self {
            labels: canonical,
            sizes,
        })
    }

    /// Contiguous groups with the given sizes.
    pub fn from_sizes(sizes: &[usize]) -> Result<Self> {
        if sizes.contains(&0) {
            return Err(Error::invalid("group sizes must be positive"));
        }
        let labels: Vec<usize> = sizes
            .iter()
            .enumerate()
            .flat_map(|(k, &s)| std::iter::repeat_n(k, s))
            .collect();
        Self::new(&labels)
    }

    /// `k` contiguous groups of size `m`.
    pub fn equal(k: usize, m: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::invalid("need at least one group"));
        }
        Self::from_sizes(&vec![m; k])
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Number of groups `K`.
    pub fn k(&self) -> usize {
        self.sizes.len()
    }

    pub fn group_sizes(&self) -> &[usize] {
        &self.sizes
    }

    /// Size `m` of the smallest group.
    pub fn min_group_size(&self) -> usize {
        self.sizes.iter().copied().min().unwrap_or(0)
    }

    /// Member indices of each group, in increasing order.
    pub fn groups(&self) -> Vec<Vec<usize>> {
        let mut groups = vec![Vec::new(); self.k()];
        for (a, &g) in self.labels.iter().enumerate() {
            groups[g].push(a);
        }
        groups
    }

    /// The p×K 0/1 assignment matrix.
    pub fn assignment_matrix(&self) -> Matrix {
        let mut a = Matrix::zeros(self.len(), self.k());
        for (i, &g) in self.labels.iter().enumerate() {
            a[(i, g)] = 1.0;
        }
        a
    }

    /// The partition obtained by exchanging the memberships of `i` and `j`.
    pub fn swapped(&self, i: usize, j: usize) -> Result<Self> {
        if i >= self.len() || j >= self.len() {
            return Err(Error::invalid("swap index out of range"));
        }
        let mut labels = self.labels.clone();
        labels.swap(i, j);
        Self::new(&labels)
    }
}

impl TryFrom<Vec<usize>> for Partition {
    type Error = Error;

    fn try_from(labels: Vec<usize>) -> Result<Self> {
        Self::new(&labels)
    }
}

impl From<Partition> for Vec<usize> {
    fn from(p: Partition) -> Self {
        p.labels
    }
}

/// A G-latent model `(partition, C, Γ)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ModelSpecDoc", into = "ModelSpecDoc")]
pub struct ModelSpec {
    partition: Partition,
    c: Matrix,
    gamma: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct ModelSpecDoc {
    labels: Vec<usize>,
    #[serde(rename = "C")]
    c: Vec<Vec<f64>>,
    gamma: Vec<f64>,
}

impl TryFrom<ModelSpecDoc> for ModelSpec {
    type Error = Error;

    fn try_from(doc: ModelSpecDoc) -> Result<Self> {
        let partition = Partition::new(&doc.labels)?;
        let k = doc.c.len();
        if let Some(row) = doc.c.iter().find(|r| r.len() != k) {
            return Err(Error::DimensionMismatch {
                what: "C row length",
                expected: k,
                found: row.len(),
            });
        }
        let c = Matrix::from_fn(k, k, |i, j| doc.c[i][j]);
        ModelSpec::new(partition, c, doc.gamma)
    }
}

impl From<ModelSpec> for ModelSpecDoc {
    fn from(m: ModelSpec) -> Self {
        let c = m.c.row_iter().map(|r| r.iter().copied().collect()).collect();
        ModelSpecDoc {
            labels: m.partition.labels,
            c,
            gamma: m.gamma,
        }
    }
}

impl ModelSpec {
    pub fn new(partition: Partition, c: Matrix, gamma: Vec<f64>) -> Result<Self> {
        let k = partition.k();
        if c.nrows() != k || c.ncols() != k {
            return Err(Error::DimensionMismatch {
                what: "latent covariance C vs group count",
                expected: k,
                found: if c.nrows() != k { c.nrows() } else { c.ncols() },
            });
        }
        if gamma.len() != partition.len() {
            return Err(Error::DimensionMismatch {
                what: "gamma length vs partition length",
                expected: partition.len(),
                found: gamma.len(),
            });
        }
        if linalg::max_asymmetry(&c) > SYMMETRY_TOL {
            return Err(Error::invalid("latent covariance C must be symmetric"));
        }
        if gamma.iter().any(|g| !(g.is_finite() && *g >= 0.0)) {
            return Err(Error::invalid("gamma entries must be finite and nonnegative"));
        }
        Ok(Self { partition, c, gamma })
    }

    /// Model with `C = τ I_K` and `Γ = I_p`.
    pub fn identity_blocks(partition: Partition, tau: f64) -> Result<Self> {
        let k = partition.k();
        let p = partition.len();
        Self::new(partition, Matrix::identity(k, k) * tau, vec![1.0; p])
    }

    pub fn partition(&self) -> &Partition {
        &self.partition
    }

    pub fn c(&self) -> &Matrix {
        &self.c
    }

    pub fn gamma(&self) -> &[f64] {
        &self.gamma
    }

    pub fn p(&self) -> usize {
        self.partition.len()
    }

    /// `Σ = A C Aᵗ + Γ`.
    pub fn sigma(&self) -> Matrix {
        build_sigma(self)
    }

    /// `|Γ|_V = max γ − min γ`.
    pub fn gamma_variation(&self) -> f64 {
        let max = self.gamma.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min = self.gamma.iter().copied().fold(f64::INFINITY, f64::min);
        max - min
    }
}

/// Observed n×p sample, one realization per row.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix {
    x: Matrix,
}

impl DataMatrix {
    pub fn new(x: Matrix) -> Result<Self> {
        if x.nrows() < 2 || x.ncols() < 2 {
            return Err(Error::invalid(format!(
                "data matrix needs n >= 2 and p >= 2, got {}x{}",
                x.nrows(),
                x.ncols()
            )));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("data matrix contains non-finite values"));
        }
        Ok(Self { x })
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    pub fn x(&self) -> &Matrix {
        &self.x
    }

    pub fn into_inner(self) -> Matrix {
        self.x
    }
}

/// Covariance `Σ = A C Aᵗ + Γ` of a model.
pub fn build_sigma(model: &ModelSpec) -> Matrix {
    let labels = model.partition.labels();
    let p = labels.len();
    Matrix::from_fn(p, p, |a, b| {
        let v = model.c[(labels[a], labels[b])];
        if a == b {
            v + model.gamma[a]
        } else {
            v
        }
    })
}

/// Partnership matrix: `B*_ab = 1/|G_k|` when `a, b ∈ G_k`, zero otherwise.
pub fn build_bstar(partition: &Partition) -> Matrix {
    let labels = partition.labels();
    let sizes = partition.group_sizes();
    let p = labels.len();
    Matrix::from_fn(p, p, |a, b| {
        if labels[a] == labels[b] {
            1.0 / sizes[labels[a]] as f64
        } else {
            0.0
        }
    })
}

/// `Δ(C) = min_{j<k} C_jj + C_kk − 2 C_jk`.
pub fn delta_separation(c: &Matrix) -> Result<f64> {
    let k = c.nrows();
    if !c.is_square() {
        return Err(Error::invalid("C must be square"));
    }
    if k < 2 {
        return Err(Error::invalid("separation undefined for a single group"));
    }
    let mut best = f64::INFINITY;
    for j in 0..k {
        for l in (j + 1)..k {
            best = best.min(c[(j, j)] + c[(l, l)] - 2.0 * c[(j, l)]);
        }
    }
    Ok(best)
}

/// `MCord(Σ) = min_{a≁b} max_{c≠a,b} |Σ_ac − Σ_bc|`.
pub fn mcord(sigma: &Matrix, partition: &Partition) -> Result<f64> {
    let p = partition.len();
    if sigma.nrows() != p || sigma.ncols() != p {
        return Err(Error::DimensionMismatch {
            what: "covariance vs partition",
            expected: p,
            found: sigma.nrows(),
        });
    }
    if p < 3 {
        return Err(Error::invalid("MCord needs at least three variables"));
    }
    if partition.k() < 2 {
        return Err(Error::invalid("MCord needs at least two groups"));
    }
    let labels = partition.labels();
    let mut best = f64::INFINITY;
    for a in 0..p {
        for b in (a + 1)..p {
            if labels[a] == labels[b] {
                continue;
            }
            let worst = (0..p)
                .filter(|&c| c != a && c != b)
                .map(|c| (sigma[(a, c)] - sigma[(b, c)]).abs())
                .fold(0.0_f64, f64::max);
            best = best.min(worst);
        }
    }
    Ok(best)
}

/// Draws `n` i.i.d. rows `X = A Z + E` with `Z ~ N(0, C)` and `E ~ N(0, Γ)`.
///
/// `C` may be rank deficient; it is factored with a pivoted Cholesky. Output
/// is a deterministic function of `(model, n, seed)`.
pub fn sample(model: &ModelSpec, n: usize, seed: u64) -> Result<DataMatrix> {
    let c_norm = linalg::max_abs(&model.c).max(1.0);
    let min_eig = if model.c.nrows() == 0 {
        0.0
    } else {
        linalg::min_eigenvalue(&model.c)?
    };
    if min_eig < -PSD_TOL * c_norm {
        return Err(Error::NotPsd {
            min_eigenvalue: min_eig,
        });
    }
    let factor = linalg::pivoted_cholesky(&model.c, PSD_TOL)?;
    let rank = factor.ncols();
    let labels = model.partition.labels();
    let p = labels.len();
    let noise_sd: Vec<f64> = model.gamma.iter().map(|g| g.sqrt()).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = Matrix::zeros(n, p);
    let mut xi = DVector::zeros(rank);
    for i in 0..n {
        for v in xi.iter_mut() {
            *v = StandardNormal.sample(&mut rng);
        }
        let z = &factor * &xi;
        for a in 0..p {
            let e: f64 = StandardNormal.sample(&mut rng);
            x[(i, a)] = z[labels[a]] + noise_sd[a] * e;
        }
    }
    DataMatrix::new(x)
}

/// Sample covariance `XᵗX / n`, optionally after removing column means.
pub fn sample_covariance(x: &DataMatrix, center: bool) -> Matrix {
    let n = x.n() as f64;
    if center {
        let mut centered = x.x.clone();
        for mut col in centered.column_iter_mut() {
            let mean = col.mean();
            col.add_scalar_mut(-mean);
        }
        centered.tr_mul(&centered) / n
    } else {
        x.x.tr_mul(&x.x) / n
    }
}

/// Covariance pair used in the minimax lower-bound construction.
///
/// Returns `(Σ⁽⁰⁾, Σ⁽ᵐ⁺¹⁾)` for `C = τ I_K`, `Γ = I`, where `Σ⁽⁰⁾` uses `K`
/// contiguous groups of size `m` and `Σ⁽ᵐ⁺¹⁾` swaps the first variable with
/// the first variable of the second group.
pub fn minimax_sigma_pair(tau: f64, m: usize, k: usize) -> Result<(Matrix, Matrix)> {
    if !(tau >= 0.0 && tau.is_finite()) {
        return Err(Error::invalid("tau must be finite and nonnegative"));
    }
    if m < 2 || k < 2 {
        return Err(Error::invalid("minimax construction needs m >= 2 and K >= 2"));
    }
    let base = Partition::equal(k, m)?;
    let moved = base.swapped(0, m)?;
    let s0 = ModelSpec::identity_blocks(base, tau)?.sigma();
    let s1 = ModelSpec::identity_blocks(moved, tau)?.sigma();
    Ok((s0, s1))
}

/// `KL(N(0,Σ⁽ᵐ⁺¹⁾) ‖ N(0,Σ⁽⁰⁾)) = 2(m−1)τ² / (1+mτ)`.
///
/// Evaluated for every `τ ≥ 0`; the numeric route agrees on that whole range.
pub fn kl_closed_form(tau: f64, m: usize) -> f64 {
    let m = m as f64;
    2.0 * (m - 1.0) * tau * tau / (1.0 + m * tau)
}

/// `KL(N(0,Σ₁) ‖ N(0,Σ₂))` for centered Gaussians.
pub fn kl_numeric(sigma1: &Matrix, sigma2: &Matrix) -> Result<f64> {
    let p = sigma1.nrows();
    if !sigma1.is_square() || sigma2.shape() != sigma1.shape() {
        return Err(Error::DimensionMismatch {
            what: "KL covariance shapes",
            expected: p,
            found: sigma2.nrows(),
        });
    }
    let c1 = Cholesky::new(linalg::symmetrize(sigma1)).ok_or(Error::NotPositiveDefinite)?;
    let c2 = Cholesky::new(linalg::symmetrize(sigma2)).ok_or(Error::NotPositiveDefinite)?;
    let logdet = |c: &Cholesky<f64, nalgebra::Dyn>| -> f64 {
        2.0 * c.l_dirty().diagonal().iter().map(|d| d.ln()).sum::<f64>()
    };
    let solved = c2.solve(sigma1);
    let trace = solved.trace();
    Ok(0.5 * (logdet(&c2) - logdet(&c1) + trace - p as f64))
}

/// Unit-constant sufficient separation rate
/// `√(log p/(mn)) + √(p/(nm²)) + log p/n + p/(nm)`.
///
/// `k` is validated but does not enter the expression.
pub fn separation_threshold(n: usize, m: usize, p: usize, k: usize) -> Result<f64> {
    if n < 1 || p < 1 || k < 1 || m < 2 {
        return Err(Error::invalid(
            "separation threshold needs n, p, K >= 1 and m >= 2",
        ));
    }
    let (n, m, p) = (n as f64, m as f64, p as f64);
    let lp = p.ln();
    Ok((lp / (m * n)).sqrt() + (p / (n * m * m)).sqrt() + lp / n + p / (n * m))
}
