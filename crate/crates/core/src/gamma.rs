//! Estimators of the diagonal noise matrix `Γ` that do not need the partition.
//!
//! The main estimator picks, for each variable `a`, two "neighbors" whose
//! columns behave most like `X_:a` against every normalized direction
//! `X_:c − X_:d`, then sets `Γ̂_aa = ⟨X_:a − X_:ne₁, X_:a − X_:ne₂⟩ / n`.
//! The simple estimator uses a single neighbor chosen against the
//! normalized columns `X_:c`.
//!
//! All inner products go through the Gram matrix `G = XᵗX`, so that
//! `⟨X_:a − X_:b, X_:c − X_:d⟩ = G_ac − G_ad − G_bc + G_bd` costs O(1).
//! Column-difference norms are computed directly from the columns.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::{self, Execution};
use crate::model::{DataMatrix, ModelSpec};
use crate::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GammaMethod {
    /// Two-neighbor estimator.
    Main,
    /// Single-neighbor estimator.
    Simple,
    /// `Γ̂ = 0`, i.e. no correction.
    Zero,
    /// The true `Γ` of a known model.
    Oracle,
}

impl std::str::FromStr for GammaMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "main" => Ok(Self::Main),
            "simple" => Ok(Self::Simple),
            "zero" => Ok(Self::Zero),
            "oracle" => Ok(Self::Oracle),
            other => Err(Error::invalid(format!("unknown gamma method '{other}'"))),
        }
    }
}

impl std::fmt::Display for GammaMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Self::Main => "main",
            Self::Simple => "simple",
            Self::Zero => "zero",
            Self::Oracle => "oracle",
        };
        f.write_str(s)
    }
}

/// Diagonal of `Γ̂` plus the neighbors used to build it.
///
/// `values` are raw estimates and may be negative; [`GammaEstimate::clipped`]
/// gives the nonnegative view.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GammaEstimate {
    pub method: GammaMethod,
    pub values: Vec<f64>,
    /// Per variable: `[ne₁, ne₂]` for the main method, `[ne]` for the simple
    /// one, empty otherwise.
    pub neighbors: Vec<Vec<usize>>,
}

impl GammaEstimate {
    pub fn zero(p: usize) -> Self {
        Self {
            method: GammaMethod::Zero,
            values: vec![0.0; p],
            neighbors: vec![Vec::new(); p],
        }
    }

    pub fn oracle(model: &ModelSpec) -> Self {
        let p = model.p();
        Self {
            method: GammaMethod::Oracle,
            values: model.gamma().to_vec(),
            neighbors: vec![Vec::new(); p],
        }
    }

    pub fn p(&self) -> usize {
        self.values.len()
    }

    pub fn clipped(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.max(0.0)).collect()
    }

    /// `|Γ̂|_∞` over raw absolute values.
    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
    }

    /// `|Γ̂|_V = max − min` of the raw values.
    pub fn variation(&self) -> f64 {
        let max = self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min = self.values.iter().copied().fold(f64::INFINITY, f64::min);
        max - min
    }

    /// `s − diag(Γ̂)`.
    pub fn subtract_from(&self, s: &Matrix) -> Result<Matrix> {
        if s.nrows() != self.p() || s.ncols() != self.p() {
            return Err(Error::DimensionMismatch {
                what: "covariance vs gamma estimate",
                expected: self.p(),
                found: s.nrows(),
            });
        }
        let mut out = s.clone();
        for (a, v) in self.values.iter().enumerate() {
            out[(a, a)] -= v;
        }
        Ok(out)
    }
}

/// Runs the estimator selected by `method`. `Oracle` needs the true model.
pub fn estimate(
    x: &DataMatrix,
    method: GammaMethod,
    truth: Option<&ModelSpec>,
    exec: Execution,
) -> Result<GammaEstimate> {
    match method {
        GammaMethod::Main => estimate_gamma_main_with(x, exec),
        GammaMethod::Simple => estimate_gamma_simple(x),
        GammaMethod::Zero => Ok(GammaEstimate::zero(x.p())),
        GammaMethod::Oracle => {
            let model = truth.ok_or_else(|| Error::invalid("oracle gamma needs the true model"))?;
            if model.p() != x.p() {
                return Err(Error::DimensionMismatch {
                    what: "oracle model vs data",
                    expected: x.p(),
                    found: model.p(),
                });
            }
            Ok(GammaEstimate::oracle(model))
        }
    }
}

/// Gram matrix and pairwise column-difference norms.
struct ColumnGeometry {
    gram: Matrix,
    diff_norm: Matrix,
}

impl ColumnGeometry {
    fn new(x: &DataMatrix) -> Self {
        let xm = x.x();
        let p = x.p();
        let gram = xm.tr_mul(xm);
        let mut diff_norm = Matrix::zeros(p, p);
        for c in 0..p {
            for d in (c + 1)..p {
                let sq: f64 = xm
                    .column(c)
                    .iter()
                    .zip(xm.column(d).iter())
                    .map(|(u, v)| (u - v) * (u - v))
                    .sum();
                let norm = sq.sqrt();
                diff_norm[(c, d)] = norm;
                diff_norm[(d, c)] = norm;
            }
        }
        Self { gram, diff_norm }
    }

    /// `V(a, b)`; the 0/0 convention makes `c = d` (and duplicate columns)
    /// contribute zero.
    fn v(&self, a: usize, b: usize, w: &mut Vec<f64>) -> f64 {
        let p = self.gram.nrows();
        w.clear();
        w.extend((0..p).map(|c| self.gram[(a, c)] - self.gram[(b, c)]));
        let mut best = 0.0_f64;
        for c in 0..p {
            if c == a || c == b {
                continue;
            }
            for d in (c + 1)..p {
                if d == a || d == b {
                    continue;
                }
                let norm = self.diff_norm[(c, d)];
                if norm > 0.0 {
                    best = best.max((w[c] - w[d]).abs() / norm);
                }
            }
        }
        best
    }

    /// Symmetric table of `V(a, b)`; diagonal left at zero.
    fn v_table(&self, exec: Execution) -> Matrix {
        let p = self.gram.nrows();
        let rows = exec::map_indexed(exec, p, |a| {
            let mut w = Vec::with_capacity(p);
            ((a + 1)..p).map(|b| self.v(a, b, &mut w)).collect::<Vec<f64>>()
        });
        let mut table = Matrix::zeros(p, p);
        for (a, row) in rows.into_iter().enumerate() {
            for (offset, v) in row.into_iter().enumerate() {
                let b = a + 1 + offset;
                table[(a, b)] = v;
                table[(b, a)] = v;
            }
        }
        table
    }
}

fn check_p(x: &DataMatrix) -> Result<()> {
    if x.p() < 3 {
        return Err(Error::invalid("gamma estimation needs at least three variables"));
    }
    Ok(())
}

fn check_index(x: &DataMatrix, a: usize) -> Result<()> {
    if a >= x.p() {
        return Err(Error::invalid(format!("variable index {a} out of range 0..{}", x.p())));
    }
    Ok(())
}

/// `V(a,b) = max_{c,d ∉ {a,b}} |⟨X_:a − X_:b, (X_:c − X_:d)/|X_:c − X_:d|₂⟩|`.
pub fn v_stat(x: &DataMatrix, a: usize, b: usize) -> Result<f64> {
    check_index(x, a)?;
    check_index(x, b)?;
    if a == b {
        return Err(Error::invalid("V(a, b) needs two distinct variables"));
    }
    let geo = ColumnGeometry::new(x);
    Ok(geo.v(a, b, &mut Vec::new()))
}

/// Index minimizing `score` over `candidates`; ties go to the smallest index.
fn argmin(candidates: impl Iterator<Item = usize>, score: impl Fn(usize) -> f64) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for b in candidates {
        let s = score(b);
        if best.is_none_or(|(_, v)| s < v) {
            best = Some((b, s));
        }
    }
    best.map(|(b, _)| b)
}

fn neighbors_from_table(table: &Matrix, a: usize) -> (usize, usize) {
    let p = table.nrows();
    let ne1 = argmin((0..p).filter(|&b| b != a), |b| table[(a, b)]).expect("p >= 3");
    let ne2 = argmin((0..p).filter(|&b| b != a && b != ne1), |b| table[(a, b)]).expect("p >= 3");
    (ne1, ne2)
}

/// The two neighbors `(ne₁(a), ne₂(a))` minimizing `V(a, ·)`.
pub fn neighbors(x: &DataMatrix, a: usize) -> Result<(usize, usize)> {
    check_p(x)?;
    check_index(x, a)?;
    let geo = ColumnGeometry::new(x);
    let p = x.p();
    let mut w = Vec::with_capacity(p);
    let mut row = Matrix::zeros(p, p);
    for b in (0..p).filter(|&b| b != a) {
        row[(a, b)] = geo.v(a, b, &mut w);
    }
    Ok(neighbors_from_table(&row, a))
}

fn column_inner(x: &Matrix, a: usize, b1: usize, b2: usize) -> f64 {
    x.column(a)
        .iter()
        .zip(x.column(b1).iter())
        .zip(x.column(b2).iter())
        .map(|((xa, x1), x2)| (xa - x1) * (xa - x2))
        .sum()
}

/// Two-neighbor estimator `Γ̂_aa = ⟨X_:a − X_:ne₁, X_:a − X_:ne₂⟩ / n`.
pub fn estimate_gamma_main(x: &DataMatrix) -> Result<GammaEstimate> {
    estimate_gamma_main_with(x, Execution::default())
}

pub fn estimate_gamma_main_with(x: &DataMatrix, exec: Execution) -> Result<GammaEstimate> {
    check_p(x)?;
    let geo = ColumnGeometry::new(x);
    let table = geo.v_table(exec);
    let n = x.n() as f64;
    let p = x.p();
    let mut values = Vec::with_capacity(p);
    let mut log = Vec::with_capacity(p);
    for a in 0..p {
        let (ne1, ne2) = neighbors_from_table(&table, a);
        values.push(column_inner(x.x(), a, ne1, ne2) / n);
        log.push(vec![ne1, ne2]);
    }
    Ok(GammaEstimate {
        method: GammaMethod::Main,
        values,
        neighbors: log,
    })
}

/// Single-neighbor estimator: `ne(a)` minimizes
/// `max_{c≠a,b} |⟨X_:a − X_:b, X_:c/|X_:c|₂⟩|` and
/// `Γ̂_aa = ⟨X_:a − X_:ne(a), X_:a⟩ / n`.
pub fn estimate_gamma_simple(x: &DataMatrix) -> Result<GammaEstimate> {
    check_p(x)?;
    let xm = x.x();
    let p = x.p();
    let gram = xm.tr_mul(xm);
    let col_norm: Vec<f64> = (0..p).map(|c| gram[(c, c)].max(0.0).sqrt()).collect();
    let score = |a: usize, b: usize| -> f64 {
        (0..p)
            .filter(|&c| c != a && c != b && col_norm[c] > 0.0)
            .map(|c| (gram[(a, c)] - gram[(b, c)]).abs() / col_norm[c])
            .fold(0.0_f64, f64::max)
    };
    let n = x.n() as f64;
    let mut values = Vec::with_capacity(p);
    let mut log = Vec::with_capacity(p);
    for a in 0..p {
        let ne = argmin((0..p).filter(|&b| b != a), |b| score(a, b)).expect("p >= 3");
        let inner: f64 = xm
            .column(a)
            .iter()
            .zip(xm.column(ne).iter())
            .map(|(xa, xb)| (xa - xb) * xa)
            .sum();
        values.push(inner / n);
        log.push(vec![ne]);
    }
    Ok(GammaEstimate {
        method: GammaMethod::Simple,
        values,
        neighbors: log,
    })
}
