//! Monte-Carlo recovery experiments over a grid of `(n, p, K, m, τ)` cells.
//!
//! Each cell uses `C = τ I_K`, `Γ = I` and `K − 1` groups of size `m` plus a
//! last group holding the remaining `p − (K−1)m ≥ m` variables. `τ` is the
//! multiplier times [`separation_threshold`], so `Δ(C) = 2τ`.
//!
//! Every replicate draws one data matrix from a seed that depends only on
//! `(base_seed, cell, replicate)`, and all methods are run on it. Jobs run in
//! parallel; records are sorted into `(cell, method, replicate)` order before
//! anything is written, so outputs are byte-identical across runs. Wall-clock
//! timings go to a separate file.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::{self, Execution};
use crate::gamma::{self, GammaEstimate, GammaMethod};
use crate::io::{fmt_f64, save_json};
use crate::kmeans::KmeansOptions;
use crate::metrics;
use crate::model::{
    build_bstar, mcord, sample, sample_covariance, separation_threshold, ModelSpec, Partition,
};
use crate::pecok::{pecok_from_matrix, GroupCount, PecokOptions};
use crate::sdp::{self, SdpOptions};
use crate::seed;
use crate::spectral;
use crate::Matrix;

pub const RECORDS_HEADER: &str = "# pecok-records v1";
pub const SUMMARY_HEADER: &str = "# pecok-summary v1";

const RECORD_COLUMNS: &str = "cell,n,p,k,m,tau_multiplier,tau,method,replicate,seed,exact,lbar,k_est,bhat_dist,tr_bhat,solver_converged,mcord";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Pecok,
    PecokAdaptive,
    Uncorrected,
    Csc,
    CscUncorrected,
    CordMetricOnly,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::Pecok,
        Method::PecokAdaptive,
        Method::Uncorrected,
        Method::Csc,
        Method::CscUncorrected,
        Method::CordMetricOnly,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Pecok => "pecok",
            Method::PecokAdaptive => "pecok_adaptive",
            Method::Uncorrected => "uncorrected",
            Method::Csc => "csc",
            Method::CscUncorrected => "csc_uncorrected",
            Method::CordMetricOnly => "cord_metric_only",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown method `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub n: Vec<usize>,
    /// Empty means `p = m·K` for each `(K, m)`.
    pub p: Vec<usize>,
    pub k: Vec<usize>,
    pub m: Vec<usize>,
    pub tau_multipliers: Vec<f64>,
    pub methods: Vec<Method>,
    pub replicates: usize,
    pub base_seed: u64,
    pub gamma_method: GammaMethod,
    pub solver: SdpOptions,
    pub kmeans_restarts: usize,
    #[serde(skip)]
    pub execution: Execution,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            n: vec![200],
            p: Vec::new(),
            k: vec![4],
            m: vec![10],
            tau_multipliers: vec![0.0, 2.0, 10.0, 50.0],
            methods: vec![Method::Pecok],
            replicates: 50,
            base_seed: 0,
            gamma_method: GammaMethod::Main,
            solver: SdpOptions::default(),
            kmeans_restarts: KmeansOptions::default().restarts,
            execution: Execution::default(),
        }
    }
}

/// One point of the grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Cell {
    pub index: usize,
    pub n: usize,
    pub p: usize,
    pub k: usize,
    pub m: usize,
    pub tau_multiplier: f64,
    pub tau: f64,
}

impl Cell {
    pub fn partition(&self) -> Result<Partition> {
        let mut sizes = vec![self.m; self.k - 1];
        sizes.push(self.p - (self.k - 1) * self.m);
        Partition::from_sizes(&sizes)
    }

    pub fn model(&self) -> Result<ModelSpec> {
        ModelSpec::identity_blocks(self.partition()?, self.tau)
    }
}

impl ExperimentConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        let cfg: Self = serde_json::from_str(&text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Checks every cell before any work is done.
    pub fn validate(&self) -> Result<()> {
        if self.replicates < 1 {
            return Err(Error::invalid("replicates must be >= 1"));
        }
        if self.methods.is_empty() {
            return Err(Error::invalid("no methods selected"));
        }
        if self.n.is_empty() || self.k.is_empty() || self.m.is_empty() {
            return Err(Error::invalid("grid lists n, k and m must be non-empty"));
        }
        if self.tau_multipliers.is_empty() {
            return Err(Error::invalid("tau_multipliers must be non-empty"));
        }
        if let Some(t) = self.tau_multipliers.iter().find(|t| !(t.is_finite() && **t >= 0.0)) {
            return Err(Error::invalid(format!("tau multiplier {t} must be finite and >= 0")));
        }
        if self.kmeans_restarts < 1 {
            return Err(Error::invalid("kmeans_restarts must be >= 1"));
        }
        if self.methods.contains(&Method::PecokAdaptive) && self.gamma_method == GammaMethod::Zero {
            return Err(Error::invalid(
                "pecok_adaptive needs a noise estimate; gamma_method `zero` gives kappa = 0",
            ));
        }
        self.solver.validate()?;
        self.cells().map(|_| ())
    }

    /// Grid in `n`-major order, then `p`, `K`, `m`, multiplier.
    pub fn cells(&self) -> Result<Vec<Cell>> {
        let mut cells = Vec::new();
        for &n in &self.n {
            if n < 2 {
                return Err(Error::invalid(format!("n = {n}: need n >= 2")));
            }
            for &k in &self.k {
                for &m in &self.m {
                    let ps = if self.p.is_empty() { vec![m * k] } else { self.p.clone() };
                    for p in ps {
                        if k < 1 || m < 2 || m * k > p {
                            return Err(Error::invalid(format!(
                                "grid cell (p={p}, K={k}, m={m}) violates K >= 1, m >= 2, m·K <= p"
                            )));
                        }
                        let threshold = separation_threshold(n, m, p, k)?;
                        for &mult in &self.tau_multipliers {
                            cells.push(Cell {
                                index: cells.len(),
                                n,
                                p,
                                k,
                                m,
                                tau_multiplier: mult,
                                tau: mult * threshold,
                            });
                        }
                    }
                }
            }
        }
        Ok(cells)
    }

    fn pecok_options(&self) -> PecokOptions {
        PecokOptions {
            gamma_method: self.gamma_method,
            sdp: self.solver,
            kmeans: KmeansOptions {
                restarts: self.kmeans_restarts,
                execution: Execution::Sequential,
                ..KmeansOptions::default()
            },
            center: false,
            execution: Execution::Sequential,
        }
    }
}

/// One row of the records file.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RecoveryRecord {
    pub cell: usize,
    pub n: usize,
    pub p: usize,
    pub k: usize,
    pub m: usize,
    pub tau_multiplier: f64,
    pub tau: f64,
    pub method: Method,
    pub replicate: usize,
    /// Seed of the data draw.
    pub seed: u64,
    pub exact: Option<bool>,
    pub lbar: Option<f64>,
    pub k_est: Option<usize>,
    /// `‖B̂ − B*‖_F` for SDP methods.
    pub bhat_dist: Option<f64>,
    /// Adaptive method only.
    pub tr_bhat: Option<f64>,
    pub solver_converged: Option<bool>,
    /// `MCord(Σ̂)` for the true partition (`cord_metric_only`).
    pub mcord: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Timing {
    pub cell: usize,
    pub method: Method,
    pub replicate: usize,
    pub wall_ms: f64,
}

/// Per `(cell, method)` aggregates.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub cell: usize,
    pub n: usize,
    pub p: usize,
    pub k: usize,
    pub m: usize,
    pub tau_multiplier: f64,
    pub tau: f64,
    pub method: Method,
    pub replicates: usize,
    pub exact_freq: Option<f64>,
    /// Binomial standard error `√(f(1−f)/R)`.
    pub exact_se: Option<f64>,
    pub lbar_mean: Option<f64>,
    pub lbar_se: Option<f64>,
    pub converged_frac: Option<f64>,
    pub tr_bhat_mean: Option<f64>,
    pub mcord_mean: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseRun {
    pub records: Vec<RecoveryRecord>,
    pub timings: Vec<Timing>,
    pub summary: Vec<SummaryRow>,
}

struct Prepared {
    cell: Cell,
    model: ModelSpec,
    bstar: Matrix,
}

/// Runs the whole grid in memory.
pub fn run(config: &ExperimentConfig) -> Result<PhaseRun> {
    config.validate()?;
    let prepared = config
        .cells()?
        .into_iter()
        .map(|cell| {
            let model = cell.model()?;
            let bstar = build_bstar(model.partition());
            Ok(Prepared { cell, model, bstar })
        })
        .collect::<Result<Vec<_>>>()?;

    let reps = config.replicates;
    let jobs = prepared.len() * reps;
    let outputs = exec::map_indexed(config.execution, jobs, |j| {
        run_replicate(config, &prepared[j / reps], j % reps)
    });

    let mut rows = Vec::with_capacity(jobs * config.methods.len());
    for out in outputs {
        rows.extend(out?);
    }
    rows.sort_by(|a, b| {
        (a.0.cell, a.0.method, a.0.replicate).cmp(&(b.0.cell, b.0.method, b.0.replicate))
    });
    let (records, timings): (Vec<_>, Vec<_>) = rows.into_iter().unzip();
    let summary = summarize(&records);
    Ok(PhaseRun {
        records,
        timings,
        summary,
    })
}

fn run_replicate(
    config: &ExperimentConfig,
    prep: &Prepared,
    replicate: usize,
) -> Result<Vec<(RecoveryRecord, Timing)>> {
    let cell = &prep.cell;
    let truth = prep.model.partition();
    let data_seed = seed::replicate_seed(config.base_seed, cell.index, replicate);
    let x = sample(&prep.model, cell.n, data_seed)?;
    let sigma_hat = sample_covariance(&x, false);
    let opts = config.pecok_options();

    let needs_gamma = config
        .methods
        .iter()
        .any(|m| matches!(m, Method::Pecok | Method::PecokAdaptive | Method::Csc));
    let gamma_hat = if needs_gamma {
        Some(gamma::estimate(&x, config.gamma_method, Some(&prep.model), Execution::Sequential)?)
    } else {
        None
    };
    let corrected = |g: &GammaEstimate| g.subtract_from(&sigma_hat);

    let mut out = Vec::with_capacity(config.methods.len());
    for &method in &config.methods {
        let method_seed = seed::labeled(data_seed, method.name());
        let started = Instant::now();
        let mut rec = RecoveryRecord {
            cell: cell.index,
            n: cell.n,
            p: cell.p,
            k: cell.k,
            m: cell.m,
            tau_multiplier: cell.tau_multiplier,
            tau: cell.tau,
            method,
            replicate,
            seed: data_seed,
            exact: None,
            lbar: None,
            k_est: None,
            bhat_dist: None,
            tr_bhat: None,
            solver_converged: None,
            mcord: None,
        };
        let estimate = match method {
            Method::Pecok | Method::Uncorrected | Method::PecokAdaptive => {
                let (s, groups) = match method {
                    Method::Pecok => (corrected(gamma_hat.as_ref().unwrap())?, GroupCount::Fixed(cell.k)),
                    Method::Uncorrected => (sigma_hat.clone(), GroupCount::Fixed(cell.k)),
                    _ => {
                        let g = gamma_hat.as_ref().unwrap();
                        let kappa = sdp::kappa_hat(g, cell.n, cell.p)?;
                        (corrected(g)?, GroupCount::Adaptive(Some(kappa)))
                    }
                };
                let r = pecok_from_matrix(&s, groups, method_seed, &opts)?;
                rec.bhat_dist = Some((&r.solution.b_hat - &prep.bstar).norm());
                rec.solver_converged = Some(r.solution.converged);
                if method == Method::PecokAdaptive {
                    rec.tr_bhat = Some(r.tr_bhat);
                }
                Some(r.partition)
            }
            Method::Csc | Method::CscUncorrected => {
                let s = match method {
                    Method::Csc => corrected(gamma_hat.as_ref().unwrap())?,
                    _ => sigma_hat.clone(),
                };
                let r = spectral::spectral_from_matrix(&s, cell.k, method_seed, &opts.kmeans)?;
                Some(r.partition)
            }
            Method::CordMetricOnly => {
                rec.mcord = Some(mcord(&sigma_hat, truth)?);
                None
            }
        };
        if let Some(est) = estimate {
            let report = metrics::compare(&est, truth)?;
            rec.exact = Some(report.exact);
            rec.lbar = Some(report.lbar);
            rec.k_est = Some(report.k_est);
        }
        let timing = Timing {
            cell: cell.index,
            method,
            replicate,
            wall_ms: started.elapsed().as_secs_f64() * 1e3,
        };
        out.push((rec, timing));
    }
    Ok(out)
}

fn mean(v: &[f64]) -> Option<f64> {
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

/// Standard error of the mean (sample standard deviation over `√R`).
fn mean_se(v: &[f64]) -> Option<f64> {
    let mu = mean(v)?;
    if v.len() < 2 {
        return Some(0.0);
    }
    let var = v.iter().map(|x| (x - mu) * (x - mu)).sum::<f64>() / (v.len() - 1) as f64;
    Some((var / v.len() as f64).sqrt())
}

/// Aggregates records per `(cell, method)`; pure function of the records.
pub fn summarize(records: &[RecoveryRecord]) -> Vec<SummaryRow> {
    let mut groups: BTreeMap<(usize, Method), Vec<&RecoveryRecord>> = BTreeMap::new();
    for r in records {
        groups.entry((r.cell, r.method)).or_default().push(r);
    }
    groups
        .into_values()
        .map(|rs| {
            let first = rs[0];
            let pick = |f: &dyn Fn(&RecoveryRecord) -> Option<f64>| -> Vec<f64> {
                rs.iter().filter_map(|r| f(r)).collect()
            };
            let exact = pick(&|r| r.exact.map(|e| if e { 1.0 } else { 0.0 }));
            let lbar = pick(&|r| r.lbar);
            let conv = pick(&|r| r.solver_converged.map(|c| if c { 1.0 } else { 0.0 }));
            let exact_freq = mean(&exact);
            SummaryRow {
                cell: first.cell,
                n: first.n,
                p: first.p,
                k: first.k,
                m: first.m,
                tau_multiplier: first.tau_multiplier,
                tau: first.tau,
                method: first.method,
                replicates: rs.len(),
                exact_freq,
                exact_se: exact_freq.map(|f| (f * (1.0 - f) / exact.len() as f64).sqrt()),
                lbar_mean: mean(&lbar),
                lbar_se: mean_se(&lbar),
                converged_frac: mean(&conv),
                tr_bhat_mean: mean(&pick(&|r| r.tr_bhat)),
                mcord_mean: mean(&pick(&|r| r.mcord)),
            }
        })
        .collect()
}

fn opt<T>(v: Option<T>, f: impl Fn(T) -> String) -> String {
    v.map(f).unwrap_or_default()
}

fn fmt_bool(b: bool) -> String {
    if b { "1" } else { "0" }.to_string()
}

pub fn write_records_csv<W: Write>(mut out: W, records: &[RecoveryRecord]) -> Result<()> {
    writeln!(out, "{RECORDS_HEADER}")?;
    writeln!(out, "{RECORD_COLUMNS}")?;
    for r in records {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.cell,
            r.n,
            r.p,
            r.k,
            r.m,
            fmt_f64(r.tau_multiplier),
            fmt_f64(r.tau),
            r.method,
            r.replicate,
            r.seed,
            opt(r.exact, fmt_bool),
            opt(r.lbar, fmt_f64),
            opt(r.k_est, |k| k.to_string()),
            opt(r.bhat_dist, fmt_f64),
            opt(r.tr_bhat, fmt_f64),
            opt(r.solver_converged, fmt_bool),
            opt(r.mcord, fmt_f64),
        )?;
    }
    Ok(())
}

pub fn write_summary_csv<W: Write>(mut out: W, rows: &[SummaryRow]) -> Result<()> {
    writeln!(out, "{SUMMARY_HEADER}")?;
    writeln!(
        out,
        "cell,n,p,k,m,tau_multiplier,tau,method,replicates,exact_freq,exact_se,lbar_mean,lbar_se,converged_frac,tr_bhat_mean,mcord_mean"
    )?;
    for s in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            s.cell,
            s.n,
            s.p,
            s.k,
            s.m,
            fmt_f64(s.tau_multiplier),
            fmt_f64(s.tau),
            s.method,
            s.replicates,
            opt(s.exact_freq, fmt_f64),
            opt(s.exact_se, fmt_f64),
            opt(s.lbar_mean, fmt_f64),
            opt(s.lbar_se, fmt_f64),
            opt(s.converged_frac, fmt_f64),
            opt(s.tr_bhat_mean, fmt_f64),
            opt(s.mcord_mean, fmt_f64),
        )?;
    }
    Ok(())
}

fn write_timings_csv<W: Write>(mut out: W, timings: &[Timing]) -> Result<()> {
    writeln!(out, "cell,method,replicate,wall_ms")?;
    for t in timings {
        writeln!(out, "{},{},{},{}", t.cell, t.method, t.replicate, fmt_f64(t.wall_ms))?;
    }
    Ok(())
}

/// Parses a records file written by [`write_records_csv`].
pub fn read_records_csv(text: &str) -> Result<Vec<RecoveryRecord>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, l)) if l.trim() == RECORDS_HEADER => {}
        _ => {
            return Err(Error::Parse {
                line: 1,
                message: format!("expected `{RECORDS_HEADER}`"),
            })
        }
    }
    match lines.next() {
        Some((_, l)) if l.trim() == RECORD_COLUMNS => {}
        _ => {
            return Err(Error::Parse {
                line: 2,
                message: "unexpected column header".into(),
            })
        }
    }
    let mut out = Vec::new();
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let lineno = i + 1;
        let bad = |message: String| Error::Parse {
            line: lineno,
            message,
        };
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 17 {
            return Err(bad(format!("expected 17 fields, found {}", f.len())));
        }
        fn num<T: FromStr>(s: &str) -> std::result::Result<T, String> {
            s.parse().map_err(|_| format!("cannot parse `{s}`"))
        }
        fn opt_num<T: FromStr>(s: &str) -> std::result::Result<Option<T>, String> {
            if s.is_empty() { Ok(None) } else { num(s).map(Some) }
        }
        fn opt_bool(s: &str) -> std::result::Result<Option<bool>, String> {
            match s {
                "" => Ok(None),
                "1" => Ok(Some(true)),
                "0" => Ok(Some(false)),
                _ => Err(format!("bad flag `{s}`")),
            }
        }
        let parse = || -> std::result::Result<RecoveryRecord, String> {
            Ok(RecoveryRecord {
                cell: num(f[0])?,
                n: num(f[1])?,
                p: num(f[2])?,
                k: num(f[3])?,
                m: num(f[4])?,
                tau_multiplier: num(f[5])?,
                tau: num(f[6])?,
                method: f[7].parse().map_err(|e: Error| e.to_string())?,
                replicate: num(f[8])?,
                seed: num(f[9])?,
                exact: opt_bool(f[10])?,
                lbar: opt_num(f[11])?,
                k_est: opt_num(f[12])?,
                bhat_dist: opt_num(f[13])?,
                tr_bhat: opt_num(f[14])?,
                solver_converged: opt_bool(f[15])?,
                mcord: opt_num(f[16])?,
            })
        };
        out.push(parse().map_err(bad)?);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseFiles {
    pub records: PathBuf,
    pub summary: PathBuf,
    pub timings: PathBuf,
    pub run_info: PathBuf,
}

#[derive(Serialize)]
struct RunInfo<'a> {
    version: &'static str,
    config: &'a ExperimentConfig,
    cells: Vec<Cell>,
    records: usize,
}

fn create(path: &Path) -> Result<BufWriter<fs::File>> {
    Ok(BufWriter::new(fs::File::create(path)?))
}

/// Runs the grid and writes `records.csv`, `summary.csv`, `timings.csv` and
/// `run_info.json` into `out_dir` (created if missing).
pub fn run_phase(config: &ExperimentConfig, out_dir: impl AsRef<Path>) -> Result<(PhaseRun, PhaseFiles)> {
    config.validate()?;
    let dir = out_dir.as_ref();
    fs::create_dir_all(dir)?;
    let files = PhaseFiles {
        records: dir.join("records.csv"),
        summary: dir.join("summary.csv"),
        timings: dir.join("timings.csv"),
        run_info: dir.join("run_info.json"),
    };
    // Fail on an unwritable directory before the expensive part.
    create(&files.records)?;

    let run = run(config)?;
    let mut w = create(&files.records)?;
    write_records_csv(&mut w, &run.records)?;
    w.flush()?;
    let mut w = create(&files.summary)?;
    write_summary_csv(&mut w, &run.summary)?;
    w.flush()?;
    let mut w = create(&files.timings)?;
    write_timings_csv(&mut w, &run.timings)?;
    w.flush()?;
    save_json(
        &files.run_info,
        &RunInfo {
            version: env!("CARGO_PKG_VERSION"),
            config,
            cells: config.cells()?,
            records: run.records.len(),
        },
    )?;
    Ok((run, files))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_config() -> ExperimentConfig {
        ExperimentConfig {
            n: vec![100],
            k: vec![2],
            m: vec![4],
            tau_multipliers: vec![0.0, 20.0],
            methods: Method::ALL.to_vec(),
            replicates: 3,
            base_seed: 9,
            solver: SdpOptions::default().with_tolerance(1e-5),
            kmeans_restarts: 5,
            ..Default::default()
        }
    }

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.name().parse::<Method>().unwrap(), m);
            let json = serde_json::to_string(&m).unwrap();
            assert_eq!(json, format!("\"{}\"", m.name()));
        }
        assert!("cord".parse::<Method>().is_err());
    }

    #[test]
    fn validation_rejects_bad_cells() {
        let mut c = small_config();
        c.p = vec![7];
        assert!(c.validate().is_err());
        let mut c = small_config();
        c.m = vec![1];
        assert!(c.validate().is_err());
        let mut c = small_config();
        c.replicates = 0;
        assert!(c.validate().is_err());
        let mut c = small_config();
        c.gamma_method = GammaMethod::Zero;
        assert!(c.validate().is_err());
        c.methods = vec![Method::Pecok];
        assert!(c.validate().is_ok());
    }

    #[test]
    fn config_json_defaults_and_unknown_fields() {
        let c: ExperimentConfig = serde_json::from_str(r#"{"replicates": 2, "methods": ["csc"]}"#).unwrap();
        assert_eq!(c.replicates, 2);
        assert_eq!(c.k, vec![4]);
        assert!(serde_json::from_str::<ExperimentConfig>(r#"{"replicas": 2}"#).is_err());
    }

    #[test]
    fn unequal_cell_layout() {
        let c = ExperimentConfig {
            p: vec![11],
            k: vec![3],
            m: vec![3],
            tau_multipliers: vec![1.0],
            ..Default::default()
        };
        let cell = c.cells().unwrap()[0];
        assert_eq!(cell.partition().unwrap().group_sizes(), &[3, 3, 5]);
        let threshold = separation_threshold(200, 3, 11, 3).unwrap();
        assert_eq!(cell.tau, threshold);
    }

    #[test]
    fn deterministic_and_summary_matches_records() {
        let cfg = small_config();
        let a = run(&cfg).unwrap();
        let b = run(&ExperimentConfig {
            execution: Execution::Sequential,
            ..cfg.clone()
        })
        .unwrap();
        assert_eq!(a.records, b.records);
        assert_eq!(a.records.len(), 2 * 3 * Method::ALL.len());

        let mut buf = Vec::new();
        write_records_csv(&mut buf, &a.records).unwrap();
        let parsed = read_records_csv(std::str::from_utf8(&buf).unwrap()).unwrap();
        assert_eq!(parsed, a.records);
        assert_eq!(summarize(&parsed), a.summary);
    }

    #[test]
    fn adding_a_method_keeps_other_draws() {
        let base = ExperimentConfig {
            methods: vec![Method::Pecok],
            ..small_config()
        };
        let more = ExperimentConfig {
            methods: vec![Method::Csc, Method::Pecok],
            ..small_config()
        };
        let a = run(&base).unwrap();
        let b = run(&more).unwrap();
        let pecok_b: Vec<_> = b.records.into_iter().filter(|r| r.method == Method::Pecok).collect();
        assert_eq!(a.records, pecok_b);
    }

    #[test]
    fn summary_statistics() {
        let cfg = small_config();
        let run = run(&cfg).unwrap();
        for s in &run.summary {
            assert_eq!(s.replicates, 3);
            match s.method {
                Method::CordMetricOnly => {
                    assert!(s.exact_freq.is_none());
                    assert!(s.mcord_mean.unwrap() >= 0.0);
                }
                _ => {
                    let f = s.exact_freq.unwrap();
                    assert!((0.0..=1.0).contains(&f));
                    assert!((s.exact_se.unwrap() - (f * (1.0 - f) / 3.0).sqrt()).abs() < 1e-15);
                }
            }
        }
        let adaptive = run
            .summary
            .iter()
            .find(|s| s.method == Method::PecokAdaptive)
            .unwrap();
        assert!(adaptive.tr_bhat_mean.is_some());
    }

    #[test]
    fn read_records_reports_line_numbers() {
        let text = format!("{RECORDS_HEADER}\n{RECORD_COLUMNS}\n1,2,3\n");
        match read_records_csv(&text) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        assert!(read_records_csv("cell\n").is_err());
    }
}
