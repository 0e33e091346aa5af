//! `pecok` command-line tool.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 solver failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use pecok::experiment::{self, ExperimentConfig};
use pecok::io::{fmt_f64, load_matrix_csv, save_json, save_matrix_csv};
use pecok::model::{kl_closed_form, kl_numeric, minimax_sigma_pair, sample};
use pecok::pecok::{pecok, GroupCount};
use pecok::{DataMatrix, Error, GammaMethod, ModelSpec, PecokOptions, SdpOptions};

#[derive(Parser)]
#[command(name = "pecok", version, about = "Variable clustering with PECOK")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw an n×p data matrix from a model JSON file.
    Simulate {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Cluster the columns of a data CSV.
    Cluster(ClusterArgs),
    /// Run a Monte-Carlo recovery grid from a JSON config.
    Phase {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compare the closed-form and numeric KL divergence of the two-point construction.
    Klcheck {
        #[arg(long, value_delimiter = ',', required = true)]
        tau: Vec<f64>,
        #[arg(long, value_delimiter = ',', required = true)]
        m: Vec<usize>,
        #[arg(long, default_value_t = 3)]
        k: usize,
    },
}

#[derive(Args)]
#[command(group(clap::ArgGroup::new("groups").required(true).args(["k", "adaptive"])))]
struct ClusterArgs {
    #[arg(long)]
    input: PathBuf,
    /// Number of groups.
    #[arg(long)]
    k: Option<usize>,
    /// Choose the number of groups with the trace-penalised program.
    #[arg(long)]
    adaptive: bool,
    #[arg(long, default_value = "main")]
    gamma: GammaMethod,
    /// Absolute and relative solver tolerance.
    #[arg(long, default_value_t = 1e-6)]
    solver_tol: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// True model JSON, required by `--gamma oracle`.
    #[arg(long)]
    model: Option<PathBuf>,
    /// Remove column means before forming the covariance.
    #[arg(long)]
    center: bool,
    /// Result JSON; printed to stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the SDP solution matrix as CSV.
    #[arg(long)]
    bhat_out: Option<PathBuf>,
}

#[derive(Serialize)]
struct ClusterOutput {
    labels: Vec<usize>,
    #[serde(rename = "K")]
    k: usize,
    method: &'static str,
    gamma_method: GammaMethod,
    tr_bhat: f64,
    kappa: Option<f64>,
    gamma_hat: Vec<f64>,
    solver: pecok::SdpSolution,
}

fn read_model(path: &PathBuf) -> pecok::Result<ModelSpec> {
    let text = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

fn cluster(args: ClusterArgs) -> pecok::Result<()> {
    let x = DataMatrix::new(load_matrix_csv(&args.input)?)?;
    if x.p() < 3 {
        return Err(Error::InvalidArgument("need at least three columns".into()));
    }
    let truth = args.model.as_ref().map(read_model).transpose()?;
    let opts = PecokOptions {
        gamma_method: args.gamma,
        sdp: SdpOptions::default().with_tolerance(args.solver_tol),
        center: args.center,
        ..PecokOptions::default()
    };
    let groups = match args.k {
        Some(k) => GroupCount::Fixed(k),
        None => GroupCount::Adaptive(None),
    };
    let result = pecok(&x, groups, args.seed, truth.as_ref(), &opts)?;
    if let Some(path) = &args.bhat_out {
        save_matrix_csv(path, &result.solution.b_hat)?;
    }
    let output = ClusterOutput {
        labels: result.partition.labels().to_vec(),
        k: result.k,
        method: if args.adaptive { "pecok_adaptive" } else { "pecok" },
        gamma_method: args.gamma,
        tr_bhat: result.tr_bhat,
        kappa: result.kappa,
        gamma_hat: result.gamma.values.clone(),
        solver: result.solution,
    };
    match &args.out {
        Some(path) => save_json(path, &output)?,
        None => println!("{}", serde_json::to_string_pretty(&output)?),
    }
    Ok(())
}

fn klcheck(taus: &[f64], ms: &[usize], k: usize) -> pecok::Result<()> {
    println!("tau,m,k,closed_form,numeric,abs_diff");
    for &tau in taus {
        for &m in ms {
            let (s0, s1) = minimax_sigma_pair(tau, m, k)?;
            let numeric = kl_numeric(&s1, &s0)?;
            let closed = kl_closed_form(tau, m);
            println!(
                "{},{m},{k},{},{},{}",
                fmt_f64(tau),
                fmt_f64(closed),
                fmt_f64(numeric),
                fmt_f64((closed - numeric).abs())
            );
        }
    }
    Ok(())
}

fn run(cli: Cli) -> pecok::Result<()> {
    match cli.command {
        Command::Simulate { model, n, seed, out } => {
            let model = read_model(&model)?;
            let x = sample(&model, n, seed)?;
            save_matrix_csv(out, x.x())
        }
        Command::Cluster(args) => cluster(args),
        Command::Phase { config, out } => {
            let config = ExperimentConfig::load(&config)?;
            let (run, files) = experiment::run_phase(&config, &out)?;
            eprintln!(
                "{} records in {}, summary in {}",
                run.records.len(),
                files.records.display(),
                files.summary.display()
            );
            Ok(())
        }
        Command::Klcheck { tau, m, k } => klcheck(&tau, &m, k),
    }
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Eigen(_) => 3,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
