mod commands;
mod config;
mod manifest;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::Value;
use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use commands::{Ctx, Frame, Mask};
use manifest::OutDir;

#[derive(Debug)]
pub enum CliError {
    Core(roughwave::Error),
    Input(String),
    Output(String),
    NotConverged(String),
    CrossCheck(String),
}

impl From<roughwave::Error> for CliError {
    fn from(e: roughwave::Error) -> Self {
        CliError::Core(e)
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Input(m) => write!(f, "bad input: {m}"),
            CliError::Output(m) => write!(f, "cannot write output: {m}"),
            CliError::NotConverged(m) => write!(f, "no convergence: {m}"),
            CliError::CrossCheck(m) => write!(f, "cross-check failed: {m}"),
        }
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        use roughwave::Error as E;
        match self {
            CliError::Core(E::Size(_)) => 3,
            CliError::Core(E::Numerical(_) | E::Ordering(_)) | CliError::CrossCheck(_) => 5,
            CliError::NotConverged(_) => 4,
            CliError::Core(_) | CliError::Input(_) | CliError::Output(_) => 2,
        }
    }
}

#[derive(Parser)]
#[command(name = "roughwave", version, about = "Young integrals and the rough-noise wave equation on a rotated grid")]
struct Cli {
    /// Worker threads for loops over seeds and replicates.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// JSON config document, or a manifest of an earlier run.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory for relative output paths.
    #[arg(long, global = true, env = "ROUGHWAVE_OUT_DIR", default_value = ".")]
    out_dir: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a noise field and write it as CSV.
    SampleNoise(SampleNoiseFlags),
    /// Solve the rotated equation for a noise field.
    Solve(SolveFlags),
    /// Estimate the exponent sum of a field.
    Holder(HolderFlags),
    /// Refinement order of a two-parameter Young integral.
    Convergence(ConvergenceFlags),
    /// Exponent loss of the direct integral against the rotated one.
    DirectCompare(DirectCompareFlags),
}

#[derive(Args, Serialize)]
#[serde(rename_all = "camelCase")]
struct SampleNoiseFlags {
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    h: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    nu: Option<f64>,
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    frame: Option<Frame>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    grid: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    t: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    replicate: Option<u64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    cap: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    out: Option<String>,
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum SchemeFlag {
    Marching,
    Picard,
}

#[derive(Args, Serialize)]
#[serde(rename_all = "camelCase")]
struct SolveFlags {
    /// Rotated-frame noise CSV; sampled inline when omitted.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    noise: Option<String>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    h: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    nu: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    grid: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    t: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    /// sin, tanh, bump, constant or affine.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    sigma: Option<String>,
    /// Parameters of the coefficient, repeatable (`c` for constant, `a b`
    /// for affine).
    #[arg(long = "sigma-param", allow_negative_numbers = true)]
    #[serde(skip_serializing_if = "Vec::is_empty")]
    sigma_params: Vec<f64>,
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    scheme: Option<SchemeFlag>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    picard_tol: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    picard_max_iter: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    fallback: Option<bool>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    kappa: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    kappa_hat: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    cone_depth: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    out: Option<String>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pull_back: Option<String>,
}

#[derive(Args, Serialize)]
#[serde(rename_all = "camelCase")]
struct HolderFlags {
    #[arg(long = "in")]
    #[serde(rename = "in", skip_serializing_if = "Option::is_none")]
    input: Option<String>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    levels: Option<usize>,
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    mask: Option<Mask>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    out: Option<String>,
}

#[derive(Args, Serialize)]
#[serde(rename_all = "camelCase")]
struct ConvergenceFlags {
    /// poly, bilinear, mixed, trig or exp.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pair: Option<String>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    y: Option<String>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    x: Option<String>,
    /// `coarse:fine` dyadic exponents, e.g. `4:9`.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    levels: Option<String>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    holder_x: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    holder_y: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    out: Option<String>,
}

#[derive(Args, Serialize)]
#[serde(rename_all = "camelCase")]
struct DirectCompareFlags {
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    h: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    nu: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    t: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    n: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    levels: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    seeds: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    base_seed: Option<u64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    cap: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    out: Option<String>,
}

fn run(cli: Cli) -> Result<(), CliError> {
    let exec = match cli.jobs {
        Some(0) => return Err(CliError::Input("--jobs must be at least 1".into())),
        Some(1) => roughwave::Exec::Sequential,
        Some(n) => {
            roughwave::par::configure_workers(n);
            roughwave::Exec::Parallel
        }
        None => roughwave::Exec::default(),
    };
    let ctx = Ctx { out: OutDir(cli.out_dir), exec };
    let doc: Option<Value> = cli.config.as_deref().map(config::load_document).transpose()?;
    let file = doc.as_ref();
    match &cli.command {
        Command::SampleNoise(f) => commands::sample_noise(&config::resolve(file, f)?, &ctx),
        Command::Solve(f) => commands::solve_cmd(&config::resolve(file, f)?, &ctx),
        Command::Holder(f) => commands::holder(&config::resolve(file, f)?, &ctx),
        Command::Convergence(f) => commands::convergence(&config::resolve(file, f)?, &ctx),
        Command::DirectCompare(f) => commands::direct_compare(&config::resolve(file, f)?, &ctx),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("roughwave: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
