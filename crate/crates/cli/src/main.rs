mod commands;
mod table;

use std::fs::File;
use std::io::{self, Write};
use std::num::NonZeroUsize;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Tail probabilities of conditioned Brownian sheets, their Monte Carlo and
/// Kolmogorov–Smirnov counterparts, and Pickands-type constants.
#[derive(Parser, Debug)]
#[command(name = "sheettail", version)]
struct Cli {
    /// Worker threads; results do not depend on this.
    #[arg(long, global = true)]
    workers: Option<NonZeroUsize>,
    /// Write CSV here instead of standard output.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Level-set constant of a copula model.
    ComputeK(ComputeKArgs),
    /// Asymptotic and exact tail laws with the bound series.
    EvalLaw(EvalLawArgs),
    /// Monte Carlo tail probabilities of the conditioned field.
    TailMc(TailMcArgs),
    /// Finite-sample KS exceedance rates against the limit field.
    Ks(KsArgs),
    /// Normalized Pickands-type constant.
    Pickands(PickandsArgs),
    /// Every applicable column for a model, one row per threshold.
    Report(ReportArgs),
}

#[derive(Args, Debug)]
struct ComputeKArgs {
    #[arg(long)]
    model: String,
    #[arg(long, value_enum, default_value_t = KMethodArg::Auto)]
    method: KMethodArg,
    /// Target relative error.
    #[arg(long, default_value_t = 1e-4)]
    target_rel: f64,
    /// Seed of the randomized quasi-Monte Carlo shifts.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum KMethodArg {
    Auto,
    Quadrature,
    MonteCarlo,
}

#[derive(Args, Debug)]
struct EvalLawArgs {
    #[arg(long)]
    model: String,
    #[arg(long, value_delimiter = ',', required = true, allow_negative_numbers = true)]
    u: Vec<f64>,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    w: f64,
    #[arg(long)]
    two_sided: bool,
    /// Also evaluate the lower and upper bound series where they apply.
    #[arg(long)]
    bounds: bool,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum SamplerArg {
    /// Bridge for min-stable models, cell-increment sheet otherwise.
    Auto,
    Dense,
    Sheet,
    Bridge,
}

#[derive(Args, Debug)]
struct TailMcArgs {
    #[arg(long)]
    model: String,
    #[arg(long, value_delimiter = ',', required = true, allow_negative_numbers = true)]
    u: Vec<f64>,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    w: f64,
    /// Number of replicates.
    #[arg(long)]
    n: usize,
    /// Grid steps per axis (bridge steps for the bridge sampler).
    #[arg(long)]
    grid: Option<usize>,
    #[arg(long)]
    two_sided: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = SamplerArg::Auto)]
    sampler: SamplerArg,
}

#[derive(Args, Debug)]
struct KsArgs {
    #[arg(long)]
    model: String,
    /// Sample size.
    #[arg(long)]
    m: usize,
    #[arg(long)]
    reps: usize,
    #[arg(long, value_delimiter = ',', required = true, allow_negative_numbers = true)]
    u: Vec<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    two_sided: bool,
    /// Lattice steps per axis when exact enumeration does not apply.
    #[arg(long, default_value_t = 64)]
    lattice: usize,
    /// Grid steps per axis of the limit-field simulation.
    #[arg(long)]
    limit_grid: Option<usize>,
    /// Replicates of the limit-field simulation.
    #[arg(long)]
    limit_samples: Option<usize>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum EstimatorArg {
    Mixture,
    Direct,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum SupArg {
    Continuous,
    Grid,
}

#[derive(Args, Debug)]
struct PickandsArgs {
    #[arg(long, value_delimiter = ',', required = true)]
    c: Vec<f64>,
    #[arg(long, value_delimiter = ',', required = true)]
    lambda: Vec<f64>,
    #[arg(long, default_value_t = 0.05)]
    step: f64,
    #[arg(long)]
    reps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Use exp(Y - Var Y) without the sqrt 2 scaling (direct estimator only).
    #[arg(long)]
    literal: bool,
    #[arg(long, value_enum)]
    estimator: Option<EstimatorArg>,
    #[arg(long, value_enum, default_value_t = SupArg::Continuous)]
    sup: SupArg,
}

#[derive(Args, Debug)]
struct ReportArgs {
    #[arg(long)]
    model: String,
    #[arg(long, value_delimiter = ',', required = true, allow_negative_numbers = true)]
    u: Vec<f64>,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    w: f64,
    /// Monte Carlo replicates.
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    grid: Option<usize>,
    #[arg(long)]
    two_sided: bool,
    /// Add KS exceedance rates at this sample size.
    #[arg(long)]
    ks_m: Option<usize>,
    #[arg(long, default_value_t = 1000)]
    ks_reps: usize,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            let usage = e.downcast_ref::<sheettail::Error>().is_some_and(|e| e.is_usage());
            ExitCode::from(if usage { 2 } else { 1 })
        }
    }
}

fn run(cli: &Cli) -> anyhow::Result<()> {
    let workers = cli.workers.map_or(0, NonZeroUsize::get);
    let (table, summary) = match &cli.command {
        Command::ComputeK(a) => commands::compute_k(a)?,
        Command::EvalLaw(a) => commands::eval_law(a)?,
        Command::TailMc(a) => commands::tail_mc(a, workers)?,
        Command::Ks(a) => commands::ks(a, workers)?,
        Command::Pickands(a) => commands::pickands(a, workers)?,
        Command::Report(a) => commands::report(a, workers)?,
    };
    match &cli.output {
        Some(path) => table.write_to(File::create(path)?)?,
        None => table.write_to(io::stdout().lock())?,
    }
    let mut err = io::stderr().lock();
    for line in summary {
        writeln!(err, "{line}")?;
    }
    Ok(())
}
