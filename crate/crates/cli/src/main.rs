//! Batch front end: run the tests on CSV data, run simulation grids from a
//! config file, and score power reports.

mod io;
mod minmin_cmd;
mod simulate_cmd;
mod test_cmd;

use clap::{Parser, Subcommand, ValueEnum};
use std::path::PathBuf;

#[derive(Parser)]
#[command(
    name = "hdmean",
    version,
    about = "Two-sample mean-vector tests for high-dimensional data, with a reproducible simulation engine"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum OutputFormat {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Run selected tests on two CSV samples (rows = observations,
    /// columns = dimensions; a non-numeric first row is treated as a header).
    Test(TestArgs),
    /// Run every scenario cell of a simulation config and write one report
    /// row per (scenario, test).
    Simulate(SimulateArgs),
    /// Aggregate power reports into per-method min-min scores, grouped by
    /// sample size.
    Minmin(MinminArgs),
}

#[derive(clap::Args)]
struct TestArgs {
    /// CSV file with the first sample.
    #[arg(long)]
    group1: PathBuf,
    /// CSV file with the second sample.
    #[arg(long)]
    group2: PathBuf,
    /// Comma-separated tests: sh, simes, sd, cq, lopes, psh, thulin.
    #[arg(long, default_value = "sh,simes,sd,cq,lopes", value_delimiter = ',')]
    tests: Vec<String>,
    /// Subset size for sh/psh/thulin (default: min(n/2, p, n-2)).
    #[arg(long)]
    m: Option<usize>,
    /// Subset draws for sh/psh/thulin (default: ceil(p ln p)).
    #[arg(long)]
    b: Option<usize>,
    /// Permutations for psh/thulin (default: 250).
    #[arg(long)]
    l: Option<usize>,
    /// Projection dimension for lopes (default: min(n/2, n-2)).
    #[arg(long)]
    k: Option<usize>,
    /// Use the Welch-type statistics instead of pooled-covariance ones.
    #[arg(long)]
    unequal_cov: bool,
    /// Average the randomized tests (sh, lopes) over this many repetitions.
    #[arg(long, default_value_t = 1)]
    repeats: usize,
    /// Master seed for all randomized behavior.
    #[arg(long, default_value_t = hdmean::DEFAULT_SEED)]
    seed: u64,
    /// Nominal level recorded in JSON output.
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// Transpose the input matrices (use when rows are dimensions).
    #[arg(long)]
    transpose: bool,
    /// Output path (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = OutputFormat::Csv)]
    format: OutputFormat,
}

#[derive(clap::Args)]
struct SimulateArgs {
    /// Scenario grid (TOML, or JSON with a .json extension).
    #[arg(long)]
    config: PathBuf,
    /// Override the config's replicate count.
    #[arg(long)]
    reps: Option<usize>,
    /// Worker threads (default: all cores). Reports do not depend on this.
    #[arg(long)]
    workers: Option<usize>,
    /// Override the config's master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory for report.csv.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(clap::Args)]
struct MinminArgs {
    /// Power report CSVs produced by `simulate`.
    #[arg(long, num_args = 1.., required = true)]
    inputs: Vec<PathBuf>,
    /// Output path (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Test(args) => test_cmd::run(args),
        Command::Simulate(args) => simulate_cmd::run(args),
        Command::Minmin(args) => minmin_cmd::run(args),
    };
    if let Err(err) = result {
        eprintln!("error: {err:#}");
        std::process::exit(1);
    }
}
