use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use entropy_flow_cli::{run, Command, Format, RunConfig, EXIT_USAGE, THREADS_ENV};

/// Entropy functionals and heat-flow inequalities on sampled densities.
#[derive(Parser)]
#[command(name = "entropy-flow", version)]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Run every applicable inequality check.
    Verify(Common),
    /// Tabulate H, N, I, J, Υ and derivative residuals along the heat flow.
    Flow(Common),
    /// Nash's inequality on the density and on 3x the density.
    Nash(Common),
    /// Scaling laws of H, I and Υ under dilation.
    Scaling(Common),
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Args)]
struct Common {
    /// JSON density spec.
    #[arg(long)]
    density: PathBuf,
    #[arg(long)]
    half_width: Option<f64>,
    /// Grid points per axis.
    #[arg(long)]
    points: Option<usize>,
    #[arg(long, default_value_t = 0.2)]
    t_min: f64,
    #[arg(long, default_value_t = 1.0)]
    t_max: f64,
    #[arg(long, default_value_t = 5)]
    steps: usize,
    /// Finite-difference step in time (default scales with t).
    #[arg(long)]
    dt: Option<f64>,
    /// Uniform tolerance for every check.
    #[arg(long)]
    tol: Option<f64>,
    /// Dilation factors for `scaling`.
    #[arg(long, value_delimiter = ',', default_values_t = [0.5, 2.0, 3.0])]
    scales: Vec<f64>,
    #[arg(long, value_enum, default_value = "csv")]
    format: FormatArg,
    /// Write the table here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn config(command: Command, c: Common) -> RunConfig {
    RunConfig {
        command,
        density_spec_path: c.density,
        half_width: c.half_width,
        points: c.points,
        t_min: c.t_min,
        t_max: c.t_max,
        steps: c.steps,
        dt: c.dt,
        tol: c.tol,
        scales: c.scales,
        format: match c.format {
            FormatArg::Csv => Format::Csv,
            FormatArg::Json => Format::Json,
        },
        out: c.out,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE as u8 } else { 0 });
        }
    };
    if let Some(n) = std::env::var(THREADS_ENV).ok().and_then(|s| s.parse::<usize>().ok()) {
        if n > 0 {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
    let cfg = match cli.command {
        Sub::Verify(c) => config(Command::Verify, c),
        Sub::Flow(c) => config(Command::Flow, c),
        Sub::Nash(c) => config(Command::Nash, c),
        Sub::Scaling(c) => config(Command::Scaling, c),
    };
    ExitCode::from(run(&cfg, &mut std::io::stderr()) as u8)
}
