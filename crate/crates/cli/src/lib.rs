//! Driver behind the `entropy-flow` binary.
//!
//! Each command reads a JSON density spec, samples it on a grid, runs the
//! requested computation and renders a CSV or JSON table. Rendering is
//! byte-deterministic: floats are written with 17 significant digits, rows
//! come out in a fixed order, and reductions do not depend on thread count.
//!
//! Exit codes: 0 all checks pass, 1 an inequality check failed, 2 usage or
//! configuration error, 3 numerical-domain error (e.g. tail mass outside the grid).

// `!(x > 0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::PathBuf;

use entropy_flow::heat::flow_trace_probed;
use entropy_flow::{
    build_grid, Axis, FlowError, GridDomain, InequalityReport, InequalitySuite, Spec, Tolerances,
};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

/// Header of the `flow` CSV output.
pub const FLOW_COLUMNS: [&str; 9] = [
    "t",
    "H",
    "N",
    "I",
    "J",
    "Upsilon",
    "debruijn_residual",
    "fisher_residual",
    "n_second_diff",
];
pub const VERIFY_COLUMNS: [&str; 7] = ["tag", "lhs", "rhs", "slack", "tol", "pass", "meta"];
pub const NASH_COLUMNS: [&str; 9] =
    ["tag", "mass", "lhs", "rhs", "ratio", "identity_residual", "slack", "tol", "pass"];
pub const SCALING_COLUMNS: [&str; 7] = ["tag", "a", "lhs", "rhs", "slack", "tol", "pass"];

/// Name of the environment variable that caps worker threads.
pub const THREADS_ENV: &str = "ENTROPY_FLOW_THREADS";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Verify,
    Flow,
    Nash,
    Scaling,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub density_spec_path: PathBuf,
    pub half_width: Option<f64>,
    pub points: Option<usize>,
    pub t_min: f64,
    pub t_max: f64,
    pub steps: usize,
    pub dt: Option<f64>,
    pub tol: Option<f64>,
    pub scales: Vec<f64>,
    pub format: Format,
    pub out: Option<PathBuf>,
}

impl RunConfig {
    pub fn new(command: Command, density_spec_path: impl Into<PathBuf>) -> Self {
        Self {
            command,
            density_spec_path: density_spec_path.into(),
            half_width: None,
            points: None,
            t_min: 0.2,
            t_max: 1.0,
            steps: 5,
            dt: None,
            tol: None,
            scales: vec![0.5, 2.0, 3.0],
            format: Format::Csv,
            out: None,
        }
    }
}

/// Failure of a command before any table is produced.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Usage(_) => EXIT_USAGE,
            Self::Numerical(_) => EXIT_NUMERICAL,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Usage(m) => write!(f, "error: {m}"),
            Self::Numerical(m) => write!(f, "numerical error: {m}"),
        }
    }
}

impl From<FlowError> for CliError {
    fn from(e: FlowError) -> Self {
        match e {
            FlowError::TailMass { .. }
            | FlowError::ZeroMass | FlowError::NotNormalized(_) => Self::Numerical(e.to_string()),
            _ => Self::Usage(e.to_string()),
        }
    }
}

/// Rendered table plus the tags of any failed checks.
#[derive(Clone, Debug, PartialEq)]
pub struct CommandOutput {
    pub body: String,
    pub failed: Vec<String>,
}

impl CommandOutput {
    pub fn exit_code(&self) -> i32 {
        if self.failed.is_empty() {
            EXIT_PASS
        } else {
            EXIT_CHECK_FAILED
        }
    }
}

/// Formats a float with 17 significant digits; non-finite values become `nan`/`inf`.
pub fn fmt_float(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "nan".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

#[derive(Clone, Debug)]
enum Cell {
    Num(f64),
    Text(String),
    Bool(bool),
    Missing,
}

fn render(format: Format, columns: &[&str], rows: &[Vec<Cell>]) -> String {
    match format {
        Format::Csv => {
            let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(vec![]);
            w.write_record(columns).expect("write to memory");
            for row in rows {
                let rec: Vec<String> = row
                    .iter()
                    .map(|c| match c {
                        Cell::Num(x) => fmt_float(*x),
                        Cell::Text(s) => s.clone(),
                        Cell::Bool(b) => b.to_string(),
                        Cell::Missing => String::new(),
                    })
                    .collect();
                w.write_record(&rec).expect("write to memory");
            }
            String::from_utf8(w.into_inner().expect("flush to memory")).expect("utf-8 csv")
        }
        Format::Json => {
            let mut s = String::from("[\n");
            for (k, row) in rows.iter().enumerate() {
                s.push_str("  {");
                for (j, (name, c)) in columns.iter().zip(row).enumerate() {
                    if j > 0 {
                        s.push_str(", ");
                    }
                    s.push_str(&serde_json::to_string(name).expect("string"));
                    s.push_str(": ");
                    match c {
                        Cell::Num(x) if x.is_finite() => s.push_str(&fmt_float(*x)),
                        Cell::Num(_) | Cell::Missing => s.push_str("null"),
                        Cell::Text(t) => s.push_str(&serde_json::to_string(t).expect("string")),
                        Cell::Bool(b) => s.push_str(if *b { "true" } else { "false" }),
                    }
                }
                s.push('}');
                if k + 1 < rows.len() {
                    s.push(',');
                }
                s.push('\n');
            }
            s.push_str("]\n");
            s
        }
    }
}

fn load_spec(config: &RunConfig) -> Result<Spec, CliError> {
    let text = fs::read_to_string(&config.density_spec_path).map_err(|e| {
        CliError::Usage(format!("cannot read {}: {e}", config.density_spec_path.display()))
    })?;
    Ok(Spec::from_json(&text)?)
}

fn domain_for(config: &RunConfig, dim: usize) -> Result<GridDomain<f64>, CliError> {
    let base = GridDomain::<f64>::default_for_dim(dim)?;
    let axes = base
        .axes()
        .iter()
        .map(|a| Axis {
            half_width: config.half_width.unwrap_or(a.half_width),
            points: config.points.unwrap_or(a.points),
        })
        .collect();
    Ok(GridDomain::new(axes)?)
}

fn suite(config: &RunConfig) -> Result<InequalitySuite<f64>, CliError> {
    match config.tol {
        None => Ok(InequalitySuite::default()),
        Some(t) if t > 0.0 && t.is_finite() => Ok(InequalitySuite::new(Tolerances::uniform(t))),
        Some(t) => Err(CliError::Usage(format!("--tol must be positive, got {t}"))),
    }
}

fn failed_tags(reports: &[&InequalityReport<f64>]) -> Vec<String> {
    let mut tags: Vec<String> = vec![];
    for r in reports.iter().filter(|r| !r.pass) {
        let t = r.tag.to_string();
        if !tags.contains(&t) {
            tags.push(t);
        }
    }
    tags
}

/// Runs every applicable inequality check on the density.
pub fn cmd_verify(config: &RunConfig) -> Result<CommandOutput, CliError> {
    let spec = load_spec(config)?;
    let suite = suite(config)?;
    let grid = build_grid(&spec, domain_for(config, spec.dim())?)?;
    let reports = suite.run_all(&grid)?;
    let rows: Vec<Vec<Cell>> = reports
        .iter()
        .map(|r| {
            vec![
                Cell::Text(r.tag.to_string()),
                Cell::Num(r.lhs),
                Cell::Num(r.rhs),
                Cell::Num(r.slack),
                Cell::Num(r.tol),
                Cell::Bool(r.pass),
                Cell::Text(r.meta.clone()),
            ]
        })
        .collect();
    Ok(CommandOutput {
        body: render(config.format, &VERIFY_COLUMNS, &rows),
        failed: failed_tags(&reports.iter().collect::<Vec<_>>()),
    })
}

/// Evenly spaced times `t_min, …, t_max` (`steps` values).
pub fn time_grid(config: &RunConfig) -> Result<Vec<f64>, CliError> {
    let (a, b, k) = (config.t_min, config.t_max, config.steps);
    if !(a > 0.0) || !a.is_finite() {
        return Err(CliError::Usage(format!("--t-min must be positive, got {a}")));
    }
    if !(b > a) || !b.is_finite() {
        return Err(CliError::Usage(format!("--t-max must exceed --t-min, got {b}")));
    }
    if k < 3 {
        return Err(CliError::Usage(format!("--steps must be at least 3, got {k}")));
    }
    if let Some(dt) = config.dt {
        if !(dt > 0.0) || dt > a / 10.0 {
            return Err(CliError::Usage(format!("--dt must lie in (0, t_min/10], got {dt}")));
        }
    }
    let step = (b - a) / (k - 1) as f64;
    Ok((0..k).map(|i| if i + 1 == k { b } else { a + step * i as f64 }).collect())
}

/// Functionals and derivative residuals along the heat flow.
pub fn cmd_flow(config: &RunConfig) -> Result<CommandOutput, CliError> {
    let times = time_grid(config)?;
    let spec = load_spec(config)?;
    let grid = build_grid(&spec, domain_for(config, spec.dim())?)?;
    let trace = flow_trace_probed(&grid, &times, config.dt)?;
    let opt = |x: Option<f64>| x.map_or(Cell::Missing, Cell::Num);
    let rows: Vec<Vec<Cell>> = trace
        .snapshots
        .iter()
        .enumerate()
        .map(|(k, s)| {
            vec![
                Cell::Num(s.t),
                Cell::Num(s.entropy),
                Cell::Num(s.entropy_power),
                Cell::Num(s.fisher),
                Cell::Num(s.mckean_j),
                Cell::Num(s.upsilon),
                opt(trace.debruijn_residual[k]),
                opt(trace.fisher_residual[k]),
                opt(trace.n_second_diff[k]),
            ]
        })
        .collect();
    Ok(CommandOutput { body: render(config.format, &FLOW_COLUMNS, &rows), failed: vec![] })
}

/// Nash's inequality on the density and on three times the density.
pub fn cmd_nash(config: &RunConfig) -> Result<CommandOutput, CliError> {
    let spec = load_spec(config)?;
    let suite = suite(config)?;
    let grid = build_grid(&spec, domain_for(config, spec.dim())?)?;
    let reports = [suite.check_nash(&grid)?, suite.check_nash(&grid.scaled(3.0)?)?];
    let masses = [grid.mass(), 3.0 * grid.mass()];
    let rows: Vec<Vec<Cell>> = reports
        .iter()
        .zip(masses)
        .map(|(r, m)| {
            vec![
                Cell::Text(r.report.tag.to_string()),
                Cell::Num(m),
                Cell::Num(r.report.lhs),
                Cell::Num(r.report.rhs),
                Cell::Num(r.ratio),
                Cell::Num(r.identity_residual),
                Cell::Num(r.report.slack),
                Cell::Num(r.report.tol),
                Cell::Bool(r.report.pass),
            ]
        })
        .collect();
    Ok(CommandOutput {
        body: render(config.format, &NASH_COLUMNS, &rows),
        failed: failed_tags(&reports.iter().map(|r| &r.report).collect::<Vec<_>>()),
    })
}

/// Scaling laws of `H`, `I` and `Υ` for each dilation factor in `config.scales`.
pub fn cmd_scaling(config: &RunConfig) -> Result<CommandOutput, CliError> {
    let (lo, hi) = entropy_flow::inequality::SCALING_RANGE;
    if config.scales.is_empty() {
        return Err(CliError::Usage("no scale factors given".into()));
    }
    if let Some(a) = config.scales.iter().find(|a| !(**a >= lo && **a <= hi)) {
        return Err(CliError::Usage(format!("scale factor {a} outside [{lo}, {hi}]")));
    }
    let spec = load_spec(config)?;
    let suite = suite(config)?;
    let grid = build_grid(&spec, domain_for(config, spec.dim())?)?;
    let mut reports = vec![];
    for &a in &config.scales {
        for r in suite.check_scaling_laws(&grid, a)? {
            reports.push((a, r));
        }
    }
    let rows: Vec<Vec<Cell>> = reports
        .iter()
        .map(|(a, r)| {
            vec![
                Cell::Text(r.tag.to_string()),
                Cell::Num(*a),
                Cell::Num(r.lhs),
                Cell::Num(r.rhs),
                Cell::Num(r.slack),
                Cell::Num(r.tol),
                Cell::Bool(r.pass),
            ]
        })
        .collect();
    Ok(CommandOutput {
        body: render(config.format, &SCALING_COLUMNS, &rows),
        failed: failed_tags(&reports.iter().map(|(_, r)| r).collect::<Vec<_>>()),
    })
}

pub fn execute(config: &RunConfig) -> Result<CommandOutput, CliError> {
    match config.command {
        Command::Verify => cmd_verify(config),
        Command::Flow => cmd_flow(config),
        Command::Nash => cmd_nash(config),
        Command::Scaling => cmd_scaling(config),
    }
}

/// Runs `config` on a dedicated pool of `threads` workers.
pub fn execute_with_threads(config: &RunConfig, threads: usize) -> Result<CommandOutput, CliError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start thread pool: {e}")))?;
    pool.install(|| execute(config))
}

/// Executes and writes the table to `--out` (or stdout); diagnostics go to `err`.
/// Nothing is written when the command fails before producing a table.
pub fn run(config: &RunConfig, err: &mut dyn Write) -> i32 {
    let output = match execute(config) {
        Ok(o) => o,
        Err(e) => {
            let _ = writeln!(err, "{e}");
            return e.exit_code();
        }
    };
    let written = match &config.out {
        Some(path) => fs::write(path, &output.body),
        None => std::io::stdout().write_all(output.body.as_bytes()),
    };
    if let Err(e) = written {
        let _ = writeln!(err, "error: cannot write output: {e}");
        return EXIT_USAGE;
    }
    if !output.failed.is_empty() {
        let _ = writeln!(err, "inequality check failed: {}", output.failed.join(", "));
    }
    output.exit_code()
}
