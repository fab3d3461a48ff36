//! `morrey`: compute Morrey extremals and run the verification battery from
//! the command line.
//!
//! Exit codes: 0 success, 2 config error, 3 numerical failure, 4 failed
//! verification.

// `!(x > 0.0)` rejects NaN along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use morrey_core::geometry::DomainSpec;
use morrey_core::io::write_json;
use serde::Serialize;
use serde_json::Value;

use commands::{Outcome, OutputDir};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("i/o failure: {0}")]
    Io(String),
    #[error("verification failed: {0}")]
    Verification(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) | CliError::Io(_) => 3,
            CliError::Verification(_) => 4,
        }
    }
}

impl From<morrey_core::Error> for CliError {
    fn from(e: morrey_core::Error) -> Self {
        use morrey_core::Error as E;
        match e {
            E::InvalidSpec(_)
            | E::InvalidRegime { .. }
            | E::Config(_)
            | E::OutOfRange(_)
            | E::UnsupportedWeight(_)
            | E::MeshResolution(_)
            | E::PoleTooCloseToBoundary { .. }
            | E::Precondition(_)
            | E::Parse { .. } => CliError::Config(e.to_string()),
            E::Io(_) | E::Json(_) | E::Csv(_) => CliError::Io(e.to_string()),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "morrey", version, about = "Sharp Morrey constants and extremals on planar domains")]
struct Cli {
    /// JSON run configuration.
    #[arg(short, long, global = true)]
    config: Option<PathBuf>,
    /// Override any config key, e.g. `--set solver.grad_tol=1e-8` (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE", value_parser = config::parse_override, global = true)]
    overrides: Vec<(String, Value)>,
    /// Domain JSON file or `builtin:<name>`.
    #[arg(long, global = true)]
    domain: Option<String>,
    /// Exponent p > 2.
    #[arg(short, long, global = true)]
    p: Option<f64>,
    /// Mesh size.
    #[arg(long, global = true)]
    h: Option<f64>,
    /// Pole grid spacing of the sweep.
    #[arg(short = 'g', long, global = true)]
    sweep_spacing: Option<f64>,
    /// Mesh size of the sweep solves.
    #[arg(long, global = true)]
    sweep_h: Option<f64>,
    /// Output directory (beats MORREY_OUTPUT_DIR and the config file).
    #[arg(short, long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for pole sweeps (default: all cores).
    #[arg(short, long, global = true)]
    jobs: Option<usize>,
    /// More log output on stderr (repeatable); RUST_LOG also works.
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Find the extremal: pole sweep plus refinement; writes the field and the sweep.
    Solve,
    /// Pole-energy landscape over the sweep grid.
    Sweep,
    /// Run the verification battery; exit 4 if any check fails.
    Verify {
        /// Comma-separated subset of checks.
        #[arg(long, value_delimiter = ',')]
        only: Option<Vec<String>>,
    },
    /// Maximize the Green diagonal G(y, y) over the sweep grid.
    GreenMax,
    /// Symmetry defects and orbit of the computed extremal.
    SymmetryCheck,
    /// Export a field (VTK input or a pole potential) as VTK and CSV and check the round trip.
    Export {
        /// Legacy VTK field to convert.
        #[arg(long)]
        from: Option<PathBuf>,
        /// Pole `x,y` of the potential to export.
        #[arg(long, value_name = "X,Y", value_parser = parse_pole, allow_hyphen_values = true)]
        pole: Option<[f64; 2]>,
        /// Also sample onto a grid with this cell size.
        #[arg(long)]
        grid_cell: Option<f64>,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Solve => "solve",
            Command::Sweep => "sweep",
            Command::Verify { .. } => "verify",
            Command::GreenMax => "green-max",
            Command::SymmetryCheck => "symmetry-check",
            Command::Export { .. } => "export",
        }
    }
}

fn parse_pole(s: &str) -> Result<[f64; 2], String> {
    let bad = || format!("expected `x,y`, got `{s}`");
    let (x, y) = s.split_once(',').ok_or_else(bad)?;
    Ok([x.trim().parse().map_err(|_| bad())?, y.trim().parse().map_err(|_| bad())?])
}

/// The `summary.json` of every command.
#[derive(Serialize)]
struct ResultBundle<'a> {
    command: &'static str,
    version: &'static str,
    commit: &'static str,
    input: &'a Value,
    domain: Option<DomainSpec>,
    outputs: Value,
    /// Files written next to the summary.
    files: Vec<String>,
    /// The only field that differs between identical runs.
    timestamp: String,
}

fn absolute(p: &Path) -> String {
    std::path::absolute(p).unwrap_or_else(|_| p.to_path_buf()).to_string_lossy().into_owned()
}

/// Flags become config overrides so that they show up in the input echo.
fn flag_overrides(cli: &Cli) -> Vec<(String, Value)> {
    let mut o = cli.overrides.clone();
    let mut set = |k: &str, v: Value| o.push((k.to_string(), v));
    if let Some(d) = &cli.domain {
        let v = if d.starts_with("builtin:") { d.clone() } else { absolute(Path::new(d)) };
        set("domain", Value::String(v));
    }
    if let Some(p) = cli.p {
        set("p", p.into());
    }
    if let Some(h) = cli.h {
        set("h", h.into());
    }
    if let Some(g) = cli.sweep_spacing {
        set("sweep_spacing", g.into());
    }
    if let Some(h) = cli.sweep_h {
        set("sweep_h", h.into());
    }
    match &cli.command {
        Command::Verify { only: Some(names) } => set("verify.checks", names.clone().into()),
        Command::Export { from, pole, grid_cell } => {
            if let Some(f) = from {
                set("export.from", absolute(f).into());
            }
            if let Some(p) = pole {
                set("export.pole", p.to_vec().into());
            }
            if let Some(c) = grid_cell {
                set("export.grid_cell", (*c).into());
            }
        }
        _ => {}
    }
    o
}

fn run(cli: &Cli) -> Result<(), CliError> {
    if let Some(j) = cli.jobs {
        if j == 0 {
            return Err(CliError::Config("--jobs must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(j)
            .build_global()
            .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    }
    let loaded = config::load(cli.config.as_deref(), &flag_overrides(cli))?;
    let dir = loaded.output_dir(cli.out.as_deref());
    std::fs::create_dir_all(&dir)
        .map_err(|e| CliError::Config(format!("cannot create output directory {}: {e}", dir.display())))?;
    let out = OutputDir::new(dir.clone());
    let outcome: Outcome = match &cli.command {
        Command::Solve => commands::solve(&loaded, out),
        Command::Sweep => commands::sweep(&loaded, out),
        Command::Verify { .. } => commands::verify(&loaded, out),
        Command::GreenMax => commands::green_max(&loaded, out),
        Command::SymmetryCheck => commands::symmetry_check(&loaded, out),
        Command::Export { .. } => commands::export(&loaded, out),
    }?;
    let bundle = ResultBundle {
        command: cli.command.name(),
        version: env!("CARGO_PKG_VERSION"),
        commit: env!("MORREY_COMMIT"),
        input: &loaded.echo,
        domain: outcome.domain,
        outputs: outcome.outputs,
        files: outcome.files,
        timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
    };
    let summary = dir.join("summary.json");
    write_json(&summary, &bundle)?;
    println!("summary: {}", summary.display());
    if outcome.failures.is_empty() {
        Ok(())
    } else {
        Err(CliError::Verification(outcome.failures.join(", ")))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("morrey: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
