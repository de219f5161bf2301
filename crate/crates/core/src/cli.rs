//! Command-line entry point. Exit codes: 0 success, 2 usage, 3 config,
//! 4 numerical failure, 5 I/O.

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::config::{load_config, RunConfig, SnapshotFormat};
use crate::error::Error;
use crate::experiments::{convergence_study, parameter_sweep, run_simulation, ConvergenceCase, SweepParam, SweepSpec};
use crate::io::{write_convergence_table, write_diagnostics, write_field_snapshot, write_sweep_table, FieldFormat};

pub const EXIT_USAGE: u8 = 2;
pub const EXIT_CONFIG: u8 = 3;
pub const EXIT_NUMERICAL: u8 = 4;
pub const EXIT_IO: u8 = 5;

#[derive(Debug, Parser)]
#[command(name = "tumorsim", version, about = "Penalized tumor-growth simulator and experiment harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one simulation and write diagnostics plus a final snapshot.
    Run {
        config: PathBuf,
        /// Output directory (overrides the config and TUMORSIM_OUT_DIR).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sweep one penalty parameter and fit the log-log slope.
    Sweep {
        config: PathBuf,
        #[arg(long)]
        param: SweepParam,
        #[arg(long, value_delimiter = ',', num_args = 1..)]
        values: Vec<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Grid-refinement study against a closed-form solution.
    Converge {
        case: ConvergenceCase,
        #[arg(long, value_delimiter = ',', num_args = 1.., default_values_t = [64usize, 128, 256])]
        resolutions: Vec<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Load and validate a configuration without running it.
    Validate { config: PathBuf },
}

pub fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Config(_) => EXIT_CONFIG,
        Error::Io { .. } => EXIT_IO,
        _ => EXIT_NUMERICAL,
    }
}

fn out_dir(flag: Option<PathBuf>, cfg: Option<&RunConfig>) -> PathBuf {
    if let Some(dir) = flag {
        return dir;
    }
    match cfg {
        Some(cfg) => cfg.output_dir(),
        None => RunConfig::default().output_dir(),
    }
}

fn cmd_run(config: &Path, out: Option<PathBuf>) -> Result<(), Error> {
    let cfg = load_config(config)?;
    let dir = out_dir(out, Some(&cfg));
    let result = run_simulation(&cfg)?;
    let diag = dir.join(&cfg.output.diagnostics);
    write_diagnostics(&result.records, &diag)?;
    let format = match cfg.output.snapshot_format {
        SnapshotFormat::GridCsv => Some(FieldFormat::GridCsv),
        SnapshotFormat::VtkLegacy => Some(FieldFormat::VtkLegacy),
        SnapshotFormat::None => None,
    };
    if let Some(format) = format {
        let snap = dir.join(format!("{}.{}", cfg.output.snapshot, format.extension()));
        write_field_snapshot(&result.final_state, &snap, format)?;
    }
    let s = &result.summary;
    println!(
        "steps={} t={:e} energy_final={:e} energy_max={:e} slip_integral={:e} diagnostics={}",
        s.steps,
        s.final_time,
        s.energy_final,
        s.energy_max,
        s.slip_time_integral,
        diag.display()
    );
    Ok(())
}

fn cmd_sweep(config: &Path, param: SweepParam, values: Vec<f64>, out: Option<PathBuf>) -> Result<(), Error> {
    let base = load_config(config)?;
    let dir = out_dir(out, Some(&base));
    let spec = SweepSpec { param, values, base };
    let result = parameter_sweep(&spec)?;
    let path = dir.join(format!("sweep_{param}.csv"));
    write_sweep_table(&result, &path)?;
    for row in &result.rows {
        println!(
            "{param}={:e} slip_integral={:e} max_leakage={:e} final_energy={:e}",
            row.value, row.slip_time_integral, row.max_leakage, row.final_energy
        );
    }
    println!(
        "slope={:.4} slip_strictly_decreasing={} leakage_nonincreasing={:?} table={}",
        result.slip_slope,
        result.slip_strictly_decreasing,
        result.leakage_nonincreasing,
        path.display()
    );
    Ok(())
}

fn cmd_converge(case: ConvergenceCase, resolutions: Vec<usize>, out: Option<PathBuf>) -> Result<(), Error> {
    let report = convergence_study(case, &resolutions)?;
    let path = out_dir(out, None).join(format!("convergence_{case}.csv"));
    write_convergence_table(&report, &path)?;
    for (k, n) in report.resolutions.iter().enumerate() {
        println!("N={n} error_l1={:e} error_l2={:e}", report.errors_l1[k], report.errors_l2[k]);
    }
    let orders: Vec<String> = report.orders_l1.iter().map(|o| format!("{o:.3}")).collect();
    println!("orders={} table={}", orders.join(","), path.display());
    Ok(())
}

/// Parses `args` (including the program name) and runs the command.
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_USAGE) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Run { config, out } => cmd_run(&config, out),
        Command::Sweep { config, param, values, out } => cmd_sweep(&config, param, values, out),
        Command::Converge { case, resolutions, out } => cmd_converge(case, resolutions, out),
        Command::Validate { config } => load_config(&config).map(|_| println!("{}: ok", config.display())),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("tumorsim: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
