//! Command-line front end of `muxphoton`: distributions, optimizations,
//! Monte Carlo verification and reproduction of the tabulated and plotted
//! results, all written as CSV with `#` metadata lines.

pub mod commands;
pub mod config;
pub mod error;
pub mod reference;
pub mod report;
pub mod reproduce;

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use commands::{cmd_dist, cmd_optimize, cmd_verify, VerifyOutcome};
pub use config::{PairLawName, ResolvedConfig, RunConfigFile, SchemeKind, UnitMode};
pub use error::{exit, CliError, CliResult};
pub use report::{Cell, CsvReport, Precision};
pub use reproduce::{cmd_reproduce, Target};

const EXIT_CODES: &str = "\
Exit codes:
  0  success
  1  I/O error (unreadable config, unwritable output)
  2  usage error (bad flag, unknown reproduce target)
  3  configuration error (unknown key, parameter outside its domain)
  4  numerical error (non-finite result, series did not converge)
  5  statistical verification failed (verify only)";

#[derive(Debug, Parser)]
#[command(name = "muxphoton", version, about = "Photon-number statistics of multiplexed heralded single-photon sources", after_help = EXIT_CODES)]
pub struct Cli {
    /// TOML run configuration; flags override its values.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    /// Truncation tolerance of the series (default 1e-10).
    #[arg(long, global = true, value_name = "REAL")]
    pub tolerance: Option<f64>,

    /// Write the CSV here instead of standard output.
    #[arg(long, global = true, value_name = "PATH")]
    pub out: Option<PathBuf>,

    /// Seed of the Monte Carlo simulation (default 42).
    #[arg(long, global = true, value_name = "INT")]
    pub seed: Option<u64>,

    /// Print values rounded to 4 significant digits on standard output; files
    /// always keep full precision.
    #[arg(long, global = true)]
    pub paper_precision: bool,

    /// Print the fully resolved configuration as TOML and exit.
    #[arg(long, global = true)]
    pub print_config: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Output photon-number distribution at fixed N and lambda.
    Dist(DistArgs),
    /// Optimal lambda for each N of a range and the joint optimum.
    Optimize(OptimizeArgs),
    /// Regenerate a table or the curves of a figure.
    Reproduce(ReproduceArgs),
    /// Compare a Monte Carlo simulation with the analytic distribution.
    Verify(VerifyArgs),
}

#[derive(Debug, Args, Default)]
pub struct SchemeArgs {
    #[arg(long, value_enum)]
    pub scheme: Option<SchemeKind>,
    #[arg(long, value_enum)]
    pub pair_law: Option<PairLawName>,
    /// Transmission shared by all units.
    #[arg(long)]
    pub v_b: Option<f64>,
    /// Spatial: transmission of one router.
    #[arg(long)]
    pub v_router: Option<f64>,
    /// Cavity: transmission of one round trip.
    #[arg(long)]
    pub v_cavity: Option<f64>,
    /// Bulk: transmission of a delay branch that is taken.
    #[arg(long)]
    pub v_used: Option<f64>,
    /// Bulk: transmission of a delay branch that is skipped.
    #[arg(long)]
    pub v_bypass: Option<f64>,
    /// Bulk: transmission of the full-length delay medium.
    #[arg(long)]
    pub v_medium: Option<f64>,
    /// Detector efficiency V_D.
    #[arg(long)]
    pub efficiency: Option<f64>,
    /// Number of units N.
    #[arg(long)]
    pub n: Option<u32>,
    /// Number of stages m, N = 2^m.
    #[arg(long)]
    pub m: Option<u32>,
}

#[derive(Debug, Args)]
pub struct DistArgs {
    #[command(flatten)]
    pub scheme: SchemeArgs,
    /// Mean pair number summed over all units.
    #[arg(long)]
    pub lambda: Option<f64>,
}

#[derive(Debug, Args)]
pub struct OptimizeArgs {
    #[command(flatten)]
    pub scheme: SchemeArgs,
    #[arg(long)]
    pub n_min: Option<u32>,
    #[arg(long)]
    pub n_max: Option<u32>,
    #[arg(long)]
    pub m_min: Option<u32>,
    #[arg(long)]
    pub m_max: Option<u32>,
    #[arg(long)]
    pub lambda_min: Option<f64>,
    #[arg(long)]
    pub lambda_max: Option<f64>,
    #[arg(long)]
    pub grid_points: Option<usize>,
    #[arg(long)]
    pub refine_tolerance: Option<f64>,
    /// Refine only the highest grid point instead of every local maximum.
    #[arg(long)]
    pub no_multimodal_guard: bool,
}

#[derive(Debug, Args)]
pub struct ReproduceArgs {
    /// table1, table2 or fig5 ... fig18.
    pub target: String,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub scheme: SchemeArgs,
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Number of simulated periods (default 1e6).
    #[arg(long)]
    pub trials: Option<u64>,
    /// Pass threshold in standard errors (default 3).
    #[arg(long)]
    pub z: Option<f64>,
    /// Shift the analytic P_1 by 10 standard errors so the comparison must fail.
    #[arg(long)]
    pub perturb: bool,
}

impl SchemeArgs {
    fn apply(&self, f: &mut RunConfigFile) {
        let s = &mut f.scheme;
        s.kind = self.scheme.or(s.kind);
        s.pair_law = self.pair_law.or(s.pair_law);
        s.v_b = self.v_b.or(s.v_b);
        s.v_router = self.v_router.or(s.v_router);
        s.v_cavity = self.v_cavity.or(s.v_cavity);
        s.v_used = self.v_used.or(s.v_used);
        s.v_bypass = self.v_bypass.or(s.v_bypass);
        s.v_medium = self.v_medium.or(s.v_medium);
        f.detector.efficiency = self.efficiency.or(f.detector.efficiency);
        f.units.n = self.n.or(f.units.n);
        f.units.m = self.m.or(f.units.m);
    }
}

impl Cli {
    /// The configuration layer formed by the flags alone.
    pub fn flag_layer(&self) -> RunConfigFile {
        let mut f = RunConfigFile {
            tolerance: self.tolerance,
            ..Default::default()
        };
        f.output.path = self.out.clone();
        f.simulation.seed = self.seed;
        if self.paper_precision {
            f.output.paper_precision = Some(true);
        }
        match &self.command {
            Command::Dist(a) => {
                a.scheme.apply(&mut f);
                f.lambda.value = a.lambda;
            }
            Command::Optimize(a) => {
                a.scheme.apply(&mut f);
                f.units.n_min = a.n_min;
                f.units.n_max = a.n_max;
                f.units.m_min = a.m_min;
                f.units.m_max = a.m_max;
                f.lambda.min = a.lambda_min;
                f.lambda.max = a.lambda_max;
                f.lambda.grid_points = a.grid_points;
                f.lambda.refine_tolerance = a.refine_tolerance;
                if a.no_multimodal_guard {
                    f.lambda.multimodal_guard = Some(false);
                }
            }
            Command::Verify(a) => {
                a.scheme.apply(&mut f);
                f.lambda.value = a.lambda;
                f.simulation.trials = a.trials;
                f.simulation.z = a.z;
                if a.perturb {
                    f.simulation.perturb = Some(true);
                }
            }
            Command::Reproduce(_) => {}
        }
        f
    }

    /// File values overlaid by the flags.
    pub fn merged_config(&self) -> CliResult<RunConfigFile> {
        let base = match &self.config {
            Some(p) => RunConfigFile::load(p)?,
            None => RunConfigFile::default(),
        };
        Ok(base.overlay(&self.flag_layer()))
    }
}

fn emit(report: &CsvReport, path: Option<&PathBuf>, paper: bool, stdout: &mut dyn Write) -> CliResult<()> {
    let display = if paper { Precision::Paper } else { Precision::Full };
    match path {
        Some(p) => {
            std::fs::write(p, report.render(Precision::Full))?;
            if paper {
                stdout.write_all(report.render(Precision::Paper).as_bytes())?;
            }
        }
        None => stdout.write_all(report.render(display).as_bytes())?,
    }
    Ok(())
}

fn execute(cli: &Cli, stdout: &mut dyn Write) -> CliResult<i32> {
    let merged = cli.merged_config()?;

    if let Command::Reproduce(a) = &cli.command {
        let target: Target = a.target.parse()?;
        let cfg = merged.resolve(UnitMode::Single)?;
        if cli.print_config {
            let echo = RunConfigFile {
                tolerance: Some(cfg.tolerance),
                output: cfg.echo.output.clone(),
                ..Default::default()
            };
            stdout.write_all(echo.to_toml().as_bytes())?;
            return Ok(exit::SUCCESS);
        }
        let report = cmd_reproduce(target, cfg.tolerance)?;
        emit(&report, cfg.output.as_ref(), cfg.paper_precision, stdout)?;
        return Ok(exit::SUCCESS);
    }

    let mode = match cli.command {
        Command::Optimize(_) => UnitMode::Scan,
        _ => UnitMode::Single,
    };
    let cfg = merged.resolve(mode)?;
    if cli.print_config {
        stdout.write_all(cfg.echo.to_toml().as_bytes())?;
        return Ok(exit::SUCCESS);
    }
    match &cli.command {
        Command::Dist(_) => emit(&cmd_dist(&cfg)?, cfg.output.as_ref(), cfg.paper_precision, stdout)?,
        Command::Optimize(_) => emit(
            &cmd_optimize(&cfg)?,
            cfg.output.as_ref(),
            cfg.paper_precision,
            stdout,
        )?,
        Command::Verify(_) => {
            let outcome = cmd_verify(&cfg)?;
            emit(&outcome.report, cfg.output.as_ref(), cfg.paper_precision, stdout)?;
            if !outcome.pass {
                let worst = outcome.report.metadata_value("worst_bin").unwrap_or("?");
                eprintln!("verification failed: worst bin {worst}");
                return Ok(exit::VERIFICATION_FAILED);
            }
        }
        Command::Reproduce(_) => unreachable!(),
    }
    Ok(exit::SUCCESS)
}

/// Runs a parsed command line, writing results to `stdout` and diagnostics to
/// standard error. Returns the process exit code.
pub fn run(cli: &Cli, stdout: &mut dyn Write) -> i32 {
    match execute(cli, stdout) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
