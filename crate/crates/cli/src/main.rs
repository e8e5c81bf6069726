mod commands;
mod config;
mod error;
mod store;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::commands::Context;
use crate::config::{Format, RunConfig};
use crate::error::CliError;
use crate::store::{Artifact, Store};

/// Eigenvalues and eigenvalue bounds of non-local Schrödinger operators.
#[derive(Parser, Debug)]
#[command(name = "fracspec", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Lowest eigenvalues of the discretized operator.
    Spectrum(Common),
    /// Closed-form bound curves.
    Bounds(Common),
    /// Generalized Ritz upper values on the power-law trial basis.
    Ritz(Common),
    /// Least-squares growth exponent of the computed spectrum.
    Fit(Common),
    /// Fit, bound ordering and Ritz domination in one summary.
    Report {
        #[command(flatten)]
        common: Common,
        /// Exit with status 3 if any ordering, domination or slope check fails.
        #[arg(long)]
        check: bool,
    },
}

#[derive(Args, Debug)]
struct Common {
    /// TOML run config, or a manifest.json from an earlier run.
    #[arg(long)]
    config: PathBuf,
    /// Output root; overrides `output.directory`.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Overrides `solver.seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for the numerical kernels.
    #[arg(long)]
    threads: Option<usize>,
    /// Recompute even when a cached result exists.
    #[arg(long)]
    force: bool,
}

impl Common {
    fn context(&self) -> Result<Context, CliError> {
        let mut config = RunConfig::load(&self.config)?;
        if let Some(seed) = self.seed {
            config.solver.seed = seed;
        }
        if let Some(threads) = self.threads {
            if threads == 0 {
                return Err(CliError::ConfigInvalid("--threads must be positive".into()));
            }
            // fails only if a pool already exists, which cannot happen here
            let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
        }
        let format = self.format.unwrap_or(config.output.format);
        let root = self.out.clone().unwrap_or_else(|| PathBuf::from(&config.output.directory));
        Ok(Context { config, store: Store::new(root, self.force), format })
    }
}

fn announce(command: &str, artifact: &Artifact, detail: String) {
    let state = if artifact.cached { "cached" } else { "computed" };
    println!("{command}: {detail} -> {} ({state})", artifact.dir.display());
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Spectrum(common) => {
            let ctx = common.context()?;
            let s = commands::spectrum(&ctx)?;
            announce("spectrum", &s.artifact, format!("{} eigenvalues", s.spectrum.len()));
        }
        Command::Fit(common) => {
            let ctx = common.context()?;
            let s = commands::spectrum(&ctx)?;
            let f = commands::fit(&ctx, &s)?;
            let (a, b) = f.fit.window;
            announce("fit", &f.artifact, format!("slope {:.4} ± {:.4} on [{a}, {b}]", f.fit.slope, f.fit.std_error));
        }
        Command::Bounds(common) => {
            let ctx = common.context()?;
            let b = if commands::needs_calibration(&ctx.config) {
                let s = commands::spectrum(&ctx)?;
                let f = commands::fit(&ctx, &s)?;
                commands::bounds(&ctx, Some((&s, &f)))?
            } else {
                commands::bounds(&ctx, None)?
            };
            announce("bounds", &b.artifact, format!("{} curves", b.curves.len()));
        }
        Command::Ritz(common) => {
            let ctx = common.context()?;
            let r = commands::ritz(&ctx)?;
            let detail = match r.slope {
                Some(s) => format!("{} basis sizes, scaling slope {s:.4}", r.runs.len()),
                None => format!("{} basis size", r.runs.len()),
            };
            announce("ritz", &r.artifact, detail);
        }
        Command::Report { common, check } => {
            let ctx = common.context()?;
            let (artifact, failures) = commands::report(&ctx)?;
            announce("report", &artifact, "written".into());
            print!("{}", artifact.read("report.txt")?);
            if check && !failures.is_empty() {
                return Err(CliError::CheckFailed(failures.join("; ")));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
