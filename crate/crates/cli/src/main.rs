use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use fhn_cli::{parse_config, run, CliError, Mode, RunConfig, RunEnv};

/// Kernels, solvers and bound certificates for the FitzHugh-Nagumo system.
///
/// Exit codes: 0 success, 1 numerical failure, 2 configuration error,
/// 3 certification failure, 4 missing or unwritable file, 5 malformed config syntax.
#[derive(Parser, Debug)]
#[command(name = "fhn", version)]
struct Args {
    /// TOML run configuration; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// kernel, solve-linear, solve-fhn, oracle or certify.
    #[arg(long)]
    mode: Option<Mode>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// kernel_tol in kernel mode, picard_tol otherwise.
    #[arg(long, allow_hyphen_values = true)]
    tol: Option<f64>,
    /// Seed of the randomized check points.
    #[arg(long)]
    seed: Option<u64>,
    /// Print the fully defaulted configuration and exit.
    #[arg(long)]
    print_config: bool,
}

fn execute(args: Args) -> Result<(), CliError> {
    let mut cfg = match &args.config {
        Some(path) => parse_config(path)?,
        None => RunConfig::default(),
    };
    if let Some(m) = args.mode {
        cfg.mode = m;
    }
    if let Some(out) = args.out {
        cfg.out = out;
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(tol) = args.tol {
        match cfg.mode {
            Mode::Kernel => cfg.tolerances.kernel_tol = tol,
            _ => cfg.tolerances.picard_tol = tol,
        }
    }
    cfg.validate().map_err(|e| e.context("command line"))?;
    if args.print_config {
        print!("{}", cfg.to_toml());
        return Ok(());
    }
    let env = RunEnv::from_env()?;
    let outcome = run(&cfg, &env)?;
    for line in &outcome.stdout {
        println!("{line}");
    }
    for f in &outcome.files {
        eprintln!("wrote {}", f.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Args::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("fhn: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
