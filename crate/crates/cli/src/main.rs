use ancient_mcf::commands::{cmd_construct, cmd_spectrum, cmd_sweep, cmd_verify, load_config, CliError, EXIT_OK};
use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "ancient-mcf", version, about = "Ancient mean curvature flows over unstable minimal surfaces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Common {
    /// INI configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output (or, for `verify`, run) directory; overrides `[output] dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; overrides `[run] workers`.
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Dirichlet spectrum of the Jacobi operator and eigenfunction reports.
    Spectrum(Common),
    /// Construct an ancient solution and write the run directory.
    Construct(Common),
    /// Re-run the diagnostics on a run directory.
    Verify(Common),
    /// Truncation-radius and coefficient sweeps.
    Sweep(Common),
}

fn run(cli: Cli) -> Result<(), CliError> {
    let (common, verify) = match &cli.command {
        Command::Verify(c) => (c, true),
        Command::Spectrum(c) | Command::Construct(c) | Command::Sweep(c) => (c, false),
    };
    if common.workers == Some(0) {
        return Err(CliError::Usage("--workers must be at least 1".into()));
    }
    if verify {
        let dir = match (&common.out, &common.config) {
            (Some(d), _) => d.clone(),
            (None, Some(c)) => load_config(c)?.out_dir,
            (None, None) => return Err(CliError::Usage("verify needs --out <run dir> or --config".into())),
        };
        let workers = common.workers.unwrap_or(1);
        return ancient_mcf_core::exec::with_workers(workers, || cmd_verify(&dir)).map(|_| ());
    }
    let path = common.config.clone().ok_or_else(|| CliError::Usage("--config <file> is required".into()))?;
    let cfg = load_config(&path)?;
    let out = common.out.clone().unwrap_or_else(|| cfg.out_dir.clone());
    let workers = common.workers.unwrap_or(cfg.workers);
    ancient_mcf_core::exec::with_workers(workers, || match &cli.command {
        Command::Spectrum(_) => cmd_spectrum(&cfg, &out),
        Command::Construct(_) => cmd_construct(&cfg, &out),
        Command::Sweep(_) => cmd_sweep(&cfg, &out),
        Command::Verify(_) => unreachable!(),
    })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("ANCIENT_MCF_LOG", "info")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 64 } else { EXIT_OK };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
