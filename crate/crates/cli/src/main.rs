use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use ridegame_cli::commands::{run, Command};
use ridegame_cli::{CliError, Format, ScenarioConfig};

/// Pricing games between two ride-hailing platforms.
///
/// Output goes to --out, else the config's `output`, else
/// $RIDEGAME_OUT_DIR/<command>.<ext>, else stdout. Thread count comes from
/// --threads or $RIDEGAME_THREADS.
#[derive(Debug, Parser)]
#[command(name = "ridegame", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Scenario file (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Overrides the scenario seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Print the effective scenario as TOML on stderr.
    #[arg(long, global = true)]
    echo_config: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("ridegame {}: {e}", cli.command.name());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn thread_count(cli: &Cli) -> Result<Option<usize>, CliError> {
    if let Some(n) = cli.threads {
        return Ok(Some(n));
    }
    match std::env::var("RIDEGAME_THREADS") {
        Ok(v) => v
            .parse()
            .map(Some)
            .map_err(|_| CliError::Config(format!("RIDEGAME_THREADS must be an integer, got {v:?}"))),
        Err(_) => Ok(None),
    }
}

fn execute(cli: &Cli) -> Result<(), CliError> {
    if let Some(n) = thread_count(cli)? {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(e.to_string()))?;
    }
    let mut cfg = match &cli.config {
        Some(path) => ScenarioConfig::load(path)?,
        None => ScenarioConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if cli.echo_config {
        eprint!("{}", cfg.to_toml()?);
    }
    let format = cli.format.unwrap_or(cli.command.default_format());
    let emitted = run(cli.command, &cfg, format)?;

    let target = cli.out.clone().or_else(|| cfg.output.clone()).or_else(|| {
        std::env::var_os("RIDEGAME_OUT_DIR")
            .map(|dir| PathBuf::from(dir).join(format!("{}.{}", cli.command.name(), format.extension())))
    });
    match target {
        Some(path) => {
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir).map_err(|e| CliError::Output(format!("{}: {e}", dir.display())))?;
            }
            std::fs::write(&path, &emitted.body).map_err(|e| CliError::Output(format!("{}: {e}", path.display())))?;
        }
        None => print!("{}", emitted.body),
    }
    emitted.failure.map_or(Ok(()), Err)
}
