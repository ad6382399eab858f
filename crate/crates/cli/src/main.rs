use clap::Parser;
use quake_cli::{parse_config, run, Command, RunConfig};
use std::path::PathBuf;
use std::process::ExitCode;

/// Deform surface-group representations along weighted multicurves.
#[derive(Parser, Debug)]
#[command(name = "quake", version)]
struct Cli {
    #[arg(value_enum)]
    command: Command,
    /// TOML run configuration; built-in defaults when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the earthquake convergence tolerance.
    #[arg(long)]
    tol: Option<f64>,
}

fn load(cli: &Cli) -> Result<RunConfig, String> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
            parse_config(&text).map_err(|e| e.to_string())?
        }
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &cli.out {
        cfg.output.dir = out.to_string_lossy().into_owned();
    }
    if let Some(tol) = cli.tol {
        cfg.tolerances.convergence = tol;
    }
    cfg.validate().map_err(|e| e.to_string())?;
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match load(&cli) {
        Ok(cfg) => cfg,
        Err(msg) => {
            eprintln!("quake: {msg}");
            return ExitCode::from(2);
        }
    };
    let outcome = run(cli.command, &cfg);
    let dir = PathBuf::from(&cfg.output.dir);
    if let Err(e) = outcome.write(&dir) {
        eprintln!("quake: cannot write to {}: {e}", dir.display());
        return ExitCode::from(1);
    }
    print!("{}", outcome.report.to_text());
    ExitCode::from(outcome.exit_code() as u8)
}
