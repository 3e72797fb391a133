use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use padlin_cli::{load_config, run, Command, RunError};

/// Saleh amplifier / MF-MSK predistortion experiments.
///
/// Values are resolved with precedence --set > config file > built-in default.
/// Every command writes <out>/<command>.csv and <out>/<command>.json.
///
/// Exit status: 0 on success, 1 for usage or configuration errors,
/// 2 for model or runtime errors.
#[derive(Debug, Parser)]
#[command(name = "padlin", version)]
struct Cli {
    #[arg(value_enum)]
    command: Command,
    /// JSON configuration file; omit to use the defaults
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (overrides output.dir)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override a config value, e.g. --set saleh.beta_a=1.2 (repeatable)
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

fn fail(code: u8, msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("padlin: error: {msg}");
    ExitCode::from(code)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(1);
        }
    };
    let text = match &cli.config {
        Some(p) => match std::fs::read_to_string(p) {
            Ok(t) => t,
            Err(e) => return fail(1, format!("{}: {e}", p.display())),
        },
        None => String::new(),
    };
    let cfg = match load_config(&text, &cli.overrides) {
        Ok(c) => c,
        Err(e) => return fail(1, e),
    };
    let Some(out) = cli.out.clone().or_else(|| cfg.output.dir.clone()) else {
        return fail(1, "no output directory: pass --out or set output.dir");
    };
    match run(cli.command, &cfg, &out) {
        Ok(o) => {
            println!("{}", o.csv.display());
            println!("{}", o.metadata.display());
            ExitCode::SUCCESS
        }
        Err(e @ RunError::Incomplete(_)) => fail(2, format!("{e} (partial results written)")),
        Err(e) => fail(2, e),
    }
}
