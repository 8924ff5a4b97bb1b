use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use gpheat_cli::config::{parse_config, Command};
use gpheat_cli::run::execute;

#[derive(Debug, Clone, Copy, ValueEnum)]
enum CommandArg {
    Forward,
    Response,
    Invert,
    Uniqueness,
    Nonsobolev,
    Speedcheck,
    Validate,
}

impl From<CommandArg> for Command {
    fn from(c: CommandArg) -> Self {
        match c {
            CommandArg::Forward => Command::Forward,
            CommandArg::Response => Command::Response,
            CommandArg::Invert => Command::Invert,
            CommandArg::Uniqueness => Command::Uniqueness,
            CommandArg::Nonsobolev => Command::NonSobolev,
            CommandArg::Speedcheck => Command::SpeedCheck,
            CommandArg::Validate => Command::Validate,
        }
    }
}

/// Heat conduction with memory: forward runs, kernel recovery and experiments.
#[derive(Debug, Parser)]
#[command(name = "gpheat", version)]
struct Cli {
    command: CommandArg,
    /// TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `[output] dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Reserved. Every method is deterministic.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    verbose: bool,
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
    let cfg = match parse_config(&cli.config, cli.command.into(), cli.out.as_deref()) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    let code = execute(&cfg, cli.seed, cli.verbose);
    ExitCode::from(code as u8)
}
