//! `impact <subcommand> --config <path> [--out-dir <dir>] [--override key=value]...`

use clap::{Parser, ValueEnum};
use impact_core::app::run_subcommand;
use impact_core::config::parse_config;
use impact_core::error::EXIT_VALIDATION;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Subcommand {
    Modes,
    Kernel,
    Regularity,
    Simulate,
    CompareCor,
    Asymptotics,
}

impl Subcommand {
    fn name(self) -> &'static str {
        match self {
            Subcommand::Modes => "modes",
            Subcommand::Kernel => "kernel",
            Subcommand::Regularity => "regularity",
            Subcommand::Simulate => "simulate",
            Subcommand::CompareCor => "compare-cor",
            Subcommand::Asymptotics => "asymptotics",
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "impact", version, about = "Memory-kernel impact simulation of elastic structures")]
struct Cli {
    #[arg(value_enum)]
    subcommand: Subcommand,
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Directory receiving all output files.
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
    /// Dotted-path override such as `run.eps=1e-4`; repeatable.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if e.use_stderr() => {
            let _ = e.print();
            return ExitCode::from(EXIT_VALIDATION as u8);
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
    };
    let result = parse_config(&cli.config, &cli.overrides)
        .and_then(|cfg| run_subcommand(cli.subcommand.name(), &cfg, &cli.out_dir));
    match result {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
