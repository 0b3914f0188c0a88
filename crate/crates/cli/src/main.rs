use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use stp_cli::{parse_config, run, RunError, RunOptions, EXIT_ERROR, EXIT_OK};

/// Shrinking-target experiments on exact grid dynamics.
#[derive(Parser)]
#[command(name = "stp", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute a config and write its artifacts.
    Run {
        config: PathBuf,
        /// Reuse a non-empty output directory.
        #[arg(long)]
        overwrite: bool,
    },
    /// Validate a config and print its canonical form and hash.
    Check { config: PathBuf },
}

fn read(path: &PathBuf) -> Result<String, RunError> {
    std::fs::read_to_string(path).map_err(|source| RunError::Io { path: path.clone(), source })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    let result = match cli.command {
        Command::Check { config } => read(&config).and_then(|text| {
            let cfg = parse_config(&text)?;
            print!("{}", cfg.canonical());
            println!("# hash {}", cfg.hash());
            Ok(EXIT_OK)
        }),
        Command::Run { config, overwrite } => read(&config).and_then(|text| {
            let mut cfg = parse_config(&text)?;
            cfg.apply_env()?;
            let m = run(&cfg, RunOptions { overwrite })?;
            for g in m.gates.iter().filter(|g| !g.passed) {
                eprintln!("gate failed: {} ({})", g.name, g.detail);
            }
            println!(
                "{}: {} in {:.2}s, outputs in {}",
                m.verb,
                if m.passed { "all gates passed" } else { "gate failure" },
                m.wall_clock_seconds,
                cfg.out.display()
            );
            Ok(m.exit_code())
        }),
    };
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
