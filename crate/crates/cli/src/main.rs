use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use fiberwise_cli::{exit_code, run, suite, RunOptions};

#[derive(Parser)]
#[command(
    name = "fiberwise",
    version,
    about = "Run fiberwise scenarios and write reports"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario config.
    Run {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        tolerance: Option<f64>,
    },
    /// Run every `*.json` config in a directory.
    Suite {
        dir: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Run {
            config,
            out,
            seed,
            tolerance,
        } => {
            let result = run(
                &config,
                &RunOptions {
                    out,
                    seed,
                    tolerance,
                },
            );
            match &result {
                Ok(r) => {
                    println!("{}: {:?}", r.name, r.status);
                    for a in r.assertions.iter().filter(|a| !a.passed()) {
                        println!(
                            "  FAILED {} ({} of {}): {}",
                            a.name,
                            a.failed,
                            a.checked,
                            a.first_failure.as_deref().unwrap_or("")
                        );
                    }
                }
                Err(e) => eprintln!("error: {e}"),
            }
            exit_code(&result)
        }
        Command::Suite { dir, out } => {
            let out = out.unwrap_or_else(|| dir.join("reports"));
            match suite::run_suite(&dir, &out) {
                Ok(s) => {
                    for e in &s.entries {
                        println!("{:<32} {:<6} {}", e.config, e.status, e.message);
                    }
                    s.exit_code()
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    1
                }
            }
        }
    };
    ExitCode::from(code as u8)
}
