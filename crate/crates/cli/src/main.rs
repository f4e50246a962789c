use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use layerfem::oracle::{evaluate, OracleName};
use layerfem::{parse_config, run, write_outputs, CliError};

/// Fitted finite elements for elliptic problems with curve-supported sources.
#[derive(Parser)]
#[command(version, about, long_about = None)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a scenario and run its verifications.
    Solve {
        /// Scenario config (JSON)
        #[arg(short, long)]
        config: PathBuf,
        /// Output directory; overrides the config's `output`
        #[arg(short, long)]
        out: Option<PathBuf>,
        /// Also write the finest mesh to mesh.txt
        #[arg(long)]
        dump_mesh: bool,
    },
    /// Evaluate a closed-form reference solution at a point.
    Oracle {
        name: OracleName,
        #[arg(allow_negative_numbers = true)]
        args: Vec<f64>,
    },
}

fn fail(e: &CliError) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(e.exit_code() as u8)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Solve {
            config,
            out,
            dump_mesh,
        } => {
            let cfg = match parse_config(&config) {
                Ok(c) => c,
                Err(e) => return fail(&e),
            };
            let dir = out
                .or_else(|| cfg.output.clone())
                .unwrap_or_else(|| PathBuf::from("out"));
            let report = run(&cfg);
            if let Err(e) = write_outputs(&report, &dir, dump_mesh) {
                return fail(&e);
            }
            for v in &cfg.verifications {
                let passed =
                    report.json["verifications"][v.name()]["passed"].as_bool() == Some(true);
                println!("{:<14} {}", v.name(), if passed { "PASS" } else { "FAIL" });
            }
            if let Some(err) = report.json["provenance"]["error"].as_str() {
                eprintln!("error: {err}");
            }
            if report.passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Command::Oracle { name, args } => match evaluate(name, &args) {
            Ok(v) => {
                println!("{v}");
                ExitCode::SUCCESS
            }
            Err(e) => fail(&e),
        },
    }
}
