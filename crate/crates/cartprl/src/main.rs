use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use cartprl::check::{check_signature, trace_extract, Outcome};
use cartprl::parser::parse_signature;
use cartprl::{repl, server};
use cartprl_core::dynamics::DEFAULT_FUEL;
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "cartprl", version, about = "Proof refinement for a cubical computational type theory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check every declaration of a signature file.
    Check {
        file: PathBuf,
        #[arg(long, default_value_t = DEFAULT_FUEL)]
        fuel: u64,
        /// Evaluate closed extracts and print each step.
        #[arg(long)]
        trace: bool,
        /// Print the report as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Interactive refinement loop.
    Repl { file: Option<PathBuf> },
    /// Serve the session protocol on 127.0.0.1.
    Serve {
        #[arg(long, default_value_t = 7171)]
        port: u16,
    },
}

fn main() -> anyhow::Result<ExitCode> {
    match Cli::parse().command {
        Command::Check { file, fuel, trace, json } => {
            let text = std::fs::read_to_string(&file).with_context(|| format!("reading {}", file.display()))?;
            let sig = match parse_signature(&text) {
                Ok(sig) => sig,
                Err(e) => {
                    if json {
                        let v = serde_json::json!({ "ok": false, "parse_error": { "line": e.line, "col": e.col, "expected": e.expected } });
                        println!("{v:#}");
                    } else {
                        eprintln!("{}:{e}", file.display());
                    }
                    return Ok(ExitCode::FAILURE);
                }
            };
            let report = check_signature(&sig, fuel);
            if json {
                println!("{:#}", report.to_json());
            } else {
                println!("{report}");
                if trace {
                    for e in &report.entries {
                        let Outcome::Ok(m) = &e.outcome else { continue };
                        if e.kind == "tactic" {
                            continue;
                        }
                        if let Some((value, t)) = trace_extract(m, fuel) {
                            println!("trace of {}:", e.name);
                            print!("{}", repl::show_trace(&t));
                            match value {
                                Ok(v) => println!("  value: {v}"),
                                Err(why) => println!("  failed: {why}"),
                            }
                        }
                    }
                }
            }
            Ok(if report.all_ok() { ExitCode::SUCCESS } else { ExitCode::FAILURE })
        }
        Command::Repl { file } => {
            let mut r = repl::Repl::new();
            if let Some(f) = file {
                println!("{}", r.command(&format!("load {}", f.display())));
            }
            r.run(std::io::stdin().lock(), std::io::stdout())?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Serve { port } => {
            server::serve(port)?;
            Ok(ExitCode::SUCCESS)
        }
    }
}
