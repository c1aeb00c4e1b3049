use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use harmap::scenario::{self, Scenario};
use harmap::Error;

/// Runs harmonic-map scenarios and writes CSV and JSON artifacts.
#[derive(Parser)]
#[command(name = "harmap", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute a scenario and write fields, ledgers, diagnostics and a manifest.
    Run(RunArgs),
    /// Check boundary and flux compatibility without running.
    Validate(Source),
    /// Recompute diagnostics from the fields saved by `run`.
    Diagnose(RunArgs),
    /// List the built-in scenarios.
    List,
}

#[derive(Args)]
struct Source {
    /// Scenario file in TOML.
    #[arg(long, value_name = "PATH", conflicts_with = "builtin", required_unless_present = "builtin")]
    config: Option<PathBuf>,
    /// Name of a built-in scenario.
    #[arg(long, value_name = "NAME")]
    builtin: Option<String>,
    /// Override the scenario seed.
    #[arg(long, value_name = "N")]
    seed: Option<u64>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    source: Source,
    /// Output directory; defaults to `runs/<name>`.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Worker threads; results do not depend on this.
    #[arg(long, value_name = "N")]
    threads: Option<usize>,
}

enum Failure {
    Harmap(Error),
    Incompatible(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Harmap(e)
    }
}

impl Source {
    fn load(&self) -> Result<Scenario, Error> {
        let mut s = match (&self.config, &self.builtin) {
            (Some(path), _) => Scenario::load(path)?,
            (None, Some(name)) => Scenario::builtin(name)?,
            (None, None) => unreachable!("clap requires one source"),
        };
        if let Some(seed) = self.seed {
            s.seed = seed;
        }
        Ok(s)
    }
}

impl RunArgs {
    fn prepare(&self) -> Result<(Scenario, PathBuf), Error> {
        if let Some(n) = self.threads {
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global()
                .map_err(|e| Error::InvalidInput(format!("thread pool: {e}")))?;
        }
        let s = self.source.load()?;
        let out = self.out.clone().unwrap_or_else(|| Path::new("runs").join(&s.name));
        Ok((s, out))
    }
}

fn print_json<T: serde::Serialize>(value: &T) {
    println!("{}", serde_json::to_string_pretty(value).expect("reports serialize"));
}

fn execute(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Run(args) => {
            let (s, out) = args.prepare()?;
            let outcome = scenario::run(&s, &out)?;
            print_json(&outcome.summary);
        }
        Command::Diagnose(args) => {
            let (s, out) = args.prepare()?;
            print_json(&scenario::diagnose(&s, &out)?);
        }
        Command::Validate(source) => {
            let report = scenario::validate(&source.load()?)?;
            print_json(&report);
            if !report.compatible {
                return Err(Failure::Incompatible(format!(
                    "{} edge violations, largest residual {:.3e}",
                    report.compatibility.violations.len(),
                    report.compatibility.max()
                )));
            }
        }
        Command::List => {
            for name in Scenario::builtin_names() {
                println!("{name}");
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            let (body, code) = match failure {
                Failure::Harmap(e) => {
                    let path = match &e {
                        Error::Config { path, .. } => Some(path.clone()),
                        _ => None,
                    };
                    let code = if matches!(e, Error::Config { .. }) { 2 } else { 1 };
                    (serde_json::json!({ "error": e.code(), "path": path, "message": e.to_string() }), code)
                }
                Failure::Incompatible(message) => (serde_json::json!({ "error": "incompatible", "message": message }), 3),
            };
            eprintln!("{body}");
            ExitCode::from(code)
        }
    }
}
