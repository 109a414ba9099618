use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use duojaw_cli::batch::{sha256_hex, write_outputs, BatchOptions, RunReport};
use duojaw_cli::catalog_listing;
use duojaw_cli::scenario::Scenario;
use duojaw_core::parallel::Execution;
use duojaw_core::world::{Catalog, ClearanceSpec};

#[derive(Parser)]
#[command(name = "duojaw", version, about = "Double jaw hand assembly simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every sweep point and repetition of a scenario.
    Run(RunArgs),
    /// Same as run, but the scenario must define sweep axes.
    Sweep(RunArgs),
    /// Parse and check a scenario without running it.
    Validate { scenario: PathBuf },
    /// Print the built-in part table.
    Catalog {
        #[arg(long)]
        json: bool,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Switch {
    On,
    Off,
}

#[derive(Args)]
struct RunArgs {
    scenario: PathBuf,
    /// Base seed; run i uses seed + i.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long, value_enum, default_value = "on")]
    trace: Switch,
    /// Run on the calling thread only.
    #[arg(long)]
    sequential: bool,
}

fn load(path: &Path) -> Result<(Scenario, String)> {
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    let text = String::from_utf8(bytes).with_context(|| format!("{} is not UTF-8", path.display()))?;
    let scenario = Scenario::parse(&text, &path.display().to_string())?;
    Ok((scenario, sha256_hex(text.as_bytes())))
}

fn run(args: &RunArgs, need_sweep: bool) -> Result<RunReport> {
    let (scenario, hash) = load(&args.scenario)?;
    if need_sweep && scenario.sweep.is_empty() {
        bail!("{} defines no [[sweep]] axes", args.scenario.display());
    }
    let opts = BatchOptions {
        seed: args.seed,
        trace: matches!(args.trace, Switch::On),
        execution: args.sequential.then_some(Execution::Sequential),
    };
    let report = write_outputs(&args.out, &scenario, hash, &opts)?;
    let a = &report.aggregates;
    println!(
        "{} runs: {} succeeded, {} failed, {} refused, {} errors; report in {}",
        a.runs,
        a.successes,
        a.completed - a.successes,
        a.refused,
        a.errors,
        args.out.join("report.json").display()
    );
    for p in &a.points {
        if !p.settings.is_empty() {
            println!(
                "  {}: {}/{}",
                duojaw_cli::scenario::describe(&p.settings),
                p.successes,
                p.runs
            );
        }
    }
    Ok(report)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(args) => run(args, false).map(|r| r.all_completed()),
        Command::Sweep(args) => run(args, true).map(|r| r.all_completed()),
        Command::Validate { scenario } => load(scenario).map(|(s, _)| {
            println!("{}: ok, {} runs", scenario.display(), s.run_count());
            true
        }),
        Command::Catalog { json } => {
            let catalog = Catalog::builtin(&ClearanceSpec::default());
            if *json {
                serde_json::to_string_pretty(&catalog)
                    .map(|t| println!("{t}"))
                    .map(|_| true)
                    .map_err(Into::into)
            } else {
                print!("{}", catalog_listing(&catalog));
                Ok(true)
            }
        }
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("error: some runs did not complete; see report.json");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
