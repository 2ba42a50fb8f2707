//! Subcommand dispatch. Exit codes: 0 success, 1 config error, 2 runtime
//! failure.

use std::ffi::OsString;
use std::fs;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use cegt_core::batch::run_batch;
use cegt_core::engine::run;
use cegt_core::model::Scenario;
use cegt_core::strategy::StrategyKind;
use cegt_core::BatchSummary64;

use crate::config::{emit_effective, parse_config, ParsedConfig, TraceFormat};
use crate::export::export_trace;
use crate::logging;
use crate::outputs::{comparison_csv, comparison_table, write_batch_files, write_text};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            CliError::Runtime(_) => 2,
        }
    }
}

fn config_err(e: impl std::fmt::Display) -> CliError {
    CliError::Config(e.to_string())
}

fn runtime_err(e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(e.to_string())
}

#[derive(Debug, Parser)]
#[command(
    name = "cegt",
    version,
    about = "Deterministic multi-agent highway simulation experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a single seeded simulation and write its trace file.
    Run(CommonArgs),
    /// Run a seeded batch for one strategy and write summary files.
    Batch(CommonArgs),
    /// Run seeded batches for several strategies and write a comparison.
    Compare(CommonArgs),
    /// Parse and validate a config, printing the effective values.
    ValidateConfig(CommonArgs),
}

#[derive(Debug, Args, Clone)]
struct CommonArgs {
    /// Config file path.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Scenario id: case1 or case2.
    #[arg(long)]
    scenario: Option<Scenario>,
    /// Strategy name: cegt, egt, nash, or stackelberg.
    #[arg(long)]
    strategy: Option<StrategyKind>,
    /// Number of runs in a batch.
    #[arg(long)]
    runs: Option<usize>,
    /// Seed (single run) or base seed (batches).
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Trace format: csv or jsonl.
    #[arg(long)]
    format: Option<TraceFormat>,
    /// Override the collision penalty.
    #[arg(long, allow_hyphen_values = true)]
    penalty: Option<f64>,
    /// Run batch members sequentially instead of across worker threads.
    #[arg(long)]
    serial: bool,
}

fn load_effective(args: &CommonArgs) -> Result<ParsedConfig, CliError> {
    let mut parsed = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| config_err(format!("{}: {e}", path.display())))?;
            parse_config(&text).map_err(config_err)?
        }
        None => ParsedConfig::default(),
    };
    if let Some(scenario) = args.scenario {
        parsed.experiment.scenario = scenario;
    }
    if let Some(strategy) = args.strategy {
        parsed.experiment.strategies = vec![strategy];
    }
    if let Some(runs) = args.runs {
        parsed.experiment.n_runs = runs;
    }
    if let Some(seed) = args.seed {
        parsed.sim.seed = seed;
        parsed.experiment.base_seed = seed;
    }
    if let Some(out) = &args.out {
        parsed.experiment.out_dir = out.clone();
    }
    if let Some(format) = args.format {
        parsed.experiment.format = format;
    }
    if let Some(penalty) = args.penalty {
        parsed.sim.collision_penalty = penalty;
    }
    parsed.sim.validate().map_err(config_err)?;
    parsed.experiment.validate().map_err(config_err)?;
    Ok(parsed)
}

fn echo_config(parsed: &ParsedConfig) {
    print!("{}", emit_effective(parsed));
    println!("# config_hash = {:016x}", parsed.sim.stable_hash());
}

fn trace_file_name(parsed: &ParsedConfig, strategy: StrategyKind, seed: u64) -> PathBuf {
    parsed.experiment.out_dir.join(format!(
        "trace_{}_{}_seed{}.{}",
        parsed.experiment.scenario,
        strategy,
        seed,
        parsed.experiment.format.extension()
    ))
}

fn cmd_run(args: &CommonArgs) -> Result<(), CliError> {
    let parsed = load_effective(args)?;
    let strategy = parsed.experiment.strategies[0];
    let seed = parsed.sim.seed;
    let trace = run(&parsed.sim, parsed.experiment.scenario, strategy, seed)
        .map_err(config_err)?;
    let path = trace_file_name(&parsed, strategy, seed);
    export_trace(&trace, &path, parsed.experiment.format).map_err(runtime_err)?;
    logging::info(&format!("run complete: {} collisions", trace.total_collisions()));
    println!(
        "wrote {} (config {:016x})",
        path.display(),
        parsed.sim.stable_hash()
    );
    Ok(())
}

/// Run the configured batch for one strategy.
pub fn batch_summary(
    parsed: &ParsedConfig,
    strategy: StrategyKind,
    parallel: bool,
) -> Result<BatchSummary64, CliError> {
    run_batch(
        &parsed.sim,
        parsed.experiment.scenario,
        strategy,
        parsed.experiment.n_runs,
        parsed.experiment.base_seed,
        parallel,
    )
    .map_err(runtime_err)
}

fn cmd_batch(args: &CommonArgs) -> Result<(), CliError> {
    let parsed = load_effective(args)?;
    echo_config(&parsed);
    let strategy = parsed.experiment.strategies[0];
    let summary = batch_summary(&parsed, strategy, !args.serial)?;
    let (s_path, r_path) = write_batch_files(&parsed.experiment.out_dir, &summary)
        .map_err(runtime_err)?;
    write_text(
        &parsed.experiment.out_dir.join("effective_config.txt"),
        &emit_effective(&parsed),
    )
    .map_err(runtime_err)?;
    println!(
        "{} runs of {}: mean collisions {}, wrote {} and {}",
        summary.n_runs,
        strategy,
        summary.collisions.mean,
        s_path.display(),
        r_path.display()
    );
    Ok(())
}

/// Run every configured strategy and collect the summaries (in config order).
pub fn compare_summaries(parsed: &ParsedConfig, parallel: bool) -> Result<Vec<BatchSummary64>, CliError> {
    parsed
        .experiment
        .strategies
        .iter()
        .map(|&s| batch_summary(parsed, s, parallel))
        .collect()
}

fn cmd_compare(args: &CommonArgs) -> Result<(), CliError> {
    let parsed = load_effective(args)?;
    echo_config(&parsed);
    let summaries = compare_summaries(&parsed, !args.serial)?;
    for summary in &summaries {
        write_batch_files(&parsed.experiment.out_dir, summary).map_err(runtime_err)?;
        logging::debug(&format!(
            "{}: mean collisions {}",
            summary.strategy, summary.collisions.mean
        ));
    }
    write_text(
        &parsed.experiment.out_dir.join("comparison.csv"),
        &comparison_csv(&summaries),
    )
    .map_err(runtime_err)?;
    write_text(
        &parsed.experiment.out_dir.join("effective_config.txt"),
        &emit_effective(&parsed),
    )
    .map_err(runtime_err)?;
    print!("{}", comparison_table(&summaries));
    println!(
        "wrote {}",
        parsed.experiment.out_dir.join("comparison.csv").display()
    );
    Ok(())
}

fn cmd_validate(args: &CommonArgs) -> Result<(), CliError> {
    let parsed = load_effective(args)?;
    echo_config(&parsed);
    Ok(())
}

/// Entry point shared by the binary and the tests.
pub fn cli_main<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return code;
        }
    };
    let result = match &cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Batch(args) => cmd_batch(args),
        Command::Compare(args) => cmd_compare(args),
        Command::ValidateConfig(args) => cmd_validate(args),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            logging::error(&e.to_string());
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// Convenience used by tests: load a config file (or defaults) with overrides.
pub fn effective_config_for_test(
    config_text: Option<&str>,
    penalty: Option<f64>,
) -> Result<ParsedConfig, CliError> {
    let mut parsed = match config_text {
        Some(text) => parse_config(text).map_err(config_err)?,
        None => ParsedConfig::default(),
    };
    if let Some(p) = penalty {
        parsed.sim.collision_penalty = p;
    }
    parsed.sim.validate().map_err(config_err)?;
    Ok(parsed)
}

