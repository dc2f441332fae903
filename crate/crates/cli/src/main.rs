//! `ccgen`: generate synthetic color-constancy datasets and benchmark estimators.

mod commands;
mod config;

use std::ffi::OsString;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{CommandFactory, Parser, Subcommand};

use ccgen::Error;

#[derive(Debug, Parser)]
#[command(name = "ccgen", version = ccgen::GENERATOR_VERSION, about, args_override_self = true)]
pub struct Cli {
    /// Master seed for every random stream.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads; 0 picks one per core.
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,
    /// Flat `key = value` file supplying flag defaults.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// error, warn, info, debug or trace.
    #[arg(long, global = true, default_value = "info")]
    pub log_level: String,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build the illuminant set and write it as CSV.
    IllumSet(commands::IllumSetArgs),
    /// Synthesize a calibration table.
    CalibrateSynth(commands::CalibrateArgs),
    /// Generate a dataset from a calibration table.
    Generate(commands::GenerateArgs),
    /// Run illumination estimators over a dataset.
    Estimate(commands::EstimateArgs),
    /// Score estimates against ground truth.
    Evaluate(commands::EvaluateArgs),
    /// Color-reduction sweep.
    ReduceExperiment(commands::ReduceArgs),
    /// Eight-configuration Cartesian benchmark.
    Benchmark(commands::BenchmarkArgs),
}

const EXIT_USAGE: u8 = 1;
const EXIT_DATA: u8 = 2;
const EXIT_IO: u8 = 3;

fn usage_error(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}\n");
    eprintln!("{}", Cli::command().render_help());
    ExitCode::from(EXIT_USAGE)
}

fn run(argv: Vec<OsString>) -> ExitCode {
    let argv = match config::merge_config(argv) {
        Ok(a) => a,
        Err(config::ConfigError::Io(e)) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_IO);
        }
        Err(config::ConfigError::Usage(msg)) => return usage_error(msg),
    };
    let cli = match Cli::try_parse_from(&argv.args) {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            eprintln!("{e}");
            eprintln!("{}", Cli::command().render_help());
            return ExitCode::from(EXIT_USAGE);
        }
    };
    let level = match cli.log_level.parse::<log::LevelFilter>() {
        Ok(l) => l,
        Err(_) => return usage_error(format!("unknown log level {:?}", cli.log_level)),
    };
    env_logger::Builder::new()
        .filter_level(level)
        .format_timestamp(None)
        .try_init()
        .ok();
    if let Err(e) = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads)
        .build_global()
    {
        log::warn!("thread pool already initialized: {e}");
    }
    let ctx = commands::Context {
        seed: cli.seed,
        config_file: argv.file_entries,
    };
    let result = match &cli.command {
        Command::IllumSet(a) => commands::illum_set(&ctx, a),
        Command::CalibrateSynth(a) => commands::calibrate(&ctx, a),
        Command::Generate(a) => commands::generate(&ctx, a),
        Command::Estimate(a) => commands::estimate(&ctx, a),
        Command::Evaluate(a) => commands::evaluate(&ctx, a),
        Command::ReduceExperiment(a) => commands::reduce(&ctx, a),
        Command::Benchmark(a) => commands::benchmark(&ctx, a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(commands::CliError::Usage(msg)) => usage_error(msg),
        Err(commands::CliError::Core(e)) => report(&e),
    }
}

fn report(e: &Error) -> ExitCode {
    eprintln!("error: {e}");
    if e.is_io() {
        ExitCode::from(EXIT_IO)
    } else {
        ExitCode::from(EXIT_DATA)
    }
}

fn main() -> ExitCode {
    run(std::env::args_os().collect())
}
