//! `resprod`: research productivity scoring, ranking comparison and DEA.
//!
//! Exit codes: 0 success, 1 computation error, 2 input error.

mod commands;
mod config;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Bad user input detected by the command line layer.
#[derive(Debug)]
pub struct InputError(pub String);

impl fmt::Display for InputError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for InputError {}

#[derive(Debug, Parser)]
#[command(name = "resprod", version, about = "Research productivity indicators, rankings and DEA")]
struct Cli {
    /// Worker threads for parallel stages (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
pub struct CorpusArgs {
    /// Directory holding researchers.csv, publications.csv, bylines.csv,
    /// taxonomy.csv and salaries.csv.
    #[arg(long)]
    pub corpus: PathBuf,
    /// TOML run configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Baseline CSV, overriding the configured source.
    #[arg(long)]
    pub baselines: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelArg {
    Crs,
    Vrs,
    Both,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Load and check a corpus without scoring it.
    Validate {
        #[command(flatten)]
        corpus: CorpusArgs,
    },
    /// Compute every indicator and write scores, rankings and a report.
    Score {
        #[command(flatten)]
        corpus: CorpusArgs,
        /// Output directory, overriding the configured one.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Turn a scores.csv into percentile rankings.
    Rank {
        #[arg(long)]
        scores: PathBuf,
        /// Only this level (e.g. `university_uda`).
        #[arg(long)]
        level: Option<String>,
        /// Only this indicator (e.g. `fss_u`).
        #[arg(long)]
        indicator: Option<String>,
        /// field_means.csv; adds standardized cross-field rankings.
        #[arg(long)]
        field_means: Option<PathBuf>,
        #[arg(long, default_value = "rankings")]
        out: PathBuf,
    },
    /// Compare two rankings (files), or two directories of rankings paired
    /// by file name.
    Compare {
        a: PathBuf,
        b: PathBuf,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Output-oriented DEA on a dmus.csv.
    Dea {
        #[arg(long)]
        dmus: PathBuf,
        #[arg(long, value_enum, default_value = "both")]
        model: ModelArg,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Write a synthetic corpus.
    Synth {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Number of researchers, overriding the parameter file.
        #[arg(long)]
        researchers: Option<usize>,
        /// TOML file of generator parameters.
        #[arg(long)]
        params: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Validate { corpus } => commands::validate(&corpus),
        Command::Score { corpus, out } => commands::score(&corpus, out.as_deref()),
        Command::Rank {
            scores,
            level,
            indicator,
            field_means,
            out,
        } => commands::rank(
            &scores,
            level.as_deref(),
            indicator.as_deref(),
            field_means.as_deref(),
            &out,
        ),
        Command::Compare { a, b, out } => commands::compare(&a, &b, &out),
        Command::Dea { dmus, model, out } => commands::dea(&dmus, model, &out),
        Command::Synth {
            seed,
            out,
            researchers,
            params,
        } => commands::synth(seed, &out, researchers, params.as_deref()),
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.downcast_ref::<InputError>().is_some() {
            return 2;
        }
        if let Some(e) = cause.downcast_ref::<resprod_core::Error>() {
            return if e.is_input_error() { 2 } else { 1 };
        }
    }
    1
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.threads {
        Some(0) => Err(InputError("--threads must be at least 1".into()).into()),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(anyhow::Error::from)
            .and_then(|pool| pool.install(|| run(cli))),
        None => run(cli),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
