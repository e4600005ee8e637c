use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;

/// Weakly-supervised fine-grained semantic indexing: build retrospective
/// benchmarks, label, combine, train and evaluate.
#[derive(Debug, Parser)]
#[command(name = "granum", version)]
pub struct Cli {
    /// Worker threads (default: all cores). Outputs do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Run configuration (JSON). Flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Log progress to stderr (RUST_LOG takes precedence).
    #[arg(short, long, global = true)]
    verbose: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
pub struct DataArgs {
    /// Thesaurus JSON; relative paths resolve against GRANUM_DATA_DIR.
    #[arg(long)]
    thesaurus: Option<PathBuf>,
    /// Corpus JSONL file or ingested store directory.
    #[arg(long)]
    corpus: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Side {
    Dev,
    Test,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum VoteFormat {
    Tsv,
    Jsonl,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum AlternativeArg {
    TwoSided,
    Less,
    Greater,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Validate a corpus JSONL file and write an indexed store.
    Ingest {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        store: PathBuf,
    },
    /// Write a synthetic thesaurus, corpus and run configuration.
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long, default_value_t = 2006)]
        year: i32,
        #[arg(long, default_value_t = 8)]
        use_cases: usize,
        #[arg(long, default_value_t = 150)]
        docs_per_year: usize,
        /// Leave out the candidates that fail selection.
        #[arg(long)]
        no_distractors: bool,
    },
    /// Select the evaluation use cases of a year.
    SelectUsecases {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        year: Option<i32>,
        #[arg(long)]
        test_positive_min: Option<u64>,
        #[arg(long)]
        dev_min: Option<u64>,
        #[arg(long)]
        dev_max: Option<u64>,
        #[arg(long)]
        dev_positive_min: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Apply labeling functions to the documents of one side of the year.
    Label {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        use_cases: PathBuf,
        #[arg(long, value_enum)]
        side: Side,
        /// Comma-separated labeling functions (default: all nine).
        #[arg(long)]
        lfs: Option<String>,
        #[arg(long, value_enum, default_value = "tsv")]
        format: VoteFormat,
        #[arg(long)]
        no_header: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Combine votes into enhanced labels.
    Combine {
        /// Votes TSV, or JSONL when the name ends in `.jsonl`.
        #[arg(long)]
        votes: PathBuf,
        #[arg(long)]
        method: Option<String>,
        #[arg(long)]
        lfs: Option<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score every labeling-function subset under each ensemble method.
    SearchCombos {
        #[arg(long)]
        votes: PathBuf,
        /// Ground-truth dataset JSONL.
        #[arg(long)]
        truth: PathBuf,
        #[arg(long)]
        lfs: Option<String>,
        #[arg(long, default_value = "MV,ALO,LM")]
        methods: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Build the weak development or the ground-truth test dataset.
    BuildDataset {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        use_cases: PathBuf,
        #[arg(long, value_enum)]
        split: Side,
        /// Enhanced labels for the development dataset.
        #[arg(long)]
        weak: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Remove superfluous negatives to approach a negative-to-positive ratio.
    Undersample {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        balance_n: Option<f64>,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train the logistic-regression baseline on a development dataset.
    TrainLr {
        #[arg(long)]
        dataset: PathBuf,
        /// Source of concept-occurrence features.
        #[arg(long)]
        corpus: Option<PathBuf>,
        /// Comma-separated seeds.
        #[arg(long)]
        seeds: Option<String>,
        #[arg(long)]
        balance_n: Option<f64>,
        #[arg(long)]
        out: PathBuf,
        /// Dataset to predict with the trained models.
        #[arg(long, requires = "predictions")]
        predict: Option<PathBuf>,
        #[arg(long, requires = "predict")]
        predictions: Option<PathBuf>,
    },
    /// Score predictions against a dataset.
    Evaluate {
        #[arg(long)]
        predictions: PathBuf,
        #[arg(long)]
        dataset: PathBuf,
        /// Row name in reports (default: predictions file stem).
        #[arg(long)]
        name: Option<String>,
        #[arg(long)]
        no_validity_filter: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Tabulate evaluation results; optionally test two of them.
    Report {
        #[arg(long, num_args = 1.., required = true)]
        results: Vec<PathBuf>,
        #[arg(long)]
        title: String,
        #[arg(long)]
        out_dir: PathBuf,
        /// Wilcoxon signed-rank test of per-label F1: NAME_A,NAME_B.
        #[arg(long)]
        compare: Option<String>,
        #[arg(long, value_enum, default_value = "two-sided")]
        alternative: AlternativeArg,
    },
    /// Run every stage for the configured years.
    Pipeline {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long = "year")]
        years: Vec<i32>,
        #[arg(long)]
        output_dir: Option<PathBuf>,
        #[arg(long)]
        lfs: Option<String>,
        #[arg(long)]
        method: Option<String>,
        #[arg(long)]
        balance_n: Option<f64>,
        #[arg(long)]
        seeds: Option<String>,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let default_level = if cli.verbose { "info" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(default_level)).init();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
