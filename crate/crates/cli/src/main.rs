//! `xdtc`: prepare corpora, train chains, evaluate and inspect topics.
//!
//! Exit codes: 0 on success, 1 on a runtime failure, 2 on a usage, config or
//! input error.

mod commands;
mod config;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, CommandFactory, FromArgMatches, Parser, Subcommand};
use xdtc::eval::FeatureEncoding;
use xdtc::inference::DomainSelector;
use xdtc::model::{Mode, ScanOrder};

use crate::config::{ReportFormat, Settings};

#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn usage(message: impl Into<String>) -> Self {
        Failure {
            code: 2,
            message: message.into(),
        }
    }

    pub fn runtime(message: impl Into<String>) -> Self {
        Failure {
            code: 1,
            message: message.into(),
        }
    }
}

impl From<xdtc::Error> for Failure {
    fn from(e: xdtc::Error) -> Self {
        if e.is_input_error() {
            Failure::usage(e.to_string())
        } else {
            Failure::runtime(e.to_string())
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "xdtc", version, about = "Cross-domain text classification with grouped topic models")]
struct Cli {
    /// More log output (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build a corpus file from raw documents, or merge two corpora.
    Prep(PrepArgs),
    /// Train one chain per seed; writes checkpoints, parameters and traces.
    Train(TrainArgs),
    /// Score trained runs, or compare two run sets with a paired t-test.
    Eval(EvalArgs),
    /// Print the top words of topics.
    Topics(TopicsArgs),
    /// Train and evaluate a grid of settings.
    Sweep(SweepArgs),
}

#[derive(Args, Debug)]
#[command(group = clap::ArgGroup::new("input").required(true).args(["source", "merge", "task"]))]
pub struct PrepArgs {
    /// Source-domain documents: a TSV file or a directory of label directories.
    #[arg(long, requires = "target")]
    pub source: Option<PathBuf>,
    /// Target-domain documents, same forms as --source.
    #[arg(long, requires = "source")]
    pub target: Option<PathBuf>,
    /// Merge two prepared corpora with disjoint labels.
    #[arg(long, num_args = 2, value_names = ["A", "B"])]
    pub merge: Option<Vec<PathBuf>>,
    /// A 20 Newsgroups task such as comp-vs-rec or comp-vs-rec+sci-vs-talk.
    #[arg(long, requires = "newsgroups")]
    pub task: Option<String>,
    /// Root of an extracted 20 Newsgroups tree.
    #[arg(long)]
    pub newsgroups: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    /// Drop words occurring in fewer documents than this.
    #[arg(long, default_value_t = 3)]
    pub min_df: usize,
    /// Drop header blocks of raw posts in directory input.
    #[arg(long)]
    pub strip_headers: bool,
    /// Label directories by their top-level name (`comp.graphics` -> `comp`).
    #[arg(long)]
    pub top_level_labels: bool,
    /// Keep stopwords.
    #[arg(long)]
    pub no_stopwords: bool,
}

#[derive(Args, Debug, Default)]
pub struct CommonArgs {
    /// Config file (TOML); flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<ReportFormat>,
    /// A single chain seed.
    #[arg(long, conflicts_with = "seeds")]
    pub seed: Option<u64>,
    /// Comma-separated chain seeds.
    #[arg(long, value_delimiter = ',')]
    pub seeds: Option<Vec<u64>>,
    /// Parallel chains; 0 uses every core.
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Record wall-clock seconds in reports.
    #[arg(long)]
    pub timing: bool,
}

impl CommonArgs {
    fn settings(&self) -> Settings {
        Settings {
            corpus: self.corpus.clone(),
            out: self.out.clone(),
            format: self.format,
            seeds: self.seed.map(|s| vec![s]).or_else(|| self.seeds.clone()),
            jobs: self.jobs,
            timing: self.timing.then_some(true),
            ..Default::default()
        }
    }
}

#[derive(Args, Debug, Default)]
pub struct HyperArgs {
    #[arg(long)]
    pub mode: Option<Mode>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub eta: Option<f64>,
    #[arg(long)]
    pub t_common: Option<usize>,
    #[arg(long)]
    pub t_spec_src: Option<usize>,
    #[arg(long)]
    pub t_spec_tgt: Option<usize>,
    #[arg(long)]
    pub iterations: Option<usize>,
    #[arg(long)]
    pub burn_in: Option<usize>,
    #[arg(long)]
    pub sample_lag: Option<usize>,
    #[arg(long)]
    pub scan: Option<ScanOrder>,
}

impl HyperArgs {
    fn settings(&self) -> Settings {
        Settings {
            mode: self.mode,
            alpha: self.alpha,
            beta: self.beta,
            gamma: self.gamma,
            eta: self.eta,
            t_common: self.t_common,
            t_spec_src: self.t_spec_src,
            t_spec_tgt: self.t_spec_tgt,
            iterations: self.iterations,
            burn_in: self.burn_in,
            sample_lag: self.sample_lag,
            scan: self.scan,
            ..Default::default()
        }
    }
}

#[derive(Args, Debug, Default)]
pub struct ScoringArgs {
    /// Classifier features for unsupervised and ccl runs.
    #[arg(long)]
    pub encoding: Option<FeatureEncoding>,
    /// Documents scored by perplexity.
    #[arg(long)]
    pub perplexity_over: Option<DomainSelector>,
    /// Use the last sample instead of the posterior mean.
    #[arg(long)]
    pub final_sample: bool,
    /// L2 penalty of the logistic regression.
    #[arg(long)]
    pub lambda: Option<f64>,
}

impl ScoringArgs {
    fn settings(&self) -> Settings {
        Settings {
            encoding: self.encoding,
            perplexity_over: self.perplexity_over,
            final_sample: self.final_sample.then_some(true),
            lambda: self.lambda,
            ..Default::default()
        }
    }
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub hyper: HyperArgs,
    /// Write a checkpoint every N sweeps.
    #[arg(long)]
    pub checkpoint_every: Option<usize>,
    /// Continue from checkpoints already in the output directory.
    #[arg(long)]
    pub resume: bool,
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub scoring: ScoringArgs,
    /// Directory written by `train`.
    #[arg(long, conflicts_with = "compare")]
    pub runs: Option<PathBuf>,
    /// Skip accuracy (target documents without gold labels).
    #[arg(long)]
    pub no_accuracy: bool,
    /// Two evaluated run sets; tests mean(A - B) > 0, pairing by seed or by
    /// subdirectory.
    #[arg(long, num_args = 2, value_names = ["A", "B"])]
    pub compare: Option<Vec<PathBuf>>,
    /// Metric compared by --compare.
    #[arg(long, value_enum, default_value_t = commands::Metric::Accuracy)]
    pub metric: commands::Metric,
}

#[derive(Args, Debug)]
pub struct TopicsArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    /// Parameter file written by `train`.
    #[arg(long)]
    pub params: PathBuf,
    /// Group by label name or index; ccl models have a single group 0.
    #[arg(long, default_value = "0")]
    pub group: String,
    /// common or specific; all topics of the group when omitted.
    #[arg(long = "type")]
    pub kind: Option<commands::KindArg>,
    /// Domain of a specific topic.
    #[arg(long)]
    pub domain: Option<xdtc::corpus::Domain>,
    /// One topic index; all topics of the type when omitted.
    #[arg(long)]
    pub topic: Option<usize>,
    #[arg(long, default_value_t = 10)]
    pub k: usize,
    #[arg(long, value_enum, default_value_t = commands::TopicFormat::Text)]
    pub format: commands::TopicFormat,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub hyper: HyperArgs,
    #[command(flatten)]
    pub scoring: ScoringArgs,
    /// A task as NAME=CORPUS; repeatable.
    #[arg(long = "task")]
    pub tasks: Vec<String>,
    /// Comma-separated modes; defaults to --mode.
    #[arg(long, value_delimiter = ',')]
    pub modes: Option<Vec<Mode>>,
    /// An axis as NAME=V1,V2,...; repeatable.
    #[arg(long = "axis")]
    pub axes: Vec<String>,
}

fn command_with_help() -> clap::Command {
    let keys = config::keys_help();
    let mut cmd = Cli::command().after_help(keys.clone());
    for name in ["train", "eval", "sweep"] {
        let k = keys.clone();
        cmd = cmd.mut_subcommand(name, move |c| c.after_help(k));
    }
    cmd
}

fn main() -> ExitCode {
    let matches = command_with_help().get_matches();
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(cli) => cli,
        Err(e) => e.exit(),
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    let result = match &cli.command {
        Command::Prep(a) => commands::prep(a),
        Command::Train(a) => commands::train(a),
        Command::Eval(a) => commands::eval(a),
        Command::Topics(a) => commands::topics(a),
        Command::Sweep(a) => commands::sweep(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
