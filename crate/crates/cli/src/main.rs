mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "toxspans", version, about = "Toxic span detection toolkit")]
pub struct Cli {
    /// TOML settings file; command-line flags override it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Run seed. Falls back to the config file, then TOXSPANS_SEED.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Read at most this many rows from every input.
    #[arg(long, global = true)]
    pub limit: Option<usize>,
    /// More log output (repeatable).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

/// Word lists replacing the bundled ones.
#[derive(Args, Debug, Clone, Default)]
pub struct ResourceArgs {
    #[arg(long)]
    pub hate_words: Option<PathBuf>,
    #[arg(long)]
    pub sentiment: Option<PathBuf>,
    #[arg(long)]
    pub stopwords: Option<PathBuf>,
}

/// Rule-selection settings shared by the attention commands.
#[derive(Args, Debug, Clone, Default)]
pub struct RuleArgs {
    #[arg(long, value_enum)]
    pub rule: Option<RuleArg>,
    /// Sentence probability a post must exceed to receive a span.
    #[arg(long)]
    pub gate: Option<f64>,
    /// Gate on gold span presence instead of the sentence probability.
    #[arg(long)]
    pub gate_oracle: bool,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum RuleArg {
    R1,
    R2,
    R3,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum BaselineArg {
    Random,
    Hate,
    Sentiment,
    Combined,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModeArg {
    Vote,
    Intersect,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum PadArg {
    Pad,
    Mask,
}

#[derive(Args, Debug, Clone, Default)]
pub struct CrfArgs {
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub l2: Option<f64>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    /// Global gradient-norm ceiling; 0 disables clipping.
    #[arg(long)]
    pub clip: Option<f64>,
    #[arg(long)]
    pub hidden_layers: Option<usize>,
    #[arg(long)]
    pub hidden_width: Option<usize>,
    #[arg(long)]
    pub hash_bits: Option<u32>,
    #[arg(long)]
    pub window: Option<usize>,
    #[arg(long, value_enum)]
    pub pad: Option<PadArg>,
    /// Start from the short schedule meant for imported embeddings.
    #[arg(long)]
    pub embedding_preset: bool,
    /// Exported attention file, joined to the posts by id.
    #[arg(long)]
    pub export: Option<PathBuf>,
    /// Feed the export's word embeddings to the emission layer.
    #[arg(long)]
    pub emb: bool,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Print the tokens of a text with their character offsets.
    Tokenize {
        /// Text to tokenize; reads stdin when absent.
        text: Option<String>,
        /// Also show the normalized text.
        #[arg(long)]
        normalize: bool,
    },
    /// Score a prediction file against a gold CSV.
    Eval {
        #[arg(long)]
        gold: PathBuf,
        #[arg(long)]
        pred: PathBuf,
    },
    /// Run a lexicon or random baseline.
    TagBaseline {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum)]
        method: BaselineArg,
        /// Toxic probability per token for the random baseline.
        #[arg(long)]
        p_toxic: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        resources: ResourceArgs,
    },
    /// Select spans from exported attention with fixed settings.
    SelectAttn {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        export: PathBuf,
        #[arg(long)]
        percentile: Option<f64>,
        #[arg(long)]
        threshold: Option<f64>,
        #[command(flatten)]
        rule: RuleArgs,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        resources: ResourceArgs,
    },
    /// Search percentile and threshold on a development set.
    GridsearchAttn {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        export: PathBuf,
        /// Comma-separated threshold grid.
        #[arg(long, value_delimiter = ',')]
        thresholds: Option<Vec<f64>>,
        /// Comma-separated percentile grid.
        #[arg(long, value_delimiter = ',')]
        percentiles: Option<Vec<f64>>,
        #[command(flatten)]
        rule: RuleArgs,
        /// Write every cell as JSON here.
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        resources: ResourceArgs,
    },
    /// Fit a decision tree on word-level attention features.
    TrainTree {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        export: PathBuf,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        max_depth: Option<usize>,
        #[arg(long)]
        min_leaf: Option<usize>,
        #[command(flatten)]
        resources: ResourceArgs,
    },
    /// Tag exported posts with a trained decision tree.
    PredictTree {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        export: PathBuf,
        #[arg(long)]
        gate: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        resources: ResourceArgs,
    },
    /// Train a CRF tagger.
    TrainCrf {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        model: PathBuf,
        #[command(flatten)]
        crf: CrfArgs,
        #[command(flatten)]
        resources: ResourceArgs,
    },
    /// Tag posts with a trained CRF.
    PredictCrf {
        #[arg(long)]
        model: PathBuf,
        /// CSV with a text column; gold spans are ignored.
        #[arg(long)]
        input: PathBuf,
        /// Export with embeddings, for models trained on them.
        #[arg(long)]
        export: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        resources: ResourceArgs,
    },
    /// k-fold cross-validation of the CRF, optionally alongside other methods.
    CrossvalCrf {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        folds: Option<usize>,
        /// JSON report path; a table is written next to it.
        #[arg(long)]
        report: PathBuf,
        /// Extra methods: baseline-random, baseline-hate, baseline-sentiment,
        /// baseline-combined, attn-r1, attn-r2, attn-r3, attn-tree.
        #[arg(long, value_delimiter = ',')]
        also: Vec<String>,
        /// Skip the CRF and evaluate only the extra methods.
        #[arg(long)]
        no_crf: bool,
        #[command(flatten)]
        crf: CrfArgs,
        #[command(flatten)]
        resources: ResourceArgs,
    },
    /// Combine prediction files by voting or intersection.
    Ensemble {
        #[arg(long, value_enum)]
        mode: ModeArg,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Prediction files, at least two.
        #[arg(required = true, num_args = 2..)]
        inputs: Vec<PathBuf>,
    },
    /// Print a saved cross-validation report as a table.
    Report {
        path: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
