use std::net::SocketAddr;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "harassment", version, about = "Mine app-store reviews for user-reported harassment")]
pub struct Cli {
    /// Pipeline config (TOML). Flags override its values.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Overrides `rng_seed`.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Also write the JSON run summary here (it always goes to stdout).
    #[arg(long, global = true, value_name = "FILE")]
    pub run_summary: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Append a review dump to the corpus log, skipping duplicates.
    Import(ImportArgs),
    /// Grow a seed app list over the similar-app graph.
    Expand(ExpandArgs),
    /// Sample keyword-matching reviews for the initial labeling pass.
    SeedSample(SeedSampleArgs),
    /// Train both heads on a labeled file and pick recall thresholds.
    Train(TrainArgs),
    /// Stratified k-fold evaluation on a labeled file.
    CrossValidate(CrossValidateArgs),
    /// Open an active-learning round with the most uncertain reviews.
    AlSelect(AlSelectArgs),
    /// Retrain on the finished round's labels and open the next one.
    AlAdvance(AlAdvanceArgs),
    /// Write one decision per eligible review.
    Classify(ClassifyArgs),
    /// Emotion scores for flagged reviews and their per-head mix.
    Emotions(EmotionsArgs),
    /// Abuser gender for flagged reviews and its per-head distribution.
    Gender(GenderArgs),
    /// Per-app table of apps over a harassment threshold.
    Report(ReportArgs),
    /// Markdown evidence bundle for one flagged app.
    Bundle(BundleArgs),
    /// Run the annotation and reporting HTTP API.
    Serve(ServeArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StoreArg {
    Apple,
    Google,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DumpFormat {
    Jsonl,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TableFormatArg {
    Markdown,
    Csv,
}

#[derive(Debug, Args)]
pub struct ImportArgs {
    /// Review dump to import.
    #[arg(long = "in", value_name = "FILE")]
    pub input: PathBuf,
    /// Store the dump was scraped from.
    #[arg(long, value_enum)]
    pub store: StoreArg,
    /// Dump format; guessed from the extension when omitted.
    #[arg(long, value_enum)]
    pub format: Option<DumpFormat>,
    /// Corpus log to append to.
    #[arg(long, value_name = "FILE")]
    pub corpus: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExpandArgs {
    /// Similar-app graph fixture.
    #[arg(long, value_name = "FILE")]
    pub graph: Option<PathBuf>,
    /// Seed app ids, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    pub seeds: Vec<String>,
    #[arg(long, default_value_t = 100)]
    pub max_apps: usize,
    #[arg(long, default_value_t = 2)]
    pub max_depth: usize,
    /// App list output (JSON).
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SeedSampleArgs {
    #[arg(long, value_name = "FILE")]
    pub corpus: Option<PathBuf>,
    /// Keyword lexicon; the bundled one when omitted.
    #[arg(long, value_name = "FILE")]
    pub lexicon: Option<PathBuf>,
    /// Reviews to sample.
    #[arg(short, long, default_value_t = 3050)]
    pub n: usize,
    /// Sampled reviews (JSONL).
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Labeled reviews (JSONL).
    #[arg(long, value_name = "FILE")]
    pub labels: Option<PathBuf>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub recall_menacing: Option<f64>,
    #[arg(long)]
    pub recall_profiling: Option<f64>,
    /// Model output (JSON).
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CrossValidateArgs {
    #[arg(long, value_name = "FILE")]
    pub labels: Option<PathBuf>,
    #[arg(long)]
    pub folds: Option<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub recall_menacing: Option<f64>,
    #[arg(long)]
    pub recall_profiling: Option<f64>,
    /// Per-fold and mean metrics (JSON).
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AlSelectArgs {
    /// Initial labeled pool, used only when the state file does not exist yet.
    #[arg(long, value_name = "FILE")]
    pub labels: Option<PathBuf>,
    /// Corpus whose eligible unlabeled reviews form the pool, used only on
    /// initialization.
    #[arg(long, value_name = "FILE")]
    pub corpus: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    pub state: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    pub queue: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    pub lexicon: Option<PathBuf>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub rounds: Option<usize>,
    /// Record each task once instead of twice.
    #[arg(long)]
    pub single_annotator: bool,
    /// Copy of the selected batch (JSON).
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AlAdvanceArgs {
    #[arg(long, value_name = "FILE")]
    pub state: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    pub queue: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    pub lexicon: Option<PathBuf>,
    /// Where to write the retrained model.
    #[arg(long, value_name = "FILE")]
    pub model: Option<PathBuf>,
    /// Copy of the newly opened batch (JSON).
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ClassifyArgs {
    /// Corpus log.
    #[arg(long = "in", value_name = "FILE")]
    pub input: Option<PathBuf>,
    /// Model file; its thresholds also apply to an external scorer.
    #[arg(long, value_name = "FILE")]
    pub model: Option<PathBuf>,
    /// Score with an HTTP inference service instead of the linear model.
    #[arg(long, value_name = "URL")]
    pub endpoint: Option<String>,
    /// Decisions output (JSONL).
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EmotionsArgs {
    #[arg(long, value_name = "FILE")]
    pub corpus: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    pub decisions: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    pub emotion_lexicon: Option<PathBuf>,
    /// Score with an HTTP inference service instead of the lexicon.
    #[arg(long, value_name = "URL")]
    pub endpoint: Option<String>,
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GenderArgs {
    #[arg(long, value_name = "FILE")]
    pub corpus: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    pub decisions: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    pub gender_terms: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Report the bundled per-app fixture instead of classified reviews.
    #[arg(long, conflicts_with_all = ["corpus", "decisions", "apps"])]
    pub table_fixture: bool,
    #[arg(long, value_name = "FILE")]
    pub corpus: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    pub decisions: Option<PathBuf>,
    /// App records (output of `expand`) used for display names.
    #[arg(long, value_name = "FILE")]
    pub apps: Option<PathBuf>,
    /// Minimum harassment reviews for an app to be listed.
    #[arg(long)]
    pub threshold: Option<usize>,
    #[arg(long, value_enum)]
    pub store: Option<StoreArg>,
    #[arg(long, value_enum, default_value_t = TableFormatArg::Markdown)]
    pub format: TableFormatArg,
    /// Emotion service for the corpus summary; the lexicon when omitted.
    #[arg(long, value_name = "URL")]
    pub endpoint: Option<String>,
    /// Corpus summary output (JSON), read by `serve`.
    #[arg(long, value_name = "FILE")]
    pub summary: Option<PathBuf>,
    /// Table output.
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BundleArgs {
    #[arg(long)]
    pub app: String,
    #[arg(long, value_enum)]
    pub store: StoreArg,
    #[arg(long, value_name = "FILE")]
    pub corpus: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    pub decisions: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    pub apps: Option<PathBuf>,
    /// Sample reviews to include.
    #[arg(short, default_value_t = 5)]
    pub k: usize,
    /// Bundle output (Markdown).
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long)]
    pub bind: Option<SocketAddr>,
    #[arg(long, value_name = "FILE")]
    pub state: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    pub queue: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    pub audit: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    pub lexicon: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    pub summary: Option<PathBuf>,
}
