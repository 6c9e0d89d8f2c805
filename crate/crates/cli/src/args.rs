use std::net::SocketAddr;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use concord::clustering::{DistanceMetric, SeedMode};
use concord::experiments::ReportFormat;

#[derive(Debug, Parser)]
#[command(name = "concord", version, about = "Semi-supervised document clustering with pairwise constraints")]
pub struct Cli {
    /// Encoding of reports written to stdout and summary files
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Tsv,
}

impl From<Format> for ReportFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Json => ReportFormat::Json,
            Format::Tsv => ReportFormat::Tsv,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Metric {
    Cosine,
    #[value(name = "squared_euclidean")]
    SquaredEuclidean,
}

impl From<Metric> for DistanceMetric {
    fn from(m: Metric) -> Self {
        match m {
            Metric::Cosine => DistanceMetric::Cosine,
            Metric::SquaredEuclidean => DistanceMetric::SquaredEuclidean,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Seeding {
    Representative,
    #[value(name = "seed_mean")]
    SeedMean,
}

impl From<Seeding> for SeedMode {
    fn from(s: Seeding) -> Self {
        match s {
            Seeding::Representative => SeedMode::Representative,
            Seeding::SeedMean => SeedMode::SeedMean,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MetricKind {
    Mi,
    Nmi,
    Informativeness,
    Coherence,
    Alpha,
    All,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Tokenize a corpus file and write the tf-idf matrix, vocabulary,
    /// document ids and inline labels
    Prep(PrepArgs),
    /// K-Means, optionally seeded from labeled documents
    Cluster(ClusterArgs),
    /// Pairwise-constrained K-Means
    Pck(PckArgs),
    /// Mutual information, informativeness, coherence or agreement from files
    Metrics(MetricsArgs),
    /// Run a named experiment from a config file
    Experiment(ExperimentArgs),
    /// Generate a labeled synthetic corpus
    Synth(SynthArgs),
    /// Start the steering service
    Serve(ServeArgs),
}

/// Matrix input shared by the clustering commands.
#[derive(Debug, Args)]
pub struct MatrixInput {
    /// Matrix file written by `prep`
    #[arg(long)]
    pub matrix: PathBuf,
    /// Document ids in row order [default: docs.txt beside the matrix]
    #[arg(long)]
    pub docs: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PrepArgs {
    /// Line-delimited corpus records {"id", "text", "labels"?}
    #[arg(long)]
    pub corpus: PathBuf,
    /// Output directory
    #[arg(long)]
    pub out: PathBuf,
    /// Stopword file, one word per line [default: $CONCORD_STOPWORDS, else the built-in list]
    #[arg(long)]
    pub stopwords: Option<PathBuf>,
    /// Seed for resolving multi-label annotations
    /// Random seed
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct ClusterArgs {
    #[command(flatten)]
    pub input: MatrixInput,
    /// Number of clusters [default: number of seeded clusters with --seeds-file]
    #[arg(long)]
    pub k: Option<usize>,
    /// Distance between documents and centroids
    #[arg(long, value_enum, default_value_t = Metric::Cosine)]
    pub metric: Metric,
    /// Random seed
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Seed documents, `doc_id cluster_id` per line
    #[arg(long)]
    pub seeds_file: Option<PathBuf>,
    /// Centroid initialization from the seeds
    #[arg(long, value_enum, default_value_t = Seeding::Representative)]
    pub seed_mode: Seeding,
    /// Random restarts; the lowest-potential run is kept
    #[arg(long, default_value_t = 1)]
    pub restarts: usize,
    /// Iteration cap
    #[arg(long, default_value_t = 100)]
    pub max_iters: usize,
    /// Clustering output file
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct PckArgs {
    #[command(flatten)]
    pub input: MatrixInput,
    /// Constraint file, `ML|CL doc_a doc_b` per line
    #[arg(long)]
    pub constraints: PathBuf,
    /// Number of clusters
    #[arg(long)]
    pub k: usize,
    /// Penalty per violated constraint
    #[arg(long, default_value_t = 1.0)]
    pub w: f64,
    /// Distance between documents and centroids
    #[arg(long, value_enum, default_value_t = Metric::Cosine)]
    pub metric: Metric,
    /// Random seed
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Iteration cap
    #[arg(long, default_value_t = 100)]
    pub max_iters: usize,
    /// Drop cannot-links that contradict must-link closure instead of failing
    #[arg(long, default_value_t = false)]
    pub lenient: bool,
    /// Clustering output file
    #[arg(long)]
    pub out: PathBuf,
    /// Violated-constraint report
    #[arg(long)]
    pub violations: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct MetricsArgs {
    /// Measure to compute; `all` reports every measure the inputs allow
    #[arg(long, value_enum)]
    pub kind: MetricKind,
    /// Clustering file scored by mi and nmi
    #[arg(long)]
    pub clustering: Option<PathBuf>,
    /// Label file, `annotator doc_id label` per line
    #[arg(long)]
    pub labels: Option<PathBuf>,
    /// Labeling used for mi and nmi [default: first in the label file]
    #[arg(long)]
    pub annotator: Option<String>,
    /// Labelings compared by alpha, comma separated [default: all]
    #[arg(long, value_delimiter = ',')]
    pub annotators: Vec<String>,
    /// Constraint file
    #[arg(long)]
    pub constraints: Option<PathBuf>,
    /// Reference clustering for informativeness
    #[arg(long)]
    pub reference: Option<PathBuf>,
    /// Matrix for coherence
    #[arg(long)]
    pub matrix: Option<PathBuf>,
    /// Document ids in row order [default: docs.txt beside the matrix]
    #[arg(long)]
    pub docs: Option<PathBuf>,
    /// Write the result here instead of stdout
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    /// exp1, exp2, exp3, exp4, seeding, ksweep or blind
    #[arg(long)]
    pub name: String,
    /// TOML experiment config
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory
    #[arg(long)]
    pub out: PathBuf,
    /// Overrides rng_seed from the config
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads [default: available cores]
    #[arg(long)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Corpus output file
    #[arg(long)]
    pub out: PathBuf,
    /// Documents per class, comma separated
    #[arg(long, value_delimiter = ',', default_value = "7,1,3,2,1,11")]
    pub sizes: Vec<usize>,
    /// Private vocabulary size per class
    #[arg(long, default_value_t = 20)]
    pub terms: usize,
    /// Fraction of each class vocabulary drawn from a shared pool
    #[arg(long, default_value_t = 0.0)]
    pub overlap: f64,
    /// Tokens per document
    #[arg(long, default_value_t = 30)]
    pub doc_len: usize,
    /// Classes whose documents mix in words of other classes, comma separated
    #[arg(long, value_delimiter = ',')]
    pub mixed: Vec<usize>,
    /// Random seed
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    /// Listen address; port 0 picks a free port
    #[arg(long, default_value = "127.0.0.1:8080")]
    pub addr: SocketAddr,
    /// Directory corpus references are resolved against
    #[arg(long)]
    pub corpus_dir: Option<PathBuf>,
    /// Directory for session action logs; existing logs are replayed
    #[arg(long)]
    pub log_dir: Option<PathBuf>,
}
