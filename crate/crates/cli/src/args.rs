use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(name = "wordrep", version, about = "Representational analysis of layerwise word embeddings")]
pub struct Cli {
    /// Seed for every random draw.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Output file; standard output when omitted.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Report format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Jsonl)]
    pub format: Format,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Jsonl,
    Csv,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// CKA between two embedding dumps.
    Cka(CkaArgs),
    /// Normalized cosine similarity per word-pair class.
    Pairs(PairsArgs),
    /// Silhouette scores of word groups in full, PCA and LDA spaces.
    Cluster(ClusterArgs),
    /// Greedily build phonetic word groups.
    BuildGroups(BuildArgs),
    /// Check a group file against the dataset constraints.
    ValidateGroups(ValidateArgs),
    /// Phonemic distance at a given share of the closest random word pairs.
    CalibrateThreshold(CalibrateArgs),
    /// Relate grounded-minus-ungrounded silhouette changes to LDA-space CKA.
    CompareGrounding(GroundingArgs),
    /// Render a report as an SVG figure.
    Plot(PlotArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Kernel {
    Linear,
    Rbf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Match {
    Auto,
    TokenId,
    Word,
}

#[derive(Debug, Args)]
pub struct CkaArgs {
    pub a: PathBuf,
    pub b: PathBuf,
    #[arg(long, value_enum, default_value_t = Kernel::Linear)]
    pub kernel: Kernel,
    /// RBF bandwidth as a multiple of the median pairwise distance.
    #[arg(long, default_value_t = 1.0)]
    pub sigma_scale: f64,
    /// How rows of the two dumps are paired.
    #[arg(long = "match", value_enum, default_value_t = Match::Auto)]
    pub match_mode: Match,
}

#[derive(Debug, Args)]
pub struct PairsArgs {
    /// One dump per layer of a single model.
    #[arg(required = true)]
    pub dumps: Vec<PathBuf>,
    #[arg(long)]
    pub lexicon: PathBuf,
    /// Synonym sets, one per line.
    #[arg(long)]
    pub synonyms: Option<PathBuf>,
    #[arg(long, default_value_t = 0.4)]
    pub threshold: f64,
    #[arg(long, default_value_t = 10_000)]
    pub n_per_class: usize,
    #[arg(long, default_value_t = 5)]
    pub repeats: usize,
    #[arg(long, default_value_t = 500_000)]
    pub pool_cap: usize,
    /// Keep one token per (speaker, word).
    #[arg(long)]
    pub dedup: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SubspaceArg {
    Full,
    Pca,
    Lda,
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Neighbor {
    Nearest,
    AllOthers,
}

#[derive(Debug, Args, Serialize)]
pub struct ClusterOpts {
    #[arg(long, default_value_t = 8)]
    pub k: usize,
    /// b(i) as the nearest other group's mean distance or the mean over all other groups.
    #[arg(long, value_enum, default_value_t = Neighbor::Nearest)]
    pub neighbor: Neighbor,
    /// Ridge added to the within-class scatter, as a fraction of its mean diagonal entry.
    #[arg(long, default_value_t = 1e-6)]
    pub ridge: f64,
}

#[derive(Debug, Args)]
pub struct ClusterArgs {
    #[arg(required = true)]
    pub dumps: Vec<PathBuf>,
    #[arg(long)]
    pub groups: PathBuf,
    #[arg(long, value_enum, default_value_t = SubspaceArg::All)]
    pub subspace: SubspaceArg,
    /// Leave-one-group-out scores with 95% intervals.
    #[arg(long)]
    pub loo: bool,
    /// Add abstract and concrete silhouettes to each score.
    #[arg(long)]
    pub split: bool,
    /// Attach the first two LDA coordinates of every word to LDA scores.
    #[arg(long)]
    pub scatter: bool,
    #[command(flatten)]
    pub opts: ClusterOpts,
}

#[derive(Debug, Args, Serialize)]
pub struct BuilderOpts {
    #[arg(long, default_value_t = 0.529)]
    pub phon_within_max: f64,
    #[arg(long, default_value_t = 0.529)]
    pub phon_across_min: f64,
    #[arg(long, default_value_t = 0.1)]
    pub sem_cos_max: f64,
    #[arg(long, default_value_t = 0.25)]
    pub conc_top_pct: f64,
    #[arg(long, default_value_t = 0.25)]
    pub conc_bottom_pct: f64,
    #[arg(long, default_value_t = 5)]
    pub min_group_size: usize,
    #[arg(long, default_value_t = 14)]
    pub target_groups: usize,
    #[arg(long, default_value_t = 0.15)]
    pub sem_within_top_pct: f64,
    #[arg(long, default_value_t = 0.6)]
    pub sem_phon_dist_min: f64,
    #[arg(long, default_value_t = 100_000)]
    pub reference_pairs: usize,
}

#[derive(Debug, Args)]
pub struct Resources {
    #[arg(long)]
    pub lexicon: PathBuf,
    /// Ratings table with `Word` and `Conc.M` columns.
    #[arg(long)]
    pub concreteness: PathBuf,
    /// Static word vectors in text format.
    #[arg(long)]
    pub vectors: Option<PathBuf>,
    /// Word list, one per line.
    #[arg(long)]
    pub vocab: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BuildArgs {
    #[command(flatten)]
    pub resources: Resources,
    #[command(flatten)]
    pub params: BuilderOpts,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[arg(long)]
    pub groups: PathBuf,
    #[command(flatten)]
    pub resources: Resources,
    #[command(flatten)]
    pub params: BuilderOpts,
}

#[derive(Debug, Args)]
pub struct CalibrateArgs {
    #[arg(long)]
    pub lexicon: PathBuf,
    /// Word list; every lexicon word when omitted.
    #[arg(long)]
    pub vocab: Option<PathBuf>,
    #[arg(long, default_value_t = 0.1)]
    pub top_fraction: f64,
    #[arg(long, default_value_t = 100_000)]
    pub samples: usize,
}

#[derive(Debug, Args)]
pub struct GroundingArgs {
    /// Layer dumps of the ungrounded model.
    #[arg(long, num_args = 1.., required = true)]
    pub ungrounded: Vec<PathBuf>,
    /// Layer dumps of the grounded model.
    #[arg(long, num_args = 1.., required = true)]
    pub grounded: Vec<PathBuf>,
    #[arg(long)]
    pub groups: PathBuf,
    #[command(flatten)]
    pub opts: ClusterOpts,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Figure {
    Line,
    Scatter,
}

#[derive(Debug, Args)]
pub struct PlotArgs {
    pub report: PathBuf,
    #[arg(long, value_enum, default_value_t = Figure::Line)]
    pub kind: Figure,
}
