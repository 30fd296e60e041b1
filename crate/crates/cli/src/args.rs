use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use soundprofile_core::som::DEFAULT_SEED;
use soundprofile_core::FeatureKind;

#[derive(Debug, Parser)]
#[command(
    name = "soundprofile",
    version,
    about = "Place songs on self-organizing maps of stereo-image and timbre features, and test whether producers occupy their own regions"
)]
pub struct Cli {
    /// Seed for map initialization, sample order and dot jitter.
    #[arg(long, global = true, default_value_t = DEFAULT_SEED)]
    pub seed: u64,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compute one feature vector per manifest song.
    Extract(ExtractArgs),
    /// Train a map on the producer-train rows of a feature table.
    Train(TrainArgs),
    /// Find each song's best matching unit on a trained map.
    Project(ProjectArgs),
    /// Goodness-of-fit statistics of projected songs against regions.
    Stats(StatsArgs),
    /// Draw a map with regions and songs as SVG and HTML.
    Render(RenderArgs),
    /// Run extract, train, project, stats and render for both feature kinds.
    Pipeline(PipelineArgs),
    /// Write a synthetic WAV corpus with a manifest.
    Synth(SynthArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    Gonio,
    Mfcc,
}

impl From<KindArg> for FeatureKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Gonio => FeatureKind::Gonio,
            KindArg::Mfcc => FeatureKind::Mfcc,
        }
    }
}

/// Map size as `ROWSxCOLS`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Grid {
    pub rows: usize,
    pub cols: usize,
}

impl std::str::FromStr for Grid {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (r, c) = s
            .split_once(['x', 'X'])
            .ok_or_else(|| format!("expected ROWSxCOLS, got `{s}`"))?;
        let parse = |v: &str| {
            v.trim()
                .parse::<usize>()
                .ok()
                .filter(|&n| n > 0)
                .ok_or_else(|| format!("grid dimensions must be positive integers, got `{s}`"))
        };
        Ok(Grid {
            rows: parse(r)?,
            cols: parse(c)?,
        })
    }
}

impl std::fmt::Display for Grid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}x{}", self.rows, self.cols)
    }
}

#[derive(Debug, Clone, Args)]
pub struct OutArg {
    /// Output directory.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct SomArgs {
    /// Map size.
    #[arg(long, default_value = "24x16")]
    pub grid: Grid,
    /// Training epochs.
    #[arg(long, default_value_t = 200)]
    pub epochs: usize,
}

#[derive(Debug, Clone, Args)]
pub struct ExtractArgs {
    /// Song manifest CSV.
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long, value_enum)]
    pub feature: KindArg,
    /// Leave out songs that fail to decode instead of failing the run.
    #[arg(long)]
    pub skip_bad: bool,
    #[command(flatten)]
    pub out: OutArg,
}

#[derive(Debug, Clone, Args)]
pub struct TrainArgs {
    #[arg(long, value_enum)]
    pub feature: KindArg,
    /// Feature table; defaults to `features_<kind>.csv` in the output directory.
    #[arg(long)]
    pub features: Option<PathBuf>,
    #[command(flatten)]
    pub som: SomArgs,
    #[command(flatten)]
    pub out: OutArg,
}

#[derive(Debug, Clone, Args)]
pub struct ProjectArgs {
    #[arg(long, value_enum)]
    pub feature: KindArg,
    /// Trained map; defaults to `model_<kind>.json` in the output directory.
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long)]
    pub features: Option<PathBuf>,
    /// Also project the producer-train rows.
    #[arg(long)]
    pub include_training: bool,
    #[command(flatten)]
    pub out: OutArg,
}

#[derive(Debug, Clone, Args)]
pub struct StatsArgs {
    #[arg(long, value_enum)]
    pub feature: KindArg,
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long)]
    pub features: Option<PathBuf>,
    /// BMU table; defaults to `bmus_<kind>.csv` in the output directory.
    #[arg(long)]
    pub bmus: Option<PathBuf>,
    /// Region file. Without it, one region per group is generated around the
    /// group's training songs and written to `regions_<kind>.txt`.
    #[arg(long)]
    pub regions: Option<PathBuf>,
    #[command(flatten)]
    pub out: OutArg,
}

#[derive(Debug, Clone, Args)]
pub struct RenderArgs {
    #[arg(long, value_enum)]
    pub feature: KindArg,
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long)]
    pub features: Option<PathBuf>,
    #[arg(long)]
    pub bmus: Option<PathBuf>,
    /// Region file to overlay.
    #[arg(long)]
    pub regions: Option<PathBuf>,
    #[command(flatten)]
    pub out: OutArg,
}

#[derive(Debug, Clone, Args)]
pub struct PipelineArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Restrict the run to one feature kind.
    #[arg(long, value_enum)]
    pub feature: Option<KindArg>,
    /// Directory holding `regions_gonio.txt` and `regions_mfcc.txt`. Without
    /// it regions are generated from the training songs.
    #[arg(long)]
    pub regions: Option<PathBuf>,
    #[arg(long)]
    pub skip_bad: bool,
    #[command(flatten)]
    pub som: SomArgs,
    #[command(flatten)]
    pub out: OutArg,
}

#[derive(Debug, Clone, Args)]
pub struct SynthArgs {
    /// Number of virtual producers (1 to 6).
    #[arg(long, default_value_t = 3)]
    pub producers: usize,
    /// Training songs per producer.
    #[arg(long, default_value_t = 20)]
    pub train: usize,
    /// Held-out collaboration songs per producer.
    #[arg(long, default_value_t = 5)]
    pub heldout: usize,
    /// Song length in seconds.
    #[arg(long, default_value_t = 8.0)]
    pub seconds: f64,
    #[arg(long, default_value_t = 44100)]
    pub rate: u32,
    #[command(flatten)]
    pub out: OutArg,
}
