use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::config::PipelineConfig;
use crate::error::{GeoError, Result};
use crate::quality::Weights;

#[derive(Debug, Parser)]
#[command(name = "elastic", version, about = "Elastic location-privacy metrics: mass, build, sample, evaluate")]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

/// Pipeline settings; each overrides the matching config-file key.
#[derive(Debug, Args, Default)]
pub struct Common {
    /// `key = value` config file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub grid: Option<PathBuf>,
    #[arg(long, global = true)]
    pub quality: Option<PathBuf>,
    /// Category weights, `name:weight,...`.
    #[arg(long, global = true)]
    pub weights: Option<String>,
    #[arg(long, global = true)]
    pub r_small: Option<f64>,
    #[arg(long, global = true)]
    pub r_large: Option<f64>,
    #[arg(long, global = true)]
    pub l_star: Option<f64>,
    #[arg(long, global = true)]
    pub l_top: Option<f64>,
    #[arg(long = "frame", global = true)]
    pub frame_fraction: Option<f64>,
    #[arg(long, global = true)]
    pub fences: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,
}

impl Common {
    pub fn resolve(&self) -> Result<PipelineConfig> {
        let mut c = match &self.config {
            Some(p) => PipelineConfig::load(p)?,
            None => PipelineConfig::default(),
        };
        if let Some(v) = &self.grid {
            c.grid = Some(v.clone());
        }
        if let Some(v) = &self.quality {
            c.quality = Some(v.clone());
        }
        if let Some(v) = &self.weights {
            c.weights = Weights::parse(v).map_err(GeoError::Usage)?;
        }
        if let Some(v) = &self.fences {
            c.fences = Some(v.clone());
        }
        if let Some(v) = &self.out_dir {
            c.out_dir = v.clone();
        }
        macro_rules! set {
            ($($f:ident),*) => { $( if let Some(v) = self.$f { c.$f = v; } )* };
        }
        set!(r_small, r_large, l_star, l_top, frame_fraction, seed);
        Ok(c)
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Quality CSV to privacy-mass CSV.
    Mass(MassArgs),
    /// Build and audit the metric.
    Build(BuildArgs),
    /// Draw sanitized locations.
    Sample(SampleArgs),
    /// Adversary error and utility on check-in data.
    Eval(EvalArgs),
    /// Per-cell raster of a quantity.
    Heatmap(HeatmapArgs),
}

#[derive(Debug, Args)]
pub struct MassArgs {
    /// Region file restricting the cells that calibrate the average quality.
    #[arg(long)]
    pub calibration: Option<PathBuf>,
    /// Defaults to `<out_dir>/mass.csv`.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BuildArgs {
    /// Defaults to `<out_dir>/mass.csv`.
    #[arg(long)]
    pub mass: Option<PathBuf>,
    /// Defaults to `<out_dir>/metric.elgm`.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    /// Defaults to `<out_dir>/audit.csv`.
    #[arg(long)]
    pub audit: Option<PathBuf>,
    #[arg(long)]
    pub edges_csv: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mechanism {
    Em,
    Pl,
    Identity,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    /// Defaults to `<out_dir>/metric.elgm`.
    #[arg(long)]
    pub metric: Option<PathBuf>,
    #[arg(long, conflicts_with_all = ["lat", "col"])]
    pub cell: Option<u32>,
    #[arg(long, requires = "row", conflicts_with = "lat")]
    pub col: Option<u32>,
    #[arg(long, requires = "col")]
    pub row: Option<u32>,
    #[arg(long, requires = "lon", allow_negative_numbers = true)]
    pub lat: Option<f64>,
    #[arg(long, requires = "lat", allow_negative_numbers = true)]
    pub lon: Option<f64>,
    #[arg(long, default_value_t = 1)]
    pub count: u64,
    #[arg(long, value_enum, default_value_t = Mechanism::Em)]
    pub mechanism: Mechanism,
    /// Planar Laplace rate in 1/m.
    #[arg(long, conflicts_with = "r_star")]
    pub epsilon: Option<f64>,
    /// Planar Laplace radius at which `l_star` is reached, in meters.
    #[arg(long)]
    pub r_star: Option<f64>,
    /// Defaults to standard output.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Guesses {
    Support,
    All,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Defaults to `<out_dir>/metric.elgm`.
    #[arg(long)]
    pub metric: Option<PathBuf>,
    #[arg(long)]
    pub checkins: PathBuf,
    #[arg(long)]
    pub region: PathBuf,
    /// `binary`, `euclidean` or `threshold:<meters>`, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "binary,euclidean")]
    pub loss: Vec<String>,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "em,pl")]
    pub mechanisms: Vec<Mechanism>,
    /// Fixed planar Laplace rate in 1/m.
    #[arg(long, conflicts_with = "pl_target")]
    pub pl_epsilon: Option<f64>,
    /// Euclidean utility in meters to calibrate planar Laplace to, or `em`
    /// for the exponential mechanism's own utility (the default).
    #[arg(long)]
    pub pl_target: Option<String>,
    #[arg(long, value_enum, default_value_t = Guesses::Support)]
    pub guesses: Guesses,
    #[arg(long, default_value_t = 1)]
    pub min_checkins: usize,
    /// Also export the exponential mechanism's matrix.
    #[arg(long)]
    pub matrix_csv: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Quantity {
    Mass,
    #[value(name = "expected_error")]
    ExpectedError,
    #[value(name = "l_reach")]
    LReach,
}

#[derive(Debug, Args)]
pub struct HeatmapArgs {
    #[arg(long)]
    pub metric: Option<PathBuf>,
    #[arg(long)]
    pub mass: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub quantity: Quantity,
    /// Defaults to standard output.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}
