use std::path::{Path, PathBuf};

use crate::atomic::read_to_string;
use crate::error::{GeoError, Result};
use crate::keyvalue::{meta_line, parse_lines, parse_num};
use crate::quality::Weights;

/// Settings shared by every command. Loaded from a `key = value` file,
/// then overridden by flags.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub grid: Option<PathBuf>,
    pub quality: Option<PathBuf>,
    pub weights: Weights,
    pub r_small: f64,
    pub r_large: f64,
    pub l_star: f64,
    pub l_top: f64,
    pub frame_fraction: f64,
    pub fences: Option<PathBuf>,
    pub seed: u64,
    pub out_dir: PathBuf,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            grid: None,
            quality: None,
            weights: Weights::default(),
            r_small: 300.0,
            r_large: 3000.0,
            l_star: std::f64::consts::LN_2,
            l_top: 10.0,
            frame_fraction: 0.03,
            fences: None,
            seed: 0,
            out_dir: PathBuf::from("."),
        }
    }
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(path, &read_to_string(path)?)
    }

    /// Relative paths in the file are taken relative to the file's directory.
    pub fn parse(path: &Path, text: &str) -> Result<Self> {
        let base = path.parent().unwrap_or(Path::new(""));
        let rel = |v: &str| base.join(v);
        let mut c = Self::default();
        for e in parse_lines(path, text)? {
            match e.key.as_str() {
                "grid" => c.grid = Some(rel(&e.value)),
                "quality" => c.quality = Some(rel(&e.value)),
                "weights" => c.weights = Weights::parse(&e.value).map_err(|m| GeoError::parse(path, e.line, m))?,
                "r_small" => c.r_small = parse_num(path, &e)?,
                "r_large" => c.r_large = parse_num(path, &e)?,
                "l_star" => c.l_star = parse_num(path, &e)?,
                "l_top" => c.l_top = parse_num(path, &e)?,
                "frame_fraction" => c.frame_fraction = parse_num(path, &e)?,
                "fences" => c.fences = Some(rel(&e.value)),
                "seed" => c.seed = parse_num(path, &e)?,
                "out_dir" => c.out_dir = rel(&e.value),
                other => return Err(GeoError::parse(path, e.line, format!("unknown key `{other}`"))),
            }
        }
        Ok(c)
    }

    /// The effective configuration as a `# config:` metadata line.
    pub fn meta(&self) -> String {
        let p = |o: &Option<PathBuf>| o.as_ref().map_or(String::new(), |p| p.display().to_string());
        meta_line(
            "config",
            &[
                ("grid", p(&self.grid)),
                ("quality", p(&self.quality)),
                ("weights", self.weights.format()),
                ("r_small", self.r_small.to_string()),
                ("r_large", self.r_large.to_string()),
                ("l_star", self.l_star.to_string()),
                ("l_top", self.l_top.to_string()),
                ("frame_fraction", self.frame_fraction.to_string()),
                ("fences", p(&self.fences)),
                ("seed", self.seed.to_string()),
                ("out_dir", self.out_dir.display().to_string()),
            ],
        )
    }

    pub fn out(&self, name: &str) -> PathBuf {
        self.out_dir.join(name)
    }
}
