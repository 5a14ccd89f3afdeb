use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use flowcomp::evalkit::{DEFAULT_PER_ANCHOR, DEFAULT_SEEDS};
use flowcomp::gvf::{
    DEFAULT_BETA, DEFAULT_GRID, DEFAULT_ITERATIONS, DEFAULT_MU, DEFAULT_TENSOR_SIZE,
};
use flowcomp::imagecore::CannyThresholds;
use flowcomp::saliency::{DEFAULT_CENTER_SIGMA_FRAC, DEFAULT_EDGE_BLUR_SIGMA};
use flowcomp::{AnalysisConfig, EdgeSource, GvfParams, SaliencySource};
use serde::{Deserialize, Serialize};

/// Flat key/value run configuration. Every key is optional in a config file;
/// missing keys take the defaults below and unknown keys are rejected.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub grid: usize,
    pub tensor_size: usize,
    pub mu: f64,
    pub beta: f64,
    pub iterations: usize,
    pub edge_source: EdgeSource,
    /// `uniform`, `center`, `edge` or `file:<dir>`.
    pub saliency_source: String,
    pub center_sigma_frac: f64,
    pub edge_blur_sigma: f64,
    pub canny_low: f64,
    pub canny_high: f64,
    pub per_anchor: usize,
    pub seeds: Vec<u64>,
    pub output_dir: PathBuf,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        let canny = CannyThresholds::default();
        Self {
            grid: DEFAULT_GRID,
            tensor_size: DEFAULT_TENSOR_SIZE,
            mu: DEFAULT_MU,
            beta: DEFAULT_BETA,
            iterations: DEFAULT_ITERATIONS,
            edge_source: EdgeSource::Intensity,
            saliency_source: "center".into(),
            center_sigma_frac: DEFAULT_CENTER_SIGMA_FRAC,
            edge_blur_sigma: DEFAULT_EDGE_BLUR_SIGMA,
            canny_low: canny.low_frac,
            canny_high: canny.high_frac,
            per_anchor: DEFAULT_PER_ANCHOR,
            seeds: DEFAULT_SEEDS.to_vec(),
            output_dir: PathBuf::from("flowcomp-out"),
        }
    }
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    /// Defaults, then the config file if any.
    pub fn resolve(path: Option<&Path>) -> Result<Self> {
        match path {
            Some(p) => Self::load(p),
            None => Ok(Self::default()),
        }
    }

    pub fn saliency(&self) -> Result<SaliencySource> {
        Ok(match self.saliency_source.parse::<SaliencySource>()? {
            SaliencySource::Center { .. } => SaliencySource::Center {
                sigma_frac: self.center_sigma_frac,
            },
            SaliencySource::Edge { .. } => SaliencySource::Edge {
                blur_sigma: self.edge_blur_sigma,
            },
            other => other,
        })
    }

    pub fn analysis(&self) -> Result<AnalysisConfig> {
        let cfg = AnalysisConfig {
            grid: self.grid,
            tensor_size: self.tensor_size,
            gvf: GvfParams {
                mu: self.mu,
                beta: self.beta,
                iterations: self.iterations,
                edge_source: self.edge_source,
            },
            saliency: self.saliency()?,
            canny: CannyThresholds {
                low_frac: self.canny_low,
                high_frac: self.canny_high,
            },
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.analysis()?;
        if self.per_anchor == 0 {
            bail!("per_anchor must be at least 1");
        }
        if self.seeds.is_empty() {
            bail!("seed list is empty");
        }
        Ok(())
    }
}

/// Command-line values that take precedence over the config file.
#[derive(Clone, Debug, Default, clap::Args)]
pub struct Overrides {
    /// Solver grid side length.
    #[arg(long)]
    pub grid: Option<usize>,
    /// Side length of the assembled input tensor.
    #[arg(long)]
    pub tensor_size: Option<usize>,
    /// Smoothness weight.
    #[arg(long)]
    pub mu: Option<f64>,
    /// Saliency force strength.
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub iterations: Option<usize>,
    /// intensity, sobel or canny.
    #[arg(long)]
    pub edge_source: Option<EdgeSource>,
    /// uniform, center, edge or file:<dir>.
    #[arg(long)]
    pub saliency_source: Option<String>,
    #[arg(long)]
    pub center_sigma_frac: Option<f64>,
    #[arg(long)]
    pub edge_blur_sigma: Option<f64>,
    #[arg(long)]
    pub canny_low: Option<f64>,
    #[arg(long)]
    pub canny_high: Option<f64>,
    /// Triplets drawn per anchor image.
    #[arg(long)]
    pub per_anchor: Option<usize>,
    /// Comma-separated sampling seeds.
    #[arg(long, value_delimiter = ',')]
    pub seeds: Option<Vec<u64>>,
}

impl Overrides {
    pub fn apply(&self, cfg: &mut PipelineConfig) {
        macro_rules! set {
            ($($field:ident),*) => {
                $(if let Some(v) = &self.$field {
                    cfg.$field = v.clone();
                })*
            };
        }
        set!(
            grid,
            tensor_size,
            mu,
            beta,
            iterations,
            edge_source,
            saliency_source,
            center_sigma_frac,
            edge_blur_sigma,
            canny_low,
            canny_high,
            per_anchor,
            seeds
        );
    }
}
