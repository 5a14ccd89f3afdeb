//! Image to descriptor, end to end.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::flowfeat::{descriptor, FlowDescriptor};
use crate::gvf::{
    assemble_input, normalize_flow, solve_dual_stream, DualStream, GvfParams, InputTensor,
    DEFAULT_GRID, DEFAULT_TENSOR_SIZE,
};
use crate::imagecore::{to_grayscale, CannyThresholds, GrayImage, RgbImage};
use crate::saliency::{
    center_bias_saliency, edge_saliency, load_saliency, uniform_saliency, SaliencyMap,
    DEFAULT_CENTER_SIGMA_FRAC, DEFAULT_EDGE_BLUR_SIGMA,
};

/// Where the saliency map for an image comes from.
#[derive(Clone, Debug, PartialEq)]
pub enum SaliencySource {
    Uniform,
    Center { sigma_frac: f64 },
    Edge { blur_sigma: f64 },
    /// Precomputed maps named `<image stem>.png` or `<image stem>.fcf`.
    File(PathBuf),
}

/// Center bias. The fixed radial pull gives every image the same reference
/// frame, which lets the descriptor compare layouts across images.
impl Default for SaliencySource {
    fn default() -> Self {
        SaliencySource::Center {
            sigma_frac: DEFAULT_CENTER_SIGMA_FRAC,
        }
    }
}

impl fmt::Display for SaliencySource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SaliencySource::Uniform => f.write_str("uniform"),
            SaliencySource::Center { .. } => f.write_str("center"),
            SaliencySource::Edge { .. } => f.write_str("edge"),
            SaliencySource::File(dir) => write!(f, "file:{}", dir.display()),
        }
    }
}

/// Parses `uniform`, `center`, `edge` or `file:<dir>` with default
/// generator parameters.
impl FromStr for SaliencySource {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if let Some(dir) = s.strip_prefix("file:") {
            if dir.is_empty() {
                return Err(Error::InvalidParameter("file: saliency source needs a directory".into()));
            }
            return Ok(SaliencySource::File(dir.into()));
        }
        match s {
            "uniform" => Ok(SaliencySource::Uniform),
            "center" => Ok(SaliencySource::Center {
                sigma_frac: DEFAULT_CENTER_SIGMA_FRAC,
            }),
            "edge" => Ok(SaliencySource::Edge {
                blur_sigma: DEFAULT_EDGE_BLUR_SIGMA,
            }),
            other => Err(Error::InvalidParameter(format!(
                "unknown saliency source '{other}' (expected uniform, center, edge or file:<dir>)"
            ))),
        }
    }
}

impl SaliencySource {
    /// Saliency for `gray` (already on the solver grid). `stem` names the
    /// precomputed map for [`SaliencySource::File`].
    pub fn saliency_for(&self, gray: &GrayImage, stem: &str) -> Result<SaliencyMap> {
        let (w, h) = gray.shape();
        match self {
            SaliencySource::Uniform => uniform_saliency(w, h),
            SaliencySource::Center { sigma_frac } => center_bias_saliency(w, h, *sigma_frac),
            SaliencySource::Edge { blur_sigma } => edge_saliency(gray, *blur_sigma),
            SaliencySource::File(dir) => load_saliency(&find_saliency_file(dir, stem)?, w, h),
        }
    }
}

pub fn find_saliency_file(dir: &Path, stem: &str) -> Result<PathBuf> {
    ["png", "fcf"]
        .iter()
        .map(|ext| dir.join(format!("{stem}.{ext}")))
        .find(|p| p.is_file())
        .ok_or_else(|| Error::FileNotFound(dir.join(format!("{stem}.png"))))
}

#[derive(Clone, Debug, PartialEq)]
pub struct AnalysisConfig {
    pub grid: usize,
    pub tensor_size: usize,
    pub gvf: GvfParams,
    pub saliency: SaliencySource,
    pub canny: CannyThresholds,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            grid: DEFAULT_GRID,
            tensor_size: DEFAULT_TENSOR_SIZE,
            gvf: GvfParams::default(),
            saliency: SaliencySource::default(),
            canny: CannyThresholds::default(),
        }
    }
}

impl AnalysisConfig {
    pub fn validate(&self) -> Result<()> {
        self.gvf.validate()?;
        self.canny.validate()?;
        if self.grid < 12 || !self.grid.is_multiple_of(4) {
            return Err(Error::InvalidParameter(format!(
                "grid must be a multiple of 4 and at least 12, got {}",
                self.grid
            )));
        }
        if self.tensor_size < 2 {
            return Err(Error::InvalidParameter("tensor size must be at least 2".into()));
        }
        match &self.saliency {
            SaliencySource::Center { sigma_frac } if !(*sigma_frac > 0.0 && sigma_frac.is_finite()) => {
                Err(Error::InvalidParameter("center sigma fraction must be positive".into()))
            }
            SaliencySource::Edge { blur_sigma } if !(*blur_sigma > 0.0 && blur_sigma.is_finite()) => {
                Err(Error::InvalidParameter("edge blur sigma must be positive".into()))
            }
            _ => Ok(()),
        }
    }
}

/// Results for one image.
#[derive(Clone, Debug)]
pub struct Analysis {
    /// Grayscale image on the solver grid.
    pub gray: GrayImage,
    pub streams: DualStream,
}

impl Analysis {
    pub fn descriptor(&self) -> Result<FlowDescriptor> {
        descriptor(
            &normalize_flow(&self.streams.baseline),
            &normalize_flow(&self.streams.enhanced),
        )
    }

    pub fn tensor(&self, out_size: usize) -> Result<InputTensor> {
        assemble_input(&self.streams.saliency, &self.streams.average(), out_size)
    }
}

/// Grayscale conversion, resize to the grid, saliency, and both GVF streams.
pub fn analyze(img: &RgbImage, stem: &str, cfg: &AnalysisConfig) -> Result<Analysis> {
    cfg.validate()?;
    let gray = to_grayscale(img).resize(cfg.grid, cfg.grid)?;
    let saliency = cfg.saliency.saliency_for(&gray, stem)?;
    let streams = solve_dual_stream(&gray, &saliency, &cfg.gvf, cfg.canny)?;
    Ok(Analysis { gray, streams })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flowfeat::DESCRIPTOR_LEN;
    use crate::synth::{line_composition, Orientation};

    #[test]
    fn source_parsing() {
        assert_eq!("uniform".parse::<SaliencySource>().unwrap(), SaliencySource::Uniform);
        assert_eq!(
            "file:/tmp/x".parse::<SaliencySource>().unwrap(),
            SaliencySource::File("/tmp/x".into())
        );
        assert!("file:".parse::<SaliencySource>().is_err());
        assert!("deepgaze".parse::<SaliencySource>().is_err());
        for s in ["uniform", "center", "edge", "file:abc"] {
            assert_eq!(s.parse::<SaliencySource>().unwrap().to_string(), s);
        }
    }

    #[test]
    fn uniform_source_collapses_streams() {
        let img = line_composition(Orientation::Horizontal, 70, 50, 1).unwrap();
        let cfg = AnalysisConfig {
            saliency: SaliencySource::Uniform,
            ..Default::default()
        };
        let a = analyze(&img, "x", &cfg).unwrap();
        assert_eq!(a.streams.baseline, a.streams.enhanced);
        let d = a.descriptor().unwrap();
        assert_eq!(d.values().len(), DESCRIPTOR_LEN);
        assert_eq!(d.values()[..DESCRIPTOR_LEN / 2], d.values()[DESCRIPTOR_LEN / 2..]);
        assert_eq!(a.tensor(224).unwrap().size(), (224, 224));
    }

    #[test]
    fn rejects_bad_grid() {
        let img = line_composition(Orientation::Vertical, 30, 30, 1).unwrap();
        let cfg = AnalysisConfig {
            grid: 30,
            ..Default::default()
        };
        assert!(analyze(&img, "x", &cfg).is_err());
    }

    #[test]
    fn missing_saliency_file() {
        let dir = tempfile::tempdir().unwrap();
        let img = line_composition(Orientation::Vertical, 30, 30, 1).unwrap();
        let cfg = AnalysisConfig {
            saliency: SaliencySource::File(dir.path().into()),
            ..Default::default()
        };
        assert!(matches!(analyze(&img, "nope", &cfg), Err(Error::FileNotFound(_))));
    }
}
