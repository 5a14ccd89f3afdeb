//! Gradient vector flow by explicit iterative diffusion.
//!
//! Both streams start from the external force `(fx, fy)` and run a fixed
//! number of synchronous (Jacobi) updates
//!
//! ```text
//! u <- u + mu * lap(u) - (fx^2 + fy^2) * (u - fx) [+ beta * dS/dx]
//! v <- v + mu * lap(v) - (fx^2 + fy^2) * (v - fy) [+ beta * dS/dy]
//! ```
//!
//! with a replicate-border Laplacian. The bracketed saliency force is what
//! separates the enhanced stream from the baseline.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{ensure_same_shape, FlowField, ScalarField};
use crate::imagecore::{
    canny_edges, central_gradients, laplacian_unchecked, minmax_normalize, resize_bilinear, sobel_edges,
    CannyThresholds, GrayImage,
};
use crate::saliency::{saliency_gradient, SaliencyMap};

pub const DEFAULT_MU: f64 = 0.15;
pub const DEFAULT_BETA: f64 = 0.1;
pub const DEFAULT_ITERATIONS: usize = 10;
pub const DEFAULT_GRID: usize = 56;
pub const DEFAULT_TENSOR_SIZE: usize = 224;

/// Which edge signal supplies the external force field.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EdgeSource {
    /// Gradients of the grayscale intensities.
    #[default]
    Intensity,
    /// Gradients of the normalized Sobel magnitude.
    Sobel,
    /// Gradients of the binary Canny map.
    Canny,
}

impl EdgeSource {
    pub const ALL: [EdgeSource; 3] = [EdgeSource::Intensity, EdgeSource::Sobel, EdgeSource::Canny];

    pub fn as_str(self) -> &'static str {
        match self {
            EdgeSource::Intensity => "intensity",
            EdgeSource::Sobel => "sobel",
            EdgeSource::Canny => "canny",
        }
    }
}

impl fmt::Display for EdgeSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EdgeSource {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "intensity" => Ok(EdgeSource::Intensity),
            "sobel" => Ok(EdgeSource::Sobel),
            "canny" => Ok(EdgeSource::Canny),
            other => Err(Error::InvalidParameter(format!(
                "unknown edge source '{other}' (expected intensity, sobel or canny)"
            ))),
        }
    }
}

/// Solver parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GvfParams {
    /// Smoothness weight.
    pub mu: f64,
    /// Saliency force strength.
    pub beta: f64,
    pub iterations: usize,
    pub edge_source: EdgeSource,
}

impl Default for GvfParams {
    fn default() -> Self {
        Self {
            mu: DEFAULT_MU,
            beta: DEFAULT_BETA,
            iterations: DEFAULT_ITERATIONS,
            edge_source: EdgeSource::Intensity,
        }
    }
}

impl GvfParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.mu > 0.0) || !self.mu.is_finite() {
            return Err(Error::InvalidParameter(format!("mu must be > 0, got {}", self.mu)));
        }
        if !(self.beta >= 0.0) || !self.beta.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "beta must be >= 0, got {}",
                self.beta
            )));
        }
        if self.iterations == 0 {
            return Err(Error::InvalidParameter("iterations must be >= 1".into()));
        }
        Ok(())
    }
}

/// External force `(fx, fy)` for the chosen edge source.
pub fn edge_force_field(img: &GrayImage, source: EdgeSource) -> Result<(ScalarField, ScalarField)> {
    edge_force_field_with(img, source, CannyThresholds::default())
}

pub fn edge_force_field_with(
    img: &GrayImage,
    source: EdgeSource,
    canny: CannyThresholds,
) -> Result<(ScalarField, ScalarField)> {
    match source {
        EdgeSource::Intensity => central_gradients(img),
        EdgeSource::Sobel => central_gradients(&sobel_edges(img)?),
        EdgeSource::Canny => central_gradients(&canny_edges(img, canny)?),
    }
}

fn check_inputs(fields: &[(&'static str, &ScalarField)]) -> Result<()> {
    let (_, first) = fields[0];
    first.require_min("force field", 3)?;
    for (name, f) in fields {
        ensure_same_shape(first, f)?;
        if !f.is_finite() {
            return Err(Error::NonFinite(name));
        }
    }
    Ok(())
}

/// Baseline stream: diffuses `(fx, fy)` for `p.iterations` steps.
pub fn gvf_baseline(fx: &ScalarField, fy: &ScalarField, p: &GvfParams) -> Result<FlowField> {
    p.validate()?;
    check_inputs(&[("fx", fx), ("fy", fy)])?;
    Ok(diffuse(fx, fy, None, p))
}

/// Saliency-enhanced stream: the baseline update plus `beta * grad S`.
pub fn gvf_saliency(
    fx: &ScalarField,
    fy: &ScalarField,
    sx: &ScalarField,
    sy: &ScalarField,
    p: &GvfParams,
) -> Result<FlowField> {
    p.validate()?;
    check_inputs(&[("fx", fx), ("fy", fy), ("Sx", sx), ("Sy", sy)])?;
    let fu = sx.map(|s| p.beta * s);
    let fv = sy.map(|s| p.beta * s);
    Ok(diffuse(fx, fy, Some((&fu, &fv)), p))
}

fn diffuse(
    fx: &ScalarField,
    fy: &ScalarField,
    extra: Option<(&ScalarField, &ScalarField)>,
    p: &GvfParams,
) -> FlowField {
    let weight: Vec<f64> = fx
        .values()
        .iter()
        .zip(fy.values())
        .map(|(a, b)| a * a + b * b)
        .collect();
    let mut u = fx.clone();
    let mut v = fy.clone();
    for _ in 0..p.iterations {
        let lu = laplacian_unchecked(&u);
        let lv = laplacian_unchecked(&v);
        step(&mut u, &lu, fx, &weight, extra.map(|e| e.0), p.mu);
        step(&mut v, &lv, fy, &weight, extra.map(|e| e.1), p.mu);
    }
    FlowField { u, v }
}

fn step(
    cur: &mut ScalarField,
    lap: &ScalarField,
    target: &ScalarField,
    weight: &[f64],
    extra: Option<&ScalarField>,
    mu: f64,
) {
    let lap = lap.values();
    let target = target.values();
    let extra = extra.map(|e| e.values());
    for (i, c) in cur.values_mut().iter_mut().enumerate() {
        let mut next = *c + mu * lap[i] - weight[i] * (*c - target[i]);
        if let Some(e) = extra {
            // zero forces are skipped so a flat saliency map reproduces the
            // baseline bit for bit, signed zeros included
            if e[i] != 0.0 {
                next += e[i];
            }
        }
        *c = next;
    }
}

/// Sum over `x` of squared second differences `f[x-1] - 2f[x] + f[x+1]`
/// and likewise over `y`, both taken only where the stencil fits.
fn second_difference_energy(f: &ScalarField) -> f64 {
    let (w, h) = f.shape();
    let mut total = 0.0;
    for y in 0..h {
        for x in 1..w.saturating_sub(1) {
            let d = f.get(x - 1, y) - 2.0 * f.get(x, y) + f.get(x + 1, y);
            total += d * d;
        }
    }
    for y in 1..h.saturating_sub(1) {
        for x in 0..w {
            let d = f.get(x, y - 1) - 2.0 * f.get(x, y) + f.get(x, y + 1);
            total += d * d;
        }
    }
    total
}

/// Discrete baseline energy: `mu * (sum of squared second differences of
/// u and v) + sum (fx^2 + fy^2) * ((u - fx)^2 + (v - fy)^2)`.
pub fn gvf_energy(flow: &FlowField, fx: &ScalarField, fy: &ScalarField, mu: f64) -> Result<f64> {
    ensure_same_shape(&flow.u, &flow.v)?;
    ensure_same_shape(&flow.u, fx)?;
    ensure_same_shape(&flow.u, fy)?;
    let smooth = second_difference_energy(&flow.u) + second_difference_energy(&flow.v);
    let fidelity: f64 = (0..fx.len())
        .map(|i| {
            let (a, b) = (fx.values()[i], fy.values()[i]);
            let du = flow.u.values()[i] - a;
            let dv = flow.v.values()[i] - b;
            (a * a + b * b) * (du * du + dv * dv)
        })
        .sum();
    Ok(mu * smooth + fidelity)
}

/// Baseline energy minus the saliency attraction `beta * sum(u Sx + v Sy)`.
pub fn gvf_energy_saliency(
    flow: &FlowField,
    fx: &ScalarField,
    fy: &ScalarField,
    sx: &ScalarField,
    sy: &ScalarField,
    mu: f64,
    beta: f64,
) -> Result<f64> {
    let base = gvf_energy(flow, fx, fy, mu)?;
    ensure_same_shape(&flow.u, sx)?;
    ensure_same_shape(&flow.u, sy)?;
    let attraction: f64 = (0..sx.len())
        .map(|i| flow.u.values()[i] * sx.values()[i] + flow.v.values()[i] * sy.values()[i])
        .sum();
    Ok(base - beta * attraction)
}

/// Min-max normalizes `u` and `v` independently.
pub fn normalize_flow(flow: &FlowField) -> FlowField {
    FlowField {
        u: minmax_normalize(&flow.u),
        v: minmax_normalize(&flow.v),
    }
}

pub fn average_streams(base: &FlowField, sal: &FlowField) -> Result<FlowField> {
    Ok(FlowField {
        u: base.u.zip_map(&sal.u, |a, b| (a + b) / 2.0)?,
        v: base.v.zip_map(&sal.v, |a, b| (a + b) / 2.0)?,
    })
}

/// Three-channel network input `[S, u, v]` at a common resolution.
#[derive(Clone, Debug, PartialEq)]
pub struct InputTensor {
    pub channels: [ScalarField; 3],
}

impl InputTensor {
    pub fn size(&self) -> (usize, usize) {
        self.channels[0].shape()
    }
}

/// Normalizes the averaged flow and resamples `[S, u, v]` to
/// `out_size x out_size`.
pub fn assemble_input(s: &SaliencyMap, avg: &FlowField, out_size: usize) -> Result<InputTensor> {
    if out_size < 2 {
        return Err(Error::TooSmall {
            what: "tensor size",
            width: out_size,
            height: out_size,
            min: 2,
        });
    }
    let n = normalize_flow(avg);
    Ok(InputTensor {
        channels: [
            resize_bilinear(s, out_size, out_size)?,
            resize_bilinear(&n.u, out_size, out_size)?,
            resize_bilinear(&n.v, out_size, out_size)?,
        ],
    })
}

/// Everything computed for one image on the solver grid.
#[derive(Clone, Debug)]
pub struct DualStream {
    pub fx: ScalarField,
    pub fy: ScalarField,
    pub saliency: SaliencyMap,
    pub sx: ScalarField,
    pub sy: ScalarField,
    pub baseline: FlowField,
    pub enhanced: FlowField,
}

impl DualStream {
    /// Energies of the baseline stream at initialization and after the
    /// last iteration.
    pub fn baseline_energy(&self, mu: f64) -> Result<(f64, f64)> {
        let init = FlowField::new(self.fx.clone(), self.fy.clone())?;
        Ok((
            gvf_energy(&init, &self.fx, &self.fy, mu)?,
            gvf_energy(&self.baseline, &self.fx, &self.fy, mu)?,
        ))
    }

    pub fn enhanced_energy(&self, mu: f64, beta: f64) -> Result<(f64, f64)> {
        let init = FlowField::new(self.fx.clone(), self.fy.clone())?;
        let e = |f: &FlowField| gvf_energy_saliency(f, &self.fx, &self.fy, &self.sx, &self.sy, mu, beta);
        Ok((e(&init)?, e(&self.enhanced)?))
    }

    pub fn average(&self) -> FlowField {
        average_streams(&self.baseline, &self.enhanced).expect("streams share the grid")
    }
}

/// Solves both streams for an image already on the solver grid. The
/// saliency map is resampled to the grid first if needed.
pub fn solve_dual_stream(
    gray: &GrayImage,
    saliency: &SaliencyMap,
    p: &GvfParams,
    canny: CannyThresholds,
) -> Result<DualStream> {
    let (w, h) = gray.shape();
    let saliency = if saliency.shape() == (w, h) {
        saliency.clone()
    } else {
        saliency.resize(w, h)?
    };
    let (fx, fy) = edge_force_field_with(gray, p.edge_source, canny)?;
    let (sx, sy) = saliency_gradient(&saliency)?;
    let baseline = gvf_baseline(&fx, &fy, p)?;
    let enhanced = gvf_saliency(&fx, &fy, &sx, &sy, p)?;
    Ok(DualStream {
        fx,
        fy,
        saliency,
        sx,
        sy,
        baseline,
        enhanced,
    })
}
