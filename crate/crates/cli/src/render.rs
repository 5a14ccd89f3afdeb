use std::fmt;
use std::path::Path;
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use flowcomp::flowfeat::{curl, divergence, magnitude};
use flowcomp::gvf::normalize_flow;
use flowcomp::imagecore::{load_image, minmax_normalize};
use flowcomp::io::{has_raw_magic, decode_raw, write_gray_png, RawFields};
use flowcomp::{analyze, AnalysisConfig, FlowField, ScalarField};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RenderKind {
    Div,
    Curl,
    Mag,
    Saliency,
    Quiver,
}

impl FromStr for RenderKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Ok(match s {
            "div" => RenderKind::Div,
            "curl" => RenderKind::Curl,
            "mag" => RenderKind::Mag,
            "saliency" => RenderKind::Saliency,
            "quiver" => RenderKind::Quiver,
            other => {
                return Err(format!(
                    "unknown render kind '{other}' (expected div, curl, mag, saliency or quiver)"
                ))
            }
        })
    }
}

impl fmt::Display for RenderKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RenderKind::Div => "div",
            RenderKind::Curl => "curl",
            RenderKind::Mag => "mag",
            RenderKind::Saliency => "saliency",
            RenderKind::Quiver => "quiver",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct QuiverStyle {
    /// Output pixels per flow sample.
    pub scale: usize,
    /// Draw one arrow every `stride` samples in each direction.
    pub stride: usize,
}

impl Default for QuiverStyle {
    fn default() -> Self {
        Self { scale: 8, stride: 4 }
    }
}

enum Source {
    Flow(FlowField),
    Scalar(ScalarField),
}

fn load_source(path: &Path, kind: RenderKind, cfg: &AnalysisConfig) -> Result<Source> {
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    if has_raw_magic(&bytes) {
        return Ok(match decode_raw(&bytes, path)? {
            RawFields::Single(f) => Source::Scalar(f),
            RawFields::Planes(mut p) if p.len() == 2 => {
                let v = p.pop().unwrap();
                let u = p.pop().unwrap();
                Source::Flow(FlowField::new(u, v)?)
            }
            RawFields::Planes(p) => bail!(
                "{}: {} planes; expected a 2-plane flow or a single field",
                path.display(),
                p.len()
            ),
        });
    }
    let img = load_image(path)?;
    let stem = path.file_stem().unwrap_or_default().to_string_lossy();
    let a = analyze(&img, &stem, cfg)?;
    Ok(if kind == RenderKind::Saliency {
        Source::Scalar(a.streams.saliency.field().clone())
    } else {
        Source::Flow(normalize_flow(&a.streams.average()))
    })
}

/// Renders `kind` from a flow file, a raw field, or an image (which is run
/// through the pipeline first), writing an 8-bit grayscale PNG.
pub fn render(
    input: &Path,
    kind: RenderKind,
    output: &Path,
    cfg: &AnalysisConfig,
    style: QuiverStyle,
) -> Result<()> {
    let canvas = match (load_source(input, kind, cfg)?, kind) {
        (Source::Scalar(f), RenderKind::Saliency) => f.map(|v| v.clamp(0.0, 1.0)),
        (Source::Scalar(_), k) => bail!("{}: a single field cannot be rendered as {k}", input.display()),
        (Source::Flow(_), RenderKind::Saliency) => {
            bail!("{}: a flow file cannot be rendered as saliency", input.display())
        }
        (Source::Flow(flow), RenderKind::Quiver) => quiver(&flow, style)?,
        (Source::Flow(flow), k) => {
            let f = match k {
                RenderKind::Div => divergence(&flow)?,
                RenderKind::Curl => curl(&flow)?,
                _ => magnitude(&flow)?,
            };
            minmax_normalize(&f)
        }
    };
    write_gray_png(output, &canvas)?;
    Ok(())
}

fn plot(canvas: &mut ScalarField, x: i64, y: i64) {
    if x >= 0 && y >= 0 && (x as usize) < canvas.width() && (y as usize) < canvas.height() {
        canvas.set(x as usize, y as usize, 1.0);
    }
}

/// Bresenham line between integer endpoints, inclusive.
fn line(canvas: &mut ScalarField, (x0, y0): (i64, i64), (x1, y1): (i64, i64)) {
    let (dx, dy) = ((x1 - x0).abs(), -(y1 - y0).abs());
    let (sx, sy) = ((x1 - x0).signum(), (y1 - y0).signum());
    let (mut x, mut y, mut err) = (x0, y0, dx + dy);
    loop {
        plot(canvas, x, y);
        if x == x1 && y == y1 {
            break;
        }
        let e2 = 2 * err;
        if e2 >= dy {
            err += dy;
            x += sx;
        }
        if e2 <= dx {
            err += dx;
            y += sy;
        }
    }
}

/// White arrows on black. Arrow length is proportional to the local
/// magnitude, with the longest sampled arrow spanning 90% of a stride.
pub fn quiver(flow: &FlowField, style: QuiverStyle) -> Result<ScalarField> {
    if style.scale == 0 || style.stride == 0 {
        bail!("quiver scale and stride must be positive");
    }
    let (w, h) = flow.shape();
    let mut canvas = ScalarField::zeros(w * style.scale, h * style.scale);
    // one arrow per full stride block, drawn about the block center and
    // reading the sample nearest to it
    let blocks: Vec<(usize, usize)> = (0..h / style.stride)
        .flat_map(|by| (0..w / style.stride).map(move |bx| (bx, by)))
        .collect();
    let sample = |(bx, by): (usize, usize)| {
        let (x, y) = (bx * style.stride + style.stride / 2, by * style.stride + style.stride / 2);
        (flow.u.get(x, y), flow.v.get(x, y))
    };
    let peak = blocks
        .iter()
        .map(|&b| {
            let (u, v) = sample(b);
            u.hypot(v)
        })
        .fold(0.0, f64::max);
    let cell = (style.stride * style.scale) as f64;
    let reach = 0.9 * cell;
    for b in blocks {
        let c = (
            b.0 as f64 * cell + cell / 2.0 - 0.5,
            b.1 as f64 * cell + cell / 2.0 - 0.5,
        );
        let start = (c.0.round() as i64, c.1.round() as i64);
        let (u, v) = sample(b);
        let m = u.hypot(v);
        if peak == 0.0 || m == 0.0 {
            plot(&mut canvas, start.0, start.1);
            continue;
        }
        let len = reach * m / peak;
        // center the arrow on the block
        let (ux, uy) = (u / m, v / m);
        let tail = (c.0 - ux * len / 2.0, c.1 - uy * len / 2.0);
        let tip = (c.0 + ux * len / 2.0, c.1 + uy * len / 2.0);
        let ri = |p: (f64, f64)| (p.0.round() as i64, p.1.round() as i64);
        line(&mut canvas, ri(tail), ri(tip));
        let head = (len / 4.0).max(2.0);
        for side in [-1.0, 1.0] {
            let (s, co) = (side * 0.5f64).sin_cos();
            // rotate the reversed direction by +-0.5 rad
            let (bx, by) = (-ux * co + uy * s, -ux * s - uy * co);
            let wing = (tip.0 + bx * head, tip.1 + by * head);
            line(&mut canvas, ri(tip), ri(wing));
        }
    }
    Ok(canvas)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bresenham_endpoints_and_count() {
        let mut c = ScalarField::zeros(10, 10);
        line(&mut c, (1, 1), (8, 4));
        assert_eq!(c.get(1, 1), 1.0);
        assert_eq!(c.get(8, 4), 1.0);
        assert_eq!(c.values().iter().filter(|&&v| v == 1.0).count(), 8);
    }

    #[test]
    fn constant_flow_gives_identical_arrows() {
        let flow = FlowField::from_fn(16, 16, |_, _| (1.0, 0.0));
        let style = QuiverStyle::default();
        let q = quiver(&flow, style).unwrap();
        let cell = style.stride * style.scale;
        let block = |bx: usize, by: usize| -> Vec<f64> {
            (0..cell)
                .flat_map(|y| (0..cell).map(move |x| (x, y)))
                .map(|(x, y)| q.get(bx * cell + x, by * cell + y))
                .collect()
        };
        let first = block(0, 0);
        for by in 0..4 {
            for bx in 0..4 {
                assert_eq!(block(bx, by), first);
            }
        }
        // shaft is horizontal and the head points right
        let row = cell / 2;
        let lit: Vec<usize> = (0..cell).filter(|&x| q.get(x, row) == 1.0).collect();
        let tip = *lit.last().unwrap();
        assert!(lit.len() as f64 >= 0.85 * cell as f64);
        assert!(q.get(tip - 3, row - 1) == 1.0 || q.get(tip - 3, row - 2) == 1.0);
        assert_eq!(q.get(tip + 1, row - 1), 0.0);
    }
}
