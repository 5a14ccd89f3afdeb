use crate::error::{Error, Result};
use crate::field::ScalarField;

/// Relative range below which a field is treated as constant by
/// [`minmax_normalize`]. Differences this small are rounding noise.
const FLAT_RANGE_RTOL: f64 = 1e-12;

/// Bilinear resampling with pixel-center alignment: output sample `x` maps
/// to source coordinate `(x + 0.5) * in / out - 0.5`, clamped to the grid.
pub fn resize_bilinear(f: &ScalarField, out_w: usize, out_h: usize) -> Result<ScalarField> {
    if out_w < 2 || out_h < 2 {
        return Err(Error::TooSmall {
            what: "resize target",
            width: out_w,
            height: out_h,
            min: 2,
        });
    }
    let (in_w, in_h) = f.shape();
    if (in_w, in_h) == (out_w, out_h) {
        return Ok(f.clone());
    }
    let (lo, hi) = (f.min(), f.max());
    let xs: Vec<_> = (0..out_w).map(|x| source_coord(x, in_w, out_w)).collect();
    let ys: Vec<_> = (0..out_h).map(|y| source_coord(y, in_h, out_h)).collect();
    Ok(ScalarField::from_fn(out_w, out_h, |x, y| {
        let (x0, x1, tx) = xs[x];
        let (y0, y1, ty) = ys[y];
        let top = lerp(f.get(x0, y0), f.get(x1, y0), tx);
        let bottom = lerp(f.get(x0, y1), f.get(x1, y1), tx);
        lerp(top, bottom, ty).clamp(lo, hi)
    }))
}

fn source_coord(i: usize, n_in: usize, n_out: usize) -> (usize, usize, f64) {
    let s = ((i as f64 + 0.5) * n_in as f64 / n_out as f64 - 0.5).clamp(0.0, (n_in - 1) as f64);
    let i0 = s.floor() as usize;
    let i1 = (i0 + 1).min(n_in - 1);
    (i0, i1, s - i0 as f64)
}

#[inline]
fn lerp(a: f64, b: f64, t: f64) -> f64 {
    a + t * (b - a)
}

/// First derivatives `(d/dx, d/dy)` with unit spacing. Central differences
/// inside, one-sided differences on the border rows and columns.
pub fn central_gradients(f: &ScalarField) -> Result<(ScalarField, ScalarField)> {
    f.require_min("field for gradients", 3)?;
    Ok((diff_x(f, 1.0), diff_y(f, 1.0)))
}

/// `d/dx` with sample spacing `h`.
pub(crate) fn diff_x(f: &ScalarField, h: f64) -> ScalarField {
    let w = f.width();
    ScalarField::from_fn(w, f.height(), |x, y| {
        let d = if x == 0 {
            f.get(1, y) - f.get(0, y)
        } else if x == w - 1 {
            f.get(w - 1, y) - f.get(w - 2, y)
        } else {
            (f.get(x + 1, y) - f.get(x - 1, y)) / 2.0
        };
        d / h
    })
}

/// `d/dy` with sample spacing `h`.
pub(crate) fn diff_y(f: &ScalarField, h: f64) -> ScalarField {
    let ht = f.height();
    ScalarField::from_fn(f.width(), ht, |x, y| {
        let d = if y == 0 {
            f.get(x, 1) - f.get(x, 0)
        } else if y == ht - 1 {
            f.get(x, ht - 1) - f.get(x, ht - 2)
        } else {
            (f.get(x, y + 1) - f.get(x, y - 1)) / 2.0
        };
        d / h
    })
}

/// Five-point Laplacian with replicate (zero-flux) borders.
pub fn laplacian(f: &ScalarField) -> Result<ScalarField> {
    f.require_min("field for laplacian", 3)?;
    Ok(laplacian_unchecked(f))
}

pub(crate) fn laplacian_unchecked(f: &ScalarField) -> ScalarField {
    ScalarField::from_fn(f.width(), f.height(), |x, y| {
        let (xi, yi) = (x as isize, y as isize);
        f.get_clamped(xi - 1, yi) + f.get_clamped(xi + 1, yi) + f.get_clamped(xi, yi - 1)
            + f.get_clamped(xi, yi + 1)
            - 4.0 * f.get(x, y)
    })
}

/// Mean over non-overlapping `factor x factor` blocks.
pub fn avg_pool(f: &ScalarField, factor: usize) -> Result<ScalarField> {
    if factor == 0 {
        return Err(Error::InvalidParameter("pooling factor must be positive".into()));
    }
    let (w, h) = f.shape();
    if w % factor != 0 || h % factor != 0 {
        return Err(Error::NotDivisible {
            dims: format!("{w}x{h}"),
            factor,
        });
    }
    if factor == 1 {
        return Ok(f.clone());
    }
    let area = (factor * factor) as f64;
    Ok(ScalarField::from_fn(w / factor, h / factor, |bx, by| {
        let mut sum = 0.0;
        for y in by * factor..(by + 1) * factor {
            for x in bx * factor..(bx + 1) * factor {
                sum += f.get(x, y);
            }
        }
        sum / area
    }))
}

/// Rescales to `[0, 1]` via `(v - min) / (max - min)`. A field whose range
/// is zero (or indistinguishable from rounding noise relative to its
/// magnitude) maps to all zeros.
pub fn minmax_normalize(f: &ScalarField) -> ScalarField {
    let (lo, hi) = (f.min(), f.max());
    let range = hi - lo;
    let scale = lo.abs().max(hi.abs());
    if f.is_empty() || range <= FLAT_RANGE_RTOL * scale {
        return ScalarField::zeros(f.width(), f.height());
    }
    f.map(|v| ((v - lo) / range).clamp(0.0, 1.0))
}

/// Normalized 1-D Gaussian taps for offsets `-radius..=radius`.
pub fn gaussian_kernel(sigma: f64, radius: usize) -> Vec<f64> {
    let taps: Vec<f64> = (-(radius as isize)..=radius as isize)
        .map(|i| (-((i * i) as f64) / (2.0 * sigma * sigma)).exp())
        .collect();
    let total: f64 = taps.iter().sum();
    taps.into_iter().map(|t| t / total).collect()
}

/// Separable Gaussian blur with replicate borders. `radius` defaults to
/// `ceil(3 sigma)`.
pub fn gaussian_blur(f: &ScalarField, sigma: f64, radius: Option<usize>) -> Result<ScalarField> {
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "blur sigma must be positive, got {sigma}"
        )));
    }
    let radius = radius.unwrap_or_else(|| (3.0 * sigma).ceil() as usize);
    let k = gaussian_kernel(sigma, radius);
    let r = radius as isize;
    let horizontal = ScalarField::from_fn(f.width(), f.height(), |x, y| {
        k.iter()
            .enumerate()
            .map(|(i, w)| w * f.get_clamped(x as isize + i as isize - r, y as isize))
            .sum()
    });
    Ok(ScalarField::from_fn(f.width(), f.height(), |x, y| {
        k.iter()
            .enumerate()
            .map(|(i, w)| w * horizontal.get_clamped(x as isize, y as isize + i as isize - r))
            .sum()
    }))
}
