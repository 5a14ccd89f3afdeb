use std::collections::VecDeque;

use super::ops::{gaussian_blur, minmax_normalize};
use crate::error::{Error, Result};
use crate::field::ScalarField;

/// Sample with ghost values linearly extrapolated past the border, so that
/// affine images have the same derivative everywhere.
fn extrapolated(f: &ScalarField, x: isize, y: isize) -> f64 {
    let (w, h) = (f.width() as isize, f.height() as isize);
    if x < 0 {
        2.0 * extrapolated(f, 0, y) - extrapolated(f, 1, y)
    } else if x >= w {
        2.0 * extrapolated(f, w - 1, y) - extrapolated(f, w - 2, y)
    } else if y < 0 {
        2.0 * f.get(x as usize, 0) - f.get(x as usize, 1)
    } else if y >= h {
        2.0 * f.get(x as usize, (h - 1) as usize) - f.get(x as usize, (h - 2) as usize)
    } else {
        f.get(x as usize, y as usize)
    }
}

/// Raw 3x3 Sobel responses `(Gx, Gy)`.
pub fn sobel_gradients(f: &ScalarField) -> Result<(ScalarField, ScalarField)> {
    f.require_min("image for sobel", 3)?;
    let (w, h) = f.shape();
    let mut gx = ScalarField::zeros(w, h);
    let mut gy = ScalarField::zeros(w, h);
    for y in 0..h {
        for x in 0..w {
            let p = |dx: isize, dy: isize| extrapolated(f, x as isize + dx, y as isize + dy);
            let sx = (p(1, -1) + 2.0 * p(1, 0) + p(1, 1)) - (p(-1, -1) + 2.0 * p(-1, 0) + p(-1, 1));
            let sy = (p(-1, 1) + 2.0 * p(0, 1) + p(1, 1)) - (p(-1, -1) + 2.0 * p(0, -1) + p(1, -1));
            gx.set(x, y, sx);
            gy.set(x, y, sy);
        }
    }
    Ok((gx, gy))
}

/// Sobel gradient magnitude, min-max normalized to `[0, 1]`.
pub fn sobel_edges(f: &ScalarField) -> Result<ScalarField> {
    let (gx, gy) = sobel_gradients(f)?;
    let mag = gx.zip_map(&gy, f64::hypot)?;
    Ok(minmax_normalize(&mag))
}

/// Hysteresis thresholds as fractions of the peak gradient magnitude.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CannyThresholds {
    pub low_frac: f64,
    pub high_frac: f64,
}

impl Default for CannyThresholds {
    fn default() -> Self {
        Self {
            low_frac: 0.1,
            high_frac: 0.3,
        }
    }
}

impl CannyThresholds {
    pub fn validate(&self) -> Result<()> {
        let ok = self.low_frac > 0.0 && self.low_frac < self.high_frac && self.high_frac <= 1.0;
        if !ok {
            return Err(Error::InvalidParameter(format!(
                "canny thresholds need 0 < low < high <= 1, got low={} high={}",
                self.low_frac, self.high_frac
            )));
        }
        Ok(())
    }
}

pub const CANNY_SIGMA: f64 = 1.4;
const CANNY_RADIUS: usize = 2;

/// Binary Canny edge map: 5x5 Gaussian smoothing, Sobel gradients,
/// non-maximum suppression over 4 direction bins, double threshold, and
/// 8-connected hysteresis from strong pixels.
pub fn canny_edges(f: &ScalarField, thresholds: CannyThresholds) -> Result<ScalarField> {
    thresholds.validate()?;
    f.require_min("image for canny", 3)?;
    let smoothed = gaussian_blur(f, CANNY_SIGMA, Some(CANNY_RADIUS))?;
    let (gx, gy) = sobel_gradients(&smoothed)?;
    let mag = gx.zip_map(&gy, f64::hypot)?;
    let (w, h) = mag.shape();
    let peak = mag.max();
    if !(peak > 0.0) {
        return Ok(ScalarField::zeros(w, h));
    }

    let at = |x: isize, y: isize| -> f64 {
        if x < 0 || y < 0 || x >= w as isize || y >= h as isize {
            0.0
        } else {
            mag.get(x as usize, y as usize)
        }
    };

    let high = thresholds.high_frac * peak;
    let low = thresholds.low_frac * peak;
    // 0 = suppressed, 1 = weak, 2 = strong
    let mut class = vec![0u8; w * h];
    for y in 0..h {
        for x in 0..w {
            let m = mag.get(x, y);
            if m < low {
                continue;
            }
            let (dx, dy) = direction_bin(gx.get(x, y), gy.get(x, y));
            let (xi, yi) = (x as isize, y as isize);
            if m >= at(xi - dx, yi - dy) && m > at(xi + dx, yi + dy) {
                class[y * w + x] = if m >= high { 2 } else { 1 };
            }
        }
    }

    let mut out = vec![0.0; w * h];
    let mut queue: VecDeque<usize> = (0..w * h).filter(|&i| class[i] == 2).collect();
    for &i in &queue {
        out[i] = 1.0;
    }
    while let Some(i) = queue.pop_front() {
        let (x, y) = ((i % w) as isize, (i / w) as isize);
        for dy in -1..=1 {
            for dx in -1..=1 {
                let (nx, ny) = (x + dx, y + dy);
                if nx < 0 || ny < 0 || nx >= w as isize || ny >= h as isize {
                    continue;
                }
                let j = ny as usize * w + nx as usize;
                if class[j] >= 1 && out[j] == 0.0 {
                    out[j] = 1.0;
                    queue.push_back(j);
                }
            }
        }
    }
    ScalarField::new(w, h, out)
}

/// Neighbor offset along the gradient, quantized to 0/45/90/135 degrees.
/// The y axis points down.
fn direction_bin(gx: f64, gy: f64) -> (isize, isize) {
    let mut angle = gy.atan2(gx).to_degrees();
    if angle < 0.0 {
        angle += 180.0;
    }
    if !(22.5..157.5).contains(&angle) {
        (1, 0)
    } else if angle < 67.5 {
        (1, 1)
    } else if angle < 112.5 {
        (0, 1)
    } else {
        (-1, 1)
    }
}
