//! Procedural test images.
//!
//! Everything here is seeded and reproducible. The "natural-like" textures
//! are smooth random fields (blobs, oriented waves, a little noise) that
//! stand in for photographs when none are available.

use std::f64::consts::PI;

use crate::error::Result;
use crate::evalkit::SplitMix64;
use crate::imagecore::RgbImage;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Orientation {
    Horizontal,
    Vertical,
}

impl Orientation {
    pub fn class_name(self) -> &'static str {
        match self {
            Orientation::Horizontal => "Horizontal",
            Orientation::Vertical => "Vertical",
        }
    }
}

/// One to three straight bands across the whole frame on a flat background.
pub fn line_composition(
    orientation: Orientation,
    width: usize,
    height: usize,
    seed: u64,
) -> Result<RgbImage> {
    let mut rng = SplitMix64::new(seed);
    let bg = rng.uniform(0.15, 0.4);
    let across = match orientation {
        Orientation::Horizontal => height,
        Orientation::Vertical => width,
    } as f64;
    let n = 1 + rng.below(3);
    let bands: Vec<(f64, f64, f64)> = (0..n)
        .map(|_| {
            let center = rng.uniform(0.15, 0.85) * across;
            let half = rng.uniform(0.02, 0.06) * across;
            let level = rng.uniform(0.65, 0.95);
            (center, half, level)
        })
        .collect();
    let tint = [rng.uniform(0.8, 1.0), rng.uniform(0.8, 1.0), rng.uniform(0.8, 1.0)];
    RgbImage::from_fn(width, height, |x, y| {
        let t = match orientation {
            Orientation::Horizontal => y,
            Orientation::Vertical => x,
        } as f64
            + 0.5;
        let mut v = bg;
        for &(c, half, level) in &bands {
            if (t - c).abs() <= half {
                v = v.max(level);
            }
        }
        tint.map(|k| k * v)
    })
}

pub fn step_edge(width: usize, height: usize, column: usize) -> Result<RgbImage> {
    RgbImage::from_fn(width, height, |x, _| [if x >= column { 1.0 } else { 0.0 }; 3])
}

pub fn disc(width: usize, height: usize, radius: f64) -> Result<RgbImage> {
    let (cx, cy) = ((width as f64 - 1.0) / 2.0, (height as f64 - 1.0) / 2.0);
    RgbImage::from_fn(width, height, |x, y| {
        let r = ((x as f64 - cx).powi(2) + (y as f64 - cy).powi(2)).sqrt();
        [if r <= radius { 0.9 } else { 0.1 }; 3]
    })
}

/// Isotropic Gaussian bump `exp(-r^2 / (2 sigma^2))` centered on the frame.
pub fn gaussian_bump(width: usize, height: usize, sigma: f64) -> Result<RgbImage> {
    let (cx, cy) = ((width as f64 - 1.0) / 2.0, (height as f64 - 1.0) / 2.0);
    RgbImage::from_fn(width, height, |x, y| {
        let r2 = (x as f64 - cx).powi(2) + (y as f64 - cy).powi(2);
        [(-r2 / (2.0 * sigma * sigma)).exp(); 3]
    })
}

pub fn natural_like(width: usize, height: usize, seed: u64) -> Result<RgbImage> {
    let mut rng = SplitMix64::new(seed);
    let (w, h) = (width as f64, height as f64);
    let blobs: Vec<([f64; 3], f64, f64, f64)> = (0..6)
        .map(|_| {
            let color = [rng.uniform(-0.4, 0.4), rng.uniform(-0.4, 0.4), rng.uniform(-0.4, 0.4)];
            (color, rng.uniform(0.0, w), rng.uniform(0.0, h), rng.uniform(0.08, 0.25) * w.min(h))
        })
        .collect();
    let waves: Vec<(f64, f64, f64, f64)> = (0..2)
        .map(|_| {
            let angle = rng.uniform(0.0, PI);
            let freq = rng.uniform(1.0, 4.0) * 2.0 * PI / w.max(h);
            (angle.cos() * freq, angle.sin() * freq, rng.uniform(0.0, 2.0 * PI), rng.uniform(0.03, 0.1))
        })
        .collect();
    let base = [rng.uniform(0.35, 0.65), rng.uniform(0.35, 0.65), rng.uniform(0.35, 0.65)];
    let mut noise = SplitMix64::new(seed ^ 0x5eed);
    RgbImage::from_fn(width, height, |x, y| {
        let (xf, yf) = (x as f64, y as f64);
        let mut px = base;
        for &(color, bx, by, s) in &blobs {
            let g = (-((xf - bx).powi(2) + (yf - by).powi(2)) / (2.0 * s * s)).exp();
            for k in 0..3 {
                px[k] += color[k] * g;
            }
        }
        let wave: f64 = waves
            .iter()
            .map(|&(kx, ky, phase, amp)| amp * (kx * xf + ky * yf + phase).sin())
            .sum();
        let grain = noise.uniform(-0.02, 0.02);
        px.map(|c| c + wave + grain)
    })
}

/// The bundled test set: five natural-like textures followed by five
/// geometric images, all 96x80.
pub fn standard_test_set() -> Result<Vec<(String, RgbImage)>> {
    let (w, h) = (96, 80);
    let mut out = Vec::with_capacity(10);
    for i in 0..5u64 {
        out.push((format!("natural{i}"), natural_like(w, h, 1000 + i)?));
    }
    out.push(("step".into(), step_edge(w, h, w / 2 - 7)?));
    out.push(("disc".into(), disc(w, h, 23.0)?));
    out.push(("bump".into(), gaussian_bump(w, h, 14.0)?));
    out.push(("hlines".into(), line_composition(Orientation::Horizontal, w, h, 7)?));
    out.push(("vlines".into(), line_composition(Orientation::Vertical, w, h, 8)?));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lines_are_constant_along_their_axis() {
        let img = line_composition(Orientation::Horizontal, 40, 30, 3).unwrap();
        for y in 0..30 {
            let row = img.pixel(0, y);
            assert!((0..40).all(|x| img.pixel(x, y) == row));
        }
        let img = line_composition(Orientation::Vertical, 40, 30, 3).unwrap();
        for x in 0..40 {
            let col = img.pixel(x, 0);
            assert!((0..30).all(|y| img.pixel(x, y) == col));
        }
    }

    #[test]
    fn seeded_and_distinct() {
        let a = natural_like(32, 32, 5).unwrap();
        assert_eq!(a, natural_like(32, 32, 5).unwrap());
        assert_ne!(a, natural_like(32, 32, 6).unwrap());
        let px = a.pixels();
        assert!(px.iter().flatten().all(|c| (0.0..=1.0).contains(c)));
    }

    #[test]
    fn bundled_set() {
        let set = standard_test_set().unwrap();
        assert_eq!(set.len(), 10);
        assert!(set.iter().all(|(_, im)| (im.width(), im.height()) == (96, 80)));
    }
}
