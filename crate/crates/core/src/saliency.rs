//! Saliency maps: three deterministic baselines (uniform, center bias,
//! edge based) and a loader for maps produced by an external model.

use std::ops::Deref;
use std::path::Path;

use image::ImageFormat;

use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::imagecore::{
    central_gradients, gaussian_blur, minmax_normalize, resize_bilinear, sobel_edges, to_grayscale,
    GrayImage, RgbImage,
};
use crate::io::{decode_raw, has_raw_magic};

pub const UNIFORM_LEVEL: f64 = 0.5;
pub const DEFAULT_CENTER_SIGMA_FRAC: f64 = 0.5;
pub const DEFAULT_EDGE_BLUR_SIGMA: f64 = 2.0;

/// Fixation likelihood per sample, every value in `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct SaliencyMap(ScalarField);

impl SaliencyMap {
    pub fn new(field: ScalarField) -> Result<Self> {
        if field.values().iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::InvalidParameter(
                "saliency values must lie in [0, 1]".into(),
            ));
        }
        Ok(Self(field))
    }

    pub fn field(&self) -> &ScalarField {
        &self.0
    }

    pub fn into_field(self) -> ScalarField {
        self.0
    }

    /// Bilinear resize; the output stays inside `[0, 1]`.
    pub fn resize(&self, width: usize, height: usize) -> Result<Self> {
        resize_bilinear(&self.0, width, height).map(Self)
    }
}

impl Deref for SaliencyMap {
    type Target = ScalarField;

    fn deref(&self) -> &ScalarField {
        &self.0
    }
}

fn check_size(w: usize, h: usize) -> Result<()> {
    if w < 2 || h < 2 {
        return Err(Error::TooSmall {
            what: "saliency map",
            width: w,
            height: h,
            min: 2,
        });
    }
    Ok(())
}

/// Constant map. Its gradient is exactly zero, so the saliency-enhanced
/// flow collapses onto the baseline.
pub fn uniform_saliency(w: usize, h: usize) -> Result<SaliencyMap> {
    check_size(w, h)?;
    Ok(SaliencyMap(ScalarField::filled(w, h, UNIFORM_LEVEL)))
}

/// Isotropic Gaussian around the grid center with
/// `sigma = sigma_frac * min(w, h)`.
pub fn center_bias_saliency(w: usize, h: usize, sigma_frac: f64) -> Result<SaliencyMap> {
    check_size(w, h)?;
    if !(sigma_frac > 0.0) || !sigma_frac.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "center-bias sigma fraction must be positive, got {sigma_frac}"
        )));
    }
    let sigma = sigma_frac * w.min(h) as f64;
    let (cx, cy) = ((w - 1) as f64 / 2.0, (h - 1) as f64 / 2.0);
    Ok(SaliencyMap(ScalarField::from_fn(w, h, |x, y| {
        let (dx, dy) = (x as f64 - cx, y as f64 - cy);
        (-(dx * dx + dy * dy) / (2.0 * sigma * sigma)).exp()
    })))
}

/// Gaussian-blurred Sobel magnitude, min-max normalized.
pub fn edge_saliency(img: &GrayImage, blur_sigma: f64) -> Result<SaliencyMap> {
    img.require_min("image for edge saliency", 3)?;
    let edges = sobel_edges(img)?;
    let blurred = gaussian_blur(&edges, blur_sigma, None)?;
    Ok(SaliencyMap(minmax_normalize(&blurred)))
}

/// Reads a saliency map from a grayscale PNG (values / 255) or an FCF1 raw
/// float file (min-max normalized if any value lies outside `[0, 1]`), then
/// resizes it bilinearly to `w x h`.
pub fn load_saliency(path: &Path, w: usize, h: usize) -> Result<SaliencyMap> {
    check_size(w, h)?;
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let field = if has_raw_magic(&bytes) {
        let mut planes = decode_raw(&bytes, path)?.into_planes();
        if planes.len() != 1 {
            return Err(Error::CorruptData {
                path: path.into(),
                reason: format!("saliency file has {} planes, expected 1", planes.len()),
            });
        }
        let f = planes.pop().unwrap();
        if f.values().iter().any(|v| !(0.0..=1.0).contains(v)) {
            minmax_normalize(&f)
        } else {
            f
        }
    } else {
        decode_png_gray(&bytes, path)?
    };
    if field.width() < 2 || field.height() < 2 {
        return Err(Error::TooSmall {
            what: "stored saliency map",
            width: field.width(),
            height: field.height(),
            min: 2,
        });
    }
    log::debug!(
        "saliency {}: stored at {}x{}, resampled to {w}x{h}",
        path.display(),
        field.width(),
        field.height()
    );
    SaliencyMap(field).resize(w, h)
}

fn decode_png_gray(bytes: &[u8], path: &Path) -> Result<ScalarField> {
    match image::guess_format(bytes) {
        Ok(ImageFormat::Png) => {}
        _ => return Err(Error::UnsupportedFormat(path.into())),
    }
    let img = image::load_from_memory_with_format(bytes, ImageFormat::Png).map_err(|e| {
        Error::CorruptData {
            path: path.into(),
            reason: e.to_string(),
        }
    })?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    if img.color().has_color() {
        let rgb = img.to_rgb8();
        let pixels = rgb
            .pixels()
            .map(|p| p.0.map(|c| f64::from(c) / 255.0))
            .collect();
        return Ok(to_grayscale(&RgbImage::new(w, h, pixels)?).into_field());
    }
    let gray = img.to_luma16();
    ScalarField::new(
        w,
        h,
        gray.pixels().map(|p| f64::from(p.0[0]) / 65535.0).collect(),
    )
}

/// `(dS/dx, dS/dy)` by central differences.
pub fn saliency_gradient(s: &SaliencyMap) -> Result<(ScalarField, ScalarField)> {
    central_gradients(&s.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::write_fcf1;
    use proptest::prelude::*;

    #[test]
    fn uniform_map() {
        let s = uniform_saliency(4, 4).unwrap();
        assert!(s.values().iter().all(|&v| v == 0.5));
        let (sx, sy) = saliency_gradient(&s).unwrap();
        assert!(sx.values().iter().chain(sy.values()).all(|&v| v == 0.0));
        let s = uniform_saliency(7, 3).unwrap();
        assert_eq!((s.min(), s.max()), (0.5, 0.5));
        assert!(uniform_saliency(1, 5).is_err());
    }

    #[test]
    fn center_bias_values() {
        let s = center_bias_saliency(5, 5, 0.3).unwrap();
        assert_eq!(s.get(2, 2), 1.0);
        // sigma = 1.5 on a 5x5 grid; a sample 1.5 from center does not
        // exist, so evaluate on 11x11 with sigma_frac chosen for sigma = 2
        let s = center_bias_saliency(11, 11, 2.0 / 11.0).unwrap();
        assert!((s.get(7, 5) - (-0.5f64).exp()).abs() < 1e-15);
        assert!((s.get(7, 5) - 0.6065306597126334).abs() < 1e-15);

        // 4x4 corner: d^2 = 2 * 1.5^2 = 4.5, sigma = 1.2
        let s = center_bias_saliency(4, 4, 0.3).unwrap();
        let expected = (-4.5f64 / (2.0 * 1.44)).exp();
        assert!((s.get(0, 0) - expected).abs() < 1e-15);
        assert!((s.get(0, 0) - 0.2096113871510978).abs() < 1e-12);
        assert!(center_bias_saliency(4, 4, 0.0).is_err());
        assert!(center_bias_saliency(4, 4, -1.0).is_err());
    }

    #[test]
    fn center_bias_gradient_antisymmetric() {
        let s = center_bias_saliency(21, 15, 0.3).unwrap();
        let (sx, _) = saliency_gradient(&s).unwrap();
        for y in 1..14 {
            for x in 1..20 {
                assert!((sx.get(x, y) + sx.get(20 - x, y)).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn edge_saliency_cases() {
        let flat = GrayImage::new(ScalarField::filled(12, 12, 0.3)).unwrap();
        let s = edge_saliency(&flat, 2.0).unwrap();
        assert!(s.values().iter().all(|&v| v == 0.0));

        let k = 16;
        let step = GrayImage::new(ScalarField::from_fn(32, 20, |x, _| {
            if x >= k {
                0.8
            } else {
                0.1
            }
        }))
        .unwrap();
        let s = edge_saliency(&step, 2.0).unwrap();
        let row = 10;
        let argmax = (0..32)
            .max_by(|&a, &b| s.get(a, row).total_cmp(&s.get(b, row)))
            .unwrap();
        assert!(argmax == k - 1 || argmax == k, "argmax {argmax}");
        assert_eq!(s.max(), 1.0);

        // composition of the primitives
        let oracle = minmax_normalize(&gaussian_blur(&sobel_edges(&step).unwrap(), 2.0, None).unwrap());
        assert_eq!(s.field(), &oracle);
    }

    #[test]
    fn edge_saliency_shift_covariant() {
        let make = |k: usize| {
            GrayImage::new(ScalarField::from_fn(40, 12, |x, _| if x >= k { 1.0 } else { 0.0 }))
                .unwrap()
        };
        let argmax = |s: &SaliencyMap| {
            (0..40)
                .map(|x| (x, s.get(x, 6)))
                .fold((0, f64::MIN), |best, c| if c.1 > best.1 { c } else { best })
                .0
        };
        let base = argmax(&edge_saliency(&make(15), 2.0).unwrap());
        for shift in 1..6 {
            let moved = argmax(&edge_saliency(&make(15 + shift), 2.0).unwrap());
            assert_eq!(moved, base + shift);
        }
    }

    #[test]
    fn load_png_and_raw() {
        let dir = tempfile::tempdir().unwrap();
        let png = dir.path().join("s.png");
        image::GrayImage::from_pixel(5, 3, image::Luma([255])).save(&png).unwrap();
        let s = load_saliency(&png, 8, 8).unwrap();
        assert_eq!(s.shape(), (8, 8));
        assert!(s.values().iter().all(|&v| v == 1.0));

        let f = ScalarField::from_fn(4, 4, |x, y| (x + y) as f64 / 8.0);
        let raw = dir.path().join("s.fcf");
        write_fcf1(&raw, &f).unwrap();
        assert_eq!(load_saliency(&raw, 4, 4).unwrap().field(), &f);

        let big = f.map(|v| v * 10.0 / 0.75);
        write_fcf1(&raw, &big).unwrap();
        let s = load_saliency(&raw, 4, 4).unwrap();
        for (a, b) in s.values().iter().zip(big.values()) {
            // min is 0, so normalization divides by the max
            assert!((a - b / big.max()).abs() < 1e-6);
        }

        assert!(matches!(
            load_saliency(&dir.path().join("nope.png"), 4, 4),
            Err(Error::FileNotFound(_))
        ));
        let bad = dir.path().join("bad.fcf");
        std::fs::write(&bad, b"FCF1\x04\x00\x00\x00").unwrap();
        assert!(matches!(load_saliency(&bad, 4, 4), Err(Error::CorruptData { .. })));
        assert!(load_saliency(&raw, 1, 4).is_err());
    }

    proptest! {
        #[test]
        fn center_bias_flip_symmetric(w in 2usize..20, h in 2usize..20, frac in 0.05f64..1.0) {
            let s = center_bias_saliency(w, h, frac).unwrap();
            prop_assert!(s.values().iter().all(|v| (0.0..=1.0).contains(v)));
            let (fh, fv) = (s.flip_horizontal(), s.flip_vertical());
            for (a, b) in s.values().iter().zip(fh.values()) {
                prop_assert!((a - b).abs() < 1e-12);
            }
            for (a, b) in s.values().iter().zip(fv.values()) {
                prop_assert!((a - b).abs() < 1e-12);
            }
        }

        #[test]
        fn edge_saliency_in_unit_range(v in proptest::collection::vec(0.0f64..1.0, 64)) {
            let img = GrayImage::new(ScalarField::new(8, 8, v).unwrap()).unwrap();
            let s = edge_saliency(&img, 2.0).unwrap();
            prop_assert!(s.values().iter().all(|v| (0.0..=1.0).contains(v)));
        }
    }
}
