//! Image loading, grayscale conversion, resampling and the discrete
//! differential operators and edge detectors that feed the flow solver.

mod edges;
mod ops;

pub use edges::{canny_edges, sobel_edges, sobel_gradients, CannyThresholds, CANNY_SIGMA};
pub use ops::{
    avg_pool, central_gradients, gaussian_blur, gaussian_kernel, laplacian, minmax_normalize,
    resize_bilinear,
};
pub(crate) use ops::{diff_x, diff_y, laplacian_unchecked};

use std::ops::Deref;
use std::path::Path;

use image::ImageFormat;

use crate::error::{Error, Result};
use crate::field::ScalarField;

/// BT.601 luma weights.
pub const LUMA_WEIGHTS: [f64; 3] = [0.299, 0.587, 0.114];

/// Three-channel image with channel values in `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct RgbImage {
    width: usize,
    height: usize,
    pixels: Vec<[f64; 3]>,
}

impl RgbImage {
    pub fn new(width: usize, height: usize, pixels: Vec<[f64; 3]>) -> Result<Self> {
        if width < 2 || height < 2 {
            return Err(Error::TooSmall {
                what: "image",
                width,
                height,
                min: 2,
            });
        }
        if pixels.len() != width * height {
            return Err(Error::ShapeMismatch(format!(
                "{}x{} image needs {} pixels, got {}",
                width,
                height,
                width * height,
                pixels.len()
            )));
        }
        if pixels
            .iter()
            .flatten()
            .any(|c| !(0.0..=1.0).contains(c))
        {
            return Err(Error::InvalidParameter(
                "channel values must lie in [0, 1]".into(),
            ));
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    /// Builds an image from a function returning `(r, g, b)` per pixel.
    /// Values are clamped into `[0, 1]`.
    pub fn from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> [f64; 3],
    ) -> Result<Self> {
        let mut pixels = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                pixels.push(f(x, y).map(|c| c.clamp(0.0, 1.0)));
            }
        }
        Self::new(width, height, pixels)
    }

    /// Gray image replicated into all three channels.
    pub fn from_gray(gray: &ScalarField) -> Result<Self> {
        Self::from_fn(gray.width(), gray.height(), |x, y| [gray.get(x, y); 3])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixel(&self, x: usize, y: usize) -> [f64; 3] {
        self.pixels[y * self.width + x]
    }

    pub fn pixels(&self) -> &[[f64; 3]] {
        &self.pixels
    }

    pub fn flip_horizontal(&self) -> Self {
        let mut pixels = Vec::with_capacity(self.pixels.len());
        for y in 0..self.height {
            for x in (0..self.width).rev() {
                pixels.push(self.pixel(x, y));
            }
        }
        Self {
            width: self.width,
            height: self.height,
            pixels,
        }
    }

    /// Encodes as an 8-bit RGB PNG.
    pub fn save_png(&self, path: &Path) -> Result<()> {
        let bytes: Vec<u8> = self
            .pixels
            .iter()
            .flatten()
            .map(|&c| (c.clamp(0.0, 1.0) * 255.0).round() as u8)
            .collect();
        crate::io::write_png(path, &bytes, self.width, self.height, image::ColorType::Rgb8)
    }
}

/// Single-channel intensity image with values in `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct GrayImage(ScalarField);

impl GrayImage {
    pub fn new(field: ScalarField) -> Result<Self> {
        if field.values().iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::InvalidParameter(
                "gray values must lie in [0, 1]".into(),
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

    pub fn resize(&self, width: usize, height: usize) -> Result<Self> {
        // bilinear output stays within the input range, so [0, 1] holds
        resize_bilinear(&self.0, width, height).map(Self)
    }
}

impl Deref for GrayImage {
    type Target = ScalarField;

    fn deref(&self) -> &ScalarField {
        &self.0
    }
}

/// Decodes a PNG or JPEG file, mapping 8-bit channels to `[0, 1]`.
pub fn load_image(path: &Path) -> Result<RgbImage> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let format = image::guess_format(&bytes).map_err(|_| Error::UnsupportedFormat(path.into()))?;
    if !matches!(format, ImageFormat::Png | ImageFormat::Jpeg) {
        return Err(Error::UnsupportedFormat(path.into()));
    }
    let decoded = image::load_from_memory_with_format(&bytes, format).map_err(|e| {
        Error::CorruptData {
            path: path.into(),
            reason: e.to_string(),
        }
    })?;
    let rgb = decoded.to_rgb8();
    let (w, h) = (rgb.width() as usize, rgb.height() as usize);
    let pixels = rgb
        .pixels()
        .map(|p| p.0.map(|c| f64::from(c) / 255.0))
        .collect();
    RgbImage::new(w, h, pixels)
}

pub fn to_grayscale(img: &RgbImage) -> GrayImage {
    let [wr, wg, wb] = LUMA_WEIGHTS;
    let data = img
        .pixels
        .iter()
        .map(|&[r, g, b]| (wr * r + wg * g + wb * b).clamp(0.0, 1.0))
        .collect();
    GrayImage(ScalarField::new(img.width, img.height, data).expect("shape preserved"))
}
