//! On-disk formats.
//!
//! Scalar fields are written as 8-bit grayscale PNG or as raw
//! little-endian `f32` planes behind a 16-byte header:
//!
//! | bytes | FCF1 (one plane)   | FCF2 (multi-plane)   |
//! |-------|--------------------|----------------------|
//! | 0..4  | `b"FCF1"`          | `b"FCF2"`            |
//! | 4..8  | width (u32 LE)     | width (u32 LE)       |
//! | 8..12 | height (u32 LE)    | height (u32 LE)      |
//! | 12..16| reserved, 0        | channel count (u32)  |
//!
//! followed by the planes, row-major. Flow fields use FCF2 with two
//! channels (u then v); the assembled input tensor uses three (S, u, v).

use std::fs;
use std::io::Write;
use std::path::Path;

use image::codecs::png::{CompressionType, FilterType, PngEncoder};
use image::{ColorType, ImageEncoder};

use crate::error::{Error, Result};
use crate::field::{FlowField, ScalarField};

pub const FCF1_MAGIC: &[u8; 4] = b"FCF1";
pub const FCF2_MAGIC: &[u8; 4] = b"FCF2";
const HEADER_LEN: usize = 16;

/// Writes `bytes` to a sibling temp file, then renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let file_name = path
        .file_name()
        .ok_or_else(|| Error::InvalidParameter(format!("not a file path: {}", path.display())))?;
    let mut tmp_name = std::ffi::OsString::from(".");
    tmp_name.push(file_name);
    tmp_name.push(".tmp");
    let tmp = path.with_file_name(tmp_name);
    let mut file = fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
    file.write_all(bytes).map_err(|e| Error::io(&tmp, e))?;
    file.sync_all().map_err(|e| Error::io(&tmp, e))?;
    drop(file);
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

/// PNG encoding with a pinned encoder configuration so output bytes are
/// reproducible.
pub fn encode_png(raw: &[u8], width: usize, height: usize, color: ColorType) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    PngEncoder::new_with_quality(&mut out, CompressionType::Default, FilterType::NoFilter)
        .write_image(raw, width as u32, height as u32, color.into())
        .map_err(|e| Error::InvalidParameter(format!("png encoding failed: {e}")))?;
    Ok(out)
}

pub(crate) fn write_png(
    path: &Path,
    raw: &[u8],
    width: usize,
    height: usize,
    color: ColorType,
) -> Result<()> {
    write_atomic(path, &encode_png(raw, width, height, color)?)
}

/// Field values clamped to `[0, 1]`, scaled by 255 and rounded.
pub fn field_to_gray8(f: &ScalarField) -> Vec<u8> {
    f.values()
        .iter()
        .map(|&v| (v.clamp(0.0, 1.0) * 255.0).round() as u8)
        .collect()
}

pub fn write_gray_png(path: &Path, f: &ScalarField) -> Result<()> {
    write_png(path, &field_to_gray8(f), f.width(), f.height(), ColorType::L8)
}

fn header(magic: &[u8; 4], width: usize, height: usize, last: u32) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN);
    out.extend_from_slice(magic);
    out.extend_from_slice(&(width as u32).to_le_bytes());
    out.extend_from_slice(&(height as u32).to_le_bytes());
    out.extend_from_slice(&last.to_le_bytes());
    out
}

fn push_plane(out: &mut Vec<u8>, f: &ScalarField) {
    for &v in f.values() {
        out.extend_from_slice(&(v as f32).to_le_bytes());
    }
}

pub fn encode_fcf1(f: &ScalarField) -> Vec<u8> {
    let mut out = header(FCF1_MAGIC, f.width(), f.height(), 0);
    push_plane(&mut out, f);
    out
}

/// Encodes equally shaped planes as FCF2.
pub fn encode_fcf2(planes: &[&ScalarField]) -> Result<Vec<u8>> {
    let first = planes
        .first()
        .ok_or(Error::Empty("FCF2 needs at least one plane"))?;
    if planes.iter().any(|p| p.shape() != first.shape()) {
        return Err(Error::ShapeMismatch("FCF2 planes differ in shape".into()));
    }
    let mut out = header(FCF2_MAGIC, first.width(), first.height(), planes.len() as u32);
    for p in planes {
        push_plane(&mut out, p);
    }
    Ok(out)
}

pub fn write_fcf1(path: &Path, f: &ScalarField) -> Result<()> {
    write_atomic(path, &encode_fcf1(f))
}

pub fn write_flow(path: &Path, flow: &FlowField) -> Result<()> {
    write_atomic(path, &encode_fcf2(&[&flow.u, &flow.v])?)
}

/// A decoded raw float file.
#[derive(Clone, Debug, PartialEq)]
pub enum RawFields {
    Single(ScalarField),
    Planes(Vec<ScalarField>),
}

impl RawFields {
    pub fn into_planes(self) -> Vec<ScalarField> {
        match self {
            RawFields::Single(f) => vec![f],
            RawFields::Planes(p) => p,
        }
    }
}

pub fn has_raw_magic(bytes: &[u8]) -> bool {
    bytes.len() >= 4 && (&bytes[..4] == FCF1_MAGIC || &bytes[..4] == FCF2_MAGIC)
}

pub fn decode_raw(bytes: &[u8], path: &Path) -> Result<RawFields> {
    let corrupt = |reason: String| Error::CorruptData {
        path: path.into(),
        reason,
    };
    if bytes.len() < HEADER_LEN {
        return Err(corrupt(format!("header needs {HEADER_LEN} bytes, file has {}", bytes.len())));
    }
    let word = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().unwrap()) as usize;
    let (width, height, last) = (word(4), word(8), word(12));
    let channels = match &bytes[..4] {
        m if m == FCF1_MAGIC => {
            if last != 0 {
                return Err(corrupt(format!("FCF1 reserved word must be 0, got {last}")));
            }
            1
        }
        m if m == FCF2_MAGIC => {
            if last == 0 {
                return Err(corrupt("FCF2 channel count is 0".into()));
            }
            last
        }
        _ => return Err(corrupt("missing FCF1/FCF2 magic".into())),
    };
    if width == 0 || height == 0 {
        return Err(corrupt(format!("empty grid {width}x{height}")));
    }
    let plane = width
        .checked_mul(height)
        .ok_or_else(|| corrupt("dimensions overflow".into()))?;
    let expected = plane
        .checked_mul(channels)
        .and_then(|n| n.checked_mul(4))
        .and_then(|n| n.checked_add(HEADER_LEN))
        .ok_or_else(|| corrupt("dimensions overflow".into()))?;
    if bytes.len() != expected {
        return Err(corrupt(format!(
            "{width}x{height}x{channels} needs {expected} bytes, file has {}",
            bytes.len()
        )));
    }
    let floats: Vec<f64> = bytes[HEADER_LEN..]
        .chunks_exact(4)
        .map(|c| f64::from(f32::from_le_bytes(c.try_into().unwrap())))
        .collect();
    let mut planes = Vec::with_capacity(channels);
    for chunk in floats.chunks_exact(plane) {
        planes.push(ScalarField::new(width, height, chunk.to_vec()).map_err(|e| corrupt(e.to_string()))?);
    }
    if &bytes[..4] == FCF1_MAGIC {
        Ok(RawFields::Single(planes.pop().expect("one plane")))
    } else {
        Ok(RawFields::Planes(planes))
    }
}

pub fn read_raw(path: &Path) -> Result<RawFields> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_raw(&bytes, path)
}

/// Reads a two-channel FCF2 flow file.
pub fn read_flow(path: &Path) -> Result<FlowField> {
    match read_raw(path)? {
        RawFields::Planes(mut p) if p.len() == 2 => {
            let v = p.pop().unwrap();
            let u = p.pop().unwrap();
            FlowField::new(u, v)
        }
        other => Err(Error::CorruptData {
            path: path.into(),
            reason: format!(
                "expected a 2-channel FCF2 flow, found {} plane(s)",
                other.into_planes().len()
            ),
        }),
    }
}
