//! PNG codecs for depth maps, RGB frames and label masks.

use std::path::Path;

use image::{DynamicImage, GrayImage, ImageBuffer, ImageReader, Luma, RgbImage};

use super::depth_map::{DepthKind, DepthMap};
use crate::error::{Error, Result};

/// KITTI convention: meters = raw / 256.
pub const DEFAULT_PNG_DEPTH_DIVISOR: f64 = 256.0;

fn decode(path: &Path) -> Result<DynamicImage> {
    let reader = ImageReader::open(path).map_err(|e| Error::io(path, e))?;
    let reader = reader.with_guessed_format().map_err(|e| Error::io(path, e))?;
    reader.decode().map_err(|source| Error::Image {
        path: path.to_path_buf(),
        source,
    })
}

fn encode_err(path: &Path, source: image::ImageError) -> Error {
    match source {
        image::ImageError::IoError(e) => Error::io(path, e),
        source => Error::Image {
            path: path.to_path_buf(),
            source,
        },
    }
}

fn format_err(path: &Path, reason: impl Into<String>) -> Error {
    Error::Format {
        what: "png",
        path: path.to_path_buf(),
        reason: reason.into(),
    }
}

/// Reads a 16-bit single-channel depth PNG: depth = raw / `divisor`, raw 0 invalid.
pub fn read_depth_png16(path: impl AsRef<Path>, divisor: f64, kind: DepthKind) -> Result<DepthMap> {
    let path = path.as_ref();
    if !(divisor.is_finite() && divisor > 0.0) {
        return Err(Error::validation(format!("png depth divisor {divisor} must be positive")));
    }
    let img = match decode(path)? {
        DynamicImage::ImageLuma16(img) => img,
        other => {
            let color = other.color();
            let reason = if color.channel_count() != 1 {
                format!("expected 1 channel, found {} ({color:?})", color.channel_count())
            } else {
                format!("expected 16-bit samples, found {color:?}")
            };
            return Err(format_err(path, reason));
        }
    };
    let (w, h) = img.dimensions();
    let values = img
        .into_raw()
        .into_iter()
        .map(|raw| f64::from(raw) / divisor)
        .collect();
    DepthMap::from_values(w, h, values, kind)
}

/// Writes a 16-bit depth PNG with raw = round(depth * `divisor`).
///
/// Invalid pixels become 0. Valid depths that quantize to 0 or exceed
/// `65535 / divisor` are rejected.
pub fn write_depth_png16(map: &DepthMap, path: impl AsRef<Path>, divisor: f64) -> Result<()> {
    let path = path.as_ref();
    if !(divisor.is_finite() && divisor > 0.0) {
        return Err(Error::validation(format!("png depth divisor {divisor} must be positive")));
    }
    let mut raw = Vec::with_capacity(map.len());
    for (i, &v) in map.values().iter().enumerate() {
        if !map.is_valid(i) {
            raw.push(0u16);
            continue;
        }
        let q = (v * divisor).round();
        if !(1.0..=f64::from(u16::MAX)).contains(&q) {
            return Err(Error::validation(format!(
                "depth {v} at pixel {i} not representable in 16-bit png with divisor {divisor}"
            )));
        }
        raw.push(q as u16);
    }
    let img: ImageBuffer<Luma<u16>, Vec<u16>> = ImageBuffer::from_raw(map.width(), map.height(), raw)
        .expect("buffer length matches dimensions");
    img.save(path).map_err(|e| encode_err(path, e))
}

pub fn read_rgb(path: impl AsRef<Path>) -> Result<RgbImage> {
    let path = path.as_ref();
    Ok(decode(path)?.to_rgb8())
}

pub fn write_rgb(img: &RgbImage, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    img.save(path).map_err(|e| encode_err(path, e))
}

/// Reads a single-channel 8- or 16-bit mask; non-zero samples are set.
pub fn read_binary_mask(path: impl AsRef<Path>) -> Result<(u32, u32, Vec<bool>)> {
    let path = path.as_ref();
    match decode(path)? {
        DynamicImage::ImageLuma8(img) => {
            let (w, h) = img.dimensions();
            Ok((w, h, img.into_raw().into_iter().map(|v| v != 0).collect()))
        }
        DynamicImage::ImageLuma16(img) => {
            let (w, h) = img.dimensions();
            Ok((w, h, img.into_raw().into_iter().map(|v| v != 0).collect()))
        }
        other => Err(format_err(path, format!("mask must be single-channel, found {:?}", other.color()))),
    }
}

/// Writes an 8-bit mask: 255 where set, 0 elsewhere.
pub fn write_binary_mask(width: u32, height: u32, mask: &[bool], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let raw: Vec<u8> = mask.iter().map(|&m| if m { 255 } else { 0 }).collect();
    let img = GrayImage::from_raw(width, height, raw)
        .ok_or_else(|| Error::validation("mask length does not match dimensions"))?;
    img.save(path).map_err(|e| encode_err(path, e))
}

/// Reads single-channel integer labels (8- or 16-bit).
pub fn read_labels(path: impl AsRef<Path>) -> Result<(u32, u32, Vec<u16>)> {
    let path = path.as_ref();
    match decode(path)? {
        DynamicImage::ImageLuma8(img) => {
            let (w, h) = img.dimensions();
            Ok((w, h, img.into_raw().into_iter().map(u16::from).collect()))
        }
        DynamicImage::ImageLuma16(img) => {
            let (w, h) = img.dimensions();
            Ok((w, h, img.into_raw()))
        }
        other => Err(format_err(path, format!("label image must be single-channel, found {:?}", other.color()))),
    }
}

pub fn write_labels(width: u32, height: u32, labels: &[u16], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let img: ImageBuffer<Luma<u16>, Vec<u16>> = ImageBuffer::from_raw(width, height, labels.to_vec())
        .ok_or_else(|| Error::validation("label length does not match dimensions"))?;
    img.save(path).map_err(|e| encode_err(path, e))
}
