//! Portable Float Map (`Pf`, single channel) reader and writer.
//!
//! Rows are stored bottom-to-top. A negative scale marks little-endian
//! samples, a positive one big-endian.

use std::fs;
use std::path::Path;

use super::depth_map::{is_valid_depth, DepthKind, DepthMap};
use crate::error::{Error, Result};

fn malformed(path: &Path, reason: impl Into<String>) -> Error {
    Error::Format {
        what: "pfm",
        path: path.to_path_buf(),
        reason: reason.into(),
    }
}

/// Reads a grayscale PFM. Non-finite and non-positive samples are invalid.
pub fn read_depth_pfm(path: impl AsRef<Path>, kind: DepthKind) -> Result<DepthMap> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_pfm(&bytes, kind).map_err(|reason| malformed(path, reason))
}

/// Writes a little-endian grayscale PFM.
///
/// Samples are narrowed to `f32`. Invalid pixels whose stored value is still
/// finite and positive are written as NaN so the mask survives a round trip.
pub fn write_depth_pfm(map: &DepthMap, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_pfm(map)).map_err(|e| Error::io(path, e))
}

pub(crate) fn encode_pfm(map: &DepthMap) -> Vec<u8> {
    let (w, h) = (map.width() as usize, map.height() as usize);
    let mut out = format!("Pf\n{} {}\n-1.0\n", w, h).into_bytes();
    out.reserve(w * h * 4);
    for row in (0..h).rev() {
        for col in 0..w {
            let i = row * w + col;
            let v = map.values()[i];
            let sample = if !map.is_valid(i) && is_valid_depth(v) {
                f32::NAN
            } else {
                v as f32
            };
            out.extend_from_slice(&sample.to_le_bytes());
        }
    }
    out
}

struct Header {
    width: usize,
    height: usize,
    little_endian: bool,
    data_offset: usize,
}

// Reads one whitespace-terminated token starting at `pos`; the single
// terminating whitespace byte is consumed.
fn token(bytes: &[u8], pos: &mut usize) -> Result<String, String> {
    while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
        *pos += 1;
    }
    let start = *pos;
    while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() {
        *pos += 1;
    }
    if start == *pos {
        return Err("truncated header".into());
    }
    let tok = std::str::from_utf8(&bytes[start..*pos])
        .map_err(|_| "non-ascii header".to_string())?
        .to_string();
    if *pos >= bytes.len() {
        return Err("header not terminated".into());
    }
    *pos += 1;
    Ok(tok)
}

fn parse_header(bytes: &[u8]) -> Result<Header, String> {
    let mut pos = 0;
    let magic = token(bytes, &mut pos)?;
    match magic.as_str() {
        "Pf" => {}
        "PF" => return Err("3-channel PF maps are not depth maps".into()),
        other => return Err(format!("bad magic {other:?}")),
    }
    let width: usize = token(bytes, &mut pos)?
        .parse()
        .map_err(|_| "bad width".to_string())?;
    let height: usize = token(bytes, &mut pos)?
        .parse()
        .map_err(|_| "bad height".to_string())?;
    let scale: f64 = token(bytes, &mut pos)?
        .parse()
        .map_err(|_| "bad scale".to_string())?;
    if width == 0 || height == 0 {
        return Err(format!("degenerate size {width}x{height}"));
    }
    if scale == 0.0 || !scale.is_finite() {
        return Err(format!("scale {scale} must be non-zero"));
    }
    Ok(Header {
        width,
        height,
        little_endian: scale < 0.0,
        data_offset: pos,
    })
}

pub(crate) fn decode_pfm(bytes: &[u8], kind: DepthKind) -> Result<DepthMap, String> {
    let header = parse_header(bytes)?;
    let n = header
        .width
        .checked_mul(header.height)
        .ok_or_else(|| "size overflow".to_string())?;
    let payload = &bytes[header.data_offset..];
    if payload.len() != n * 4 {
        return Err(format!(
            "payload has {} bytes, expected {} ({}x{} f32)",
            payload.len(),
            n * 4,
            header.width,
            header.height
        ));
    }
    let mut values = vec![0.0f64; n];
    for (k, chunk) in payload.chunks_exact(4).enumerate() {
        let raw = [chunk[0], chunk[1], chunk[2], chunk[3]];
        let v = if header.little_endian {
            f32::from_le_bytes(raw)
        } else {
            f32::from_be_bytes(raw)
        };
        let file_row = k / header.width;
        let col = k % header.width;
        let row = header.height - 1 - file_row;
        values[row * header.width + col] = f64::from(v);
    }
    DepthMap::from_values(header.width as u32, header.height as u32, values, kind)
        .map_err(|e| e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn be_file(w: usize, h: usize, rows_bottom_up: &[f32]) -> Vec<u8> {
        let mut out = format!("Pf\n{w} {h}\n1.0\n").into_bytes();
        for v in rows_bottom_up {
            out.extend_from_slice(&v.to_be_bytes());
        }
        out
    }

    #[test]
    fn rows_are_bottom_up() {
        let m = DepthMap::from_values(2, 2, vec![1.0, 2.0, 3.0, 4.0], DepthKind::GroundTruth).unwrap();
        let bytes = encode_pfm(&m);
        let header_len = "Pf\n2 2\n-1.0\n".len();
        let first = f32::from_le_bytes(bytes[header_len..header_len + 4].try_into().unwrap());
        assert_eq!(first, 3.0);
    }

    #[test]
    fn negative_scale_is_little_endian_positive_is_big() {
        let m = DepthMap::from_values(2, 1, vec![1.5, 2.25], DepthKind::GroundTruth).unwrap();
        let le = decode_pfm(&encode_pfm(&m), DepthKind::GroundTruth).unwrap();
        assert_eq!(le.values(), m.values());
        let be = decode_pfm(&be_file(2, 1, &[1.5, 2.25]), DepthKind::GroundTruth).unwrap();
        assert_eq!(be.values(), m.values());
    }

    #[test]
    fn nan_is_invalid() {
        let bytes = be_file(2, 1, &[f32::NAN, 3.0]);
        let m = decode_pfm(&bytes, DepthKind::UpToScale).unwrap();
        assert_eq!(m.valid_mask(), &[false, true]);
    }

    #[test]
    fn truncated_payload_rejected() {
        let mut bytes = be_file(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        bytes.truncate(bytes.len() - 1);
        assert!(decode_pfm(&bytes, DepthKind::GroundTruth).unwrap_err().contains("payload"));
    }

    #[test]
    fn malformed_headers_rejected() {
        for bad in [&b"P5\n1 1\n-1\n\0\0\0\0"[..], b"Pf\nx 1\n-1\n\0\0\0\0", b"Pf\n1 1\n0\n\0\0\0\0", b"PF\n1 1\n-1\n", b"Pf\n1"] {
            assert!(decode_pfm(bad, DepthKind::GroundTruth).is_err());
        }
    }

    #[test]
    fn masked_positive_pixels_survive() {
        let m = DepthMap::new(2, 1, vec![5.0, 6.0], vec![true, false], DepthKind::GroundTruth).unwrap();
        let back = decode_pfm(&encode_pfm(&m), DepthKind::GroundTruth).unwrap();
        assert_eq!(back.valid_mask(), m.valid_mask());
    }
}
