//! PGM reading and the `PNPRAST1` raster interchange format.
//!
//! Raster layout: 8-byte magic `PNPRAST1`, width and height as `u32`
//! little-endian, then `width * height` IEEE-754 `f64` little-endian values
//! in row-major order. Nothing else, so a file is exactly
//! `16 + 8 * width * height` bytes.

use std::fs;
use std::io::Write;
use std::path::Path;

use super::Image;
use crate::error::{Error, Result};

pub const RASTER_MAGIC: &[u8; 8] = b"PNPRAST1";
const RASTER_HEADER_LEN: usize = 16;

pub fn save_raster(img: &Image, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let width =
        u32::try_from(img.width()).map_err(|_| Error::InvalidImage("width exceeds u32".into()))?;
    let height = u32::try_from(img.height())
        .map_err(|_| Error::InvalidImage("height exceeds u32".into()))?;
    let mut buf = Vec::with_capacity(RASTER_HEADER_LEN + 8 * img.len());
    buf.extend_from_slice(RASTER_MAGIC);
    buf.extend_from_slice(&width.to_le_bytes());
    buf.extend_from_slice(&height.to_le_bytes());
    for v in img.data() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    fs::write(path, buf).map_err(|e| Error::io(path, e))
}

pub fn load_raster(path: impl AsRef<Path>) -> Result<Image> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_raster(&bytes)
}

fn decode_raster(bytes: &[u8]) -> Result<Image> {
    if bytes.len() < RASTER_HEADER_LEN {
        return Err(Error::parse("raster", "file shorter than header"));
    }
    if &bytes[..8] != RASTER_MAGIC {
        return Err(Error::parse("raster", "bad magic"));
    }
    let width = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let height = u32::from_le_bytes(bytes[12..16].try_into().unwrap()) as usize;
    let payload = &bytes[RASTER_HEADER_LEN..];
    let expected = width
        .checked_mul(height)
        .and_then(|n| n.checked_mul(8))
        .ok_or_else(|| Error::parse("raster", "dimensions overflow"))?;
    if payload.len() != expected {
        return Err(Error::parse(
            "raster",
            format!(
                "payload is {} bytes, expected {expected} for {width}x{height}",
                payload.len()
            ),
        ));
    }
    let data = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Image::new(width, height, data).map_err(|e| Error::parse("raster", e.to_string()))
}

pub fn load_pgm(path: impl AsRef<Path>) -> Result<Image> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_pgm(&bytes)
}

/// Parses a binary (`P5`) or ASCII (`P2`) PGM with maxval up to 65535.
/// Pixel values are returned unscaled.
pub fn parse_pgm(bytes: &[u8]) -> Result<Image> {
    let mut cursor = HeaderCursor { bytes, pos: 0 };
    let magic = cursor.token()?;
    let binary = match magic {
        b"P5" => true,
        b"P2" => false,
        other => {
            return Err(Error::parse(
                "PGM",
                format!("unsupported magic {:?}", String::from_utf8_lossy(other)),
            ))
        }
    };
    let width = cursor.number("width")?;
    let height = cursor.number("height")?;
    if width == 0 || height == 0 {
        return Err(Error::parse(
            "PGM",
            format!("degenerate dimensions {width}x{height}"),
        ));
    }
    let maxval = cursor.number("maxval")?;
    if maxval == 0 || maxval > 65535 {
        return Err(Error::parse("PGM", format!("maxval {maxval} out of range")));
    }
    let count = width
        .checked_mul(height)
        .ok_or_else(|| Error::parse("PGM", "dimensions overflow"))?;

    let data: Vec<f64> = if binary {
        // Exactly one whitespace byte separates maxval from the payload.
        let start = cursor.pos + 1;
        let sample_bytes = if maxval < 256 { 1 } else { 2 };
        let payload = bytes.get(start..).unwrap_or(&[]);
        if payload.len() < count * sample_bytes {
            return Err(Error::parse(
                "PGM",
                format!(
                    "truncated payload: {} bytes, expected {}",
                    payload.len(),
                    count * sample_bytes
                ),
            ));
        }
        if sample_bytes == 1 {
            payload[..count].iter().map(|&b| b as f64).collect()
        } else {
            payload[..2 * count]
                .chunks_exact(2)
                .map(|c| u16::from_be_bytes([c[0], c[1]]) as f64)
                .collect()
        }
    } else {
        let mut values = Vec::with_capacity(count);
        for i in 0..count {
            let v = cursor.number("sample").map_err(|_| {
                Error::parse("PGM", format!("truncated payload: {i} of {count} samples"))
            })?;
            if v > maxval {
                return Err(Error::parse(
                    "PGM",
                    format!("sample {v} exceeds maxval {maxval}"),
                ));
            }
            values.push(v as f64);
        }
        values
    };
    Image::new(width, height, data)
}

struct HeaderCursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> HeaderCursor<'a> {
    fn skip_space_and_comments(&mut self) {
        while self.pos < self.bytes.len() {
            match self.bytes[self.pos] {
                b'#' => {
                    while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                        self.pos += 1;
                    }
                }
                c if c.is_ascii_whitespace() => self.pos += 1,
                _ => break,
            }
        }
    }

    fn token(&mut self) -> Result<&'a [u8]> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self.pos < self.bytes.len() && !self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(Error::parse("PGM", "unexpected end of header"));
        }
        Ok(&self.bytes[start..self.pos])
    }

    fn number(&mut self, what: &str) -> Result<usize> {
        let tok = self.token()?;
        std::str::from_utf8(tok)
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| {
                Error::parse(
                    "PGM",
                    format!("invalid {what}: {:?}", String::from_utf8_lossy(tok)),
                )
            })
    }
}

/// Writes a binary PGM, rounding and clamping values to `0..=maxval`.
pub fn save_pgm(img: &Image, path: impl AsRef<Path>, maxval: u16) -> Result<()> {
    let path = path.as_ref();
    if maxval == 0 {
        return Err(Error::InvalidParameter("maxval must be positive".into()));
    }
    let mut buf = Vec::new();
    write!(buf, "P5\n{} {}\n{}\n", img.width(), img.height(), maxval).unwrap();
    for &v in img.data() {
        let q = v.round().clamp(0.0, maxval as f64) as u16;
        if maxval < 256 {
            buf.push(q as u8);
        } else {
            buf.extend_from_slice(&q.to_be_bytes());
        }
    }
    fs::write(path, buf).map_err(|e| Error::io(path, e))
}
