//! Encoded polyline codec (5-decimal fixed point).
//!
//! Each coordinate is scaled by 1e5 and rounded, delta-coded against the
//! previous point, zigzag-mapped so the sign lands in bit 0, then split into
//! 5-bit chunks (least significant first). Every chunk but the last carries
//! the continuation bit 0x20, and each chunk is offset by 63 to land in the
//! printable range. Latitude precedes longitude for every point.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{GeoPoint, Path};

const PRECISION: f64 = 1e5;
const CHAR_OFFSET: u8 = 63;
const CONTINUATION: u8 = 0x20;
const CHUNK_MASK: u8 = 0x1f;
/// Valid coordinates need at most 6 chunks; anything past 12 cannot be a
/// coordinate delta and would overflow the accumulator.
const MAX_CHUNKS: u32 = 12;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PolylineError {
    #[error("encoding ends inside a value at byte {0}")]
    TruncatedEncoding(usize),
    #[error("invalid character {found:?} at byte {position}")]
    InvalidCharacter { position: usize, found: char },
    #[error("value starting at byte {0} is too long")]
    ValueOverflow(usize),
    #[error("decoded point {index} is not a valid coordinate")]
    OutOfRange { index: usize },
    #[error("cannot encode an empty path")]
    EmptyPath,
}

/// Validated polyline text. Construction decodes the whole string once, so
/// holding one guarantees [`decode_polyline`] succeeds.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct EncodedPolyline(String);

impl EncodedPolyline {
    pub fn new(text: impl Into<String>) -> Result<Self, PolylineError> {
        let text = text.into();
        decode_str(&text)?;
        Ok(Self(text))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl std::fmt::Display for EncodedPolyline {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl TryFrom<String> for EncodedPolyline {
    type Error = PolylineError;

    fn try_from(value: String) -> Result<Self, Self::Error> {
        Self::new(value)
    }
}

impl From<EncodedPolyline> for String {
    fn from(value: EncodedPolyline) -> Self {
        value.0
    }
}

pub fn decode_polyline(encoded: &EncodedPolyline) -> Path {
    // Validated at construction.
    Path::new(decode_str(&encoded.0).expect("EncodedPolyline is validated"))
        .expect("validated polylines are non-empty")
}

/// Decode raw polyline text. This is the entry point for untrusted input.
pub fn decode_str(text: &str) -> Result<Vec<GeoPoint>, PolylineError> {
    let bytes = text.as_bytes();
    if bytes.is_empty() {
        return Err(PolylineError::EmptyPath);
    }
    let mut points = Vec::with_capacity(bytes.len() / 4);
    let mut pos = 0;
    let mut lat: i64 = 0;
    let mut lon: i64 = 0;
    while pos < bytes.len() {
        let (dlat, next) = read_value(text, pos)?;
        pos = next;
        if pos >= bytes.len() {
            // A latitude without its longitude.
            return Err(PolylineError::TruncatedEncoding(pos));
        }
        let (dlon, next) = read_value(text, pos)?;
        pos = next;
        lat = lat
            .checked_add(dlat)
            .ok_or(PolylineError::ValueOverflow(pos))?;
        lon = lon
            .checked_add(dlon)
            .ok_or(PolylineError::ValueOverflow(pos))?;
        let point =
            GeoPoint::new(lat as f64 / PRECISION, lon as f64 / PRECISION).map_err(|_| {
                PolylineError::OutOfRange {
                    index: points.len(),
                }
            })?;
        points.push(point);
    }
    Ok(points)
}

fn read_value(text: &str, start: usize) -> Result<(i64, usize), PolylineError> {
    let bytes = text.as_bytes();
    let mut acc: u64 = 0;
    let mut chunks = 0u32;
    let mut pos = start;
    loop {
        let Some(&byte) = bytes.get(pos) else {
            return Err(PolylineError::TruncatedEncoding(pos));
        };
        if !(CHAR_OFFSET..=126).contains(&byte) {
            let found = text[pos..].chars().next().unwrap_or('\u{fffd}');
            return Err(PolylineError::InvalidCharacter {
                position: pos,
                found,
            });
        }
        if chunks == MAX_CHUNKS {
            return Err(PolylineError::ValueOverflow(start));
        }
        let chunk = byte - CHAR_OFFSET;
        acc |= u64::from(chunk & CHUNK_MASK) << (5 * chunks);
        chunks += 1;
        pos += 1;
        if chunk & CONTINUATION == 0 {
            break;
        }
    }
    // Undo the zigzag mapping.
    let value = (acc >> 1) as i64 ^ -((acc & 1) as i64);
    Ok((value, pos))
}

pub fn encode_polyline(points: &[GeoPoint]) -> Result<EncodedPolyline, PolylineError> {
    if points.is_empty() {
        return Err(PolylineError::EmptyPath);
    }
    let mut out = String::with_capacity(points.len() * 8);
    let (mut prev_lat, mut prev_lon) = (0i64, 0i64);
    for p in points {
        let lat = (p.lat() * PRECISION).round() as i64;
        let lon = (p.lon() * PRECISION).round() as i64;
        write_value(lat - prev_lat, &mut out);
        write_value(lon - prev_lon, &mut out);
        prev_lat = lat;
        prev_lon = lon;
    }
    Ok(EncodedPolyline(out))
}

fn write_value(value: i64, out: &mut String) {
    let mut v = ((value << 1) ^ (value >> 63)) as u64;
    while v >= u64::from(CONTINUATION) {
        out.push(((CONTINUATION | (v as u8 & CHUNK_MASK)) + CHAR_OFFSET) as char);
        v >>= 5;
    }
    out.push((v as u8 + CHAR_OFFSET) as char);
}
