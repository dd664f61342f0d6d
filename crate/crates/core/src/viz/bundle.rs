//! WVB1 coordinate bundle.
//!
//! ```text
//! magic "WVB1", u32 dataset count
//! per dataset: u16 name length + UTF-8, u32 point count
//!   per point: u16 id length + UTF-8, f32 x, f32 y, u16 preview length + UTF-8
//! ```
//!
//! Little-endian throughout. The payload is gzipped at level 6 with a zero
//! mtime, no file name, and OS byte 255, so identical inputs give identical
//! bytes.

use std::collections::HashMap;
use std::io::{Read, Write};

use flate2::read::GzDecoder;
use flate2::{Compression, GzBuilder};
use serde::{Deserialize, Serialize};

use super::{DisplaySubset, VizError};

pub const BUNDLE_MAGIC: [u8; 4] = *b"WVB1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BundlePoint {
    pub id: String,
    pub x: f32,
    pub y: f32,
    pub preview: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BundleDataset {
    pub name: String,
    pub points: Vec<BundlePoint>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CoordinateBundle {
    pub datasets: Vec<BundleDataset>,
}

impl CoordinateBundle {
    pub fn point_count(&self) -> usize {
        self.datasets.iter().map(|d| d.points.len()).sum()
    }
}

fn put_str16(out: &mut Vec<u8>, s: &str) -> Result<(), VizError> {
    let len = u16::try_from(s.len()).map_err(|_| VizError::InvalidInput(format!("string of {} bytes", s.len())))?;
    out.extend_from_slice(&len.to_le_bytes());
    out.extend_from_slice(s.as_bytes());
    Ok(())
}

pub fn encode_payload(bundle: &CoordinateBundle) -> Result<Vec<u8>, VizError> {
    let mut out = Vec::with_capacity(8 + bundle.point_count() * 160);
    out.extend_from_slice(&BUNDLE_MAGIC);
    out.extend_from_slice(&(bundle.datasets.len() as u32).to_le_bytes());
    for d in &bundle.datasets {
        put_str16(&mut out, &d.name)?;
        out.extend_from_slice(&(d.points.len() as u32).to_le_bytes());
        for p in &d.points {
            put_str16(&mut out, &p.id)?;
            out.extend_from_slice(&p.x.to_le_bytes());
            out.extend_from_slice(&p.y.to_le_bytes());
            put_str16(&mut out, &p.preview)?;
        }
    }
    Ok(out)
}

pub fn compress_payload(payload: &[u8]) -> Vec<u8> {
    let mut gz = GzBuilder::new().mtime(0).write(Vec::new(), Compression::new(6));
    gz.write_all(payload).expect("writing to a Vec cannot fail");
    gz.finish().expect("writing to a Vec cannot fail")
}

pub fn decode_payload(bytes: &[u8]) -> Result<CoordinateBundle, VizError> {
    let bad = |m: &str| VizError::BadBundle(m.to_string());
    let mut buf = bytes;
    let mut take = |n: usize| -> Result<&[u8], VizError> {
        if buf.len() < n {
            return Err(bad("truncated"));
        }
        let (h, t) = buf.split_at(n);
        buf = t;
        Ok(h)
    };
    if take(4)? != BUNDLE_MAGIC {
        return Err(bad("bad magic"));
    }
    let u16_at = |b: &[u8]| u16::from_le_bytes([b[0], b[1]]) as usize;
    let u32_at = |b: &[u8]| u32::from_le_bytes(b.try_into().unwrap()) as usize;
    let n_datasets = u32_at(take(4)?);
    let mut datasets = Vec::new();
    for _ in 0..n_datasets {
        let len = u16_at(take(2)?);
        let name = std::str::from_utf8(take(len)?).map_err(|_| bad("name not UTF-8"))?.to_string();
        let n_points = u32_at(take(4)?);
        let mut points = Vec::new();
        for _ in 0..n_points {
            let len = u16_at(take(2)?);
            let id = std::str::from_utf8(take(len)?).map_err(|_| bad("id not UTF-8"))?.to_string();
            let x = f32::from_le_bytes(take(4)?.try_into().unwrap());
            let y = f32::from_le_bytes(take(4)?.try_into().unwrap());
            let len = u16_at(take(2)?);
            let preview = std::str::from_utf8(take(len)?).map_err(|_| bad("preview not UTF-8"))?.to_string();
            points.push(BundlePoint { id, x, y, preview });
        }
        datasets.push(BundleDataset { name, points });
    }
    if !buf.is_empty() {
        return Err(bad("trailing bytes"));
    }
    Ok(CoordinateBundle { datasets })
}

/// Decompress and decode a bundle file.
pub fn parse_bundle(gz: &[u8]) -> Result<CoordinateBundle, VizError> {
    let mut payload = Vec::new();
    GzDecoder::new(gz)
        .read_to_end(&mut payload)
        .map_err(|e| VizError::BadBundle(format!("gzip: {e}")))?;
    decode_payload(&payload)
}

/// Assemble and compress the bundle for `subset`. Previews are cut to
/// [`crate::PREVIEW_CHARS`] scalar values; a missing preview is empty.
pub fn build_bundle(
    subset: &DisplaySubset,
    coordinates: &HashMap<(String, String), (f32, f32)>,
    previews: &HashMap<(String, String), String>,
) -> Result<Vec<u8>, VizError> {
    let mut bundle = CoordinateBundle::default();
    for (name, ids) in &subset.datasets {
        let mut points = Vec::with_capacity(ids.len());
        for id in ids {
            let key = (name.clone(), id.clone());
            let &(x, y) = coordinates.get(&key).ok_or_else(|| VizError::MissingCoordinate {
                dataset: name.clone(),
                conversation_id: id.clone(),
            })?;
            let preview = previews
                .get(&key)
                .map(|p| p.chars().take(crate::PREVIEW_CHARS).collect())
                .unwrap_or_default();
            points.push(BundlePoint { id: id.clone(), x, y, preview });
        }
        bundle.datasets.push(BundleDataset { name: name.clone(), points });
    }
    Ok(compress_payload(&encode_payload(&bundle)?))
}
