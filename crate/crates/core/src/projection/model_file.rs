//! Projector serialization.
//!
//! ```text
//! magic "WVPM", u16 version, u16 language length + UTF-8,
//! u32 input_dim, u32 hidden, u32 output_dim (always 2),
//! f32 LE: input_mean[D], input_scale[D], w1[H*D], b1[H], w2[2*H], b2[2], train_rmse
//! ```

use sha2::{Digest, Sha256};

use super::{ProjectionError, ProjectorModel};

pub const MODEL_MAGIC: [u8; 4] = *b"WVPM";
pub const MODEL_VERSION: u16 = 1;

fn bad(msg: impl Into<String>) -> ProjectionError {
    ProjectionError::ModelFile(msg.into())
}

pub fn encode_model(m: &ProjectorModel) -> Vec<u8> {
    let (d, h) = (m.input_dim, m.hidden);
    let mut out = Vec::with_capacity(32 + 4 * (2 * d + h * d + 3 * h + 3));
    out.extend_from_slice(&MODEL_MAGIC);
    out.extend_from_slice(&MODEL_VERSION.to_le_bytes());
    let lang = m.language.as_bytes();
    out.extend_from_slice(&(lang.len() as u16).to_le_bytes());
    out.extend_from_slice(lang);
    for v in [d as u32, h as u32, 2] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    for block in [&m.input_mean, &m.input_scale, &m.w1, &m.b1, &m.w2, &m.b2] {
        for x in block.iter() {
            out.extend_from_slice(&x.to_le_bytes());
        }
    }
    out.extend_from_slice(&m.train_rmse.to_le_bytes());
    out
}

pub fn decode_model(bytes: &[u8]) -> Result<ProjectorModel, ProjectionError> {
    let mut buf = bytes;
    let mut take = |n: usize| -> Result<&[u8], ProjectionError> {
        if buf.len() < n {
            return Err(bad("truncated"));
        }
        let (h, t) = buf.split_at(n);
        buf = t;
        Ok(h)
    };
    if take(4)? != MODEL_MAGIC {
        return Err(bad("bad magic"));
    }
    let version = u16::from_le_bytes(take(2)?.try_into().unwrap());
    if version != MODEL_VERSION {
        return Err(bad(format!("unsupported version {version}")));
    }
    let lang_len = u16::from_le_bytes(take(2)?.try_into().unwrap()) as usize;
    let language = String::from_utf8(take(lang_len)?.to_vec()).map_err(|_| bad("language is not UTF-8"))?;
    let mut u32s = [0u32; 3];
    for v in &mut u32s {
        *v = u32::from_le_bytes(take(4)?.try_into().unwrap());
    }
    let [d, h, out_dim] = u32s.map(|v| v as usize);
    if out_dim != 2 {
        return Err(bad(format!("output dimension {out_dim}, expected 2")));
    }
    if d == 0 || h == 0 {
        return Err(bad("zero input or hidden size"));
    }
    let mut floats = |n: usize| -> Result<Vec<f32>, ProjectionError> {
        let raw = take(n.checked_mul(4).ok_or_else(|| bad("size overflow"))?)?;
        Ok(raw.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap())).collect())
    };
    let input_mean = floats(d)?;
    let input_scale = floats(d)?;
    let w1 = floats(h.checked_mul(d).ok_or_else(|| bad("size overflow"))?)?;
    let b1 = floats(h)?;
    let w2 = floats(2 * h)?;
    let b2 = floats(2)?;
    let train_rmse = floats(1)?[0];
    if !buf.is_empty() {
        return Err(bad("trailing bytes"));
    }
    Ok(ProjectorModel {
        language,
        input_dim: d,
        hidden: h,
        input_mean,
        input_scale,
        w1,
        b1,
        w2,
        b2,
        train_rmse,
    })
}

/// First 8 bytes of the SHA-256 of the encoded model, big-endian.
pub fn model_version(m: &ProjectorModel) -> u64 {
    let digest = Sha256::digest(encode_model(m));
    u64::from_be_bytes(digest[..8].try_into().unwrap())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> ProjectorModel {
        ProjectorModel {
            language: "Español".into(),
            input_dim: 3,
            hidden: 2,
            input_mean: vec![0.1, 0.2, 0.3],
            input_scale: vec![1.0, 2.0, 0.5],
            w1: vec![1.0, -1.0, 0.5, 0.25, 0.0, 2.0],
            b1: vec![0.0, -0.5],
            w2: vec![1.0, 2.0, -3.0, 4.0],
            b2: vec![0.5, -0.5],
            train_rmse: 0.125,
        }
    }

    #[test]
    fn roundtrip_is_exact() {
        let m = tiny();
        let bytes = encode_model(&m);
        assert_eq!(&bytes[..4], b"WVPM");
        assert_eq!(decode_model(&bytes).unwrap(), m);
        assert_eq!(bytes.len(), 4 + 2 + 2 + "Español".len() + 12 + 4 * (3 + 3 + 6 + 2 + 4 + 2 + 1));
    }

    #[test]
    fn version_tracks_content() {
        let m = tiny();
        let mut other = tiny();
        other.b2[0] = 0.75;
        assert_eq!(model_version(&m), model_version(&tiny()));
        assert_ne!(model_version(&m), model_version(&other));
    }

    #[test]
    fn rejects_truncation_and_trailing() {
        let bytes = encode_model(&tiny());
        assert!(decode_model(&bytes[..bytes.len() - 1]).is_err());
        let mut extra = bytes.clone();
        extra.push(0);
        assert!(decode_model(&extra).is_err());
        assert!(decode_model(b"WVPX").is_err());
    }
}
