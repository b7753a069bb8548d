//! Embedding set files.
//!
//! Binary layout (little-endian): `b"EMB1"`, `dim: u32`, `count: u32`,
//! `reserved: u32`, then `count * dim` `f32` values row by row. JSON fixtures
//! are accepted as either one array of numbers or an array of arrays.

use std::path::Path;

use thiserror::Error;

use super::{Embedding, VecMathError};

pub const MAGIC: &[u8; 4] = b"EMB1";
pub const HEADER_LEN: usize = 16;

#[derive(Debug, Error)]
pub enum EmbFileError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("bad embedding file: {0}")]
    Format(String),
    #[error("invalid JSON embedding fixture: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Embedding(#[from] VecMathError),
}

pub fn encode(set: &[Embedding<f32>]) -> Result<Vec<u8>, EmbFileError> {
    let dim = set.first().map_or(0, Embedding::dim);
    if set.iter().any(|e| e.dim() != dim) {
        return Err(EmbFileError::Format("mixed dimensions".into()));
    }
    let mut out = Vec::with_capacity(HEADER_LEN + 4 * dim * set.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(dim as u32).to_le_bytes());
    out.extend_from_slice(&(set.len() as u32).to_le_bytes());
    out.extend_from_slice(&0u32.to_le_bytes());
    for e in set {
        for v in e.values() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    Ok(out)
}

pub fn decode(bytes: &[u8]) -> Result<Vec<Embedding<f32>>, EmbFileError> {
    if bytes.len() < HEADER_LEN || &bytes[..4] != MAGIC {
        return Err(EmbFileError::Format("missing EMB1 header".into()));
    }
    let word = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().unwrap()) as usize;
    let (dim, count) = (word(4), word(8));
    let expected = dim
        .checked_mul(count)
        .and_then(|n| n.checked_mul(4))
        .and_then(|n| n.checked_add(HEADER_LEN))
        .ok_or_else(|| EmbFileError::Format("size overflow".into()))?;
    if bytes.len() != expected {
        return Err(EmbFileError::Format(format!(
            "expected {expected} bytes for {count}x{dim}, found {}",
            bytes.len()
        )));
    }
    if dim == 0 && count > 0 {
        return Err(EmbFileError::Format("zero dimension".into()));
    }
    bytes[HEADER_LEN..]
        .chunks_exact(4 * dim.max(1))
        .take(count)
        .map(|row| {
            let values = row
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
                .collect();
            Embedding::new(values).map_err(EmbFileError::from)
        })
        .collect()
}

pub fn decode_json(text: &str) -> Result<Vec<Embedding<f32>>, EmbFileError> {
    let value: serde_json::Value = serde_json::from_str(text)?;
    let rows: Vec<Vec<f32>> = match &value {
        serde_json::Value::Array(items) if items.iter().all(|v| v.is_number()) => {
            vec![serde_json::from_value(value)?]
        }
        _ => serde_json::from_value(value)?,
    };
    let set: Vec<Embedding<f32>> = rows
        .into_iter()
        .map(Embedding::new)
        .collect::<Result<_, _>>()?;
    if let Some(first) = set.first() {
        if set.iter().any(|e| e.dim() != first.dim()) {
            return Err(EmbFileError::Format("mixed dimensions".into()));
        }
    }
    Ok(set)
}

/// Reads either format, deciding by the magic bytes.
pub fn read(path: impl AsRef<Path>) -> Result<Vec<Embedding<f32>>, EmbFileError> {
    let bytes = std::fs::read(path)?;
    if bytes.starts_with(MAGIC) {
        decode(&bytes)
    } else {
        let text = std::str::from_utf8(&bytes)
            .map_err(|_| EmbFileError::Format("neither EMB1 nor UTF-8 JSON".into()))?;
        decode_json(text)
    }
}

pub fn write(path: impl AsRef<Path>, set: &[Embedding<f32>]) -> Result<(), EmbFileError> {
    std::fs::write(path, encode(set)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn binary_round_trip(rows in prop::collection::vec(prop::collection::vec(-1.0f32..1.0, 7), 0..6)) {
            let set: Vec<_> = rows.into_iter().map(|r| Embedding::new(r).unwrap()).collect();
            let bytes = encode(&set).unwrap();
            prop_assert_eq!(bytes.len(), HEADER_LEN + 28 * set.len());
            prop_assert_eq!(decode(&bytes).unwrap(), set);
        }
    }

    #[test]
    fn header_layout() {
        let bytes = encode(&[Embedding::new(vec![1.0f32, 2.0]).unwrap()]).unwrap();
        assert_eq!(&bytes[..4], b"EMB1");
        assert_eq!(&bytes[4..8], &2u32.to_le_bytes());
        assert_eq!(&bytes[8..12], &1u32.to_le_bytes());
        assert_eq!(&bytes[12..16], &[0, 0, 0, 0]);
        assert_eq!(&bytes[16..20], &1.0f32.to_le_bytes());
    }

    #[test]
    fn truncated_is_rejected() {
        let mut bytes = encode(&[Embedding::new(vec![1.0f32, 2.0]).unwrap()]).unwrap();
        bytes.pop();
        assert!(matches!(decode(&bytes), Err(EmbFileError::Format(_))));
    }

    #[test]
    fn json_single_and_nested() {
        assert_eq!(decode_json("[1, 0]").unwrap().len(), 1);
        assert_eq!(decode_json("[[1, 0], [0, 1]]").unwrap().len(), 2);
        assert!(decode_json("[[1, 0], [0]]").is_err());
    }
}
