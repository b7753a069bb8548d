//! Token hashing shared by the mock providers.

use sha2::{Digest, Sha256};
use soundstage_core::vecmath::EMBEDDING_DIM;

const STOPWORDS: &[&str] = &[
    "a", "an", "the", "and", "or", "with", "of", "in", "on", "for", "to", "it", "its", "is",
    "are", "by", "at", "as", "from", "into", "that", "this", "be",
];

/// Slots each token writes into.
const SLOTS_PER_TOKEN: u64 = 4;

/// Lowercased alphanumeric words, stopwords removed, in order (repeats kept).
pub fn tokens(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|w| !w.is_empty())
        .map(str::to_lowercase)
        .filter(|w| !STOPWORDS.contains(&w.as_str()))
        .collect()
}

/// 64-bit digest of length-prefixed parts.
pub fn hash64(parts: &[&[u8]]) -> u64 {
    let mut h = Sha256::new();
    for p in parts {
        h.update((p.len() as u64).to_le_bytes());
        h.update(p);
    }
    u64::from_le_bytes(h.finalize()[..8].try_into().expect("8 bytes"))
}

/// Feature-hashed bag of tokens in the embedding dimension (not normalized).
pub fn token_features(tokens: &[String], seed: u64) -> Vec<f64> {
    let mut v = vec![0.0; EMBEDDING_DIM];
    for t in tokens {
        for k in 0..SLOTS_PER_TOKEN {
            let h = hash64(&[b"tok", &seed.to_le_bytes(), t.as_bytes(), &k.to_le_bytes()]);
            let idx = (h % EMBEDDING_DIM as u64) as usize;
            let sign = if (h >> 63) & 1 == 1 { -1.0 } else { 1.0 };
            v[idx] += sign;
        }
    }
    v
}

/// Dense pseudo-random direction for `key`, unit length.
pub fn hashed_direction(key: u64, seed: u64) -> Vec<f64> {
    let v: Vec<f64> = (0..EMBEDDING_DIM as u64)
        .map(|i| {
            let h = hash64(&[b"dir", &seed.to_le_bytes(), &key.to_le_bytes(), &i.to_le_bytes()]);
            (h >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
        })
        .collect();
    scale_to_unit(v)
}

pub fn scale_to_unit(mut v: Vec<f64>) -> Vec<f64> {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tokenizer_drops_stopwords_and_punctuation() {
        assert_eq!(tokens("The Lo-fi beat, with PIANO!"), vec!["lo", "fi", "beat", "piano"]);
    }

    #[test]
    fn hash_is_prefix_free() {
        assert_ne!(hash64(&[b"ab", b"c"]), hash64(&[b"a", b"bc"]));
    }
}
