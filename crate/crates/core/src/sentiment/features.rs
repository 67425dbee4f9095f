use std::collections::BTreeMap;

use crate::error::{Error, Result};

pub const DEFAULT_HASH_DIMS: usize = 1 << 18;
pub const DEFAULT_NGRAM_ORDERS: [usize; 2] = [1, 2];

/// Sparse vector with strictly increasing indices.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SparseVector {
    pub entries: Vec<(usize, f64)>,
}

impl SparseVector {
    pub fn dot(&self, dense: &[f64]) -> f64 {
        self.entries.iter().map(|&(i, v)| dense[i] * v).sum()
    }

    pub fn norm(&self) -> f64 {
        self.entries.iter().map(|(_, v)| v * v).sum::<f64>().sqrt()
    }

    pub fn cosine(&self, other: &SparseVector) -> f64 {
        let (mut a, mut b) = (self.entries.iter().peekable(), other.entries.iter().peekable());
        let mut dot = 0.0;
        while let (Some(&&(i, x)), Some(&&(j, y))) = (a.peek(), b.peek()) {
            match i.cmp(&j) {
                std::cmp::Ordering::Less => {
                    a.next();
                }
                std::cmp::Ordering::Greater => {
                    b.next();
                }
                std::cmp::Ordering::Equal => {
                    dot += x * y;
                    a.next();
                    b.next();
                }
            }
        }
        let denom = self.norm() * other.norm();
        if denom == 0.0 {
            0.0
        } else {
            dot / denom
        }
    }
}

// FNV-1a, 64 bit. Stable across platforms and toolchains.
fn fnv1a(order: usize, gram: &[char]) -> u64 {
    const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
    const PRIME: u64 = 0x0000_0100_0000_01b3;
    let mut h = OFFSET;
    let mut feed = |b: u8| {
        h ^= u64::from(b);
        h = h.wrapping_mul(PRIME);
    };
    feed(order as u8);
    let mut buf = [0u8; 4];
    for c in gram {
        for b in c.encode_utf8(&mut buf).bytes() {
            feed(b);
        }
    }
    h
}

/// Hashed character n-gram counts, L2-normalized.
///
/// Text is lower-cased before n-grams are taken. A text shorter than every
/// requested order yields the zero vector.
pub fn featurize(text: &str, hash_dims: usize, ngram_orders: &[usize]) -> Result<SparseVector> {
    if hash_dims < 2 {
        return Err(Error::Invalid(format!("hash_dims {hash_dims} < 2")));
    }
    if text.trim().is_empty() {
        return Err(Error::Empty("text"));
    }
    let chars: Vec<char> = text.to_lowercase().chars().collect();
    let mut counts: BTreeMap<usize, f64> = BTreeMap::new();
    for &n in ngram_orders {
        if n == 0 || n > chars.len() {
            continue;
        }
        for gram in chars.windows(n) {
            let bucket = (fnv1a(n, gram) % hash_dims as u64) as usize;
            *counts.entry(bucket).or_insert(0.0) += 1.0;
        }
    }
    let norm = counts.values().map(|v| v * v).sum::<f64>().sqrt();
    let entries = counts
        .into_iter()
        .map(|(i, v)| (i, if norm > 0.0 { v / norm } else { 0.0 }))
        .collect();
    Ok(SparseVector { entries })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_unigram_has_unit_weight() {
        let v = featurize("aa", 1024, &[1]).unwrap();
        assert_eq!(v.entries.len(), 1);
        assert_eq!(v.entries[0].1, 1.0);
    }

    #[test]
    fn deterministic() {
        let a = featurize("恒生指数大涨", DEFAULT_HASH_DIMS, &DEFAULT_NGRAM_ORDERS).unwrap();
        let b = featurize("恒生指数大涨", DEFAULT_HASH_DIMS, &DEFAULT_NGRAM_ORDERS).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rise_and_fall_are_distinct() {
        let up = featurize("大涨", DEFAULT_HASH_DIMS, &DEFAULT_NGRAM_ORDERS).unwrap();
        let down = featurize("大跌", DEFAULT_HASH_DIMS, &DEFAULT_NGRAM_ORDERS).unwrap();
        // shared unigram 大 only: 1 / (sqrt 3 * sqrt 3)
        let cos = up.cosine(&down);
        assert!(cos < 1.0);
        assert!((cos - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn output_is_unit_norm() {
        let v = featurize("Hang Seng index up up up", 64, &[1, 2, 3]).unwrap();
        assert!((v.norm() - 1.0).abs() < 1e-12);
        assert!(v.entries.windows(2).all(|w| w[0].0 < w[1].0));
    }

    #[test]
    fn empty_text_is_rejected() {
        assert!(featurize("", 16, &[1]).is_err());
        assert!(featurize("   ", 16, &[1]).is_err());
    }

    #[test]
    fn tiny_hash_space_is_rejected() {
        assert!(featurize("a", 1, &[1]).is_err());
    }
}
