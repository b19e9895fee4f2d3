//! Hashed unigram + bigram features with sign hashing.

use std::hash::Hasher;

use fnv::FnvHasher;
use serde::{Deserialize, Serialize};

use crate::text::tokenize;

/// Sparse vector with strictly increasing indices and no explicit zeros.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SparseVector {
    entries: Vec<(u32, f64)>,
}

impl SparseVector {
    /// Sums values of repeated indices and drops zeros.
    pub fn from_pairs(mut pairs: Vec<(u32, f64)>) -> Self {
        pairs.sort_by_key(|&(i, _)| i);
        let mut entries: Vec<(u32, f64)> = Vec::with_capacity(pairs.len());
        for (i, v) in pairs {
            match entries.last_mut() {
                Some((j, acc)) if *j == i => *acc += v,
                _ => entries.push((i, v)),
            }
        }
        entries.retain(|&(_, v)| v != 0.0);
        Self { entries }
    }

    pub fn entries(&self) -> &[(u32, f64)] {
        &self.entries
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.entries.iter().map(|&(i, v)| (i as usize, v))
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn norm(&self) -> f64 {
        self.entries.iter().map(|(_, v)| v * v).sum::<f64>().sqrt()
    }

    pub fn dot(&self, dense: &[f64]) -> f64 {
        self.entries.iter().map(|&(i, v)| dense[i as usize] * v).sum()
    }

    pub fn support(&self) -> Vec<u32> {
        self.entries.iter().map(|&(i, _)| i).collect()
    }

    pub fn get(&self, index: u32) -> f64 {
        self.entries
            .binary_search_by_key(&index, |&(i, _)| i)
            .map(|k| self.entries[k].1)
            .unwrap_or(0.0)
    }

    fn scaled(mut self, factor: f64) -> Self {
        for (_, v) in &mut self.entries {
            *v *= factor;
        }
        self
    }
}

/// Feature strings for a token sequence: every token, then every adjacent
/// pair joined by a space.
pub fn ngrams(tokens: &[String]) -> impl Iterator<Item = String> + '_ {
    tokens
        .iter()
        .cloned()
        .chain(tokens.windows(2).map(|w| format!("{} {}", w[0], w[1])))
}

/// Bucket and sign for one feature string. 64-bit FNV-1a; the bucket is the
/// hash modulo `hash_dims`, the sign comes from the top bit.
pub fn hash_feature(feature: &str, hash_dims: usize) -> (u32, f64) {
    let mut hasher = FnvHasher::default();
    hasher.write(feature.as_bytes());
    let h = hasher.finish();
    let bucket = (h % hash_dims as u64) as u32;
    let sign = if h >> 63 == 1 { -1.0 } else { 1.0 };
    (bucket, sign)
}

/// Signed hashed n-gram counts before normalization.
pub fn hashed_counts(text: &str, hash_dims: usize) -> SparseVector {
    assert!(hash_dims >= 2, "hash_dims must be at least 2");
    let tokens = tokenize(text);
    SparseVector::from_pairs(ngrams(&tokens).map(|f| hash_feature(&f, hash_dims)).collect())
}

/// L2-normalized hashed n-gram counts; empty text maps to the zero vector.
pub fn featurize(text: &str, hash_dims: usize) -> SparseVector {
    let counts = hashed_counts(text, hash_dims);
    let norm = counts.norm();
    if norm == 0.0 {
        counts
    } else {
        counts.scaled(1.0 / norm)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Reference 64-bit FNV-1a, written out from the published constants.
    fn fnv1a(bytes: &[u8]) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for &b in bytes {
            h ^= b as u64;
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
        h
    }

    fn oracle_bucket(feature: &str, dims: u64) -> (u32, f64) {
        let h = fnv1a(feature.as_bytes());
        ((h % dims) as u32, if h >> 63 == 1 { -1.0 } else { 1.0 })
    }

    #[test]
    fn empty_text_is_zero() {
        assert!(featurize("", 16).is_zero());
        assert!(featurize("?!  ...", 16).is_zero());
    }

    #[test]
    fn hand_hashed_bucket_counts() {
        let dims = 8;
        let (uni, uni_sign) = oracle_bucket("scam", dims);
        let (bi, bi_sign) = oracle_bucket("scam scam", dims);

        let single = hashed_counts("scam", dims as usize);
        assert_eq!(single.entries(), &[(uni, uni_sign)]);

        let double = hashed_counts("scam scam", dims as usize);
        let mut expected = vec![(uni, 2.0 * uni_sign), (bi, bi_sign)];
        if uni == bi {
            expected = vec![(uni, 2.0 * uni_sign + bi_sign)];
        }
        expected.sort_by_key(|e| e.0);
        expected.retain(|e| e.1 != 0.0);
        assert_eq!(double.entries(), &expected[..]);

        // the unigram bucket is shared and twice as heavy before normalization
        assert!(double.support().contains(&uni));
        assert_eq!(double.get(uni).abs(), 2.0 * single.get(uni).abs());
    }

    #[test]
    fn crate_hash_matches_reference() {
        for f in ["scam", "scam scam", "fake profile", "ü", ""] {
            assert_eq!(hash_feature(f, 1 << 18), oracle_bucket(f, 1 << 18));
        }
    }

    proptest! {
        #[test]
        fn unit_norm_or_zero(text in "[a-z ]{0,40}", log_dims in 1u32..20) {
            let v = featurize(&text, 1usize << log_dims);
            let n = v.norm();
            prop_assert!(n == 0.0 || (n - 1.0).abs() <= 1e-9);
            prop_assert!(v.entries().windows(2).all(|w| w[0].0 < w[1].0));
            prop_assert!(v.entries().iter().all(|&(i, _)| (i as usize) < (1usize << log_dims)));
        }

        #[test]
        fn case_insensitive(text in "[a-zA-Z ]{0,30}") {
            prop_assert_eq!(featurize(&text, 64), featurize(&text.to_lowercase(), 64));
        }
    }
}
