use std::fmt;

use serde::{Deserialize, Serialize};

use super::MapError;

/// A permutation `π` of `{1, …, d}`; `π(j)` is the position interval `I_j`
/// occupies after the exchange. Stored zero-based.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Permutation {
    images: Vec<usize>,
}

impl Permutation {
    /// From one-based images `π(1), …, π(d)`.
    pub fn new(one_based: &[usize]) -> Result<Self, MapError> {
        let d = one_based.len();
        if d < 2 {
            return Err(MapError::TooFewIntervals(d));
        }
        let mut seen = vec![false; d];
        for &v in one_based {
            if v == 0 || v > d || std::mem::replace(&mut seen[v - 1], true) {
                return Err(MapError::NotAPermutation(one_based.to_vec()));
            }
        }
        Ok(Permutation { images: one_based.iter().map(|v| v - 1).collect() })
    }

    pub fn identity(d: usize) -> Result<Self, MapError> {
        Self::new(&(1..=d).collect::<Vec<_>>())
    }

    /// `π(j) = d + 1 − j`, the irreducible "rotation class" permutation.
    pub fn reversal(d: usize) -> Result<Self, MapError> {
        Self::new(&(1..=d).rev().collect::<Vec<_>>())
    }

    /// Parses `3,1,2`.
    pub fn parse(text: &str) -> Result<Self, MapError> {
        let images = text
            .split(',')
            .map(|s| s.trim().parse::<usize>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|_| MapError::Grammar(format!("bad permutation {text:?}")))?;
        Self::new(&images)
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    /// Zero-based image of zero-based `j`.
    #[inline]
    pub fn image(&self, j: usize) -> usize {
        self.images[j]
    }

    pub fn one_based(&self) -> Vec<usize> {
        self.images.iter().map(|v| v + 1).collect()
    }

    pub fn inverse(&self) -> Permutation {
        let mut inv = vec![0; self.images.len()];
        for (j, &p) in self.images.iter().enumerate() {
            inv[p] = j;
        }
        Permutation { images: inv }
    }

    pub fn is_identity(&self) -> bool {
        self.images.iter().enumerate().all(|(j, &p)| j == p)
    }

    /// `π({1, …, t}) ≠ {1, …, t}` for every `t < d`.
    pub fn is_irreducible(&self) -> bool {
        // π maps {0..t} onto itself iff the largest image among them is t.
        let mut max = 0;
        for (t, &p) in self.images.iter().enumerate().take(self.images.len() - 1) {
            max = max.max(p);
            if max == t {
                return false;
            }
        }
        true
    }
}

impl fmt::Display for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.one_based().iter().map(|v| v.to_string()).collect();
        write!(f, "{}", parts.join(","))
    }
}
