//! Subsets of a finite cyclic grid `Z_q`, for exhaustive oracles.

use bitvec::prelude::*;

use crate::maps::IntervalMap;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QuantizedSet {
    bits: BitVec<u64, Lsb0>,
}

impl QuantizedSet {
    pub fn empty(q: usize) -> Self {
        assert!(q > 0, "empty grid");
        QuantizedSet { bits: bitvec![u64, Lsb0; 0; q] }
    }

    pub fn full(q: usize) -> Self {
        assert!(q > 0, "empty grid");
        QuantizedSet { bits: bitvec![u64, Lsb0; 1; q] }
    }

    pub fn from_fn(q: usize, mut member: impl FnMut(usize) -> bool) -> Self {
        let mut s = Self::empty(q);
        for i in 0..q {
            if member(i) {
                s.bits.set(i, true);
            }
        }
        s
    }

    /// `q`, the size of the ambient grid.
    pub fn modulus(&self) -> usize {
        self.bits.len()
    }

    pub fn insert(&mut self, i: usize) -> bool {
        let i = i % self.modulus();
        !self.bits.replace(i, true)
    }

    pub fn contains(&self, i: usize) -> bool {
        self.bits[i % self.modulus()]
    }

    pub fn count(&self) -> usize {
        self.bits.count_ones()
    }

    pub fn is_full(&self) -> bool {
        self.bits.all()
    }

    /// `λ(B) = |B| / q`.
    pub fn measure(&self) -> f64 {
        self.count() as f64 / self.modulus() as f64
    }

    /// `B + s`.
    pub fn shifted(&self, s: usize) -> Self {
        let mut bits = self.bits.clone();
        bits.rotate_right(s % self.modulus());
        QuantizedSet { bits }
    }

    pub fn is_invariant_under(&self, s: usize) -> bool {
        self.shifted(s) == *self
    }

    /// `|B ∩ [start, start + len)|` on the circle; `len ≤ q`.
    pub fn count_in_arc(&self, start: usize, len: usize) -> usize {
        let q = self.modulus();
        assert!(len <= q, "arc longer than the circle");
        let start = start % q;
        let end = start + len;
        if end <= q {
            self.bits[start..end].count_ones()
        } else {
            self.bits[start..].count_ones() + self.bits[..end - q].count_ones()
        }
    }

    /// `f(Z_{2^Q})` for a map on a grid of at most 2^32 points.
    pub fn image_of(map: &IntervalMap) -> Self {
        let bits = map.grid().bits();
        assert!(bits <= 32, "exhaustive image limited to 32-bit grids");
        let q = 1usize << bits;
        let mut s = Self::empty(q);
        for x in 0..q {
            s.bits.set(map.apply_raw(x as u128) as usize, true);
        }
        s
    }
}

/// Exhaustive check that `map` permutes its grid.
pub fn is_grid_bijection(map: &IntervalMap) -> bool {
    QuantizedSet::image_of(map).is_full()
}
