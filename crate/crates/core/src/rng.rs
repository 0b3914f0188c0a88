//! Counter-based random streams keyed by `(seed, stream, index)`.
//!
//! Every sample index owns a fixed, disjoint window of a ChaCha8 keystream,
//! so the values drawn for index `i` do not depend on which worker handles
//! it or in what order. Parallel and sequential schedules therefore produce
//! identical estimates.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::fixedpoint::{Grid, UnitPoint};

/// Stream identifiers, one per sampling purpose.
pub mod streams {
    pub const STRIP: u64 = 1;
    pub const PAIR: u64 = 2;
    pub const UNION: u64 = 3;
    pub const Y_SAMPLES: u64 = 4;
    pub const X_SAMPLES: u64 = 5;
    pub const ALPHA_SAMPLES: u64 = 6;
    pub const MAPS: u64 = 7;
    pub const LEMMA: u64 = 8;
    pub const MISC: u64 = 9;
}

/// Default number of 32-bit keystream words reserved for each index (16 `u64` draws).
pub const DEFAULT_WORDS_PER_INDEX: u64 = 32;

/// A family of independent per-index generators.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RngStream {
    seed: u64,
    stream: u64,
    words_per_index: u64,
}

impl RngStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        RngStream { seed, stream, words_per_index: DEFAULT_WORDS_PER_INDEX }
    }

    /// Reserves `words` 32-bit words per index; each `u64` draw uses two.
    pub fn with_words_per_index(mut self, words: u64) -> Self {
        assert!(words >= 2 && words % 2 == 0, "budget must hold whole u64 draws");
        self.words_per_index = words;
        self
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    /// Generator positioned at the start of `index`'s window.
    pub fn cursor(&self, index: u64) -> Cursor {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng.set_word_pos(index as u128 * self.words_per_index as u128);
        Cursor { rng, remaining: self.words_per_index }
    }
}

/// Draws for one index. Exceeding the reserved window would overlap the next
/// index, so it panics.
#[derive(Clone, Debug)]
pub struct Cursor {
    rng: ChaCha8Rng,
    remaining: u64,
}

impl Cursor {
    pub fn next_u64(&mut self) -> u64 {
        assert!(self.remaining >= 2, "per-index random budget exhausted");
        self.remaining -= 2;
        self.rng.next_u64()
    }

    pub fn next_u128(&mut self) -> u128 {
        let hi = self.next_u64() as u128;
        let lo = self.next_u64() as u128;
        (hi << 64) | lo
    }

    /// Uniform on `[0, 1)` with 53 random bits.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (-53f64).exp2()
    }

    /// Uniform integer in `[0, bound)` by rejection-free widening multiply.
    pub fn below(&mut self, bound: u64) -> u64 {
        ((self.next_u64() as u128 * bound as u128) >> 64) as u64
    }

    /// Uniform residue on the grid. Always consumes two `u64` draws so the
    /// budget does not depend on `Q`.
    pub fn grid_residue(&mut self, grid: Grid) -> u128 {
        grid.wrap(self.next_u128())
    }
}

/// Uniform point of `Z_{2^Q}` from a cursor.
pub fn sample_uniform(cursor: &mut Cursor, grid: Grid) -> UnitPoint {
    grid.point_wrapping(cursor.grid_residue(grid))
}
