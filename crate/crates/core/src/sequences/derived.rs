use num_bigint::BigInt;
use num_rational::BigRational;
use serde::Serialize;

use super::{prefix_sum, CompensatedSum, PartialSum, SequenceError, TargetSequence, Targets, EXACT_SUM_TERMS};
use crate::fixedpoint::{Grid, Radius};

/// `b′_n = min(1/(16n), b_n/k)` where `n` lies in the `k`-th greedy block.
///
/// Block 2 is `[1, n_2]`, block `k ≥ 3` is `[n_{k−1}+1, n_k]`, each the shortest
/// run whose `b`-sum reaches `k`. Only the block ends are stored.
#[derive(Clone, Debug, PartialEq)]
pub struct DerivedSequence {
    base: TargetSequence,
    horizon: u64,
    block_ends: Vec<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BlockSummary {
    pub k: u64,
    pub start: u64,
    pub end: u64,
    pub complete: bool,
}

/// Relative band around an integer target where the float running sum is
/// not trusted and the block sum is recomputed exactly.
const TIE_BAND: f64 = 1e-9;

fn block_reaches(base: &TargetSequence, start: u64, end: u64, k: u64, approx: f64) -> bool {
    if end - start < 4 * EXACT_SUM_TERMS {
        if let PartialSum::Exact(s) = prefix_sum(base, start, end) {
            return s >= BigRational::from_integer(BigInt::from(k));
        }
    }
    approx >= k as f64
}

/// Greedy block construction over `[1, N]`.
pub fn derive_bprime(base: &TargetSequence, horizon: u64) -> Result<DerivedSequence, SequenceError> {
    if horizon == 0 {
        return Err(SequenceError::EmptyHorizon);
    }
    match base {
        TargetSequence::Explicit { .. } => {
            super::check_admissible(base, horizon)?;
        }
        _ => {
            if base.value(1) <= 0.0 {
                return Err(SequenceError::Inadmissible { index: 1, reason: "non-positive term" });
            }
        }
    }
    let mut block_ends = Vec::new();
    let mut k = 2u64;
    let mut start = 1u64;
    let mut acc = CompensatedSum::default();
    for n in 1..=horizon {
        acc.add(base.value(n));
        let s = acc.value();
        let target = k as f64;
        let done = if s >= target * (1.0 + TIE_BAND) {
            true
        } else if s > target * (1.0 - TIE_BAND) {
            block_reaches(base, start, n, k, s)
        } else {
            false
        };
        if done {
            block_ends.push(n);
            k += 1;
            start = n + 1;
            acc = CompensatedSum::default();
        }
    }
    Ok(DerivedSequence { base: base.clone(), horizon, block_ends })
}

impl DerivedSequence {
    pub fn base(&self) -> &TargetSequence {
        &self.base
    }

    pub fn horizon(&self) -> u64 {
        self.horizon
    }

    /// `n_2 < n_3 < …`, completed blocks only.
    pub fn block_ends(&self) -> &[u64] {
        &self.block_ends
    }

    /// The horizon cuts the last block short (always true unless `N` is itself a block end).
    pub fn incomplete_final_block(&self) -> bool {
        self.block_ends.last() != Some(&self.horizon)
    }

    /// Block number `k` of index `n`; indices past the last completed block
    /// belong to the open block.
    pub fn block_of(&self, n: u64) -> u64 {
        2 + self.block_ends.partition_point(|&e| e < n) as u64
    }

    pub fn blocks(&self) -> Vec<BlockSummary> {
        let mut out = Vec::with_capacity(self.block_ends.len() + 1);
        let mut start = 1;
        for (i, &end) in self.block_ends.iter().enumerate() {
            out.push(BlockSummary { k: i as u64 + 2, start, end, complete: true });
            start = end + 1;
        }
        if start <= self.horizon {
            out.push(BlockSummary {
                k: self.block_ends.len() as u64 + 2,
                start,
                end: self.horizon,
                complete: false,
            });
        }
        out
    }

    /// `c_n = b_n / k`.
    pub fn c(&self, n: u64) -> f64 {
        self.base.value(n) / self.block_of(n) as f64
    }

    pub fn c_exact(&self, n: u64) -> Option<BigRational> {
        let k = BigRational::from_integer(BigInt::from(self.block_of(n)));
        self.base.exact(n).map(|b| b / k)
    }

    fn check_index(&self, n: u64) {
        assert!(
            (1..=self.horizon).contains(&n),
            "index {n} outside derived horizon [1, {}]",
            self.horizon
        );
    }
}

impl Targets for DerivedSequence {
    fn value(&self, n: u64) -> f64 {
        self.check_index(n);
        (1.0 / (16.0 * n as f64)).min(self.c(n))
    }

    fn exact(&self, n: u64) -> Option<BigRational> {
        self.check_index(n);
        let envelope = BigRational::new(BigInt::from(1), BigInt::from(16) * BigInt::from(n));
        self.c_exact(n).map(|c| c.min(envelope))
    }

    /// Quantized `b′_n`, stepped one unit below `1/(16n)` when it would
    /// otherwise equal it.
    fn radius(&self, n: u64, grid: Grid) -> Radius {
        self.check_index(n);
        let den = 16u128 * n as u128;
        let (env, rem) = grid.pow2_divmod(den).expect("denominator ≥ 16");
        let c = self.base.radius_scaled(n, self.block_of(n), grid).r();
        let mut r = c.min(env);
        if rem == 0 && r == env {
            r -= 1;
        }
        grid.radius_saturating(r)
    }

    fn label(&self) -> String {
        format!("bprime({})", self.base.label())
    }
}
