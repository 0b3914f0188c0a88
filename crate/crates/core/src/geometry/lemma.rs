//! Exhaustive check of `λ(J ∩ B) > (99/101)·σ·l(J)` for sets `B ⊂ Z_q`
//! invariant under the shift by `q/k` and arcs `J` of length in `(100/k, 101/k)`.

use serde::Serialize;

use super::GeometryError;
use crate::qset::QuantizedSet;
use crate::rng::{streams, RngStream};

/// `C = 99/101` as (numerator, denominator).
pub const LEMMA_CONSTANT: (u128, u128) = (99, 101);

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LemmaOutcome {
    pub q: usize,
    pub k: usize,
    pub intersection: usize,
    /// `λ(J ∩ B)`.
    pub measured: f64,
    /// `C·σ·l(J)`.
    pub bound: f64,
    /// `λ(J ∩ B) / (σ·l(J))`; the lemma asks for more than `C`.
    pub ratio: f64,
    pub passes: bool,
}

/// `sigma` is a point count (`σ = sigma/q`), defaulting to `|B|`.
pub fn interval_lemma_check(
    set: &QuantizedSet,
    k: usize,
    j_start: usize,
    j_len: usize,
    sigma: Option<usize>,
) -> Result<LemmaOutcome, GeometryError> {
    let q = set.modulus();
    let fail = |what: &str| Err(GeometryError::Precondition(what.into()));
    if k == 0 || q % k != 0 {
        return fail("q divisible by k");
    }
    if !set.is_invariant_under(q / k) {
        return fail("B invariant under shift by q/k");
    }
    let (qq, kk, len) = (q as u128, k as u128, j_len as u128);
    if !(100 * qq < kk * len && kk * len < 101 * qq) || j_len > q {
        return fail("100/k < l(J) < 101/k");
    }
    let sigma = sigma.unwrap_or_else(|| set.count());
    if sigma > set.count() {
        return fail("λ(B) ≥ σ");
    }
    if sigma == 0 {
        return fail("σ > 0");
    }
    let hit = set.count_in_arc(j_start, j_len);
    let (c_num, c_den) = LEMMA_CONSTANT;
    // hit/q > (99/101)·(σ/q)·(len/q)  ⇔  101·hit·q > 99·σ·len
    let passes = c_den * hit as u128 * qq > c_num * sigma as u128 * len;
    let (qf, lf, sf) = (q as f64, j_len as f64 / q as f64, sigma as f64 / q as f64);
    Ok(LemmaOutcome {
        q,
        k,
        intersection: hit,
        measured: hit as f64 / qf,
        bound: c_num as f64 / c_den as f64 * sf * lf,
        ratio: (hit as f64 / qf) / (sf * lf),
        passes,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct LemmaInstance {
    pub set: QuantizedSet,
    pub k: usize,
    pub start: usize,
    pub len: usize,
}

/// Periods `k` drawn by [`random_lemma_instance`].
pub const LEMMA_PERIODS: [usize; 3] = [128, 256, 512];

/// A random valid instance on `Z_q` (`q` a multiple of 512): `B` repeats a
/// pattern with cells kept independently with probability `density`, `k`
/// is one of [`LEMMA_PERIODS`], and `J` is a uniform arc of admissible length.
pub fn random_lemma_instance(q: usize, density: f64, seed: u64, index: u64) -> LemmaInstance {
    assert!(q % 512 == 0 && q >= 1024, "q must be a multiple of 512, at least 1024");
    let longest_pattern = q / LEMMA_PERIODS[0];
    let rng = RngStream::new(seed, streams::LEMMA).with_words_per_index(2 * (longest_pattern as u64 + 8));
    let mut c = rng.cursor(index);
    let k = LEMMA_PERIODS[c.below(LEMMA_PERIODS.len() as u64) as usize];
    let period = q / k;
    let mut pattern: Vec<bool> = (0..period).map(|_| c.next_f64() < density).collect();
    if !pattern.iter().any(|&b| b) {
        pattern[0] = true;
    }
    let set = QuantizedSet::from_fn(q, |i| pattern[i % period]);
    // integers strictly inside (100q/k, 101q/k)
    let lo = 100 * period + 1;
    let hi = 101 * period - 1;
    let len = lo + c.below((hi - lo + 1) as u64) as usize;
    let start = c.below(q as u64) as usize;
    LemmaInstance { set, k, start, len }
}

#[cfg(test)]
mod tests {
    use super::*;

    const Q: usize = 1 << 16;

    #[test]
    fn full_set_ratio_is_one() {
        let b = QuantizedSet::full(Q);
        let o = interval_lemma_check(&b, 128, 5, 100 * 512 + 256, None).unwrap();
        assert_eq!(o.ratio, 1.0);
        assert!(o.passes);
    }

    #[test]
    fn half_density_comb() {
        // B = ∪_j [j/128, j/128 + 1/256), σ = 1/2, l(J) = 100.5/128
        let b = QuantizedSet::from_fn(Q, |i| i % 512 < 256);
        assert_eq!(b.measure(), 0.5);
        for start in [0, 1, 255, 256, 300, 511, 40_000] {
            let o = interval_lemma_check(&b, 128, start, 100 * 512 + 256, None).unwrap();
            assert!(o.passes, "start {start}: {o:?}");
            assert!(o.ratio > 0.99);
        }
    }

    #[test]
    fn precondition_violations_are_named() {
        let b = QuantizedSet::from_fn(Q, |i| i % 512 < 256);
        let err = |r: Result<LemmaOutcome, GeometryError>| match r {
            Err(GeometryError::Precondition(s)) => s,
            other => panic!("{other:?}"),
        };
        assert_eq!(err(interval_lemma_check(&b, 100, 0, 1, None)), "q divisible by k");
        assert_eq!(err(interval_lemma_check(&b, 256, 0, 100 * 256 + 1, None)), "B invariant under shift by q/k");
        assert_eq!(err(interval_lemma_check(&b, 128, 0, 100 * 512, None)), "100/k < l(J) < 101/k");
        assert_eq!(err(interval_lemma_check(&b, 128, 0, 100 * 512 + 1, Some(Q))), "λ(B) ≥ σ");
    }

    #[test]
    fn random_instances_are_valid_and_pass() {
        for i in 0..100 {
            let inst = random_lemma_instance(Q, 0.3, 4, i);
            let o = interval_lemma_check(&inst.set, inst.k, inst.start, inst.len, None).unwrap();
            assert!(o.passes, "{i}: {o:?}");
        }
    }
}
