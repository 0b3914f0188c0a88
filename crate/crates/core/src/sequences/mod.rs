//! Target-radius sequences `b_1 ≥ b_2 ≥ … > 0`, admissibility checks, exact
//! partial sums, and the derived sequence `b′` (see [`derive_bprime`]).

mod derived;
mod grammar;

pub use derived::{derive_bprime, DerivedSequence};
pub use grammar::{parse_sequence, SequenceSpec};

use num_bigint::{BigInt, BigUint};
use num_rational::{BigRational, Ratio};
use num_traits::{ToPrimitive, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::exec::Schedule;
use crate::fixedpoint::{Grid, Radius};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SequenceError {
    #[error("inadmissible at index {index}: {reason}")]
    Inadmissible { index: u64, reason: &'static str },
    #[error("horizon must be at least 1")]
    EmptyHorizon,
    #[error("sequence specification: {0}")]
    Grammar(String),
    #[error("reading {path}: {message}")]
    Io { path: String, message: String },
}

/// Anything that supplies radii `b_i` for `i ≥ 1`.
pub trait Targets: Sync {
    /// `b_i` as a real.
    fn value(&self, i: u64) -> f64;

    /// `b_i` exactly, when the generator is rational-valued.
    fn exact(&self, i: u64) -> Option<BigRational>;

    /// `floor(b_i · 2^Q)`, clamped to half the circle.
    fn radius(&self, i: u64, grid: Grid) -> Radius;

    /// Spec-grammar form, for output echo.
    fn label(&self) -> String;
}

/// The built-in generators. Coefficients are exact rationals parsed from
/// decimal text, so harmonic, constant and power sequences are rational-valued.
#[derive(Clone, Debug, PartialEq)]
pub enum TargetSequence {
    /// `c / i^p`; `p = 1` is harmonic, `p = 0` constant.
    Power { c: Ratio<u64>, p: u32 },
    /// `c / (i · ln(i + 1))`.
    LogHarmonic { c: f64 },
    /// Explicit list; `b_i = 0` past its end.
    Explicit { values: Vec<Ratio<u64>>, source: String },
}

impl TargetSequence {
    pub fn harmonic(c: Ratio<u64>) -> Self {
        TargetSequence::Power { c, p: 1 }
    }

    pub fn constant(c: Ratio<u64>) -> Self {
        TargetSequence::Power { c, p: 0 }
    }

    pub fn power(c: Ratio<u64>, p: u32) -> Self {
        TargetSequence::Power { c, p }
    }

    pub fn log_harmonic(c: f64) -> Self {
        TargetSequence::LogHarmonic { c }
    }

    pub fn explicit(values: Vec<Ratio<u64>>, source: impl Into<String>) -> Self {
        TargetSequence::Explicit { values, source: source.into() }
    }

    /// `floor(b_i / k · 2^Q)`, clamped to 1/2.
    pub(crate) fn radius_scaled(&self, i: u64, k: u64, grid: Grid) -> Radius {
        debug_assert!(i >= 1 && k >= 1);
        let ratio = |c: &Ratio<u64>, extra: Option<u128>| -> Radius {
            let (num, den) = (*c.numer() as u128, *c.denom() as u128);
            if num == 0 {
                return grid.radius_saturating(0);
            }
            match extra.and_then(|e| den.checked_mul(e)).and_then(|d| d.checked_mul(k as u128)) {
                // An overflowing quotient is at least 2^128 > 1/2.
                Some(den) => grid.radius_saturating(grid.scaled_floor(num, den).unwrap_or(u128::MAX)),
                None => {
                    let den = BigUint::from(den)
                        * BigUint::from(i).pow(match self {
                            TargetSequence::Power { p, .. } => *p,
                            _ => 0,
                        })
                        * BigUint::from(k);
                    let r = (BigUint::from(num) << grid.bits() as usize) / den;
                    grid.radius_saturating(r.to_u128().unwrap_or(u128::MAX))
                }
            }
        };
        match self {
            TargetSequence::Power { c, p } => ratio(c, (i as u128).checked_pow(*p)),
            TargetSequence::LogHarmonic { .. } => grid.radius_from_f64(self.value(i) / k as f64),
            TargetSequence::Explicit { values, .. } => match values.get(i as usize - 1) {
                Some(c) => ratio(c, Some(1)),
                None => grid.radius_saturating(0),
            },
        }
    }
}

fn ratio_to_big(c: &Ratio<u64>) -> BigRational {
    BigRational::new(BigInt::from(*c.numer()), BigInt::from(*c.denom()))
}

fn ratio_label(c: &Ratio<u64>) -> String {
    if *c.denom() == 1 {
        c.numer().to_string()
    } else {
        format!("{}/{}", c.numer(), c.denom())
    }
}

impl Targets for TargetSequence {
    fn value(&self, i: u64) -> f64 {
        match self {
            TargetSequence::Power { c, p } => {
                let c = *c.numer() as f64 / *c.denom() as f64;
                match p {
                    0 => c,
                    1 => c / i as f64,
                    _ => c / (i as f64).powi(*p as i32),
                }
            }
            TargetSequence::LogHarmonic { c } => c / (i as f64 * ((i + 1) as f64).ln()),
            TargetSequence::Explicit { values, .. } => values
                .get(i as usize - 1)
                .map_or(0.0, |c| *c.numer() as f64 / *c.denom() as f64),
        }
    }

    fn exact(&self, i: u64) -> Option<BigRational> {
        match self {
            TargetSequence::Power { c, p } => {
                Some(ratio_to_big(c) / BigRational::from_integer(BigInt::from(i).pow(*p)))
            }
            TargetSequence::LogHarmonic { .. } => None,
            TargetSequence::Explicit { values, .. } => {
                Some(values.get(i as usize - 1).map_or_else(BigRational::zero, ratio_to_big))
            }
        }
    }

    fn radius(&self, i: u64, grid: Grid) -> Radius {
        self.radius_scaled(i, 1, grid)
    }

    fn label(&self) -> String {
        match self {
            TargetSequence::Power { c, p: 0 } => format!("const:{}", ratio_label(c)),
            TargetSequence::Power { c, p: 1 } => format!("harmonic:{}", ratio_label(c)),
            TargetSequence::Power { c, p } => format!("power:{}:{p}", ratio_label(c)),
            TargetSequence::LogHarmonic { c } => format!("logharmonic:{c}"),
            TargetSequence::Explicit { source, .. } => format!("file:{source}"),
        }
    }
}

/// Neumaier-compensated running sum.
#[derive(Clone, Copy, Debug, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// A partial sum, exact when every term is rational and the range is short.
#[derive(Clone, Debug, PartialEq)]
pub enum PartialSum {
    Exact(BigRational),
    Approx(f64),
}

impl PartialSum {
    pub fn to_f64(&self) -> f64 {
        match self {
            PartialSum::Exact(r) => r.to_f64().unwrap_or(f64::NAN),
            PartialSum::Approx(x) => *x,
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, PartialSum::Exact(_))
    }
}

/// Longest range summed in exact rational arithmetic; harmonic denominators
/// grow like `lcm(1..n)`, which gets expensive beyond this.
pub const EXACT_SUM_TERMS: u64 = 1024;

/// `Σ_{i=from}^{to} b_i`; an empty range (`from > to`) sums to exact 0.
pub fn prefix_sum(seq: &impl Targets, from: u64, to: u64) -> PartialSum {
    assert!(from >= 1, "sequences are indexed from 1");
    if from > to {
        return PartialSum::Exact(BigRational::zero());
    }
    if to - from < EXACT_SUM_TERMS {
        let exact: Option<BigRational> = (from..=to).map(|i| seq.exact(i)).sum();
        if let Some(s) = exact {
            return PartialSum::Exact(s);
        }
    }
    let mut acc = CompensatedSum::default();
    for i in from..=to {
        acc.add(seq.value(i));
    }
    PartialSum::Approx(acc.value())
}

/// Outcome of [`check_admissible`] for a sequence that passed the hard checks.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AdmissibilityReport {
    pub horizon: u64,
    pub prefix_sum: f64,
    /// `S_N − S_{⌊N/2⌋}`.
    pub tail_growth: f64,
    /// `log2(b_{⌊N/2⌋} / b_N)`; above 1 the terms decay faster than `1/i`.
    pub decay_exponent: f64,
    /// Heuristic only: divergence cannot be decided from a prefix.
    pub suspected_convergent: bool,
}

/// Decay exponent above which a prefix is flagged as convergent-looking.
pub const STALL_EXPONENT: f64 = 1.5;
/// Last-doubling growth, as a fraction of `S_N`, below which a prefix is flagged.
pub const STALL_GROWTH: f64 = 0.01;

/// Checks `b_i > 0` and `b_{i+1} ≤ b_i` on `[1, N]` and reports prefix growth.
pub fn check_admissible(seq: &TargetSequence, horizon: u64) -> Result<AdmissibilityReport, SequenceError> {
    if horizon == 0 {
        return Err(SequenceError::EmptyHorizon);
    }
    let mut acc = CompensatedSum::default();
    let mut half_sum = 0.0;
    let half = horizon / 2;
    for i in 1..=horizon {
        let positive = match seq {
            TargetSequence::Explicit { values, .. } => {
                values.get(i as usize - 1).is_some_and(|c| *c.numer() > 0)
            }
            _ => seq.value(i) > 0.0,
        };
        if !positive {
            return Err(SequenceError::Inadmissible { index: i, reason: "non-positive term" });
        }
        if i > 1 {
            let increasing = match seq {
                TargetSequence::Explicit { values, .. } => {
                    values[i as usize - 1] > values[i as usize - 2]
                }
                _ => seq.value(i) > seq.value(i - 1),
            };
            if increasing {
                return Err(SequenceError::Inadmissible { index: i, reason: "increasing term" });
            }
        }
        acc.add(seq.value(i));
        if i == half {
            half_sum = acc.value();
        }
    }
    let total = acc.value();
    let tail_growth = total - half_sum;
    let decay_exponent =
        if half >= 1 { (seq.value(half) / seq.value(horizon)).log2() } else { 0.0 };
    Ok(AdmissibilityReport {
        horizon,
        prefix_sum: total,
        tail_growth,
        decay_exponent,
        suspected_convergent: horizon >= 2
            && (decay_exponent > STALL_EXPONENT || tail_growth < STALL_GROWTH * total),
    })
}

/// `b_i` is non-increasing and `i·b_i` is non-increasing on `[1, N]`.
/// Exact for rational sequences.
pub fn check_monotone_with_index_weight(seq: &impl Targets, horizon: u64) -> Result<(), SequenceError> {
    let mut prev: Option<(BigRational, BigRational)> = None;
    let mut prev_f: Option<(f64, f64)> = None;
    for i in 1..=horizon {
        match seq.exact(i) {
            Some(b) => {
                let ib = &b * BigRational::from_integer(BigInt::from(i));
                if let Some((pb, pib)) = &prev {
                    if b > *pb {
                        return Err(SequenceError::Inadmissible { index: i, reason: "increasing term" });
                    }
                    if ib > *pib {
                        return Err(SequenceError::Inadmissible { index: i, reason: "i·b_i increasing" });
                    }
                }
                prev = Some((b, ib));
            }
            None => {
                let b = seq.value(i);
                let ib = b * i as f64;
                if let Some((pb, pib)) = prev_f {
                    if b > pb {
                        return Err(SequenceError::Inadmissible { index: i, reason: "increasing term" });
                    }
                    if ib > pib * (1.0 + 4.0 * f64::EPSILON) {
                        return Err(SequenceError::Inadmissible { index: i, reason: "i·b_i increasing" });
                    }
                }
                prev_f = Some((b, ib));
            }
        }
    }
    Ok(())
}

/// Precomputed integer radii `r_1, …, r_N` for hot loops.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RadiusTable {
    grid: Grid,
    radii: Vec<u128>,
}

impl RadiusTable {
    pub fn build(seq: &impl Targets, grid: Grid, horizon: u64, schedule: Schedule) -> Self {
        let radii = schedule.map(1..horizon + 1, |i| seq.radius(i, grid).r());
        RadiusTable { grid, radii }
    }

    /// Radii given directly, `radii[0]` being `r_1`.
    pub fn from_radii(grid: Grid, radii: Vec<u128>) -> Self {
        RadiusTable { grid, radii: radii.into_iter().map(|r| r.min(grid.half())).collect() }
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn horizon(&self) -> u64 {
        self.radii.len() as u64
    }

    /// `r_i` for `1 ≤ i ≤ N`.
    #[inline]
    pub fn get(&self, i: u64) -> u128 {
        self.radii[i as usize - 1]
    }

    pub fn as_slice(&self) -> &[u128] {
        &self.radii
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: u64, d: u64) -> Ratio<u64> {
        Ratio::new(n, d)
    }

    #[test]
    fn admissibility_examples() {
        let h = check_admissible(&TargetSequence::harmonic(r(1, 1)), 100).unwrap();
        assert!((h.prefix_sum - 5.187377517639621).abs() < 1e-12);
        assert!(!h.suspected_convergent);
        let basel = check_admissible(&TargetSequence::power(r(1, 1), 2), 100).unwrap();
        assert!((basel.prefix_sum - 1.6349839001848923).abs() < 1e-12);
        assert!(basel.suspected_convergent);
        let c = check_admissible(&TargetSequence::constant(r(1, 2)), 100).unwrap();
        assert!(!c.suspected_convergent);
        let lh = check_admissible(&TargetSequence::log_harmonic(1.0), 100).unwrap();
        assert!(!lh.suspected_convergent);
    }

    #[test]
    fn inadmissible_sequences_report_first_violation() {
        let up = TargetSequence::explicit(vec![r(1, 2), r(1, 3), r(1, 2)], "mem");
        assert_eq!(
            check_admissible(&up, 3),
            Err(SequenceError::Inadmissible { index: 3, reason: "increasing term" })
        );
        let zero = TargetSequence::constant(r(0, 1));
        assert!(matches!(check_admissible(&zero, 5), Err(SequenceError::Inadmissible { index: 1, .. })));
        let short = TargetSequence::explicit(vec![r(1, 2)], "mem");
        assert!(matches!(check_admissible(&short, 2), Err(SequenceError::Inadmissible { index: 2, .. })));
        assert_eq!(check_admissible(&zero, 0), Err(SequenceError::EmptyHorizon));
    }

    #[test]
    fn prefix_sum_examples() {
        let h = TargetSequence::harmonic(r(1, 1));
        assert_eq!(prefix_sum(&h, 1, 1), PartialSum::Exact(BigRational::from_integer(1.into())));
        // H_11 = 83711/27720
        assert_eq!(
            prefix_sum(&h, 1, 11),
            PartialSum::Exact(BigRational::new(83711.into(), 27720.into()))
        );
        assert!((prefix_sum(&h, 1, 11).to_f64() - 3.0198773448773446).abs() < 1e-15);
        assert_eq!(prefix_sum(&h, 5, 4), PartialSum::Exact(BigRational::zero()));
        let long = prefix_sum(&h, 1, 100_000);
        assert!(!long.is_exact());
        // H_n = ln n + γ + 1/(2n) − 1/(12n²) + …
        let n = 100_000f64;
        let asymptotic = n.ln() + 0.5772156649015329 + 0.5 / n - 1.0 / (12.0 * n * n);
        assert!((long.to_f64() - asymptotic).abs() < 1e-12);
        assert!(!prefix_sum(&TargetSequence::log_harmonic(1.0), 1, 3).is_exact());
    }

    #[test]
    fn radii_quantize_toward_zero() {
        let g = Grid::new(16).unwrap();
        let h = TargetSequence::harmonic(r(1, 1));
        assert_eq!(h.radius(1, g).r(), 32768);
        assert_eq!(h.radius(3, g).r(), 21845);
        assert_eq!(TargetSequence::harmonic(r(1, 4)).radius(3, g).r(), 5461);
        assert_eq!(TargetSequence::constant(r(1, 2)).radius(9, g).r(), 32768);
        assert_eq!(TargetSequence::constant(r(0, 1)).radius(9, g).r(), 0);
        let g128 = Grid::new(128).unwrap();
        assert_eq!(h.radius(1, g128).r(), 1u128 << 127);
        assert_eq!(h.radius(4, g128).r(), 1u128 << 126);
        // i^p overflow falls back to big integers.
        let tiny = TargetSequence::power(r(1, 1), 9).radius(1 << 20, g128).r();
        assert_eq!(tiny, 0);
        let p2 = TargetSequence::power(r(1, 1), 2).radius(1 << 40, Grid::new(100).unwrap()).r();
        assert_eq!(p2, 1 << 20);
    }

    #[test]
    fn index_weighted_monotonicity() {
        assert!(check_monotone_with_index_weight(&TargetSequence::harmonic(r(1, 4)), 1000).is_ok());
        assert!(check_monotone_with_index_weight(&TargetSequence::constant(r(1, 4)), 10).is_err());
        assert!(check_monotone_with_index_weight(&TargetSequence::log_harmonic(1.0), 1000).is_ok());
    }

    #[test]
    fn radius_table_matches_pointwise() {
        let g = Grid::new(64).unwrap();
        let h = TargetSequence::harmonic(r(1, 1));
        let t = RadiusTable::build(&h, g, 1000, Schedule::Auto);
        assert_eq!(t.horizon(), 1000);
        assert!((1..=1000).all(|i| t.get(i) == h.radius(i, g).r()));
    }
}
