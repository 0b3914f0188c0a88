//! Strip sets in the `(α, y)` unit square and their measures.
//!
//! `(α, y)` lies in the strip `V_n` of radius `b` when `f^n y` is within
//! circle distance `b` of `n·α`. Circle distance realizes the union over
//! integer shifts, so no extension of `f` to the real line is needed.

mod lemma;
mod parallelogram;
mod union;

pub use lemma::{interval_lemma_check, random_lemma_instance, LemmaInstance, LemmaOutcome, LEMMA_CONSTANT};
pub use parallelogram::{parallelogram_decomposition, ParallelogramReport};
pub use union::{select_window, select_window_exact, union_measure, UnionWindow};

use serde::Serialize;
use thiserror::Error;

use crate::exec::Schedule;
use crate::fixedpoint::{FixedPointError, Radius, UnitPoint};
use crate::maps::IntervalMap;
use crate::rng::{streams, RngStream};
use crate::sequences::Targets;

/// Largest grid enumerated pair by pair.
pub const EXHAUSTIVE_MAX_BITS: u32 = 12;
/// Smallest Monte Carlo run accepted by the strip and pair estimators.
pub const MIN_SAMPLES: u64 = 10_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error(transparent)]
    FixedPoint(#[from] FixedPointError),
    #[error("pair indices must satisfy j < k, got j={j}, k={k}")]
    BadPair { j: u64, k: u64 },
    #[error("strip index must be at least 1")]
    ZeroIndex,
    #[error("exhaustive enumeration needs Q ≤ {EXHAUSTIVE_MAX_BITS}, got Q={0}")]
    ExhaustiveTooLarge(u32),
    #[error("Monte Carlo needs at least {MIN_SAMPLES} samples, got {0}")]
    TooFewSamples(u64),
    #[error("insufficient horizon: 2·Σ reached {achieved:.6} by n={horizon} without entering (3/8, 1/2)")]
    InsufficientHorizon { achieved: f64, horizon: u64 },
    #[error("window overshoot: 2·Σ jumped from below 3/8 to {achieved:.6} ≥ 1/2 at n={n}")]
    WindowOvershoot { achieved: f64, n: u64 },
    #[error("precondition failed: {0}")]
    Precondition(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    MonteCarlo,
    ExhaustiveGrid,
    ClosedForm,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::MonteCarlo => "monte_carlo",
            Method::ExhaustiveGrid => "exhaustive_grid",
            Method::ClosedForm => "closed_form",
        }
    }
}

/// A measured area with its reference value.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MeasureEstimate {
    pub estimate: f64,
    /// Binomial standard error; zero unless `method` is Monte Carlo.
    pub stderr: f64,
    pub samples: u64,
    pub hits: u64,
    pub method: Method,
    /// Closed-form value (or certified bound) the estimate is compared to.
    pub reference: f64,
}

impl MeasureEstimate {
    fn monte_carlo(hits: u64, samples: u64, reference: f64) -> Self {
        let p = hits as f64 / samples as f64;
        MeasureEstimate {
            estimate: p,
            stderr: (p * (1.0 - p) / samples as f64).sqrt(),
            samples,
            hits,
            method: Method::MonteCarlo,
            reference,
        }
    }

    pub fn closed_form(value: f64) -> Self {
        MeasureEstimate {
            estimate: value,
            stderr: 0.0,
            samples: 0,
            hits: 0,
            method: Method::ClosedForm,
            reference: value,
        }
    }

    /// Standard error used by gates: the larger of the observed one and the
    /// one implied by the reference, so a lucky zero-hit run cannot pass.
    pub fn gate_sigma(&self) -> f64 {
        if self.method != Method::MonteCarlo {
            return 0.0;
        }
        let p0 = self.reference.clamp(0.0, 1.0);
        self.stderr.max((p0 * (1.0 - p0) / self.samples as f64).sqrt())
    }

    /// `(estimate − reference) / σ`.
    pub fn z_score(&self) -> f64 {
        let s = self.gate_sigma();
        if s == 0.0 {
            if self.estimate == self.reference { 0.0 } else { f64::INFINITY }
        } else {
            (self.estimate - self.reference) / s
        }
    }

    /// `|estimate − reference| ≤ sigmas · σ`, or `≤ tolerance` for exact methods.
    pub fn agrees(&self, sigmas: f64, tolerance: f64) -> bool {
        match self.method {
            Method::MonteCarlo => self.z_score().abs() <= sigmas,
            _ => (self.estimate - self.reference).abs() <= tolerance,
        }
    }
}

/// The strip `V_n` of a map at a given radius.
#[derive(Clone, Copy, Debug)]
pub struct StripSpec<'a> {
    pub map: &'a IntervalMap,
    pub n: u64,
    pub radius: Radius,
    /// The unquantized radius, for the closed-form reference.
    pub b: f64,
}

impl<'a> StripSpec<'a> {
    pub fn new(map: &'a IntervalMap, n: u64, radius: Radius) -> Result<Self, GeometryError> {
        if n == 0 {
            return Err(GeometryError::ZeroIndex);
        }
        if radius.bits() != map.grid().bits() {
            return Err(FixedPointError::GridMismatch { left: map.grid().bits(), right: radius.bits() }.into());
        }
        Ok(StripSpec { map, n, radius, b: radius.to_f64() })
    }

    /// Strip of radius `b_n` taken from a sequence.
    pub fn from_targets(map: &'a IntervalMap, seq: &impl Targets, n: u64) -> Result<Self, GeometryError> {
        if n == 0 {
            return Err(GeometryError::ZeroIndex);
        }
        let radius = seq.radius(n, map.grid());
        Ok(StripSpec { map, n, radius, b: seq.value(n) })
    }

    #[inline]
    fn contains_raw(&self, alpha: u128, fny: u128) -> bool {
        let g = self.map.grid();
        g.dist(fny, g.mul(alpha, self.n as u128)) <= self.radius.r()
    }
}

/// `dist(f^n y, n·α) ≤ r`.
pub fn strip_member(spec: &StripSpec<'_>, alpha: UnitPoint, y: UnitPoint) -> Result<bool, GeometryError> {
    let g = spec.map.grid();
    for p in [alpha, y] {
        if p.bits() != g.bits() {
            return Err(FixedPointError::GridMismatch { left: g.bits(), right: p.bits() }.into());
        }
    }
    Ok(spec.contains_raw(alpha.k(), spec.map.iterate_raw(y.k(), spec.n)))
}

/// Monte Carlo sampling plan: `samples` uniform `(α, y)` pairs keyed by `seed`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Sampling {
    pub samples: u64,
    pub seed: u64,
    pub schedule: Schedule,
}

impl Sampling {
    pub fn new(samples: u64, seed: u64) -> Self {
        Sampling { samples, seed, schedule: Schedule::Auto }
    }

    pub fn with_schedule(mut self, schedule: Schedule) -> Self {
        self.schedule = schedule;
        self
    }

    fn check(&self) -> Result<(), GeometryError> {
        if self.samples < MIN_SAMPLES {
            return Err(GeometryError::TooFewSamples(self.samples));
        }
        Ok(())
    }
}

/// Estimate of `λ₂(V_n)` from uniform samples; reference `2b`.
pub fn measure_strip(spec: &StripSpec<'_>, plan: Sampling) -> Result<MeasureEstimate, GeometryError> {
    plan.check()?;
    let g = spec.map.grid();
    let rng = RngStream::new(plan.seed, streams::STRIP);
    let hits = plan.schedule.count(0..plan.samples, |i| {
        let mut c = rng.cursor(i);
        let alpha = c.grid_residue(g);
        let y = c.grid_residue(g);
        spec.contains_raw(alpha, spec.map.iterate_raw(y, spec.n))
    });
    Ok(MeasureEstimate::monte_carlo(hits, plan.samples, 2.0 * spec.b))
}

/// Exact fraction of grid pairs `(α, y)` in the strip, for `Q ≤ 12`.
pub fn measure_strip_exhaustive(spec: &StripSpec<'_>, schedule: Schedule) -> Result<MeasureEstimate, GeometryError> {
    measure_exhaustive(spec.map, &[*spec], schedule, 2.0 * spec.b)
}

/// Estimate of `λ₂(V_j ∩ V_k)`; reference `4 b_j b_k`.
pub fn measure_pair(
    spec_j: &StripSpec<'_>,
    spec_k: &StripSpec<'_>,
    plan: Sampling,
) -> Result<MeasureEstimate, GeometryError> {
    check_pair(spec_j, spec_k)?;
    plan.check()?;
    let map = spec_j.map;
    let g = map.grid();
    let rng = RngStream::new(plan.seed, streams::PAIR);
    let (j, k) = (spec_j.n, spec_k.n);
    let hits = plan.schedule.count(0..plan.samples, |i| {
        let mut c = rng.cursor(i);
        let alpha = c.grid_residue(g);
        let y = c.grid_residue(g);
        let fj = map.iterate_raw(y, j);
        spec_j.contains_raw(alpha, fj) && spec_k.contains_raw(alpha, map.iterate_raw(fj, k - j))
    });
    Ok(MeasureEstimate::monte_carlo(hits, plan.samples, 4.0 * spec_j.b * spec_k.b))
}

/// Exact grid fraction of `V_j ∩ V_k`, for `Q ≤ 12`.
pub fn measure_pair_exhaustive(
    spec_j: &StripSpec<'_>,
    spec_k: &StripSpec<'_>,
    schedule: Schedule,
) -> Result<MeasureEstimate, GeometryError> {
    check_pair(spec_j, spec_k)?;
    measure_exhaustive(spec_j.map, &[*spec_j, *spec_k], schedule, 4.0 * spec_j.b * spec_k.b)
}

fn check_pair(a: &StripSpec<'_>, b: &StripSpec<'_>) -> Result<(), GeometryError> {
    if a.n >= b.n {
        return Err(GeometryError::BadPair { j: a.n, k: b.n });
    }
    if a.map != b.map {
        return Err(GeometryError::Precondition("pair strips must share one map".into()));
    }
    Ok(())
}

/// Counts `(α, y) ∈ Z_q²` lying in every strip of `specs`.
fn measure_exhaustive(
    map: &IntervalMap,
    specs: &[StripSpec<'_>],
    schedule: Schedule,
    reference: f64,
) -> Result<MeasureEstimate, GeometryError> {
    let g = map.grid();
    if g.bits() > EXHAUSTIVE_MAX_BITS {
        return Err(GeometryError::ExhaustiveTooLarge(g.bits()));
    }
    let q = 1u64 << g.bits();
    let hits = schedule.sum(0..q, |y| {
        let images: Vec<u128> = specs.iter().map(|s| map.iterate_raw(y as u128, s.n)).collect();
        (0..q as u128)
            .filter(|&alpha| specs.iter().zip(&images).all(|(s, &z)| s.contains_raw(alpha, z)))
            .count() as u64
    });
    let total = q * q;
    Ok(MeasureEstimate {
        estimate: hits as f64 / total as f64,
        stderr: 0.0,
        samples: total,
        hits,
        method: Method::ExhaustiveGrid,
        reference,
    })
}
