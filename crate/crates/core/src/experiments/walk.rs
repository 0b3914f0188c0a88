use serde::Serialize;

use super::{binomial_stderr, check_grid, ExperimentError};
use crate::exec::Schedule;
use crate::fixedpoint::UnitPoint;
use crate::maps::{IntervalMap, MapKind};
use crate::rng::{streams, RngStream};
use crate::sequences::{check_monotone_with_index_weight, RadiusTable, Targets};

/// Walks `p_i = f^i(p_0)` (or `p_0` when `mover` is `None`) against centers
/// `c_i = c_0 + i·α` and reports every `i ∈ [1, N]` with `dist(p_i, c_i) ≤ r_i`.
#[inline]
fn walk(
    mover: Option<&IntervalMap>,
    start: u128,
    center: u128,
    alpha: u128,
    radii: &RadiusTable,
    mut on_hit: impl FnMut(u64),
) {
    let g = radii.grid();
    let mut p = start;
    let mut c = center;
    for (i, &r) in radii.as_slice().iter().enumerate() {
        if let Some(f) = mover {
            p = f.apply_raw(p);
        }
        c = g.add(c, alpha);
        if g.dist(p, c) <= r {
            on_hit(i as u64 + 1);
        }
    }
}

/// All hit indices of one `(x, y)` pair.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HitRecord {
    pub indices: Vec<u64>,
    pub horizon: u64,
    /// `E(N) = Σ_{i ≤ N} 2 b_i`, the count expected under independence.
    pub expected_total: f64,
}

impl HitRecord {
    pub fn count(&self) -> u64 {
        self.indices.len() as u64
    }

    /// `c(n) = #{hits ≤ n}`.
    pub fn count_up_to(&self, n: u64) -> u64 {
        self.indices.partition_point(|&i| i <= n) as u64
    }
}

fn expected_total(radii: &RadiusTable) -> f64 {
    let scale = radii.grid().size_f64();
    radii.as_slice().iter().map(|&r| 2.0 * r as f64 / scale).sum()
}

/// Hits of `f^i y` in `B(x + iα, b_i)` for `1 ≤ i ≤ N`.
pub fn hit_sequence(
    f: &IntervalMap,
    alpha: UnitPoint,
    x: UnitPoint,
    y: UnitPoint,
    radii: &RadiusTable,
) -> Result<HitRecord, ExperimentError> {
    check_grid(f.grid(), &[alpha, x, y])?;
    check_grid(radii.grid(), &[x])?;
    let mut indices = Vec::new();
    walk(Some(f), y.k(), x.k(), alpha.k(), radii, |i| indices.push(i));
    Ok(HitRecord { indices, horizon: radii.horizon(), expected_total: expected_total(radii) })
}

/// Per-sample digest: enough to evaluate any tail window.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct HitSummary {
    /// The sampled starting point.
    pub point: u128,
    pub hits: u64,
    /// 0 when there is no hit.
    pub first: u64,
    pub last: u64,
}

impl HitSummary {
    /// At least one hit in `[n, N]`.
    pub fn hits_tail(&self, n: u64) -> bool {
        self.hits > 0 && self.last >= n
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TailFraction {
    pub start: u64,
    pub hitting: u64,
    pub fraction: f64,
    pub stderr: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LimsupEstimate {
    pub horizon: u64,
    pub samples: u64,
    pub tails: Vec<TailFraction>,
    pub expected_total: f64,
    #[serde(skip)]
    pub per_sample: Vec<HitSummary>,
}

impl LimsupEstimate {
    pub fn tail(&self, start: u64) -> Option<&TailFraction> {
        self.tails.iter().find(|t| t.start == start)
    }
}

/// The default tail grid `1, N/4, N/2, 3N/4` (deduplicated, at least 1).
pub fn tail_starts(horizon: u64) -> Vec<u64> {
    let mut v: Vec<u64> = [1, horizon / 4, horizon / 2, 3 * horizon / 4].iter().map(|&n| n.max(1)).collect();
    v.dedup();
    v
}

fn summarize(mover: Option<&IntervalMap>, start: u128, center: u128, alpha: u128, radii: &RadiusTable) -> HitSummary {
    let mut s = HitSummary { point: start, ..HitSummary::default() };
    walk(mover, start, center, alpha, radii, |i| {
        if s.hits == 0 {
            s.first = i;
        }
        s.hits += 1;
        s.last = i;
    });
    s
}

pub(crate) fn tail_estimate(per_sample: Vec<HitSummary>, radii: &RadiusTable, tails: &[u64]) -> LimsupEstimate {
    let samples = per_sample.len() as u64;
    let tails = tails
        .iter()
        .map(|&start| {
            let hitting = per_sample.iter().filter(|s| s.hits_tail(start)).count() as u64;
            TailFraction {
                start,
                hitting,
                fraction: if samples == 0 { 0.0 } else { hitting as f64 / samples as f64 },
                stderr: binomial_stderr(hitting, samples),
            }
        })
        .collect();
    LimsupEstimate {
        horizon: radii.horizon(),
        samples,
        tails,
        expected_total: expected_total(radii),
        per_sample,
    }
}

pub(crate) struct TailRun<'a> {
    pub mover: Option<&'a IntervalMap>,
    pub alpha: u128,
    pub center: u128,
    pub rng: RngStream,
    pub samples: u64,
    pub index_offset: u64,
}

impl TailRun<'_> {
    /// One summary per sampled starting point, in index order.
    pub fn run(&self, radii: &RadiusTable, schedule: Schedule) -> Vec<HitSummary> {
        let g = radii.grid();
        schedule.map(0..self.samples, |i| {
            let start = self.rng.cursor(self.index_offset + i).grid_residue(g);
            summarize(self.mover, start, self.center, self.alpha, radii)
        })
    }
}

/// Fraction of sampled `y` with a hit `f^i y ∈ B(x + iα, b_i)` in each tail window.
#[allow(clippy::too_many_arguments)]
pub fn limsup_measure(
    f: &IntervalMap,
    alpha: UnitPoint,
    x: UnitPoint,
    radii: &RadiusTable,
    y_samples: u64,
    seed: u64,
    tails: &[u64],
    schedule: Schedule,
) -> Result<LimsupEstimate, ExperimentError> {
    check_grid(f.grid(), &[alpha, x])?;
    check_grid(radii.grid(), &[x])?;
    let run = TailRun {
        mover: Some(f),
        alpha: alpha.k(),
        center: x.k(),
        rng: RngStream::new(seed, streams::Y_SAMPLES),
        samples: y_samples,
        index_offset: 0,
    };
    Ok(tail_estimate(run.run(radii, schedule), radii, tails))
}

/// Fraction of sampled `y` lying in `B(x + iα, b_i)` for some `i` in each tail window.
pub fn kurzweil_run(
    alpha: UnitPoint,
    x: UnitPoint,
    radii: &RadiusTable,
    y_samples: u64,
    seed: u64,
    tails: &[u64],
    schedule: Schedule,
) -> Result<LimsupEstimate, ExperimentError> {
    check_grid(radii.grid(), &[alpha, x])?;
    let run = TailRun {
        mover: None,
        alpha: alpha.k(),
        center: x.k(),
        rng: RngStream::new(seed, streams::Y_SAMPLES),
        samples: y_samples,
        index_offset: 0,
    };
    Ok(tail_estimate(run.run(radii, schedule), radii, tails))
}

/// Fraction of sampled `x` with `f^i x ∈ B(y_center, b_i)` in each tail window.
pub fn fixed_center_run(
    f: &IntervalMap,
    y_center: UnitPoint,
    radii: &RadiusTable,
    x_samples: u64,
    seed: u64,
    tails: &[u64],
    schedule: Schedule,
) -> Result<LimsupEstimate, ExperimentError> {
    check_grid(f.grid(), &[y_center])?;
    check_grid(radii.grid(), &[y_center])?;
    let run = TailRun {
        mover: Some(f),
        alpha: 0,
        center: y_center.k(),
        rng: RngStream::new(seed, streams::X_SAMPLES),
        samples: x_samples,
        index_offset: 0,
    };
    Ok(tail_estimate(run.run(radii, schedule), radii, tails))
}

/// Hits of `T^i δ′ ∈ B(δ, b_i)` for an interval exchange `T` and two of its
/// discontinuities. Requires `b_i` and `i·b_i` non-increasing on `[1, N]`.
pub fn discontinuity_run(
    t: &IntervalMap,
    delta: UnitPoint,
    delta_prime: UnitPoint,
    seq: &impl Targets,
    horizon: u64,
) -> Result<HitRecord, ExperimentError> {
    if !matches!(t.kind(), MapKind::Iet(_)) {
        return Err(ExperimentError::NotAnIet);
    }
    check_grid(t.grid(), &[delta, delta_prime])?;
    let disc = t.discontinuities();
    for p in [delta, delta_prime] {
        if !disc.contains(&p) {
            return Err(ExperimentError::NotADiscontinuity(p.to_string()));
        }
    }
    check_monotone_with_index_weight(seq, horizon)?;
    let radii = RadiusTable::build(seq, t.grid(), horizon, Schedule::Auto);
    let mut indices = Vec::new();
    walk(Some(t), delta_prime.k(), delta.k(), 0, &radii, |i| indices.push(i));
    Ok(HitRecord { indices, horizon, expected_total: expected_total(&radii) })
}

/// Outcome of checking that a hit at `i ≥ 2` for `(x, y)` is a hit at
/// `i − 1` for `(x + α, f y)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ShiftCheck {
    pub hits: u64,
    pub checked: u64,
    pub violations: Vec<u64>,
}

pub fn shift_implication(
    f: &IntervalMap,
    alpha: UnitPoint,
    x: UnitPoint,
    y: UnitPoint,
    radii: &RadiusTable,
) -> Result<ShiftCheck, ExperimentError> {
    let original = hit_sequence(f, alpha, x, y, radii)?;
    let g = f.grid();
    let shifted_x = g.point_wrapping(g.add(x.k(), alpha.k()));
    let shifted_y = g.point_wrapping(f.apply_raw(y.k()));
    let shifted = hit_sequence(f, alpha, shifted_x, shifted_y, radii)?;
    let mut checked = 0;
    let mut violations = Vec::new();
    for &i in original.indices.iter().filter(|&&i| i >= 2) {
        checked += 1;
        if shifted.indices.binary_search(&(i - 1)).is_err() {
            violations.push(i);
        }
    }
    Ok(ShiftCheck { hits: original.count(), checked, violations })
}
