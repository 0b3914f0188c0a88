//! Window selection for `Σ_{n=N₀}^{N} b_{tn}` and the measure of the union
//! `∪_{n=N₀}^{N} V_{tn}`.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use serde::Serialize;

use super::{GeometryError, MeasureEstimate, Sampling};
use crate::diophantine::first_hit_arc;
use crate::fixedpoint::Grid;
use crate::maps::{IntervalMap, MapKind};
use crate::rng::{streams, RngStream};
use crate::sequences::Targets;

/// Longest generic (orbit-walking) union check, in strip indices.
pub const GENERIC_UNION_MAX: u64 = 1 << 26;

/// A window `[N₀, N]` with `3/8 < 2·Σ r_{tn}/2^Q < 1/2`, summed exactly over
/// the quantized radii the estimators use.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct UnionWindow {
    pub t: u64,
    pub n0: u64,
    pub n: u64,
    pub bits: u32,
    /// `Σ r_{tn}` as a decimal integer.
    pub radius_sum: String,
    /// `2Σ` as an exact fraction over `2^Q`.
    pub two_sigma_exact: String,
    pub two_sigma: f64,
    /// `2Σ − (2Σ)²`, as an exact fraction and as a float.
    pub bonferroni_exact: String,
    pub bonferroni: f64,
    pub in_window: bool,
}

fn to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// Smallest `N ≥ N₀` with `2Σ_{N₀}^{N} b_{tn} > 3/8`, over quantized radii.
/// `max_n` bounds `N` (so `t·max_n` must lie within the sequence's domain).
pub fn select_window(
    t: u64,
    n0: u64,
    seq: &(impl Targets + ?Sized),
    grid: Grid,
    max_n: u64,
) -> Result<UnionWindow, GeometryError> {
    if t == 0 || n0 == 0 {
        return Err(GeometryError::Precondition("t and N₀ must be positive".into()));
    }
    if grid.bits() < 4 {
        return Err(GeometryError::Precondition("window selection needs Q ≥ 4".into()));
    }
    // 2Σ > 3/8  ⇔  Σr > 3·2^(Q−4);  2Σ < 1/2  ⇔  Σr < 2^(Q−2)
    let lower = 3u128 << (grid.bits() - 4);
    let upper = 1u128 << (grid.bits() - 2);
    let mut sum = 0u128;
    for n in n0..=max_n {
        sum += seq.radius(t * n, grid).r();
        if sum > lower {
            let window = window_from_sum(t, n0, n, grid, sum);
            if sum >= upper {
                return Err(GeometryError::WindowOvershoot { achieved: window.two_sigma, n });
            }
            return Ok(window);
        }
    }
    Err(GeometryError::InsufficientHorizon {
        achieved: 2.0 * sum as f64 / grid.size_f64(),
        horizon: max_n,
    })
}

fn window_from_sum(t: u64, n0: u64, n: u64, grid: Grid, sum: u128) -> UnionWindow {
    let two = BigRational::new(BigInt::from(sum) * 2, BigInt::from(BigUint::from(1u8) << grid.bits() as usize));
    let bonf = &two - &two * &two;
    let lo = BigRational::new(3.into(), 8.into());
    let hi = BigRational::new(1.into(), 2.into());
    UnionWindow {
        t,
        n0,
        n,
        bits: grid.bits(),
        radius_sum: sum.to_string(),
        two_sigma_exact: two.to_string(),
        two_sigma: to_f64(&two),
        bonferroni_exact: bonf.to_string(),
        bonferroni: to_f64(&bonf),
        in_window: two > lo && two < hi,
    }
}

/// Window selection in exact rational arithmetic on the unquantized values:
/// the smallest `N` with `2Σ b_{tn} > 3/8`, and that sum.
pub fn select_window_exact(
    t: u64,
    n0: u64,
    seq: &impl Targets,
    max_n: u64,
) -> Result<(u64, BigRational), GeometryError> {
    let lower = BigRational::new(3.into(), 8.into());
    let mut two = BigRational::zero();
    for n in n0..=max_n {
        let b = seq
            .exact(t * n)
            .ok_or_else(|| GeometryError::Precondition("sequence has no exact values".into()))?;
        two += b * BigRational::from_integer(2.into());
        if two > lower {
            return Ok((n, two));
        }
    }
    Err(GeometryError::InsufficientHorizon { achieved: to_f64(&two), horizon: max_n })
}

/// Monte Carlo estimate of `λ₂(∪_{n=N₀}^{N} V_{tn})`, referenced against the
/// Bonferroni bound of the window.
///
/// Rotations on grids up to 64 bits use an exact arithmetic-progression
/// search, which makes windows of ~10^8 strips affordable; other maps walk
/// the orbit.
pub fn union_measure(
    map: &IntervalMap,
    seq: &(impl Targets + ?Sized),
    window: &UnionWindow,
    plan: Sampling,
) -> Result<MeasureEstimate, GeometryError> {
    plan.check()?;
    let walker = UnionWalker::new(map, seq, window)?;
    let rng = RngStream::new(plan.seed, streams::UNION);
    let g = map.grid();
    let hits = plan.schedule.count(0..plan.samples, |i| {
        let mut c = rng.cursor(i);
        let alpha = c.grid_residue(g);
        let y = c.grid_residue(g);
        walker.hits(alpha, y)
    });
    Ok(MeasureEstimate::monte_carlo(hits, plan.samples, window.bonferroni))
}

struct UnionWalker<'a, T: ?Sized> {
    map: &'a IntervalMap,
    seq: &'a T,
    t: u64,
    n0: u64,
    n: u64,
    /// `Some(β)` selects the progression search.
    beta: Option<u128>,
    table: Vec<u128>,
}

impl<'a, T: Targets + ?Sized> UnionWalker<'a, T> {
    fn new(map: &'a IntervalMap, seq: &'a T, w: &UnionWindow) -> Result<Self, GeometryError> {
        if map.grid().bits() != w.bits {
            return Err(GeometryError::Precondition("window and map use different grids".into()));
        }
        let beta = match map.kind() {
            MapKind::Rotation { alpha } if map.grid().bits() <= 64 => Some(*alpha),
            _ => None,
        };
        let mut walker = UnionWalker { map, seq, t: w.t, n0: w.n0, n: w.n, beta, table: Vec::new() };
        if beta.is_none() {
            walker.build_table()?;
        }
        Ok(walker)
    }

    fn build_table(&mut self) -> Result<(), GeometryError> {
        let len = self.n - self.n0 + 1;
        if len > GENERIC_UNION_MAX {
            return Err(GeometryError::Precondition(format!(
                "window of {len} strips is too long to walk for this map"
            )));
        }
        let g = self.map.grid();
        self.table = (self.n0..=self.n).map(|n| self.seq.radius(self.t * n, g).r()).collect();
        Ok(())
    }

    fn hits(&self, alpha: u128, y: u128) -> bool {
        match self.beta {
            Some(beta) => self.hits_progression(alpha, y, beta),
            None => self.hits_walk(alpha, y),
        }
    }

    fn hits_walk(&self, alpha: u128, y: u128) -> bool {
        let g = self.map.grid();
        let mut z = self.map.iterate_raw(y, self.t * self.n0);
        for (off, &r) in self.table.iter().enumerate() {
            if off > 0 {
                z = self.map.iterate_raw(z, self.t);
            }
            let n = self.n0 + off as u64;
            if g.dist(z, g.mul(alpha, (self.t * n) as u128)) <= r {
                return true;
            }
        }
        false
    }

    /// For `f = R_β`, `V_{tn}` holds iff `dist(y, n·a) ≤ r_{tn}` with
    /// `a = t(α − β)`. Radii are non-increasing, so within a dyadic block the
    /// first radius bounds all others: search with it, confirm exactly, and
    /// resume past any false candidate.
    fn hits_progression(&self, alpha: u128, y: u128, beta: u128) -> bool {
        let g = self.map.grid();
        let m = g.modulus().expect("Q ≤ 64");
        let a = g.mul(g.sub(alpha, beta), self.t as u128);
        let radius = |n: u64| self.seq.radius(self.t * n, g).r();
        let mut lo = self.n0;
        while lo <= self.n {
            let hi = (2 * lo - 1).min(self.n);
            let rho = radius(lo);
            let mut s = lo;
            while s <= hi {
                let c = g.sub(y, g.mul(a, s as u128));
                let Some(x) = first_hit_arc(a, m, c, rho) else { break };
                let cand = s as u128 + x;
                if cand > hi as u128 {
                    break;
                }
                let cand = cand as u64;
                if g.dist(y, g.mul(a, cand as u128)) <= radius(cand) {
                    return true;
                }
                s = cand + 1;
            }
            lo = hi + 1;
        }
        false
    }
}

#[cfg(test)]
mod tests {
    use num_rational::Ratio;

    use super::*;
    use crate::exec::Schedule;
    use crate::sequences::{derive_bprime, TargetSequence};

    #[test]
    fn envelope_window_is_eleven() {
        let seq = TargetSequence::harmonic(Ratio::new(1, 16));
        let (n, two) = select_window_exact(1, 1, &seq, 100).unwrap();
        assert_eq!(n, 11);
        assert_eq!(two, BigRational::new(83711.into(), 27720.into()) / BigRational::from_integer(8.into()));
        let w = select_window(1, 1, &seq, Grid::new(64).unwrap(), 100).unwrap();
        assert_eq!(w.n, 11);
        assert!(w.in_window);
        assert!(w.bonferroni > 0.125);
    }

    #[test]
    fn derived_harmonic_windows() {
        let d = derive_bprime(&TargetSequence::harmonic(Ratio::from_integer(1)), 100_000).unwrap();
        let g = Grid::new(64).unwrap();
        for (t, n0) in [(1, 1), (1, 10), (2, 1), (2, 10)] {
            let w = select_window(t, n0, &d, g, 100_000 / t).unwrap();
            assert!(w.in_window, "{w:?}");
            assert!(w.bonferroni > 0.125);
        }
        assert!(matches!(select_window(1, 1, &d, g, 5), Err(GeometryError::InsufficientHorizon { .. })));
    }

    #[test]
    fn overshoot_is_reported() {
        let seq = TargetSequence::constant(Ratio::new(3, 10));
        let err = select_window(1, 1, &seq, Grid::new(32).unwrap(), 10).unwrap_err();
        assert!(matches!(err, GeometryError::WindowOvershoot { n: 1, .. }));
    }

    #[test]
    fn progression_search_matches_orbit_walk() {
        let g = Grid::new(32).unwrap();
        let f = IntervalMap::rotation(g.parse_point("golden").unwrap());
        let d = derive_bprime(&TargetSequence::harmonic(Ratio::from_integer(1)), 4000).unwrap();
        let h = TargetSequence::harmonic(Ratio::new(1, 4));
        let cases: [(u64, u64, &dyn Targets); 4] = [(1, 1, &d), (2, 3, &d), (5, 1, &h), (5, 4, &h)];
        for (t, n0, seq) in cases {
            let w = select_window(t, n0, seq, g, 4000 / t).unwrap();
            let fast = UnionWalker::new(&f, seq, &w).unwrap();
            let mut slow = UnionWalker::new(&f, seq, &w).unwrap();
            slow.beta = None;
            slow.build_table().unwrap();
            let rng = RngStream::new(11, streams::MISC);
            let mut hits = 0;
            for i in 0..3000 {
                let mut c = rng.cursor(i);
                let (a, y) = (c.grid_residue(g), c.grid_residue(g));
                let h = fast.hits(a, y);
                assert_eq!(h, slow.hits(a, y), "t={t} n0={n0} sample {i}");
                hits += h as u32;
            }
            assert!(hits > 300);
        }
    }

    #[test]
    fn union_exceeds_bonferroni_bound() {
        let g = Grid::new(64).unwrap();
        let f = IntervalMap::rotation(g.parse_point("sqrt2m1").unwrap());
        let seq = TargetSequence::harmonic(Ratio::new(1, 16));
        let w = select_window(1, 1, &seq, g, 100).unwrap();
        let e = union_measure(&f, &seq, &w, Sampling::new(20_000, 9).with_schedule(Schedule::Auto)).unwrap();
        assert!(e.estimate - 4.0 * e.stderr > w.bonferroni);
    }
}
