use serde::Serialize;

use super::{check_grid, ExperimentError};
use crate::fixedpoint::UnitPoint;
use crate::maps::IntervalMap;

/// Boxes per axis: dyadic depth 6.
pub const EQUIDIST_CELLS: usize = 64;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DiscrepancyPoint {
    pub n: u64,
    /// `max |#{points in [0,a/64)×[0,b/64)}/n − ab/64²|` over the dyadic grid.
    pub anchored: f64,
    /// Bound on the star discrepancy over all anchored boxes: every box is
    /// bracketed by two grid boxes differing in area by less than `2/64`.
    pub upper: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DiscrepancyProfile {
    pub points: Vec<DiscrepancyPoint>,
    /// Grid discrepancy strictly decreasing across checkpoints.
    pub decreasing: bool,
}

/// Discrepancy of `(x + nα, f^n y)`, `0 ≤ n < N`, at each checkpoint `N`.
pub fn equidistribution_check(
    f: &IntervalMap,
    alpha: UnitPoint,
    x: UnitPoint,
    y: UnitPoint,
    checkpoints: &[u64],
) -> Result<DiscrepancyProfile, ExperimentError> {
    let g = f.grid();
    check_grid(g, &[alpha, x, y])?;
    if g.bits() < 6 {
        return Err(ExperimentError::BadParameter("equidistribution needs Q ≥ 6".into()));
    }
    if checkpoints.is_empty() || checkpoints.windows(2).any(|w| w[0] >= w[1]) || checkpoints[0] == 0 {
        return Err(ExperimentError::BadParameter("checkpoints must be positive and increasing".into()));
    }
    let shift = g.bits() - 6;
    let mut counts = vec![0u64; EQUIDIST_CELLS * EQUIDIST_CELLS];
    let (mut u, mut v) = (x.k(), y.k());
    let mut n = 0u64;
    let mut points = Vec::with_capacity(checkpoints.len());
    for &target in checkpoints {
        while n < target {
            counts[(u >> shift) as usize * EQUIDIST_CELLS + (v >> shift) as usize] += 1;
            u = g.add(u, alpha.k());
            v = f.apply_raw(v);
            n += 1;
        }
        let anchored = anchored_deviation(&counts, n);
        let cell = 1.0 / EQUIDIST_CELLS as f64;
        points.push(DiscrepancyPoint { n, anchored, upper: (anchored + 2.0 * cell).min(1.0) });
    }
    let decreasing = points.windows(2).all(|w| w[1].anchored < w[0].anchored);
    Ok(DiscrepancyProfile { points, decreasing })
}

fn anchored_deviation(counts: &[u64], n: u64) -> f64 {
    let c = EQUIDIST_CELLS;
    let mut prefix = vec![0u64; (c + 1) * (c + 1)];
    let mut worst = 0f64;
    for a in 1..=c {
        for b in 1..=c {
            let v = counts[(a - 1) * c + (b - 1)] + prefix[(a - 1) * (c + 1) + b] + prefix[a * (c + 1) + b - 1]
                - prefix[(a - 1) * (c + 1) + b - 1];
            prefix[a * (c + 1) + b] = v;
            let area = (a * b) as f64 / (c * c) as f64;
            worst = worst.max((v as f64 / n as f64 - area).abs());
        }
    }
    worst
}
