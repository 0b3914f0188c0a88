use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::ToPrimitive;
use serde::Serialize;

use super::{check_grid, ExperimentError};
use crate::exec::Schedule;
use crate::fixedpoint::{Grid, UnitPoint};
use crate::maps::IntervalMap;
use crate::rng::{streams, RngStream};

/// `τ_r(x, y) = min{n ≥ 1 : dist(f^n x, y) < r}`, or censored at the cap.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum HittingTime {
    Found(u64),
    Censored { cap: u64 },
}

impl HittingTime {
    pub fn found(self) -> Option<u64> {
        match self {
            HittingTime::Found(n) => Some(n),
            HittingTime::Censored { .. } => None,
        }
    }
}

/// Smallest integer distance that fails `d < r`, i.e. `⌈r·2^Q⌉`, saturated
/// just above half the circle.
fn strict_threshold(grid: Grid, r: f64) -> Result<u128, ExperimentError> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(ExperimentError::BadParameter(format!("radius {r} must be positive")));
    }
    if r > 0.5 {
        return Ok(grid.half() + 1);
    }
    let exact = BigRational::from_float(r).expect("finite");
    let scaled = exact * BigRational::from_integer(BigInt::from(grid.modulus_big()));
    Ok(scaled.ceil().to_integer().to_u128().expect("r ≤ 1/2"))
}

/// First-passage times of one orbit into shrinking balls, in one pass.
fn first_passages(f: &IntervalMap, x: u128, y: u128, thresholds: &[u128], cap: u64) -> Vec<HittingTime> {
    let g = f.grid();
    let mut out = vec![HittingTime::Censored { cap }; thresholds.len()];
    let mut pending = thresholds.len();
    let mut p = x;
    for n in 1..=cap {
        p = f.apply_raw(p);
        let d = g.dist(p, y);
        for (slot, &t) in out.iter_mut().zip(thresholds) {
            if matches!(slot, HittingTime::Censored { .. }) && d < t {
                *slot = HittingTime::Found(n);
                pending -= 1;
            }
        }
        if pending == 0 {
            break;
        }
    }
    out
}

pub fn hitting_time(
    f: &IntervalMap,
    x: UnitPoint,
    y: UnitPoint,
    r: f64,
    cap: u64,
) -> Result<HittingTime, ExperimentError> {
    check_grid(f.grid(), &[x, y])?;
    let t = strict_threshold(f.grid(), r)?;
    Ok(first_passages(f, x.k(), y.k(), &[t], cap)[0])
}

/// Mean `log τ_r` over sampled pairs against `−log r`, with a least-squares slope.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LogLawProfile {
    pub radii: Vec<f64>,
    /// Mean of `ln τ_r` over uncensored pairs; `None` if every pair was censored.
    pub mean_log_tau: Vec<Option<f64>>,
    pub censored: Vec<u64>,
    pub pairs: u64,
    pub cap: u64,
    pub slope: Option<f64>,
    pub intercept: Option<f64>,
    /// `times[p][j]` is `τ_{r_j}` for pair `p`.
    #[serde(skip)]
    pub times: Vec<Vec<HittingTime>>,
    #[serde(skip)]
    pub points: Vec<(u128, u128)>,
}

/// Least squares `y ≈ a + s·x`; `None` with fewer than two distinct `x`.
pub fn fit_line(xs: &[f64], ys: &[f64]) -> Option<(f64, f64)> {
    let n = xs.len() as f64;
    if xs.len() < 2 {
        return None;
    }
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let s = sxy / sxx;
    Some((s, my - s * mx))
}

/// Hitting times for `pairs` uniform `(x, y)` over the radius grid. Censored
/// times are left out of the means rather than imputed.
pub fn loglaw_profile(
    f: &IntervalMap,
    radii: &[f64],
    pairs: u64,
    cap: u64,
    seed: u64,
    schedule: Schedule,
) -> Result<LogLawProfile, ExperimentError> {
    let g = f.grid();
    let thresholds = radii.iter().map(|&r| strict_threshold(g, r)).collect::<Result<Vec<_>, _>>()?;
    let rng = RngStream::new(seed, streams::X_SAMPLES);
    let rows: Vec<((u128, u128), Vec<HittingTime>)> = schedule.map(0..pairs, |i| {
        let mut c = rng.cursor(i);
        let (x, y) = (c.grid_residue(g), c.grid_residue(g));
        ((x, y), first_passages(f, x, y, &thresholds, cap))
    });
    let (points, times): (Vec<_>, Vec<_>) = rows.into_iter().unzip();
    let mut mean_log_tau = Vec::with_capacity(radii.len());
    let mut censored = Vec::with_capacity(radii.len());
    for j in 0..radii.len() {
        let found: Vec<f64> = times.iter().filter_map(|row| row[j].found()).map(|n| (n as f64).ln()).collect();
        censored.push(pairs - found.len() as u64);
        mean_log_tau.push((!found.is_empty()).then(|| found.iter().sum::<f64>() / found.len() as f64));
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = radii
        .iter()
        .zip(&mean_log_tau)
        .filter_map(|(r, m)| m.map(|m| (-r.ln(), m)))
        .unzip();
    let fit = fit_line(&xs, &ys);
    Ok(LogLawProfile {
        radii: radii.to_vec(),
        mean_log_tau,
        censored,
        pairs,
        cap,
        slope: fit.map(|f| f.0),
        intercept: fit.map(|f| f.1),
        times,
        points,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_rotation_hits_at_five() {
        let g = Grid::new(64).unwrap();
        let f = IntervalMap::rotation(g.parse_point("golden").unwrap());
        let zero = g.point(0).unwrap();
        assert_eq!(hitting_time(&f, zero, zero, 0.1, 100).unwrap(), HittingTime::Found(5));
        assert_eq!(hitting_time(&f, zero, zero, 0.6, 100).unwrap(), HittingTime::Found(1));
        assert_eq!(hitting_time(&f, zero, zero, 1e-6, 10).unwrap(), HittingTime::Censored { cap: 10 });
        assert!(hitting_time(&f, zero, zero, 0.0, 10).is_err());
    }

    #[test]
    fn threshold_is_strict() {
        let g = Grid::new(16).unwrap();
        assert_eq!(strict_threshold(g, 0.25).unwrap(), 16384);
        assert_eq!(strict_threshold(g, 0.1).unwrap(), 6554);
        // a rotation by exactly r·2^Q lands at distance r: not a hit
        let f = IntervalMap::rotation_exact(g.point(16384).unwrap());
        let zero = g.point(0).unwrap();
        assert_eq!(hitting_time(&f, zero, zero, 0.25, 4).unwrap(), HittingTime::Found(4));
    }

    #[test]
    fn line_fit() {
        let (s, a) = fit_line(&[1.0, 2.0, 3.0], &[3.0, 5.0, 7.0]).unwrap();
        assert!((s - 2.0).abs() < 1e-12 && (a - 1.0).abs() < 1e-12);
        assert!(fit_line(&[1.0], &[1.0]).is_none());
        assert!(fit_line(&[2.0, 2.0], &[1.0, 3.0]).is_none());
    }

    #[test]
    fn rotation_profile_is_schedule_independent() {
        let g = Grid::new(64).unwrap();
        let f = IntervalMap::rotation(g.parse_point("sqrt2m1").unwrap());
        let radii: Vec<f64> = (3..=8).map(|k| (-(k as f64)).exp2()).collect();
        let a = loglaw_profile(&f, &radii, 40, 1 << 16, 3, Schedule::Sequential).unwrap();
        let b = loglaw_profile(&f, &radii, 40, 1 << 16, 3, Schedule::Parallel).unwrap();
        assert_eq!(a, b);
        assert!(a.censored.iter().all(|&c| c == 0));
        let s = a.slope.unwrap();
        assert!((0.7..1.3).contains(&s), "slope {s}");
    }
}
