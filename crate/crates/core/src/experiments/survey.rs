use serde::Serialize;

use super::walk::{tail_estimate, TailRun};
use super::{check_grid, ExperimentError};
use crate::exec::Schedule;
use crate::fixedpoint::UnitPoint;
use crate::maps::IntervalMap;
use crate::rng::{streams, RngStream};
use crate::sequences::RadiusTable;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AlphaRow {
    pub index: u64,
    /// Residue of the sampled angle (always odd).
    pub alpha: String,
    pub fraction: f64,
    pub good: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AlphaSurvey {
    pub theta: f64,
    pub tail_start: u64,
    pub y_samples: u64,
    pub rows: Vec<AlphaRow>,
    pub good_fraction: f64,
    /// Counts of per-angle tail fractions in `[0, 0.1), …, [0.9, 1.0]`.
    pub histogram: [u64; 10],
}

/// For each sampled `α`, the fraction of sampled `y` hitting `B(x + iα, b_i)`
/// along `f^i y` in the tail `[N/2, N]`; `α` is good when that fraction is at
/// least `theta`.
#[allow(clippy::too_many_arguments)]
pub fn alpha_survey(
    f: &IntervalMap,
    x: UnitPoint,
    radii: &RadiusTable,
    alpha_samples: u64,
    y_samples: u64,
    theta: f64,
    seed: u64,
    schedule: Schedule,
) -> Result<AlphaSurvey, ExperimentError> {
    check_grid(f.grid(), &[x])?;
    check_grid(radii.grid(), &[x])?;
    if !(0.0..=1.0).contains(&theta) {
        return Err(ExperimentError::BadParameter(format!("threshold {theta} outside [0, 1]")));
    }
    let g = f.grid();
    let tail_start = (radii.horizon() / 2).max(1);
    let alpha_rng = RngStream::new(seed, streams::ALPHA_SAMPLES);
    let mut rows = Vec::with_capacity(alpha_samples as usize);
    let mut histogram = [0u64; 10];
    for j in 0..alpha_samples {
        let alpha = g.wrap(alpha_rng.cursor(j).grid_residue(g) | 1);
        let run = TailRun {
            mover: Some(f),
            alpha,
            center: x.k(),
            rng: RngStream::new(seed, streams::Y_SAMPLES),
            samples: y_samples,
            index_offset: j * y_samples,
        };
        let est = tail_estimate(run.run(radii, schedule), radii, &[tail_start]);
        let fraction = est.tails[0].fraction;
        histogram[((fraction * 10.0) as usize).min(9)] += 1;
        rows.push(AlphaRow { index: j, alpha: alpha.to_string(), fraction, good: fraction >= theta });
    }
    let good = rows.iter().filter(|r| r.good).count();
    Ok(AlphaSurvey {
        theta,
        tail_start,
        y_samples,
        good_fraction: if alpha_samples == 0 { 0.0 } else { good as f64 / alpha_samples as f64 },
        rows,
        histogram,
    })
}

#[cfg(test)]
mod tests {
    use num_rational::Ratio;

    use super::*;
    use crate::fixedpoint::Grid;
    use crate::sequences::TargetSequence;

    #[test]
    fn zero_threshold_is_vacuous() {
        let g = Grid::new(64).unwrap();
        let f = IntervalMap::rotation(g.parse_point("golden").unwrap());
        let radii = RadiusTable::build(&TargetSequence::harmonic(Ratio::new(1, 100)), g, 200, Schedule::Auto);
        let s = alpha_survey(&f, g.point(0).unwrap(), &radii, 20, 10, 0.0, 1, Schedule::Auto).unwrap();
        assert_eq!(s.good_fraction, 1.0);
        assert_eq!(s.histogram.iter().sum::<u64>(), 20);
        assert!(s.rows.iter().all(|r| r.alpha.parse::<u128>().unwrap() % 2 == 1));
        assert!(alpha_survey(&f, g.point(0).unwrap(), &radii, 1, 1, 1.5, 1, Schedule::Auto).is_err());
    }
}
