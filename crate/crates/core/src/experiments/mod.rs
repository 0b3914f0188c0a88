//! Hit statistics along orbits: moving targets centered on a rotation orbit,
//! fixed-center targets, discontinuity targets, hitting times, a survey over
//! rotation angles, and equidistribution of the product orbit.
//!
//! "Infinitely many hits" is not observable at a finite horizon `N`; every
//! estimator here reports the fraction of samples with at least one hit in a
//! tail window `[n, N]` instead.

mod equidist;
mod hitting;
mod survey;
mod walk;

pub use equidist::{equidistribution_check, DiscrepancyPoint, DiscrepancyProfile, EQUIDIST_CELLS};
pub use hitting::{hitting_time, loglaw_profile, HittingTime, LogLawProfile};
pub use survey::{alpha_survey, AlphaRow, AlphaSurvey};
pub use walk::{
    discontinuity_run, fixed_center_run, hit_sequence, kurzweil_run, limsup_measure, shift_implication,
    tail_starts, HitRecord, HitSummary, LimsupEstimate, ShiftCheck, TailFraction,
};

use thiserror::Error;

use crate::fixedpoint::{FixedPointError, Grid, UnitPoint};
use crate::sequences::SequenceError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExperimentError {
    #[error(transparent)]
    FixedPoint(#[from] FixedPointError),
    #[error(transparent)]
    Sequence(#[from] SequenceError),
    #[error("{0} is not a discontinuity of the map")]
    NotADiscontinuity(String),
    #[error("this experiment needs an interval exchange")]
    NotAnIet,
    #[error("{0}")]
    BadParameter(String),
}

pub(crate) fn check_grid(grid: Grid, points: &[UnitPoint]) -> Result<(), ExperimentError> {
    for p in points {
        if p.bits() != grid.bits() {
            return Err(FixedPointError::GridMismatch { left: grid.bits(), right: p.bits() }.into());
        }
    }
    Ok(())
}

/// Binomial standard error of a fraction.
pub(crate) fn binomial_stderr(successes: u64, trials: u64) -> f64 {
    if trials == 0 {
        return 0.0;
    }
    let p = successes as f64 / trials as f64;
    (p * (1.0 - p) / trials as f64).sqrt()
}
