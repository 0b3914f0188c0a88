//! Measure-preserving maps of the quantized circle: rotations, interval
//! exchanges and odd-multiplier expanding maps.
//!
//! Every variant is an exact bijection of `Z_{2^Q}`. For `TimesOdd` this is
//! a property of the grid only: the real map `x ↦ m·x mod 1` is `m`-to-one,
//! which [`IntervalMap::is_invertible`] reports.

mod iet;
mod permutation;
mod spec;

pub use iet::{random_iet, Iet, RANDOM_IET_WORDS};
pub use permutation::Permutation;
pub use spec::{parse_map, MapDescription};

use thiserror::Error;

use crate::fixedpoint::{FixedPointError, Grid, UnitPoint};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MapError {
    #[error("an interval exchange needs at least 2 intervals, got {0}")]
    TooFewIntervals(usize),
    #[error("{0:?} is not a permutation of 1..d")]
    NotAPermutation(Vec<usize>),
    #[error("{lengths} lengths but a permutation of {perm} symbols")]
    LengthMismatch { lengths: usize, perm: usize },
    #[error("length of interval {index} must be a positive grid value")]
    BadLength { index: usize },
    #[error("interval lengths must sum to exactly 1")]
    LengthsDoNotSumToOne,
    #[error("multiplier {0} must be odd and at least 3")]
    BadMultiplier(u128),
    #[error("map specification: {0}")]
    Grammar(String),
    #[error(transparent)]
    FixedPoint(#[from] FixedPointError),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum MapKind {
    Rotation { alpha: u128 },
    Iet(Iet),
    TimesOdd { m: u128 },
}

/// A grid bijection `f : Z_{2^Q} → Z_{2^Q}` from one of the three families.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IntervalMap {
    grid: Grid,
    kind: MapKind,
}

impl IntervalMap {
    /// Rotation by `alpha`, nudged up to the next odd residue if needed so the
    /// orbit period is the full `2^Q`.
    pub fn rotation(alpha: UnitPoint) -> Self {
        let grid = alpha.grid();
        IntervalMap { grid, kind: MapKind::Rotation { alpha: grid.wrap(alpha.k() | 1) } }
    }

    /// Rotation by exactly `alpha`, including periodic (even) residues and 0.
    pub fn rotation_exact(alpha: UnitPoint) -> Self {
        IntervalMap { grid: alpha.grid(), kind: MapKind::Rotation { alpha: alpha.k() } }
    }

    pub fn iet(iet: Iet) -> Self {
        IntervalMap { grid: iet.grid(), kind: MapKind::Iet(iet) }
    }

    /// `x ↦ m·x mod 2^Q`. Even multipliers would lose a bit per step and
    /// collapse every orbit to 0, so they are rejected.
    pub fn times_odd(grid: Grid, m: u128) -> Result<Self, MapError> {
        if m < 3 || m % 2 == 0 {
            return Err(MapError::BadMultiplier(m));
        }
        Ok(IntervalMap { grid, kind: MapKind::TimesOdd { m } })
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn kind(&self) -> &MapKind {
        &self.kind
    }

    /// Rotation angle, if this is a rotation.
    pub fn rotation_angle(&self) -> Option<u128> {
        match self.kind {
            MapKind::Rotation { alpha } => Some(alpha),
            _ => None,
        }
    }

    /// Whether the underlying real map is invertible (false for `TimesOdd`).
    pub fn is_invertible(&self) -> bool {
        !matches!(self.kind, MapKind::TimesOdd { .. })
    }

    #[inline]
    pub fn apply_raw(&self, x: u128) -> u128 {
        match &self.kind {
            MapKind::Rotation { alpha } => self.grid.add(x, *alpha),
            MapKind::Iet(t) => t.apply(x),
            MapKind::TimesOdd { m } => self.grid.mul(x, *m),
        }
    }

    pub fn apply(&self, x: UnitPoint) -> Result<UnitPoint, MapError> {
        self.check(x)?;
        Ok(self.grid.point_wrapping(self.apply_raw(x.k())))
    }

    /// `f^n(x)`; closed form `x + n·α` for rotations, repeated application otherwise.
    pub fn iterate_raw(&self, x: u128, n: u64) -> u128 {
        match &self.kind {
            MapKind::Rotation { alpha } => self.grid.add(x, self.grid.mul(*alpha, n as u128)),
            MapKind::Iet(t) => (0..n).fold(x, |p, _| t.apply(p)),
            MapKind::TimesOdd { m } => (0..n).fold(x, |p, _| self.grid.mul(p, *m)),
        }
    }

    pub fn iterate(&self, x: UnitPoint, n: u64) -> Result<UnitPoint, MapError> {
        self.check(x)?;
        Ok(self.grid.point_wrapping(self.iterate_raw(x.k(), n)))
    }

    /// Lazy orbit `x, f(x), f²(x), …`.
    pub fn orbit(&self, x: UnitPoint) -> Result<Orbit<'_>, MapError> {
        self.check(x)?;
        Ok(Orbit { map: self, next: x.k() })
    }

    /// Inverse map, for the invertible variants.
    pub fn inverse(&self) -> Option<IntervalMap> {
        match &self.kind {
            MapKind::Rotation { alpha } => Some(IntervalMap {
                grid: self.grid,
                kind: MapKind::Rotation { alpha: self.grid.neg(*alpha) },
            }),
            MapKind::Iet(t) => Some(IntervalMap::iet(t.inverse())),
            MapKind::TimesOdd { .. } => None,
        }
    }

    /// Sorted interior breakpoints: `{1 − α}` for a rotation, the interior
    /// prefix sums for an exchange, `{⌊j·2^Q/m⌋}` for `TimesOdd(m)`.
    pub fn discontinuities(&self) -> Vec<UnitPoint> {
        let raw: Vec<u128> = match &self.kind {
            MapKind::Rotation { alpha } if *alpha == 0 => Vec::new(),
            MapKind::Rotation { alpha } => vec![self.grid.neg(*alpha)],
            MapKind::Iet(t) => t.discontinuities(),
            MapKind::TimesOdd { m } => {
                (1..*m).map(|j| self.grid.scaled_floor(j, *m).expect("j/m < 1")).collect()
            }
        };
        raw.into_iter().map(|k| self.grid.point_wrapping(k)).collect()
    }

    fn check(&self, x: UnitPoint) -> Result<(), MapError> {
        if x.bits() != self.grid.bits() {
            return Err(FixedPointError::GridMismatch {
                left: self.grid.bits(),
                right: x.bits(),
            }
            .into());
        }
        Ok(())
    }
}

/// Iterator over an orbit; never ends.
pub struct Orbit<'a> {
    map: &'a IntervalMap,
    next: u128,
}

impl Iterator for Orbit<'_> {
    type Item = UnitPoint;

    fn next(&mut self) -> Option<UnitPoint> {
        let current = self.next;
        self.next = self.map.apply_raw(current);
        Some(self.map.grid.point_wrapping(current))
    }
}
