//! Exact arithmetic on the quantized circle `Z_{2^Q}`, read as `{k / 2^Q} ⊂ [0, 1)`.
//!
//! Rotations and interval exchanges are piecewise translations, so on this
//! grid they are exact integer maps: orbits of any length carry no rounding.
//! Hot loops work on raw `u128` residues through a [`Grid`]; the checked
//! [`UnitPoint`] / [`Radius`] types carry their `Q` so that mixing grids is a
//! usage error instead of a silent cast.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Smallest and largest supported quantization.
pub const MIN_BITS: u32 = 1;
pub const MAX_BITS: u32 = 128;
/// Quantization used when a run does not say otherwise.
pub const DEFAULT_BITS: u32 = 64;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FixedPointError {
    #[error("quantization bits {0} outside [{MIN_BITS}, {MAX_BITS}]")]
    BitsOutOfRange(u32),
    #[error("value {0} is outside [0, 1)")]
    Domain(String),
    #[error("grid mismatch: Q={left} vs Q={right}")]
    GridMismatch { left: u32, right: u32 },
    #[error("residue {k} does not fit a {bits}-bit grid")]
    ResidueOutOfRange { k: u128, bits: u32 },
    #[error("radius {r} exceeds half the circle on a {bits}-bit grid")]
    RadiusTooLarge { r: u128, bits: u32 },
    #[error("cannot parse point {0:?}")]
    Parse(String),
}

/// The quantized circle `Z_{2^Q}` with its modular operations.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub struct Grid {
    bits: u32,
}

impl TryFrom<u32> for Grid {
    type Error = FixedPointError;
    fn try_from(bits: u32) -> Result<Self, Self::Error> {
        Grid::new(bits)
    }
}

impl From<Grid> for u32 {
    fn from(grid: Grid) -> u32 {
        grid.bits
    }
}

impl Default for Grid {
    fn default() -> Self {
        Grid { bits: DEFAULT_BITS }
    }
}

impl Grid {
    pub fn new(bits: u32) -> Result<Self, FixedPointError> {
        if !(MIN_BITS..=MAX_BITS).contains(&bits) {
            return Err(FixedPointError::BitsOutOfRange(bits));
        }
        Ok(Grid { bits })
    }

    #[inline]
    pub fn bits(self) -> u32 {
        self.bits
    }

    /// `2^Q - 1`; reducing mod `2^Q` is a mask because `2^Q` divides `2^128`.
    #[inline]
    pub fn mask(self) -> u128 {
        if self.bits == 128 {
            u128::MAX
        } else {
            (1u128 << self.bits) - 1
        }
    }

    /// `2^Q` when it fits, i.e. for `Q < 128`.
    pub fn modulus(self) -> Option<u128> {
        1u128.checked_shl(self.bits)
    }

    /// `2^(Q-1)`, the residue of the point 1/2 and the largest circle distance.
    #[inline]
    pub fn half(self) -> u128 {
        1u128 << (self.bits - 1)
    }

    /// Number of grid points as `f64` (`2^Q`).
    #[inline]
    pub fn size_f64(self) -> f64 {
        (self.bits as f64).exp2()
    }

    #[inline]
    pub fn wrap(self, v: u128) -> u128 {
        v & self.mask()
    }

    #[inline]
    pub fn add(self, a: u128, b: u128) -> u128 {
        a.wrapping_add(b) & self.mask()
    }

    #[inline]
    pub fn sub(self, a: u128, b: u128) -> u128 {
        a.wrapping_sub(b) & self.mask()
    }

    #[inline]
    pub fn neg(self, a: u128) -> u128 {
        0u128.wrapping_sub(a) & self.mask()
    }

    /// `n · a mod 2^Q`.
    #[inline]
    pub fn mul(self, a: u128, n: u128) -> u128 {
        a.wrapping_mul(n) & self.mask()
    }

    /// Circle distance between two residues: `min(d, 2^Q - d)` with `d = a - b`.
    #[inline]
    pub fn dist(self, a: u128, b: u128) -> u128 {
        let d = self.sub(a, b);
        d.min(self.neg(d))
    }

    #[inline]
    pub fn to_f64(self, k: u128) -> f64 {
        k as f64 / self.size_f64()
    }

    pub fn contains(self, k: u128) -> bool {
        k <= self.mask()
    }

    pub fn point(self, k: u128) -> Result<UnitPoint, FixedPointError> {
        if !self.contains(k) {
            return Err(FixedPointError::ResidueOutOfRange { k, bits: self.bits });
        }
        Ok(UnitPoint { k, bits: self.bits as u8 })
    }

    /// Point from a residue, reducing it mod `2^Q`.
    pub fn point_wrapping(self, k: u128) -> UnitPoint {
        UnitPoint { k: self.wrap(k), bits: self.bits as u8 }
    }

    pub fn radius(self, r: u128) -> Result<Radius, FixedPointError> {
        if r > self.half() {
            return Err(FixedPointError::RadiusTooLarge { r, bits: self.bits });
        }
        Ok(Radius { r, bits: self.bits as u8 })
    }

    /// Radius clamped to half the circle.
    pub fn radius_saturating(self, r: u128) -> Radius {
        Radius { r: r.min(self.half()), bits: self.bits as u8 }
    }

    /// Radius `floor(x · 2^Q)` for a real `x ≥ 0`, clamped at 1/2.
    pub fn radius_from_f64(self, x: f64) -> Radius {
        if !(x > 0.0) {
            return self.radius_saturating(0);
        }
        if x >= 0.5 {
            return self.radius_saturating(self.half());
        }
        self.radius_saturating((x * self.size_f64()) as u128)
    }

    /// `floor(x · 2^Q)` for `x ∈ [0, 1)`, rounding toward zero.
    pub fn quantize(self, x: f64) -> Result<UnitPoint, FixedPointError> {
        if !(0.0..1.0).contains(&x) {
            return Err(FixedPointError::Domain(x.to_string()));
        }
        // Scaling by a power of two is exact; the cast truncates.
        Ok(UnitPoint { k: (x * self.size_f64()) as u128, bits: self.bits as u8 })
    }

    /// `floor(x · 2^Q)` for an exact rational `x ∈ [0, 1)`.
    pub fn quantize_ratio(self, x: &BigRational) -> Result<UnitPoint, FixedPointError> {
        if x.is_negative() || *x >= BigRational::one() {
            return Err(FixedPointError::Domain(x.to_string()));
        }
        let k = floor_scaled(x, self.bits).to_u128().expect("x < 1 keeps the residue below 2^Q");
        Ok(UnitPoint { k, bits: self.bits as u8 })
    }

    /// `2^Q` as a big integer.
    pub fn modulus_big(self) -> BigUint {
        BigUint::one() << self.bits as usize
    }

    /// Exact `(floor(2^Q / den), 2^Q mod den)` for `den ≥ 1`; `None` only for
    /// `Q = 128, den = 1`, whose quotient does not fit.
    pub fn pow2_divmod(self, den: u128) -> Option<(u128, u128)> {
        assert!(den > 0, "division by zero");
        match self.modulus() {
            Some(m) => Some((m / den, m % den)),
            None => {
                // 2^128 = u128::MAX + 1
                let (q, r) = (u128::MAX / den, u128::MAX % den);
                if r + 1 == den {
                    Some((q.checked_add(1)?, 0))
                } else {
                    Some((q, r + 1))
                }
            }
        }
    }

    /// `floor(num · 2^Q / den)`, or `None` if the result does not fit `u128`.
    pub fn scaled_floor(self, num: u128, den: u128) -> Option<u128> {
        let (q, r) = self.pow2_divmod(den)?;
        let whole = num.checked_mul(q)?;
        let part = match num.checked_mul(r) {
            Some(p) => p / den,
            None => {
                let p = BigUint::from(num) * BigUint::from(r) / BigUint::from(den);
                p.to_u128()?
            }
        };
        whole.checked_add(part)
    }

    /// Parses a point: a decimal (`0.4142`), a fraction (`3/7`), or one of the
    /// named irrationals `sqrt2m1` (√2−1) and `golden` ((√5−1)/2), which are
    /// quantized exactly from integer square roots.
    pub fn parse_point(self, text: &str) -> Result<UnitPoint, FixedPointError> {
        let text = text.trim();
        match text {
            "sqrt2m1" => {
                let one = self.modulus_big();
                let s = (BigUint::from(2u8) * &one * &one).sqrt();
                let k = (s - one).to_u128().expect("below 2^Q");
                self.point(k)
            }
            "golden" => {
                let one = self.modulus_big();
                let s = (BigUint::from(5u8) * &one * &one).sqrt();
                let k = ((s - one) >> 1usize).to_u128().expect("below 2^Q");
                self.point(k)
            }
            _ => {
                let x = parse_rational(text)
                    .ok_or_else(|| FixedPointError::Parse(text.to_string()))?;
                self.quantize_ratio(&x)
            }
        }
    }
}

/// `floor(x · 2^bits)` for a non-negative rational.
pub(crate) fn floor_scaled(x: &BigRational, bits: u32) -> BigUint {
    let num = x.numer().to_biguint().expect("non-negative");
    let den = x.denom().to_biguint().expect("positive");
    (num << bits as usize) / den
}

/// Parses a non-negative decimal (`0.125`, `3`, `1e-3` is not accepted) or fraction (`1/8`).
pub fn parse_rational(text: &str) -> Option<BigRational> {
    use num_bigint::BigInt;
    let text = text.trim();
    if let Some((n, d)) = text.split_once('/') {
        let n: BigInt = n.trim().parse().ok()?;
        let d: BigInt = d.trim().parse().ok()?;
        if d.is_zero() || n.is_negative() || d.is_negative() {
            return None;
        }
        return Some(BigRational::new(n, d));
    }
    let (int, frac) = match text.split_once('.') {
        Some((i, f)) => (i, f),
        None => (text, ""),
    };
    if int.is_empty() && frac.is_empty() {
        return None;
    }
    if !int.chars().all(|c| c.is_ascii_digit()) || !frac.chars().all(|c| c.is_ascii_digit()) {
        return None;
    }
    let digits = format!("{int}{frac}");
    let n: BigInt = digits.parse().ok()?;
    let d = num_traits::pow(BigInt::from(10u8), frac.len());
    Some(BigRational::new(n, d))
}

/// A point `k / 2^Q` of the quantized circle.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct UnitPoint {
    k: u128,
    bits: u8,
}

impl UnitPoint {
    #[inline]
    pub fn k(self) -> u128 {
        self.k
    }

    pub fn bits(self) -> u32 {
        self.bits as u32
    }

    pub fn grid(self) -> Grid {
        Grid { bits: self.bits() }
    }

    pub fn to_f64(self) -> f64 {
        self.grid().to_f64(self.k)
    }

    fn same_grid(self, other: UnitPoint) -> Result<Grid, FixedPointError> {
        if self.bits != other.bits {
            return Err(FixedPointError::GridMismatch { left: self.bits(), right: other.bits() });
        }
        Ok(self.grid())
    }

    pub fn checked_add(self, other: UnitPoint) -> Result<UnitPoint, FixedPointError> {
        let g = self.same_grid(other)?;
        Ok(g.point_wrapping(g.add(self.k, other.k)))
    }

    pub fn checked_sub(self, other: UnitPoint) -> Result<UnitPoint, FixedPointError> {
        let g = self.same_grid(other)?;
        Ok(g.point_wrapping(g.sub(self.k, other.k)))
    }

    pub fn neg(self) -> UnitPoint {
        let g = self.grid();
        g.point_wrapping(g.neg(self.k))
    }
}

impl fmt::Display for UnitPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/2^{}", self.k, self.bits)
    }
}

/// A ball radius `r / 2^Q` with `r ≤ 2^(Q-1)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Radius {
    r: u128,
    bits: u8,
}

impl Radius {
    #[inline]
    pub fn r(self) -> u128 {
        self.r
    }

    pub fn bits(self) -> u32 {
        self.bits as u32
    }

    pub fn grid(self) -> Grid {
        Grid { bits: self.bits() }
    }

    pub fn to_f64(self) -> f64 {
        self.grid().to_f64(self.r)
    }

    /// Exact value `r / 2^Q`.
    pub fn to_ratio(self) -> BigRational {
        use num_bigint::BigInt;
        BigRational::new(BigInt::from(self.r), BigInt::from(self.grid().modulus_big()))
    }

    pub fn covers_circle(self) -> bool {
        self.r == self.grid().half()
    }
}

impl PartialOrd for Radius {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        (self.bits == other.bits).then(|| self.r.cmp(&other.r))
    }
}

/// Floor quantization of `x ∈ [0, 1)` onto a `bits`-bit grid.
pub fn quantize(x: f64, bits: u32) -> Result<UnitPoint, FixedPointError> {
    Grid::new(bits)?.quantize(x)
}

/// Circle distance `min(d, 2^Q − d)`, `d = (a − b) mod 2^Q`.
pub fn circle_distance(a: UnitPoint, b: UnitPoint) -> Result<Radius, FixedPointError> {
    let g = a.same_grid(b)?;
    Ok(Radius { r: g.dist(a.k, b.k), bits: a.bits })
}
