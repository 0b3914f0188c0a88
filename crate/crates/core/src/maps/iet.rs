use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use super::{MapError, Permutation};
use crate::fixedpoint::{floor_scaled, Grid};
use crate::rng::Cursor;

/// 32-bit words a [`random_iet`] draw may consume (enough for `d ≤ 64`).
pub const RANDOM_IET_WORDS: u64 = 256;

/// An interval exchange on the quantized circle: the `d` subintervals
/// `I_j = [start_j, start_j + p_j)` are translated to the positions given by
/// the permutation. All lengths are positive integers summing to `2^Q`, so
/// the map is an exact bijection of the grid.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Iet {
    grid: Grid,
    lengths: Vec<u128>,
    perm: Permutation,
    starts: Vec<u128>,
    shifts: Vec<u128>,
}

/// `Σ lengths == 2^Q`, evaluated without overflowing at `Q = 128`.
fn sums_to_modulus(grid: Grid, lengths: &[u128]) -> bool {
    let mut total = 0u128;
    let mut carries = 0u32;
    for &p in lengths {
        let (s, c) = total.overflowing_add(p);
        total = s;
        carries += c as u32;
    }
    match grid.modulus() {
        Some(m) => carries == 0 && total == m,
        None => carries == 1 && total == 0,
    }
}

impl Iet {
    pub fn new(grid: Grid, lengths: Vec<u128>, perm: Permutation) -> Result<Self, MapError> {
        let d = lengths.len();
        if d < 2 {
            return Err(MapError::TooFewIntervals(d));
        }
        if perm.len() != d {
            return Err(MapError::LengthMismatch { lengths: d, perm: perm.len() });
        }
        if let Some(j) = lengths.iter().position(|&p| p == 0 || !grid.contains(p)) {
            return Err(MapError::BadLength { index: j + 1 });
        }
        if !sums_to_modulus(grid, &lengths) {
            return Err(MapError::LengthsDoNotSumToOne);
        }
        let mut starts = Vec::with_capacity(d);
        let mut acc = 0u128;
        for &p in &lengths {
            starts.push(acc);
            acc = acc.wrapping_add(p);
        }
        // Left endpoint of each interval's image: lengths of the intervals
        // placed before it, in image order.
        let inv = perm.inverse();
        let mut image_starts = vec![0u128; d];
        let mut acc = 0u128;
        for pos in 0..d {
            let j = inv.image(pos);
            image_starts[j] = acc;
            acc = acc.wrapping_add(lengths[j]);
        }
        let shifts = (0..d).map(|j| grid.sub(image_starts[j], starts[j])).collect();
        Ok(Iet { grid, lengths, perm, starts, shifts })
    }

    /// Quantizes exact rational lengths summing to 1: floors, then hands the
    /// missing units to the largest remainders.
    pub fn from_ratios(
        grid: Grid,
        lengths: &[BigRational],
        perm: Permutation,
    ) -> Result<Self, MapError> {
        let total: BigRational = lengths.iter().cloned().sum();
        if total != BigRational::one() {
            return Err(MapError::LengthsDoNotSumToOne);
        }
        if lengths.iter().any(|p| *p <= BigRational::zero()) {
            return Err(MapError::LengthsDoNotSumToOne);
        }
        let scale = BigRational::from_integer(BigInt::from(grid.modulus_big()));
        let mut floors = Vec::with_capacity(lengths.len());
        let mut remainders = Vec::with_capacity(lengths.len());
        for p in lengths {
            let f = floor_scaled(p, grid.bits());
            remainders.push(p * &scale - BigRational::from_integer(BigInt::from(f.clone())));
            floors.push(f.to_u128().expect("length below 1"));
        }
        let mut order: Vec<usize> = (0..lengths.len()).collect();
        order.sort_by(|&a, &b| remainders[b].cmp(&remainders[a]).then(a.cmp(&b)));
        largest_remainder_fill(grid, &mut floors, &order);
        Self::new(grid, floors, perm)
    }

    /// Quantizes positive real weights (normalized to sum 1).
    pub fn from_weights(grid: Grid, weights: &[f64], perm: Permutation) -> Result<Self, MapError> {
        if weights.iter().any(|w| !(*w > 0.0) || !w.is_finite()) {
            return Err(MapError::LengthsDoNotSumToOne);
        }
        let total: f64 = weights.iter().sum();
        let scaled: Vec<f64> = weights.iter().map(|w| w / total * grid.size_f64()).collect();
        let mut floors: Vec<u128> =
            scaled.iter().map(|s| (*s as u128).min(grid.mask())).collect();
        let mut order: Vec<usize> = (0..weights.len()).collect();
        order.sort_by(|&a, &b| {
            let (ra, rb) = (scaled[a] - scaled[a].floor(), scaled[b] - scaled[b].floor());
            rb.total_cmp(&ra).then(a.cmp(&b))
        });
        largest_remainder_fill(grid, &mut floors, &order);
        Self::new(grid, floors, perm)
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn len(&self) -> usize {
        self.lengths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lengths.is_empty()
    }

    pub fn lengths(&self) -> &[u128] {
        &self.lengths
    }

    pub fn permutation(&self) -> &Permutation {
        &self.perm
    }

    /// Left endpoints of `I_1, …, I_d`.
    pub fn starts(&self) -> &[u128] {
        &self.starts
    }

    /// Zero-based index of the subinterval containing `x`.
    #[inline]
    pub fn interval_of(&self, x: u128) -> usize {
        self.starts.partition_point(|&s| s <= x) - 1
    }

    /// Constant displacement `T(x) − x (mod 2^Q)` on `I_j`.
    pub fn shift(&self, j: usize) -> u128 {
        self.shifts[j]
    }

    #[inline]
    pub fn apply(&self, x: u128) -> u128 {
        self.grid.add(x, self.shifts[self.interval_of(x)])
    }

    /// The exchange of the image intervals back to their sources: lengths
    /// permuted into image order, permutation inverted.
    pub fn inverse(&self) -> Iet {
        let inv = self.perm.inverse();
        let lengths = (0..self.len()).map(|pos| self.lengths[inv.image(pos)]).collect();
        Iet::new(self.grid, lengths, inv).expect("inverse of a valid exchange is valid")
    }

    /// Interior endpoints `start_2, …, start_d`.
    pub fn discontinuities(&self) -> Vec<u128> {
        self.starts[1..].to_vec()
    }
}

/// Adds the units missing from `Σ floors` to the entries listed first in
/// `order`, then lifts any zero entry by taking a unit from the largest.
fn largest_remainder_fill(grid: Grid, floors: &mut [u128], order: &[usize]) {
    let total = floors.iter().fold(0u128, |acc, &f| grid.add(acc, f));
    let mut deficit = grid.neg(total);
    for &j in order.iter().cycle() {
        if deficit == 0 {
            break;
        }
        floors[j] += 1;
        deficit -= 1;
    }
    lift_zero_lengths(floors);
}

fn lift_zero_lengths(lengths: &mut [u128]) {
    while let Some(z) = lengths.iter().position(|&p| p == 0) {
        let big = (0..lengths.len()).max_by_key(|&j| lengths[j]).expect("non-empty");
        if lengths[big] < 2 {
            break;
        }
        lengths[big] -= 1;
        lengths[z] += 1;
    }
}

/// Draws an exchange with lengths uniform on the simplex: the gaps between
/// `d − 1` sorted uniform grid points. The integer lengths sum to `2^Q` by
/// construction. Reducible permutations are accepted with a warning.
pub fn random_iet(grid: Grid, perm: Permutation, cursor: &mut Cursor) -> Result<Iet, MapError> {
    let d = perm.len();
    if d < 2 {
        return Err(MapError::TooFewIntervals(d));
    }
    if !perm.is_irreducible() {
        log::warn!("random_iet: permutation {perm} is reducible; orbits will not be dense");
    }
    let mut cuts: Vec<u128> = (0..d - 1).map(|_| cursor.grid_residue(grid)).collect();
    cuts.sort_unstable();
    let mut lengths = Vec::with_capacity(d);
    let mut prev = 0u128;
    for &c in &cuts {
        lengths.push(c - prev);
        prev = c;
    }
    lengths.push(grid.sub(0, prev));
    if prev == 0 {
        // All cuts at 0: the last gap is the whole circle.
        *lengths.last_mut().expect("d ≥ 2") = grid.mask();
        lengths[0] += 1;
    }
    lift_zero_lengths(&mut lengths);
    Iet::new(grid, lengths, perm)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{streams, RngStream};

    fn ratio(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn two_interval_swap_formula() {
        let g = Grid::new(16).unwrap();
        let t = Iet::from_ratios(g, &[ratio(1, 4), ratio(3, 4)], Permutation::new(&[2, 1]).unwrap())
            .unwrap();
        // x = 0.1 ∈ I_1, T(x) = x + p_2 = 0.85
        let x = g.parse_point("0.1").unwrap().k();
        assert_eq!(t.apply(x), x + 3 * 16384);
        assert!((g.to_f64(t.apply(x)) - 0.85).abs() < 2.0 / 65536.0);
        // x ∈ I_2 moves left by p_1.
        assert_eq!(t.apply(40000), 40000 - 16384);
    }

    #[test]
    fn three_interval_displacement_by_hand() {
        // p = (1/4, 1/4, 1/2), π = (3, 1, 2): images I_2 | I_3 | I_1.
        let g = Grid::new(8).unwrap();
        let t = Iet::new(g, vec![64, 64, 128], Permutation::new(&[3, 1, 2]).unwrap()).unwrap();
        assert_eq!(t.apply(0), 192);
        assert_eq!(t.apply(63), 255);
        assert_eq!(t.apply(64), 0);
        assert_eq!(t.apply(128), 64);
        assert_eq!(t.apply(255), 191);
        assert_eq!(t.discontinuities(), vec![64, 128]);
    }

    #[test]
    fn identity_permutation_is_identity() {
        let g = Grid::new(10).unwrap();
        let t = Iet::new(g, vec![100, 300, 624], Permutation::identity(3).unwrap()).unwrap();
        assert!((0..1024).all(|x| t.apply(x) == x));
        assert_eq!(t.inverse(), t);
    }

    #[test]
    fn swap_inverse_exhaustive_q8() {
        let g = Grid::new(8).unwrap();
        let t = Iet::new(g, vec![90, 166], Permutation::new(&[2, 1]).unwrap()).unwrap();
        let inv = t.inverse();
        assert_eq!(inv.lengths(), &[166, 90]);
        assert_eq!(inv.permutation().one_based(), vec![2, 1]);
        for x in 0..256 {
            assert_eq!(inv.apply(t.apply(x)), x);
            assert_eq!(t.apply(inv.apply(x)), x);
        }
    }

    #[test]
    fn validation() {
        let g = Grid::new(8).unwrap();
        let p2 = || Permutation::new(&[2, 1]).unwrap();
        assert!(matches!(Iet::new(g, vec![100, 100], p2()), Err(MapError::LengthsDoNotSumToOne)));
        assert!(matches!(Iet::new(g, vec![0, 256], p2()), Err(MapError::BadLength { index: 1 })));
        assert!(matches!(
            Iet::new(g, vec![128, 128], Permutation::identity(3).unwrap()),
            Err(MapError::LengthMismatch { .. })
        ));
        assert!(Iet::from_ratios(g, &[ratio(1, 2), ratio(1, 3)], p2()).is_err());
    }

    #[test]
    fn full_width_grid_sums() {
        let g = Grid::new(128).unwrap();
        let half = 1u128 << 127;
        let t = Iet::new(g, vec![half, half], Permutation::new(&[2, 1]).unwrap()).unwrap();
        assert_eq!(t.apply(0), half);
        assert_eq!(t.apply(half + 5), 5);
        assert!(Iet::new(g, vec![half, half - 1], Permutation::new(&[2, 1]).unwrap()).is_err());
    }

    #[test]
    fn largest_remainder_reaches_exact_total() {
        let g = Grid::new(16).unwrap();
        let t = Iet::from_ratios(
            g,
            &[ratio(1, 3), ratio(1, 3), ratio(1, 3)],
            Permutation::new(&[3, 2, 1]).unwrap(),
        )
        .unwrap();
        assert_eq!(t.lengths(), &[21846, 21845, 21845]);
        let w = Iet::from_weights(g, &[1.0, 1.0, 1.0], Permutation::new(&[3, 2, 1]).unwrap())
            .unwrap();
        assert_eq!(w.lengths().iter().sum::<u128>(), 65536);
    }

    #[test]
    fn random_lengths_sum_and_mean() {
        let g = Grid::new(64).unwrap();
        let d = 4;
        let stream = RngStream::new(11, streams::MAPS).with_words_per_index(RANDOM_IET_WORDS);
        let draws = 100_000u64;
        let mut means = vec![0.0f64; d];
        for i in 0..draws {
            let t = random_iet(g, Permutation::reversal(d).unwrap(), &mut stream.cursor(i)).unwrap();
            assert_eq!(t.lengths().iter().sum::<u128>(), 1u128 << 64);
            for (m, &p) in means.iter_mut().zip(t.lengths()) {
                *m += g.to_f64(p);
            }
        }
        // Dirichlet(1,1,1,1): each length has mean 1/4 and variance 3/80.
        let tol = 4.0 * (3.0f64 / 80.0 / draws as f64).sqrt();
        for m in means {
            assert!((m / draws as f64 - 0.25).abs() < tol);
        }
    }

    #[test]
    fn random_iet_on_tiny_grid_has_positive_lengths() {
        let g = Grid::new(3).unwrap();
        let stream = RngStream::new(1, 1).with_words_per_index(RANDOM_IET_WORDS);
        for i in 0..500 {
            let t = random_iet(g, Permutation::reversal(5).unwrap(), &mut stream.cursor(i)).unwrap();
            assert!(t.lengths().iter().all(|&p| p > 0));
        }
    }
}
