//! The pair intersection `{|u − jα| ≤ b_j} ∩ {|u − kα| ≤ b_k}` on the torus,
//! analytically (k − j equal parallelograms) and by exact polygon clipping.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;

use super::GeometryError;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ParallelogramReport {
    pub j: u64,
    pub k: u64,
    pub count: u64,
    #[serde(serialize_with = "ser_ratio")]
    pub piece_area: BigRational,
    #[serde(serialize_with = "ser_ratio")]
    pub total: BigRational,
    /// Exact area by clipping the unit square against every strip translate.
    #[serde(serialize_with = "ser_ratio")]
    pub clipped_total: BigRational,
    /// Clipped area grouped by parallelogram; empty when pieces merge.
    #[serde(serialize_with = "ser_ratios")]
    pub clipped_pieces: Vec<BigRational>,
    /// `2(b_j + b_k) ≥ 1`: neighbouring parallelograms touch or overlap and
    /// the piece count is no longer `k − j`.
    pub merged: bool,
}

impl ParallelogramReport {
    /// Clipped total equals `4 b_j b_k` and, unless merged, every piece
    /// equals `4 b_j b_k / (k − j)`.
    pub fn consistent(&self) -> bool {
        self.clipped_total == self.total
            && (self.merged || self.clipped_pieces.iter().all(|p| *p == self.piece_area))
    }
}

fn ser_ratio<S: serde::Serializer>(r: &BigRational, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&r.to_string())
}

fn ser_ratios<S: serde::Serializer>(rs: &[BigRational], s: S) -> Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(rs.len()))?;
    for r in rs {
        seq.serialize_element(&r.to_string())?;
    }
    seq.end()
}

type Point = (BigRational, BigRational);

fn int(v: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(v))
}

/// Keeps the part of `poly` where `a·α + c·u ≤ d`.
fn clip(poly: &[Point], a: &BigRational, c: &BigRational, d: &BigRational) -> Vec<Point> {
    let level = |p: &Point| a * &p.0 + c * &p.1 - d;
    let mut out = Vec::with_capacity(poly.len() + 1);
    for i in 0..poly.len() {
        let p = &poly[i];
        let q = &poly[(i + 1) % poly.len()];
        let (lp, lq) = (level(p), level(q));
        let (pin, qin) = (!lp.is_positive(), !lq.is_positive());
        if pin {
            out.push(p.clone());
        }
        if pin != qin && lp != lq {
            let t = &lp / (&lp - &lq);
            out.push((&p.0 + &t * (&q.0 - &p.0), &p.1 + &t * (&q.1 - &p.1)));
        }
    }
    out
}

fn area(poly: &[Point]) -> BigRational {
    let mut twice = BigRational::zero();
    for i in 0..poly.len() {
        let (p, q) = (&poly[i], &poly[(i + 1) % poly.len()]);
        twice += &p.0 * &q.1 - &q.0 * &p.1;
    }
    twice.abs() / int(2)
}

/// `{(α, u) ∈ [0,1]² : |u − nα − m| ≤ b}` intersected into `poly`.
fn clip_strip(poly: &[Point], n: u64, m: i64, b: &BigRational) -> Vec<Point> {
    let n = int(n as i64);
    let one = BigRational::one();
    // u − nα ≤ m + b  and  nα − u ≤ b − m
    let p = clip(poly, &-&n, &one, &(int(m) + b));
    if p.is_empty() {
        return p;
    }
    clip(&p, &n, &-one, &(b - int(m)))
}

/// `k − j` pieces of area `4 b_j b_k / (k − j)` each, checked against the
/// exact clipped area of the torus intersection.
pub fn parallelogram_decomposition(
    j: u64,
    k: u64,
    b_j: &BigRational,
    b_k: &BigRational,
) -> Result<ParallelogramReport, GeometryError> {
    if j == 0 || j >= k {
        return Err(GeometryError::BadPair { j, k });
    }
    let half = BigRational::new(1.into(), 2.into());
    for b in [b_j, b_k] {
        if b.is_negative() || *b > half {
            return Err(GeometryError::Precondition(format!("radius {b} outside [0, 1/2]")));
        }
    }
    let count = k - j;
    let total = int(4) * b_j * b_k;
    let piece_area = &total / int(count as i64);
    let merged = int(2) * (b_j + b_k) >= BigRational::one();

    let square: Vec<Point> = vec![(int(0), int(0)), (int(1), int(0)), (int(1), int(1)), (int(0), int(1))];
    let mut clipped_total = BigRational::zero();
    let mut pieces = vec![BigRational::zero(); count as usize];
    for m in -(j as i64) - 1..=1 {
        let a = clip_strip(&square, j, m, b_j);
        if a.len() < 3 {
            continue;
        }
        for m2 in -(k as i64) - 1..=1 {
            let p = clip_strip(&a, k, m2, b_k);
            if p.len() < 3 {
                continue;
            }
            let s = area(&p);
            if s.is_zero() {
                continue;
            }
            if !merged {
                // Pieces are centered where (k − j)α is an integer.
                let mean_alpha = p.iter().map(|v| v.0.clone()).sum::<BigRational>() / int(p.len() as i64);
                let slot = (mean_alpha * int(count as i64)).round().to_i64().expect("small");
                pieces[slot.rem_euclid(count as i64) as usize] += &s;
            }
            clipped_total += s;
        }
    }
    Ok(ParallelogramReport {
        j,
        k,
        count,
        piece_area,
        total,
        clipped_total,
        clipped_pieces: if merged { Vec::new() } else { pieces },
        merged,
    })
}
