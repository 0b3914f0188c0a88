//! First visit of an arithmetic progression to an interval modulo `m`.

/// Smallest `x ≥ 0` with `l ≤ a·x mod m ≤ r`, or `None` if there is none.
///
/// Requires `l ≤ r < m ≤ 2^64`. Runs in `O(log m)` steps by a Euclid-style
/// descent, reflecting `a ↦ m − a` whenever `a > m/2` to keep the descent fast.
pub fn first_hit(a: u128, m: u128, l: u128, r: u128) -> Option<u128> {
    assert!(m >= 1 && m <= 1 << 64, "modulus out of range");
    assert!(l <= r && r < m, "interval out of range");
    let a = a % m;
    if l == 0 {
        return Some(0);
    }
    if a == 0 {
        return None;
    }
    if 2 * a > m {
        // (m − a)·x ≡ −a·x, and 0 ∉ [l, r], so the interval reflects.
        return first_hit(m - a, m, m - r, m - l);
    }
    let k = l.div_ceil(a);
    if a * k <= r {
        return Some(k);
    }
    // No multiple of a lies in [l, r]; solve for the wrap count y instead:
    // a·x − m·y ∈ [l, r]  ⇔  (−m·y) mod a ∈ [l mod a, r mod a].
    let y = first_hit(a - m % a, a, l % a, r % a)?;
    Some((l + m * y).div_ceil(a))
}

/// Smallest `x ≥ 0` with `a·x mod m` within circle distance `rho` of `c`.
pub fn first_hit_arc(a: u128, m: u128, c: u128, rho: u128) -> Option<u128> {
    if 2 * rho + 1 >= m {
        return Some(0);
    }
    let lo = (c + m - rho % m) % m;
    let hi = lo + 2 * rho;
    if hi < m {
        first_hit(a, m, lo, hi)
    } else {
        let left = first_hit(a, m, lo, m - 1);
        let right = first_hit(a, m, 0, hi - m);
        match (left, right) {
            (Some(x), Some(y)) => Some(x.min(y)),
            (x, y) => x.or(y),
        }
    }
}
