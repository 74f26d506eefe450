//! Integer helpers shared by the engines: binomials, p-adic valuations of
//! integers and factorials, primality, and exact rational matrix inversion.

use num_rational::Ratio;
use num_traits::{One, Zero};

pub type Rational = Ratio<i128>;

/// `C(n, k)`, zero when `k > n`.
pub fn binomial(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for j in 0..k {
        // exact at every step: acc * (n - j) is divisible by (j + 1)
        acc = acc * (n - j) as u128 / (j + 1) as u128;
    }
    acc
}

pub fn is_prime(p: u64) -> bool {
    if p < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= p {
        if p % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

/// `v_p(n)` for `n != 0`.
pub fn val_p(p: u64, n: i128) -> u32 {
    assert!(n != 0, "valuation of zero");
    let mut n = n.unsigned_abs();
    let p = p as u128;
    let mut v = 0;
    while n % p == 0 {
        n /= p;
        v += 1;
    }
    v
}

/// `v_p(n!)` by Legendre's formula.
pub fn val_p_factorial(p: u64, n: u64) -> u64 {
    let mut v = 0;
    let mut q = n / p;
    while q > 0 {
        v += q;
        q /= p;
    }
    v
}

/// `p^k` as `i128`, `None` on overflow.
pub fn checked_pow(p: u64, k: u32) -> Option<i128> {
    (p as i128).checked_pow(k)
}

/// Inverse of `u` modulo `m` for `gcd(u, m) = 1`.
pub fn mod_inverse(u: i128, m: i128) -> i128 {
    let (mut old_r, mut r) = (u.rem_euclid(m), m);
    let (mut old_s, mut s) = (1i128, 0i128);
    while r != 0 {
        let q = old_r / r;
        (old_r, r) = (r, old_r - q * r);
        (old_s, s) = (s, old_s - q * s);
    }
    assert_eq!(old_r, 1, "{u} is not invertible modulo {m}");
    old_s.rem_euclid(m)
}

/// Gauss-Jordan inverse over ℚ. Returns `None` for singular input.
pub fn rational_inverse(a: &[Vec<Rational>]) -> Option<Vec<Vec<Rational>>> {
    let n = a.len();
    let mut work: Vec<Vec<Rational>> = a
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| {
                if i == j {
                    Rational::one()
                } else {
                    Rational::zero()
                }
            }));
            r
        })
        .collect();
    for col in 0..n {
        let pivot = (col..n).find(|&r| !work[r][col].is_zero())?;
        work.swap(col, pivot);
        let inv = work[col][col].recip();
        for x in work[col].iter_mut() {
            *x *= inv;
        }
        for r in 0..n {
            if r != col && !work[r][col].is_zero() {
                let factor = work[r][col];
                for c in 0..2 * n {
                    let delta = factor * work[col][c];
                    work[r][c] -= delta;
                }
            }
        }
    }
    Some(work.into_iter().map(|row| row[n..].to_vec()).collect())
}
