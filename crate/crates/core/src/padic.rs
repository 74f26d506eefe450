//! Bounded-precision p-adic matrices and the numerical checks behind the
//! uniformity of congruence subgroups and their intersections.
//!
//! A matrix is stored as `p^shift · D` with an integer digit matrix `D`,
//! known modulo `p^prec` (absolute precision). Every operation propagates
//! `prec` conservatively, so the precision of a result is a certificate:
//! the true value agrees with the stored one modulo `p^prec`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::arith::{is_prime, mod_inverse, rational_inverse, val_p, Rational};
use crate::error::{Error, Result};

/// Digits stay below `2^60` so that products of two fit in an `i128`.
const MODULUS_LIMIT: u128 = 1 << 60;

/// Largest `w` with `p^w ≤ 2^60`.
pub fn width_cap(p: u64) -> i32 {
    let (mut w, mut acc) = (0, 1u128);
    while acc * p as u128 <= MODULUS_LIMIT {
        acc *= p as u128;
        w += 1;
    }
    w
}

fn pow_p(p: u64, w: i32) -> i128 {
    (p as i128).pow(w.max(0) as u32)
}

/// Minimal valuation of `X` for the exponential to converge on `X`.
pub fn v0(p: u64) -> i32 {
    if p == 2 {
        2
    } else {
        1
    }
}

/// `℘ = p` for odd `p`, `4` for `p = 2`.
pub fn wp(p: u64) -> u64 {
    if p == 2 {
        4
    } else {
        p
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PadicMatrix {
    p: u64,
    size: usize,
    shift: i32,
    prec: i32,
    digits: Vec<i128>,
}

/// Outcome of comparing two matrices at their common precision.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Agreement {
    pub certified_precision: i32,
    /// `None` when the difference vanishes at the certified precision.
    pub residual_valuation: Option<i32>,
}

impl PadicMatrix {
    fn build(p: u64, size: usize, shift: i32, prec: i32, digits: Vec<i128>) -> Self {
        let mut m = PadicMatrix {
            p,
            size,
            shift,
            prec,
            digits,
        };
        m.normalize();
        m
    }

    fn normalize(&mut self) {
        let cap = width_cap(self.p);
        if self.prec - self.shift > cap {
            self.prec = self.shift + cap;
        }
        let w = self.prec - self.shift;
        if w <= 0 || self.digits.iter().all(|&d| d == 0) {
            self.shift = self.prec;
            self.digits.iter_mut().for_each(|d| *d = 0);
            return;
        }
        let m = pow_p(self.p, w);
        for d in &mut self.digits {
            *d = d.rem_euclid(m);
        }
        if self.digits.iter().all(|&d| d == 0) {
            self.shift = self.prec;
            return;
        }
        let p = self.p as i128;
        while self.digits.iter().all(|&d| d % p == 0) {
            for d in &mut self.digits {
                *d /= p;
            }
            self.shift += 1;
        }
    }

    pub fn zero(p: u64, size: usize, prec: i32) -> Self {
        Self::build(p, size, prec, prec, vec![0; size * size])
    }

    pub fn identity(p: u64, size: usize, prec: i32) -> Self {
        let mut digits = vec![0; size * size];
        for i in 0..size {
            digits[i * size + i] = 1;
        }
        Self::build(p, size, 0, prec, digits)
    }

    /// Integer entries in row-major order, known modulo `p^prec`.
    pub fn from_integers(p: u64, size: usize, entries: &[i128], prec: i32) -> Result<Self> {
        if !is_prime(p) {
            return Err(Error::InvalidProfile(format!("{p} is not prime")));
        }
        if entries.len() != size * size {
            return Err(Error::Shape(format!(
                "{} entries for a {size}×{size} matrix",
                entries.len()
            )));
        }
        let cap = width_cap(p);
        let m = pow_p(p, prec.clamp(0, cap));
        let digits = entries.iter().map(|e| e.rem_euclid(m)).collect();
        Ok(Self::build(p, size, 0, prec.min(cap), digits))
    }

    /// Exact rational entries rounded to absolute precision `prec`.
    pub fn from_rationals(p: u64, size: usize, entries: &[Rational], prec: i32) -> Result<Self> {
        if !is_prime(p) {
            return Err(Error::InvalidProfile(format!("{p} is not prime")));
        }
        if entries.len() != size * size {
            return Err(Error::Shape(format!(
                "{} entries for a {size}×{size} matrix",
                entries.len()
            )));
        }
        let split = |r: &Rational| -> Option<(i32, i128, i128)> {
            if *r.numer() == 0 {
                return None;
            }
            let (vn, vd) = (val_p(p, *r.numer()), val_p(p, *r.denom()));
            let num = r.numer() / pow_p(p, vn as i32);
            let den = r.denom() / pow_p(p, vd as i32);
            Some((vn as i32 - vd as i32, num, den))
        };
        let parts: Vec<_> = entries.iter().map(split).collect();
        let shift = parts
            .iter()
            .flatten()
            .map(|t| t.0)
            .min()
            .unwrap_or(prec)
            .min(prec);
        let w = (prec - shift).min(width_cap(p));
        let m = pow_p(p, w);
        let digits = parts
            .iter()
            .map(|part| match part {
                None => 0,
                Some((v, num, den)) if v - shift < w => {
                    let unit = num.rem_euclid(m) * mod_inverse(*den, m) % m;
                    unit * pow_p(p, v - shift) % m
                }
                Some(_) => 0,
            })
            .collect();
        Ok(Self::build(p, size, shift, shift + w, digits))
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn size(&self) -> usize {
        self.size
    }

    /// Absolute precision: the value is known modulo `p^precision`.
    pub fn precision(&self) -> i32 {
        self.prec
    }

    /// Minimal entry valuation; equals the precision when the matrix is zero.
    pub fn valuation(&self) -> i32 {
        self.shift
    }

    pub fn is_zero(&self) -> bool {
        self.shift >= self.prec
    }

    pub fn entry_valuation(&self, i: usize, j: usize) -> i32 {
        let d = self.digits[i * self.size + j];
        if d == 0 {
            self.prec
        } else {
            self.shift + val_p(self.p, d) as i32
        }
    }

    /// Entries as residues modulo `p^precision`, if integral and representable.
    pub fn to_integers(&self) -> Option<Vec<i128>> {
        if self.shift < 0 || self.prec > width_cap(self.p) {
            return None;
        }
        let m = pow_p(self.p, self.prec);
        let f = pow_p(self.p, self.shift.min(self.prec));
        Some(self.digits.iter().map(|d| d * f % m).collect())
    }

    fn check_compat(&self, other: &Self) {
        assert_eq!(
            (self.p, self.size),
            (other.p, other.size),
            "incompatible p-adic matrices"
        );
    }

    /// Same value with precision lowered to `prec`.
    pub fn truncate(&self, prec: i32) -> Self {
        Self::build(
            self.p,
            self.size,
            self.shift,
            self.prec.min(prec),
            self.digits.clone(),
        )
    }

    fn aligned(&self, s: i32, w: i32) -> Vec<i128> {
        let k = self.shift - s;
        if k >= w {
            return vec![0; self.digits.len()];
        }
        let (m, f) = (pow_p(self.p, w), pow_p(self.p, k));
        self.digits.iter().map(|d| (d % m) * f % m).collect()
    }

    pub fn add(&self, other: &Self) -> Self {
        self.check_compat(other);
        let s = self.shift.min(other.shift);
        let prec = self.prec.min(other.prec);
        if prec <= s {
            return Self::zero(self.p, self.size, prec);
        }
        let w = prec - s;
        let (a, b) = (self.aligned(s, w), other.aligned(s, w));
        Self::build(
            self.p,
            self.size,
            s,
            prec,
            a.iter().zip(&b).map(|(x, y)| x + y).collect(),
        )
    }

    pub fn neg(&self) -> Self {
        Self::build(
            self.p,
            self.size,
            self.shift,
            self.prec,
            self.digits.iter().map(|d| -d).collect(),
        )
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Self) -> Self {
        self.check_compat(other);
        let s = self.shift + other.shift;
        let prec = (self.prec + other.shift).min(other.prec + self.shift);
        if prec <= s {
            return Self::zero(self.p, self.size, prec);
        }
        let w = prec - s;
        let m = pow_p(self.p, w);
        let n = self.size;
        let a: Vec<i128> = self.digits.iter().map(|d| d % m).collect();
        let b: Vec<i128> = other.digits.iter().map(|d| d % m).collect();
        let mut c = vec![0i128; n * n];
        for i in 0..n {
            for j in 0..n {
                let mut acc = 0i128;
                for k in 0..n {
                    acc = (acc + a[i * n + k] * b[k * n + j]) % m;
                }
                c[i * n + j] = acc;
            }
        }
        Self::build(self.p, n, s, prec, c)
    }

    /// Multiplication by `p^k`.
    pub fn scale_p(&self, k: i32) -> Self {
        Self::build(
            self.p,
            self.size,
            self.shift + k,
            self.prec + k,
            self.digits.clone(),
        )
    }

    /// Division by a nonzero integer; loses `v_p(n)` digits of precision.
    pub fn div_int(&self, n: i128) -> Self {
        assert!(n != 0, "division by zero");
        let v = val_p(self.p, n) as i32;
        let unit = n / pow_p(self.p, v);
        let w = self.prec - self.shift;
        if w <= 0 {
            return Self::zero(self.p, self.size, self.prec - v);
        }
        let m = pow_p(self.p, w);
        let inv = mod_inverse(unit, m);
        let digits = self.digits.iter().map(|d| d % m * inv % m).collect();
        Self::build(self.p, self.size, self.shift - v, self.prec - v, digits)
    }

    pub fn pow(&self, k: u64) -> Self {
        let mut acc = Self::identity(self.p, self.size, self.prec);
        for _ in 0..k {
            acc = acc.mul(self);
        }
        acc
    }

    /// `self − 1`.
    pub fn sub_identity(&self) -> Self {
        self.sub(&Self::identity(self.p, self.size, self.prec))
    }

    /// Inverse of `1 + Y` with `v(Y) ≥ 1` by the Neumann series.
    pub fn inverse_near_identity(&self) -> Result<Self> {
        let y = self.sub_identity();
        let v = y.valuation();
        if !y.is_zero() && v < 1 {
            return Err(Error::ConvergenceDomain {
                valuation: v,
                required: 1,
            });
        }
        let target = self.prec;
        let minus_y = y.neg();
        let mut acc = Self::identity(self.p, self.size, target);
        let mut term = acc.clone();
        let mut k = 1;
        loop {
            term = term.mul(&minus_y);
            acc = acc.add(&term);
            if (k + 1) * v >= target {
                return Ok(acc);
            }
            k += 1;
        }
    }

    pub fn compare(&self, other: &Self) -> Agreement {
        let d = self.sub(other);
        Agreement {
            certified_precision: d.prec,
            residual_valuation: (!d.is_zero()).then_some(d.shift),
        }
    }
}

fn check_domain(x: &PadicMatrix) -> Result<()> {
    let required = v0(x.p);
    if !x.is_zero() && x.valuation() < required {
        return Err(Error::ConvergenceDomain {
            valuation: x.valuation(),
            required,
        });
    }
    Ok(())
}

/// `Σ Xⁿ/n!`, truncated once every remaining term is below the input precision.
///
/// `v(Xⁿ/n!) ≥ n·v − ⌊(n−1)/(p−1)⌋`, which increases with `n` for `v ≥ v₀`.
pub fn exp_matrix(x: &PadicMatrix) -> Result<PadicMatrix> {
    check_domain(x)?;
    let (p, v, target) = (x.p as i32, x.valuation(), x.prec);
    let tail = |n: i32| n * v - (n - 1) / (p - 1);
    let mut sum = PadicMatrix::identity(x.p, x.size, target);
    let mut term = sum.clone();
    let mut n = 1;
    while tail(n) < target {
        term = term.mul(x).div_int(n as i128);
        sum = sum.add(&term);
        n += 1;
    }
    Ok(sum)
}

/// `Σ (−1)^{n+1} (u−1)ⁿ/n`, truncated once every remaining term is below
/// the input precision (`v((u−1)ⁿ/n) ≥ n·v − ⌊log_p n⌋`).
pub fn log_matrix(u: &PadicMatrix) -> Result<PadicMatrix> {
    let y = u.sub_identity();
    check_domain(&y)?;
    let (v, target) = (y.valuation(), u.prec);
    let tail = |n: i32| n * v - (n as u64).ilog(u.p) as i32;
    let mut sum = PadicMatrix::zero(u.p, u.size, target);
    let mut power = PadicMatrix::identity(u.p, u.size, target);
    let mut n = 1;
    while tail(n) < target {
        power = power.mul(&y);
        let term = power.div_int(n as i128);
        sum = if n % 2 == 1 {
            sum.add(&term)
        } else {
            sum.sub(&term)
        };
        n += 1;
    }
    Ok(sum)
}

/// An invertible `a ∈ GL_N(ℚ_p)` together with its exact inverse.
#[derive(Debug, Clone)]
pub struct Conjugator {
    a: PadicMatrix,
    a_inv: PadicMatrix,
    /// `v(a_i)` when `a = diag(a_1, …, a_N)`.
    diagonal: Option<Vec<i32>>,
}

impl Conjugator {
    /// `prec` is the working precision of the elements it will act on.
    pub fn new(p: u64, size: usize, a: &[Rational], prec: i32) -> Result<Self> {
        if a.len() != size * size {
            return Err(Error::Shape(format!(
                "{} entries for a {size}×{size} matrix",
                a.len()
            )));
        }
        let rows: Vec<Vec<Rational>> = a.chunks(size).map(<[_]>::to_vec).collect();
        let inv: Vec<Rational> = rational_inverse(&rows)
            .ok_or(Error::Singular)?
            .into_iter()
            .flatten()
            .collect();
        let rough_a = PadicMatrix::from_rationals(p, size, a, prec)?;
        let rough_inv = PadicMatrix::from_rationals(p, size, &inv, prec)?;
        let spread = -(rough_a.valuation() + rough_inv.valuation()).min(0);
        let exact = prec + 2 * spread + 4;
        let diagonal = (0..size)
            .all(|i| (0..size).all(|j| i == j || *a[i * size + j].numer() == 0))
            .then(|| (0..size).map(|i| rough_a.entry_valuation(i, i)).collect());
        Ok(Conjugator {
            a: PadicMatrix::from_rationals(p, size, a, exact)?,
            a_inv: PadicMatrix::from_rationals(p, size, &inv, exact)?,
            diagonal,
        })
    }

    pub fn identity(p: u64, size: usize, prec: i32) -> Result<Self> {
        let entries: Vec<Rational> = (0..size * size)
            .map(|k| Rational::from_integer((k % (size + 1) == 0) as i128))
            .collect();
        Self::new(p, size, &entries, prec)
    }

    /// Largest valuation drop under conjugation, `−v(a) − v(a⁻¹)`.
    pub fn spread(&self) -> i32 {
        -(self.a.valuation() + self.a_inv.valuation())
    }

    /// `a⁻¹ u a`.
    pub fn conjugate(&self, u: &PadicMatrix) -> PadicMatrix {
        self.a_inv.mul(u).mul(&self.a)
    }

    /// `a u a⁻¹`.
    pub fn unconjugate(&self, u: &PadicMatrix) -> PadicMatrix {
        self.a.mul(u).mul(&self.a_inv)
    }
}

/// `ker(GL_N(ℤ_p) → GL_N(ℤ/p^m))`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CongruenceLevelSpec {
    pub size: usize,
    pub p: u64,
    pub level: i32,
}

impl CongruenceLevelSpec {
    /// Membership certified at the element's precision.
    pub fn contains(&self, g: &PadicMatrix) -> bool {
        let d = g.sub_identity();
        d.valuation() >= self.level && d.precision() >= self.level
    }
}

/// The subgroup a powerful-condition check lives in.
#[derive(Debug, Clone)]
pub enum Subgroup {
    Congruence(CongruenceLevelSpec),
    /// `K_k ∩ a⁻¹ K_{k′} a`.
    Intersection {
        k: CongruenceLevelSpec,
        k_prime: CongruenceLevelSpec,
        conj: Conjugator,
    },
}

impl Subgroup {
    pub fn contains(&self, g: &PadicMatrix) -> bool {
        match self {
            Subgroup::Congruence(spec) => spec.contains(g),
            Subgroup::Intersection { k, k_prime, conj } => {
                k.contains(g) && k_prime.contains(&conj.unconjugate(g))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CheckOutcome {
    pub passed: bool,
    pub certified_precision: i32,
    pub residual_valuation: Option<i32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl CheckOutcome {
    fn from_agreements(agreements: &[Agreement], floor: i32) -> Self {
        let certified_precision = agreements
            .iter()
            .map(|a| a.certified_precision)
            .min()
            .unwrap_or(i32::MAX);
        let residual_valuation = agreements.iter().filter_map(|a| a.residual_valuation).min();
        let mut note = None;
        if certified_precision < floor {
            note = Some(format!(
                "certified precision {certified_precision} below floor {floor}"
            ));
        }
        CheckOutcome {
            passed: residual_valuation.is_none() && certified_precision >= floor,
            certified_precision,
            residual_valuation,
            note,
        }
    }

    fn fail(&mut self, why: String) {
        self.passed = false;
        self.note.get_or_insert(why);
    }
}

/// `log(a⁻¹ u a) ≡ a⁻¹ log(u) a`.
pub fn conjugation_log_identity(
    conj: &Conjugator,
    u: &PadicMatrix,
    floor: i32,
) -> Result<CheckOutcome> {
    let lhs = log_matrix(&conj.conjugate(u))?;
    let rhs = conj.conjugate(&log_matrix(u)?);
    Ok(CheckOutcome::from_agreements(&[lhs.compare(&rhs)], floor))
}

/// `[x, y] = x y x⁻¹ y⁻¹`.
pub fn commutator(x: &PadicMatrix, y: &PadicMatrix) -> Result<PadicMatrix> {
    Ok(x.mul(y)
        .mul(&x.inverse_near_identity()?)
        .mul(&y.inverse_near_identity()?))
}

/// Extracts `κ = exp(log([x,y])/℘)` and checks `κ^℘ = [x,y]` and `κ ∈ subgroup`.
pub fn commutator_power_check(
    x: &PadicMatrix,
    y: &PadicMatrix,
    subgroup: &Subgroup,
    floor: i32,
) -> Result<CheckOutcome> {
    let p = x.p();
    let (wp, wp_val) = (wp(p), val_p(p, wp(p) as i128) as i32);
    let c = commutator(x, y)?;
    let l = log_matrix(&c)?;
    if !l.is_zero() && l.valuation() < wp_val + v0(p) {
        return Ok(CheckOutcome {
            passed: false,
            certified_precision: l.precision(),
            residual_valuation: Some(l.valuation()),
            note: Some(format!(
                "counterexample candidate: log([x,y]) has valuation {} < v(℘) + v₀",
                l.valuation()
            )),
        });
    }
    let kappa = exp_matrix(&l.div_int(wp as i128))?;
    let mut outcome = CheckOutcome::from_agreements(&[kappa.pow(wp).compare(&c)], floor);
    if !subgroup.contains(&kappa) {
        outcome.fail("κ is not in the subgroup".into());
    }
    Ok(outcome)
}

/// `g ∈ K_m ⇒ g^p ∈ K_{m+1}`.
pub fn p_power_step(spec: &CongruenceLevelSpec, g: &PadicMatrix, floor: i32) -> CheckOutcome {
    let gp = g.pow(spec.p);
    let next = CongruenceLevelSpec {
        level: spec.level + 1,
        ..*spec
    };
    let mut outcome = CheckOutcome {
        passed: gp.precision() >= floor,
        certified_precision: gp.precision(),
        residual_valuation: None,
        note: None,
    };
    if !next.contains(&gp) {
        outcome.fail(format!("g^p is not at level {}", next.level));
    }
    outcome
}

/// `h ∈ K_{m+1} ⇒ r = exp(log(h)/p) ∈ K_m` with `r^p = h`.
pub fn p_root_step(
    spec: &CongruenceLevelSpec,
    h: &PadicMatrix,
    floor: i32,
) -> Result<CheckOutcome> {
    let r = exp_matrix(&log_matrix(h)?.div_int(spec.p as i128))?;
    let mut outcome = CheckOutcome::from_agreements(&[r.pow(spec.p).compare(h)], floor);
    if !spec.contains(&r) {
        outcome.fail(format!("p-th root is not at level {}", spec.level));
    }
    Ok(outcome)
}

/// Deterministic generator for sample `index` of check `stream`.
pub fn sample_rng(seed: u64, stream: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((stream << 32) | index);
    rng
}

/// Entries `δ_ij + p^{floor_ij}·r` with `r` uniform modulo `p^{prec − floor_ij}`.
pub fn random_with_floors<R: Rng>(
    rng: &mut R,
    p: u64,
    size: usize,
    floors: &[i32],
    prec: i32,
    unipotent: bool,
) -> PadicMatrix {
    let entries: Vec<i128> = (0..size * size)
        .map(|k| {
            let f = floors[k].max(0);
            let x = if f >= prec {
                0
            } else {
                rng.gen_range(0..pow_p(p, prec - f)) * pow_p(p, f)
            };
            x + (unipotent && k % (size + 1) == 0) as i128
        })
        .collect();
    PadicMatrix::from_integers(p, size, &entries, prec).expect("valid sample shape")
}

/// Uniform element of `K_level`.
pub fn random_congruence<R: Rng>(
    rng: &mut R,
    spec: &CongruenceLevelSpec,
    prec: i32,
) -> PadicMatrix {
    random_with_floors(
        rng,
        spec.p,
        spec.size,
        &vec![spec.level; spec.size * spec.size],
        prec,
        true,
    )
}

/// Uniform element of `p^floor·M_N(ℤ_p)`.
pub fn random_lie<R: Rng>(rng: &mut R, p: u64, size: usize, floor: i32, prec: i32) -> PadicMatrix {
    random_with_floors(rng, p, size, &vec![floor; size * size], prec, false)
}

/// Draws from `K_k ∩ a⁻¹K_{k′}a`: exact per-entry floors for diagonal `a`,
/// rejection from `K_k` otherwise.
pub fn random_in_intersection<R: Rng>(
    rng: &mut R,
    k: &CongruenceLevelSpec,
    k_prime: &CongruenceLevelSpec,
    conj: &Conjugator,
    prec: i32,
) -> Result<PadicMatrix> {
    let n = k.size;
    if let Some(diag) = &conj.diagonal {
        // (a x a⁻¹)_ij = a_i x_ij a_j⁻¹
        let floors: Vec<i32> = (0..n * n)
            .map(|idx| {
                let (i, j) = (idx / n, idx % n);
                k.level.max(k_prime.level - diag[i] + diag[j])
            })
            .collect();
        return Ok(random_with_floors(rng, k.p, n, &floors, prec, true));
    }
    const ATTEMPTS: usize = 10_000;
    let group = Subgroup::Intersection {
        k: *k,
        k_prime: *k_prime,
        conj: conj.clone(),
    };
    for _ in 0..ATTEMPTS {
        let x = random_congruence(rng, k, prec);
        if group.contains(&x) {
            return Ok(x);
        }
    }
    Err(Error::Sampler(format!(
        "no element of the intersection found in {ATTEMPTS} draws"
    )))
}

/// Random `a = diag(p^{k_i})·g` with `g ∈ GL_N(ℤ_p)`, `k_1 = 0` and `k_i ≤ max_spread`.
pub fn random_conjugator<R: Rng>(
    rng: &mut R,
    p: u64,
    size: usize,
    max_spread: i32,
    prec: i32,
) -> Result<Conjugator> {
    let bound = pow_p(p, 3);
    loop {
        let g: Vec<i128> = (0..size * size).map(|_| rng.gen_range(0..bound)).collect();
        let rows: Vec<Vec<Rational>> = g
            .chunks(size)
            .map(|r| r.iter().map(|&x| Rational::from_integer(x)).collect())
            .collect();
        let Some(inv) = rational_inverse(&rows) else {
            continue;
        };
        if inv.iter().flatten().any(|r| r.denom() % p as i128 == 0) {
            continue;
        }
        let ks: Vec<i32> = (0..size)
            .map(|i| {
                if i == 0 {
                    0
                } else {
                    rng.gen_range(0..=max_spread)
                }
            })
            .collect();
        let a: Vec<Rational> = (0..size * size)
            .map(|idx| Rational::from_integer(pow_p(p, ks[idx / size]) * g[idx]))
            .collect();
        return Conjugator::new(p, size, &a, prec);
    }
}

/// Parameters of one uniformity sweep over `GL_size(ℤ_p)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct UniformConfig {
    pub p: u64,
    pub size: usize,
    pub level: i32,
    pub samples: usize,
    pub precision: i32,
    pub seed: u64,
    /// Largest admissible loss of precision for a passing check.
    pub max_slack: i32,
}

impl UniformConfig {
    pub fn validate(&self) -> Result<()> {
        if !is_prime(self.p) {
            return Err(Error::InvalidQuery(format!("{} is not prime", self.p)));
        }
        if !(1..=6).contains(&self.size) {
            return Err(Error::InvalidQuery(format!(
                "matrix size {} outside 1..=6",
                self.size
            )));
        }
        if self.level < v0(self.p) {
            return Err(Error::InvalidQuery(format!(
                "level {} below the convergence bound {} for p = {}",
                self.level,
                v0(self.p),
                self.p
            )));
        }
        let cap = width_cap(self.p) - 8;
        if self.precision <= self.level + 2 || self.precision > cap {
            return Err(Error::InvalidQuery(format!(
                "precision {} must lie in {}..={cap}",
                self.precision,
                self.level + 3
            )));
        }
        if !(0..self.precision).contains(&self.max_slack) {
            return Err(Error::InvalidQuery(format!(
                "slack {} out of range",
                self.max_slack
            )));
        }
        Ok(())
    }

    fn floor(&self) -> i32 {
        self.precision - self.max_slack
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CheckSummary {
    pub check: String,
    pub samples: usize,
    pub passed: usize,
    pub failed: usize,
    pub min_certified_precision: i32,
    pub max_slack: i32,
    pub worst_residual_valuation: Option<i32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub first_failure: Option<String>,
}

impl CheckSummary {
    pub fn all_passed(&self) -> bool {
        self.failed == 0
    }
}

fn summarize(check: &str, precision: i32, outcomes: Vec<Result<CheckOutcome>>) -> CheckSummary {
    let mut s = CheckSummary {
        check: check.to_string(),
        samples: outcomes.len(),
        passed: 0,
        failed: 0,
        min_certified_precision: precision,
        max_slack: 0,
        worst_residual_valuation: None,
        first_failure: None,
    };
    for (index, outcome) in outcomes.into_iter().enumerate() {
        match outcome {
            Ok(o) => {
                s.min_certified_precision = s.min_certified_precision.min(o.certified_precision);
                if let Some(r) = o.residual_valuation {
                    s.worst_residual_valuation =
                        Some(s.worst_residual_valuation.map_or(r, |w: i32| w.min(r)));
                }
                if o.passed {
                    s.passed += 1;
                } else {
                    s.failed += 1;
                    s.first_failure.get_or_insert_with(|| {
                        format!(
                            "sample {index}: {}",
                            o.note.unwrap_or_else(|| "nonzero residual".into())
                        )
                    });
                }
            }
            Err(e) => {
                s.failed += 1;
                s.first_failure
                    .get_or_insert_with(|| format!("sample {index}: {e}"));
            }
        }
    }
    s.max_slack = precision - s.min_certified_precision;
    s
}

fn sweep<F>(cfg: &UniformConfig, stream: u64, name: &str, f: F) -> CheckSummary
where
    F: Fn(&mut ChaCha8Rng) -> Result<CheckOutcome> + Sync,
{
    let outcomes: Vec<Result<CheckOutcome>> = (0..cfg.samples as u64)
        .into_par_iter()
        .map(|i| f(&mut sample_rng(cfg.seed, stream, i)))
        .collect();
    summarize(name, cfg.precision, outcomes)
}

/// Round trips `log(exp X) = X` and `exp(log u) = u`.
pub fn exp_log_round_trip_check(cfg: &UniformConfig) -> CheckSummary {
    let spec = CongruenceLevelSpec {
        size: cfg.size,
        p: cfg.p,
        level: cfg.level,
    };
    sweep(cfg, 1, "exp_log_round_trip", |rng| {
        let x = random_lie(rng, cfg.p, cfg.size, cfg.level, cfg.precision);
        let u = random_congruence(rng, &spec, cfg.precision);
        let there = log_matrix(&exp_matrix(&x)?)?.compare(&x);
        let back = exp_matrix(&log_matrix(&u)?)?.compare(&u);
        Ok(CheckOutcome::from_agreements(&[there, back], cfg.floor()))
    })
}

/// `exp(pX) = exp(X)^p`.
pub fn exp_power_check(cfg: &UniformConfig) -> CheckSummary {
    sweep(cfg, 2, "exp_power", |rng| {
        let x = random_lie(rng, cfg.p, cfg.size, cfg.level, cfg.precision);
        let lhs = exp_matrix(&x.scale_p(1).truncate(cfg.precision))?;
        let rhs = exp_matrix(&x)?.pow(cfg.p);
        Ok(CheckOutcome::from_agreements(
            &[lhs.compare(&rhs)],
            cfg.floor(),
        ))
    })
}

/// `v(log u) = v(u − 1)` as matrix valuations.
pub fn log_valuation_check(cfg: &UniformConfig) -> CheckSummary {
    let spec = CongruenceLevelSpec {
        size: cfg.size,
        p: cfg.p,
        level: cfg.level,
    };
    sweep(cfg, 3, "log_valuation", |rng| {
        let u = random_congruence(rng, &spec, cfg.precision);
        let l = log_matrix(&u)?;
        let y = u.sub_identity();
        let mut o = CheckOutcome::from_agreements(
            &[Agreement {
                certified_precision: l.precision(),
                residual_valuation: None,
            }],
            cfg.floor(),
        );
        if l.valuation().min(cfg.floor()) != y.valuation().min(cfg.floor()) {
            o.fail(format!(
                "v(log u) = {} but v(u − 1) = {}",
                l.valuation(),
                y.valuation()
            ));
        }
        Ok(o)
    })
}

/// Conjugation identity for random `a = diag(p^{k_i})·g`; `u` is taken deep
/// enough that `a⁻¹ua` stays in the domain of `log`.
pub fn conjugation_check(cfg: &UniformConfig) -> CheckSummary {
    let max_spread = cfg.max_slack.min(2);
    sweep(cfg, 4, "conjugation_log_identity", |rng| {
        let conj = random_conjugator(rng, cfg.p, cfg.size, max_spread, cfg.precision)?;
        let spec = CongruenceLevelSpec {
            size: cfg.size,
            p: cfg.p,
            level: cfg.level + conj.spread(),
        };
        let u = random_congruence(rng, &spec, cfg.precision);
        conjugation_log_identity(&conj, &u, cfg.floor())
    })
}

pub fn commutator_check(cfg: &UniformConfig) -> CheckSummary {
    let spec = CongruenceLevelSpec {
        size: cfg.size,
        p: cfg.p,
        level: cfg.level,
    };
    let group = Subgroup::Congruence(spec);
    sweep(cfg, 5, "commutator_power", |rng| {
        let x = random_congruence(rng, &spec, cfg.precision);
        let y = random_congruence(rng, &spec, cfg.precision);
        commutator_power_check(&x, &y, &group, cfg.floor())
    })
}

/// Both directions of `K_{m+1} = K_m^p`, `samples` draws each.
pub fn lower_p_series_check(cfg: &UniformConfig) -> CheckSummary {
    let spec = CongruenceLevelSpec {
        size: cfg.size,
        p: cfg.p,
        level: cfg.level,
    };
    let deeper = CongruenceLevelSpec {
        level: cfg.level + 1,
        ..spec
    };
    sweep(cfg, 6, "lower_p_series", |rng| {
        let g = random_congruence(rng, &spec, cfg.precision);
        let h = random_congruence(rng, &deeper, cfg.precision);
        let power = p_power_step(&spec, &g, cfg.floor());
        let mut root = p_root_step(&spec, &h, cfg.floor())?;
        root.certified_precision = root.certified_precision.min(power.certified_precision);
        if !power.passed {
            root.fail(
                power
                    .note
                    .unwrap_or_else(|| "p-th power check failed".into()),
            );
        }
        Ok(root)
    })
}

/// Powerful condition on `K_k ∩ a⁻¹K_{k′}a` for a fixed `a`.
pub fn intersection_uniform_check(
    cfg: &UniformConfig,
    k_level: i32,
    k_prime_level: i32,
    a: &[Rational],
) -> Result<CheckSummary> {
    let k = CongruenceLevelSpec {
        size: cfg.size,
        p: cfg.p,
        level: k_level,
    };
    let k_prime = CongruenceLevelSpec {
        level: k_prime_level,
        ..k
    };
    for level in [k_level, k_prime_level] {
        if level < v0(cfg.p) {
            return Err(Error::InvalidQuery(format!(
                "level {level} below {}",
                v0(cfg.p)
            )));
        }
    }
    let conj = Conjugator::new(cfg.p, cfg.size, a, cfg.precision)?;
    // fail fast on a sampler that cannot produce elements
    random_in_intersection(
        &mut sample_rng(cfg.seed, 7, u32::MAX as u64),
        &k,
        &k_prime,
        &conj,
        cfg.precision,
    )?;
    let group = Subgroup::Intersection {
        k,
        k_prime,
        conj: conj.clone(),
    };
    Ok(sweep(cfg, 7, "intersection_uniform", |rng| {
        let x = random_in_intersection(rng, &k, &k_prime, &conj, cfg.precision)?;
        let y = random_in_intersection(rng, &k, &k_prime, &conj, cfg.precision)?;
        commutator_power_check(&x, &y, &group, cfg.floor())
    }))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct UniformReport {
    pub config: UniformConfig,
    pub checks: Vec<CheckSummary>,
    pub passed: usize,
    pub failed: usize,
    pub worst_residual_valuation: Option<i32>,
}

impl UniformReport {
    pub fn all_passed(&self) -> bool {
        self.failed == 0
    }
}

/// Every uniformity check at one `(p, size, level)`; the intersection check
/// uses `a = diag(1, p, …, p^{N−1})` with exponents capped at 2.
pub fn verify_uniform(cfg: &UniformConfig) -> Result<UniformReport> {
    cfg.validate()?;
    let mut checks = vec![
        exp_log_round_trip_check(cfg),
        exp_power_check(cfg),
        log_valuation_check(cfg),
        conjugation_check(cfg),
        commutator_check(cfg),
        lower_p_series_check(cfg),
    ];
    if cfg.size >= 2 {
        let n = cfg.size;
        let a: Vec<Rational> = (0..n * n)
            .map(|idx| {
                let (i, j) = (idx / n, idx % n);
                Rational::from_integer(if i == j {
                    pow_p(cfg.p, (i as i32).min(2))
                } else {
                    0
                })
            })
            .collect();
        checks.push(intersection_uniform_check(cfg, cfg.level, cfg.level, &a)?);
    }
    let passed = checks.iter().map(|c| c.passed).sum();
    let failed = checks.iter().map(|c| c.failed).sum();
    let worst_residual_valuation = checks
        .iter()
        .filter_map(|c| c.worst_residual_valuation)
        .min();
    Ok(UniformReport {
        config: *cfg,
        checks,
        passed,
        failed,
        worst_residual_valuation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;
    use num_rational::BigRational;
    use num_traits::{One, Signed, ToPrimitive, Zero};

    fn scalar(p: u64, x: i128, prec: i32) -> PadicMatrix {
        PadicMatrix::from_integers(p, 1, &[x], prec).unwrap()
    }

    fn value(m: &PadicMatrix) -> Vec<i128> {
        m.to_integers().unwrap()
    }

    /// Residue of a `p`-integral rational modulo `p^k`.
    fn reduce(r: &BigRational, p: u64, k: u32) -> i128 {
        let m = BigInt::from(p).pow(k);
        let num = ((r.numer() % &m) + &m) % &m;
        let den = ((r.denom() % &m) + &m) % &m;
        let inv = mod_inverse(den.to_i128().unwrap(), m.to_i128().unwrap());
        (num.to_i128().unwrap() * inv).rem_euclid(m.to_i128().unwrap())
    }

    /// Independent exact evaluation of truncated series over ℚ.
    fn exact_exp(x: &[Vec<BigRational>], terms: usize) -> Vec<Vec<BigRational>> {
        let n = x.len();
        let id: Vec<Vec<BigRational>> = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        if i == j {
                            BigRational::one()
                        } else {
                            BigRational::zero()
                        }
                    })
                    .collect()
            })
            .collect();
        let mut sum = id.clone();
        let mut term = id;
        for k in 1..terms {
            let mut next = vec![vec![BigRational::zero(); n]; n];
            for i in 0..n {
                for j in 0..n {
                    for l in 0..n {
                        next[i][j] += &term[i][l] * &x[l][j];
                    }
                    next[i][j] /= BigRational::from_integer(BigInt::from(k));
                }
            }
            term = next;
            for i in 0..n {
                for j in 0..n {
                    sum[i][j] += &term[i][j];
                }
            }
        }
        sum
    }

    fn exact_log_scalar(u: i128, terms: usize) -> BigRational {
        let y = BigRational::from_integer(BigInt::from(u - 1));
        let mut acc = BigRational::zero();
        let mut power = BigRational::one();
        for n in 1..terms {
            power *= &y;
            let t = &power / BigRational::from_integer(BigInt::from(n));
            if n % 2 == 1 {
                acc += t;
            } else {
                acc -= t;
            }
        }
        acc
    }

    #[test]
    fn width_caps() {
        assert_eq!(width_cap(2), 60);
        assert_eq!(width_cap(3), 37);
        assert_eq!(width_cap(5), 25);
    }

    #[test]
    fn arithmetic_tracks_precision() {
        let a = scalar(3, 9, 5);
        assert_eq!(a.valuation(), 2);
        let b = a.div_int(6);
        assert_eq!((b.valuation(), b.precision()), (1, 4));
        assert_eq!(value(&b)[0], 3 * mod_inverse(2, 81) % 81);
        let c = a.mul(&scalar(3, 2, 5));
        assert_eq!((c.precision(), value(&c)[0]), (5, 18));
        let z = a.sub(&a);
        assert!(z.is_zero());
        assert_eq!(z.precision(), 5);
        let q = PadicMatrix::from_rationals(3, 1, &[Rational::new(1, 3)], 4).unwrap();
        assert_eq!((q.valuation(), q.precision()), (-1, 4));
        assert!(q.scale_p(1).sub(&scalar(3, 1, 10)).is_zero());
    }

    #[test]
    fn frozen_series_values() {
        let e5 = exp_matrix(&scalar(5, 5, 4)).unwrap();
        assert_eq!((e5.precision(), value(&e5)[0]), (4, 456));
        let e5 = exp_matrix(&scalar(5, 5, 12)).unwrap();
        assert_eq!(value(&e5)[0], 101_131_081);
        let l3 = log_matrix(&scalar(3, 4, 4)).unwrap();
        assert_eq!((l3.precision(), value(&l3)[0]), (4, 48));
        let l3 = log_matrix(&scalar(3, 4, 12)).unwrap();
        assert_eq!(value(&l3)[0], 303_798);
        let e2 = exp_matrix(&scalar(2, 4, 12)).unwrap();
        assert_eq!(value(&e2)[0], 333);
    }

    #[test]
    fn series_match_exact_rational_evaluation() {
        let big = |x: i128| BigRational::from_integer(BigInt::from(x));
        for (p, x) in [(5u64, 5i128), (3, 3), (3, 6), (2, 4), (2, 12)] {
            let exact = exact_exp(&[vec![big(x)]], 80);
            assert_eq!(
                value(&exp_matrix(&scalar(p, x, 12)).unwrap())[0],
                reduce(&exact[0][0], p, 12)
            );
        }
        for (p, u) in [(3u64, 4i128), (5, 6), (2, 5)] {
            let exact = exact_log_scalar(u, 90);
            assert_eq!(
                value(&log_matrix(&scalar(p, u, 12)).unwrap())[0],
                reduce(&exact, p, 12)
            );
        }
        // 2×2, non-commuting entries
        let entries = [3i128, 9, 6, 3];
        let rows = vec![vec![big(3), big(9)], vec![big(6), big(3)]];
        let exact = exact_exp(&rows, 80);
        let got =
            value(&exp_matrix(&PadicMatrix::from_integers(3, 2, &entries, 10).unwrap()).unwrap());
        for (k, g) in got.iter().enumerate() {
            assert_eq!(*g, reduce(&exact[k / 2][k % 2], 3, 10));
        }
        assert!(exact[0][0].is_positive());
    }

    #[test]
    fn trivial_cases() {
        let zero = PadicMatrix::zero(3, 2, 12);
        assert_eq!(exp_matrix(&zero).unwrap(), PadicMatrix::identity(3, 2, 12));
        assert!(log_matrix(&PadicMatrix::identity(3, 2, 12))
            .unwrap()
            .is_zero());
        let id = PadicMatrix::identity(3, 2, 12);
        let group = Subgroup::Congruence(CongruenceLevelSpec {
            size: 2,
            p: 3,
            level: 1,
        });
        let o = commutator_power_check(&id, &id, &group, 10).unwrap();
        assert!(o.passed);
        let spec = CongruenceLevelSpec {
            size: 2,
            p: 3,
            level: 1,
        };
        assert!(p_power_step(&spec, &id, 12).passed);
    }

    #[test]
    fn convergence_domain_enforced() {
        assert!(matches!(
            exp_matrix(&scalar(3, 1, 8)),
            Err(Error::ConvergenceDomain {
                valuation: 0,
                required: 1
            })
        ));
        assert!(matches!(
            exp_matrix(&scalar(2, 2, 8)),
            Err(Error::ConvergenceDomain {
                valuation: 1,
                required: 2
            })
        ));
        assert!(log_matrix(&scalar(2, 3, 8)).is_err());
    }

    #[test]
    fn neumann_inverse() {
        let mut rng = sample_rng(9, 0, 0);
        let spec = CongruenceLevelSpec {
            size: 3,
            p: 5,
            level: 1,
        };
        let g = random_congruence(&mut rng, &spec, 12);
        let prod = g.mul(&g.inverse_near_identity().unwrap());
        assert_eq!(
            prod.compare(&PadicMatrix::identity(5, 3, 12))
                .residual_valuation,
            None
        );
    }

    #[test]
    fn conjugation_by_diag() {
        let r = |x: i128| Rational::from_integer(x);
        let conj = Conjugator::new(3, 2, &[r(1), r(0), r(0), r(3)], 12).unwrap();
        assert_eq!(conj.spread(), 1);
        let spec = CongruenceLevelSpec {
            size: 2,
            p: 3,
            level: 2,
        };
        for i in 0..20 {
            let u = random_congruence(&mut sample_rng(1, 0, i), &spec, 12);
            let o = conjugation_log_identity(&conj, &u, 9).unwrap();
            assert!(o.passed, "{o:?}");
        }
        let id = Conjugator::identity(3, 2, 12).unwrap();
        assert_eq!(id.spread(), 0);
        let u = random_congruence(&mut sample_rng(1, 0, 99), &spec, 12);
        assert!(conjugation_log_identity(&id, &u, 12).unwrap().passed);
    }

    #[test]
    fn intersection_examples() {
        let r = |x: i128| Rational::from_integer(x);
        let cfg = UniformConfig {
            p: 3,
            size: 2,
            level: 1,
            samples: 200,
            precision: 12,
            seed: 5,
            max_slack: 3,
        };
        let s = intersection_uniform_check(&cfg, 1, 1, &[r(1), r(0), r(0), r(3)]).unwrap();
        assert!(s.all_passed(), "{s:?}");
        let cfg = UniformConfig {
            p: 2,
            level: 2,
            ..cfg
        };
        let s = intersection_uniform_check(&cfg, 2, 2, &[r(1), r(0), r(0), r(4)]).unwrap();
        assert!(s.all_passed(), "{s:?}");
        // non-diagonal conjugator goes through rejection sampling
        let s = intersection_uniform_check(
            &UniformConfig { samples: 20, ..cfg },
            2,
            2,
            &[r(1), r(1), r(0), r(1)],
        )
        .unwrap();
        assert!(s.all_passed(), "{s:?}");
    }

    #[test]
    fn sweeps_pass() {
        for (p, size, level) in [(3u64, 2usize, 1i32), (5, 2, 1), (2, 2, 2), (3, 3, 2)] {
            let cfg = UniformConfig {
                p,
                size,
                level,
                samples: 60,
                precision: 12,
                seed: 11,
                max_slack: 3,
            };
            let report = verify_uniform(&cfg).unwrap();
            for c in &report.checks {
                assert!(c.all_passed(), "p={p} size={size}: {c:?}");
                assert!(c.max_slack <= 3);
            }
        }
    }

    #[test]
    fn sweeps_are_deterministic() {
        let cfg = UniformConfig {
            p: 5,
            size: 2,
            level: 1,
            samples: 30,
            precision: 12,
            seed: 3,
            max_slack: 3,
        };
        assert_eq!(verify_uniform(&cfg).unwrap(), verify_uniform(&cfg).unwrap());
    }

    #[test]
    fn config_validation() {
        let cfg = UniformConfig {
            p: 2,
            size: 2,
            level: 1,
            samples: 1,
            precision: 12,
            seed: 0,
            max_slack: 3,
        };
        assert!(verify_uniform(&cfg).is_err());
        assert!(verify_uniform(&UniformConfig {
            p: 4,
            level: 2,
            ..cfg
        })
        .is_err());
        assert!(verify_uniform(&UniformConfig {
            size: 7,
            level: 2,
            ..cfg
        })
        .is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn exp_power_identity(seed in any::<u64>(), pi in 0usize..3, size in 1usize..4) {
                let p = [2u64, 3, 5][pi];
                let x = random_lie(&mut sample_rng(seed, 0, 0), p, size, v0(p), 12);
                let lhs = exp_matrix(&x.scale_p(1).truncate(12)).unwrap();
                let rhs = exp_matrix(&x).unwrap().pow(p);
                let agreement = lhs.compare(&rhs);
                prop_assert_eq!(agreement.residual_valuation, None);
                prop_assert!(agreement.certified_precision >= 12);
            }

            #[test]
            fn log_exp_round_trip(seed in any::<u64>(), pi in 0usize..3) {
                let p = [2u64, 3, 5][pi];
                let x = random_lie(&mut sample_rng(seed, 0, 1), p, 2, v0(p), 12);
                let back = log_matrix(&exp_matrix(&x).unwrap()).unwrap();
                prop_assert_eq!(back.compare(&x).residual_valuation, None);
            }
        }
    }
}
