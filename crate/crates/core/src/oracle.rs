//! Brute-force counterparts of the closed forms used by the engines:
//! wedge ranks from explicit minors, Frattini ranks from explicit lattices,
//! graded dimensions from block enumeration, and all-`z` verdicts from
//! enumerating the dominant box.

use std::sync::Arc;

use rand::Rng;
use serde::Serialize;

use crate::arith::{binomial, rational_inverse, val_p, Rational};
use crate::cohomology::{blocks_of_degree, cohomology_dims, exterior_power_rank, factor_dims_qp};
use crate::error::{Error, Result};
use crate::filtration::congruence_shape;
use crate::rootdata::{enumerate_dominant, top_dimension, Cocharacter, GroupProfile};
use crate::transition::{
    block_fate, factor_rank, res_is_zero_for_all_z, transition_ranks, ResVerdict, TransitionQuery,
};

/// Size caps for the brute-force searches.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct OracleCaps {
    pub wedge_dim: usize,
    pub top_dimension: u64,
    pub box_bound: u64,
    /// Bound on `(z, block)` pairs visited by the per-`z` search.
    pub per_z_evaluations: usize,
}

impl Default for OracleCaps {
    fn default() -> Self {
        OracleCaps {
            wedge_dim: 6,
            top_dimension: 20,
            box_bound: 4,
            per_z_evaluations: 2_000_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OracleReport {
    pub oracle: String,
    pub instance: String,
    pub closed_form: u128,
    pub brute_force: u128,
    pub agreement: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl OracleReport {
    fn new(oracle: &str, instance: String, closed_form: u128, brute_force: u128) -> Self {
        OracleReport {
            oracle: oracle.to_string(),
            instance,
            closed_form,
            brute_force,
            agreement: closed_form == brute_force,
            note: None,
        }
    }
}

/// Dense matrix over `𝔽_p`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FpMatrix {
    p: u64,
    rows: usize,
    cols: usize,
    data: Vec<u64>,
}

impl FpMatrix {
    pub fn new(p: u64, rows: usize, cols: usize, entries: &[i128]) -> Result<Self> {
        if entries.len() != rows * cols {
            return Err(Error::Shape(format!(
                "{} entries for a {rows}×{cols} matrix",
                entries.len()
            )));
        }
        let data = entries
            .iter()
            .map(|e| e.rem_euclid(p as i128) as u64)
            .collect();
        Ok(FpMatrix {
            p,
            rows,
            cols,
            data,
        })
    }

    pub fn zero(p: u64, rows: usize, cols: usize) -> Self {
        FpMatrix {
            p,
            rows,
            cols,
            data: vec![0; rows * cols],
        }
    }

    pub fn identity(p: u64, n: usize) -> Self {
        let mut m = Self::zero(p, n, n);
        for i in 0..n {
            m.data[i * n + i] = 1;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> u64 {
        self.data[i * self.cols + j]
    }

    pub fn rank(&self) -> usize {
        let (p, cols) = (self.p, self.cols);
        let mut m = self.data.clone();
        let mut rank = 0;
        for col in 0..cols {
            let Some(pivot) = (rank..self.rows).find(|&r| m[r * cols + col] != 0) else {
                continue;
            };
            for c in 0..cols {
                m.swap(pivot * cols + c, rank * cols + c);
            }
            let inv = pow_mod(m[rank * cols + col], p - 2, p);
            for c in 0..cols {
                m[rank * cols + c] = m[rank * cols + c] * inv % p;
            }
            for r in 0..self.rows {
                let factor = m[r * cols + col];
                if r != rank && factor != 0 {
                    for c in 0..cols {
                        m[r * cols + c] = (m[r * cols + c] + (p - factor) * m[rank * cols + c]) % p;
                    }
                }
            }
            rank += 1;
        }
        rank
    }

    fn det_of(&self, rows: &[usize], cols: &[usize]) -> u64 {
        let p = self.p;
        let n = rows.len();
        let mut m: Vec<u64> = rows
            .iter()
            .flat_map(|&r| cols.iter().map(move |&c| (r, c)))
            .map(|(r, c)| self.get(r, c))
            .collect();
        let mut det = 1u64;
        for col in 0..n {
            let Some(pivot) = (col..n).find(|&r| m[r * n + col] != 0) else {
                return 0;
            };
            if pivot != col {
                for c in 0..n {
                    m.swap(pivot * n + c, col * n + c);
                }
                det = (p - det) % p;
            }
            det = det * m[col * n + col] % p;
            let inv = pow_mod(m[col * n + col], p - 2, p);
            for r in col + 1..n {
                let factor = m[r * n + col] * inv % p;
                for c in col..n {
                    m[r * n + c] = (m[r * n + c] + (p - factor) * m[col * n + c]) % p;
                }
            }
        }
        det
    }

    /// Matrix of `Λ^a` in the bases of `a`-subsets: all `a×a` minors.
    pub fn exterior_power(&self, a: usize) -> FpMatrix {
        let row_sets = subsets(self.rows, a);
        let col_sets = subsets(self.cols, a);
        let mut data = Vec::with_capacity(row_sets.len() * col_sets.len());
        for r in &row_sets {
            for c in &col_sets {
                data.push(self.det_of(r, c));
            }
        }
        FpMatrix {
            p: self.p,
            rows: row_sets.len(),
            cols: col_sets.len(),
            data,
        }
    }
}

fn pow_mod(mut b: u64, mut e: u64, p: u64) -> u64 {
    let mut acc = 1;
    b %= p;
    while e > 0 {
        if e & 1 == 1 {
            acc = acc * b % p;
        }
        b = b * b % p;
        e >>= 1;
    }
    acc
}

fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn go(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            go(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(0, n, k, &mut Vec::new(), &mut out);
    out
}

/// Random `rows×cols` matrix of rank at most `rank`, as a product of two
/// uniform factors.
pub fn random_fp_matrix<R: Rng>(
    rng: &mut R,
    p: u64,
    rows: usize,
    cols: usize,
    rank: usize,
) -> FpMatrix {
    let left: Vec<u64> = (0..rows * rank).map(|_| rng.gen_range(0..p)).collect();
    let right: Vec<u64> = (0..rank * cols).map(|_| rng.gen_range(0..p)).collect();
    let mut m = FpMatrix::zero(p, rows, cols);
    for i in 0..rows {
        for j in 0..cols {
            m.data[i * cols + j] = (0..rank)
                .map(|k| left[i * rank + k] * right[k * cols + j])
                .sum::<u64>()
                % p;
        }
    }
    m
}

/// Rank of the explicit `a`-th exterior power against `C(rank, a)`.
pub fn wedge_rank_oracle(m: &FpMatrix, a: usize, caps: &OracleCaps) -> Result<OracleReport> {
    if m.rows.max(m.cols) > caps.wedge_dim {
        return Err(Error::CapExceeded(format!(
            "{}×{} exceeds the wedge cap {}",
            m.rows, m.cols, caps.wedge_dim
        )));
    }
    if a > m.rows.min(m.cols) {
        return Err(Error::InvalidQuery(format!(
            "a = {a} exceeds the matrix dimensions"
        )));
    }
    let rank = m.rank() as u64;
    Ok(OracleReport::new(
        "wedge_rank",
        format!("{}×{} over F_{}, rank {rank}, a = {a}", m.rows, m.cols, m.p),
        exterior_power_rank(rank, a as u64),
        m.exterior_power(a).rank() as u128,
    ))
}

/// Multiplication by `π` on `ℤ_p[π]/(E)` in the basis `1, π, …, π^{e−1}`,
/// `E = π − p` for `e = 1` and `π^e + pπ^{e−1} + p` otherwise.
fn uniformizer_matrix(p: u64, e: usize) -> Vec<Vec<i128>> {
    let p = p as i128;
    let mut m = vec![vec![0i128; e]; e];
    for k in 1..e {
        m[k][k - 1] = 1;
    }
    // π·π^{e−1} = −p − pπ^{e−1} (or p when e = 1)
    if e == 1 {
        m[0][0] = p;
    } else {
        m[0][e - 1] = -p;
        m[e - 1][e - 1] = -p;
    }
    m
}

fn int_matmul(a: &[Vec<i128>], b: &[Vec<i128>]) -> Vec<Vec<i128>> {
    let n = a.len();
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| (0..n).map(|k| a[i][k] * b[k][j]).sum())
                .collect()
        })
        .collect()
}

fn int_pow(m: &[Vec<i128>], k: i64) -> Vec<Vec<i128>> {
    let n = m.len();
    let mut acc: Vec<Vec<i128>> = (0..n)
        .map(|i| (0..n).map(|j| (i == j) as i128).collect())
        .collect();
    for _ in 0..k {
        acc = int_matmul(&acc, m);
    }
    acc
}

/// `𝔽_p`-dimension of the image of `π^{s′}𝔒^δ` in `π^s𝔒^δ / π^{s+e}𝔒^δ`.
///
/// With `G_t` the matrix of `π^t` on `𝔒 ≅ ℤ_p^{ef}` (unramified part of
/// rank `f`), the coordinates of `π^{s′}𝔒` in the basis of `π^s𝔒` are
/// `C = G_s⁻¹ G_{s′}`, solved over ℚ; the image has dimension `rank(C mod p)`.
pub fn frattini_rank_oracle(
    p: u64,
    s: i64,
    s_prime: i64,
    e: u64,
    f: u64,
    delta: u64,
) -> Result<OracleReport> {
    if s < 0 || s_prime < s {
        return Err(Error::LevelOrder {
            source_level: s,
            target: s_prime,
        });
    }
    if !(1..=4).contains(&e) || !(1..=3).contains(&f) || delta > 3 {
        return Err(Error::CapExceeded(format!(
            "(e, f, δ) = ({e}, {f}, {delta}) outside the oracle range"
        )));
    }
    let base = uniformizer_matrix(p, e as usize);
    let to_rat = |m: Vec<Vec<i128>>| -> Vec<Vec<Rational>> {
        m.into_iter()
            .map(|r| r.into_iter().map(Rational::from_integer).collect())
            .collect()
    };
    let gs = to_rat(int_pow(&base, s));
    let gsp = to_rat(int_pow(&base, s_prime));
    let inv = rational_inverse(&gs).ok_or(Error::Singular)?;
    let n = e as usize;
    let mut c = vec![0i128; n * n];
    for i in 0..n {
        for j in 0..n {
            let x: Rational = (0..n).map(|k| inv[i][k] * gsp[k][j]).sum();
            if !x.is_integer() && val_p(p, *x.denom()) > 0 {
                return Err(Error::InvalidQuery("π^{s′}𝔒 is not inside π^s𝔒".into()));
            }
            let unit_den = crate::arith::mod_inverse(*x.denom(), p as i128);
            c[i * n + j] = (x.numer().rem_euclid(p as i128) * unit_den).rem_euclid(p as i128);
        }
    }
    // f·δ diagonal copies of C
    let copies = (f * delta) as usize;
    let big = n * copies;
    let mut entries = vec![0i128; big * big];
    for b in 0..copies {
        for i in 0..n {
            for j in 0..n {
                entries[(b * n + i) * big + (b * n + j)] = c[i * n + j];
            }
        }
    }
    let brute = if big == 0 {
        0
    } else {
        FpMatrix::new(p, big, big, &entries)?.rank() as u128
    };
    Ok(OracleReport::new(
        "frattini_rank",
        format!("p = {p}, s = {s}, s′ = {s_prime}, e = {e}, f = {f}, δ = {delta}"),
        factor_rank(s, s_prime, delta, e, f)? as u128,
        brute,
    ))
}

/// Smallest admissible level of a profile.
fn base_level(profile: &GroupProfile) -> i64 {
    let e = profile.e() as i64;
    if profile.p() == 2 {
        2 * e
    } else {
        e
    }
}

/// `Σ ∏ C(dim, index)` over every block of degree `i`, against `dim H^i`.
pub fn block_convolution_oracle(
    profile: &Arc<GroupProfile>,
    i: u64,
    caps: &OracleCaps,
) -> Result<OracleReport> {
    let d = top_dimension(profile);
    if d > caps.top_dimension {
        return Err(Error::CapExceeded(format!(
            "d = {d} exceeds the cap {}",
            caps.top_dimension
        )));
    }
    let dims = cohomology_dims(&congruence_shape(profile, base_level(profile))?)?;
    let factor_dims = factor_dims_qp(profile);
    let brute: u128 = blocks_of_degree(profile, i)?
        .map(|b| {
            let flat = b.a.iter().chain([&b.b]).chain(&b.c);
            flat.zip(&factor_dims)
                .map(|(&idx, &dim)| binomial(dim, idx))
                .product::<u128>()
        })
        .sum();
    Ok(OracleReport::new(
        "block_convolution",
        format!("{} i = {i}", instance_name(profile)),
        dims.0[i as usize],
        brute,
    ))
}

/// All degrees at once: one sweep over every index vector, binned by degree.
pub fn block_convolution_all_degrees(
    profile: &Arc<GroupProfile>,
    caps: &OracleCaps,
) -> Result<Vec<OracleReport>> {
    let d = top_dimension(profile);
    if d > caps.top_dimension {
        return Err(Error::CapExceeded(format!(
            "d = {d} exceeds the cap {}",
            caps.top_dimension
        )));
    }
    let dims = cohomology_dims(&congruence_shape(profile, base_level(profile))?)?;
    let caps_vec = factor_dims_qp(profile);
    let mut bins = vec![0u128; d as usize + 1];
    let mut idx = vec![0u64; caps_vec.len()];
    loop {
        let degree: u64 = idx.iter().sum();
        bins[degree as usize] += idx
            .iter()
            .zip(&caps_vec)
            .map(|(&k, &dim)| binomial(dim, k))
            .product::<u128>();
        let Some(pos) = (0..idx.len()).rev().find(|&k| idx[k] < caps_vec[k]) else {
            break;
        };
        idx[pos] += 1;
        idx[pos + 1..].iter_mut().for_each(|x| *x = 0);
    }
    let name = instance_name(profile);
    Ok(bins
        .into_iter()
        .enumerate()
        .map(|(i, brute)| {
            OracleReport::new(
                "block_convolution",
                format!("{name} i = {i}"),
                dims.0[i],
                brute,
            )
        })
        .collect())
}

fn instance_name(profile: &GroupProfile) -> String {
    let s = profile.spec();
    format!("{}{} p = {} e = {} f = {}", s.family, s.rank, s.p, s.e, s.f)
}

/// Result of exhausting the dominant box for one restriction.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PerZReport {
    pub instance: String,
    pub symbolic_zero: bool,
    pub survivor_in_box: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub first_survivor: Option<Cocharacter>,
    pub evaluated: usize,
    /// `agree`, `box-limited` (the engine's witness lies outside the box and
    /// was confirmed directly) or `disagree`.
    pub status: &'static str,
}

impl PerZReport {
    pub fn agreement(&self) -> bool {
        self.status != "disagree"
    }
}

/// Evaluates `block_fate` for every dominant `z` in the box and every block
/// of degree `i`, and compares with the symbolic verdict.
pub fn per_z_resvan_oracle(
    profile: &Arc<GroupProfile>,
    i: u64,
    m: i64,
    n: i64,
    n_prime: i64,
    caps: &OracleCaps,
) -> Result<PerZReport> {
    let verdict = res_is_zero_for_all_z(profile, i, m, n, n_prime)?;
    let zs = enumerate_dominant(profile, caps.box_bound);
    let blocks: Vec<_> = if i <= top_dimension(profile) {
        blocks_of_degree(profile, i)?.collect()
    } else {
        Vec::new()
    };
    if zs.len().saturating_mul(blocks.len()) > caps.per_z_evaluations {
        return Err(Error::CapExceeded(format!(
            "{} cocharacters × {} blocks exceeds {}",
            zs.len(),
            blocks.len(),
            caps.per_z_evaluations
        )));
    }
    let mut first_survivor = None;
    let mut evaluated = 0;
    'outer: for z in &zs {
        let q = TransitionQuery::new(profile, m, n, n_prime, z.clone(), i)?;
        let ranks = transition_ranks(profile, &q)?;
        for block in &blocks {
            evaluated += 1;
            if ranks.survives(block) {
                first_survivor = Some(z.clone());
                break 'outer;
            }
        }
    }
    let survivor_in_box = first_survivor.is_some();
    let status = match (&verdict, survivor_in_box) {
        (ResVerdict::Zero(_), false) | (ResVerdict::Nonzero(_), true) => "agree",
        (ResVerdict::Zero(_), true) => "disagree",
        (ResVerdict::Nonzero(w), false) => {
            let q = TransitionQuery::new(profile, m, n, n_prime, w.z.clone(), i)?;
            if block_fate(profile, &q, &w.block)?.survives {
                "box-limited"
            } else {
                "disagree"
            }
        }
    };
    Ok(PerZReport {
        instance: format!(
            "{} i = {i} m = {m} n = {n} n′ = {n_prime}",
            instance_name(profile)
        ),
        symbolic_zero: verdict.is_zero(),
        survivor_in_box,
        first_survivor,
        evaluated,
        status,
    })
}

impl From<&PerZReport> for OracleReport {
    fn from(r: &PerZReport) -> OracleReport {
        let mut report = OracleReport::new(
            "per_z_resvan",
            r.instance.clone(),
            (!r.symbolic_zero) as u128,
            (r.survivor_in_box || r.status == "box-limited") as u128,
        );
        report.agreement = r.agreement();
        if r.status != "agree" {
            report.note = Some(r.status.to_string());
        }
        report
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::padic::sample_rng;
    use crate::rootdata::Family;

    fn caps() -> OracleCaps {
        OracleCaps::default()
    }

    #[test]
    fn wedge_examples() {
        let id = FpMatrix::identity(5, 3);
        let r = wedge_rank_oracle(&id, 2, &caps()).unwrap();
        assert_eq!((r.closed_form, r.brute_force), (3, 3));
        let rank2 = FpMatrix::new(5, 3, 3, &[1, 0, 0, 0, 1, 0, 1, 1, 0]).unwrap();
        let r = wedge_rank_oracle(&rank2, 2, &caps()).unwrap();
        assert_eq!((r.closed_form, r.brute_force), (1, 1));
        let zero = FpMatrix::zero(3, 3, 3);
        assert_eq!(wedge_rank_oracle(&zero, 1, &caps()).unwrap().brute_force, 0);
        assert!(wedge_rank_oracle(&FpMatrix::identity(3, 7), 1, &caps()).is_err());
    }

    #[test]
    fn determinant_sign() {
        let m = FpMatrix::new(7, 2, 2, &[0, 1, 1, 0]).unwrap();
        assert_eq!(m.det_of(&[0, 1], &[0, 1]), 6);
    }

    #[test]
    fn random_wedges_agree() {
        let mut rng = sample_rng(17, 0, 0);
        for k in 0..100 {
            let p = [2, 3, 5, 7][k % 4];
            let (rows, cols) = (rng.gen_range(1..=6), rng.gen_range(1..=6));
            let rank = rng.gen_range(0..=rows.min(cols));
            let m = random_fp_matrix(&mut rng, p, rows, cols, rank);
            let a = rng.gen_range(0..=rows.min(cols));
            assert!(wedge_rank_oracle(&m, a, &caps()).unwrap().agreement);
        }
    }

    #[test]
    fn frattini_examples() {
        let r = frattini_rank_oracle(3, 2, 2, 2, 1, 1).unwrap();
        assert_eq!(r.brute_force, 2);
        assert_eq!(
            frattini_rank_oracle(3, 2, 4, 2, 1, 1).unwrap().brute_force,
            0
        );
        let r = frattini_rank_oracle(3, 2, 3, 2, 1, 1).unwrap();
        assert_eq!((r.closed_form, r.brute_force), (1, 1));
        for e in 1..=3 {
            for f in 1..=2 {
                for delta in 0..=2 {
                    for s in 0..=2 * e as i64 {
                        for gap in 0..=2 * e as i64 {
                            let r = frattini_rank_oracle(5, s, s + gap, e, f, delta).unwrap();
                            assert!(r.agreement, "{r:?}");
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn block_convolution_examples() {
        let a1 = GroupProfile::split(Family::A, 1, 3, 1, 1)
            .unwrap()
            .into_shared();
        assert_eq!(
            block_convolution_oracle(&a1, 0, &caps())
                .unwrap()
                .brute_force,
            1
        );
        assert_eq!(
            block_convolution_oracle(&a1, 2, &caps())
                .unwrap()
                .brute_force,
            3
        );
        let a2 = GroupProfile::split(Family::A, 2, 3, 1, 1)
            .unwrap()
            .into_shared();
        let r = block_convolution_oracle(&a2, 4, &caps()).unwrap();
        assert_eq!((r.closed_form, r.brute_force), (70, 70));
        let all = block_convolution_all_degrees(&a2, &caps()).unwrap();
        assert_eq!(all.len(), 9);
        assert!(all.iter().all(|r| r.agreement));
        let g2 = GroupProfile::split(Family::G, 2, 3, 2, 1)
            .unwrap()
            .into_shared();
        assert!(block_convolution_oracle(&g2, 1, &caps()).is_err());
        let wide = OracleCaps {
            top_dimension: 28,
            ..caps()
        };
        assert!(block_convolution_all_degrees(&g2, &wide)
            .unwrap()
            .iter()
            .all(|r| r.agreement));
    }

    #[test]
    fn per_z_examples() {
        let a1 = GroupProfile::split(Family::A, 1, 3, 1, 1)
            .unwrap()
            .into_shared();
        for i in 0..=3 {
            let r = per_z_resvan_oracle(&a1, i, 1, 1, 2, &caps()).unwrap();
            assert_eq!(r.status, "agree", "{r:?}");
            assert_eq!(r.survivor_in_box, i <= 1);
        }
        let shallow = OracleCaps {
            box_bound: 0,
            ..caps()
        };
        let r = per_z_resvan_oracle(&a1, 1, 1, 1, 2, &shallow).unwrap();
        assert_eq!(r.status, "box-limited");
        assert!(OracleReport::from(&r).agreement);
    }
}
