//! Root systems, cocharacters and the group profiles built on them.
//!
//! Roots are integer coefficient vectors over the simple roots. Cocharacters
//! are written in the basis of fundamental coweights (dual to the simple
//! roots), followed by central coordinates, so `⟨μ, α⟩` is the dot product of
//! the first `rank` coordinates of `μ` with the coefficients of `α`, and
//! dominance is a coordinate-wise sign condition.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::arith::is_prime;
use crate::error::{Error, Result};

const MAX_RANK: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Family {
    A,
    B,
    C,
    D,
    G,
    BC,
    /// No roots at all: a torus (or the trivial group when the torus rank is 0).
    T,
}

impl Family {
    pub fn parse(label: &str) -> Result<Family> {
        Ok(match label.trim() {
            "A" => Family::A,
            "B" => Family::B,
            "C" => Family::C,
            "D" => Family::D,
            "G" => Family::G,
            "BC" => Family::BC,
            "T" => Family::T,
            other => {
                return Err(Error::UnsupportedRootSystem {
                    family: other.to_string(),
                    rank: 0,
                })
            }
        })
    }

    pub fn label(self) -> &'static str {
        match self {
            Family::A => "A",
            Family::B => "B",
            Family::C => "C",
            Family::D => "D",
            Family::G => "G",
            Family::BC => "BC",
            Family::T => "T",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// A root as coefficients over the simple roots.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Root(pub Vec<i64>);

impl Root {
    pub fn height(&self) -> i64 {
        self.0.iter().sum()
    }

    pub fn is_positive(&self) -> bool {
        self.0.iter().all(|&c| c >= 0) && self.0.iter().any(|&c| c > 0)
    }

    pub fn neg(&self) -> Root {
        Root(self.0.iter().map(|c| -c).collect())
    }

    pub fn scale(&self, k: i64) -> Root {
        Root(self.0.iter().map(|c| k * c).collect())
    }

    /// Comma-separated coefficients, the key format used in profile JSON.
    pub fn label(&self) -> String {
        self.0
            .iter()
            .map(|c| c.to_string())
            .collect::<Vec<_>>()
            .join(",")
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RootSystem {
    family: Family,
    rank: usize,
    positive_roots: Vec<Root>,
    /// `Φ_red⁻`, lexicographically ascending in simple-root coordinates.
    reduced_negative: Vec<Root>,
    /// `Φ_red⁺`, the negatives of `reduced_negative` in the same order.
    reduced_positive: Vec<Root>,
}

fn cartan_matrix(family: Family, rank: usize) -> Result<Vec<Vec<i64>>> {
    let unsupported = || Error::UnsupportedRootSystem {
        family: family.label().to_string(),
        rank,
    };
    let ok = match family {
        Family::A => (1..=MAX_RANK).contains(&rank),
        Family::B | Family::C => (2..=MAX_RANK).contains(&rank),
        Family::D => (3..=MAX_RANK).contains(&rank),
        Family::G => rank == 2,
        Family::BC | Family::T => false,
    };
    if !ok {
        return Err(unsupported());
    }
    // entry [i][j] = ⟨α_i^∨, α_j⟩
    let mut a = vec![vec![0i64; rank]; rank];
    for (i, row) in a.iter_mut().enumerate() {
        row[i] = 2;
    }
    let mut link = |i: usize, j: usize, ij: i64, ji: i64| {
        a[i][j] = ij;
        a[j][i] = ji;
    };
    match family {
        Family::A => (0..rank - 1).for_each(|i| link(i, i + 1, -1, -1)),
        Family::B => {
            (0..rank - 2).for_each(|i| link(i, i + 1, -1, -1));
            // α_n short
            link(rank - 2, rank - 1, -1, -2);
        }
        Family::C => {
            (0..rank - 2).for_each(|i| link(i, i + 1, -1, -1));
            // α_n long
            link(rank - 2, rank - 1, -2, -1);
        }
        Family::D => {
            (0..rank - 2).for_each(|i| link(i, i + 1, -1, -1));
            link(rank - 3, rank - 1, -1, -1);
        }
        Family::G => link(0, 1, -3, -1), // α_1 short
        Family::BC | Family::T => unreachable!(),
    }
    Ok(a)
}

/// Positive roots by the root-string algorithm: `β + α_i` is a root iff
/// `q - ⟨β, α_i^∨⟩ > 0`, where `q` is the length of the `α_i`-string below `β`.
fn positive_roots_from_cartan(cartan: &[Vec<i64>]) -> Vec<Root> {
    let rank = cartan.len();
    let simple: Vec<Root> = (0..rank)
        .map(|i| Root((0..rank).map(|j| i64::from(i == j)).collect()))
        .collect();
    let mut roots: Vec<Root> = simple.clone();
    let mut layer = simple;
    while !layer.is_empty() {
        let mut next = Vec::new();
        for beta in &layer {
            for i in 0..rank {
                let mut q = 0;
                loop {
                    let mut down = beta.0.clone();
                    down[i] -= q + 1;
                    if roots.contains(&Root(down)) {
                        q += 1;
                    } else {
                        break;
                    }
                }
                let pairing: i64 = (0..rank).map(|j| beta.0[j] * cartan[i][j]).sum();
                if q - pairing > 0 {
                    let mut up = beta.0.clone();
                    up[i] += 1;
                    let up = Root(up);
                    if !roots.contains(&up) && !next.contains(&up) {
                        next.push(up);
                    }
                }
            }
        }
        roots.extend(next.iter().cloned());
        layer = next;
    }
    roots
}

impl RootSystem {
    pub fn build(family: Family, rank: usize) -> Result<RootSystem> {
        let positive_roots = match family {
            Family::BC if rank == 1 => vec![Root(vec![1]), Root(vec![2])],
            Family::T if rank == 0 => Vec::new(),
            Family::BC | Family::T => {
                return Err(Error::UnsupportedRootSystem {
                    family: family.label().to_string(),
                    rank,
                })
            }
            _ => positive_roots_from_cartan(&cartan_matrix(family, rank)?),
        };
        let mut positive_roots = positive_roots;
        positive_roots.sort_by(|a, b| a.height().cmp(&b.height()).then_with(|| b.cmp(a)));

        let mut reduced_negative: Vec<Root> = positive_roots
            .iter()
            .filter(|r| Self::reduced_in(&positive_roots, r))
            .map(Root::neg)
            .collect();
        reduced_negative.sort();
        let reduced_positive = reduced_negative.iter().map(Root::neg).collect();
        Ok(RootSystem {
            family,
            rank,
            positive_roots,
            reduced_negative,
            reduced_positive,
        })
    }

    fn reduced_in(positive: &[Root], root: &Root) -> bool {
        if root.0.iter().any(|c| c % 2 != 0) {
            return true;
        }
        let half = Root(root.0.iter().map(|c| c / 2).collect());
        !positive.contains(&half)
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    /// `Φ⁺` ordered by height.
    pub fn positive_roots(&self) -> &[Root] {
        &self.positive_roots
    }

    /// All of `Φ = Φ⁺ ⊔ −Φ⁺`.
    pub fn roots(&self) -> Vec<Root> {
        let mut all = self.positive_roots.clone();
        all.extend(self.positive_roots.iter().map(Root::neg));
        all
    }

    pub fn reduced_negative(&self) -> &[Root] {
        &self.reduced_negative
    }

    pub fn reduced_positive(&self) -> &[Root] {
        &self.reduced_positive
    }

    pub fn contains(&self, root: &Root) -> bool {
        if root.is_positive() {
            self.positive_roots.contains(root)
        } else {
            self.positive_roots.contains(&root.neg())
        }
    }

    /// `α` is reduced iff `α/2` is not a root.
    pub fn is_reduced(&self, root: &Root) -> bool {
        let positive = if root.is_positive() {
            root.clone()
        } else {
            root.neg()
        };
        Self::reduced_in(&self.positive_roots, &positive)
    }

    /// Whether `2α ∈ Φ`.
    pub fn has_double(&self, root: &Root) -> bool {
        self.contains(&root.scale(2))
    }

    /// `⟨ω_j^∨, α⟩` for every fundamental coweight `j` and every positive root
    /// (rows indexed by `j`, columns following [`Self::positive_roots`]).
    pub fn cartan_pairings(&self) -> Vec<Vec<i64>> {
        (0..self.rank)
            .map(|j| self.positive_roots.iter().map(|r| r.0[j]).collect())
            .collect()
    }
}

/// Free entry point mirroring [`RootSystem::build`].
pub fn build_root_system(family: Family, rank: usize) -> Result<RootSystem> {
    RootSystem::build(family, rank)
}

/// A cocharacter `μ`; `z = μ(π)` is the corresponding element of `Z⁺` when `μ`
/// is dominant.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Cocharacter(pub Vec<i64>);

impl Cocharacter {
    pub fn zero(torus_rank: usize) -> Cocharacter {
        Cocharacter(vec![0; torus_rank])
    }

    /// `⟨μ, α⟩`; central coordinates pair trivially with every root.
    pub fn pairing(&self, root: &Root) -> i64 {
        root.0.iter().zip(&self.0).map(|(a, m)| a * m).sum()
    }

    pub fn add(&self, other: &Cocharacter) -> Cocharacter {
        Cocharacter(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn is_dominant(&self, roots: &RootSystem) -> bool {
        roots.positive_roots().iter().all(|a| self.pairing(a) >= 0)
    }
}

/// Profile document as it appears in JSON.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileSpec {
    pub family: String,
    pub rank: usize,
    pub p: u64,
    pub e: u64,
    pub f: u64,
    /// `dim_𝔉 U_α` keyed by the comma-separated coefficients of a positive
    /// root. Missing roots default to 1.
    #[serde(default)]
    pub delta: BTreeMap<String, u64>,
    /// Defaults to the semisimple rank.
    #[serde(default)]
    pub torus_rank: Option<usize>,
}

/// Root datum together with the local-field data `(p, e, f)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupProfile {
    roots: RootSystem,
    p: u64,
    e: u64,
    f: u64,
    /// δ per positive root, aligned with `roots.positive_roots()`.
    delta: Vec<u64>,
    torus_rank: usize,
}

impl GroupProfile {
    pub fn new(
        roots: RootSystem,
        p: u64,
        e: u64,
        f: u64,
        delta: BTreeMap<String, u64>,
        torus_rank: usize,
    ) -> Result<GroupProfile> {
        if !is_prime(p) {
            return Err(Error::InvalidProfile(format!("p = {p} is not prime")));
        }
        if e == 0 || f == 0 {
            return Err(Error::InvalidProfile("e and f must be positive".into()));
        }
        if torus_rank < roots.rank() {
            return Err(Error::InvalidProfile(format!(
                "torus rank {torus_rank} is below the semisimple rank {}",
                roots.rank()
            )));
        }
        let mut per_root = Vec::with_capacity(roots.positive_roots().len());
        let mut unused: BTreeMap<&str, ()> = delta.keys().map(|k| (k.as_str(), ())).collect();
        for root in roots.positive_roots() {
            let label = root.label();
            let d = delta.get(&label).copied().unwrap_or(1);
            unused.remove(label.as_str());
            if d == 0 && roots.is_reduced(root) {
                return Err(Error::InvalidProfile(format!(
                    "delta for root [{label}] must be positive"
                )));
            }
            per_root.push(d);
        }
        if let Some((k, _)) = unused.into_iter().next() {
            return Err(Error::InvalidProfile(format!(
                "delta key [{k}] is not a positive root"
            )));
        }
        Ok(GroupProfile {
            roots,
            p,
            e,
            f,
            delta: per_root,
            torus_rank,
        })
    }

    pub fn from_spec(spec: &ProfileSpec) -> Result<GroupProfile> {
        let family = Family::parse(&spec.family).map_err(|_| Error::UnsupportedRootSystem {
            family: spec.family.clone(),
            rank: spec.rank,
        })?;
        let roots = RootSystem::build(family, spec.rank)?;
        let torus_rank = spec.torus_rank.unwrap_or(spec.rank);
        GroupProfile::new(
            roots,
            spec.p,
            spec.e,
            spec.f,
            spec.delta.clone(),
            torus_rank,
        )
    }

    pub fn from_json(text: &str) -> Result<GroupProfile> {
        let spec: ProfileSpec =
            serde_json::from_str(text).map_err(|e| Error::InvalidProfile(e.to_string()))?;
        GroupProfile::from_spec(&spec)
    }

    /// Convenience constructor with default δ and torus rank.
    pub fn split(family: Family, rank: usize, p: u64, e: u64, f: u64) -> Result<GroupProfile> {
        let roots = RootSystem::build(family, rank)?;
        GroupProfile::new(roots, p, e, f, BTreeMap::new(), rank)
    }

    pub fn into_shared(self) -> Arc<GroupProfile> {
        Arc::new(self)
    }

    /// Normalized JSON document with δ spelled out for every positive root.
    pub fn spec(&self) -> ProfileSpec {
        ProfileSpec {
            family: self.roots.family().label().to_string(),
            rank: self.roots.rank(),
            p: self.p,
            e: self.e,
            f: self.f,
            delta: self
                .roots
                .positive_roots()
                .iter()
                .zip(&self.delta)
                .map(|(r, &d)| (r.label(), d))
                .collect(),
            torus_rank: Some(self.torus_rank),
        }
    }

    pub fn roots(&self) -> &RootSystem {
        &self.roots
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn e(&self) -> u64 {
        self.e
    }

    pub fn f(&self) -> u64 {
        self.f
    }

    pub fn torus_rank(&self) -> usize {
        self.torus_rank
    }

    /// `[𝔉 : ℚ_p] = e·f`.
    pub fn degree(&self) -> u64 {
        self.e * self.f
    }

    /// `δ_α` for a root of either sign; zero if `α ∉ Φ`.
    pub fn delta(&self, root: &Root) -> u64 {
        let positive = if root.is_positive() {
            root.clone()
        } else {
            root.neg()
        };
        self.roots
            .positive_roots()
            .iter()
            .position(|r| *r == positive)
            .map_or(0, |i| self.delta[i])
    }

    /// `δ_α + δ_{2α}`, the 𝔉-dimension of the factor `Ũ_α` of a reduced root.
    pub fn factor_dim_f(&self, root: &Root) -> u64 {
        self.delta(root) + self.delta(&root.scale(2))
    }

    /// `dim_{ℚ_p} U_α = (δ_α + δ_{2α})·e·f`.
    pub fn root_dim_qp(&self, root: &Root) -> u64 {
        self.factor_dim_f(root) * self.degree()
    }

    /// `dim_{ℚ_p} Z`.
    pub fn center_dim_qp(&self) -> u64 {
        self.torus_rank as u64 * self.degree()
    }

    /// Whether `m ∈ eℕ` and, for `p = 2`, `m > e`.
    pub fn is_admissible_level(&self, m: i64) -> bool {
        let e = self.e as i64;
        m > 0 && m % e == 0 && (self.p != 2 || m > e)
    }

    pub fn check_level(&self, m: i64) -> Result<()> {
        if self.is_admissible_level(m) {
            Ok(())
        } else {
            Err(Error::InadmissibleLevel {
                level: m,
                p: self.p,
                e: self.e,
            })
        }
    }
}

/// `i₀ = dim_{ℚ_p}(G/P_min)`, the sum of `ℚ_p`-dimensions over `Φ_red⁻`.
pub fn i0(profile: &GroupProfile) -> u64 {
    profile
        .roots()
        .reduced_negative()
        .iter()
        .map(|r| profile.root_dim_qp(r))
        .sum()
}

/// `d = dim_{ℚ_p} G = 2·i₀ + dim_{ℚ_p} Z`.
pub fn top_dimension(profile: &GroupProfile) -> u64 {
    2 * i0(profile) + profile.center_dim_qp()
}

/// Dominant `μ = c·Σ ω_j^∨` with the least `c` such that `⟨μ, α⟩ ≥ threshold`
/// for every `α ∈ Φ⁺` (non-reduced roots included).
pub fn find_deep_dominant(profile: &GroupProfile, threshold: u64) -> Cocharacter {
    let rank = profile.roots().rank();
    let rho = {
        let mut v = vec![0; profile.torus_rank()];
        v[..rank].iter_mut().for_each(|c| *c = 1);
        Cocharacter(v)
    };
    let min_pairing = profile
        .roots()
        .positive_roots()
        .iter()
        .map(|a| rho.pairing(a))
        .min();
    let scale = match min_pairing {
        None => 0,
        Some(step) => (threshold as i64 + step - 1) / step,
    };
    Cocharacter(rho.0.iter().map(|c| c * scale).collect())
}

/// Every dominant cocharacter with all coordinates in `[0, box_bound]`, in
/// lexicographic order. Central coordinates are enumerated as well.
pub fn enumerate_dominant(profile: &GroupProfile, box_bound: u64) -> Vec<Cocharacter> {
    let width = profile.torus_rank();
    let b = box_bound as i64;
    let mut out = Vec::new();
    let mut cur = vec![0i64; width];
    loop {
        let mu = Cocharacter(cur.clone());
        if mu.is_dominant(profile.roots()) {
            out.push(mu);
        }
        let mut k = width;
        loop {
            if k == 0 {
                return out;
            }
            k -= 1;
            if cur[k] < b {
                cur[k] += 1;
                cur[k + 1..].iter_mut().for_each(|c| *c = 0);
                break;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Closure oracle: all nonnegative integer vectors reachable from simple
    /// roots by adding simple roots while staying inside the set accepted by
    /// the Weyl-invariant quadratic form (roots have the lengths of simple roots).
    fn closure_count(family: Family, rank: usize) -> usize {
        let cartan = cartan_matrix(family, rank).unwrap();
        // symmetrize: B = D·A with d_i = squared length of α_i (up to scale)
        let mut d = vec![0f64; rank];
        d[0] = 1.0;
        for _ in 0..rank {
            for i in 0..rank {
                for j in 0..rank {
                    if cartan[i][j] != 0 && i != j && d[i] > 0.0 && d[j] == 0.0 {
                        // (α_i,α_j) symmetric: d_i·A[i][j] = d_j·A[j][i]
                        d[j] = d[i] * cartan[i][j] as f64 / cartan[j][i] as f64;
                    }
                }
            }
        }
        let form = |v: &[i64]| -> f64 {
            let mut s = 0.0;
            for i in 0..rank {
                for j in 0..rank {
                    s += v[i] as f64 * v[j] as f64 * d[i] * cartan[i][j] as f64 / 2.0;
                }
            }
            s
        };
        let lengths: Vec<f64> = (0..rank)
            .map(|i| form(&(0..rank).map(|j| i64::from(i == j)).collect::<Vec<_>>()))
            .collect();
        let mut bound = vec![0; rank];
        let mut count = 0;
        // brute-force box search: positive roots have coefficients ≤ 3 in ranks ≤ 3
        let limit = 4i64;
        loop {
            if bound.iter().any(|&c| c > 0) {
                let q = form(&bound);
                if lengths.iter().any(|l| (l - q).abs() < 1e-9) {
                    count += 1;
                }
            }
            let mut k = rank;
            loop {
                if k == 0 {
                    return count;
                }
                k -= 1;
                if bound[k] < limit {
                    bound[k] += 1;
                    bound[k + 1..].iter_mut().for_each(|c| *c = 0);
                    break;
                }
            }
        }
    }

    #[test]
    fn positive_root_counts() {
        for (family, rank, expected) in [
            (Family::A, 1, 1),
            (Family::A, 2, 3),
            (Family::A, 3, 6),
            (Family::B, 2, 4),
            (Family::C, 2, 4),
            (Family::B, 3, 9),
            (Family::C, 3, 9),
            (Family::D, 4, 12),
            (Family::G, 2, 6),
        ] {
            let rs = RootSystem::build(family, rank).unwrap();
            assert_eq!(rs.positive_roots().len(), expected, "{family}{rank}");
            if rank <= 3 {
                assert_eq!(
                    closure_count(family, rank),
                    expected,
                    "oracle {family}{rank}"
                );
            }
        }
    }

    #[test]
    fn g2_roots_are_standard() {
        let rs = RootSystem::build(Family::G, 2).unwrap();
        let mut got: Vec<Vec<i64>> = rs.positive_roots().iter().map(|r| r.0.clone()).collect();
        got.sort();
        assert_eq!(
            got,
            vec![
                vec![0, 1],
                vec![1, 0],
                vec![1, 1],
                vec![2, 1],
                vec![3, 1],
                vec![3, 2]
            ]
        );
    }

    #[test]
    fn bc1_is_non_reduced() {
        let rs = RootSystem::build(Family::BC, 1).unwrap();
        assert_eq!(rs.positive_roots().len(), 2);
        assert_eq!(rs.reduced_positive(), &[Root(vec![1])]);
        assert_eq!(rs.reduced_negative(), &[Root(vec![-1])]);
        assert!(rs.has_double(&Root(vec![1])));
        assert!(rs.has_double(&Root(vec![-1])));
        assert!(!rs.is_reduced(&Root(vec![-2])));
    }

    #[test]
    fn only_bc_has_doubles() {
        for (family, rank) in [
            (Family::A, 2),
            (Family::B, 2),
            (Family::C, 2),
            (Family::G, 2),
        ] {
            let rs = RootSystem::build(family, rank).unwrap();
            assert!(rs
                .roots()
                .iter()
                .all(|r| !rs.has_double(r) && rs.is_reduced(r)));
        }
    }

    #[test]
    fn reduced_listing_is_lexicographic_and_symmetric() {
        let rs = RootSystem::build(Family::A, 2).unwrap();
        let neg: Vec<_> = rs.reduced_negative().iter().map(|r| r.0.clone()).collect();
        assert_eq!(neg, vec![vec![-1, -1], vec![-1, 0], vec![0, -1]]);
        for (n, p) in rs.reduced_negative().iter().zip(rs.reduced_positive()) {
            assert_eq!(n.neg(), *p);
        }
    }

    #[test]
    fn unsupported_systems() {
        assert!(RootSystem::build(Family::G, 3).is_err());
        assert!(RootSystem::build(Family::BC, 2).is_err());
        assert!(RootSystem::build(Family::B, 1).is_err());
        assert!(RootSystem::build(Family::A, 0).is_err());
    }

    #[test]
    fn a1_pairing_in_coweight_basis() {
        let rs = RootSystem::build(Family::A, 1).unwrap();
        assert_eq!(rs.cartan_pairings(), vec![vec![1]]);
    }

    #[test]
    fn i0_examples() {
        let a1 = GroupProfile::split(Family::A, 1, 3, 1, 1).unwrap();
        assert_eq!(i0(&a1), 1);
        let a2 = GroupProfile::split(Family::A, 2, 3, 1, 2).unwrap();
        assert_eq!(i0(&a2), 6);
        let g2 = GroupProfile::split(Family::G, 2, 5, 1, 1).unwrap();
        assert_eq!(i0(&g2), 6);
    }

    #[test]
    fn top_dimension_matches_group_dimension() {
        let cases = [
            (Family::A, 1, 3),
            (Family::A, 2, 8),
            (Family::C, 2, 10),
            (Family::G, 2, 14),
        ];
        for (family, rank, dim) in cases {
            let prof = GroupProfile::split(family, rank, 3, 1, 1).unwrap();
            assert_eq!(top_dimension(&prof), dim);
            assert_eq!(
                top_dimension(&prof) - i0(&prof) - prof.center_dim_qp(),
                i0(&prof)
            );
        }
    }

    #[test]
    fn bc1_dimensions_sum_both_root_groups() {
        let mut delta = BTreeMap::new();
        delta.insert("1".to_string(), 2);
        delta.insert("2".to_string(), 1);
        let prof = GroupProfile::new(RootSystem::build(Family::BC, 1).unwrap(), 3, 1, 2, delta, 1)
            .unwrap();
        assert_eq!(i0(&prof), 6);
        assert_eq!(top_dimension(&prof), 14);
    }

    #[test]
    fn deep_dominant() {
        let a1 = GroupProfile::split(Family::A, 1, 3, 1, 1).unwrap();
        assert_eq!(find_deep_dominant(&a1, 0), Cocharacter(vec![0]));
        let mu = find_deep_dominant(&a1, 4);
        assert_eq!(mu.pairing(&Root(vec![1])), 4);
        let g2 = GroupProfile::split(Family::G, 2, 3, 1, 1).unwrap();
        let mu = find_deep_dominant(&g2, 3);
        assert_eq!(mu, Cocharacter(vec![3, 3]));
        assert!(g2
            .roots()
            .positive_roots()
            .iter()
            .all(|a| mu.pairing(a) >= 3));
        // minimal: one step less fails
        let smaller = Cocharacter(vec![2, 2]);
        assert!(g2
            .roots()
            .positive_roots()
            .iter()
            .any(|a| smaller.pairing(a) < 3));
    }

    #[test]
    fn dominant_enumeration() {
        let a1 = GroupProfile::split(Family::A, 1, 3, 1, 1).unwrap();
        assert_eq!(enumerate_dominant(&a1, 0), vec![Cocharacter(vec![0])]);
        assert_eq!(
            enumerate_dominant(&a1, 2),
            vec![
                Cocharacter(vec![0]),
                Cocharacter(vec![1]),
                Cocharacter(vec![2])
            ]
        );
        let a2 = GroupProfile::split(Family::A, 2, 3, 1, 1).unwrap();
        assert_eq!(enumerate_dominant(&a2, 1).len(), 4);
    }

    #[test]
    fn profile_json() {
        let prof = GroupProfile::from_json(
            r#"{"family": "A", "rank": 1, "p": 3, "e": 1, "f": 1, "delta": {}, "torus_rank": 1}"#,
        )
        .unwrap();
        assert_eq!(i0(&prof), 1);
        assert!(
            GroupProfile::from_json(r#"{"family": "A", "rank": 1, "p": 4, "e": 1, "f": 1}"#)
                .is_err()
        );
        assert!(GroupProfile::from_json(
            r#"{"family": "A", "rank": 1, "p": 3, "e": 1, "f": 1, "delta": {"2": 1}}"#
        )
        .is_err());
        let back = serde_json::to_string(&prof.spec()).unwrap();
        assert_eq!(GroupProfile::from_json(&back).unwrap(), prof);
    }

    #[test]
    fn admissibility() {
        let p2 = GroupProfile::split(Family::A, 1, 2, 2, 1).unwrap();
        assert!(!p2.is_admissible_level(2));
        assert!(p2.is_admissible_level(4));
        assert!(!p2.is_admissible_level(3));
        let p3 = GroupProfile::split(Family::A, 1, 3, 2, 1).unwrap();
        assert!(p3.is_admissible_level(2));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn pairing_is_linear(a in proptest::collection::vec(-9i64..9, 2), b in proptest::collection::vec(-9i64..9, 2)) {
                let g2 = RootSystem::build(Family::G, 2).unwrap();
                let (mu, nu) = (Cocharacter(a), Cocharacter(b));
                for root in g2.roots() {
                    prop_assert_eq!(mu.add(&nu).pairing(&root), mu.pairing(&root) + nu.pairing(&root));
                }
            }

            #[test]
            fn deep_dominant_clears_threshold(t in 0u64..40) {
                for (family, rank) in [(Family::A, 2), (Family::C, 2), (Family::G, 2), (Family::BC, 1)] {
                    let prof = GroupProfile::split(family, rank, 3, 1, 1).unwrap();
                    let mu = find_deep_dominant(&prof, t);
                    prop_assert!(mu.is_dominant(prof.roots()));
                    for a in prof.roots().positive_roots() {
                        prop_assert!(mu.pairing(a) >= t as i64);
                    }
                }
            }
        }
    }
}
