//! Restriction maps `res^i_{n,n′}(z)` between the cohomologies of
//! `K_m ∩ z·K_n·z⁻¹` and `K_m ∩ z·K_{n′}·z⁻¹`, evaluated block by block.
//!
//! On `H¹` each factor contributes the dual of the Frattini map of a lattice
//! inclusion `π^{t}𝔒^δ ⊆ π^{s}𝔒^δ`, of rank `δ·f·clamp(s + e − t, 0, e)`.
//! A block `⊗ Λ^{index}` then maps with rank `∏ C(rank, index)`, so it
//! survives exactly when every index is at most its factor rank.
//!
//! Only dominant `z` are ever evaluated; every other double coset reduces to
//! one of these through the Cartan decomposition.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::cohomology::{exterior_power_rank, factor_dims_qp, Block};
use crate::error::{Error, Result};
use crate::filtration::{intersection_shape, p_power, Factor, FiltrationShape};
use crate::rootdata::{
    enumerate_dominant, find_deep_dominant, i0, top_dimension, Cocharacter, GroupProfile, Root,
};

/// Default number of levels `n, n+e, n+2e, …` in a witness ladder.
pub const DEFAULT_LADDER: usize = 3;

/// Default coordinate bound for sampled dominant cocharacters.
pub const DEFAULT_BOX: u64 = 4;

/// Factor name for reports.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FactorLabel {
    Negative(Root),
    Center,
    Positive(Root),
}

impl FactorLabel {
    pub fn of(profile: &GroupProfile, factor: Factor) -> FactorLabel {
        let roots = profile.roots();
        match factor {
            Factor::Negative(i) => FactorLabel::Negative(roots.reduced_negative()[i].clone()),
            Factor::Center => FactorLabel::Center,
            Factor::Positive(i) => FactorLabel::Positive(roots.reduced_positive()[i].clone()),
        }
    }
}

impl Serialize for FactorLabel {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            FactorLabel::Center => s.serialize_str("center"),
            FactorLabel::Negative(r) | FactorLabel::Positive(r) => {
                s.serialize_str(&format!("[{}]", r.label()))
            }
        }
    }
}

/// Rank of `H¹` restriction along `π^{tgt}𝔒^δ ⊆ π^{src}𝔒^δ`.
pub fn factor_rank(
    level_src: i64,
    level_tgt: i64,
    factor_dim_f: u64,
    e: u64,
    f: u64,
) -> Result<u64> {
    if level_tgt < level_src {
        return Err(Error::LevelOrder {
            source_level: level_src,
            target: level_tgt,
        });
    }
    let overlap = (level_src + e as i64 - level_tgt).clamp(0, e as i64) as u64;
    Ok(factor_dim_f * f * overlap)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TransitionQuery {
    pub m: i64,
    pub n: i64,
    pub n_prime: i64,
    pub z: Cocharacter,
    pub i: u64,
    /// All levels admissible; false for exploratory queries.
    pub admissible_levels: bool,
}

impl TransitionQuery {
    /// Admissible `m ≤ n ≤ n′` and dominant `z`.
    pub fn new(
        profile: &GroupProfile,
        m: i64,
        n: i64,
        n_prime: i64,
        z: Cocharacter,
        i: u64,
    ) -> Result<Self> {
        for level in [m, n, n_prime] {
            profile.check_level(level)?;
        }
        let q = Self::exploratory(profile, m, n, n_prime, z, i)?;
        debug_assert!(q.admissible_levels);
        Ok(q)
    }

    /// Any positive levels with `m ≤ n ≤ n′`; levels outside `eℕ` are flagged.
    pub fn exploratory(
        profile: &GroupProfile,
        m: i64,
        n: i64,
        n_prime: i64,
        z: Cocharacter,
        i: u64,
    ) -> Result<Self> {
        if m < 1 || !(m <= n && n <= n_prime) {
            return Err(Error::InvalidQuery(format!(
                "need 1 ≤ m ≤ n ≤ n′, got ({m}, {n}, {n_prime})"
            )));
        }
        if z.0.len() != profile.torus_rank() || !z.is_dominant(profile.roots()) {
            return Err(Error::InvalidQuery(format!(
                "cocharacter {:?} is not dominant",
                z.0
            )));
        }
        let admissible_levels = [m, n, n_prime]
            .iter()
            .all(|&l| profile.is_admissible_level(l));
        Ok(TransitionQuery {
            m,
            n,
            n_prime,
            z,
            i,
            admissible_levels,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BlockFate {
    pub block: Block,
    /// Levels of `K_m ∩ z·K_n·z⁻¹`, factor order `Φ_red⁻`, center, `Φ_red⁺`.
    pub source_levels: Vec<i64>,
    pub target_levels: Vec<i64>,
    /// `H¹` rank per factor.
    pub factor_ranks: Vec<u64>,
    /// `C(factor_rank, index)` per factor.
    pub exterior_ranks: Vec<u128>,
    pub survives: bool,
    pub admissible_levels: bool,
}

/// Source and target shapes of a query with the `H¹` rank of every factor.
#[derive(Debug, Clone)]
pub struct TransitionRanks {
    pub source: FiltrationShape,
    pub target: FiltrationShape,
    pub factor_ranks: Vec<u64>,
}

impl TransitionRanks {
    /// Whether every index of `block` is within its factor rank.
    pub fn survives(&self, block: &Block) -> bool {
        let flat = block.a.iter().chain([&block.b]).chain(&block.c);
        flat.zip(&self.factor_ranks)
            .all(|(&idx, &rank)| idx <= rank)
    }
}

pub fn transition_ranks(
    profile: &Arc<GroupProfile>,
    q: &TransitionQuery,
) -> Result<TransitionRanks> {
    let source = intersection_shape(profile, q.m, q.n, &q.z)?;
    let target = intersection_shape(profile, q.m, q.n_prime, &q.z)?;
    let (e, f) = (profile.e(), profile.f());
    let factor_ranks = source
        .factors()
        .into_iter()
        .map(|factor| {
            factor_rank(
                source.level(factor),
                target.level(factor),
                source.factor_dim_f(factor),
                e,
                f,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TransitionRanks {
        source,
        target,
        factor_ranks,
    })
}

/// Image of one block under `res^i_{n,n′}(z)`.
pub fn block_fate(
    profile: &Arc<GroupProfile>,
    q: &TransitionQuery,
    block: &Block,
) -> Result<BlockFate> {
    block.validate(profile)?;
    if block.degree() != q.i {
        return Err(Error::InvalidQuery(format!(
            "block degree {} differs from query degree {}",
            block.degree(),
            q.i
        )));
    }
    let ranks = transition_ranks(profile, q)?;
    let factor_ranks = ranks.factor_ranks.clone();
    let exterior_ranks: Vec<u128> = ranks
        .source
        .factors()
        .into_iter()
        .zip(&factor_ranks)
        .map(|(factor, &rank)| exterior_power_rank(rank, block.index(factor)))
        .collect();
    let (src, tgt) = (ranks.source, ranks.target);
    let survives = exterior_ranks.iter().all(|&r| r > 0);
    Ok(BlockFate {
        block: block.clone(),
        source_levels: src.levels(),
        target_levels: tgt.levels(),
        factor_ranks,
        exterior_ranks,
        survives,
        admissible_levels: q.admissible_levels,
    })
}

/// A block class killed independently of `z`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct KilledClass {
    /// `"b>0"` or `"c>0"`.
    pub class: &'static str,
    pub factor: FactorLabel,
    /// `target − source` on the killing factor, the same for every dominant `z`.
    pub level_gap: i64,
    pub factor_rank: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct KillCertificate {
    pub degree: u64,
    /// True when there are no blocks at all (`i > d`).
    pub vacuous: bool,
    /// Largest degree a block supported on `Φ_red⁻` alone can have.
    pub negative_only_capacity: u64,
    pub classes: Vec<KilledClass>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Witness {
    pub n: i64,
    pub n_prime: i64,
    pub z: Cocharacter,
    pub block: Block,
    pub survives: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ResVerdict {
    /// `res^i_{n,n′}(g) = 0` for every `g`.
    Zero(KillCertificate),
    /// Some `z` carries a surviving block.
    Nonzero(Witness),
}

impl ResVerdict {
    pub fn is_zero(&self) -> bool {
        matches!(self, ResVerdict::Zero(_))
    }
}

fn check_ladder(profile: &GroupProfile, m: i64, n: i64, n_prime: i64) -> Result<()> {
    for level in [m, n, n_prime] {
        profile.check_level(level)?;
    }
    if !(m <= n && n <= n_prime) {
        return Err(Error::InvalidQuery(format!(
            "need m ≤ n ≤ n′, got ({m}, {n}, {n_prime})"
        )));
    }
    Ok(())
}

/// Decides whether degree-`i` restriction from level `n` to `n′` vanishes
/// for every dominant `z`, without enumerating `z`.
///
/// Blocks with `b > 0` die on the center, blocks with some `c_α > 0` die on
/// `Ũ_α` (both factors deepen by the full gap for every dominant `z`). Blocks
/// supported on `Φ_red⁻` exist only up to degree `i₀` and survive for deep `z`.
pub fn res_is_zero_for_all_z(
    profile: &Arc<GroupProfile>,
    i: u64,
    m: i64,
    n: i64,
    n_prime: i64,
) -> Result<ResVerdict> {
    check_ladder(profile, m, n, n_prime)?;
    let e = profile.e();
    let gap = n_prime - n;
    if gap < e as i64 {
        return Err(Error::GapBelowPowerStep { gap, e });
    }
    let dims = factor_dims_qp(profile);
    let roots = profile.roots();
    let n_neg = roots.reduced_negative().len();
    let negative_only_capacity: u64 = dims[..n_neg].iter().sum();
    let d: u64 = dims.iter().sum();
    if i > d {
        return Ok(ResVerdict::Zero(KillCertificate {
            degree: i,
            vacuous: true,
            negative_only_capacity,
            classes: Vec::new(),
        }));
    }
    if i <= negative_only_capacity {
        let witness = nonvanishing_witness(profile, i, m, n, n_prime)?
            .ok_or_else(|| Error::InvalidQuery(format!("no witness constructed in degree {i}")))?;
        return Ok(ResVerdict::Nonzero(witness));
    }

    // i > capacity ≥ 0, so every block has b > 0 or some c_α > 0.
    let (f, mut classes) = (profile.f(), Vec::new());
    if dims[n_neg] > 0 {
        // center: max(m, n) = n → max(m, n′) = n′
        let rank = factor_rank(n, n_prime, profile.torus_rank() as u64, e, f)?;
        classes.push(KilledClass {
            class: "b>0",
            factor: FactorLabel::Center,
            level_gap: gap,
            factor_rank: rank,
        });
    }
    for (k, root) in roots.reduced_positive().iter().enumerate() {
        if dims[n_neg + 1 + k] == 0 {
            continue;
        }
        // n + ⟨μ,α⟩ ≥ m for dominant μ, so both levels shift by ⟨μ,α⟩
        let rank = factor_rank(n, n_prime, profile.factor_dim_f(root), e, f)?;
        classes.push(KilledClass {
            class: "c>0",
            factor: FactorLabel::Positive(root.clone()),
            level_gap: gap,
            factor_rank: rank,
        });
    }
    if classes.iter().any(|c| c.factor_rank != 0) {
        return Err(Error::InvalidQuery(format!(
            "degree {i}: a block class is not killed at gap {gap}"
        )));
    }
    Ok(ResVerdict::Zero(KillCertificate {
        degree: i,
        vacuous: false,
        negative_only_capacity,
        classes,
    }))
}

/// Greedy block `a_{α_1} = dim, …, a_{α_{q+1}} = remainder` along the listing
/// of `Φ_red⁻`; `None` when `i` exceeds their total dimension.
pub fn greedy_negative_block(profile: &GroupProfile, i: u64) -> Option<Block> {
    let mut block = Block::empty(profile);
    let mut left = i;
    for (slot, root) in block.a.iter_mut().zip(profile.roots().reduced_negative()) {
        let take = left.min(profile.root_dim_qp(root));
        *slot = take;
        left -= take;
    }
    (left == 0).then_some(block)
}

/// For `i ≤ i₀`: a dominant `z` deep enough that the greedy block sits at
/// level `m` on both sides, together with that block.
pub fn nonvanishing_witness(
    profile: &Arc<GroupProfile>,
    i: u64,
    m: i64,
    n: i64,
    n_prime: i64,
) -> Result<Option<Witness>> {
    check_ladder(profile, m, n, n_prime)?;
    let Some(block) = greedy_negative_block(profile, i) else {
        return Ok(None);
    };
    let z = find_deep_dominant(profile, (n_prime - m) as u64);
    let q = TransitionQuery::new(profile, m, n, n_prime, z.clone(), i)?;
    let fate = block_fate(profile, &q, &block)?;
    Ok(Some(Witness {
        n,
        n_prime,
        z,
        block,
        survives: fate.survives,
    }))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TableEntry {
    pub i: u64,
    pub nonvanishing: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
    /// One witness per rung `n′ = n + k·e` of the ladder.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub ladder: Vec<Witness>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub certificate: Option<KillCertificate>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VanishingTable {
    pub profile: crate::rootdata::ProfileSpec,
    pub m: i64,
    pub i0: u64,
    pub d: u64,
    /// Every rung of the ladder gave the same verdict and every witness survives.
    pub consistent: bool,
    pub table: Vec<TableEntry>,
}

impl VanishingTable {
    pub fn nonvanishing(&self) -> Vec<bool> {
        self.table.iter().map(|e| e.nonvanishing).collect()
    }
}

/// Nonvanishing of `R^i Ind_{K_m}^G(k)` for `i = 0..=d+1`, with `n = m`.
pub fn vanishing_table(profile: &Arc<GroupProfile>, m: i64) -> Result<VanishingTable> {
    vanishing_table_with_ladder(profile, m, DEFAULT_LADDER)
}

pub fn vanishing_table_with_ladder(
    profile: &Arc<GroupProfile>,
    m: i64,
    ladder: usize,
) -> Result<VanishingTable> {
    profile.check_level(m)?;
    if ladder < 2 {
        return Err(Error::InvalidQuery(format!(
            "ladder needs at least 2 levels, got {ladder}"
        )));
    }
    let e = profile.e() as i64;
    let n = m;
    let d = top_dimension(profile);
    let rows: Vec<Result<(TableEntry, bool)>> = (0..=d + 1)
        .into_par_iter()
        .map(|i| {
            let verdicts = (1..ladder as i64)
                .map(|k| res_is_zero_for_all_z(profile, i, m, n, n + k * e))
                .collect::<Result<Vec<_>>>()?;
            let zero = verdicts[0].is_zero();
            let mut consistent = verdicts.iter().all(|v| v.is_zero() == zero);
            let mut entry = TableEntry {
                i,
                nonvanishing: !zero,
                witness: None,
                ladder: Vec::new(),
                certificate: None,
            };
            for v in verdicts {
                match v {
                    ResVerdict::Nonzero(w) => {
                        consistent &= w.survives;
                        entry.ladder.push(w);
                    }
                    ResVerdict::Zero(cert) => {
                        entry.certificate.get_or_insert(cert);
                    }
                }
            }
            entry.witness = entry.ladder.first().cloned();
            Ok((entry, consistent))
        })
        .collect();
    let mut table = Vec::with_capacity(rows.len());
    let mut consistent = true;
    for row in rows {
        let (entry, ok) = row?;
        consistent &= ok;
        table.push(entry);
    }
    Ok(VanishingTable {
        profile: profile.spec(),
        m,
        i0: i0(profile),
        d,
        consistent,
        table,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ExtEntry {
    pub ext_degree: u64,
    /// `Ext^i(ind_{K_m}^G k, k) ≠ 0`.
    pub ext_nonzero: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub certificate: Option<KillCertificate>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExtTable {
    pub profile: crate::rootdata::ProfileSpec,
    pub m: i64,
    pub i0: u64,
    pub d: u64,
    pub table: Vec<ExtEntry>,
}

impl From<VanishingTable> for ExtTable {
    fn from(t: VanishingTable) -> ExtTable {
        ExtTable {
            profile: t.profile,
            m: t.m,
            i0: t.i0,
            d: t.d,
            table: t
                .table
                .into_iter()
                .map(|e| ExtEntry {
                    ext_degree: e.i,
                    ext_nonzero: e.nonvanishing,
                    witness: e.witness,
                    certificate: e.certificate,
                })
                .collect(),
        }
    }
}

/// Degrees of the smooth-dual `Ext^i(ind_{K_m}^G k, k)`; the derived
/// induction table under the degeneration isomorphism.
pub fn ext_table(profile: &Arc<GroupProfile>, m: i64) -> Result<ExtTable> {
    vanishing_table(profile, m).map(ExtTable::from)
}

fn sample_cocharacters(profile: &GroupProfile, box_bound: u64) -> Vec<Cocharacter> {
    let mut zs = enumerate_dominant(profile, box_bound);
    for t in [box_bound + 1, 2 * box_bound + 3, 10 * box_bound + 7] {
        let z = find_deep_dominant(profile, t);
        if !zs.contains(&z) {
            zs.push(z);
        }
    }
    zs
}

/// Whether the diagonal transition `H^i(K_n ∩ zK_nz⁻¹) → H^i(K_{n+e} ∩ zK_{n+e}z⁻¹)`
/// vanishes for every dominant `z`.
pub fn diagonal_vanishing(profile: &Arc<GroupProfile>, i: u64, n: i64) -> Result<bool> {
    diagonal_vanishing_with_box(profile, i, n, DEFAULT_BOX)
}

/// The identity `(K_n ∩ zK_nz⁻¹)^p = K_{n+e} ∩ zK_{n+e}z⁻¹` holds factor by
/// factor (`max(x, y) + e = max(x + e, y + e)`) for every `z`; it is checked
/// on the dominant box plus a few deep cocharacters. Each factor then maps
/// with `H¹` rank 0, so any block with a positive index dies.
pub fn diagonal_vanishing_with_box(
    profile: &Arc<GroupProfile>,
    i: u64,
    n: i64,
    box_bound: u64,
) -> Result<bool> {
    profile.check_level(n)?;
    if i == 0 {
        return Ok(false);
    }
    let e = profile.e() as i64;
    let (ee, f) = (profile.e(), profile.f());
    for z in sample_cocharacters(profile, box_bound) {
        let src = intersection_shape(profile, n, n, &z)?;
        let tgt = intersection_shape(profile, n + e, n + e, &z)?;
        if p_power(&src)? != tgt {
            return Ok(false);
        }
        for factor in src.factors() {
            if factor_rank(
                src.level(factor),
                tgt.level(factor),
                src.factor_dim_f(factor),
                ee,
                f,
            )? != 0
            {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StrictInclusion {
    pub holds: bool,
    /// A factor that is strictly deeper at `n′` for every dominant `z`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub factor: Option<FactorLabel>,
    pub sampled_cocharacters: usize,
}

/// Whether `K_m ∩ zK_{n′}z⁻¹ ⊊ K_m ∩ zK_nz⁻¹` for every dominant `z`.
///
/// The center factor goes from `Z_n` to `Z_{n′}` independently of `z`, and so
/// does every positive root factor; either one certifies strictness when it
/// has positive dimension. Sampled `z` double-check the certificate.
pub fn strict_inclusion_check(
    profile: &Arc<GroupProfile>,
    m: i64,
    n: i64,
    n_prime: i64,
) -> Result<StrictInclusion> {
    check_ladder(profile, m, n, n_prime)?;
    if n_prime == n {
        return Err(Error::InvalidQuery("strict inclusion needs n < n′".into()));
    }
    let dims = factor_dims_qp(profile);
    let n_neg = profile.roots().reduced_negative().len();
    let candidates: Vec<Factor> = std::iter::once(Factor::Center)
        .chain((0..profile.roots().reduced_positive().len()).map(Factor::Positive))
        .filter(|&f| match f {
            Factor::Center => dims[n_neg] > 0,
            Factor::Positive(k) => dims[n_neg + 1 + k] > 0,
            Factor::Negative(_) => false,
        })
        .collect();
    let zs = sample_cocharacters(profile, DEFAULT_BOX);
    let mut certified = None;
    for factor in candidates {
        let mut all = true;
        for z in &zs {
            let src = intersection_shape(profile, m, n, z)?;
            let tgt = intersection_shape(profile, m, n_prime, z)?;
            if tgt.level(factor) <= src.level(factor) {
                all = false;
                break;
            }
        }
        if all {
            certified = Some(factor);
            break;
        }
    }
    Ok(StrictInclusion {
        holds: certified.is_some(),
        factor: certified.map(|f| FactorLabel::of(profile, f)),
        sampled_cocharacters: zs.len(),
    })
}
