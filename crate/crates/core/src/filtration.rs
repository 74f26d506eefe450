//! Iwahori-factorized congruence subgroups as integer level vectors.
//!
//! A shape records one level per factor of the product
//! `∏_{Φ_red⁻} Ũ_{α,r_α} × Z_r × ∏_{Φ_red⁺} Ũ_{α,r_α}`. Root factors are
//! `𝔒`-lattices `π^r·𝔒^δ` inside a vector group, so their `p`-th powers sit
//! at level `r + e` for every integer `r`. The center factor only has that
//! property at admissible levels.

use std::sync::Arc;

use serde::ser::SerializeSeq;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::rootdata::{Cocharacter, GroupProfile};

/// One factor of the Iwahori factorization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Factor {
    /// Index into `Φ_red⁻`.
    Negative(usize),
    Center,
    /// Index into `Φ_red⁺`.
    Positive(usize),
}

#[derive(Debug, Clone)]
pub struct FiltrationShape {
    profile: Arc<GroupProfile>,
    neg_levels: Vec<i64>,
    center_level: i64,
    pos_levels: Vec<i64>,
}

impl PartialEq for FiltrationShape {
    fn eq(&self, other: &Self) -> bool {
        self.neg_levels == other.neg_levels
            && self.center_level == other.center_level
            && self.pos_levels == other.pos_levels
            && (Arc::ptr_eq(&self.profile, &other.profile) || self.profile == other.profile)
    }
}

impl Eq for FiltrationShape {}

/// Serialized as `[neg levels..., center, pos levels...]`.
impl Serialize for FiltrationShape {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let levels = self.levels();
        let mut seq = serializer.serialize_seq(Some(levels.len()))?;
        for l in levels {
            seq.serialize_element(&l)?;
        }
        seq.end()
    }
}

impl FiltrationShape {
    pub fn from_levels(
        profile: Arc<GroupProfile>,
        neg_levels: Vec<i64>,
        center_level: i64,
        pos_levels: Vec<i64>,
    ) -> Result<FiltrationShape> {
        let roots = profile.roots();
        if neg_levels.len() != roots.reduced_negative().len()
            || pos_levels.len() != roots.reduced_positive().len()
        {
            return Err(Error::InvalidQuery(
                "level vector length does not match the root system".into(),
            ));
        }
        Ok(FiltrationShape {
            profile,
            neg_levels,
            center_level,
            pos_levels,
        })
    }

    pub fn profile(&self) -> &Arc<GroupProfile> {
        &self.profile
    }

    pub fn neg_levels(&self) -> &[i64] {
        &self.neg_levels
    }

    pub fn center_level(&self) -> i64 {
        self.center_level
    }

    pub fn pos_levels(&self) -> &[i64] {
        &self.pos_levels
    }

    /// Factors in serialization order.
    pub fn factors(&self) -> Vec<Factor> {
        let mut out: Vec<Factor> = (0..self.neg_levels.len()).map(Factor::Negative).collect();
        out.push(Factor::Center);
        out.extend((0..self.pos_levels.len()).map(Factor::Positive));
        out
    }

    pub fn level(&self, factor: Factor) -> i64 {
        match factor {
            Factor::Negative(i) => self.neg_levels[i],
            Factor::Center => self.center_level,
            Factor::Positive(i) => self.pos_levels[i],
        }
    }

    /// All levels, `Φ_red⁻` first, then the center, then `Φ_red⁺`.
    pub fn levels(&self) -> Vec<i64> {
        let mut out = self.neg_levels.clone();
        out.push(self.center_level);
        out.extend_from_slice(&self.pos_levels);
        out
    }

    /// 𝔉-dimension of a factor (`δ_α + δ_{2α}` or the torus rank).
    pub fn factor_dim_f(&self, factor: Factor) -> u64 {
        let roots = self.profile.roots();
        match factor {
            Factor::Negative(i) => self.profile.factor_dim_f(&roots.reduced_negative()[i]),
            Factor::Center => self.profile.torus_rank() as u64,
            Factor::Positive(i) => self.profile.factor_dim_f(&roots.reduced_positive()[i]),
        }
    }

    /// Every level lies in `eℕ`, and exceeds `e` when `p = 2`.
    pub fn is_admissible_uniform(&self) -> bool {
        self.levels()
            .into_iter()
            .all(|l| self.profile.is_admissible_level(l))
    }

    fn check_center(&self) -> Result<()> {
        self.profile.check_level(self.center_level)
    }

    fn map_levels(&self, f: impl Fn(Factor, i64) -> i64) -> FiltrationShape {
        FiltrationShape {
            profile: Arc::clone(&self.profile),
            neg_levels: self
                .neg_levels
                .iter()
                .enumerate()
                .map(|(i, &l)| f(Factor::Negative(i), l))
                .collect(),
            center_level: f(Factor::Center, self.center_level),
            pos_levels: self
                .pos_levels
                .iter()
                .enumerate()
                .map(|(i, &l)| f(Factor::Positive(i), l))
                .collect(),
        }
    }
}

/// `K_m`: the constant shape at level `m`.
pub fn congruence_shape(profile: &Arc<GroupProfile>, m: i64) -> Result<FiltrationShape> {
    if m < 1 {
        return Err(Error::InvalidQuery(format!(
            "congruence level must be positive, got {m}"
        )));
    }
    let roots = profile.roots();
    Ok(FiltrationShape {
        profile: Arc::clone(profile),
        neg_levels: vec![m; roots.reduced_negative().len()],
        center_level: m,
        pos_levels: vec![m; roots.reduced_positive().len()],
    })
}

/// `z·H·z⁻¹` for `z = μ(π)`: root level `r ↦ r + ⟨μ, α⟩`, center unchanged.
pub fn conjugate(shape: &FiltrationShape, z: &Cocharacter) -> FiltrationShape {
    let roots = shape.profile.roots();
    shape.map_levels(|factor, level| match factor {
        Factor::Negative(i) => level + z.pairing(&roots.reduced_negative()[i]),
        Factor::Center => level,
        Factor::Positive(i) => level + z.pairing(&roots.reduced_positive()[i]),
    })
}

/// Factor-wise intersection: the deeper level wins.
pub fn intersect(a: &FiltrationShape, b: &FiltrationShape) -> Result<FiltrationShape> {
    if !(Arc::ptr_eq(&a.profile, &b.profile) || a.profile == b.profile) {
        return Err(Error::ProfileMismatch);
    }
    Ok(a.map_levels(|factor, level| level.max(b.level(factor))))
}

/// Subgroup of `p`-th powers: every level moves down by `e`.
///
/// Requires an admissible center level; root levels may be arbitrary.
pub fn p_power(shape: &FiltrationShape) -> Result<FiltrationShape> {
    shape.check_center()?;
    let e = shape.profile.e() as i64;
    Ok(shape.map_levels(|_, level| level + e))
}

/// `𝔽_p`-dimensions of the Frattini quotients of the factors, in
/// serialization order. Level-independent.
pub fn frattini_dims(shape: &FiltrationShape) -> Result<Vec<u64>> {
    shape.check_center()?;
    let deg = shape.profile.degree();
    Ok(shape
        .factors()
        .into_iter()
        .map(|f| shape.factor_dim_f(f) * deg)
        .collect())
}

/// `K_m ∩ z·K_n·z⁻¹`.
pub fn intersection_shape(
    profile: &Arc<GroupProfile>,
    m: i64,
    n: i64,
    z: &Cocharacter,
) -> Result<FiltrationShape> {
    intersect(
        &congruence_shape(profile, m)?,
        &conjugate(&congruence_shape(profile, n)?, z),
    )
}
