//! Graded dimensions of `H*(U, k) = Λ H¹(U, k)` for the uniform groups cut
//! out by filtration shapes, and the tensor-of-wedges block decomposition.

use serde::{Deserialize, Serialize};

use crate::arith::binomial;
use crate::error::{Error, Result};
use crate::filtration::{frattini_dims, Factor, FiltrationShape};
use crate::rootdata::GroupProfile;

/// Index `({a_α}, b, {c_α})` of one summand
/// `⊗ Λ^{a_α} ⊗ Λ^b ⊗ ⊗ Λ^{c_α}` of the degree-`Σ` cohomology.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Block {
    pub a: Vec<u64>,
    pub b: u64,
    pub c: Vec<u64>,
}

impl Block {
    pub fn empty(profile: &GroupProfile) -> Block {
        let roots = profile.roots();
        Block {
            a: vec![0; roots.reduced_negative().len()],
            b: 0,
            c: vec![0; roots.reduced_positive().len()],
        }
    }

    pub fn degree(&self) -> u64 {
        self.a.iter().sum::<u64>() + self.b + self.c.iter().sum::<u64>()
    }

    pub fn index(&self, factor: Factor) -> u64 {
        match factor {
            Factor::Negative(i) => self.a[i],
            Factor::Center => self.b,
            Factor::Positive(i) => self.c[i],
        }
    }

    fn from_flat(flat: &[u64], n_neg: usize) -> Block {
        Block {
            a: flat[..n_neg].to_vec(),
            b: flat[n_neg],
            c: flat[n_neg + 1..].to_vec(),
        }
    }

    /// Checks shape against the profile and every index against its factor dimension.
    pub fn validate(&self, profile: &GroupProfile) -> Result<()> {
        let roots = profile.roots();
        if self.a.len() != roots.reduced_negative().len()
            || self.c.len() != roots.reduced_positive().len()
        {
            return Err(Error::BlockOutOfRange(
                "block length does not match the root system".into(),
            ));
        }
        let dims = factor_dims_qp(profile);
        let flat: Vec<u64> = self
            .a
            .iter()
            .chain([&self.b])
            .chain(&self.c)
            .copied()
            .collect();
        for (k, (idx, dim)) in flat.iter().zip(&dims).enumerate() {
            if idx > dim {
                return Err(Error::BlockOutOfRange(format!(
                    "factor {k}: index {idx} > dimension {dim}"
                )));
            }
        }
        Ok(())
    }
}

/// `ℚ_p`-dimensions of the factors in serialization order (`Φ_red⁻`, center,
/// `Φ_red⁺`); these are the Frattini ranks of every admissible shape.
pub fn factor_dims_qp(profile: &GroupProfile) -> Vec<u64> {
    let roots = profile.roots();
    let mut dims: Vec<u64> = roots
        .reduced_negative()
        .iter()
        .map(|r| profile.root_dim_qp(r))
        .collect();
    dims.push(profile.center_dim_qp());
    dims.extend(
        roots
            .reduced_positive()
            .iter()
            .map(|r| profile.root_dim_qp(r)),
    );
    dims
}

/// Graded dimensions `dims[i] = dim_k H^i`, for `i = 0..=d`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GradedDims(pub Vec<u128>);

impl GradedDims {
    pub fn top_degree(&self) -> usize {
        self.0.len() - 1
    }

    pub fn total(&self) -> u128 {
        self.0.iter().sum()
    }
}

/// Coefficients of `∏ (1 + x)^{dim}` over the factors of `shape`.
pub fn cohomology_dims(shape: &FiltrationShape) -> Result<GradedDims> {
    let dims = frattini_dims(shape)?;
    let d: u64 = dims.iter().sum();
    if d > 127 {
        return Err(Error::CapExceeded(format!(
            "dimension {d} overflows 128-bit counts"
        )));
    }
    let mut poly: Vec<u128> = vec![1];
    for dim in dims {
        for _ in 0..dim {
            let mut next = vec![0u128; poly.len() + 1];
            for (i, &c) in poly.iter().enumerate() {
                next[i] += c;
                next[i + 1] += c;
            }
            poly = next;
        }
    }
    Ok(GradedDims(poly))
}

/// Rank of `Λ^a` of a linear map of rank `r`: `C(r, a)`.
pub fn exterior_power_rank(r: u64, a: u64) -> u128 {
    binomial(r, a)
}

/// Number of cohomology classes a block contributes: `∏ C(dim, index)`.
pub fn block_multiplicity(profile: &GroupProfile, block: &Block) -> u128 {
    let dims = factor_dims_qp(profile);
    block
        .a
        .iter()
        .chain([&block.b])
        .chain(&block.c)
        .zip(dims)
        .map(|(&idx, dim)| binomial(dim, idx))
        .product()
}

/// Lazy enumeration of all blocks of a fixed degree in lexicographic order.
#[derive(Debug, Clone)]
pub struct BlocksOfDegree {
    caps: Vec<u64>,
    current: Option<Vec<u64>>,
    n_neg: usize,
}

impl BlocksOfDegree {
    /// Puts `total` into `slots` as far right as the caps allow.
    fn fill_right(slots: &mut [u64], caps: &[u64], mut total: u64) -> bool {
        for (slot, &cap) in slots.iter_mut().zip(caps).rev() {
            let take = total.min(cap);
            *slot = take;
            total -= take;
        }
        total == 0
    }

    fn advance(&mut self) {
        let Some(cur) = self.current.as_mut() else {
            return;
        };
        let k = cur.len();
        let mut suffix = 0;
        for j in (0..k.saturating_sub(1)).rev() {
            suffix += cur[j + 1];
            if cur[j] < self.caps[j] && suffix >= 1 {
                cur[j] += 1;
                Self::fill_right(&mut cur[j + 1..], &self.caps[j + 1..], suffix - 1);
                return;
            }
        }
        self.current = None;
    }
}

impl Iterator for BlocksOfDegree {
    type Item = Block;

    fn next(&mut self) -> Option<Block> {
        let block = Block::from_flat(self.current.as_ref()?, self.n_neg);
        self.advance();
        Some(block)
    }
}

/// Every block of degree `i` with indices within the factor dimensions, each once.
pub fn blocks_of_degree(profile: &GroupProfile, i: u64) -> Result<BlocksOfDegree> {
    let caps = factor_dims_qp(profile);
    let d: u64 = caps.iter().sum();
    if i > d {
        return Err(Error::DegreeOutOfRange {
            degree: i as usize,
            max: d as usize,
        });
    }
    let mut first = vec![0; caps.len()];
    let ok = BlocksOfDegree::fill_right(&mut first, &caps, i);
    debug_assert!(ok);
    Ok(BlocksOfDegree {
        n_neg: profile.roots().reduced_negative().len(),
        caps,
        current: Some(first),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filtration::congruence_shape;
    use crate::rootdata::{top_dimension, Family, RootSystem};
    use std::collections::{BTreeMap, HashSet};

    fn prof(family: Family, rank: usize, e: u64, f: u64) -> GroupProfile {
        GroupProfile::split(family, rank, 3, e, f).unwrap()
    }

    #[test]
    fn dims_examples() {
        let a1 = prof(Family::A, 1, 1, 1).into_shared();
        let dims = cohomology_dims(&congruence_shape(&a1, 1).unwrap()).unwrap();
        assert_eq!(dims.0, vec![1, 3, 3, 1]);
        let a2 = prof(Family::A, 2, 1, 1).into_shared();
        let dims = cohomology_dims(&congruence_shape(&a2, 1).unwrap()).unwrap();
        assert_eq!(dims.0, vec![1, 8, 28, 56, 70, 56, 28, 8, 1]);
        assert_eq!(dims.total(), 256);
    }

    #[test]
    fn trivial_group_has_one_class() {
        let trivial = GroupProfile::new(
            RootSystem::build(Family::T, 0).unwrap(),
            3,
            1,
            1,
            BTreeMap::new(),
            0,
        )
        .unwrap()
        .into_shared();
        let dims = cohomology_dims(&congruence_shape(&trivial, 1).unwrap()).unwrap();
        assert_eq!(dims.0, vec![1]);
        let blocks: Vec<_> = blocks_of_degree(&trivial, 0).unwrap().collect();
        assert_eq!(blocks.len(), 1);
    }

    #[test]
    fn non_uniform_center_rejected() {
        let p = GroupProfile::split(Family::A, 1, 2, 1, 1)
            .unwrap()
            .into_shared();
        assert!(cohomology_dims(&congruence_shape(&p, 1).unwrap()).is_err());
    }

    #[test]
    fn block_examples() {
        let a1 = prof(Family::A, 1, 1, 1);
        let zero: Vec<_> = blocks_of_degree(&a1, 0).unwrap().collect();
        assert_eq!(zero, vec![Block::empty(&a1)]);
        let one: Vec<_> = blocks_of_degree(&a1, 1).unwrap().collect();
        assert_eq!(
            one,
            vec![
                Block {
                    a: vec![0],
                    b: 0,
                    c: vec![1]
                },
                Block {
                    a: vec![0],
                    b: 1,
                    c: vec![0]
                },
                Block {
                    a: vec![1],
                    b: 0,
                    c: vec![0]
                },
            ]
        );
        assert!(blocks_of_degree(&a1, 4).is_err());
    }

    #[test]
    fn blocks_are_distinct_and_weighted_count_matches() {
        for (family, rank) in [
            (Family::A, 1),
            (Family::A, 2),
            (Family::C, 2),
            (Family::G, 2),
        ] {
            for (e, f) in [(1, 1), (1, 2), (2, 1)] {
                let p = prof(family, rank, e, f);
                if top_dimension(&p) > 20 {
                    continue;
                }
                let shared = p.clone().into_shared();
                let dims =
                    cohomology_dims(&congruence_shape(&shared, 2 * e as i64).unwrap()).unwrap();
                for i in 0..=top_dimension(&p) {
                    let mut seen = HashSet::new();
                    let mut weighted = 0u128;
                    for block in blocks_of_degree(&p, i).unwrap() {
                        assert_eq!(block.degree(), i);
                        block.validate(&p).unwrap();
                        weighted += block_multiplicity(&p, &block);
                        assert!(seen.insert(block));
                    }
                    assert_eq!(
                        weighted, dims.0[i as usize],
                        "{family}{rank} e={e} f={f} i={i}"
                    );
                }
            }
        }
    }

    #[test]
    fn exterior_ranks() {
        assert_eq!(exterior_power_rank(0, 1), 0);
        assert_eq!(exterior_power_rank(4, 4), 1);
        assert_eq!(exterior_power_rank(3, 2), 3);
        assert_eq!(exterior_power_rank(2, 3), 0);
        assert_eq!(exterior_power_rank(5, 0), 1);
    }

    #[test]
    fn block_validation() {
        let a1 = prof(Family::A, 1, 1, 1);
        assert!(Block {
            a: vec![2],
            b: 0,
            c: vec![0]
        }
        .validate(&a1)
        .is_err());
        assert!(Block {
            a: vec![1, 0],
            b: 0,
            c: vec![0]
        }
        .validate(&a1)
        .is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn dims_are_symmetric_binomials(fi in 0usize..4, e in 1u64..3, f in 1u64..3) {
                let (family, rank) = [(Family::A, 1), (Family::A, 2), (Family::C, 2), (Family::G, 2)][fi];
                let p = prof(family, rank, e, f).into_shared();
                let dims = cohomology_dims(&congruence_shape(&p, 2 * e as i64).unwrap()).unwrap();
                let d = top_dimension(&p);
                prop_assert_eq!(dims.top_degree() as u64, d);
                prop_assert_eq!(dims.total(), 1u128 << d);
                for i in 0..=d as usize {
                    prop_assert_eq!(dims.0[i], dims.0[d as usize - i]);
                    prop_assert_eq!(dims.0[i], binomial(d, i as u64));
                }
            }

            #[test]
            fn exterior_rank_vanishes_iff_degree_exceeds_rank(r in 0u64..12, a in 0u64..12) {
                prop_assert_eq!(exterior_power_rank(r, a) == 0, a > r);
            }
        }
    }
}
