use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::group::{FinAbGroup, GroupElem};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PermError {
    #[error("mapping is not a bijection of 1..{0}")]
    NotBijection(usize),
    #[error("size mismatch: {0} vs {1}")]
    SizeMismatch(usize, usize),
}

/// A bijection of `1..=size`; `image(n)` is the new rank of the atom that had
/// rank `n`. Serialized as the 1-based image list.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct RankPermutation {
    mapping: Vec<usize>,
}

impl TryFrom<Vec<usize>> for RankPermutation {
    type Error = PermError;
    fn try_from(one_based: Vec<usize>) -> Result<Self, PermError> {
        let n = one_based.len();
        let zero_based: Option<Vec<usize>> = one_based.iter().map(|&i| i.checked_sub(1)).collect();
        RankPermutation::from_zero_based(zero_based.ok_or(PermError::NotBijection(n))?)
    }
}

impl From<RankPermutation> for Vec<usize> {
    fn from(p: RankPermutation) -> Self {
        p.mapping.iter().map(|&i| i + 1).collect()
    }
}

impl RankPermutation {
    pub fn identity(size: usize) -> Self {
        RankPermutation { mapping: (0..size).collect() }
    }

    pub fn from_zero_based(mapping: Vec<usize>) -> Result<Self, PermError> {
        let n = mapping.len();
        let mut seen = vec![false; n];
        for &i in &mapping {
            if i >= n || std::mem::replace(&mut seen[i], true) {
                return Err(PermError::NotBijection(n));
            }
        }
        Ok(RankPermutation { mapping })
    }

    pub fn size(&self) -> usize {
        self.mapping.len()
    }

    /// `σ(n)` for 1-based `n`.
    pub fn image(&self, n: usize) -> usize {
        self.mapping[n - 1] + 1
    }

    pub(crate) fn zero_based(&self) -> &[usize] {
        &self.mapping
    }

    pub fn is_identity(&self) -> bool {
        self.mapping.iter().enumerate().all(|(i, &j)| i == j)
    }

    /// Whether `σ(n) = n` for `n = 1..=k`.
    pub fn fixes_prefix(&self, k: usize) -> bool {
        self.mapping.iter().take(k).enumerate().all(|(i, &j)| i == j)
    }

    /// `self ∘ first`: apply `first`, then `self`.
    pub fn after(&self, first: &RankPermutation) -> Result<RankPermutation, PermError> {
        if self.size() != first.size() {
            return Err(PermError::SizeMismatch(self.size(), first.size()));
        }
        Ok(RankPermutation { mapping: first.mapping.iter().map(|&i| self.mapping[i]).collect() })
    }

    pub fn inverse(&self) -> RankPermutation {
        let mut inv = vec![0; self.size()];
        for (i, &j) in self.mapping.iter().enumerate() {
            inv[j] = i;
        }
        RankPermutation { mapping: inv }
    }

    /// The action on sequences: `(κ_n) ↦ (κ_{σ^{-1}(n)})`.
    pub fn act<M: Clone>(&self, marks: &[M]) -> Result<Vec<M>, PermError> {
        if marks.len() != self.size() {
            return Err(PermError::SizeMismatch(self.size(), marks.len()));
        }
        let mut out: Vec<Option<M>> = vec![None; marks.len()];
        for (m, &dest) in self.mapping.iter().enumerate() {
            out[dest] = Some(marks[m].clone());
        }
        Ok(out.into_iter().map(|m| m.expect("bijection")).collect())
    }
}

/// An element `((g_n), σ)` of the semidirect product of `G^n` by the
/// symmetric group, acting by `χ(h)_n = g_{σ^{-1}(n)} + h_{σ^{-1}(n)}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SemidirectElem {
    pub values: Vec<GroupElem>,
    pub perm: RankPermutation,
}

impl SemidirectElem {
    pub fn new(values: Vec<GroupElem>, perm: RankPermutation) -> Result<Self, PermError> {
        if values.len() != perm.size() {
            return Err(PermError::SizeMismatch(perm.size(), values.len()));
        }
        Ok(SemidirectElem { values, perm })
    }

    pub fn identity(group: &FinAbGroup, size: usize) -> Self {
        SemidirectElem { values: vec![group.zero(); size], perm: RankPermutation::identity(size) }
    }

    /// `((h), τ) · ((g), σ) = ((h_{σ(n)} + g_n), τ ∘ σ)` with `self = ((h), τ)`.
    pub fn compose(&self, group: &FinAbGroup, rhs: &SemidirectElem) -> Result<Self, PermError> {
        let perm = self.perm.after(&rhs.perm)?;
        let values = rhs
            .values
            .iter()
            .zip(rhs.perm.zero_based())
            .map(|(g, &s)| group.add(&self.values[s], g))
            .collect();
        Ok(SemidirectElem { values, perm })
    }

    pub fn act(&self, group: &FinAbGroup, marks: &[GroupElem]) -> Result<Vec<GroupElem>, PermError> {
        if marks.len() != self.values.len() {
            return Err(PermError::SizeMismatch(self.values.len(), marks.len()));
        }
        let summed: Vec<GroupElem> = self.values.iter().zip(marks).map(|(g, h)| group.add(g, h)).collect();
        self.perm.act(&summed)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn perm(one_based: &[usize]) -> RankPermutation {
        RankPermutation::try_from(one_based.to_vec()).unwrap()
    }

    #[test]
    fn validation_and_json() {
        assert!(RankPermutation::try_from(vec![1, 1]).is_err());
        assert!(RankPermutation::try_from(vec![0, 1]).is_err());
        assert!(RankPermutation::try_from(vec![3, 1]).is_err());
        let p = perm(&[2, 3, 1]);
        assert_eq!(serde_json::to_string(&p).unwrap(), "[2,3,1]");
        assert_eq!(p.image(3), 1);
        assert!(p.after(&p.inverse()).unwrap().is_identity());
        assert!(!p.fixes_prefix(1));
        assert!(perm(&[1, 3, 2]).fixes_prefix(1));
    }

    #[test]
    fn act_sends_mark_to_new_rank() {
        let p = perm(&[2, 3, 1]);
        assert_eq!(p.act(&['a', 'b', 'c']).unwrap(), vec!['c', 'a', 'b']);
        assert!(RankPermutation::identity(3).act(&[1, 2, 3]).unwrap() == vec![1, 2, 3]);
        assert!(p.act(&[1, 2]).is_err());
    }

    fn arb_perm(n: usize) -> impl Strategy<Value = RankPermutation> {
        Just((0..n).collect::<Vec<usize>>())
            .prop_shuffle()
            .prop_map(|v| RankPermutation::from_zero_based(v).unwrap())
    }

    fn arb_pair(n: usize) -> impl Strategy<Value = (RankPermutation, RankPermutation)> {
        (arb_perm(n), arb_perm(n))
    }

    proptest! {
        #[test]
        fn action_law((s, t) in (1usize..8).prop_flat_map(arb_pair)) {
            let marks: Vec<usize> = (0..s.size()).map(|i| 10 * i).collect();
            let composed = t.after(&s).unwrap().act(&marks).unwrap();
            let stepwise = t.act(&s.act(&marks).unwrap()).unwrap();
            prop_assert_eq!(composed, stepwise);
            // direct index algebra: out[n] = marks[(t∘s)^{-1}(n)]
            let inv = t.after(&s).unwrap().inverse();
            let direct: Vec<usize> = (0..s.size()).map(|n| marks[inv.zero_based()[n]]).collect();
            prop_assert_eq!(t.after(&s).unwrap().act(&marks).unwrap(), direct);
            prop_assert_eq!(s.inverse().act(&s.act(&marks).unwrap()).unwrap(), marks);
        }

        #[test]
        fn semidirect_law((s, t) in (1usize..7).prop_flat_map(arb_pair), seed in any::<u64>()) {
            use rand::SeedableRng;
            let g = FinAbGroup::new(vec![2, 6]).unwrap();
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let n = s.size();
            let mut draw = |n: usize| (0..n).map(|_| g.sample_haar(&mut rng)).collect::<Vec<_>>();
            let a = SemidirectElem::new(draw(n), s).unwrap();
            let b = SemidirectElem::new(draw(n), t).unwrap();
            let h = draw(n);
            let stepwise = b.act(&g, &a.act(&g, &h).unwrap()).unwrap();
            let combined = b.compose(&g, &a).unwrap().act(&g, &h).unwrap();
            prop_assert_eq!(stepwise, combined);
        }
    }
}
