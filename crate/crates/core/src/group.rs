//! Finite abelian groups `Z_{d_1} x ... x Z_{d_m}` in additive notation.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GroupError {
    #[error("invariant factors must be >= 1, got {0:?}")]
    NonPositiveFactor(Vec<u64>),
    #[error("invariant factors must divide each other in order, got {0:?}")]
    NotDivisibilityChain(Vec<u64>),
    #[error("element has {got} coordinates, group has {expected}")]
    WrongArity { expected: usize, got: usize },
}

/// `Z_{d_1} x ... x Z_{d_m}` with `d_1 | d_2 | ... | d_m`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<u64>", into = "Vec<u64>")]
pub struct FinAbGroup {
    factors: Vec<u64>,
}

/// Coordinates reduced modulo the invariant factors of their group.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GroupElem(Vec<u64>);

impl GroupElem {
    pub fn coords(&self) -> &[u64] {
        &self.0
    }
}

impl TryFrom<Vec<u64>> for FinAbGroup {
    type Error = GroupError;
    fn try_from(factors: Vec<u64>) -> Result<Self, GroupError> {
        FinAbGroup::new(factors)
    }
}

impl From<FinAbGroup> for Vec<u64> {
    fn from(g: FinAbGroup) -> Self {
        g.factors
    }
}

impl FinAbGroup {
    pub fn new(factors: Vec<u64>) -> Result<Self, GroupError> {
        if factors.contains(&0) {
            return Err(GroupError::NonPositiveFactor(factors));
        }
        if factors.windows(2).any(|w| w[1] % w[0] != 0) {
            return Err(GroupError::NotDivisibilityChain(factors));
        }
        Ok(FinAbGroup { factors })
    }

    pub fn cyclic(d: u64) -> Self {
        FinAbGroup::new(vec![d]).expect("cyclic order must be positive")
    }

    pub fn trivial() -> Self {
        FinAbGroup { factors: Vec::new() }
    }

    pub fn invariant_factors(&self) -> &[u64] {
        &self.factors
    }

    pub fn rank(&self) -> usize {
        self.factors.len()
    }

    pub fn order(&self) -> u64 {
        self.factors.iter().product()
    }

    /// Least common multiple of element orders, i.e. the last factor.
    pub fn exponent(&self) -> u64 {
        self.factors.last().copied().unwrap_or(1)
    }

    pub fn zero(&self) -> GroupElem {
        GroupElem(vec![0; self.rank()])
    }

    /// Builds an element, reducing each coordinate.
    pub fn elem(&self, coords: &[i64]) -> Result<GroupElem, GroupError> {
        if coords.len() != self.rank() {
            return Err(GroupError::WrongArity {
                expected: self.rank(),
                got: coords.len(),
            });
        }
        Ok(GroupElem(
            coords
                .iter()
                .zip(&self.factors)
                .map(|(&c, &d)| c.rem_euclid(d as i64) as u64)
                .collect(),
        ))
    }

    pub fn check(&self, g: &GroupElem) -> Result<(), GroupError> {
        if g.0.len() != self.rank() {
            return Err(GroupError::WrongArity {
                expected: self.rank(),
                got: g.0.len(),
            });
        }
        debug_assert!(g.0.iter().zip(&self.factors).all(|(c, d)| c < d));
        Ok(())
    }

    /// `i`-th standard generator.
    pub fn basis(&self, i: usize) -> GroupElem {
        let mut coords = vec![0; self.rank()];
        coords[i] = 1 % self.factors[i];
        GroupElem(coords)
    }

    pub fn add(&self, a: &GroupElem, b: &GroupElem) -> GroupElem {
        GroupElem(
            a.0.iter()
                .zip(&b.0)
                .zip(&self.factors)
                .map(|((x, y), d)| (x + y) % d)
                .collect(),
        )
    }

    pub fn neg(&self, a: &GroupElem) -> GroupElem {
        GroupElem(
            a.0.iter()
                .zip(&self.factors)
                .map(|(x, d)| (d - x) % d)
                .collect(),
        )
    }

    pub fn sub(&self, a: &GroupElem, b: &GroupElem) -> GroupElem {
        self.add(a, &self.neg(b))
    }

    /// `k a` for any integer `k`.
    pub fn scale(&self, k: i128, a: &GroupElem) -> GroupElem {
        GroupElem(
            a.0.iter()
                .zip(&self.factors)
                .map(|(&x, &d)| (k.rem_euclid(d as i128) * x as i128 % d as i128) as u64)
                .collect(),
        )
    }

    pub fn sum<'a, I: IntoIterator<Item = &'a GroupElem>>(&self, items: I) -> GroupElem {
        items
            .into_iter()
            .fold(self.zero(), |acc, g| self.add(&acc, g))
    }

    pub fn is_zero(&self, a: &GroupElem) -> bool {
        a.0.iter().all(|&c| c == 0)
    }

    /// All elements in lexicographic coordinate order.
    pub fn elements(&self) -> Vec<GroupElem> {
        let mut out = vec![self.zero()];
        for (i, &d) in self.factors.iter().enumerate() {
            let mut next = Vec::with_capacity(out.len() * d as usize);
            for base in &out {
                for c in 0..d {
                    let mut g = base.clone();
                    g.0[i] = c;
                    next.push(g);
                }
            }
            out = next;
        }
        out
    }

    /// Dense index in `0..order()` matching [`FinAbGroup::elements`].
    pub fn index_of(&self, a: &GroupElem) -> usize {
        a.0.iter()
            .zip(&self.factors)
            .fold(0usize, |acc, (&c, &d)| acc * d as usize + c as usize)
    }

    /// A draw from the Haar (uniform) law.
    pub fn sample_haar<R: Rng + ?Sized>(&self, rng: &mut R) -> GroupElem {
        GroupElem(self.factors.iter().map(|&d| rng.random_range(0..d)).collect())
    }

    /// Subgroup generated by `gens`, by closure. Only for small groups.
    pub fn generated_subgroup(&self, gens: &[GroupElem]) -> Vec<GroupElem> {
        let mut seen = vec![false; self.order() as usize];
        let mut frontier = vec![self.zero()];
        seen[0] = true;
        let mut all = vec![self.zero()];
        while let Some(g) = frontier.pop() {
            for s in gens {
                let h = self.add(&g, s);
                let idx = self.index_of(&h);
                if !seen[idx] {
                    seen[idx] = true;
                    all.push(h.clone());
                    frontier.push(h);
                }
            }
        }
        all.sort();
        all
    }
}
