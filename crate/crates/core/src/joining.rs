//! A non-confined Poisson extension over `x ↦ x + 1` on the line: two
//! independent Poisson configurations whose mark sequences are coupled
//! through interval membership.

use std::collections::HashMap;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rational::{Interval, Rational};
use crate::rng::RngSpec;
use crate::suspension::{gap_walk, Atom, PointConfig};

const FRESH_FAMILY: u16 = 0x4a02;

#[derive(Debug, Error, PartialEq)]
pub enum JoiningError {
    #[error("mark law must have at least one positive finite weight")]
    BadLaw,
    #[error("the two configurations live on different windows")]
    WindowMismatch,
    #[error("{marks} marks for {atoms} atoms")]
    MarkCount { marks: usize, atoms: usize },
}

/// A configuration on `[-W, W)` with the two-sided indexing
/// `... < t_0 < 0 <= t_1 < t_2 < ...`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BiConfig {
    config: PointConfig,
    split: usize,
}

impl BiConfig {
    pub fn new(config: PointConfig) -> Self {
        let split = config.atoms().partition_point(|a| a.pos.is_negative());
        BiConfig { config, split }
    }

    pub fn config(&self) -> &PointConfig {
        &self.config
    }

    pub fn window(&self) -> Interval {
        self.config.window()
    }

    /// Number of atoms left of the origin; `t_1` sits at this vector slot.
    pub fn origin_split(&self) -> usize {
        self.split
    }

    pub fn len(&self) -> usize {
        self.config.len()
    }

    pub fn is_empty(&self) -> bool {
        self.config.is_empty()
    }

    /// The two-sided index of vector slot `slot`.
    pub fn index_of_slot(&self, slot: usize) -> i64 {
        slot as i64 - self.split as i64 + 1
    }

    pub fn slot_of_index(&self, n: i64) -> Option<usize> {
        let slot = n - 1 + self.split as i64;
        (0..self.len() as i64).contains(&slot).then_some(slot as usize)
    }

    /// `t_n`.
    pub fn t(&self, n: i64) -> Option<Rational> {
        self.slot_of_index(n).map(|s| self.config.atoms()[s].pos)
    }

    pub fn indices(&self) -> std::ops::RangeInclusive<i64> {
        self.index_of_slot(0)..=self.index_of_slot(self.len()) - 1
    }
}

/// Result of sampling a two-sided configuration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BiSample {
    pub config: BiConfig,
    /// Draws discarded because one half-window came out empty.
    pub resamples: u64,
}

/// Poisson configuration of the given intensity on `[-W, W)`, built from
/// two gap samplers walking away from the origin. Draws with an empty side
/// are redrawn, except at zero intensity where the empty configuration is
/// the only outcome.
pub fn sample_biconfig<R: Rng + ?Sized>(half_width: i128, intensity: f64, rng: &mut R) -> BiSample {
    assert!(half_width > 0);
    let w = Rational::integer(half_width);
    let window = Interval::new(-w, w).unwrap();
    if intensity == 0.0 {
        return BiSample { config: BiConfig::new(PointConfig::empty(window)), resamples: 0 };
    }
    let mut resamples = 0;
    loop {
        let right: Vec<Rational> = gap_walk(rng, intensity, w).collect();
        let left: Vec<Rational> = gap_walk(rng, intensity, w).map(|x| -x).collect();
        if left.is_empty() || right.is_empty() {
            resamples += 1;
            continue;
        }
        let atoms = left
            .into_iter()
            .rev()
            .chain(right)
            .enumerate()
            .map(|(i, pos)| Atom { id: i as u64, pos })
            .collect();
        let config = PointConfig::new(window, atoms).expect("gap walk is strictly monotone");
        return BiSample { config: BiConfig::new(config), resamples };
    }
}

/// `ω([-1, 0))`, the exponent of the index shift `n ↦ n + 1`.
pub fn shift_cocycle(config: &BiConfig) -> i64 {
    let minus_one = Interval::new(-Rational::ONE, Rational::ZERO).unwrap();
    config.config.count_in(&minus_one) as i64
}

/// The index shift read off by moving every atom by one and ranking the
/// images afresh. `None` when the shift is not uniform over the atoms that
/// stay in the window.
pub fn tracked_shift(config: &BiConfig) -> Option<i64> {
    let images: Vec<(u64, Rational)> = config
        .config
        .atoms()
        .iter()
        .map(|a| (a.id, a.pos + Rational::ONE))
        .collect();
    let new_split = images.iter().filter(|(_, p)| p.is_negative()).count() as i64;
    let mut sorted = images.clone();
    sorted.sort_by_key(|&(_, p)| p);
    let old_slots: HashMap<u64, usize> =
        config.config.atoms().iter().enumerate().map(|(s, a)| (a.id, s)).collect();
    let mut shift = None;
    for (slot, (id, _)) in sorted.iter().enumerate() {
        let new_index = slot as i64 - new_split + 1;
        let old_slot = *old_slots.get(id)?;
        let d = new_index - config.index_of_slot(old_slot);
        match shift {
            None => shift = Some(d),
            Some(s) if s != d => return None,
            _ => {}
        }
    }
    Some(shift.unwrap_or(0))
}

/// A finite mark law `ρ` on the symbols `0..len`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarkLaw {
    pub probs: Vec<f64>,
}

impl MarkLaw {
    pub fn new(weights: Vec<f64>) -> Result<Self, JoiningError> {
        let total: f64 = weights.iter().sum();
        if weights.is_empty() || weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) || total <= 0.0 {
            return Err(JoiningError::BadLaw);
        }
        Ok(MarkLaw { probs: weights.iter().map(|w| w / total).collect() })
    }

    pub fn uniform(symbols: usize) -> Self {
        MarkLaw::new(vec![1.0; symbols]).expect("non-empty")
    }

    pub fn symbols(&self) -> usize {
        self.probs.len()
    }

    pub fn sampler(&self) -> WeightedIndex<f64> {
        WeightedIndex::new(&self.probs).expect("validated weights")
    }
}

/// Where a mark of the second sequence came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", content = "index", rename_all = "snake_case")]
pub enum Provenance {
    /// Copied from `marks1` at this two-sided index.
    Copied(i64),
    Fresh,
    /// The governing interval `[t_n, t_{n+1})` is not fully observed.
    Excluded,
}

/// Key for fresh randomness: one stream per atom of the second
/// configuration, so re-evaluation after moving the atoms sees the same draw.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FreshKey {
    pub seed: u64,
    pub sample: u64,
}

impl FreshKey {
    fn draw(&self, law: &WeightedIndex<f64>, atom_id: u64) -> u32 {
        debug_assert!(self.sample < 1 << 24 && atom_id < 1 << 24);
        let stream = (self.sample << 24) | atom_id;
        law.sample(&mut RngSpec::child(self.seed, FRESH_FAMILY, stream).rng()) as u32
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct JoiningSample {
    pub omega1: BiConfig,
    pub omega2: BiConfig,
    /// Aligned to the slots of `omega1`.
    pub marks1: Vec<u32>,
    /// Aligned to the slots of `omega2`; `None` exactly when excluded.
    pub marks2: Vec<Option<u32>>,
    pub provenance2: Vec<Provenance>,
    pub law: MarkLaw,
    pub key: FreshKey,
}

impl JoiningSample {
    pub fn excluded(&self) -> usize {
        self.provenance2.iter().filter(|p| **p == Provenance::Excluded).count()
    }

    pub fn copied(&self) -> usize {
        self.provenance2.iter().filter(|p| matches!(p, Provenance::Copied(_))).count()
    }
}

/// The coupling rule for index `n` of `ω_2`: the smallest index `ℓ` with
/// `t_ℓ(ω_1) ∈ [t_n(ω_2), t_{n+1}(ω_2))`.
fn governing_slot(omega1: &BiConfig, lo: Rational, hi: Rational) -> Option<usize> {
    let atoms = omega1.config.atoms();
    let slot = atoms.partition_point(|a| a.pos < lo);
    (slot < atoms.len() && atoms[slot].pos < hi).then_some(slot)
}

/// Evaluate the coupling rule given `marks1`.
pub fn couple_with(
    omega1: &BiConfig,
    marks1: Vec<u32>,
    omega2: &BiConfig,
    law: &MarkLaw,
    key: FreshKey,
) -> Result<JoiningSample, JoiningError> {
    if omega1.window() != omega2.window() {
        return Err(JoiningError::WindowMismatch);
    }
    if marks1.len() != omega1.len() {
        return Err(JoiningError::MarkCount { marks: marks1.len(), atoms: omega1.len() });
    }
    let sampler = law.sampler();
    let atoms2 = omega2.config.atoms();
    let mut marks2 = Vec::with_capacity(atoms2.len());
    let mut provenance2 = Vec::with_capacity(atoms2.len());
    for (slot, atom) in atoms2.iter().enumerate() {
        let Some(next) = atoms2.get(slot + 1) else {
            marks2.push(None);
            provenance2.push(Provenance::Excluded);
            continue;
        };
        match governing_slot(omega1, atom.pos, next.pos) {
            Some(l) => {
                marks2.push(Some(marks1[l]));
                provenance2.push(Provenance::Copied(omega1.index_of_slot(l)));
            }
            None => {
                marks2.push(Some(key.draw(&sampler, atom.id)));
                provenance2.push(Provenance::Fresh);
            }
        }
    }
    Ok(JoiningSample {
        omega1: omega1.clone(),
        omega2: omega2.clone(),
        marks1,
        marks2,
        provenance2,
        law: law.clone(),
        key,
    })
}

/// Draw i.i.d. `ρ` marks for `ω_1` from `rng`, then couple.
pub fn couple_marks<R: Rng + ?Sized>(
    omega1: &BiConfig,
    omega2: &BiConfig,
    law: &MarkLaw,
    rng: &mut R,
    key: FreshKey,
) -> Result<JoiningSample, JoiningError> {
    let sampler = law.sampler();
    let marks1 = (0..omega1.len()).map(|_| sampler.sample(rng) as u32).collect();
    couple_with(omega1, marks1, omega2, law, key)
}

/// Atoms dropped by an advance.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct WindowExit {
    pub omega1: usize,
    pub omega2: usize,
    /// Second-sequence indices that lost their governing interval.
    pub newly_excluded: usize,
}

fn shift_config(c: &BiConfig, steps: i128) -> (BiConfig, usize) {
    let w = c.window();
    let lo = w.lo() + Rational::integer(steps);
    let window = Interval::new(lo, w.hi()).expect("advance shorter than the window");
    let kept: Vec<Atom> = c
        .config
        .atoms()
        .iter()
        .map(|a| Atom { id: a.id, pos: a.pos + Rational::integer(steps) })
        .filter(|a| a.pos < w.hi())
        .collect();
    let dropped = c.len() - kept.len();
    (BiConfig::new(PointConfig::new(window, kept).expect("translation keeps order")), dropped)
}

/// `T_* × T_*` applied `steps` times to both configurations. Atoms reaching
/// the right edge leave; the observed window loses `steps` units on the
/// left. Marks and provenance are re-indexed by the two shift exponents.
pub fn advance_joint_by(sample: &JoiningSample, steps: u32) -> (JoiningSample, WindowExit) {
    let steps = steps as i128;
    let (omega1, d1) = shift_config(&sample.omega1, steps);
    let (omega2, d2) = shift_config(&sample.omega2, steps);
    let c1 = omega1.split as i64 - sample.omega1.split as i64;
    let marks1 = sample.marks1[..omega1.len()].to_vec();
    let mut marks2 = sample.marks2[..omega2.len()].to_vec();
    let mut provenance2: Vec<Provenance> = sample.provenance2[..omega2.len()]
        .iter()
        .map(|p| match p {
            Provenance::Copied(l) => Provenance::Copied(l - c1),
            other => *other,
        })
        .collect();
    let mut newly_excluded = 0;
    if d2 > 0 {
        if let Some(last) = provenance2.last_mut() {
            if *last != Provenance::Excluded {
                *last = Provenance::Excluded;
                *marks2.last_mut().unwrap() = None;
                newly_excluded = 1;
            }
        }
    }
    let advanced = JoiningSample {
        omega1,
        omega2,
        marks1,
        marks2,
        provenance2,
        law: sample.law.clone(),
        key: sample.key,
    };
    (advanced, WindowExit { omega1: d1, omega2: d2, newly_excluded })
}

pub fn advance_joint(sample: &JoiningSample) -> (JoiningSample, WindowExit) {
    advance_joint_by(sample, 1)
}

#[derive(Debug, Serialize)]
struct AtomRecord {
    index: i64,
    id: u64,
    pos: Rational,
    mark: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    provenance: Option<Provenance>,
}

#[derive(Debug, Serialize)]
struct SideRecord {
    window: Interval,
    origin_split: usize,
    atoms: Vec<AtomRecord>,
}

#[derive(Debug, Serialize)]
pub struct SampleRecord {
    omega1: SideRecord,
    omega2: SideRecord,
    law: MarkLaw,
    key: FreshKey,
}

impl From<&JoiningSample> for SampleRecord {
    fn from(s: &JoiningSample) -> Self {
        let side = |c: &BiConfig, marks: Vec<Option<u32>>, prov: Option<&[Provenance]>| SideRecord {
            window: c.window(),
            origin_split: c.split,
            atoms: c
                .config
                .atoms()
                .iter()
                .enumerate()
                .map(|(slot, a)| AtomRecord {
                    index: c.index_of_slot(slot),
                    id: a.id,
                    pos: a.pos,
                    mark: marks[slot],
                    provenance: prov.map(|p| p[slot]),
                })
                .collect(),
        };
        SampleRecord {
            omega1: side(&s.omega1, s.marks1.iter().map(|&m| Some(m)).collect(), None),
            omega2: side(&s.omega2, s.marks2.clone(), Some(&s.provenance2)),
            law: s.law.clone(),
            key: s.key,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(seed: u64, w: i128, lambda1: f64) -> JoiningSample {
        let mut rng = RngSpec::new(seed, 0).rng();
        let o1 = sample_biconfig(w, lambda1, &mut rng).config;
        let o2 = sample_biconfig(w, 1.0, &mut rng).config;
        couple_marks(&o1, &o2, &MarkLaw::uniform(2), &mut rng, FreshKey { seed, sample: 0 }).unwrap()
    }

    fn at(positions: &[(i128, i128)]) -> BiConfig {
        let w = Interval::new(Rational::integer(-5), Rational::integer(5)).unwrap();
        let atoms = positions
            .iter()
            .enumerate()
            .map(|(i, &(p, q))| Atom { id: i as u64, pos: Rational::new(p, q) })
            .collect();
        BiConfig::new(PointConfig::new(w, atoms).unwrap())
    }

    #[test]
    fn indexing_convention() {
        let c = at(&[(-3, 1), (-1, 2), (0, 1), (2, 1)]);
        assert_eq!(c.origin_split(), 2);
        assert_eq!(c.t(0), Some(Rational::new(-1, 2)));
        assert_eq!(c.t(1), Some(Rational::ZERO));
        assert_eq!(c.t(-1), Some(Rational::integer(-3)));
        assert_eq!(c.indices(), -1..=2);
        let s = sample_biconfig(20, 1.0, &mut RngSpec::new(3, 0).rng()).config;
        let split = s.origin_split();
        assert!(s.config().atoms()[split - 1].pos.is_negative());
        assert!(!s.config().atoms()[split].pos.is_negative());
    }

    #[test]
    fn sampling_is_reproducible() {
        assert_eq!(sample(5, 30, 1.0), sample(5, 30, 1.0));
        assert!(sample_biconfig(30, 0.0, &mut RngSpec::new(1, 0).rng()).config.is_empty());
    }

    #[test]
    fn shift_examples() {
        assert_eq!(shift_cocycle(&at(&[(-3, 1), (1, 2)])), 0);
        assert_eq!(shift_cocycle(&at(&[(-1, 2), (3, 10)])), 1);
        assert_eq!(tracked_shift(&at(&[(-1, 2), (3, 10)])), Some(1));
        for seed in 0..50 {
            let c = sample_biconfig(10, 1.0, &mut RngSpec::new(seed, 1).rng()).config;
            assert_eq!(tracked_shift(&c), Some(shift_cocycle(&c)));
        }
    }

    #[test]
    fn empty_first_side_gives_fresh_marks() {
        let s = sample(1, 20, 0.0);
        assert!(s.provenance2[..s.provenance2.len() - 1].iter().all(|p| *p == Provenance::Fresh));
        assert_eq!(*s.provenance2.last().unwrap(), Provenance::Excluded);
    }

    #[test]
    fn coincident_configurations_copy_everything() {
        let mut rng = RngSpec::new(9, 0).rng();
        let o = sample_biconfig(20, 1.0, &mut rng).config;
        let s = couple_marks(&o, &o, &MarkLaw::uniform(3), &mut rng, FreshKey { seed: 9, sample: 0 }).unwrap();
        for slot in 0..o.len() - 1 {
            assert_eq!(s.provenance2[slot], Provenance::Copied(o.index_of_slot(slot)));
            assert_eq!(s.marks2[slot], Some(s.marks1[slot]));
        }
    }

    #[test]
    fn provenance_invariant() {
        for seed in 0..20 {
            let s = sample(seed, 20, 1.0);
            for (slot, p) in s.provenance2.iter().enumerate() {
                match p {
                    Provenance::Copied(l) => {
                        let l_slot = s.omega1.slot_of_index(*l).unwrap();
                        assert_eq!(s.marks2[slot], Some(s.marks1[l_slot]));
                    }
                    Provenance::Fresh => assert!(s.marks2[slot].is_some()),
                    Provenance::Excluded => assert!(s.marks2[slot].is_none()),
                }
            }
        }
    }

    #[test]
    fn advance_is_equivariant() {
        for seed in 0..30 {
            let s = sample(seed, 15, 1.0);
            let (a, _) = advance_joint(&s);
            let again = couple_with(&a.omega1, a.marks1.clone(), &a.omega2, &a.law, a.key).unwrap();
            assert_eq!(again.provenance2, a.provenance2);
            assert_eq!(again.marks2, a.marks2);
            let (twice, _) = advance_joint(&a);
            assert_eq!(twice, advance_joint_by(&s, 2).0);
        }
    }

    #[test]
    fn mark_moves_with_index_shift() {
        let s = sample(2, 15, 1.0);
        let (a, _) = advance_joint(&s);
        let c = shift_cocycle(&s.omega2);
        for n in a.omega2.indices() {
            let new_slot = a.omega2.slot_of_index(n).unwrap();
            let old_slot = s.omega2.slot_of_index(n - c).unwrap();
            assert_eq!(a.omega2.config().atoms()[new_slot].id, s.omega2.config().atoms()[old_slot].id);
        }
    }

    #[test]
    fn json_has_provenance_tags() {
        let s = sample(4, 3, 1.0);
        let text = serde_json::to_string(&SampleRecord::from(&s)).unwrap();
        assert!(text.contains(r#""provenance":{"kind":"excluded"}"#));
        assert!(text.contains("origin_split"));
    }

    #[test]
    fn bad_law() {
        assert_eq!(MarkLaw::new(vec![]), Err(JoiningError::BadLaw));
        assert_eq!(MarkLaw::new(vec![0.0, 0.0]), Err(JoiningError::BadLaw));
        assert_eq!(MarkLaw::new(vec![1.0, 3.0]).unwrap().probs, vec![0.25, 0.75]);
    }
}
