use rand::Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rational::{Interval, Rational};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ConfigError {
    #[error("atom positions must be strictly increasing (at index {0})")]
    NotIncreasing(usize),
    #[error("duplicate atom id {0}")]
    DuplicateId(u64),
    #[error("atom at {0} lies outside the window")]
    OutsideWindow(Rational),
    #[error("need at least {needed} atoms, configuration has {got}")]
    TooFewAtoms { needed: usize, got: usize },
    #[error("windows differ")]
    WindowMismatch,
    #[error("two atoms share position {0}")]
    Collision(Rational),
    #[error("{marks} marks for {atoms} atoms")]
    MarkCount { marks: usize, atoms: usize },
    #[error("distinguished points are not below the remainder")]
    NotDistinguishable,
}

/// An atom with a permanent identity tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Atom {
    pub id: u64,
    pub pos: Rational,
}

/// A finite simple counting measure: atoms strictly increasing in position,
/// all inside `window`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PointConfig {
    window: Interval,
    atoms: Vec<Atom>,
}

impl PointConfig {
    pub fn new(window: Interval, atoms: Vec<Atom>) -> Result<Self, ConfigError> {
        for (i, w) in atoms.windows(2).enumerate() {
            if w[0].pos >= w[1].pos {
                return Err(ConfigError::NotIncreasing(i + 1));
            }
        }
        if let Some(a) = atoms.iter().find(|a| !window.contains(a.pos)) {
            return Err(ConfigError::OutsideWindow(a.pos));
        }
        let mut ids: Vec<u64> = atoms.iter().map(|a| a.id).collect();
        ids.sort_unstable();
        if let Some(w) = ids.windows(2).find(|w| w[0] == w[1]) {
            return Err(ConfigError::DuplicateId(w[0]));
        }
        Ok(PointConfig { window, atoms })
    }

    /// Sorts `atoms` by position first.
    pub fn from_unsorted(window: Interval, mut atoms: Vec<Atom>) -> Result<Self, ConfigError> {
        atoms.sort_by_key(|a| a.pos);
        PointConfig::new(window, atoms)
    }

    pub fn empty(window: Interval) -> Self {
        PointConfig { window, atoms: Vec::new() }
    }

    pub(crate) fn from_parts_unchecked(window: Interval, atoms: Vec<Atom>) -> Self {
        debug_assert!(PointConfig::new(window, atoms.clone()).is_ok());
        PointConfig { window, atoms }
    }

    pub fn window(&self) -> Interval {
        self.window
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn positions(&self) -> Vec<Rational> {
        self.atoms.iter().map(|a| a.pos).collect()
    }

    /// `t_n`, 1-based.
    pub fn t(&self, n: usize) -> Option<Rational> {
        n.checked_sub(1).and_then(|i| self.atoms.get(i)).map(|a| a.pos)
    }

    pub fn count_in(&self, interval: &Interval) -> usize {
        let lo = self.atoms.partition_point(|a| a.pos < interval.lo());
        let hi = self.atoms.partition_point(|a| a.pos < interval.hi());
        hi - lo
    }

    /// Rank (1-based) of the atom with `id`.
    pub fn rank_of(&self, id: u64) -> Option<usize> {
        self.atoms.iter().position(|a| a.id == id).map(|i| i + 1)
    }
}

/// Unit-rate Poisson process on `window`: cumulative `Exp(1)` gaps from the
/// left end, each snapped to a multiple of `2^-53`.
pub fn sample_poisson<R: Rng + ?Sized>(window: Interval, rng: &mut R) -> PointConfig {
    sample_poisson_with_intensity(window, 1.0, rng)
}

/// Poisson process of constant `intensity` on `window`. Zero intensity gives
/// the empty configuration.
pub fn sample_poisson_with_intensity<R: Rng + ?Sized>(
    window: Interval,
    intensity: f64,
    rng: &mut R,
) -> PointConfig {
    assert!(intensity >= 0.0 && intensity.is_finite());
    if intensity == 0.0 {
        return PointConfig::empty(window);
    }
    let atoms = gap_walk(rng, intensity, window.hi() - window.lo())
        .enumerate()
        .map(|(i, offset)| Atom { id: i as u64, pos: window.lo() + offset })
        .collect();
    PointConfig::from_parts_unchecked(window, atoms)
}

/// Offsets `g_1, g_1 + g_2, ...` strictly below `length`, with i.i.d.
/// exponential gaps snapped to the dyadic grid. A gap that snaps to zero is
/// redrawn so the offsets stay strictly increasing.
pub(crate) fn gap_walk<'a, R: Rng + ?Sized>(
    rng: &'a mut R,
    intensity: f64,
    length: Rational,
) -> impl Iterator<Item = Rational> + 'a {
    let law = Exp::new(intensity).expect("positive intensity");
    let mut cursor = Rational::ZERO;
    std::iter::from_fn(move || {
        let gap = loop {
            let g = Rational::from_f64_dyadic(law.sample(rng)).expect("finite gap");
            if g.is_positive() {
                break g;
            }
        };
        cursor = cursor + gap;
        (cursor < length).then_some(cursor)
    })
}

/// Which input configuration an atom of a superposition came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Provenance {
    pub part: u8,
    pub id: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Superposition {
    pub config: PointConfig,
    /// Indexed by the new atom ids.
    pub provenance: Vec<Provenance>,
}

/// `ω_1 + ω_2`, with fresh ids `0..` in position order.
pub fn superpose(a: &PointConfig, b: &PointConfig) -> Result<Superposition, ConfigError> {
    if a.window != b.window {
        return Err(ConfigError::WindowMismatch);
    }
    let mut merged: Vec<(Rational, Provenance)> = a
        .atoms
        .iter()
        .map(|x| (x.pos, Provenance { part: 0, id: x.id }))
        .chain(b.atoms.iter().map(|x| (x.pos, Provenance { part: 1, id: x.id })))
        .collect();
    merged.sort_by_key(|m| m.0);
    if let Some(w) = merged.windows(2).find(|w| w[0].0 == w[1].0) {
        return Err(ConfigError::Collision(w[0].0));
    }
    let atoms = merged
        .iter()
        .enumerate()
        .map(|(i, m)| Atom { id: i as u64, pos: m.0 })
        .collect();
    Ok(Superposition {
        config: PointConfig::from_parts_unchecked(a.window, atoms),
        provenance: merged.into_iter().map(|m| m.1).collect(),
    })
}

/// A configuration with its first `k` atoms split off.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Split {
    pub points: Vec<Atom>,
    pub remainder: PointConfig,
}

impl Split {
    /// Whether `x_1 < ... < x_k < t_1(remainder)`.
    pub fn is_ordered(&self) -> bool {
        self.points.windows(2).all(|w| w[0].pos < w[1].pos)
            && match (self.points.last(), self.remainder.atoms.first()) {
                (Some(x), Some(t)) => x.pos < t.pos,
                _ => true,
            }
    }
}

/// `ω ↦ (t_1, ..., t_k, ω - δ_{t_1} - ... - δ_{t_k})`.
pub fn distinguish_k(config: &PointConfig, k: usize) -> Result<Split, ConfigError> {
    if config.len() < k {
        return Err(ConfigError::TooFewAtoms { needed: k, got: config.len() });
    }
    Ok(Split {
        points: config.atoms[..k].to_vec(),
        remainder: PointConfig::from_parts_unchecked(config.window, config.atoms[k..].to_vec()),
    })
}

/// `(x_1, ..., x_k, ω) ↦ δ_{x_1} + ... + δ_{x_k} + ω` on ordered splits.
pub fn recombine(split: &Split) -> Result<PointConfig, ConfigError> {
    if !split.is_ordered() {
        return Err(ConfigError::NotDistinguishable);
    }
    let mut atoms = split.points.clone();
    atoms.extend_from_slice(&split.remainder.atoms);
    PointConfig::new(split.remainder.window, atoms)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AtomRecord<M> {
    pub id: u64,
    pub pos: Rational,
    #[serde(default = "Option::default", skip_serializing_if = "Option::is_none")]
    pub mark: Option<M>,
}

/// Wire form of a (possibly marked) configuration.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConfigRecord<M> {
    pub window: Interval,
    pub atoms: Vec<AtomRecord<M>>,
}

impl<M> ConfigRecord<M> {
    pub fn unmarked(config: &PointConfig) -> Self {
        ConfigRecord {
            window: config.window,
            atoms: config
                .atoms
                .iter()
                .map(|a| AtomRecord { id: a.id, pos: a.pos, mark: None })
                .collect(),
        }
    }

    pub fn into_config(self) -> Result<(PointConfig, Vec<Option<M>>), ConfigError> {
        let (atoms, marks): (Vec<Atom>, Vec<Option<M>>) = self
            .atoms
            .into_iter()
            .map(|r| (Atom { id: r.id, pos: r.pos }, r.mark))
            .unzip();
        Ok((PointConfig::new(self.window, atoms)?, marks))
    }
}

/// A configuration with one mark per atom, aligned to ranks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MarkedConfig<M> {
    base: PointConfig,
    marks: Vec<M>,
}

impl<M: Clone> MarkedConfig<M> {
    pub fn new(base: PointConfig, marks: Vec<M>) -> Result<Self, ConfigError> {
        if marks.len() != base.len() {
            return Err(ConfigError::MarkCount { marks: marks.len(), atoms: base.len() });
        }
        Ok(MarkedConfig { base, marks })
    }

    pub fn base(&self) -> &PointConfig {
        &self.base
    }

    pub fn marks(&self) -> &[M] {
        &self.marks
    }

    /// Mark of rank `n` (1-based).
    pub fn mark(&self, n: usize) -> Option<&M> {
        n.checked_sub(1).and_then(|i| self.marks.get(i))
    }

    pub fn to_record(&self) -> ConfigRecord<M> {
        ConfigRecord {
            window: self.base.window,
            atoms: self
                .base
                .atoms
                .iter()
                .zip(&self.marks)
                .map(|(a, m)| AtomRecord { id: a.id, pos: a.pos, mark: Some(m.clone()) })
                .collect(),
        }
    }

    pub fn from_record(record: ConfigRecord<M>) -> Result<Self, ConfigError> {
        let (base, marks) = record.into_config()?;
        let atoms = base.len();
        let marks: Option<Vec<M>> = marks.into_iter().collect();
        let marks = marks.ok_or(ConfigError::MarkCount { marks: 0, atoms })?;
        MarkedConfig::new(base, marks)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngSpec;
    use proptest::prelude::*;

    fn r(p: i128, q: i128) -> Rational {
        Rational::new(p, q)
    }

    fn window(w: i128) -> Interval {
        Interval::new(Rational::ZERO, Rational::integer(w)).unwrap()
    }

    #[test]
    fn validation() {
        let w = window(3);
        let a = |id, p| Atom { id, pos: p };
        assert!(PointConfig::new(w, vec![a(0, r(1, 2)), a(1, r(1, 1))]).is_ok());
        assert_eq!(
            PointConfig::new(w, vec![a(0, r(1, 1)), a(1, r(1, 1))]),
            Err(ConfigError::NotIncreasing(1))
        );
        assert_eq!(
            PointConfig::new(w, vec![a(0, r(1, 2)), a(0, r(1, 1))]),
            Err(ConfigError::DuplicateId(0))
        );
        assert_eq!(PointConfig::new(w, vec![a(0, r(3, 1))]), Err(ConfigError::OutsideWindow(r(3, 1))));
    }

    #[test]
    fn sampling_is_deterministic_and_in_window() {
        let w = window(30);
        let a = sample_poisson(w, &mut RngSpec::new(4, 0).rng());
        let b = sample_poisson(w, &mut RngSpec::new(4, 0).rng());
        assert_eq!(a, b);
        assert!(a.len() > 5);
        assert!(a.atoms().iter().all(|x| w.contains(x.pos)));
        assert!(a.atoms().iter().all(|x| x.pos.denom().count_ones() == 1));
        assert!(sample_poisson_with_intensity(w, 0.0, &mut RngSpec::new(4, 0).rng()).is_empty());
    }

    #[test]
    fn mean_count_is_window_width() {
        let w = window(10);
        let total: usize = (0..2000)
            .map(|i| sample_poisson(w, &mut RngSpec::new(1, i).rng()).len())
            .sum();
        let mean = total as f64 / 2000.0;
        // sd of the mean is sqrt(10/2000) ~ 0.07
        assert!((mean - 10.0).abs() < 0.3, "mean {mean}");
    }

    #[test]
    fn superpose_cases() {
        let w = window(20);
        let c1 = sample_poisson(w, &mut RngSpec::new(2, 0).rng());
        let empty = PointConfig::empty(w);
        let s = superpose(&c1, &empty).unwrap();
        assert_eq!(s.config.positions(), c1.positions());
        assert!(s.provenance.iter().all(|p| p.part == 0));

        let c2 = sample_poisson(w, &mut RngSpec::new(2, 1).rng());
        let ab = superpose(&c1, &c2).unwrap();
        let ba = superpose(&c2, &c1).unwrap();
        assert_eq!(ab.config.positions(), ba.config.positions());
        assert_eq!(ab.config.len(), c1.len() + c2.len());

        let other = PointConfig::empty(window(5));
        assert_eq!(superpose(&c1, &other), Err(ConfigError::WindowMismatch));
        assert!(matches!(superpose(&c1, &c1), Err(ConfigError::Collision(_))));
    }

    #[test]
    fn distinguish_edge_cases() {
        let w = window(5);
        let c = sample_poisson(w, &mut RngSpec::new(8, 0).rng());
        let s = distinguish_k(&c, 0).unwrap();
        assert!(s.points.is_empty());
        assert_eq!(s.remainder, c);
        assert_eq!(
            distinguish_k(&c, c.len() + 1),
            Err(ConfigError::TooFewAtoms { needed: c.len() + 1, got: c.len() })
        );
        let mut bad = distinguish_k(&c, 1).unwrap();
        bad.points[0].pos = w.hi() - r(1, 1_000_000);
        assert_eq!(recombine(&bad), Err(ConfigError::NotDistinguishable));
    }

    #[test]
    fn marked_json_shape() {
        let w = window(2);
        let base = PointConfig::new(w, vec![Atom { id: 3, pos: r(1, 3) }]).unwrap();
        let m = MarkedConfig::new(base, vec![1u8]).unwrap();
        let text = serde_json::to_string(&m.to_record()).unwrap();
        assert_eq!(text, r#"{"window":["0/1","2/1"],"atoms":[{"id":3,"pos":"1/3","mark":1}]}"#);
        let back: ConfigRecord<u8> = serde_json::from_str(&text).unwrap();
        assert_eq!(MarkedConfig::from_record(back).unwrap(), m);
        let unmarked = serde_json::to_string(&ConfigRecord::<u8>::unmarked(m.base())).unwrap();
        assert!(!unmarked.contains("mark"));
        assert!(MarkedConfig::new(m.base().clone(), vec![1u8, 2]).is_err());
    }

    proptest! {
        #[test]
        fn split_recombine_round_trip(seed in 0u64..500, k in 0usize..6) {
            let c = sample_poisson(window(12), &mut RngSpec::new(seed, 0).rng());
            prop_assume!(c.len() >= k);
            let s = distinguish_k(&c, k).unwrap();
            prop_assert!(s.is_ordered());
            prop_assert_eq!(recombine(&s).unwrap(), c);
        }
    }
}
