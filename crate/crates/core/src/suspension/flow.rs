use serde::Serialize;
use thiserror::Error;

use super::config::{Atom, MarkedConfig, PointConfig, Split};
use super::perm::{RankPermutation, SemidirectElem};
use crate::chacon::ChaconSystem;
use crate::cocycle::CocycleSpec;
use crate::dynamics::{StepError, Transformation};
use crate::group::GroupElem;

/// Why a configuration could not be followed. Censoring is always of the
/// whole configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Error, Serialize)]
#[serde(tag = "reason")]
pub enum Censored {
    #[error("atom {id} left the constructed towers at step {step}")]
    DepthExceeded { step: u64, id: u64 },
    #[error("atom {id} left the window at step {step}")]
    WindowExit { step: u64, id: u64 },
    #[error("no return within {p_max} steps")]
    Horizon { p_max: u64 },
    #[error("configuration has {got} atoms, {needed} required")]
    TooFewAtoms { needed: usize, got: usize },
}

fn censor(cause: StepError, step: u64, id: u64) -> Censored {
    match cause {
        StepError::DepthExceeded => Censored::DepthExceeded { step, id },
        StepError::OutOfDomain(_) => Censored::WindowExit { step, id },
    }
}

/// Survival and censoring tallies over a batch of configurations.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct CensorReport {
    pub survived: u64,
    pub censored: u64,
    pub depth_exceeded: u64,
    pub window_exit: u64,
    pub horizon: u64,
    pub too_few_atoms: u64,
}

impl CensorReport {
    pub fn record<T>(&mut self, outcome: &Result<T, Censored>) {
        match outcome {
            Ok(_) => self.survived += 1,
            Err(c) => {
                self.censored += 1;
                match c {
                    Censored::DepthExceeded { .. } => self.depth_exceeded += 1,
                    Censored::WindowExit { .. } => self.window_exit += 1,
                    Censored::Horizon { .. } => self.horizon += 1,
                    Censored::TooFewAtoms { .. } => self.too_few_atoms += 1,
                }
            }
        }
    }

    pub fn merge(&mut self, other: &CensorReport) {
        self.survived += other.survived;
        self.censored += other.censored;
        self.depth_exceeded += other.depth_exceeded;
        self.window_exit += other.window_exit;
        self.horizon += other.horizon;
        self.too_few_atoms += other.too_few_atoms;
    }

    pub fn total(&self) -> u64 {
        self.survived + self.censored
    }

    pub fn censored_fraction(&self) -> f64 {
        if self.total() == 0 {
            0.0
        } else {
            self.censored as f64 / self.total() as f64
        }
    }
}

/// `T_* ω` together with `Ψ(ω)` or an iterate of it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pushed {
    pub config: PointConfig,
    pub perm: RankPermutation,
}

fn push_at<T: Transformation>(t: &T, config: &PointConfig, step: u64) -> Result<Pushed, Censored> {
    let window = config.window();
    let mut moved = Vec::with_capacity(config.len());
    for (rank, atom) in config.atoms().iter().enumerate() {
        let pos = t.forward(atom.pos).map_err(|e| censor(e, step, atom.id))?;
        if !window.contains(pos) {
            return Err(Censored::WindowExit { step, id: atom.id });
        }
        moved.push((Atom { id: atom.id, pos }, rank));
    }
    moved.sort_by_key(|(a, _)| a.pos);
    let mut mapping = vec![0; moved.len()];
    for (new_rank, (_, old_rank)) in moved.iter().enumerate() {
        mapping[*old_rank] = new_rank;
    }
    let perm = RankPermutation::from_zero_based(mapping).expect("sorting yields a bijection");
    let config = PointConfig::new(window, moved.into_iter().map(|(a, _)| a).collect())
        .expect("an injective map keeps atoms distinct");
    Ok(Pushed { config, perm })
}

/// One step of `T_*`, with `Ψ(ω)` read off the atom ids.
pub fn push_forward<T: Transformation>(t: &T, config: &PointConfig) -> Result<Pushed, Censored> {
    push_at(t, config, 1)
}

/// `T_*^p ω` and `Ψ_p(ω) = Ψ(T_*^{p-1} ω) ∘ ... ∘ Ψ(ω)`.
pub fn psi_iter<T: Transformation>(t: &T, config: &PointConfig, p: u64) -> Result<Pushed, Censored> {
    let mut cur = Pushed { config: config.clone(), perm: RankPermutation::identity(config.len()) };
    for step in 1..=p {
        let next = push_at(t, &cur.config, step)?;
        cur.perm = next.perm.after(&cur.perm).expect("sizes agree");
        cur.config = next.config;
    }
    Ok(cur)
}

/// First return of the ranks `1..=k`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RankReturn {
    pub n: u64,
    pub config: PointConfig,
    pub perm: RankPermutation,
}

/// `N^(k)(ω)`: the least `p <= p_max` with `Ψ_p(ω)` fixing `1..=k`.
pub fn return_time_n_k<T: Transformation>(
    t: &T,
    config: &PointConfig,
    k: usize,
    p_max: u64,
) -> Result<RankReturn, Censored> {
    if config.len() < k {
        return Err(Censored::TooFewAtoms { needed: k, got: config.len() });
    }
    let mut cur = Pushed { config: config.clone(), perm: RankPermutation::identity(config.len()) };
    for step in 1..=p_max {
        let next = push_at(t, &cur.config, step)?;
        cur.perm = next.perm.after(&cur.perm).expect("sizes agree");
        cur.config = next.config;
        if cur.perm.fixes_prefix(k) {
            return Ok(RankReturn { n: step, config: cur.config, perm: cur.perm });
        }
    }
    Err(Censored::Horizon { p_max })
}

/// First return of `T^{×k} × T_*` to the ordered set `X^(k)`, starting from
/// `split`. Returns the return time `M^(k)` and the returned split.
pub fn induced_advance<T: Transformation>(
    t: &T,
    split: &Split,
    p_max: u64,
) -> Result<(u64, Split), Censored> {
    let mut cur = split.clone();
    for step in 1..=p_max {
        let window = cur.remainder.window();
        for x in cur.points.iter_mut() {
            x.pos = t.forward(x.pos).map_err(|e| censor(e, step, x.id))?;
            if !window.contains(x.pos) {
                return Err(Censored::WindowExit { step, id: x.id });
            }
        }
        cur.remainder = push_at(t, &cur.remainder, step)?.config;
        if cur.is_ordered() {
            return Ok((step, cur));
        }
    }
    Err(Censored::Horizon { p_max })
}

/// The permutation action on marks after one step of `T_*`.
pub fn skew_apply_perm<M: Clone>(step: &Pushed, marks: &[M]) -> Vec<M> {
    step.perm.act(marks).expect("one mark per atom")
}

/// `φ̄(ω) = ((φ(t_n(ω)))_n, Ψ(ω))` and `T_* ω`.
pub fn phi_bar(
    system: &ChaconSystem,
    spec: &CocycleSpec,
    config: &PointConfig,
) -> Result<(SemidirectElem, PointConfig), Censored> {
    let step = push_forward(system, config)?;
    let values = config
        .atoms()
        .iter()
        .map(|a| spec.eval_phi(system, a.pos).map_err(|e| censor(e, 1, a.id)))
        .collect::<Result<Vec<_>, _>>()?;
    let elem = SemidirectElem::new(values, step.perm).expect("one value per atom");
    Ok((elem, step.config))
}

/// One step of the group skew product: the mark at new rank `n` becomes
/// `φ(t_m) + g_m` where `m = Ψ^{-1}(n)`.
pub fn skew_apply_group(
    system: &ChaconSystem,
    spec: &CocycleSpec,
    marked: &MarkedConfig<GroupElem>,
) -> Result<MarkedConfig<GroupElem>, Censored> {
    let (elem, config) = phi_bar(system, spec, marked.base())?;
    let marks = elem.act(spec.group(), marked.marks()).expect("one mark per atom");
    Ok(MarkedConfig::new(config, marks).expect("one mark per atom"))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PhiK {
    pub n: u64,
    pub values: Vec<GroupElem>,
}

/// `φ_k(ω) = (φ^{(N)}(t_1), ..., φ^{(N)}(t_k))` with `N = N^(k)(ω)`.
pub fn phi_k_vector(
    system: &ChaconSystem,
    spec: &CocycleSpec,
    config: &PointConfig,
    k: usize,
    p_max: u64,
) -> Result<PhiK, Censored> {
    let ret = return_time_n_k(system, config, k, p_max)?;
    let values = config.atoms()[..k]
        .iter()
        .map(|a| {
            spec.phi_iter(system, a.pos, ret.n)
                .map_err(|e| censor(e, ret.n, a.id))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(PhiK { n: ret.n, values })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::Identity;
    use crate::group::FinAbGroup;
    use crate::rational::{Interval, Rational};
    use crate::rng::RngSpec;
    use crate::suspension::config::{distinguish_k, recombine, sample_poisson};

    fn chacon_config(n_max: u32, seed: u64) -> (ChaconSystem, PointConfig) {
        let system = ChaconSystem::build(n_max).unwrap();
        let config = sample_poisson(system.covered(), &mut RngSpec::new(seed, 0).rng());
        (system, config)
    }

    /// Ranks recomputed from scratch: sort the images of the old atoms.
    fn rank_oracle(images: &[Rational]) -> Vec<usize> {
        let mut sorted = images.to_vec();
        sorted.sort();
        images
            .iter()
            .map(|x| sorted.binary_search(x).unwrap() + 1)
            .collect()
    }

    #[test]
    fn single_atom_and_identity() {
        let w = Interval::new(Rational::ZERO, Rational::integer(8)).unwrap();
        let one = PointConfig::new(w, vec![Atom { id: 0, pos: Rational::new(1, 2) }]).unwrap();
        let system = ChaconSystem::build(3).unwrap();
        let p = push_forward(&system, &one).unwrap();
        assert_eq!(Vec::<usize>::from(p.perm), vec![1]);

        let (_, c) = chacon_config(3, 1);
        let p = push_forward(&Identity, &c).unwrap();
        assert!(p.perm.is_identity());
        assert_eq!(p.config, c);
    }

    #[test]
    fn psi_matches_sorting_oracle() {
        let (system, _) = chacon_config(4, 0);
        let mut checked = 0;
        for seed in 0..200 {
            let c = sample_poisson(system.covered(), &mut RngSpec::new(seed, 3).rng());
            let Ok(step) = push_forward(&system, &c) else { continue };
            let images: Vec<Rational> = c.positions().iter().map(|&x| system.apply_t(x).unwrap()).collect();
            assert_eq!(Vec::<usize>::from(step.perm.clone()), rank_oracle(&images));
            checked += 1;
        }
        assert!(checked > 50);
    }

    #[test]
    fn psi_p_matches_brute_force_rank() {
        let (system, c) = chacon_config(4, 11);
        for p in [1u64, 3, 7] {
            let Ok(res) = psi_iter(&system, &c, p) else { continue };
            let images: Vec<Rational> = c
                .positions()
                .iter()
                .map(|&x| *system.orbit(x, p as i64).unwrap().last().unwrap())
                .collect();
            assert_eq!(Vec::<usize>::from(res.perm), rank_oracle(&images));
        }
    }

    #[test]
    fn psi_cocycle_identity() {
        let system = ChaconSystem::build(4).unwrap();
        let mut checked = 0;
        for seed in 0..100 {
            let c = sample_poisson(system.covered(), &mut RngSpec::new(seed, 4).rng());
            let (p, q) = (1 + seed % 5, 1 + seed % 3);
            let (Ok(a), Ok(whole)) = (psi_iter(&system, &c, p), psi_iter(&system, &c, p + q)) else {
                continue;
            };
            let b = psi_iter(&system, &a.config, q).unwrap();
            assert_eq!(whole.perm, b.perm.after(&a.perm).unwrap());
            assert_eq!(whole.config, b.config);
            checked += 1;
        }
        assert!(checked > 20);
    }

    #[test]
    fn return_time_matches_scan() {
        let system = ChaconSystem::build(4).unwrap();
        let c = chacon_config(4, 2).1;
        if push_forward(&system, &c).is_ok() {
            assert_eq!(return_time_n_k(&system, &c, 0, 10).unwrap().n, 1);
        }
        let mut found = 0;
        for seed in 0..60 {
            let c = sample_poisson(system.covered(), &mut RngSpec::new(seed, 5).rng());
            let Ok(ret) = return_time_n_k(&system, &c, 1, 5000) else { continue };
            let scan = (1..=ret.n)
                .find(|&p| psi_iter(&system, &c, p).unwrap().perm.fixes_prefix(1))
                .unwrap();
            assert_eq!(scan, ret.n);
            found += 1;
        }
        assert!(found > 0);
    }

    #[test]
    fn censoring_carries_reason() {
        let system = ChaconSystem::build(2).unwrap();
        let top = *system.top().levels().last().unwrap();
        let c = PointConfig::new(system.covered(), vec![Atom { id: 7, pos: top.lo() }]).unwrap();
        assert_eq!(push_forward(&system, &c), Err(Censored::DepthExceeded { step: 1, id: 7 }));
        let few = PointConfig::empty(system.covered());
        assert_eq!(
            return_time_n_k(&system, &few, 1, 10),
            Err(Censored::TooFewAtoms { needed: 1, got: 0 })
        );
        let mut report = CensorReport::default();
        report.record(&push_forward(&system, &c));
        report.record(&push_forward(&system, &few));
        assert_eq!((report.survived, report.censored, report.depth_exceeded), (1, 1, 1));
    }

    #[test]
    fn deeper_system_never_censors_more() {
        let shallow = ChaconSystem::build(3).unwrap();
        let deep = ChaconSystem::build(5).unwrap();
        for seed in 0..100 {
            let c = sample_poisson(shallow.covered(), &mut RngSpec::new(seed, 6).rng());
            if let Ok(a) = psi_iter(&shallow, &c, 3) {
                let lifted = PointConfig::new(deep.covered(), c.atoms().to_vec()).unwrap();
                let b = psi_iter(&deep, &lifted, 3).unwrap();
                assert_eq!(a.perm, b.perm);
                assert_eq!(a.config.positions(), b.config.positions());
            }
        }
    }

    #[test]
    fn conjugacy_on_a_few_samples() {
        let system = ChaconSystem::build(4).unwrap();
        let mut checked = 0;
        for seed in 0..40 {
            let c = sample_poisson(system.covered(), &mut RngSpec::new(seed, 7).rng());
            for k in [1, 2] {
                let Ok(split) = distinguish_k(&c, k) else { continue };
                let (Ok((m, induced)), Ok(ret)) =
                    (induced_advance(&system, &split, 5000), return_time_n_k(&system, &c, k, 5000))
                else {
                    continue;
                };
                assert_eq!(m, ret.n);
                assert_eq!(recombine(&induced).unwrap(), ret.config);
                checked += 1;
            }
        }
        assert!(checked > 0);
    }

    fn z2_indicator() -> CocycleSpec {
        CocycleSpec::from_json(include_str!("../../specs/indicator_middle_spacer_n2.json")).unwrap()
    }

    #[test]
    fn zero_cocycle_skew_is_permutation() {
        let (system, c) = chacon_config(4, 21);
        let g = FinAbGroup::cyclic(3);
        let spec = CocycleSpec::zero(g.clone());
        let mut rng = RngSpec::new(1, 1).rng();
        let marks: Vec<GroupElem> = (0..c.len()).map(|_| g.sample_haar(&mut rng)).collect();
        let marked = MarkedConfig::new(c.clone(), marks.clone()).unwrap();
        if let Ok(next) = skew_apply_group(&system, &spec, &marked) {
            let step = push_forward(&system, &c).unwrap();
            assert_eq!(next.marks(), skew_apply_perm(&step, &marks).as_slice());
        }
    }

    #[test]
    fn single_atom_accrues_phi_iter() {
        let system = ChaconSystem::build(4).unwrap();
        let spec = z2_indicator();
        let g = spec.group().clone();
        let x = Rational::new(1, 7);
        let base = PointConfig::new(system.covered(), vec![Atom { id: 0, pos: x }]).unwrap();
        let mut marked = MarkedConfig::new(base, vec![g.zero()]).unwrap();
        for p in 1..=40u64 {
            marked = skew_apply_group(&system, &spec, &marked).unwrap();
            assert_eq!(marked.marks()[0], spec.phi_iter(&system, x, p).unwrap());
        }
    }

    #[test]
    fn two_steps_equal_composed_cocycle() {
        let system = ChaconSystem::build(4).unwrap();
        let spec = z2_indicator();
        let g = spec.group().clone();
        for seed in 0..30 {
            let c = sample_poisson(system.covered(), &mut RngSpec::new(seed, 8).rng());
            let mut rng = RngSpec::new(seed, 9).rng();
            let marks: Vec<GroupElem> = (0..c.len()).map(|_| g.sample_haar(&mut rng)).collect();
            let m0 = MarkedConfig::new(c.clone(), marks.clone()).unwrap();
            let Ok(m1) = skew_apply_group(&system, &spec, &m0) else { continue };
            let Ok(m2) = skew_apply_group(&system, &spec, &m1) else { continue };
            let (a, c1) = phi_bar(&system, &spec, &c).unwrap();
            let (b, _) = phi_bar(&system, &spec, &c1).unwrap();
            let combined = b.compose(&g, &a).unwrap();
            assert_eq!(m2.marks(), combined.act(&g, &marks).unwrap().as_slice());
        }
    }

    #[test]
    fn phi_k_consistency() {
        let system = ChaconSystem::build(4).unwrap();
        let spec = z2_indicator();
        let g = spec.group().clone();
        let mut checked = 0;
        for seed in 0..40 {
            let c = sample_poisson(system.covered(), &mut RngSpec::new(seed, 10).rng());
            for k in [1usize, 2] {
                let Ok(phik) = phi_k_vector(&system, &spec, &c, k, 3000) else { continue };
                let mut rng = RngSpec::new(seed, 11).rng();
                let marks: Vec<GroupElem> = (0..c.len()).map(|_| g.sample_haar(&mut rng)).collect();
                let mut marked = MarkedConfig::new(c.clone(), marks.clone()).unwrap();
                for _ in 0..phik.n {
                    marked = skew_apply_group(&system, &spec, &marked).unwrap();
                }
                for (i, start) in marks.iter().enumerate().take(k) {
                    assert_eq!(marked.marks()[i], g.add(&phik.values[i], start));
                }
                if k == 1 {
                    let orbit = system.orbit(c.atoms()[0].pos, phik.n as i64 - 1).unwrap();
                    let visits = orbit.iter().filter(|&&y| spec.eval_phi(&system, y).unwrap() != g.zero()).count();
                    assert_eq!(phik.values[0], g.elem(&[visits as i64]).unwrap());
                }
                checked += 1;
            }
        }
        assert!(checked > 0);
    }
}
