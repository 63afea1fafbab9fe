//! Verification suites: seeded Monte-Carlo checks of the distributional
//! claims and exact checks of the algebraic identities, merged in sample
//! order so results do not depend on the worker count.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{DiscreteCDF, Poisson};
use thiserror::Error;

use crate::chacon::{ChaconError, ChaconSystem};
use crate::cocycle::CocycleSpec;
use crate::group::GroupElem;
use crate::joining::{
    advance_joint, couple_marks, couple_with, sample_biconfig, shift_cocycle, tracked_shift, FreshKey,
    JoiningSample, MarkLaw, Provenance,
};
use crate::rational::{Interval, Rational};
use crate::rng::RngSpec;
use crate::stats::{
    chi2_discrete, chi2_independence, chi2_poisson, ks_exponential, mc_mean, wilson_interval, Design,
    StatError, TestReport,
};
use crate::suspension::{
    distinguish_k, induced_advance, psi_iter, recombine, return_time_n_k, sample_poisson, skew_apply_group,
    superpose, CensorReport, Censored, MarkedConfig,
};

pub const BUNDLED_SPEC: &str = include_str!("../specs/indicator_middle_spacer_n2.json");

/// Censored fractions at or above this fail the suspension suite.
pub const CENSOR_THRESHOLD: f64 = 0.5;

#[derive(Debug, Error)]
pub enum VerifyError {
    #[error(transparent)]
    Stat(#[from] StatError),
    #[error(transparent)]
    Chacon(#[from] ChaconError),
    #[error("invalid parameter: {0}")]
    Invalid(String),
    #[error("worker pool: {0}")]
    Pool(String),
}

/// Suite verdict: goodness-of-fit tests share `alpha` through a Bonferroni
/// split, every other test keeps its own verdict. The individual reports are
/// unchanged.
pub fn family_verdict(gof: &[&TestReport], others: &[&TestReport], alpha: f64) -> bool {
    let threshold = family_alpha(gof.len(), alpha);
    gof.iter().all(|t| t.p_value >= threshold) && others.iter().all(|t| t.passed)
}

pub fn family_alpha(tests: usize, alpha: f64) -> f64 {
    alpha / tests.max(1) as f64
}

fn named(mut report: TestReport, name: &str, seed: u64, alpha: f64) -> TestReport {
    report.name = name.to_string();
    report.with_seed(seed).with_alpha(alpha)
}

/// Run `f` on a pool of `workers` threads (`0` lets rayon decide).
pub fn with_workers<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> Result<T, VerifyError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| VerifyError::Pool(e.to_string()))?;
    Ok(pool.install(f))
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct PoissonParams {
    pub window: i128,
    pub samples: u64,
    pub seed: u64,
    pub alpha: f64,
}

impl Default for PoissonParams {
    fn default() -> Self {
        PoissonParams { window: 20, samples: 10_000, seed: 1, alpha: crate::stats::DEFAULT_ALPHA }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PoissonReport {
    pub params: PoissonParams,
    pub first_atom: TestReport,
    pub first_gap: TestReport,
    pub counts: TestReport,
    pub superposition_counts: TestReport,
    pub halves_independent: TestReport,
    pub moments: Vec<TestReport>,
    /// Per-test threshold used for the suite verdict.
    pub family_alpha: f64,
    pub passed: bool,
}

impl PoissonReport {
    fn goodness_of_fit(&self) -> Vec<&TestReport> {
        vec![
            &self.first_atom,
            &self.first_gap,
            &self.counts,
            &self.superposition_counts,
            &self.halves_independent,
        ]
    }

    pub fn tests(&self) -> Vec<&TestReport> {
        let mut all = self.goodness_of_fit();
        all.extend(self.moments.iter());
        all
    }
}

struct PoissonDraw {
    t1: Option<f64>,
    gap: Option<f64>,
    count: u64,
    superposed: u64,
    halves: (u64, u64),
}

/// Quartile bins of `Poisson(mean)`, as upper-inclusive cut points.
fn quartile_cuts(mean: f64) -> Vec<u64> {
    let law = Poisson::new(mean).expect("positive mean");
    let mut cuts: Vec<u64> = [0.25, 0.5, 0.75].iter().map(|&q| law.inverse_cdf(q)).collect();
    cuts.dedup();
    cuts
}

pub fn verify_poisson(p: &PoissonParams) -> Result<PoissonReport, VerifyError> {
    if p.window <= 0 || p.samples < 2 {
        return Err(VerifyError::Invalid("window and samples must be positive".into()));
    }
    let w = Rational::integer(p.window);
    let window = Interval::new(Rational::ZERO, w).unwrap();
    let half = Interval::new(Rational::ZERO, w * Rational::new(1, 2)).unwrap();
    let draws: Vec<PoissonDraw> = (0..p.samples)
        .into_par_iter()
        .map(|i| {
            let a = sample_poisson(window, &mut RngSpec::child(p.seed, 1, i).rng());
            let b = sample_poisson(window, &mut RngSpec::child(p.seed, 2, i).rng());
            let t1 = a.t(1).map(|x| x.to_f64());
            let gap = a.t(2).zip(a.t(1)).map(|(y, x)| (y - x).to_f64());
            let superposed = superpose(&a, &b).expect("distinct dyadic draws").config.len() as u64;
            let lower = a.count_in(&half) as u64;
            PoissonDraw { t1, gap, count: a.len() as u64, superposed, halves: (lower, a.len() as u64 - lower) }
        })
        .collect();

    let t1: Vec<f64> = draws.iter().filter_map(|d| d.t1).collect();
    let gaps: Vec<f64> = draws.iter().filter_map(|d| d.gap).collect();
    let counts: Vec<u64> = draws.iter().map(|d| d.count).collect();
    let superposed: Vec<u64> = draws.iter().map(|d| d.superposed).collect();
    let width = p.window as f64;

    let cuts = quartile_cuts(width / 2.0);
    let bin = |c: u64| cuts.iter().position(|&e| c <= e).unwrap_or(cuts.len());
    let mut table = vec![vec![0u64; cuts.len() + 1]; cuts.len() + 1];
    for d in &draws {
        table[bin(d.halves.0)][bin(d.halves.1)] += 1;
    }

    let (seed, alpha) = (p.seed, p.alpha);
    let moments = (1..=5)
        .map(|k| {
            let factorial: f64 = (1..=k).map(f64::from).product();
            let values: Vec<f64> = t1.iter().map(|t| t.powi(k) / factorial).collect();
            mc_mean(&format!("mean_t1_pow{k}_over_fact"), &values, 1.0, 3.0).map(|r| r.with_seed(seed))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut report = PoissonReport {
        params: p.clone(),
        first_atom: named(ks_exponential(&t1)?, "ks_first_atom_exp1", seed, alpha),
        first_gap: named(ks_exponential(&gaps)?, "ks_first_gap_exp1", seed, alpha),
        counts: named(chi2_poisson(&counts, width)?, "chi2_counts_poisson_w", seed, alpha),
        superposition_counts: named(
            chi2_poisson(&superposed, 2.0 * width)?,
            "chi2_superposition_poisson_2w",
            seed,
            alpha,
        ),
        halves_independent: named(chi2_independence("", &table)?, "chi2_disjoint_halves_independent", seed, alpha),
        moments,
        family_alpha: 0.0,
        passed: false,
    };
    let gof = report.goodness_of_fit();
    let passed = family_verdict(&gof, &report.moments.iter().collect::<Vec<_>>(), alpha);
    report.family_alpha = family_alpha(gof.len(), alpha);
    report.passed = passed;
    Ok(report)
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SuspensionParams {
    pub n_max: u32,
    pub ks: Vec<usize>,
    pub p_max: u64,
    pub samples: u64,
    /// Identity checks draw `p, q` uniformly from `1..=max_pq`.
    pub max_pq: u64,
    pub mark_steps: u64,
    pub min_uncensored: u64,
    pub seed: u64,
    pub alpha: f64,
}

impl Default for SuspensionParams {
    fn default() -> Self {
        SuspensionParams {
            n_max: 5,
            ks: vec![1, 2],
            p_max: 10_000,
            samples: 1000,
            max_pq: 20,
            mark_steps: 10,
            min_uncensored: 500,
            seed: 1,
            alpha: crate::stats::DEFAULT_ALPHA,
        }
    }
}

/// Number of exact comparisons made and how many failed.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct ExactTally {
    pub checked: u64,
    pub failures: u64,
    /// Draws skipped because the orbit could not be followed.
    pub skipped: u64,
}

impl ExactTally {
    fn check(&mut self, ok: bool) {
        self.checked += 1;
        if !ok {
            self.failures += 1;
        }
    }

    fn merge(&mut self, other: &ExactTally) {
        self.checked += other.checked;
        self.failures += other.failures;
        self.skipped += other.skipped;
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ConjugacyReport {
    pub k: usize,
    pub censoring: CensorReport,
    pub censored_fraction: f64,
    /// `Φ_k`-split induced advance against `T_*^{N^(k)}`.
    pub conjugacy: ExactTally,
    /// `N^(k)` against the induced return time `M^(k)`.
    pub return_times: ExactTally,
    /// Samples where exactly one of the two sides censored.
    pub censor_disagreements: u64,
    pub mean_return_time: f64,
    pub max_return_time: u64,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct SuspensionReport {
    pub params: SuspensionParams,
    pub conjugacy: Vec<ConjugacyReport>,
    pub psi_cocycle: ExactTally,
    pub phi_cocycle: ExactTally,
    pub mark_censoring: CensorReport,
    pub mark_marginal: TestReport,
    pub mark_pairs: TestReport,
    pub family_alpha: f64,
    pub censoring_exceeded: bool,
    pub passed: bool,
}

impl SuspensionReport {
    pub fn tests(&self) -> Vec<&TestReport> {
        vec![&self.mark_marginal, &self.mark_pairs]
    }
}

#[derive(Default)]
struct KOutcome {
    censoring: CensorReport,
    conjugacy: ExactTally,
    return_times: ExactTally,
    disagreement: u64,
    n: Option<u64>,
}

struct SuspensionDraw {
    per_k: Vec<KOutcome>,
    psi: ExactTally,
    phi: ExactTally,
    marks: Result<Vec<GroupElem>, Censored>,
}

fn conjugacy_outcome(system: &ChaconSystem, config: &crate::suspension::PointConfig, k: usize, p_max: u64) -> KOutcome {
    let mut out = KOutcome::default();
    let direct = return_time_n_k(system, config, k, p_max);
    let induced = distinguish_k(config, k)
        .map_err(|_| Censored::TooFewAtoms { needed: k, got: config.len() })
        .and_then(|split| induced_advance(system, &split, p_max));
    match (&direct, &induced) {
        (Ok(ret), Ok((m, split))) => {
            out.return_times.check(*m == ret.n);
            out.conjugacy.check(recombine(split).as_ref() == Ok(&ret.config));
            out.n = Some(ret.n);
        }
        (Err(_), Err(_)) => {}
        _ => out.disagreement = 1,
    }
    out.censoring.record(&direct);
    out
}

fn identity_checks<R: Rng>(
    system: &ChaconSystem,
    spec: &CocycleSpec,
    config: &crate::suspension::PointConfig,
    max_pq: u64,
    rng: &mut R,
) -> (ExactTally, ExactTally) {
    let (mut psi, mut phi) = (ExactTally::default(), ExactTally::default());
    let p = rng.random_range(1..=max_pq);
    let q = rng.random_range(1..=max_pq);
    match (psi_iter(system, config, p), psi_iter(system, config, p + q)) {
        (Ok(a), Ok(whole)) => match psi_iter(system, &a.config, q) {
            Ok(b) => psi.check(b.perm.after(&a.perm).ok().as_ref() == Some(&whole.perm) && b.config == whole.config),
            Err(_) => psi.failures += 1,
        },
        _ => psi.skipped += 1,
    }
    if config.is_empty() {
        phi.skipped += 1;
        return (psi, phi);
    }
    let x = config.atoms()[rng.random_range(0..config.len())].pos;
    let g = spec.group();
    let pieces = (|| {
        let whole = spec.phi_iter(system, x, p + q).ok()?;
        let first = spec.phi_iter(system, x, p).ok()?;
        let tpx = *system.orbit(x, p as i64).ok()?.last()?;
        let second = spec.phi_iter(system, tpx, q).ok()?;
        Some((whole, g.add(&second, &first)))
    })();
    match pieces {
        Some((whole, split)) => phi.check(whole == split),
        None => phi.skipped += 1,
    }
    (psi, phi)
}

pub fn verify_suspension(p: &SuspensionParams, spec: &CocycleSpec) -> Result<SuspensionReport, VerifyError> {
    if p.samples == 0 || p.max_pq == 0 || p.ks.is_empty() {
        return Err(VerifyError::Invalid("samples, max_pq and ks must be non-empty".into()));
    }
    let system = ChaconSystem::build(p.n_max)?;
    let group = spec.group().clone();
    let draws: Vec<SuspensionDraw> = (0..p.samples)
        .into_par_iter()
        .map(|i| {
            let config = sample_poisson(system.covered(), &mut RngSpec::child(p.seed, 10, i).rng());
            let per_k = p.ks.iter().map(|&k| conjugacy_outcome(&system, &config, k, p.p_max)).collect();
            let (psi, phi) =
                identity_checks(&system, spec, &config, p.max_pq, &mut RngSpec::child(p.seed, 11, i).rng());
            let mut rng = RngSpec::child(p.seed, 12, i).rng();
            let marks: Vec<GroupElem> = (0..config.len()).map(|_| group.sample_haar(&mut rng)).collect();
            let mut marked = MarkedConfig::new(config, marks).expect("one mark per atom");
            let marks = (0..p.mark_steps)
                .try_for_each(|_| {
                    marked = skew_apply_group(&system, spec, &marked)?;
                    Ok(())
                })
                .map(|()| marked.marks().to_vec());
            SuspensionDraw { per_k, psi, phi, marks }
        })
        .collect();

    let mut conjugacy = Vec::new();
    for (j, &k) in p.ks.iter().enumerate() {
        let mut censoring = CensorReport::default();
        let (mut conj, mut rt) = (ExactTally::default(), ExactTally::default());
        let mut disagreements = 0;
        let ns: Vec<u64> = draws.iter().filter_map(|d| d.per_k[j].n).collect();
        for d in &draws {
            let o = &d.per_k[j];
            censoring.merge(&o.censoring);
            conj.merge(&o.conjugacy);
            rt.merge(&o.return_times);
            disagreements += o.disagreement;
        }
        let fraction = censoring.censored_fraction();
        conjugacy.push(ConjugacyReport {
            k,
            censoring,
            censored_fraction: fraction,
            conjugacy: conj,
            return_times: rt,
            censor_disagreements: disagreements,
            mean_return_time: if ns.is_empty() { 0.0 } else { ns.iter().sum::<u64>() as f64 / ns.len() as f64 },
            max_return_time: ns.iter().copied().max().unwrap_or(0),
            passed: conj.failures == 0
                && rt.failures == 0
                && disagreements == 0
                && conj.checked >= p.min_uncensored
                && fraction < CENSOR_THRESHOLD,
        });
    }

    let (mut psi, mut phi) = (ExactTally::default(), ExactTally::default());
    let mut mark_censoring = CensorReport::default();
    let order = group.order() as usize;
    let mut marginal = vec![0u64; order];
    let mut pairs = vec![vec![0u64; order]; order];
    for d in &draws {
        psi.merge(&d.psi);
        phi.merge(&d.phi);
        mark_censoring.record(&d.marks);
        if let Ok(marks) = &d.marks {
            for m in marks {
                marginal[group.index_of(m)] += 1;
            }
            if marks.len() >= 2 {
                pairs[group.index_of(&marks[0])][group.index_of(&marks[1])] += 1;
            }
        }
    }
    let uniform = vec![1.0 / order as f64; order];
    let (mark_marginal, mark_pairs) = if order >= 2 {
        (
            named(chi2_discrete("", &marginal, &uniform)?, "chi2_marks_uniform", p.seed, p.alpha),
            named(chi2_independence("", &pairs)?, "chi2_marks_rank12_independent", p.seed, p.alpha),
        )
    } else {
        let trivial = |name: &str| TestReport::new(name, 0.0, 1.0, mark_censoring.survived).with_seed(p.seed);
        (trivial("chi2_marks_uniform"), trivial("chi2_marks_rank12_independent"))
    };
    let censoring_exceeded = conjugacy.iter().any(|c| c.censored_fraction >= CENSOR_THRESHOLD);
    let passed = conjugacy.iter().all(|c| c.passed)
        && psi.failures == 0
        && phi.failures == 0
        && family_verdict(&[&mark_marginal, &mark_pairs], &[], p.alpha);
    Ok(SuspensionReport {
        params: p.clone(),
        conjugacy,
        psi_cocycle: psi,
        phi_cocycle: phi,
        mark_censoring,
        mark_marginal,
        mark_pairs,
        family_alpha: family_alpha(2, p.alpha),
        censoring_exceeded,
        passed,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct JoiningParams {
    pub window: i128,
    pub samples: u64,
    pub symbols: usize,
    pub omega1_intensity: f64,
    pub seed: u64,
    pub alpha: f64,
    /// The dependence test must reach a p-value below this.
    pub dependence_alpha: f64,
}

impl Default for JoiningParams {
    fn default() -> Self {
        JoiningParams {
            window: 50,
            samples: 10_000,
            symbols: 2,
            omega1_intensity: 1.0,
            seed: 1,
            alpha: crate::stats::DEFAULT_ALPHA,
            dependence_alpha: 1e-3,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Marginal2 {
    pub symbols: TestReport,
    pub adjacent_pairs: TestReport,
}

#[derive(Debug, Clone, Serialize)]
pub struct CopiedFraction {
    pub copied: u64,
    pub eligible: u64,
    pub estimate: f64,
    pub ci99: (f64, f64),
    pub expected: f64,
    pub contains_expected: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct JoiningReport {
    pub params: JoiningParams,
    pub marginal2: Marginal2,
    pub dependence: TestReport,
    pub copied_fraction: CopiedFraction,
    pub excluded_indices: u64,
    pub resamples: u64,
    pub shift_cocycle: ExactTally,
    pub equivariance: ExactTally,
    pub family_alpha: f64,
    pub passed: bool,
}

impl JoiningReport {
    pub fn tests(&self) -> Vec<&TestReport> {
        vec![&self.marginal2.symbols, &self.marginal2.adjacent_pairs, &self.dependence]
    }
}

struct JoiningDraw {
    symbols: Vec<u64>,
    pairs: Vec<Vec<u64>>,
    dependence: Vec<Vec<u64>>,
    copied: u64,
    eligible: u64,
    excluded: u64,
    resamples: u64,
    shift: ExactTally,
    equivariance: ExactTally,
}

fn tabulate(sample: &JoiningSample, symbols: usize) -> JoiningDraw {
    let mut counts = vec![0u64; symbols];
    let mut pairs = vec![vec![0u64; symbols]; symbols];
    let mut dependence = vec![vec![0u64; symbols]; symbols];
    let atoms1 = sample.omega1.config().atoms();
    let atoms2 = sample.omega2.config().atoms();
    for (slot, m) in sample.marks2.iter().enumerate() {
        let Some(m) = m else { continue };
        counts[*m as usize] += 1;
        let next1 = atoms1.partition_point(|a| a.pos < atoms2[slot].pos);
        if next1 < atoms1.len() {
            dependence[sample.marks1[next1] as usize][*m as usize] += 1;
        }
    }
    for j in 0..sample.marks2.len() / 2 {
        if let (Some(a), Some(b)) = (sample.marks2[2 * j], sample.marks2[2 * j + 1]) {
            pairs[a as usize][b as usize] += 1;
        }
    }
    let excluded = sample.excluded() as u64;
    JoiningDraw {
        symbols: counts,
        pairs,
        dependence,
        copied: sample.copied() as u64,
        eligible: sample.marks2.len() as u64 - excluded,
        excluded,
        resamples: 0,
        shift: ExactTally::default(),
        equivariance: ExactTally::default(),
    }
}

fn add_table(acc: &mut [Vec<u64>], t: &[Vec<u64>]) {
    for (a, b) in acc.iter_mut().zip(t) {
        for (x, y) in a.iter_mut().zip(b) {
            *x += y;
        }
    }
}

pub fn verify_joining(p: &JoiningParams) -> Result<JoiningReport, VerifyError> {
    if p.window <= 1 || p.samples == 0 || p.symbols < 2 || p.omega1_intensity.is_nan() || p.omega1_intensity < 0.0 {
        return Err(VerifyError::Invalid("window > 1, samples > 0, symbols >= 2, intensity >= 0".into()));
    }
    let law = MarkLaw::uniform(p.symbols);
    let draws: Vec<JoiningDraw> = (0..p.samples)
        .into_par_iter()
        .map(|i| {
            let s1 = sample_biconfig(p.window, p.omega1_intensity, &mut RngSpec::child(p.seed, 20, i).rng());
            let s2 = sample_biconfig(p.window, 1.0, &mut RngSpec::child(p.seed, 21, i).rng());
            let key = FreshKey { seed: p.seed, sample: i };
            let mut marks_rng = RngSpec::child(p.seed, 22, i).rng();
            let sample =
                couple_marks(&s1.config, &s2.config, &law, &mut marks_rng, key).expect("shared window");
            let mut draw = tabulate(&sample, p.symbols);
            draw.resamples = s1.resamples + s2.resamples;
            for c in [&sample.omega1, &sample.omega2] {
                draw.shift.check(tracked_shift(c) == Some(shift_cocycle(c)));
            }
            let (advanced, _) = advance_joint(&sample);
            let again = couple_with(&advanced.omega1, advanced.marks1.clone(), &advanced.omega2, &law, key)
                .expect("shared window");
            for (slot, prov) in advanced.provenance2.iter().enumerate() {
                if *prov != Provenance::Excluded {
                    draw.equivariance.check(
                        again.provenance2[slot] == *prov && again.marks2[slot] == advanced.marks2[slot],
                    );
                }
            }
            draw
        })
        .collect();

    let k = p.symbols;
    let mut symbols = vec![0u64; k];
    let mut pairs = vec![vec![0u64; k]; k];
    let mut dependence = vec![vec![0u64; k]; k];
    let (mut copied, mut eligible, mut excluded, mut resamples) = (0, 0, 0, 0);
    let (mut shift, mut equivariance) = (ExactTally::default(), ExactTally::default());
    for d in &draws {
        for (a, b) in symbols.iter_mut().zip(&d.symbols) {
            *a += b;
        }
        add_table(&mut pairs, &d.pairs);
        add_table(&mut dependence, &d.dependence);
        copied += d.copied;
        eligible += d.eligible;
        excluded += d.excluded;
        resamples += d.resamples;
        shift.merge(&d.shift);
        equivariance.merge(&d.equivariance);
    }

    let total_pairs: u64 = dependence.iter().flatten().sum();
    let dependence = match chi2_independence("", &dependence) {
        Ok(r) => r,
        Err(StatError::InsufficientData(_)) => TestReport::new("", 0.0, 1.0, total_pairs),
        Err(e) => return Err(e.into()),
    };
    let dependence = named(dependence, "chi2_marks1_marks2_dependence", p.seed, p.dependence_alpha)
        .expecting(Design::Reject);
    let (lo, hi) = wilson_interval(copied, eligible, 2.575_829_303_549);
    let expected = p.omega1_intensity / (p.omega1_intensity + 1.0);
    let marginal2 = Marginal2 {
        symbols: named(chi2_discrete("", &symbols, &law.probs)?, "chi2_marks2_rho", p.seed, p.alpha),
        adjacent_pairs: named(chi2_independence("", &pairs)?, "chi2_marks2_adjacent_independent", p.seed, p.alpha),
    };
    let copied_fraction = CopiedFraction {
        copied,
        eligible,
        estimate: if eligible == 0 { 0.0 } else { copied as f64 / eligible as f64 },
        ci99: (lo, hi),
        expected,
        contains_expected: lo <= expected && expected <= hi,
    };
    let passed = family_verdict(&[&marginal2.symbols, &marginal2.adjacent_pairs], &[&dependence], p.alpha)
        && shift.failures == 0
        && equivariance.failures == 0;
    Ok(JoiningReport {
        params: p.clone(),
        marginal2,
        dependence,
        copied_fraction,
        excluded_indices: excluded,
        resamples,
        shift_cocycle: shift,
        equivariance,
        family_alpha: family_alpha(2, p.alpha),
        passed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_poisson_run_passes_and_is_stable() {
        let p = PoissonParams { samples: 2000, ..PoissonParams::default() };
        let a = verify_poisson(&p).unwrap();
        assert!(a.passed, "{:#?}", a.tests());
        let b = with_workers(1, || verify_poisson(&p)).unwrap().unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    }

    #[test]
    fn small_suspension_run() {
        let spec = CocycleSpec::from_json(BUNDLED_SPEC).unwrap();
        let p = SuspensionParams { n_max: 4, samples: 60, min_uncensored: 10, ..SuspensionParams::default() };
        let r = verify_suspension(&p, &spec).unwrap();
        assert_eq!(r.psi_cocycle.failures + r.phi_cocycle.failures, 0);
        for c in &r.conjugacy {
            assert_eq!(c.conjugacy.failures + c.return_times.failures + c.censor_disagreements, 0);
            assert_eq!(c.censoring.total(), 60);
        }
    }

    #[test]
    fn joining_degenerate_first_intensity_cannot_reject() {
        let p = JoiningParams { samples: 200, window: 10, omega1_intensity: 0.0, ..JoiningParams::default() };
        let r = verify_joining(&p).unwrap();
        assert!(!r.dependence.rejects());
        assert_eq!(r.copied_fraction.copied, 0);
        assert_eq!(r.equivariance.failures, 0);
    }

    #[test]
    fn joining_small_run_rejects_independence() {
        let p = JoiningParams { samples: 300, window: 20, ..JoiningParams::default() };
        let r = verify_joining(&p).unwrap();
        assert!(r.dependence.p_value < 1e-3);
        assert_eq!(r.shift_cocycle.failures, 0);
        assert_eq!(r.equivariance.failures, 0);
    }
}
