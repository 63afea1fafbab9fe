//! Group-valued cocycles over the Chacon towers that are constant on levels,
//! and exact checks of the ergodicity and infinite-ergodic-index conditions
//! of the associated compact extension.
//!
//! A cocycle is fixed by its value on the first tower and by the value
//! assigned to each spacer. Only finitely many stages may carry nonzero
//! spacer values; past the declared stage `N` everything is zero, which is
//! what makes both conditions decidable by a finite scan.

use std::path::Path;

use num_bigint::BigInt;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chacon::{tower_height, ChaconSystem, LevelOrigin};
use crate::dynamics::StepError;
use crate::group::{FinAbGroup, GroupElem, GroupError};
use crate::lattice;
use crate::rational::Rational;

#[derive(Debug, Error)]
pub enum CocycleError {
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error("stage {stage}: expected {expected} right-column spacer values, got {got}")]
    RightColumnLength { stage: u32, expected: usize, got: usize },
    #[error("stage {stage} is outside 1..={zero_beyond}")]
    StageOutOfRange { stage: u32, zero_beyond: u32 },
    #[error("stage {0} listed twice")]
    DuplicateStage(u32),
    #[error("scan bound {got} must be at least {needed}")]
    ScanTooShallow { needed: u32, got: u32 },
    #[error("condition (ii) is stated for n >= 1")]
    ZeroStage,
    #[error(transparent)]
    Step(#[from] StepError),
    #[error("cannot read spec: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed spec: {0}")]
    Json(#[from] serde_json::Error),
}

/// Spacer values added while building tower `n + 1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StageValues {
    pub middle: GroupElem,
    pub right: Vec<GroupElem>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CocycleSpec {
    group: FinAbGroup,
    base_value: GroupElem,
    // stages[n - 1] for n in 1..=zero_beyond
    stages: Vec<StageValues>,
}

/// One row of the derived sequence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StageSummary {
    pub n: u32,
    pub height: u64,
    /// Sum of the cocycle over all levels of tower `n`.
    pub f: GroupElem,
    /// Value on the middle-column spacer of stage `n`.
    pub g1: GroupElem,
    /// Sum over the right-column spacers of stage `n`.
    pub g2: GroupElem,
}

/// Which spacer of a stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpacerSlot {
    Middle,
    Right(usize),
}

impl CocycleSpec {
    /// The zero cocycle.
    pub fn zero(group: FinAbGroup) -> Self {
        CocycleSpec {
            base_value: group.zero(),
            group,
            stages: Vec::new(),
        }
    }

    /// `stages[i]` holds the values of stage `i + 1`; stages after the last
    /// entry are zero.
    pub fn new(
        group: FinAbGroup,
        base_value: GroupElem,
        stages: Vec<StageValues>,
    ) -> Result<Self, CocycleError> {
        group.check(&base_value)?;
        for (i, stage) in stages.iter().enumerate() {
            let n = i as u32 + 1;
            let expected = 3 * tower_height(n) as usize + 1;
            if stage.right.len() != expected {
                return Err(CocycleError::RightColumnLength {
                    stage: n,
                    expected,
                    got: stage.right.len(),
                });
            }
            group.check(&stage.middle)?;
            for g in &stage.right {
                group.check(g)?;
            }
        }
        Ok(CocycleSpec {
            group,
            base_value,
            stages,
        })
    }

    /// `value` on a single spacer of `stage`, zero elsewhere.
    pub fn indicator(
        group: FinAbGroup,
        value: GroupElem,
        stage: u32,
        slot: SpacerSlot,
    ) -> Result<Self, CocycleError> {
        group.check(&value)?;
        if stage == 0 {
            return Err(CocycleError::StageOutOfRange {
                stage,
                zero_beyond: 0,
            });
        }
        let mut stages: Vec<StageValues> = (1..=stage)
            .map(|n| StageValues {
                middle: group.zero(),
                right: vec![group.zero(); 3 * tower_height(n) as usize + 1],
            })
            .collect();
        let last = stages.last_mut().unwrap();
        match slot {
            SpacerSlot::Middle => last.middle = value,
            SpacerSlot::Right(i) => {
                let expected = last.right.len();
                let cell = last.right.get_mut(i).ok_or(CocycleError::RightColumnLength {
                    stage,
                    expected,
                    got: i + 1,
                })?;
                *cell = value;
            }
        }
        let base = group.zero();
        CocycleSpec::new(group, base, stages)
    }

    pub fn group(&self) -> &FinAbGroup {
        &self.group
    }

    pub fn base_value(&self) -> &GroupElem {
        &self.base_value
    }

    /// Last stage that may carry a nonzero spacer value.
    pub fn zero_beyond(&self) -> u32 {
        self.stages.len() as u32
    }

    pub fn stage(&self, n: u32) -> Option<&StageValues> {
        n.checked_sub(1).and_then(|i| self.stages.get(i as usize))
    }

    pub fn g1(&self, n: u32) -> GroupElem {
        self.stage(n)
            .map(|s| s.middle.clone())
            .unwrap_or_else(|| self.group.zero())
    }

    pub fn g2(&self, n: u32) -> GroupElem {
        self.stage(n)
            .map(|s| self.group.sum(&s.right))
            .unwrap_or_else(|| self.group.zero())
    }

    /// `(h_n, f_n, g_{n,1}, g_{n,2})` for `n = 1..=n_max`.
    pub fn derived_sequence(&self, n_max: u32) -> Vec<StageSummary> {
        let g = &self.group;
        let mut out = Vec::with_capacity(n_max as usize);
        let mut f = self.base_value.clone();
        for n in 1..=n_max {
            let (g1, g2) = (self.g1(n), self.g2(n));
            let next = g.add(&g.add(&g.scale(3, &f), &g1), &g2);
            out.push(StageSummary {
                n,
                height: tower_height(n),
                f,
                g1,
                g2,
            });
            f = next;
        }
        out
    }

    pub fn value_of(&self, origin: LevelOrigin) -> GroupElem {
        match origin {
            LevelOrigin::Base => self.base_value.clone(),
            LevelOrigin::MiddleSpacer { stage } => self.g1(stage),
            LevelOrigin::RightSpacer { stage, index } => self
                .stage(stage)
                .map(|s| s.right[index].clone())
                .unwrap_or_else(|| self.group.zero()),
        }
    }

    /// `phi(x)`: the value of the level containing `x`.
    pub fn eval_phi(&self, system: &ChaconSystem, x: Rational) -> Result<GroupElem, StepError> {
        Ok(self.value_of(system.origin(x)?))
    }

    /// `phi(T^{p-1} x) + ... + phi(x)`.
    pub fn phi_iter(
        &self,
        system: &ChaconSystem,
        x: Rational,
        p: u64,
    ) -> Result<GroupElem, StepError> {
        let mut acc = self.group.zero();
        let mut cur = x;
        for i in 0..p {
            acc = self.group.add(&acc, &self.eval_phi(system, cur)?);
            if i + 1 < p {
                cur = system.apply_t(cur)?;
            }
        }
        Ok(acc)
    }

    pub fn from_json(text: &str) -> Result<Self, CocycleError> {
        let file: SpecFile = serde_json::from_str(text)?;
        file.try_into()
    }

    pub fn load(path: &Path) -> Result<Self, CocycleError> {
        CocycleSpec::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_file(&self) -> SpecFile {
        SpecFile {
            group: self.group.clone(),
            base_value: self.base_value.coords().to_vec(),
            stages: self
                .stages
                .iter()
                .enumerate()
                .map(|(i, s)| StageFile {
                    n: i as u32 + 1,
                    middle: s.middle.coords().to_vec(),
                    right: s.right.iter().map(|g| g.coords().to_vec()).collect(),
                })
                .collect(),
            zero_beyond: self.zero_beyond(),
        }
    }
}

/// On-disk form of a cocycle specification.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpecFile {
    pub group: FinAbGroup,
    pub base_value: Vec<u64>,
    #[serde(default)]
    pub stages: Vec<StageFile>,
    pub zero_beyond: u32,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StageFile {
    pub n: u32,
    pub middle: Vec<u64>,
    pub right: Vec<Vec<u64>>,
}

fn to_elem(group: &FinAbGroup, coords: &[u64]) -> Result<GroupElem, GroupError> {
    let signed: Vec<i64> = coords.iter().map(|&c| c as i64).collect();
    group.elem(&signed)
}

impl TryFrom<SpecFile> for CocycleSpec {
    type Error = CocycleError;

    fn try_from(file: SpecFile) -> Result<Self, CocycleError> {
        let group = file.group;
        let n_stages = file.zero_beyond;
        let mut stages: Vec<Option<StageValues>> = vec![None; n_stages as usize];
        for s in file.stages {
            if s.n == 0 || s.n > n_stages {
                return Err(CocycleError::StageOutOfRange {
                    stage: s.n,
                    zero_beyond: n_stages,
                });
            }
            let slot = &mut stages[s.n as usize - 1];
            if slot.is_some() {
                return Err(CocycleError::DuplicateStage(s.n));
            }
            *slot = Some(StageValues {
                middle: to_elem(&group, &s.middle)?,
                right: s
                    .right
                    .iter()
                    .map(|c| to_elem(&group, c))
                    .collect::<Result<_, _>>()?,
            });
        }
        let stages = stages
            .into_iter()
            .enumerate()
            .map(|(i, s)| {
                s.unwrap_or_else(|| StageValues {
                    middle: group.zero(),
                    right: vec![group.zero(); 3 * tower_height(i as u32 + 1) as usize + 1],
                })
            })
            .collect();
        let base = to_elem(&group, &file.base_value)?;
        CocycleSpec::new(group, base, stages)
    }
}

fn bigints_as_strings<S: serde::Serializer>(xs: &[BigInt], s: S) -> Result<S::Ok, S::Error> {
    s.collect_seq(xs.iter().map(|x| x.to_string()))
}

fn opt_bigints_as_strings<S: serde::Serializer>(
    xs: &Option<Vec<BigInt>>,
    s: S,
) -> Result<S::Ok, S::Error> {
    match xs {
        Some(v) => bigints_as_strings(v, s),
        None => s.serialize_none(),
    }
}

/// An element of `Z x G`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct IntGroupPair {
    pub int: i128,
    pub elem: GroupElem,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Membership {
    pub member: bool,
    /// Coefficients on the generators, when `member`.
    #[serde(serialize_with = "opt_bigints_as_strings")]
    pub certificate: Option<Vec<BigInt>>,
}

/// Decides whether `target` lies in the subgroup of `Z x G` generated by
/// `generators`, lifting `G` to `Z^m / diag(d) Z^m`.
pub fn span_membership(
    target: &IntGroupPair,
    generators: &[IntGroupPair],
    group: &FinAbGroup,
) -> Membership {
    let rows = 1 + group.rank();
    let cols = generators.len() + group.rank();
    let mut a: lattice::Matrix = vec![vec![BigInt::from(0); cols]; rows];
    for (j, g) in generators.iter().enumerate() {
        a[0][j] = BigInt::from(g.int);
        for (i, &c) in g.elem.coords().iter().enumerate() {
            a[1 + i][j] = BigInt::from(c);
        }
    }
    for (i, &d) in group.invariant_factors().iter().enumerate() {
        a[1 + i][generators.len() + i] = BigInt::from(d);
    }
    let mut b = vec![BigInt::from(target.int)];
    b.extend(target.elem.coords().iter().map(|&c| BigInt::from(c)));
    match lattice::solve(&a, cols, &b) {
        Some(mut x) => {
            x.truncate(generators.len());
            Membership {
                member: true,
                certificate: Some(x),
            }
        }
        None => Membership {
            member: false,
            certificate: None,
        },
    }
}

/// Recombines generators with integer coefficients.
pub fn recombine(
    generators: &[IntGroupPair],
    coefficients: &[BigInt],
    group: &FinAbGroup,
) -> IntGroupPair {
    let mut int = BigInt::from(0);
    let mut elem = group.zero();
    for (g, c) in generators.iter().zip(coefficients) {
        int += c * BigInt::from(g.int);
        let d = BigInt::from(group.exponent().max(1));
        let k = ((c % &d) + &d) % &d;
        let k: i128 = k.try_into().expect("reduced coefficient fits");
        elem = group.add(&elem, &group.scale(k, &g.elem));
    }
    IntGroupPair {
        int: int.try_into().expect("recombined integer part overflows i128"),
        elem,
    }
}

pub fn certificate_verifies(
    target: &IntGroupPair,
    generators: &[IntGroupPair],
    certificate: &[BigInt],
    group: &FinAbGroup,
) -> bool {
    certificate.len() == generators.len() && recombine(generators, certificate, group) == *target
}

fn multiplicative_order(base: u64, modulus: u64) -> u64 {
    if modulus <= 1 {
        return 1;
    }
    let mut x = base % modulus;
    let mut k = 1;
    while x != 1 {
        x = x * base % modulus;
        k += 1;
    }
    k
}

/// A scan depth after which the generators of condition (i) repeat.
///
/// Past stage `N` the sums satisfy `f_{n+1} = 3 f_n`. Writing the exponent
/// of `G` as `3^v e'` with `3 ∤ e'`, the orbit of `f ↦ 3f` enters a cycle
/// after `v` steps, of length dividing the order of 3 mod `e'`.
pub fn sufficient_scan_depth(spec: &CocycleSpec) -> u32 {
    let mut e = spec.group.exponent();
    let mut v = 0;
    while e.is_multiple_of(3) {
        e /= 3;
        v += 1;
    }
    spec.zero_beyond() + 1 + v + multiplicative_order(3, e) as u32
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FoundGenerator {
    pub n: u32,
    /// `"f"` for `f_n`, `"2f+g1"` for `2 f_n + g_{n,1}`.
    pub kind: &'static str,
    pub elem: GroupElem,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConditionIReport {
    pub holds: bool,
    pub n_scan: u32,
    pub sufficient_scan: u32,
    pub generators_found: Vec<FoundGenerator>,
    /// For each standard generator of `G`, coefficients on
    /// `generators_found` reproducing it, or `None` if it is not reached.
    pub basis_certificates: Vec<Membership>,
}

/// Whether `{f_n, 2 f_n + g_{n,1} : n <= n_scan}` generates `G`.
pub fn check_condition_i(spec: &CocycleSpec, n_scan: u32) -> Result<ConditionIReport, CocycleError> {
    let needed = spec.zero_beyond() + 1;
    if n_scan < needed {
        return Err(CocycleError::ScanTooShallow { needed, got: n_scan });
    }
    let g = &spec.group;
    let mut found: Vec<FoundGenerator> = Vec::new();
    for row in spec.derived_sequence(n_scan) {
        let second = g.add(&g.scale(2, &row.f), &row.g1);
        for (kind, elem) in [("f", row.f), ("2f+g1", second)] {
            if !g.is_zero(&elem) && !found.iter().any(|x| x.elem == elem) {
                found.push(FoundGenerator { n: row.n, kind, elem });
            }
        }
    }
    let lifted: Vec<IntGroupPair> = found
        .iter()
        .map(|x| IntGroupPair { int: 0, elem: x.elem.clone() })
        .collect();
    let basis_certificates: Vec<Membership> = (0..g.rank())
        .map(|i| {
            let target = IntGroupPair { int: 0, elem: g.basis(i) };
            span_membership(&target, &lifted, g)
        })
        .collect();
    Ok(ConditionIReport {
        holds: basis_certificates.iter().all(|m| m.member),
        n_scan,
        sufficient_scan: sufficient_scan_depth(spec),
        generators_found: found,
        basis_certificates,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ConditionIIReport {
    pub n: u32,
    pub m_max: u32,
    pub holds: bool,
    pub verified: bool,
    pub generators: Vec<IntGroupPair>,
    #[serde(serialize_with = "opt_bigints_as_strings")]
    pub certificate: Option<Vec<BigInt>>,
}

/// The generator set of condition (ii) at stage `n`, truncated at `m_max`.
pub fn condition_ii_generators(spec: &CocycleSpec, n: u32, m_max: u32) -> Vec<IntGroupPair> {
    let g = &spec.group;
    let seq = spec.derived_sequence(n.max(m_max + 1));
    let row = &seq[n as usize - 1];
    let h = row.height as i128;
    let mut gens = vec![
        IntGroupPair { int: h, elem: row.f.clone() },
        IntGroupPair { int: h + 1, elem: g.add(&row.f, &row.g1) },
    ];
    for m in 1..=m_max {
        let hm = seq[m as usize - 1].height as i128;
        let g2 = spec.g2(m);
        gens.push(IntGroupPair { int: 3 * hm + 1, elem: g2.clone() });
        gens.push(IntGroupPair { int: 3 * hm + 2, elem: g.add(&spec.g1(m + 1), &g2) });
    }
    gens
}

/// Whether `(1, 0_G)` is in the integer span of the stage-`n` generators.
///
/// Truncating the union at `m_max >= N + 1` loses nothing: at `M = N + 1`
/// the two extra generators are `(3h_M + 1, 0)` and `(3h_M + 2, 0)`, whose
/// difference is already `(1, 0_G)`.
pub fn check_condition_ii(
    spec: &CocycleSpec,
    n: u32,
    m_max: u32,
) -> Result<ConditionIIReport, CocycleError> {
    if n == 0 {
        return Err(CocycleError::ZeroStage);
    }
    let needed = spec.zero_beyond() + 1;
    if m_max < needed {
        return Err(CocycleError::ScanTooShallow { needed, got: m_max });
    }
    let generators = condition_ii_generators(spec, n, m_max);
    let target = IntGroupPair { int: 1, elem: spec.group.zero() };
    let m = span_membership(&target, &generators, &spec.group);
    let verified = m
        .certificate
        .as_ref()
        .is_some_and(|c| certificate_verifies(&target, &generators, c, &spec.group));
    Ok(ConditionIIReport {
        n,
        m_max,
        holds: m.member,
        verified,
        generators,
        certificate: m.certificate,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct CocycleReport {
    pub holds: bool,
    pub condition_i: ConditionIReport,
    pub condition_ii: Vec<ConditionIIReport>,
}

/// Both conditions, (ii) checked separately for every `n <= n_scan`.
pub fn check_conditions(
    spec: &CocycleSpec,
    n_scan: u32,
    m_max: u32,
) -> Result<CocycleReport, CocycleError> {
    let condition_i = check_condition_i(spec, n_scan)?;
    let condition_ii = (1..=n_scan)
        .map(|n| check_condition_ii(spec, n, m_max))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(CocycleReport {
        holds: condition_i.holds && condition_ii.iter().all(|r| r.holds && r.verified),
        condition_i,
        condition_ii,
    })
}
