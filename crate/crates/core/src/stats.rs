//! Goodness-of-fit and independence tests with asymptotic p-values, and a
//! Monte-Carlo mean check.

use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF, Discrete, DiscreteCDF, Poisson};
use statrs::function::erf::erfc;
use thiserror::Error;

pub const DEFAULT_ALPHA: f64 = 0.01;

#[derive(Debug, Error, PartialEq)]
pub enum StatError {
    #[error("not enough data for {0}")]
    InsufficientData(&'static str),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

/// Whether a test is expected to accept its null or reject it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Design {
    Accept,
    Reject,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TestReport {
    pub name: String,
    pub statistic: f64,
    pub p_value: f64,
    pub n: u64,
    pub seed: Option<u64>,
    pub alpha: f64,
    pub design: Design,
    /// `p >= alpha` when designed to accept, `p < alpha` when designed to reject.
    pub passed: bool,
}

impl TestReport {
    pub fn new(name: impl Into<String>, statistic: f64, p_value: f64, n: u64) -> Self {
        let p_value = p_value.clamp(0.0, 1.0);
        TestReport {
            name: name.into(),
            statistic,
            p_value,
            n,
            seed: None,
            alpha: DEFAULT_ALPHA,
            design: Design::Accept,
            passed: p_value >= DEFAULT_ALPHA,
        }
    }

    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = alpha;
        self.rejudge()
    }

    pub fn expecting(mut self, design: Design) -> Self {
        self.design = design;
        self.rejudge()
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn rejects(&self) -> bool {
        self.p_value < self.alpha
    }

    fn rejudge(mut self) -> Self {
        self.passed = match self.design {
            Design::Accept => !self.rejects(),
            Design::Reject => self.rejects(),
        };
        self
    }
}

/// Limiting Kolmogorov survival function `P(K > lambda)`.
pub fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let k = k as f64;
        let term = (-2.0 * k * k * lambda * lambda).exp();
        sum += if k as u64 % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// One-sample KS statistic `sup |F_n - F|` against a continuous CDF.
pub fn ks_statistic<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> f64 {
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter().enumerate().fold(0.0f64, |d, (i, &x)| {
        let f = cdf(x);
        let above = (i as f64 + 1.0) / n - f;
        let below = f - i as f64 / n;
        d.max(above).max(below)
    })
}

/// One-sample KS test against a continuous CDF, asymptotic p-value with
/// Stephens' small-sample correction.
pub fn ks_test<F: Fn(f64) -> f64>(
    name: &str,
    samples: &[f64],
    cdf: F,
) -> Result<TestReport, StatError> {
    if samples.is_empty() {
        return Err(StatError::InsufficientData("KS test"));
    }
    let d = ks_statistic(samples, cdf);
    let sqrt_n = (samples.len() as f64).sqrt();
    let p = kolmogorov_sf((sqrt_n + 0.12 + 0.11 / sqrt_n) * d);
    Ok(TestReport::new(name, d, p, samples.len() as u64))
}

/// KS test against `Exp(1)`.
pub fn ks_exponential(samples: &[f64]) -> Result<TestReport, StatError> {
    ks_test("ks_exponential", samples, |x| {
        if x <= 0.0 {
            0.0
        } else {
            -(-x).exp_m1()
        }
    })
}

fn chi2_sf(statistic: f64, df: u64) -> f64 {
    ChiSquared::new(df as f64)
        .map(|d| d.sf(statistic))
        .unwrap_or(f64::NAN)
}

/// Pearson goodness of fit of observed category counts to `probs`.
pub fn chi2_discrete(name: &str, counts: &[u64], probs: &[f64]) -> Result<TestReport, StatError> {
    if counts.len() != probs.len() {
        return Err(StatError::InvalidParameter(format!(
            "{} counts for {} categories",
            counts.len(),
            probs.len()
        )));
    }
    let total: u64 = counts.iter().sum();
    if total == 0 || counts.len() < 2 {
        return Err(StatError::InsufficientData("chi-square goodness of fit"));
    }
    let n = total as f64;
    let stat: f64 = counts
        .iter()
        .zip(probs)
        .map(|(&o, &p)| {
            let e = n * p;
            (o as f64 - e).powi(2) / e
        })
        .sum();
    let df = counts.len() as u64 - 1;
    Ok(TestReport::new(name, stat, chi2_sf(stat, df), total))
}

/// Chi-square test that `counts` are i.i.d. Poisson(`mean`). Low and high
/// tails are merged until every bin expects at least 5 observations.
pub fn chi2_poisson(counts: &[u64], mean: f64) -> Result<TestReport, StatError> {
    if !(mean > 0.0 && mean.is_finite()) {
        return Err(StatError::InvalidParameter(format!("mean {mean}")));
    }
    if counts.is_empty() {
        return Err(StatError::InsufficientData("chi2_poisson"));
    }
    let law = Poisson::new(mean).map_err(|e| StatError::InvalidParameter(e.to_string()))?;
    let n = counts.len() as f64;

    // bins are [lo, hi) in k; the last one extends to infinity
    let mut edges = vec![0u64];
    let mut acc = 0.0;
    let mut k = 0u64;
    loop {
        acc += n * law.pmf(k);
        if n * law.sf(k) < 5.0 {
            break;
        }
        if acc >= 5.0 {
            edges.push(k + 1);
            acc = 0.0;
        }
        k += 1;
    }
    if edges.len() > 1 && n * law.sf(edges[edges.len() - 1] - 1) < 5.0 {
        edges.pop();
    }
    let bins = edges.len();
    if bins < 2 {
        return Err(StatError::InsufficientData("chi2_poisson: fewer than two bins"));
    }
    let bin_of = |c: u64| edges.iter().rposition(|&e| c >= e).unwrap();
    let mut observed = vec![0u64; bins];
    for &c in counts {
        observed[bin_of(c)] += 1;
    }
    let expected: Vec<f64> = (0..bins)
        .map(|b| {
            let lo = edges[b];
            let below = if lo == 0 { 0.0 } else { law.cdf(lo - 1) };
            let upto = if b + 1 < bins { law.cdf(edges[b + 1] - 1) } else { 1.0 };
            n * (upto - below)
        })
        .collect();
    let stat: f64 = observed
        .iter()
        .zip(&expected)
        .map(|(&o, &e)| (o as f64 - e).powi(2) / e)
        .sum();
    Ok(TestReport::new("chi2_poisson", stat, chi2_sf(stat, bins as u64 - 1), counts.len() as u64))
}

/// Pearson independence test on a contingency table. Empty rows and
/// columns are dropped first.
pub fn chi2_independence(name: &str, table: &[Vec<u64>]) -> Result<TestReport, StatError> {
    let row_sums: Vec<u64> = table.iter().map(|r| r.iter().sum()).collect();
    let cols = table.first().map_or(0, Vec::len);
    if table.iter().any(|r| r.len() != cols) {
        return Err(StatError::InvalidParameter("ragged contingency table".into()));
    }
    let col_sums: Vec<u64> = (0..cols).map(|j| table.iter().map(|r| r[j]).sum()).collect();
    let rows: Vec<usize> = (0..table.len()).filter(|&i| row_sums[i] > 0).collect();
    let keep: Vec<usize> = (0..cols).filter(|&j| col_sums[j] > 0).collect();
    if rows.len() < 2 || keep.len() < 2 {
        return Err(StatError::InsufficientData("independence test needs a 2x2 table"));
    }
    let total: u64 = row_sums.iter().sum();
    let n = total as f64;
    let mut stat = 0.0;
    for &i in &rows {
        for &j in &keep {
            let e = row_sums[i] as f64 * col_sums[j] as f64 / n;
            stat += (table[i][j] as f64 - e).powi(2) / e;
        }
    }
    let df = ((rows.len() - 1) * (keep.len() - 1)) as u64;
    Ok(TestReport::new(name, stat, chi2_sf(stat, df), total))
}

/// Passes when the sample mean lies within `tol_sigmas` standard errors of
/// `target`. The statistic is the z-score, the p-value its two-sided normal
/// tail.
pub fn mc_mean(name: &str, samples: &[f64], target: f64, tol_sigmas: f64) -> Result<TestReport, StatError> {
    if samples.len() < 2 {
        return Err(StatError::InsufficientData("Monte-Carlo mean"));
    }
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let se = (var / n).sqrt();
    let z = if se > 0.0 { (mean - target) / se } else if mean == target { 0.0 } else { f64::INFINITY };
    let p = erfc(z.abs() / std::f64::consts::SQRT_2);
    let mut report = TestReport::new(name, z, p, samples.len() as u64);
    report.alpha = erfc(tol_sigmas / std::f64::consts::SQRT_2);
    report.passed = z.abs() <= tol_sigmas;
    Ok(report)
}

/// Wilson score interval for a binomial proportion at normal quantile `z`.
pub fn wilson_interval(successes: u64, trials: u64, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let denom = 1.0 + z * z / n;
    let centre = (p + z * z / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z * z / (4.0 * n * n)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Exp};

    fn exp_samples(rate: f64, n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Exp::new(rate).unwrap().sample_iter(&mut rng).take(n).collect()
    }

    #[test]
    fn kolmogorov_sf_reference_points() {
        // tabulated critical values of the limiting distribution
        assert!((kolmogorov_sf(1.3581) - 0.05).abs() < 1e-3);
        assert!((kolmogorov_sf(1.6276) - 0.01).abs() < 1e-3);
        assert_eq!(kolmogorov_sf(0.0), 1.0);
    }

    #[test]
    fn ks_exponential_calibration_triple() {
        let r = ks_exponential(&exp_samples(1.0, 10_000, 1)).unwrap();
        assert!(r.passed, "{r:?}");
        let r = ks_exponential(&exp_samples(2.0, 10_000, 1)).unwrap();
        assert!(r.rejects());
        assert_eq!(ks_exponential(&[]), Err(StatError::InsufficientData("KS test")));
    }

    #[test]
    fn chi2_poisson_calibration_triple() {
        use rand_distr::Poisson as PoissonDist;
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let counts: Vec<u64> = PoissonDist::new(4.0)
            .unwrap()
            .sample_iter(&mut rng)
            .take(10_000)
            .map(|x: f64| x as u64)
            .collect();
        assert!(chi2_poisson(&counts, 4.0).unwrap().passed);
        assert!(chi2_poisson(&counts, 4.5).unwrap().rejects());
        assert!(chi2_poisson(&[], 4.0).is_err());
        assert!(chi2_poisson(&[1, 2], -1.0).is_err());
    }

    #[test]
    fn chi2_independence_cases() {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut table = vec![vec![0u64; 2]; 2];
        for _ in 0..5000 {
            table[rng.random_range(0..2)][rng.random_range(0..2)] += 1;
        }
        assert!(chi2_independence("indep", &table).unwrap().passed);
        let copied = vec![vec![2500, 0], vec![0, 2500]];
        assert!(chi2_independence("copied", &copied).unwrap().rejects());
        assert!(chi2_independence("one", &[vec![7]]).is_err());
    }

    #[test]
    fn mc_mean_moments_of_exponential() {
        let xs = exp_samples(1.0, 10_000, 9);
        assert!(mc_mean("mean", &xs, 1.0, 3.0).unwrap().passed);
        let half_sq: Vec<f64> = xs.iter().map(|x| x * x / 2.0).collect();
        assert!(mc_mean("second", &half_sq, 1.0, 3.0).unwrap().passed);
        assert!(!mc_mean("wrong", &xs, 1.2, 3.0).unwrap().passed);
        assert!(mc_mean("empty", &[], 1.0, 3.0).is_err());
    }

    #[test]
    fn report_design_flips_verdict() {
        let r = TestReport::new("t", 10.0, 1e-5, 100).expecting(Design::Reject);
        assert!(r.passed);
        let r = r.expecting(Design::Accept);
        assert!(!r.passed);
        let r = TestReport::new("t", 0.0, 1.5, 1);
        assert_eq!(r.p_value, 1.0);
    }

    #[test]
    fn wilson_contains_truth() {
        let (lo, hi) = wilson_interval(500, 1000, 2.576);
        assert!(lo < 0.5 && 0.5 < hi);
        assert_eq!(wilson_interval(0, 0, 1.96), (0.0, 1.0));
    }
}
