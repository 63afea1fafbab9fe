//! Command-line front end. Every report is a JSON envelope carrying the tool
//! version and the resolved run configuration; tabular statistics are also
//! written as CSV next to the JSON file.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chacon::{ChaconSystem, SystemExport};
use crate::cocycle::{check_conditions, sufficient_scan_depth, CocycleError, CocycleSpec};
use crate::stats::TestReport;
use crate::verify::{
    verify_joining, verify_poisson, verify_suspension, with_workers, ExactTally, JoiningParams, JoiningReport,
    PoissonParams, PoissonReport, SuspensionParams, SuspensionReport, VerifyError, BUNDLED_SPEC,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_CENSORED: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "chacon-lab", version, about = "Infinite Chacon transformation and Poisson suspension laboratory")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build the towers up to `--n-max` and export them.
    BuildChacon(Flags),
    /// Check conditions (i) and (ii) for a cocycle spec file.
    CheckCocycle(Flags),
    /// Run a verification suite.
    Verify {
        suite: Suite,
        #[command(flatten)]
        flags: Flags,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Poisson,
    Suspension,
    Joining,
    All,
}

/// Flags shared by all commands. Each may also come from the `--config`
/// JSON file, under the same name in snake case; flags win.
#[derive(Debug, Clone, Default, Args, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct Flags {
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub n_max: Option<u32>,
    /// Number of distinguished points; a comma-separated list is accepted.
    #[arg(long, value_delimiter = ',')]
    pub k: Option<Vec<usize>>,
    #[arg(long)]
    pub p_max: Option<u64>,
    #[arg(long)]
    pub window: Option<i128>,
    #[arg(long)]
    pub samples: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub spec: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(long)]
    pub n_scan: Option<u32>,
    #[arg(long)]
    pub m_max: Option<u32>,
    /// Number of mark symbols for the joining suite.
    #[arg(long)]
    pub symbols: Option<usize>,
    #[arg(long)]
    pub omega1_intensity: Option<f64>,
}

impl Flags {
    fn or(self, file: Flags) -> Flags {
        Flags {
            config: self.config,
            n_max: self.n_max.or(file.n_max),
            k: self.k.or(file.k),
            p_max: self.p_max.or(file.p_max),
            window: self.window.or(file.window),
            samples: self.samples.or(file.samples),
            seed: self.seed.or(file.seed),
            alpha: self.alpha.or(file.alpha),
            spec: self.spec.or(file.spec),
            out: self.out.or(file.out),
            workers: self.workers.or(file.workers),
            n_scan: self.n_scan.or(file.n_scan),
            m_max: self.m_max.or(file.m_max),
            symbols: self.symbols.or(file.symbols),
            omega1_intensity: self.omega1_intensity.or(file.omega1_intensity),
        }
    }
}

/// The configuration a report was produced under.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct RunConfig {
    pub command: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub suite: Option<Suite>,
    #[serde(flatten)]
    pub flags: Flags,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error(transparent)]
    Cocycle(#[from] CocycleError),
    #[error(transparent)]
    Verify(#[from] VerifyError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Cocycle(_) => EXIT_USAGE,
            CliError::Verify(VerifyError::Invalid(_)) => EXIT_USAGE,
            _ => EXIT_FAILED,
        }
    }
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    tool: &'static str,
    version: &'static str,
    run_config: &'a RunConfig,
    result: &'a T,
}

/// One row of the CSV written next to a report.
#[derive(Debug, Serialize)]
struct CsvRow {
    suite: String,
    name: String,
    statistic: Option<f64>,
    p_value: Option<f64>,
    n: u64,
    alpha: Option<f64>,
    passed: bool,
}

impl CsvRow {
    fn from_test(suite: &str, t: &TestReport) -> Self {
        CsvRow {
            suite: suite.into(),
            name: t.name.clone(),
            statistic: Some(t.statistic),
            p_value: Some(t.p_value),
            n: t.n,
            alpha: Some(t.alpha),
            passed: t.passed,
        }
    }

    fn from_tally(suite: &str, name: &str, t: &ExactTally) -> Self {
        CsvRow {
            suite: suite.into(),
            name: name.into(),
            statistic: Some(t.failures as f64),
            p_value: None,
            n: t.checked,
            alpha: None,
            passed: t.failures == 0,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io { path: path.to_path_buf(), source }
}

fn write_outputs<T: Serialize, R: Serialize>(
    config: &RunConfig,
    result: &T,
    rows: &[R],
) -> Result<(), CliError> {
    let Some(out) = &config.flags.out else { return Ok(()) };
    let envelope = Envelope { tool: "chacon-lab", version: env!("CARGO_PKG_VERSION"), run_config: config, result };
    let mut text = serde_json::to_string_pretty(&envelope)?;
    text.push('\n');
    fs::write(out, text).map_err(io_err(out))?;
    let csv_path = out.with_extension("csv");
    let mut w = csv::Writer::from_path(&csv_path)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush().map_err(io_err(&csv_path))?;
    Ok(())
}

fn resolve(flags: Flags) -> Result<Flags, CliError> {
    let Some(path) = flags.config.clone() else { return Ok(flags) };
    let text = fs::read_to_string(&path).map_err(io_err(&path))?;
    let file: Flags = serde_json::from_str(&text)
        .map_err(|e| CliError::Usage(format!("config file {}: {e}", path.display())))?;
    Ok(flags.or(file))
}

fn load_spec(flags: &Flags) -> Result<CocycleSpec, CliError> {
    match &flags.spec {
        Some(path) => CocycleSpec::load(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display()))),
        None => Ok(CocycleSpec::from_json(BUNDLED_SPEC)?),
    }
}

#[derive(Serialize)]
struct TowerRow {
    order: u32,
    height: usize,
    level_width: String,
    mass: String,
}

fn build_chacon(flags: Flags) -> Result<i32, CliError> {
    let n_max = flags.n_max.ok_or_else(|| CliError::Usage("build-chacon needs --n-max".into()))?;
    if n_max == 0 {
        return Err(CliError::Usage("--n-max must be at least 1".into()));
    }
    let system = ChaconSystem::build(n_max).map_err(|e| CliError::Usage(e.to_string()))?;
    let rows: Vec<TowerRow> = system
        .towers()
        .iter()
        .map(|t| TowerRow {
            order: t.order(),
            height: t.height(),
            level_width: t.level_width().to_string(),
            mass: t.mass().to_string(),
        })
        .collect();
    println!("{:>5}  {:>10}  {:>14}  {:>14}  {:>10}", "n", "height", "level width", "mass", "mass (f64)");
    for (row, t) in rows.iter().zip(system.towers()) {
        println!(
            "{:>5}  {:>10}  {:>14}  {:>14}  {:>10.4}",
            row.order,
            row.height,
            row.level_width,
            row.mass,
            t.mass().to_f64()
        );
    }
    let config = RunConfig { command: "build-chacon", suite: None, flags };
    write_outputs(&config, &SystemExport::from(&system), &rows)?;
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct SequenceRow {
    n: u32,
    height: u64,
    f: String,
    g1: String,
    g2: String,
}

fn check_cocycle(flags: Flags) -> Result<i32, CliError> {
    if flags.spec.is_none() {
        return Err(CliError::Usage("check-cocycle needs --spec".into()));
    }
    let spec = load_spec(&flags)?;
    let n_scan = flags.n_scan.unwrap_or_else(|| sufficient_scan_depth(&spec));
    let m_max = flags.m_max.unwrap_or(spec.zero_beyond() + 1);
    let report = check_conditions(&spec, n_scan, m_max)?;
    let rows: Vec<SequenceRow> = spec
        .derived_sequence(n_scan)
        .into_iter()
        .map(|s| SequenceRow {
            n: s.n,
            height: s.height,
            f: format!("{:?}", s.f.coords()),
            g1: format!("{:?}", s.g1.coords()),
            g2: format!("{:?}", s.g2.coords()),
        })
        .collect();
    println!("condition (i): {}", if report.condition_i.holds { "holds" } else { "fails" });
    let ii = report.condition_ii.iter().filter(|r| r.holds && r.verified).count();
    println!("condition (ii): verified for {ii} of {} stages (n <= {n_scan}, M <= {m_max})", report.condition_ii.len());
    let config = RunConfig {
        command: "check-cocycle",
        suite: None,
        flags: Flags { n_scan: Some(n_scan), m_max: Some(m_max), ..flags },
    };
    write_outputs(&config, &report, &rows)?;
    Ok(if report.holds { EXIT_OK } else { EXIT_FAILED })
}

#[derive(Debug, Default, Serialize)]
struct VerifyResult {
    #[serde(skip_serializing_if = "Option::is_none")]
    poisson: Option<PoissonReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    suspension: Option<SuspensionReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    joining: Option<JoiningReport>,
    passed: bool,
    censoring_exceeded: bool,
}

fn poisson_params(f: &Flags) -> PoissonParams {
    let d = PoissonParams::default();
    PoissonParams {
        window: f.window.unwrap_or(d.window),
        samples: f.samples.unwrap_or(d.samples),
        seed: f.seed.unwrap_or(d.seed),
        alpha: f.alpha.unwrap_or(d.alpha),
    }
}

fn suspension_params(f: &Flags) -> SuspensionParams {
    let d = SuspensionParams::default();
    SuspensionParams {
        n_max: f.n_max.unwrap_or(d.n_max),
        ks: f.k.clone().unwrap_or(d.ks.clone()),
        p_max: f.p_max.unwrap_or(d.p_max),
        samples: f.samples.unwrap_or(d.samples),
        seed: f.seed.unwrap_or(d.seed),
        alpha: f.alpha.unwrap_or(d.alpha),
        ..d
    }
}

fn joining_params(f: &Flags) -> JoiningParams {
    let d = JoiningParams::default();
    JoiningParams {
        window: f.window.unwrap_or(d.window),
        samples: f.samples.unwrap_or(d.samples),
        symbols: f.symbols.unwrap_or(d.symbols),
        omega1_intensity: f.omega1_intensity.unwrap_or(d.omega1_intensity),
        seed: f.seed.unwrap_or(d.seed),
        alpha: f.alpha.unwrap_or(d.alpha),
        ..d
    }
}

fn run_suites(suite: Suite, flags: &Flags) -> Result<VerifyResult, CliError> {
    let wants = |s: Suite| suite == s || suite == Suite::All;
    if flags.n_max == Some(0) {
        return Err(CliError::Usage("--n-max must be at least 1".into()));
    }
    let mut result = VerifyResult::default();
    if wants(Suite::Poisson) {
        result.poisson = Some(verify_poisson(&poisson_params(flags))?);
    }
    if wants(Suite::Suspension) {
        let spec = load_spec(flags)?;
        result.suspension = Some(verify_suspension(&suspension_params(flags), &spec)?);
    }
    if wants(Suite::Joining) {
        result.joining = Some(verify_joining(&joining_params(flags))?);
    }
    result.passed = result.poisson.as_ref().is_none_or(|r| r.passed)
        && result.suspension.as_ref().is_none_or(|r| r.passed)
        && result.joining.as_ref().is_none_or(|r| r.passed);
    result.censoring_exceeded = result.suspension.as_ref().is_some_and(|r| r.censoring_exceeded);
    Ok(result)
}

fn verify_rows(result: &VerifyResult) -> Vec<CsvRow> {
    let mut rows = Vec::new();
    if let Some(r) = &result.poisson {
        rows.extend(r.tests().into_iter().map(|t| CsvRow::from_test("poisson", t)));
    }
    if let Some(r) = &result.suspension {
        for c in &r.conjugacy {
            rows.push(CsvRow::from_tally("suspension", &format!("conjugacy_k{}", c.k), &c.conjugacy));
            rows.push(CsvRow::from_tally("suspension", &format!("return_time_k{}", c.k), &c.return_times));
            rows.push(CsvRow {
                suite: "suspension".into(),
                name: format!("censored_fraction_k{}", c.k),
                statistic: Some(c.censored_fraction),
                p_value: None,
                n: c.censoring.total(),
                alpha: None,
                passed: c.censored_fraction < crate::verify::CENSOR_THRESHOLD,
            });
        }
        rows.push(CsvRow::from_tally("suspension", "psi_cocycle", &r.psi_cocycle));
        rows.push(CsvRow::from_tally("suspension", "phi_cocycle", &r.phi_cocycle));
        rows.extend(r.tests().into_iter().map(|t| CsvRow::from_test("suspension", t)));
    }
    if let Some(r) = &result.joining {
        rows.extend(r.tests().into_iter().map(|t| CsvRow::from_test("joining", t)));
        rows.push(CsvRow::from_tally("joining", "shift_cocycle", &r.shift_cocycle));
        rows.push(CsvRow::from_tally("joining", "equivariance", &r.equivariance));
    }
    rows
}

fn verify(suite: Suite, flags: Flags) -> Result<i32, CliError> {
    let workers = flags.workers.unwrap_or(0);
    let result = with_workers(workers, || run_suites(suite, &flags))??;
    let rows = verify_rows(&result);
    for row in &rows {
        println!(
            "{:<10} {:<36} {:>5}  stat={:<12} p={}",
            row.suite,
            row.name,
            if row.passed { "PASS" } else { "FAIL" },
            row.statistic.map_or("-".into(), |s| format!("{s:.6}")),
            row.p_value.map_or("-".into(), |p| format!("{p:.3e}")),
        );
    }
    let config = RunConfig { command: "verify", suite: Some(suite), flags };
    write_outputs(&config, &result, &rows)?;
    Ok(if result.censoring_exceeded {
        EXIT_CENSORED
    } else if result.passed {
        EXIT_OK
    } else {
        EXIT_FAILED
    })
}

pub fn run(cli: Cli) -> Result<i32, CliError> {
    match cli.command {
        Command::BuildChacon(flags) => build_chacon(resolve(flags)?),
        Command::CheckCocycle(flags) => check_cocycle(resolve(flags)?),
        Command::Verify { suite, flags } => verify(suite, resolve(flags)?),
    }
}

/// Parse `args` and run, returning the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
