//! Command-line front end: configuration loading, scenario dispatch, output
//! files and the `check` invariant suites.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{parse_config, Backend, ScenarioConfig};
use crate::error::{Error, Result};
use crate::experiments::{run_picture_equivalence, run_scenario, Scenario, ORACLE_IDENTITY_TOL};
use crate::fock::{bare_ladders, build_ladders, commutator_identity_check, h0_spectrum_check, LadderSet, SpectrumReport};
use crate::linalg::{c, CMatrix, C64};
use crate::modes::{build_catalog, BasisCatalog, ModeLabel, MomentumGrid, Spin};
use crate::observables::{divj_oracle, divj_profile, drho_dt_oracle, drho_dt_profile, SpatialGrid};
use crate::report::{format_number, Report};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

pub const CAR_TOL: f64 = 1e-12;
pub const COMMUTATOR_TOL: f64 = 1e-12;
pub const COMMUTATOR_SAMPLES: usize = 20;
pub const COMMUTATOR_MODES: usize = 6;

#[derive(Debug, Parser)]
#[command(name = "diracsim", version, about = "Quantized Dirac field in a classical potential on a truncated plane-wave basis")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the invariant suites and print a pass/fail table.
    Check,
    /// Free evolution of a two-mode superposition against closed forms.
    Baseline(RunArgs),
    /// Densities and currents under gauge-related potentials, per cutoff.
    GaugeHeisenberg(RunArgs),
    /// Schrödinger-picture energy scan over the gauge strength `f`.
    GaugeSchrodinger(RunArgs),
    /// Heisenberg-picture energy scan over the gauge strength `f`.
    EnergyHeisenberg(RunArgs),
    /// Schrödinger against Heisenberg expectations under random drives.
    Equivalence(RunArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BackendArg {
    Fock,
    Gaussian,
    Both,
}

impl From<BackendArg> for Backend {
    fn from(b: BackendArg) -> Self {
        match b {
            BackendArg::Fock => Backend::Fock,
            BackendArg::Gaussian => Backend::Gaussian,
            BackendArg::Both => Backend::Both,
        }
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    /// Configuration file (`key = value` lines); defaults apply without one.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Directory receiving `<scenario>_series.csv` and `<scenario>_report.json`.
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
    /// Seed for the random drives; overrides `seed` in the config.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Backend; overrides `backend` in the config.
    #[arg(long, value_enum)]
    pub backend: Option<BackendArg>,
    /// Comma-separated cutoff scan, e.g. `2,3,4`.
    #[arg(long, value_delimiter = ',')]
    pub cutoffs: Option<Vec<i32>>,
    /// Print every check, not only the summary.
    #[arg(short, long)]
    pub verbose: bool,
}

/// A scenario configuration with command-line overrides applied.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub scenario: ScenarioConfig,
    pub out_dir: PathBuf,
    pub verbose: bool,
}

pub fn load_run_config(args: &RunArgs) -> Result<RunConfig> {
    let mut scenario = match &args.config {
        Some(path) => parse_config(path)?,
        None => ScenarioConfig::default(),
    };
    if let Some(seed) = args.seed {
        scenario.seed = seed;
    }
    if let Some(backend) = args.backend {
        scenario.backend = backend.into();
    }
    if let Some(cutoffs) = &args.cutoffs {
        scenario.cutoffs = cutoffs.clone();
    }
    scenario.validate()?;
    Ok(RunConfig { scenario, out_dir: args.out_dir.clone(), verbose: args.verbose })
}

/// Runs a scenario and writes its CSV and JSON files.
pub fn cmd_run(scenario: Scenario, run: &RunConfig) -> Result<(Report, PathBuf, PathBuf)> {
    let report = run_scenario(scenario, &run.scenario)?;
    let (csv, json) = report.write(&run.out_dir)?;
    Ok((report, csv, json))
}

pub fn report_summary(report: &Report, verbose: bool) -> String {
    let mut out = String::new();
    for check in report.checks.iter().filter(|c| verbose || !c.passed) {
        let op = match check.comparison {
            crate::report::Comparison::AtMost => "<=",
            crate::report::Comparison::AtLeast => ">=",
        };
        let _ = writeln!(
            out,
            "{:<6} {:<28} {} = {} {op} {}",
            if check.passed { "pass" } else { "FAIL" },
            check.name,
            check.metric,
            format_number(check.value.0),
            format_number(check.tolerance.0)
        );
    }
    let failed = report.checks.iter().filter(|c| !c.passed).count();
    let _ = writeln!(out, "{}: {} of {} checks passed", report.scenario, report.checks.len() - failed, report.checks.len());
    out
}

/// Result of one invariant suite.
#[derive(Debug, Clone, PartialEq)]
pub struct SuiteResult {
    pub name: String,
    pub residual: f64,
    pub tolerance: f64,
    pub passed: bool,
    pub seconds: f64,
}

impl SuiteResult {
    fn at_most(name: &str, residual: f64, tolerance: f64, started: Instant) -> Self {
        Self { name: name.into(), residual, tolerance, passed: residual <= tolerance, seconds: started.elapsed().as_secs_f64() }
    }
}

fn catalog_window(n_min: i32, n_max: i32) -> Result<BasisCatalog> {
    build_catalog(&MomentumGrid::window(2.0 * std::f64::consts::PI, 1, n_min, n_max)?, 1.0)
}

/// Anticommutation residuals at M = 8 and M = 12 for ladders made by
/// `builder`.
pub fn car_suite(builder: fn(&BasisCatalog) -> Result<LadderSet>) -> Result<SuiteResult> {
    let started = Instant::now();
    let mut worst = 0.0f64;
    for (n_min, n_max) in [(0, 1), (-1, 1)] {
        worst = worst.max(builder(&catalog_window(n_min, n_max)?)?.car_residual());
    }
    Ok(SuiteResult::at_most("car", worst, CAR_TOL, started))
}

/// Exact diagonalization of the free-field energy operator at M = 4 and
/// M = 8.
pub fn spectrum_suite() -> Result<SuiteResult> {
    let started = Instant::now();
    let mut worst = 0.0f64;
    for (n_min, n_max) in [(0, 0), (0, 1)] {
        let catalog = catalog_window(n_min, n_max)?;
        worst = worst.max(h0_spectrum_check(&build_ladders(&catalog)?, &catalog)?.residual());
    }
    Ok(SuiteResult::at_most("spectrum", worst, SpectrumReport::TOL, started))
}

pub fn random_hermitian(m: usize, rng: &mut ChaCha8Rng) -> CMatrix {
    let a = CMatrix::from_fn(m, m, |_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
    (&a + a.adjoint()) * c(0.5)
}

/// `[H, c_i] = -sum_j h_ij c_j` for random hermitian `h` on six modes.
pub fn commutator_suite(seed: u64) -> Result<SuiteResult> {
    let started = Instant::now();
    let ladders = bare_ladders(COMMUTATOR_MODES)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..COMMUTATOR_SAMPLES {
        worst = worst.max(commutator_identity_check(&random_hermitian(COMMUTATOR_MODES, &mut rng), &ladders)?);
    }
    Ok(SuiteResult::at_most("commutator", worst, COMMUTATOR_TOL, started))
}

/// The two closed forms satisfy continuity pointwise, and their Fourier
/// profiles reproduce them, for several mode pairs.
pub fn oracle_suite() -> Result<SuiteResult> {
    let started = Instant::now();
    let grid = MomentumGrid::new(2.0 * std::f64::consts::PI, 1, 2)?;
    let catalog = build_catalog(&grid, 1.0)?;
    let space = SpatialGrid::for_grid(&grid);
    let pairs = [
        (ModeLabel::electron(Spin::Up, [0, 0, 0]), ModeLabel::electron(Spin::Up, [0, 0, 1])),
        (ModeLabel::electron(Spin::Up, [0, 0, -1]), ModeLabel::electron(Spin::Down, [0, 0, 2])),
        (ModeLabel::electron(Spin::Down, [0, 0, 1]), ModeLabel::electron(Spin::Down, [0, 0, -2])),
    ];
    let mut worst = 0.0f64;
    for (l1, l2) in pairs {
        let a = catalog.mode(catalog.index_of(&l1)?);
        let b = catalog.mode(catalog.index_of(&l2)?);
        for t in [0.0, 0.37, 1.0, 2.5] {
            let drho = drho_dt_profile(t, a, b, 1.0)?;
            let divj = divj_profile(t, a, b, 1.0)?;
            for x in space.points() {
                let r = drho_dt_oracle(*x, t, a, b, 1.0, grid.volume())?;
                let d = divj_oracle(*x, t, a, b, 1.0, grid.volume())?;
                worst = worst.max((r + d).abs()).max((drho.value_at(*x) - r).abs()).max((divj.value_at(*x) - d).abs());
            }
        }
    }
    Ok(SuiteResult::at_most("oracle", worst, ORACLE_IDENTITY_TOL, started))
}

/// The `equivalence` scenario on eight modes with its default drives.
pub fn equivalence_suite() -> Result<SuiteResult> {
    let started = Instant::now();
    let cfg = ScenarioConfig { fock_n_min: Some(0), fock_n_max: 1, ..ScenarioConfig::default() };
    let report = run_picture_equivalence(&cfg)?;
    let check = report.find_check("picture_equivalence").expect("equivalence always checks the deviation");
    let mut result = SuiteResult::at_most("equivalence", check.value.0, check.tolerance.0, started);
    result.passed = report.passed();
    Ok(result)
}

pub fn run_check_suites() -> Vec<(String, Result<SuiteResult>)> {
    vec![
        ("car".into(), car_suite(build_ladders)),
        ("spectrum".into(), spectrum_suite()),
        ("commutator".into(), commutator_suite(0)),
        ("oracle".into(), oracle_suite()),
        ("equivalence".into(), equivalence_suite()),
    ]
}

pub fn render_check_table(results: &[(String, Result<SuiteResult>)]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{:<12} {:<24} {:<24} {:>8}  status", "suite", "max residual", "tolerance", "seconds");
    for (name, result) in results {
        match result {
            Ok(r) => {
                let _ = writeln!(
                    out,
                    "{:<12} {:<24} {:<24} {:>8.2}  {}",
                    r.name,
                    format_number(r.residual),
                    format_number(r.tolerance),
                    r.seconds,
                    if r.passed { "pass" } else { "FAIL" }
                );
            }
            Err(e) => {
                let _ = writeln!(out, "{name:<12} error: {e}");
            }
        }
    }
    out
}

pub fn cmd_check() -> (String, i32) {
    let results = run_check_suites();
    let all = results.iter().all(|(_, r)| matches!(r, Ok(s) if s.passed));
    (render_check_table(&results), if all { EXIT_PASS } else { EXIT_FAIL })
}

fn error_code(e: &Error) -> i32 {
    match e {
        Error::Config { .. } | Error::Io(_) | Error::InvalidParameter { .. } | Error::InvalidModes(_) | Error::UnknownMode(_) => EXIT_USAGE,
        _ => EXIT_FAIL,
    }
}

fn execute(scenario: Scenario, args: &RunArgs) -> i32 {
    let run = match load_run_config(args) {
        Ok(run) => run,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
    };
    match cmd_run(scenario, &run) {
        Ok((report, csv, json)) => {
            print!("{}", report_summary(&report, run.verbose));
            println!("wrote {} and {}", display(&csv), display(&json));
            if report.passed() {
                EXIT_PASS
            } else {
                EXIT_FAIL
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            error_code(&e)
        }
    }
}

fn display(p: &Path) -> String {
    p.display().to_string()
}

/// Parses arguments and runs the command, returning the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_PASS };
        }
    };
    match cli.command {
        Command::Check => {
            let (table, code) = cmd_check();
            print!("{table}");
            code
        }
        Command::Baseline(args) => execute(Scenario::Baseline, &args),
        Command::GaugeHeisenberg(args) => execute(Scenario::GaugeHeisenberg, &args),
        Command::GaugeSchrodinger(args) => execute(Scenario::GaugeSchrodinger, &args),
        Command::EnergyHeisenberg(args) => execute(Scenario::EnergyHeisenberg, &args),
        Command::Equivalence(args) => execute(Scenario::Equivalence, &args),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::build_ladders_without_sign_strings;

    #[test]
    fn parses_run_flags() {
        let cli = Cli::try_parse_from(["diracsim", "baseline", "--seed", "4", "--backend", "fock", "--cutoffs", "2,3"]).unwrap();
        let Command::Baseline(args) = cli.command else { panic!("wrong subcommand") };
        let run = load_run_config(&args).unwrap();
        assert_eq!(run.scenario.seed, 4);
        assert_eq!(run.scenario.backend, Backend::Fock);
        assert_eq!(run.scenario.cutoffs, vec![2, 3]);
        assert!(Cli::try_parse_from(["diracsim", "baseline", "--backend", "gpu"]).is_err());
        assert!(Cli::try_parse_from(["diracsim", "nonsense"]).is_err());
    }

    #[test]
    fn overrides_are_validated() {
        let args = RunArgs { cutoffs: Some(vec![-1]), ..RunArgs::default() };
        assert!(matches!(load_run_config(&args), Err(Error::Config { key, .. }) if key == "cutoffs"));
        let args = RunArgs { config: Some(PathBuf::from("/nonexistent/cfg.txt")), ..RunArgs::default() };
        assert!(load_run_config(&args).is_err());
    }

    #[test]
    fn fast_suites_pass() {
        for suite in [car_suite(build_ladders), spectrum_suite(), commutator_suite(0), oracle_suite()] {
            let r = suite.unwrap();
            assert!(r.passed, "{r:?}");
        }
    }

    #[test]
    fn car_suite_catches_missing_sign_strings() {
        let r = car_suite(build_ladders_without_sign_strings).unwrap();
        assert!(!r.passed);
        assert!(r.residual >= 1.0);
    }
}
