use std::collections::BTreeMap;
use std::f64::consts::PI;

use diracsim::cli::car_suite;
use diracsim::config::{parse_config_str, ScenarioConfig};
use diracsim::experiments::{linear_fit, quadratic_fit, run_free_baseline, run_heisenberg_gauge, run_heisenberg_energy_scan};
use diracsim::fock::{build_ladders, build_ladders_without_sign_strings, evolve_driven, omega0_state, ManyBodyDrive};
use diracsim::gaussian::{evolve_correlation, omega0_correlation};
use diracsim::linalg::C64;
use diracsim::modes::{build_catalog, ModeLabel, MomentumGrid, Spin};
use diracsim::observables::{delta_xi, divj_profile, drho_dt_profile, free_energy_heisenberg, free_energy_schrodinger};
use diracsim::onebody::{gauge_transform, h0_matrix, propagate, Envelope, GaugeFunction, OneBodyDrive, PotentialSpec};
use proptest::prelude::*;

#[test]
fn car_negative_control() {
    assert!(car_suite(build_ladders).unwrap().passed);
    let broken = car_suite(build_ladders_without_sign_strings).unwrap();
    assert!(!broken.passed, "sign-free ladders must fail the algebra check");
}

#[test]
fn reference_values_d1() {
    let grid = MomentumGrid::new(2.0 * PI, 1, 2).unwrap();
    let catalog = build_catalog(&grid, 1.0).unwrap();
    let a = catalog.mode(catalog.index_of(&ModeLabel::electron(Spin::Up, [0, 0, 0])).unwrap());
    let b = catalog.mode(catalog.index_of(&ModeLabel::electron(Spin::Up, [0, 0, 1])).unwrap());
    assert!((delta_xi(a, b) - (1.0 + 2f64.sqrt()) / 2.0).abs() < 1e-15);
    let d7 = divj_profile(1.0, a, b, 1.0).unwrap();
    let d = drho_dt_profile(1.0, a, b, 1.0).unwrap();
    assert!((d7.integral_product(&d7.coefficients) - 0.011653850893064276).abs() < 1e-15);
    assert!((d.integral_product(&d.coefficients) - d7.integral_product(&d7.coefficients)).abs() < 1e-15);
    // independent hand evaluation: |u1^dagger u2|^2 (dE)^2 / (2 V)
    let overlap = a.u.dotc(&b.u).norm_sqr();
    let de = 2f64.sqrt() - 1.0;
    assert!((d.integral_product(&d.coefficients) - overlap * de * de / (2.0 * 2.0 * PI)).abs() < 1e-15);
}

#[test]
fn scan_f0_reproduces_delta_xi() {
    let cfg = parse_config_str("cutoffs = 1\nf_list = 0,0.05,0.1,0.2\nsteps = 80").unwrap();
    let r = run_heisenberg_energy_scan(&cfg).unwrap();
    assert!(r.metrics["f0_error_n1"] < 1e-8);
    assert!(r.metrics["intercept_rel_err_n1"] < 0.01);
    assert!(r.metrics["curvature_corrected_slope_rel_err_n1"] < 0.01);
}

#[test]
fn gauge_scan_electron_part_converges() {
    let cfg = parse_config_str("cutoffs = 2,3,4\nsteps = 200").unwrap();
    let r = run_heisenberg_gauge(&cfg).unwrap();
    let el: Vec<f64> = [2, 3, 4].iter().map(|n| r.metrics[&format!("j_dev_electron_n{n}")]).collect();
    assert!(el[0] > el[1] && el[1] > el[2]);
    assert!(r.metrics["rho_dev"] < 1e-6);
}

#[test]
fn baseline_fock_backend_alone() {
    let cfg = ScenarioConfig { backend: diracsim::config::Backend::Fock, fock_n_min: Some(0), ..ScenarioConfig::default() };
    let r = run_free_baseline(&cfg).unwrap();
    assert!(r.passed(), "{:?}", r.checks);
    assert_eq!(r.metrics["modes"], 8.0);
}

fn pure_gauge_energies(f: f64, steps: usize) -> (f64, f64) {
    let grid = MomentumGrid::window(2.0 * PI, 1, 0, 1).unwrap();
    let catalog = build_catalog(&grid, 1.0).unwrap();
    let m1 = ModeLabel::electron(Spin::Up, [0, 0, 0]);
    let m2 = ModeLabel::electron(Spin::Up, [0, 0, 1]);
    let chi = GaugeFunction::new(
        BTreeMap::from([([0, 0, 1], C64::new(f, 0.0)), ([0, 0, -1], C64::new(f, 0.0))]),
        Envelope::ramp(1.0, PI).unwrap(),
    )
    .unwrap();
    let pot = gauge_transform(&PotentialSpec::zero(1), &chi, &grid).unwrap();
    let drive = OneBodyDrive::dirac(&catalog, &pot, 1.0).unwrap();
    let u = propagate(|t| drive.at(t), 0.0, 1.0, steps).unwrap();
    let c0 = omega0_correlation(&catalog, m1, m2).unwrap();
    let heis = free_energy_heisenberg(&c0, u.last(), &catalog).unwrap();
    let ladders = build_ladders(&catalog).unwrap();
    let many = ManyBodyDrive::quantized(&drive, &ladders).unwrap();
    let psi = omega0_state(&catalog, &ladders, m1, m2).unwrap();
    let traj = evolve_driven(&psi, &many, 0.0, 1.0, steps, steps).unwrap();
    let h0 = diracsim::fock::quantize(h0_matrix(&catalog).entries(), &ladders).unwrap();
    let schr = free_energy_schrodinger(traj.states.last().unwrap(), &h0).unwrap();
    let gauss = evolve_correlation(&c0, u.last()).unwrap();
    assert!((diracsim::gaussian::bilinear_expectation(&gauss, h0_matrix(&catalog).entries()).unwrap().re - heis).abs() < 1e-10);
    (heis - catalog.vacuum_energy(), schr - catalog.vacuum_energy())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn prop_energy_never_below_vacuum(f in -3.0f64..3.0) {
        let (heis, schr) = pure_gauge_energies(f, 60);
        prop_assert!(heis >= -1e-9);
        prop_assert!((heis - schr).abs() < 1e-8);
    }

    #[test]
    fn prop_linear_fit_exact_on_lines(a in -5.0f64..5.0, b in -5.0f64..5.0, x0 in 0.0f64..1.0) {
        let xs = [x0, x0 + 0.5, x0 + 1.5];
        let ys: Vec<f64> = xs.iter().map(|x| a + b * x).collect();
        let (slope, intercept) = linear_fit(&xs, &ys);
        prop_assert!((slope - b).abs() < 1e-9 && (intercept - a).abs() < 1e-9);
        let q = quadratic_fit(&[0.0, 1.0, 2.0, 3.0], &[a, a + b, a + 2.0 * b, a + 3.0 * b]);
        prop_assert!(q[2].abs() < 1e-9);
    }

    #[test]
    fn prop_config_text_round_trip(seed in 0u64..1_000_000, drives in 1usize..9, amp in 0.0f64..2.0) {
        let cfg = parse_config_str(&format!("seed = {seed}\ndrives = {drives}\ndrive_amplitude = {amp}")).unwrap();
        prop_assert_eq!(parse_config_str(&cfg.to_text()).unwrap(), cfg);
    }
}
