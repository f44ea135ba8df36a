use std::sync::OnceLock;

use gp_core::energy::{energy, energy_gradient};
use gp_core::grid::{Field, Grid2D};
use gp_core::minimizer::{
    box_doubling_check, continuation_sweep, minimize, InitKind, MinimizerOptions, MinimizerResult,
};
use gp_core::potentials::PotentialSpec;
use gp_core::soliton::{solve_townes, RadialProfile};
use gp_core::Error;
use proptest::prelude::*;

fn profile() -> &'static RadialProfile {
    static P: OnceLock<RadialProfile> = OnceLock::new();
    P.get_or_init(|| solve_townes(1e-12).unwrap())
}

fn a_star() -> f64 {
    profile().mass
}

/// Contract every returned result must satisfy.
fn check_contract(r: &MinimizerResult, v: &Field, opts: &MinimizerOptions) {
    assert!((r.u.mass() - 1.0).abs() <= 1e-10, "mass {}", r.u.mass());
    if r.converged {
        assert!(r.residual <= opts.tol_residual);
    }
    let direct = energy(&r.u, v, r.coupling).unwrap().total;
    assert!((r.e() - direct).abs() <= 1e-10 * direct.abs().max(1.0));
    assert!(r.eps > 0.0);
    let scale = r.trace[0].abs().max(1.0);
    assert!(r.trace.windows(2).all(|w| w[1] <= w[0] + 1e-12 * scale), "trace not monotone");
    // whole-plane bound, plus the quartic energy a/(2|box|) of the flat state on the torus
    let area = (2.0 * v.grid().half_width()).powi(2);
    assert!(r.e() >= -v.max_abs() - r.coupling / (2.0 * area) - 1e-6);
}

#[test]
fn flat_potential_without_interaction_gives_constant_state() {
    let g = Grid2D::new(8.0, 64).unwrap();
    let v = Field::zeros(&g);
    let opts = MinimizerOptions::default();
    let r = minimize(&v, 0.0, a_star(), &opts, None).unwrap();
    check_contract(&r, &v, &opts);
    assert!(r.e().abs() < 1e-8);
    let c = 1.0 / 16.0;
    assert!(r.u.values().iter().all(|x| (x - c).abs() < 1e-5));
}

#[test]
fn harmonic_ground_energy() {
    let g = Grid2D::new(16.0, 256).unwrap();
    let v = "power_well h0=1 p=2".parse::<PotentialSpec>().unwrap().realize(&g).unwrap();
    let opts = MinimizerOptions::default();
    let r = minimize(&v, 0.0, a_star(), &opts, None).unwrap();
    check_contract(&r, &v, &opts);
    assert!(r.converged);
    assert!((r.e() - 2.0).abs() < 1e-3, "{}", r.e());
}

#[test]
fn subcritical_flat_torus() {
    let g = Grid2D::new(8.0, 64).unwrap();
    let v = Field::zeros(&g);
    let a = 0.5 * a_star();
    let opts = MinimizerOptions::default();
    let r = minimize(&v, a, a_star(), &opts, None).unwrap();
    check_contract(&r, &v, &opts);
    // the flat state has energy -a/(8L²); nothing concentrated can beat it this far from a*
    let flat = -a / (8.0 * 64.0);
    assert!(r.e() <= 0.0);
    assert!(r.e() >= flat - 1e-8, "{} < {flat}", r.e());
    assert!(r.eps > 1.0);
}

#[test]
fn euler_lagrange_residual_at_convergence() {
    let g = Grid2D::new(8.0, 128).unwrap();
    let v = PotentialSpec::Sinc.realize(&g).unwrap();
    let opts = MinimizerOptions::default();
    let r = minimize(&v, 0.8 * a_star(), a_star(), &opts, None).unwrap();
    check_contract(&r, &v, &opts);
    assert!(r.converged);
    let grad = energy_gradient(&r.u, &v, r.coupling).unwrap();
    let mu = grad.inner(&r.u);
    let mut res = grad.clone();
    res.add_scaled(-mu, &r.u);
    assert!(res.norm() <= 10.0 * opts.tol_residual);
    assert!((mu - r.mu).abs() < 1e-8);
}

#[test]
fn critical_guard_and_bad_inputs() {
    let g = Grid2D::new(8.0, 64).unwrap();
    let v = Field::zeros(&g);
    let opts = MinimizerOptions::default();
    assert!(matches!(
        minimize(&v, a_star(), a_star(), &opts, None),
        Err(Error::CriticalCouplingGuard { .. })
    ));
    assert!(matches!(
        minimize(&v, a_star() * (1.0 - 0.5e-4), a_star(), &opts, None),
        Err(Error::CriticalCouplingGuard { .. })
    ));
    assert!(minimize(&v, -1.0, a_star(), &opts, None).is_err());
    let bad = MinimizerOptions {
        backtrack_factor: 1.0,
        ..MinimizerOptions::default()
    };
    assert!(minimize(&v, 0.0, a_star(), &bad, None).is_err());
    let other = Field::zeros(&Grid2D::new(8.0, 32).unwrap());
    assert!(minimize(&v, 0.0, a_star(), &opts, Some(&other)).is_err());
}

#[test]
fn iteration_cap_returns_best_iterate() {
    let g = Grid2D::new(8.0, 64).unwrap();
    let v = PotentialSpec::Sinc.realize(&g).unwrap();
    let opts = MinimizerOptions {
        max_iters: 2,
        ..MinimizerOptions::default()
    };
    let r = minimize(&v, 0.5 * a_star(), a_star(), &opts, None).unwrap();
    assert!(!r.converged);
    assert!(r.iters <= 2);
    check_contract(&r, &v, &opts);
}

#[test]
fn single_entry_sweep_is_a_single_minimization() {
    let g = Grid2D::new(8.0, 64).unwrap();
    let v = PotentialSpec::Sinc.realize(&g).unwrap();
    let opts = MinimizerOptions::default();
    let a = 0.7 * a_star();
    let sweep = continuation_sweep(&v, &[a], a_star(), &opts, None, 0.25).unwrap();
    let single = minimize(&v, a, a_star(), &opts, None).unwrap();
    let entry = sweep[0].result.as_ref().unwrap();
    assert_eq!(entry.e(), single.e());
    assert_eq!(entry.u.values(), single.u.values());
}

#[test]
fn sinc_sweep_trends() {
    let g = Grid2D::new(16.0, 256).unwrap();
    let spec = PotentialSpec::Sinc;
    let v = spec.realize(&g).unwrap();
    let ess = spec.ess_inf(&v).value;
    let opts = MinimizerOptions::default();
    let schedule: Vec<f64> = [0.9, 0.95, 0.975, 0.9875].iter().map(|f| f * a_star()).collect();
    let sweep = continuation_sweep(&v, &schedule, a_star(), &opts, None, 0.25).unwrap();
    let results: Vec<MinimizerResult> = sweep.into_iter().map(|e| e.result.unwrap()).collect();
    for r in &results {
        check_contract(r, &v, &opts);
        assert!(r.converged);
        assert!(r.e() >= ess - 1e-6);
    }
    assert_eq!(results[1].init_kind, InitKind::PriorRescaled);
    assert!(results.windows(2).all(|w| w[1].e() < w[0].e()));
    assert!(results.windows(2).all(|w| w[1].eps < w[0].eps));
}

#[test]
fn sweep_rejects_bad_schedules() {
    let g = Grid2D::new(8.0, 64).unwrap();
    let v = Field::zeros(&g);
    let opts = MinimizerOptions::default();
    assert!(continuation_sweep(&v, &[2.0, 1.0], a_star(), &opts, None, 0.25).is_err());
    assert!(continuation_sweep(&v, &[1.0, 1.0], a_star(), &opts, None, 0.25).is_err());
    assert!(matches!(
        continuation_sweep(&v, &[1.0, a_star()], a_star(), &opts, None, 0.25),
        Err(Error::CriticalCouplingGuard { .. })
    ));
}

#[test]
fn harmonic_minimizer_is_insensitive_to_the_box() {
    let g = Grid2D::new(8.0, 128).unwrap();
    let spec: PotentialSpec = "power_well h0=1 p=2".parse().unwrap();
    let v = spec.realize(&g).unwrap();
    let opts = MinimizerOptions::default();
    let r = minimize(&v, 0.8 * a_star(), a_star(), &opts, None).unwrap();
    let check = box_doubling_check(&spec, &r, a_star(), &opts).unwrap();
    assert!(check.converged);
    assert_eq!(check.doubled_half_width, 16.0);
    assert!(check.energy_shift.abs() < 1e-6, "{}", check.energy_shift);
    assert!(check.eps_shift.abs() < 1e-6, "{}", check.eps_shift);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn energy_is_nonincreasing_in_the_coupling(s in -0.5f64..0.5, f1 in 0.1f64..0.8, df in 0.02f64..0.15) {
        let g = Grid2D::new(4.0, 32).unwrap();
        let v = PotentialSpec::Lattice { amplitude: s, period: 2.0 }.realize(&g).unwrap();
        let opts = MinimizerOptions::default();
        let schedule = [f1 * a_star(), (f1 + df) * a_star()];
        let sweep = continuation_sweep(&v, &schedule, a_star(), &opts, None, 0.25).unwrap();
        let e: Vec<f64> = sweep.iter().map(|x| {
            let r = x.result.as_ref().unwrap();
            check_contract(r, &v, &opts);
            r.e()
        }).collect();
        prop_assert!(e[1] <= e[0] + 1e-8);
    }

    #[test]
    fn runs_on_random_lattices_respect_the_contract(s in -1.0f64..1.0, f in 0.0f64..0.95) {
        let g = Grid2D::new(4.0, 32).unwrap();
        let v = PotentialSpec::Lattice { amplitude: s, period: 1.0 }.realize(&g).unwrap();
        let opts = MinimizerOptions::default();
        let r = minimize(&v, f * a_star(), a_star(), &opts, None).unwrap();
        check_contract(&r, &v, &opts);
    }
}
