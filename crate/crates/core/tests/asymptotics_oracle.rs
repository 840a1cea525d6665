//! End-to-end oracle on the separable family: in rescaled time the exact
//! solution is `θ = (1 + s e^{-τ})^{-m/(m-1)} Θ`, so to first order
//! `h = −(m/(m−1)) s e^{-τ} Θ`, giving `A_1 = (m/(m−1)) s` and `τ* = s`.

use pme_lab::asymptotics::{analyze, compute_a1_tau_star, AsymptoticsOptions};
use pme_lab::evolution::{evolve_rescaled, Integrator, RescaledOptions};
use pme_lab::geometry::{build_grid, GridKind};
use pme_lab::spectrum::{assemble_linearized, solve_eigenpairs};
use pme_lab::stationary::solve_theta;

fn separable_constants(m: f64, s0: f64) -> (f64, f64) {
    let p = 1.0 / m;
    let grid = build_grid(GridKind::Interval, 1, 1.0, 200).unwrap();
    let prof = solve_theta(&grid, p, 1e-12).unwrap();
    let pencil = assemble_linearized(&grid, &prof, p).unwrap();
    let sys = solve_eigenpairs(&pencil, 4, 1e-10).unwrap();
    let theta0 = prof.theta.map(|t| (1.0 + s0).powf(-m / (m - 1.0)) * t);
    let opts = RescaledOptions { integrator: Integrator::Bdf2, store_every: 20, tol: 1e-13, max_newton: 40 };
    let traj = evolve_rescaled(&grid, p, &theta0, 0.0, 16.0, 1e-3, opts).unwrap();
    let report = analyze(&traj, &prof, &sys, AsymptoticsOptions { modes: 4, tail_window: (12.0, 16.0), fit_window: (2.0, 10.0) }).unwrap();
    (report.a1, report.tau_star)
}

#[test]
fn separable_data_recover_a1_for_m2() {
    let (a1, tau_star) = separable_constants(2.0, 0.05);
    assert!((a1 - 0.1).abs() <= 0.05 * 0.1, "A1 = {a1}");
    assert!((tau_star - 0.05).abs() <= 0.05 * 0.05, "tau* = {tau_star}");
}

#[test]
fn separable_data_recover_a1_for_m3() {
    let s0 = 0.1;
    let (a1, tau_star) = separable_constants(3.0, s0);
    let expected = 3.0 / 2.0 * s0;
    assert!((a1 - expected).abs() <= 0.05 * expected, "A1 = {a1}, expected {expected}");
    assert!((tau_star - s0).abs() <= 0.05 * s0, "tau* = {tau_star}");
}

#[test]
fn zero_first_mode_gives_zero_constants() {
    let grid = build_grid(GridKind::Interval, 1, 1.0, 64).unwrap();
    let prof = solve_theta(&grid, 0.5, 1e-12).unwrap();
    assert_eq!(compute_a1_tau_star(0.0, &prof, 2.0), (0.0, 0.0));
    let (a1, tau_star) = compute_a1_tau_star(-0.3 * prof.norm_theta, &prof, 2.0);
    assert!((a1 - 0.3).abs() < 1e-15 && (tau_star - 0.15).abs() < 1e-15);
}
