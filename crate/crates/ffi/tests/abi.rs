use std::ffi::{CStr, CString};
use std::ptr;

use pme_lab_ffi::*;

fn last_error() -> String {
    let mut buf = vec![0 as std::ffi::c_char; 256];
    unsafe {
        pme_last_error(buf.as_mut_ptr(), buf.len());
        CStr::from_ptr(buf.as_ptr()).to_string_lossy().into_owned()
    }
}

fn grid(n: usize) -> *mut PmeGrid {
    let mut g = ptr::null_mut();
    assert_eq!(unsafe { pme_grid_new(PmeGridKind::Interval, 1, 1.0, n, &mut g) }, PmeStatus::Ok);
    g
}

#[test]
fn profile_and_spectrum_round_trip() {
    unsafe {
        let g = grid(400);
        assert_eq!(pme_grid_len(g), 400);
        let mut nodes = vec![0.0; 400];
        assert_eq!(pme_grid_nodes(g, nodes.as_mut_ptr(), nodes.len()), PmeStatus::Ok);
        assert!((nodes[0] - 1.0 / 401.0).abs() < 1e-15);

        let mut prof = ptr::null_mut();
        assert_eq!(pme_profile_solve(g, 0.5, 1e-12, &mut prof), PmeStatus::Ok);
        let mut theta = vec![0.0; 400];
        let mut s = vec![0.0; 400];
        assert_eq!(pme_profile_theta(prof, theta.as_mut_ptr(), 400), PmeStatus::Ok);
        assert_eq!(pme_profile_s(prof, s.as_mut_ptr(), 400), PmeStatus::Ok);
        for (t, s) in theta.iter().zip(&s) {
            assert!((t.sqrt() - s).abs() <= 1e-14 * (1.0 + s));
        }
        let mut slope = 0.0;
        assert_eq!(pme_profile_slope(prof, &mut slope), PmeStatus::Ok);
        assert!(slope > 0.0);

        let mut sys = ptr::null_mut();
        assert_eq!(pme_spectrum_solve(prof, 3, 1e-9, &mut sys), PmeStatus::Ok);
        assert_eq!(pme_spectrum_len(sys), 3);
        let mut mu = [0.0; 3];
        for j in 1..=3 {
            assert_eq!(pme_spectrum_eigenvalue(sys, j, &mut mu[j - 1]), PmeStatus::Ok);
        }
        assert!(mu[0] < mu[1] && mu[1] < mu[2]);
        // mu_1 = p for the linearization about the profile
        assert!((mu[0] - 0.5).abs() < 1e-3, "mu_1 = {}", mu[0]);
        let mut psi = vec![0.0; 400];
        assert_eq!(pme_spectrum_eigenvector(sys, 1, psi.as_mut_ptr(), 400), PmeStatus::Ok);
        assert!(psi.iter().all(|v| *v > 0.0) || psi.iter().all(|v| *v < 0.0));
        assert_eq!(pme_spectrum_eigenvalue(sys, 4, &mut mu[0]), PmeStatus::InvalidArgument);
        assert!(last_error().contains("mode 4"));

        pme_spectrum_free(sys);
        pme_profile_free(prof);
        pme_grid_free(g);
    }
}

#[test]
fn evolution_matches_separable_solution() {
    unsafe {
        let n = 200;
        let g = grid(n);
        let mut prof = ptr::null_mut();
        assert_eq!(pme_profile_solve(g, 0.5, 1e-12, &mut prof), PmeStatus::Ok);
        let mut s = vec![0.0; n];
        assert_eq!(pme_profile_s(prof, s.as_mut_ptr(), n), PmeStatus::Ok);
        // u(t) = (1 + t)^{-1/(m-1)} S solves the equation for m = 2
        let mut traj = ptr::null_mut();
        assert_eq!(pme_evolve(g, 2.0, s.as_ptr(), n, 1e-3, 1.0, 100, &mut traj), PmeStatus::Ok);
        let k = pme_trajectory_len(traj) - 1;
        let mut t = 0.0;
        assert_eq!(pme_trajectory_time(traj, k, &mut t), PmeStatus::Ok);
        assert!((t - 1.0).abs() < 1e-9);
        let mut u = vec![0.0; n];
        assert_eq!(pme_trajectory_field(traj, k, u.as_mut_ptr(), n), PmeStatus::Ok);
        let err = u.iter().zip(&s).map(|(u, s)| (u - s / (1.0 + t)).abs()).fold(0.0, f64::max);
        let smax = s.iter().cloned().fold(0.0, f64::max);
        assert!(err / smax < 1e-3, "relative error {}", err / smax);
        assert_eq!(pme_trajectory_time(traj, k + 1, &mut t), PmeStatus::InvalidArgument);
        pme_trajectory_free(traj);
        pme_profile_free(prof);
        pme_grid_free(g);
    }
}

#[test]
fn errors_map_to_status_codes() {
    unsafe {
        let mut g = ptr::null_mut();
        assert_eq!(pme_grid_new(PmeGridKind::Interval, 1, 1.0, 3, &mut g), PmeStatus::InvalidArgument);
        assert!(g.is_null());
        assert!(last_error().contains("resolution floor"));
        assert_eq!(pme_grid_new(PmeGridKind::Interval, 1, 1.0, 50, ptr::null_mut()), PmeStatus::NullPointer);

        let g = grid(50);
        let mut prof = ptr::null_mut();
        assert_eq!(pme_profile_solve(g, 1.5, 1e-12, &mut prof), PmeStatus::InvalidArgument);
        assert_eq!(pme_profile_solve(ptr::null(), 0.5, 1e-12, &mut prof), PmeStatus::NullPointer);
        assert_eq!(pme_profile_solve(g, 0.5, 1e-12, &mut prof), PmeStatus::Ok);
        let mut small = vec![0.0; 10];
        assert_eq!(pme_profile_theta(prof, small.as_mut_ptr(), small.len()), PmeStatus::BufferTooSmall);

        let neg = vec![-1.0; 50];
        let mut traj = ptr::null_mut();
        assert_eq!(pme_evolve(g, 2.0, neg.as_ptr(), 50, 1e-3, 1.0, 1, &mut traj), PmeStatus::InvalidArgument);
        assert_eq!(pme_evolve(g, 2.0, neg.as_ptr(), 49, 1e-3, 1.0, 1, &mut traj), PmeStatus::InvalidArgument);

        let missing = CString::new("/nonexistent/config.toml").unwrap();
        assert_eq!(pme_run_config(missing.as_ptr()), PmeStatus::InvalidArgument);
        assert_eq!(pme_run_config(ptr::null()), PmeStatus::NullPointer);

        // the message is cleared by a successful call
        assert_eq!(pme_grid_len(g), 50);
        let mut slope = 0.0;
        assert_eq!(pme_profile_slope(prof, &mut slope), PmeStatus::Ok);
        assert_eq!(last_error(), "");
        assert_eq!(pme_last_error(ptr::null_mut(), 0), 0);

        pme_profile_free(prof);
        pme_grid_free(g);
        pme_grid_free(ptr::null_mut());
    }
}

#[test]
fn run_config_reports_status() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    let text = format!(
        "m = 2.0\nn = 400\nexperiments = [\"stationary\", \"spectrum\"]\noutput_dir = {:?}\n\n[domain]\nkind = \"interval\"\nlength = 1.0\n",
        dir.path().join("out").display().to_string()
    );
    std::fs::write(&cfg, text).unwrap();
    let path = CString::new(cfg.to_str().unwrap()).unwrap();
    assert_eq!(unsafe { pme_run_config(path.as_ptr()) }, PmeStatus::Ok);
    assert!(dir.path().join("out/report.csv").exists());
}

#[test]
fn version_is_nul_terminated() {
    let v = unsafe { CStr::from_ptr(pme_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}
