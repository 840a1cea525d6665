use proptest::prelude::*;

use pme_lab::asymptotics::{rescale_trajectory, unscale_trajectory};
use pme_lab::config::ExperimentConfig;
use pme_lab::evolution::{evolve_pme, separable_theta_factor, separable_u_factor, EvolveOptions, Schedule, Trajectory, Variable};
use pme_lab::geometry::{build_grid, weighted_inner_product, GridKind};
use pme_lab::regularity::fit_boundary_expansion;
use pme_lab::runner::bump;
use pme_lab::spectrum::sign_changes;
use pme_lab::stencil::lagrange3_weights;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn stiffness_is_symmetric_positive_definite(n in 8usize..60, length in 0.2f64..5.0, seed in any::<u64>(), radial in any::<bool>()) {
        let kind = if radial { GridKind::Radial } else { GridKind::Interval };
        let g = build_grid(kind, if radial { 3 } else { 1 }, length, n).unwrap();
        let u: Vec<f64> = (0..n).map(|i| ((seed.wrapping_mul(i as u64 + 1) % 1000) as f64 / 500.0) - 1.0 + 1e-3).collect();
        let v: Vec<f64> = (0..n).map(|i| ((i * 37 + 11) % 17) as f64 - 8.0).collect();
        let (ku, kv) = (g.stiffness_apply(&u), g.stiffness_apply(&v));
        let uv: f64 = ku.iter().zip(&v).map(|(a, b)| a * b).sum();
        let vu: f64 = kv.iter().zip(&u).map(|(a, b)| a * b).sum();
        prop_assert!((uv - vu).abs() <= 1e-10 * (uv.abs() + vu.abs() + 1.0));
        let uu: f64 = ku.iter().zip(&u).map(|(a, b)| a * b).sum();
        prop_assert!(uu > 0.0);
    }

    #[test]
    fn interval_laplacian_is_exact_on_parabolas(n in 8usize..200, length in 0.1f64..4.0, c in -3.0f64..3.0) {
        let g = build_grid(GridKind::Interval, 1, length, n).unwrap();
        let u: Vec<f64> = g.nodes().iter().map(|&x| c * x * (length - x)).collect();
        for v in g.laplacian(&u) {
            prop_assert!((v + 2.0 * c).abs() <= 1e-12 * (1.0 + c.abs()) * length * length / (g.h() * g.h()));
        }
    }

    #[test]
    fn weighted_inner_product_is_symmetric(n in 16usize..120, a in 0.5f64..3.0, b in 0.5f64..3.0) {
        let g = build_grid(GridKind::Interval, 1, 1.0, n).unwrap();
        let f = g.field_from_fn(|x| (a * x).sin());
        let h = g.field_from_fn(|x| 1.0 + b * x * x);
        let w = g.field_from_fn(|x| x * (1.0 - x));
        let fg = weighted_inner_product(&g, &f, &h, &w, -0.5).unwrap();
        let gf = weighted_inner_product(&g, &h, &f, &w, -0.5).unwrap();
        prop_assert!((fg - gf).abs() <= 1e-13 * fg.abs().max(1.0));
    }

    #[test]
    fn evolution_preserves_sign_and_dissipates_mass(center in 0.2f64..0.8, width in 0.05f64..0.3, height in 0.1f64..3.0, m in 1.2f64..4.0) {
        let g = build_grid(GridKind::Interval, 1, 1.0, 40).unwrap();
        let u0 = bump(&g, center, width, height);
        let tr = evolve_pme(&g, m, &u0, 0.05, Schedule::Fixed { dt: 5e-3, store_every: 1 }, EvolveOptions::default()).unwrap();
        let masses = tr.masses();
        for f in &tr.fields {
            prop_assert!(f.min() >= 0.0);
        }
        for w in masses.windows(2) {
            prop_assert!(w[1] <= w[0] * (1.0 + 1e-12));
        }
    }

    #[test]
    fn rescaling_round_trips(m in 1.2f64..4.0, t0 in 0.1f64..5.0) {
        let g = build_grid(GridKind::Interval, 1, 1.0, 20).unwrap();
        let mut tr = Trajectory::new(g.clone(), Variable::U, m);
        for k in 0..4 {
            tr.push(t0 * (1.0 + k as f64), g.field_from_fn(|x| (1.0 + k as f64) * x * (1.0 - x)));
        }
        let back = unscale_trajectory(&rescale_trajectory(&tr).unwrap()).unwrap();
        for ((a, b), (s, t)) in back.fields.iter().zip(&tr.fields).zip(back.times.iter().zip(&tr.times)) {
            prop_assert!((s - t).abs() <= 1e-12 * t);
            for (x, y) in a.values().iter().zip(b.values()) {
                prop_assert!((x - y).abs() <= 1e-12 * y.abs().max(1e-300) + 1e-300);
            }
        }
    }

    #[test]
    fn separable_factors_agree_under_rescaling(s in 0.01f64..5.0, m in 1.1f64..5.0, tau in -2.0f64..6.0) {
        let t = tau.exp();
        let mapped = t.powf(m / (m - 1.0)) * separable_u_factor(s, m, t).powf(m);
        prop_assert!((mapped / separable_theta_factor(s, m, tau) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn lagrange_weights_differentiate_quadratics(t0 in -1.0f64..1.0, d1 in 0.01f64..1.0, d2 in 0.01f64..1.0, c in prop::array::uniform3(-5.0f64..5.0), at in 0usize..3) {
        let t = [t0, t0 + d1, t0 + d1 + d2];
        let f = |x: f64| c[0] + c[1] * x + c[2] * x * x;
        let (w1, w2) = lagrange3_weights(t, t[at]);
        let first: f64 = (0..3).map(|k| w1[k] * f(t[k])).sum();
        let second: f64 = (0..3).map(|k| w2[k] * f(t[k])).sum();
        let scale = 1.0 + c.iter().map(|v| v.abs()).sum::<f64>() / (d1.min(d2) * d1.min(d2));
        prop_assert!((first - (c[1] + 2.0 * c[2] * t[at])).abs() <= 1e-10 * scale);
        prop_assert!((second - 2.0 * c[2]).abs() <= 1e-10 * scale);
    }

    #[test]
    fn sine_modes_have_expected_sign_changes(k in 1usize..8) {
        let g = build_grid(GridKind::Interval, 1, 1.0, 200).unwrap();
        let v: Vec<f64> = g.nodes().iter().map(|x| (k as f64 * std::f64::consts::PI * x).sin()).collect();
        prop_assert_eq!(sign_changes(&v), k - 1);
    }

    #[test]
    fn synthetic_expansions_recover_exponent(q in 1.5f64..3.5, a in 0.1f64..2.0, b in -2.0f64..2.0) {
        prop_assume!(b.abs() > 0.05);
        // positive inside the fit window, with the correction not swamping the linear term
        prop_assume!(a + b * 0.1f64.powf(q - 1.0) > 0.2 * a);
        let g = build_grid(GridKind::Interval, 1, 1.0, 800).unwrap();
        let d = g.boundary_distance();
        let v = d.map(|x| a * x + b * x.powf(q));
        let fit = fit_boundary_expansion(&v, &g).unwrap();
        prop_assert!((fit.q / q - 1.0).abs() < 0.01, "q {} vs {}", fit.q, q);
    }

    #[test]
    fn sign_changing_data_are_rejected(q in 1.5f64..3.5, b in 1.0f64..2.0) {
        let g = build_grid(GridKind::Interval, 1, 1.0, 400).unwrap();
        let v = g.boundary_distance().map(|x| 1e-3 * x - b * x.powf(q) * 1e3);
        prop_assert!(fit_boundary_expansion(&v, &g).is_err());
    }

    #[test]
    fn config_hash_is_stable_under_reserialisation(m in 1.01f64..6.0, n in 8usize..5000, dt in 1e-6f64..1e-1, seed in 0..=i64::MAX as u64) {
        let text = format!(
            "m = {m:?}\nn = {n}\nseed = {seed}\nexperiments = [\"evolve\"]\noutput_dir = \"out\"\n\
             [domain]\nkind = \"interval\"\nlength = 1.0\n[initial]\nkind = \"profile-scale\"\nc = 2.0\n\
             [schedule]\nkind = \"fixed\"\ndt = {dt:?}\nt_end = 1.0\nstore_every = 1\n"
        );
        let cfg = ExperimentConfig::from_toml(&text).unwrap();
        let again = ExperimentConfig::from_toml(&cfg.to_toml()).unwrap();
        prop_assert_eq!(&again, &cfg);
        prop_assert_eq!(again.hash(), cfg.hash());
    }
}
