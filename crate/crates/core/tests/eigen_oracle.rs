use nalgebra::{DMatrix, SymmetricEigen};

use pme_lab::geometry::{build_grid, GridKind};
use pme_lab::spectrum::{assemble_linearized, solve_eigenpairs, Pencil};
use pme_lab::stationary::solve_theta;

/// Dense symmetric eigenvalues of `W^{-1/2} A W^{-1/2}`, ascending.
fn dense_spectrum(pencil: &Pencil) -> Vec<f64> {
    let n = pencil.w.len();
    let mut b = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        b[(i, i)] = pencil.a.diag[i] / pencil.w[i];
        if i + 1 < n {
            let o = pencil.a.off[i] / (pencil.w[i] * pencil.w[i + 1]).sqrt();
            b[(i, i + 1)] = o;
            b[(i + 1, i)] = o;
        }
    }
    let mut ev: Vec<f64> = SymmetricEigen::new(b).eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
    ev
}

#[test]
fn sturm_bisection_matches_dense_solver() {
    for (kind, dim) in [(GridKind::Interval, 1), (GridKind::Radial, 3)] {
        for p in [0.3, 0.5, 0.7] {
            let g = build_grid(kind, dim, 1.0, 120).unwrap();
            let prof = solve_theta(&g, p, 1e-12).unwrap();
            let pencil = assemble_linearized(&g, &prof, p).unwrap();
            let sys = solve_eigenpairs(&pencil, 6, 1e-9).unwrap();
            let dense = dense_spectrum(&pencil);
            for (mu, d) in sys.mus.iter().zip(&dense) {
                assert!((mu - d).abs() <= 1e-9 * d.abs().max(1.0), "{kind:?} p={p}: {mu} vs dense {d}");
            }
        }
    }
}

#[test]
fn eigenvectors_match_dense_solver_up_to_sign() {
    let g = build_grid(GridKind::Interval, 1, 1.0, 80).unwrap();
    let prof = solve_theta(&g, 0.5, 1e-12).unwrap();
    let pencil = assemble_linearized(&g, &prof, 0.5).unwrap();
    let sys = solve_eigenpairs(&pencil, 4, 1e-10).unwrap();
    let n = pencil.w.len();
    let mut b = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        b[(i, i)] = pencil.a.diag[i] / pencil.w[i];
        if i + 1 < n {
            let o = pencil.a.off[i] / (pencil.w[i] * pencil.w[i + 1]).sqrt();
            b[(i, i + 1)] = o;
            b[(i + 1, i)] = o;
        }
    }
    let eig = SymmetricEigen::new(b);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].partial_cmp(&eig.eigenvalues[j]).unwrap());
    for (j, psi) in sys.psis.iter().enumerate() {
        let col = eig.eigenvectors.column(order[j]);
        // dense vectors live in the symmetrised variable x = W^{1/2} psi
        let x: Vec<f64> = psi.values().iter().zip(&pencil.w).map(|(v, w)| v * w.sqrt()).collect();
        let dot: f64 = x.iter().zip(col.iter()).map(|(a, b)| a * b).sum();
        assert!((dot.abs() - 1.0).abs() < 1e-8, "mode {j}: |<x, dense>| = {}", dot.abs());
    }
}
