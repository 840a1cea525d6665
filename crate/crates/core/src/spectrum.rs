//! Weighted eigenproblem `L_Θ ψ = μ Θ^{p-1} ψ` for the operator obtained by
//! linearising the rescaled flow at `Θ`.

use crate::error::{Error, Result};
use crate::geometry::{Field, Grid};
use crate::stationary::{check_p, StationaryProfile};
use crate::tridiag::SymTridiag;

/// Generalised pencil `(A, W)` with `A` symmetric tridiagonal and `W` a
/// positive diagonal, both carrying the control-volume weights.
#[derive(Debug, Clone)]
pub struct Pencil {
    pub grid: Grid,
    pub a: SymTridiag,
    pub w: Vec<f64>,
    pub profile: Option<StationaryProfile>,
}

impl Pencil {
    /// `‖Aψ − μWψ‖ / ‖Wψ‖` in the Euclidean norm.
    pub fn relative_residual(&self, mu: f64, psi: &[f64]) -> f64 {
        let apsi = self.a.apply(psi);
        let (mut num, mut den) = (0.0, 0.0);
        for i in 0..psi.len() {
            let wpsi = self.w[i] * psi[i];
            num += (apsi[i] - mu * wpsi).powi(2);
            den += wpsi * wpsi;
        }
        (num / den).sqrt()
    }

    /// `⟨f, g⟩_W = Σ W_i f_i g_i`.
    pub fn dot(&self, f: &[f64], g: &[f64]) -> f64 {
        self.w.iter().zip(f).zip(g).map(|((w, a), b)| w * a * b).sum()
    }

    /// Ratio of the extreme weights, a cheap conditioning indicator.
    pub fn weight_spread(&self) -> f64 {
        let lo = self.w.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = self.w.iter().copied().fold(0.0_f64, f64::max);
        hi / lo
    }
}

/// `A = K − (p²/(1−p)) M Θ^{p−1}`, `W = M Θ^{p−1}`.
pub fn assemble_linearized(grid: &Grid, profile: &StationaryProfile, p: f64) -> Result<Pencil> {
    check_p(p)?;
    grid.check(&profile.theta)?;
    if profile.theta.min() <= 0.0 {
        return Err(Error::InvalidWeight("profile must be positive at every node".into()));
    }
    let mut a = grid.stiffness();
    let coeff = p * p / (1.0 - p);
    let w: Vec<f64> =
        grid.mass().iter().zip(profile.theta.values()).map(|(m, t)| m * t.powf(p - 1.0)).collect();
    for (d, wi) in a.diag.iter_mut().zip(&w) {
        *d -= coeff * wi;
    }
    Ok(Pencil { grid: grid.clone(), a, w, profile: Some(profile.clone()) })
}

/// Dirichlet Laplacian pencil `(K, M)`.
pub fn assemble_dirichlet_laplacian(grid: &Grid) -> Pencil {
    Pencil { grid: grid.clone(), a: grid.stiffness(), w: grid.mass().to_vec(), profile: None }
}

#[derive(Debug, Clone)]
pub struct EigenSystem {
    pub mus: Vec<f64>,
    /// `W`-orthonormal eigenvectors.
    pub psis: Vec<Field>,
    pub k: usize,
    pub gram_defect: f64,
    pub residuals: Vec<f64>,
    /// Set when two computed eigenvalues are closer than `10·tol`.
    pub cluster_warning: bool,
    pub weight_spread: f64,
    pub profile: Option<StationaryProfile>,
}

impl EigenSystem {
    pub fn sign_changes(&self, j: usize) -> usize {
        sign_changes(self.psis[j].values())
    }
}

/// Interior sign changes, ignoring entries below `1e-8` of the max.
pub fn sign_changes(v: &[f64]) -> usize {
    let cut = 1e-8 * v.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    let mut last = 0.0_f64;
    let mut count = 0;
    for &x in v.iter().filter(|x| x.abs() > cut) {
        if last != 0.0 && x.signum() != last {
            count += 1;
        }
        last = x.signum();
    }
    count
}

fn orthogonalize(x: &mut [f64], basis: &[Vec<f64>]) {
    for _ in 0..2 {
        for b in basis {
            let c: f64 = x.iter().zip(b).map(|(a, b)| a * b).sum();
            x.iter_mut().zip(b).for_each(|(a, b)| *a -= c * b);
        }
    }
}

fn normalize(x: &mut [f64]) -> f64 {
    let n = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if n > 0.0 {
        x.iter_mut().for_each(|v| *v /= n);
    }
    n
}

/// Lowest `k` eigenpairs of `Aψ = μWψ` via `B = W^{-1/2} A W^{-1/2}`:
/// Sturm bisection for the eigenvalues, shifted inverse iteration with
/// Gram–Schmidt deflation for the vectors.
pub fn solve_eigenpairs(pencil: &Pencil, k: usize, tol: f64) -> Result<EigenSystem> {
    let n = pencil.w.len();
    if k == 0 || 4 * k > n {
        return Err(Error::InvalidEigenRequest(format!("need 1 <= K <= N/4, got K = {k}, N = {n}")));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidEigenRequest(format!("tolerance must be positive, got {tol}")));
    }
    if pencil.w.iter().any(|w| !(*w > 0.0) || !w.is_finite()) {
        return Err(Error::InvalidWeight("W must be a positive diagonal".into()));
    }
    let root: Vec<f64> = pencil.w.iter().map(|w| w.sqrt()).collect();
    let b = SymTridiag::new(
        pencil.a.diag.iter().zip(&pencil.w).map(|(a, w)| a / w).collect(),
        pencil.a.off.iter().enumerate().map(|(i, o)| o / (root[i] * root[i + 1])).collect(),
    );

    // roundoff floor of the residual test
    let scale = pencil.a.diag.iter().zip(&pencil.w).map(|(a, w)| a.abs() / w).fold(0.0_f64, f64::max);
    let reachable = tol.max(8.0 * f64::EPSILON * scale);
    let mut mus = Vec::with_capacity(k);
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(k);
    let mut residuals = Vec::with_capacity(k);
    for j in 0..k {
        let mut shift = b.bisect_eigenvalue(j, 4.0 * f64::EPSILON);
        // deterministic start vector with components in every mode
        let mut x: Vec<f64> = (0..n).map(|i| 1.0 + 0.1 * ((i * 7 + j * 13) % 11) as f64).collect();
        orthogonalize(&mut x, &basis);
        normalize(&mut x);
        let mut converged = None;
        for attempt in 0..3 {
            for _ in 0..6 {
                let Some(mut y) = b.solve_shifted(shift, &x) else { break };
                orthogonalize(&mut y, &basis);
                if normalize(&mut y) == 0.0 {
                    break;
                }
                x = y;
                let bx = b.apply(&x);
                let rq: f64 = x.iter().zip(&bx).map(|(a, c)| a * c).sum();
                let psi: Vec<f64> = x.iter().zip(&root).map(|(v, r)| v / r).collect();
                let res = pencil.relative_residual(rq, &psi);
                if res <= reachable {
                    converged = Some((rq, res));
                    break;
                }
            }
            if converged.is_some() {
                break;
            }
            // refresh the shift from the current Rayleigh quotient
            let bx = b.apply(&x);
            shift = x.iter().zip(&bx).map(|(a, c)| a * c).sum::<f64>() * (1.0 + 1e-12 * (attempt + 1) as f64);
        }
        let Some((mu, res)) = converged else {
            return Err(Error::IterationStall { index: j + 1 });
        };
        mus.push(mu);
        residuals.push(res);
        basis.push(x);
    }

    let mut psis = Vec::with_capacity(k);
    for (j, x) in basis.iter().enumerate() {
        let mut psi: Vec<f64> = x.iter().zip(&root).map(|(v, r)| v / r).collect();
        let peak = psi.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let lead = psi.iter().copied().find(|v| v.abs() >= 1e-3 * peak);
        if lead.is_some_and(|v| v < 0.0) {
            psi.iter_mut().for_each(|v| *v = -*v);
        }
        if j == 0 {
            psi.iter_mut().for_each(|v| *v = v.max(0.0));
        }
        psis.push(pencil.grid.field(psi)?);
    }
    let mut gram_defect: f64 = 0.0;
    for i in 0..k {
        for j in 0..=i {
            let g = pencil.dot(psis[i].values(), psis[j].values());
            let target = if i == j { 1.0 } else { 0.0 };
            gram_defect = gram_defect.max((g - target).abs());
        }
    }
    let cluster_warning = mus.windows(2).any(|w| w[1] - w[0] < 10.0 * tol);
    Ok(EigenSystem {
        mus,
        psis,
        k,
        gram_defect,
        residuals,
        cluster_warning,
        weight_spread: pencil.weight_spread(),
        profile: pencil.profile.clone(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralGap {
    pub gamma: f64,
    /// `μ_2 = 2μ_1`: the remainder carries an extra factor `τ`.
    pub log_correction: bool,
}

/// `γ = min(μ_2/μ_1, 2) − 1`.
pub fn gap_from_ratio(ratio: f64) -> SpectralGap {
    SpectralGap { gamma: ratio.min(2.0) - 1.0, log_correction: (ratio - 2.0).abs() <= 1e-9 * 2.0 }
}

pub fn spectral_gap_gamma(sys: &EigenSystem) -> Result<SpectralGap> {
    if sys.mus.len() < 2 {
        return Err(Error::InvalidEigenRequest("spectral gap needs K >= 2".into()));
    }
    Ok(gap_from_ratio(sys.mus[1] / sys.mus[0]))
}
