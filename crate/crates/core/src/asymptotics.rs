//! Large-time expansion: rescaling, modal projection of `h = θ − Θ`,
//! extraction of the mode constants, `A_1`, `τ*` and decay-rate fits.

use crate::error::{Error, Result};
use crate::evolution::{Trajectory, Variable};
use crate::geometry::Field;
use crate::spectrum::{gap_from_ratio, EigenSystem, SpectralGap};
use crate::stationary::{source_coefficient, StationaryProfile};
use crate::stencil::series_derivative;

/// `θ(x, τ) = t^{m/(m-1)} u^m(x, t)` with `τ = log t`.
pub fn rescale_trajectory(traj: &Trajectory) -> Result<Trajectory> {
    if traj.variable != Variable::U {
        return Err(Error::InvalidTime("expected a u-trajectory".into()));
    }
    let m = traj.exponent;
    if let Some(t) = traj.times.iter().find(|t| !(**t > 0.0)) {
        return Err(Error::InvalidTime(format!("rescaling needs t > 0, found t = {t}")));
    }
    let mut out = Trajectory::new(traj.grid.clone(), Variable::Theta, 1.0 / m);
    for (&t, u) in traj.times.iter().zip(&traj.fields) {
        let factor = t.powf(m / (m - 1.0));
        out.push(t.ln(), u.map(|v| factor * v.powf(m)));
    }
    out.step_log = traj.step_log.clone();
    Ok(out)
}

/// Inverse of [`rescale_trajectory`].
pub fn unscale_trajectory(traj: &Trajectory) -> Result<Trajectory> {
    if traj.variable != Variable::Theta {
        return Err(Error::InvalidTime("expected a theta-trajectory".into()));
    }
    let p = traj.exponent;
    let m = 1.0 / p;
    let mut out = Trajectory::new(traj.grid.clone(), Variable::U, m);
    for (&tau, th) in traj.times.iter().zip(&traj.fields) {
        let t = tau.exp();
        let factor = t.powf(-1.0 / (m - 1.0));
        out.push(t, th.map(|v| factor * v.max(0.0).powf(p)));
    }
    Ok(out)
}

/// Lumped `Θ^{p-1}`-weighted inner product.
pub fn weighted_dot(profile: &StationaryProfile, f: &[f64], g: &[f64]) -> f64 {
    let p = profile.p;
    profile
        .grid
        .mass()
        .iter()
        .zip(profile.theta.values())
        .zip(f.iter().zip(g))
        .map(|((m, t), (a, b))| m * t.powf(p - 1.0) * a * b)
        .sum()
}

pub fn weighted_norm(profile: &StationaryProfile, f: &[f64]) -> f64 {
    weighted_dot(profile, f, f).sqrt()
}

#[derive(Debug, Clone, Default)]
pub struct ModeSeries {
    pub taus: Vec<f64>,
    /// `betas[j][k] = ⟨h(·, τ_k), ψ_{j+1}⟩`.
    pub betas: Vec<Vec<f64>>,
    pub norm_h: Vec<f64>,
    /// `‖h − Σ_j β_j ψ_j‖`.
    pub tail_norm: Vec<f64>,
}

fn check_theta_traj(traj: &Trajectory, profile: &StationaryProfile) -> Result<()> {
    if traj.variable != Variable::Theta {
        return Err(Error::InvalidTime("expected a theta-trajectory".into()));
    }
    if traj.grid.key() != profile.grid.key() {
        return Err(Error::GridMismatch);
    }
    Ok(())
}

/// `β_j(τ) = ⟨θ(·, τ) − Θ, ψ_j⟩` for `j = 1..=k`.
pub fn project_modes(traj: &Trajectory, profile: &StationaryProfile, sys: &EigenSystem, k: usize) -> Result<ModeSeries> {
    check_theta_traj(traj, profile)?;
    if k > sys.psis.len() {
        return Err(Error::InvalidEigenRequest(format!("asked for {k} modes, system holds {}", sys.psis.len())));
    }
    let mut out = ModeSeries { taus: traj.times.clone(), betas: vec![Vec::with_capacity(traj.len()); k], ..Default::default() };
    for th in &traj.fields {
        let h: Vec<f64> = th.values().iter().zip(profile.theta.values()).map(|(a, b)| a - b).collect();
        let mut rest = h.clone();
        for (j, psi) in sys.psis.iter().take(k).enumerate() {
            let b = weighted_dot(profile, &h, psi.values());
            out.betas[j].push(b);
            rest.iter_mut().zip(psi.values()).for_each(|(r, q)| *r -= b * q);
        }
        out.norm_h.push(weighted_norm(profile, &h));
        out.tail_norm.push(weighted_norm(profile, &rest));
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeConstant {
    /// 1-based mode index.
    pub j: usize,
    pub c: f64,
    /// Difference between the averages over the two halves of the window.
    pub drift: f64,
}

/// `c_j` = mean of `e^{μ_j τ/p} β_j(τ)` over `window`, for the modes with
/// `μ_j/p < 2`.
pub fn extract_cj(series: &ModeSeries, mus: &[f64], p: f64, window: (f64, f64)) -> Result<Vec<ModeConstant>> {
    let idx: Vec<usize> = (0..series.taus.len()).filter(|&k| series.taus[k] >= window.0 && series.taus[k] <= window.1).collect();
    if idx.len() < 4 {
        return Err(Error::WindowTooSmall(idx.len()));
    }
    let half = idx.len() / 2;
    let mut out = Vec::new();
    for (j, &mu) in mus.iter().enumerate().take(series.betas.len()) {
        if mu / p >= 2.0 {
            break;
        }
        let scaled: Vec<f64> = idx.iter().map(|&k| (mu / p * series.taus[k]).exp() * series.betas[j][k]).collect();
        let mean = |s: &[f64]| s.iter().sum::<f64>() / s.len() as f64;
        let c = mean(&scaled);
        let drift = (mean(&scaled[..half]) - mean(&scaled[half..])).abs();
        // absolute floor for modes that are absent
        let floor = 1e-10 * series.norm_h.iter().copied().fold(0.0, f64::max).max(f64::MIN_POSITIVE);
        if drift > 0.1 * c.abs() && drift > floor {
            return Err(Error::NotConverged { j: j + 1, drift, c });
        }
        out.push(ModeConstant { j: j + 1, c, drift });
    }
    Ok(out)
}

/// `A_1 = −c_1 / ‖Θ‖` and `τ* = (m−1) A_1 / m`.
pub fn compute_a1_tau_star(c1: f64, profile: &StationaryProfile, m: f64) -> (f64, f64) {
    let a1 = -c1 / profile.norm_theta;
    (a1, (m - 1.0) * a1 / m)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub stderr: f64,
    pub samples: usize,
    pub window: (f64, f64),
}

/// Least-squares slope of `log value` against `x` over `window`.
pub fn fit_decay_rate(xs: &[f64], values: &[f64], window: (f64, f64)) -> Result<RateFit> {
    let pts: Vec<(f64, f64)> = xs
        .iter()
        .zip(values)
        .filter(|(x, _)| **x >= window.0 && **x <= window.1)
        .map(|(x, v)| (*x, *v))
        .collect();
    if pts.len() < 12 {
        return Err(Error::WindowTooSmall(pts.len()));
    }
    if let Some((x, v)) = pts.iter().find(|(_, v)| !(*v > 0.0)) {
        return Err(Error::DegenerateFit(format!("non-positive value {v} at {x}")));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1.ln()).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if !(sxx > 0.0) {
        return Err(Error::DegenerateFit("zero variance in the abscissa".into()));
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1.ln() - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = pts.iter().map(|p| (p.1.ln() - intercept - slope * p.0).powi(2)).sum();
    let stderr = (sse / (n - 2.0) / sxx).sqrt();
    Ok(RateFit { slope, intercept, stderr, samples: pts.len(), window })
}

/// `(1+r)^p − 1 − p r` without cancellation.
fn pow_defect(r: f64, p: f64) -> f64 {
    if r.abs() < 1e-3 {
        let c2 = p * (p - 1.0) / 2.0;
        let c3 = c2 * (p - 2.0) / 3.0;
        let c4 = c3 * (p - 3.0) / 4.0;
        r * r * (c2 + r * (c3 + r * c4))
    } else {
        (p * r.ln_1p()).exp_m1() - p * r
    }
}

/// Nonlinear remainder
/// `N(h) = λΘ^p[(1+h/Θ)^p − 1 − p h/Θ] + pΘ^{p−1}[1 − (1+h/Θ)^{p−1}] h_τ`.
pub fn nonlinear_term(profile: &StationaryProfile, h: &[f64], h_tau: &[f64]) -> Vec<f64> {
    let p = profile.p;
    let lambda = source_coefficient(p);
    profile
        .theta
        .values()
        .iter()
        .zip(h.iter().zip(h_tau))
        .map(|(t, (hv, ht))| {
            let r = hv / t;
            lambda * t.powf(p) * pow_defect(r, p) - p * t.powf(p - 1.0) * ((p - 1.0) * r.ln_1p()).exp_m1() * ht
        })
        .collect()
}

/// `N(h)` at stamp `k`, with `h_τ` from three-point differences.
pub fn residual_n(traj: &Trajectory, profile: &StationaryProfile, k: usize) -> Result<Field> {
    check_theta_traj(traj, profile)?;
    if traj.len() < 3 {
        return Err(Error::WindowTooSmall(traj.len()));
    }
    let slices: Vec<&[f64]> = traj.fields.iter().map(|f| f.values()).collect();
    let h_tau = series_derivative(&traj.times, &slices, k, 1);
    let h: Vec<f64> = traj.fields[k].values().iter().zip(profile.theta.values()).map(|(a, b)| a - b).collect();
    traj.grid.field(nonlinear_term(profile, &h, &h_tau))
}

/// `sup_x |N(h)| / Θ^p` at every stamp.
pub fn residual_ratio_series(traj: &Trajectory, profile: &StationaryProfile) -> Result<Vec<f64>> {
    let p = profile.p;
    (0..traj.len())
        .map(|k| {
            let n = residual_n(traj, profile, k)?;
            Ok(n.values().iter().zip(profile.theta.values()).fold(0.0_f64, |m, (v, t)| m.max(v.abs() / t.powf(p))))
        })
        .collect()
}

/// `‖u/U − 1‖_∞ = ‖(θ/Θ)^p − 1‖_∞` at every stamp.
pub fn relative_deviation_series(traj: &Trajectory, profile: &StationaryProfile) -> Result<Vec<f64>> {
    check_theta_traj(traj, profile)?;
    let p = profile.p;
    Ok(traj
        .fields
        .iter()
        .map(|th| {
            th.values()
                .iter()
                .zip(profile.theta.values())
                .fold(0.0_f64, |m, (a, b)| m.max((p * (a / b).ln()).exp_m1().abs()))
        })
        .collect())
}

/// `‖θ − Θ + A_1 e^{−τ} Θ‖` at every stamp.
pub fn remainder_series(traj: &Trajectory, profile: &StationaryProfile, a1: f64) -> Result<Vec<f64>> {
    check_theta_traj(traj, profile)?;
    Ok(traj
        .times
        .iter()
        .zip(&traj.fields)
        .map(|(tau, th)| {
            let shift = a1 * (-tau).exp();
            let r: Vec<f64> =
                th.values().iter().zip(profile.theta.values()).map(|(a, b)| a - b + shift * b).collect();
            weighted_norm(profile, &r)
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AsymptoticsOptions {
    /// Number of modes projected.
    pub modes: usize,
    /// Window for the mode constants.
    pub tail_window: (f64, f64),
    /// Window for the decay-rate fits.
    pub fit_window: (f64, f64),
}

#[derive(Debug, Clone)]
pub struct AsymptoticsReport {
    pub c_js: Vec<ModeConstant>,
    pub a1: f64,
    pub tau_star: f64,
    pub gap: SpectralGap,
    /// `d log ‖h‖ / dτ`.
    pub slope_h: RateFit,
    /// `d log ‖u/U − 1‖_∞ / d log t`.
    pub slope_stability: RateFit,
    /// After subtracting the first mode.
    pub slope_remainder: RateFit,
    /// `d log sup |N(h)|/Θ^p / dτ`.
    pub slope_n: RateFit,
    pub fit_window: (f64, f64),
    pub residual_bound_ok: bool,
    pub series: ModeSeries,
    pub remainder: Vec<f64>,
    pub n_ratio: Vec<f64>,
}

impl AsymptoticsReport {
    pub fn fit_stderr(&self) -> [f64; 4] {
        [self.slope_h.stderr, self.slope_stability.stderr, self.slope_remainder.stderr, self.slope_n.stderr]
    }
}

pub fn analyze(
    traj: &Trajectory,
    profile: &StationaryProfile,
    sys: &EigenSystem,
    opts: AsymptoticsOptions,
) -> Result<AsymptoticsReport> {
    check_theta_traj(traj, profile)?;
    if opts.fit_window.1 - opts.fit_window.0 < 3.0 {
        return Err(Error::DegenerateFit("fit window must span at least 3 units of tau".into()));
    }
    let p = profile.p;
    let m = 1.0 / p;
    let series = project_modes(traj, profile, sys, opts.modes.min(sys.psis.len()))?;
    let c_js = extract_cj(&series, &sys.mus, p, opts.tail_window)?;
    let c1 = c_js.first().map_or(0.0, |c| c.c);
    let (a1, tau_star) = compute_a1_tau_star(c1, profile, m);
    let gap = if sys.mus.len() >= 2 { gap_from_ratio(sys.mus[1] / sys.mus[0]) } else { gap_from_ratio(2.0) };

    let slope_h = fit_decay_rate(&series.taus, &series.norm_h, opts.fit_window)?;
    let deviation = relative_deviation_series(traj, profile)?;
    let slope_stability = fit_decay_rate(&traj.times, &deviation, opts.fit_window)?;
    let remainder = remainder_series(traj, profile, a1)?;
    let fitted_remainder: Vec<f64> = if gap.log_correction {
        remainder.iter().zip(&traj.times).map(|(r, t)| r / t.max(1.0)).collect()
    } else {
        remainder.clone()
    };
    let slope_remainder = fit_decay_rate(&traj.times, &fitted_remainder, opts.fit_window)?;
    let n_ratio = residual_ratio_series(traj, profile)?;
    let slope_n = fit_decay_rate(&traj.times, &n_ratio, opts.fit_window)?;
    Ok(AsymptoticsReport {
        c_js,
        a1,
        tau_star,
        gap,
        slope_h,
        slope_stability,
        slope_remainder,
        residual_bound_ok: (slope_n.slope + 2.0).abs() <= 0.3,
        slope_n,
        fit_window: opts.fit_window,
        series,
        remainder,
        n_ratio,
    })
}
