//! Finite-difference probes of boundary regularity: expansion exponents,
//! third-derivative blow-up, relative-error exponents, time-derivative
//! decay and a discrete Hölder seminorm proxy.

use crate::asymptotics::{fit_decay_rate, RateFit};
use crate::error::{Error, Result};
use crate::evolution::{Trajectory, Variable};
use crate::geometry::{Field, Grid};
use crate::stationary::StationaryProfile;
use crate::stencil::series_derivative;

/// Boundary fit `v ≈ a·φ(d) + b·d^q` with `φ(d) = d` (expansions of `u^m`)
/// or `φ(d) = 1` (relative errors).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpansionFit {
    pub a: f64,
    pub b: f64,
    pub q: f64,
    /// Range of positions in boundary order (first node at the boundary).
    pub window: (usize, usize),
    pub rms: f64,
}

const Q_MIN: f64 = 1.02;
const Q_MAX: f64 = 6.0;

/// Default fit window `d ∈ [2h, 0.1 L]`, as positions in boundary order.
pub fn default_window(grid: &Grid) -> (usize, usize) {
    let h = grid.h();
    let hi = ((0.1 * grid.size() / h).floor() as usize).min(grid.n() / 2);
    (1, hi.saturating_sub(1))
}

fn boundary_samples(v: &Field, grid: &Grid, window: (usize, usize)) -> Result<(Vec<f64>, Vec<f64>)> {
    grid.check(v)?;
    let order = grid.boundary_order();
    if window.1 < window.0 + 5 || window.1 >= order.len() {
        return Err(Error::WindowTooSmall(window.1.saturating_sub(window.0) + 1));
    }
    let d = grid.boundary_distance();
    let idx = &order[window.0..=window.1];
    Ok((idx.iter().map(|&i| d[i]).collect(), idx.iter().map(|&i| v[i]).collect()))
}

/// Weighted least squares of `y ≈ c0 + c1·x^e` with weights `x^{-2}`
/// (favours the boundary end of the window); returns `(c0, c1, sse)`.
fn two_term(xs: &[f64], ys: &[f64], e: f64) -> Option<(f64, f64, f64)> {
    let (mut s00, mut s01, mut s11, mut r0, mut r1) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let g = x.powf(e);
        let w = x.powi(-2);
        s00 += w;
        s01 += w * g;
        s11 += w * g * g;
        r0 += w * y;
        r1 += w * g * y;
    }
    let det = s00 * s11 - s01 * s01;
    if !(det.abs() > 1e-14 * s00 * s11) {
        return None;
    }
    let c0 = (s11 * r0 - s01 * r1) / det;
    let c1 = (s00 * r1 - s01 * r0) / det;
    let sse: f64 = xs.iter().zip(ys).map(|(x, y)| x.powi(-2) * (y - c0 - c1 * x.powf(e)).powi(2)).sum();
    Some((c0, c1, sse))
}

/// Variable projection over `q`: coarse scan then golden-section refinement.
fn fit_exponent(xs: &[f64], ys: &[f64], offset: f64) -> Result<(f64, f64, f64)> {
    let sse = |q: f64| two_term(xs, ys, q - offset).map_or(f64::INFINITY, |r| r.2);
    let steps = ((Q_MAX - Q_MIN) / 0.01).round() as usize;
    let (mut best_q, mut best) = (Q_MIN, f64::INFINITY);
    for k in 0..=steps {
        let q = Q_MIN + 0.01 * k as f64;
        let s = sse(q);
        if s < best {
            best = s;
            best_q = q;
        }
    }
    if !best.is_finite() {
        return Err(Error::FitDiverged("no admissible exponent".into()));
    }
    let (mut lo, mut hi) = ((best_q - 0.01).max(Q_MIN), (best_q + 0.01).min(Q_MAX));
    let ratio = (5.0_f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - ratio * (hi - lo);
    let mut x2 = lo + ratio * (hi - lo);
    let (mut f1, mut f2) = (sse(x1), sse(x2));
    for _ in 0..60 {
        if f1 < f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - ratio * (hi - lo);
            f1 = sse(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + ratio * (hi - lo);
            f2 = sse(x2);
        }
    }
    let q = 0.5 * (lo + hi);
    if q <= Q_MIN + 1e-6 || q >= Q_MAX - 1e-6 {
        return Err(Error::FitDiverged(format!("exponent pinned at the search bound ({q})")));
    }
    let (c0, c1, _) = two_term(xs, ys, q - offset).ok_or_else(|| Error::FitDiverged("singular normal equations".into()))?;
    Ok((c0, c1, q))
}

fn fit_expansion(ds: &[f64], vs: &[f64], linear: bool, window: (usize, usize)) -> Result<ExpansionFit> {
    // v/d = a + b d^{q-1} for expansions; r = a + b d^q for relative errors
    let ys: Vec<f64> = if linear { vs.iter().zip(ds).map(|(v, d)| v / d).collect() } else { vs.to_vec() };
    let yscale = ys.iter().fold(0.0_f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
    let mean = ys.iter().sum::<f64>() / ys.len() as f64;
    let spread = ys.iter().fold(0.0_f64, |m, y| m.max((y - mean).abs()));
    if spread <= 1e-10 * yscale {
        return Err(Error::DegenerateCorrection);
    }
    let offset = if linear { 1.0 } else { 0.0 };
    let (a, b, q) = fit_exponent(ds, &ys, offset)?;
    let lead = |d: f64| if linear { a * d } else { a };
    let rms = (ds.iter().zip(vs).map(|(d, v)| (v - lead(*d) - b * d.powf(q)).powi(2)).sum::<f64>() / ds.len() as f64).sqrt();
    Ok(ExpansionFit { a, b, q, window, rms })
}

/// Fits `v ≈ a d + b d^q` over the default window.
pub fn fit_boundary_expansion(v: &Field, grid: &Grid) -> Result<ExpansionFit> {
    fit_boundary_expansion_in(v, grid, default_window(grid))
}

pub fn fit_boundary_expansion_in(v: &Field, grid: &Grid, window: (usize, usize)) -> Result<ExpansionFit> {
    let (ds, vs) = boundary_samples(v, grid, window)?;
    if vs.iter().any(|x| !(*x > 0.0)) {
        return Err(Error::DegenerateFit("v must be positive inside".into()));
    }
    fit_expansion(&ds, &vs, true, window)
}

/// Fits `u^m/Θ ≈ r_0 + b d^q`; `q` is the regularity exponent of the
/// relative error.
pub fn relative_error_regularity(u: &Field, profile: &StationaryProfile, m: f64) -> Result<ExpansionFit> {
    let grid = &profile.grid;
    grid.check(u)?;
    if u.values().iter().any(|x| !(*x > 0.0)) {
        return Err(Error::DegenerateFit("u must be positive inside".into()));
    }
    let ratio = u.zip_map(&profile.theta, |a, t| a.powf(m) / t)?;
    let window = default_window(grid);
    let (ds, rs) = boundary_samples(&ratio, grid, window)?;
    fit_expansion(&ds, &rs, false, window)
}

/// Slope of `log |D³v|` against `log d` over `d ∈ [4h, 0.1 L]`, with `D³`
/// the four-point third difference centred between nodes.
pub fn third_derivative_blowup(v: &Field, grid: &Grid) -> Result<RateFit> {
    grid.check(v)?;
    let h = grid.h();
    let order = grid.boundary_order();
    let d = grid.boundary_distance();
    let scale = v.max_abs();
    let noise = 100.0 * f64::EPSILON * scale / h.powi(3);
    let hi = 0.1 * grid.size();
    let mut logs = Vec::new();
    let mut mags = Vec::new();
    let mut quiet = 0usize;
    // stencil k-1, k, k+1, k+2 with the boundary value 0 before position 0
    let at = |k: isize| if k < 0 { 0.0 } else { v[order[k as usize]] };
    for k in 1..order.len().saturating_sub(2) {
        let centre = d[order[k]] + 0.5 * h;
        if centre < 4.0 * h || centre > hi {
            continue;
        }
        let k = k as isize;
        let d3 = (at(k + 2) - 3.0 * at(k + 1) + 3.0 * at(k) - at(k - 1)) / h.powi(3);
        if d3.abs() < noise {
            quiet += 1;
            continue;
        }
        logs.push(centre.ln());
        mags.push(d3.abs());
    }
    if mags.is_empty() || quiet > mags.len() {
        return Err(Error::NoiseDominated);
    }
    fit_decay_rate(&logs, &mags, (f64::NEG_INFINITY, f64::INFINITY))
}

/// Slope of `log sup_x |∂_t^ℓ u^m|` against `log t` over `window` (in `log t`).
pub fn time_derivative_decay(traj: &Trajectory, order: usize, window: (f64, f64)) -> Result<RateFit> {
    if traj.variable != Variable::U {
        return Err(Error::InvalidTime("expected a u-trajectory".into()));
    }
    if !(1..=2).contains(&order) {
        return Err(Error::InvalidTime(format!("derivative order must be 1 or 2, got {order}")));
    }
    if traj.len() < 3 {
        return Err(Error::WindowTooSmall(traj.len()));
    }
    let m = traj.exponent;
    let powers: Vec<Vec<f64>> = traj.fields.iter().map(|u| u.values().iter().map(|v| v.powf(m)).collect()).collect();
    let slices: Vec<&[f64]> = powers.iter().map(|v| v.as_slice()).collect();
    let mut logs = Vec::new();
    let mut sups = Vec::new();
    for k in 0..traj.len() {
        let t = traj.times[k];
        if !(t > 0.0) || t.ln() < window.0 || t.ln() > window.1 {
            continue;
        }
        let der = series_derivative(&traj.times, &slices, k, order);
        let sup = der.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
        let level = powers[k].iter().fold(0.0_f64, |a, v| a.max(v.abs()));
        let idx = crate::stencil::stencil(k, traj.len());
        let spacing = traj.times[idx[2]] - traj.times[idx[0]];
        if sup * spacing.powi(order as i32) < 100.0 * f64::EPSILON * level {
            return Err(Error::NoiseDominated);
        }
        logs.push(t.ln());
        sups.push(sup);
    }
    fit_decay_rate(&logs, &sups, window)
}

/// `sup |D²v(x) − D²v(y)| / |x − y|^α` over pairs in the default window.
pub fn holder_proxy(v: &Field, grid: &Grid, alpha: f64) -> Result<f64> {
    grid.check(v)?;
    let (lo, hi) = default_window(grid);
    let order = grid.boundary_order();
    if hi >= order.len() - 1 || hi < lo + 2 {
        return Err(Error::WindowTooSmall(hi.saturating_sub(lo) + 1));
    }
    let h = grid.h();
    let d = grid.boundary_distance();
    let at = |k: usize| v[order[k]];
    let second: Vec<(f64, f64)> = (lo..=hi)
        .map(|k| {
            let left = if k == 0 { 0.0 } else { at(k - 1) };
            (d[order[k]], (at(k + 1) - 2.0 * at(k) + left) / (h * h))
        })
        .collect();
    let mut best: f64 = 0.0;
    for i in 0..second.len() {
        for j in i + 1..second.len() {
            let (xi, fi) = second[i];
            let (xj, fj) = second[j];
            best = best.max((fi - fj).abs() / (xi - xj).abs().powf(alpha));
        }
    }
    Ok(best)
}

/// Smoothed boundary distance on `(0, L)`: equal to `d` within `L/4` of the
/// boundary, an even quartic (C² matched) in the middle.
pub fn smoothed_distance(x: f64, length: f64) -> f64 {
    let y = (x / length - 0.5).abs();
    if y >= 0.25 {
        x.min(length - x)
    } else {
        length * (13.0 / 32.0 - 3.0 * y * y + 8.0 * y.powi(4))
    }
}

/// Initial data `u0 = v0^{1/m}` with `v0 = a d̃ + C d̃^{2+1/m}`, where `a` is
/// the boundary slope of `Θ` and `C = a^{1/m} m² / ((m−1)(m+1)(2m+1))`.
pub fn boundary_layer_data(profile: &StationaryProfile) -> Field {
    let m = profile.m();
    let a = profile.slope_a;
    let c = a.powf(1.0 / m) * m * m / ((m - 1.0) * (m + 1.0) * (2.0 * m + 1.0));
    let length = profile.grid.size();
    profile.grid.field_from_fn(|x| {
        let d = smoothed_distance(x, length);
        (a * d + c * d.powf(2.0 + 1.0 / m)).powf(1.0 / m)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_grid, GridKind};

    fn grid(n: usize) -> Grid {
        build_grid(GridKind::Interval, 1, 1.0, n).unwrap()
    }

    #[test]
    fn polynomial_ground_truth() {
        let g = grid(1600);
        let v = g.field_from_fn(|x| x - x.powi(3));
        let fit = fit_boundary_expansion(&v, &g).unwrap();
        assert!((fit.q - 3.0).abs() < 0.02 * 3.0, "{fit:?}");
        assert!((fit.a - 1.0).abs() < 1e-8);
        let slope = third_derivative_blowup(&v, &g).unwrap();
        assert!(slope.slope.abs() < 0.01);
    }

    #[test]
    fn linear_data_is_degenerate() {
        let g = grid(400);
        let v = g.field_from_fn(|x| 0.3 * x.min(1.0 - x));
        assert!(matches!(fit_boundary_expansion(&v, &g), Err(Error::DegenerateCorrection)));
    }

    #[test]
    fn monomial_calibration() {
        let g = grid(1600);
        for q in [1.5, 2.5, 3.0] {
            let v = g.field_from_fn(|x| {
                let d = x.min(1.0 - x);
                d + 0.5 * d.powf(q)
            });
            let fit = fit_boundary_expansion(&v, &g).unwrap();
            assert!((fit.q - q).abs() < 0.01 * q, "{q}: {fit:?}");
        }
        let v = g.field_from_fn(|x| x.min(1.0 - x).powf(2.5));
        let s = third_derivative_blowup(&v, &g).unwrap();
        assert!((s.slope + 0.5).abs() < 0.05, "{s:?}");
    }

    #[test]
    fn small_grids_are_rejected() {
        let g = grid(20);
        let v = g.field_from_fn(|x| x - x.powi(3));
        assert!(matches!(fit_boundary_expansion(&v, &g), Err(Error::WindowTooSmall(_))));
    }

    #[test]
    fn smoothed_distance_matches_and_is_c2() {
        assert_eq!(smoothed_distance(0.1, 1.0), 0.1);
        assert!((smoothed_distance(0.9, 1.0) - 0.1).abs() < 1e-15);
        let e = 1e-6;
        for x in [0.25, 0.75] {
            let f = |x| smoothed_distance(x, 1.0);
            let d2l = (f(x - 2.0 * e) - 2.0 * f(x - e) + f(x)) / (e * e);
            let d2r = (f(x) - 2.0 * f(x + e) + f(x + 2.0 * e)) / (e * e);
            assert!((d2l - d2r).abs() < 1e-2, "{x}: {d2l} {d2r}");
        }
        assert!(smoothed_distance(0.5, 1.0) > 0.25);
    }

    #[test]
    fn holder_proxy_of_linear_function_vanishes() {
        let g = grid(200);
        let v = g.field_from_fn(|x| 2.0 * x + 1.0);
        assert!(holder_proxy(&v, &g, 0.5).unwrap() < 1e-6);
    }
}
