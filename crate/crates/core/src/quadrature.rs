//! Adaptive Simpson quadrature for the reference solutions.

use crate::error::{Error, Result};

const MAX_DEPTH: u32 = 48;
/// Lower bound on the per-interval tolerance, as a fraction of the global one.
const EPS_FLOOR: f64 = 1e-6;

/// `∫_a^b f` to relative tolerance `tol` (relative to the coarse estimate).
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    let eps = tol * whole.abs().max(f64::MIN_POSITIVE);
    let mut failed = false;
    let floor = eps * EPS_FLOOR;
    let value = recurse(f, a, b, fa, fm, fb, whole, eps, floor, MAX_DEPTH, &mut failed);
    if failed || !value.is_finite() {
        return Err(Error::QuadratureFailure(format!(
            "no convergence on [{a}, {b}] at tolerance {tol:e}"
        )));
    }
    Ok(value)
}

#[allow(clippy::too_many_arguments)]
fn recurse<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    eps: f64,
    floor: f64,
    depth: u32,
    failed: &mut bool,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if delta.abs() <= 15.0 * eps {
        return left + right + delta / 15.0;
    }
    if depth == 0 {
        *failed = true;
        return left + right + delta / 15.0;
    }
    let half = (0.5 * eps).max(floor);
    recurse(f, a, m, fa, flm, fm, left, half, floor, depth - 1, failed)
        + recurse(f, m, b, fm, frm, fb, right, half, floor, depth - 1, failed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integrates_smooth_and_weakly_singular_functions() {
        let v = adaptive_simpson(&|x: f64| x.sin(), 0.0, std::f64::consts::PI, 1e-12).unwrap();
        assert!((v - 2.0).abs() < 1e-11);
        // ∫_0^1 √(x(1-x)) dx = π/8
        let v = adaptive_simpson(&|x: f64| (x * (1.0 - x)).sqrt(), 0.0, 1.0, 1e-12).unwrap();
        assert!((v - std::f64::consts::PI / 8.0).abs() < 1e-10);
    }

    #[test]
    fn reports_divergent_integrals() {
        let r = adaptive_simpson(&|x: f64| if x > 0.0 { 1.0 / x } else { 1e300 }, 0.0, 1.0, 1e-10);
        assert!(matches!(r, Err(Error::QuadratureFailure(_))));
    }
}
