//! Tridiagonal kernels: Thomas elimination, partially pivoted elimination,
//! and Sturm counts for symmetric tridiagonal matrices.

/// Symmetric tridiagonal matrix stored as its diagonal and first off-diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct SymTridiag {
    pub diag: Vec<f64>,
    pub off: Vec<f64>,
}

impl SymTridiag {
    pub fn new(diag: Vec<f64>, off: Vec<f64>) -> Self {
        assert_eq!(off.len() + 1, diag.len().max(1));
        Self { diag, off }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let n = self.diag.len();
        let mut y = vec![0.0; n];
        for i in 0..n {
            let mut acc = self.diag[i] * x[i];
            if i > 0 {
                acc += self.off[i - 1] * x[i - 1];
            }
            if i + 1 < n {
                acc += self.off[i] * x[i + 1];
            }
            y[i] = acc;
        }
        y
    }

    /// Gershgorin interval containing the whole spectrum.
    pub fn gershgorin(&self) -> (f64, f64) {
        let n = self.diag.len();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let mut r = 0.0;
            if i > 0 {
                r += self.off[i - 1].abs();
            }
            if i + 1 < n {
                r += self.off[i].abs();
            }
            lo = lo.min(self.diag[i] - r);
            hi = hi.max(self.diag[i] + r);
        }
        (lo, hi)
    }

    /// Number of eigenvalues strictly below `sigma` (Sylvester inertia of `T - sigma I`).
    pub fn count_below(&self, sigma: f64) -> usize {
        let n = self.diag.len();
        let tiny = f64::MIN_POSITIVE.sqrt();
        let mut count = 0;
        let mut d = 1.0;
        for i in 0..n {
            let coupling = if i > 0 { self.off[i - 1] * self.off[i - 1] / d } else { 0.0 };
            d = self.diag[i] - sigma - coupling;
            if d == 0.0 {
                d = -tiny;
            }
            if d < 0.0 {
                count += 1;
            }
        }
        count
    }

    /// Bisection for the `index`-th eigenvalue (0-based, ascending).
    pub fn bisect_eigenvalue(&self, index: usize, rel_tol: f64) -> f64 {
        let (mut lo, mut hi) = self.gershgorin();
        let scale = lo.abs().max(hi.abs()).max(f64::MIN_POSITIVE);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.count_below(mid) > index {
                hi = mid;
            } else {
                lo = mid;
            }
            if hi - lo <= rel_tol * mid.abs().max(f64::EPSILON * scale) {
                break;
            }
        }
        0.5 * (lo + hi)
    }

    /// Solves `(T - shift I) x = b` with partial pivoting.
    pub fn solve_shifted(&self, shift: f64, b: &[f64]) -> Option<Vec<f64>> {
        let n = self.diag.len();
        let lower: Vec<f64> = self.off.clone();
        let upper: Vec<f64> = self.off.clone();
        let diag: Vec<f64> = self.diag.iter().map(|d| d - shift).collect();
        solve_tridiagonal_pivoted(&lower, &diag, &upper, b).or_else(|| {
            // exact singularity: nudge the shift by one ulp-scale amount
            let eps = f64::EPSILON * (shift.abs() + 1.0) * n as f64;
            let diag: Vec<f64> = self.diag.iter().map(|d| d - shift - eps).collect();
            solve_tridiagonal_pivoted(&lower, &diag, &upper, b)
        })
    }
}

/// Thomas algorithm. `lower[i]` couples row `i+1` to column `i`, `upper[i]`
/// couples row `i` to column `i+1`. Returns `None` on a zero pivot.
pub fn solve_tridiagonal(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[f64]) -> Option<Vec<f64>> {
    let n = diag.len();
    if n == 0 {
        return Some(Vec::new());
    }
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut beta = diag[0];
    if beta == 0.0 || !beta.is_finite() {
        return None;
    }
    d[0] = rhs[0] / beta;
    for i in 1..n {
        c[i - 1] = upper[i - 1] / beta;
        beta = diag[i] - lower[i - 1] * c[i - 1];
        if beta == 0.0 || !beta.is_finite() {
            return None;
        }
        d[i] = (rhs[i] - lower[i - 1] * d[i - 1]) / beta;
    }
    for i in (0..n - 1).rev() {
        d[i] -= c[i] * d[i + 1];
    }
    Some(d)
}

/// Gaussian elimination with partial pivoting for a tridiagonal system
/// (fill-in confined to a second super-diagonal).
pub fn solve_tridiagonal_pivoted(
    lower: &[f64],
    diag: &[f64],
    upper: &[f64],
    rhs: &[f64],
) -> Option<Vec<f64>> {
    let n = diag.len();
    if n == 0 {
        return Some(Vec::new());
    }
    let mut d = diag.to_vec();
    let mut u1: Vec<f64> = (0..n).map(|i| if i + 1 < n { upper[i] } else { 0.0 }).collect();
    let mut u2 = vec![0.0; n];
    let mut l: Vec<f64> = (0..n).map(|i| if i + 1 < n { lower[i] } else { 0.0 }).collect();
    let mut b = rhs.to_vec();
    for i in 0..n.saturating_sub(1) {
        if l[i].abs() > d[i].abs() {
            // swap rows i and i+1
            std::mem::swap(&mut d[i], &mut l[i]);
            std::mem::swap(&mut d[i + 1], &mut u1[i]);
            let next_u1 = if i + 1 < n { u1[i + 1] } else { 0.0 };
            u1[i + 1] = 0.0;
            u2[i] = next_u1;
            // row i+1 now holds the old row i: (l[i] in col i, d[i+1] in col i+1, u1[i+1] in col i+2)
            b.swap(i, i + 1);
        }
        if d[i] == 0.0 {
            return None;
        }
        let f = l[i] / d[i];
        d[i + 1] -= f * u1[i];
        if i + 1 < n - 1 {
            u1[i + 1] -= f * u2[i];
        }
        b[i + 1] -= f * b[i];
        l[i] = f;
    }
    if d[n - 1] == 0.0 {
        return None;
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut acc = b[i];
        if i + 1 < n {
            acc -= u1[i] * x[i + 1];
        }
        if i + 2 < n {
            acc -= u2[i] * x[i + 2];
        }
        x[i] = acc / d[i];
        if !x[i].is_finite() {
            return None;
        }
    }
    Some(x)
}
