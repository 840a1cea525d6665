//! Three-point Lagrange differentiation on non-uniform stamps.

/// Weights `(first, second)` such that `f'(x) ≈ Σ first_k f(t_k)` and
/// `f''(x) ≈ Σ second_k f(t_k)`.
pub fn lagrange3_weights(t: [f64; 3], x: f64) -> ([f64; 3], [f64; 3]) {
    let mut d1 = [0.0; 3];
    let mut d2 = [0.0; 3];
    for k in 0..3 {
        let (a, b) = ((k + 1) % 3, (k + 2) % 3);
        let den = (t[k] - t[a]) * (t[k] - t[b]);
        d1[k] = ((x - t[a]) + (x - t[b])) / den;
        d2[k] = 2.0 / den;
    }
    (d1, d2)
}

/// Stencil indices around `k` in a series of length `len >= 3`: centred in
/// the interior, one-sided at the ends.
pub fn stencil(k: usize, len: usize) -> [usize; 3] {
    assert!(len >= 3 && k < len);
    let start = k.saturating_sub(1).min(len - 3);
    [start, start + 1, start + 2]
}

/// Nodewise `ℓ`-th derivative (`ℓ ∈ {1, 2}`) of a sampled vector series at
/// stamp `k`.
pub fn series_derivative(times: &[f64], series: &[&[f64]], k: usize, order: usize) -> Vec<f64> {
    let idx = stencil(k, times.len());
    let (d1, d2) = lagrange3_weights([times[idx[0]], times[idx[1]], times[idx[2]]], times[k]);
    let w = if order == 1 { d1 } else { d2 };
    let n = series[k].len();
    (0..n).map(|i| (0..3).map(|j| w[j] * series[idx[j]][i]).sum()).collect()
}
