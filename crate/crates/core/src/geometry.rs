//! Uniform grids on the interval `(0, L)` and on the radially symmetric ball
//! of radius `R`, together with the boundary distance and singular-weight
//! quadrature.
//!
//! Both geometries share one vertex-centred finite-volume layout: node `i`
//! owns a control volume of measure `mass[i]` and is coupled to its
//! neighbours through face conductances. Homogeneous Dirichlet values sit
//! on the boundary (never stored); on radial grids the face at `r = h/2`
//! carries zero flux, which encodes the symmetry condition at the centre.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tridiag::SymTridiag;

/// Minimum number of interior nodes accepted by [`build_grid`].
pub const MIN_NODES: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GridKind {
    Interval,
    Radial,
}

/// Identity of a grid; two fields are compatible iff their keys match.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct GridKey {
    kind: GridKind,
    dim: usize,
    n: usize,
    size_bits: u64,
}

#[derive(Debug, Clone)]
pub struct Grid {
    kind: GridKind,
    dim: usize,
    size: f64,
    h: f64,
    nodes: Vec<f64>,
    mass: Vec<f64>,
    /// Face conductances; face `j` separates node `j - 1` (or the left
    /// boundary / centre) from node `j`. Length `n + 1`.
    conductance: Vec<f64>,
    sphere_area: f64,
}

/// Samples aligned with the nodes of one grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    key: GridKey,
    values: Vec<f64>,
}

impl Field {
    pub fn key(&self) -> GridKey {
        self.key
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Field {
        Field { key: self.key, values: self.values.iter().map(|&v| f(v)).collect() }
    }

    pub fn zip_map(&self, other: &Field, f: impl Fn(f64, f64) -> f64) -> Result<Field> {
        if self.key != other.key {
            return Err(Error::GridMismatch);
        }
        Ok(Field {
            key: self.key,
            values: self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect(),
        })
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

impl std::ops::Index<usize> for Field {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.values[i]
    }
}

/// Surface area of the unit sphere in `R^n` (2 for `n = 1`).
pub fn unit_sphere_area(n: usize) -> f64 {
    // Γ(n/2) by the half-integer recursion
    let half = n as f64 / 2.0;
    let mut gamma = if n.is_multiple_of(2) { 1.0 } else { std::f64::consts::PI.sqrt() };
    let mut x = if n.is_multiple_of(2) { 1.0 } else { 0.5 };
    while x < half - 1e-12 {
        gamma *= x;
        x += 1.0;
    }
    2.0 * std::f64::consts::PI.powf(half) / gamma
}

impl Grid {
    /// Uniform grid without the resolution floor of [`build_grid`].
    pub fn uniform(kind: GridKind, dim: usize, size: f64, n: usize) -> Result<Grid> {
        if !(size > 0.0) || !size.is_finite() {
            return Err(Error::InvalidGrid(format!("domain size must be positive, got {size}")));
        }
        if n == 0 {
            return Err(Error::InvalidGrid("need at least one interior node".into()));
        }
        let dim = match kind {
            GridKind::Interval => 1,
            GridKind::Radial if dim == 0 => {
                return Err(Error::InvalidGrid("radial grids need dim >= 1".into()))
            }
            GridKind::Radial => dim,
        };
        let h = size / (n as f64 + 1.0);
        let nodes: Vec<f64> = (1..=n).map(|i| i as f64 * h).collect();
        let (mass, conductance, sphere_area) = match kind {
            GridKind::Interval => (vec![h; n], vec![1.0 / h; n + 1], 1.0),
            GridKind::Radial => {
                let area = unit_sphere_area(dim);
                let d = dim as f64;
                let face = |j: usize| (j as f64 + 0.5) * h;
                let mut conductance = vec![0.0; n + 1];
                for (j, c) in conductance.iter_mut().enumerate().skip(1) {
                    *c = area * face(j).powi(dim as i32 - 1) / h;
                }
                let mass = (0..n)
                    .map(|i| {
                        let inner = if i == 0 { 0.0 } else { face(i) };
                        area * (face(i + 1).powf(d) - inner.powf(d)) / d
                    })
                    .collect();
                (mass, conductance, area)
            }
        };
        Ok(Grid { kind, dim, size, h, nodes, mass, conductance, sphere_area })
    }

    pub fn kind(&self) -> GridKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn size(&self) -> f64 {
        self.size
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn n(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Lumped control-volume measures (including `r^{n-1}` and the sphere area).
    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    pub fn sphere_area(&self) -> f64 {
        self.sphere_area
    }

    pub fn key(&self) -> GridKey {
        GridKey { kind: self.kind, dim: self.dim, n: self.n(), size_bits: self.size.to_bits() }
    }

    pub fn field(&self, values: Vec<f64>) -> Result<Field> {
        if values.len() != self.n() {
            return Err(Error::GridMismatch);
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidInitialData(format!("non-finite sample {bad}")));
        }
        Ok(Field { key: self.key(), values })
    }

    pub fn field_from_fn(&self, f: impl Fn(f64) -> f64) -> Field {
        Field { key: self.key(), values: self.nodes.iter().map(|&x| f(x)).collect() }
    }

    pub fn zeros(&self) -> Field {
        Field { key: self.key(), values: vec![0.0; self.n()] }
    }

    pub fn check(&self, f: &Field) -> Result<()> {
        if f.key != self.key() {
            return Err(Error::GridMismatch);
        }
        Ok(())
    }

    pub fn boundary_distance(&self) -> Field {
        let size = self.size;
        match self.kind {
            GridKind::Interval => self.field_from_fn(|x| x.min(size - x)),
            GridKind::Radial => self.field_from_fn(|r| size - r),
        }
    }

    /// Stiffness matrix `K` (symmetric, positive definite): `-Δ_h = M^{-1} K`.
    pub fn stiffness(&self) -> SymTridiag {
        let n = self.n();
        let c = &self.conductance;
        let diag = (0..n).map(|i| c[i] + c[i + 1]).collect();
        let off = (0..n.saturating_sub(1)).map(|i| -c[i + 1]).collect();
        SymTridiag::new(diag, off)
    }

    /// `K u` with zero Dirichlet data.
    pub fn stiffness_apply(&self, u: &[f64]) -> Vec<f64> {
        let n = self.n();
        let c = &self.conductance;
        (0..n)
            .map(|i| {
                let left = if i > 0 { u[i - 1] } else { 0.0 };
                let right = if i + 1 < n { u[i + 1] } else { 0.0 };
                c[i] * (u[i] - left) + c[i + 1] * (u[i] - right)
            })
            .collect()
    }

    /// Discrete Laplacian `Δ_h u = -M^{-1} K u`.
    pub fn laplacian(&self, u: &[f64]) -> Vec<f64> {
        self.stiffness_apply(u).iter().zip(&self.mass).map(|(k, m)| -k / m).collect()
    }

    /// Mass-lumped inner product `Σ M_i f_i g_i w_i`.
    pub fn lumped_dot(&self, f: &[f64], g: &[f64], w: Option<&[f64]>) -> f64 {
        match w {
            Some(w) => (0..self.n()).map(|i| self.mass[i] * f[i] * g[i] * w[i]).sum(),
            None => (0..self.n()).map(|i| self.mass[i] * f[i] * g[i]).sum(),
        }
    }

    /// Node indices ordered by increasing distance from the reference
    /// boundary (`x = 0` on intervals, `r = R` on balls).
    pub fn boundary_order(&self) -> Vec<usize> {
        match self.kind {
            GridKind::Interval => (0..self.n()).collect(),
            GridKind::Radial => (0..self.n()).rev().collect(),
        }
    }
}

/// Builds a uniform grid; rejects fewer than [`MIN_NODES`] interior nodes.
pub fn build_grid(kind: GridKind, dim: usize, size: f64, n: usize) -> Result<Grid> {
    if n < MIN_NODES {
        return Err(Error::InvalidGrid(format!("N = {n} is below the resolution floor {MIN_NODES}")));
    }
    Grid::uniform(kind, dim, size, n)
}

pub fn boundary_distance(grid: &Grid) -> Field {
    grid.boundary_distance()
}

/// Local power of `w` at a boundary, from its samples at distance `h` and `2h`,
/// snapped to the nearest non-negative integer.
fn boundary_power(w_h: f64, w_2h: f64) -> f64 {
    let ratio = w_2h / w_h;
    if !(ratio > 0.0) || !ratio.is_finite() {
        return 0.0;
    }
    ratio.log2().round().max(0.0)
}

/// Integral over `[0, 2h]` of `G(d) d^s` where `G` is the linear interpolant
/// of `g_h = G(h)` and `g_2h = G(2h)`.
fn end_cells(h: f64, s: f64, g_h: f64, g_2h: f64) -> f64 {
    let scale = (2.0 * h).powf(s + 1.0) / ((s + 1.0) * (s + 2.0));
    scale * (2.0 * g_h + s * g_2h)
}

/// Quadrature of `∫ f g w^exponent dμ` over the domain (`dμ` is the
/// n-dimensional measure on balls).
///
/// Writes the integrand as `G(d)·d^s`, where `s = exponent · q` and `q` is
/// the vanishing order of `w` read off the two nodes next to each Dirichlet
/// boundary, and integrates piecewise-linear `G` exactly against `d^s` on
/// each half of the domain (the two end cells share one linear piece). The
/// centre cell of a ball integrates an even quadratic.
pub fn weighted_inner_product(grid: &Grid, f: &Field, g: &Field, w: &Field, exponent: f64) -> Result<f64> {
    grid.check(f)?;
    grid.check(g)?;
    grid.check(w)?;
    let n = grid.n();
    if n < 4 {
        return Err(Error::InvalidGrid("quadrature needs at least 4 interior nodes".into()));
    }
    if exponent != 0.0 {
        if let Some(i) = w.values.iter().position(|&v| !(v > 0.0)) {
            return Err(Error::InvalidWeight(format!("weight must be positive, node {i} holds {}", w[i])));
        }
    }
    let h = grid.h;
    let d = grid.boundary_distance();
    let measure = |i: usize| match grid.kind {
        GridKind::Interval => 1.0,
        GridKind::Radial => grid.sphere_area * grid.nodes[i].powi(grid.dim as i32 - 1),
    };
    let weight_pow = |i: usize| if exponent == 0.0 { 1.0 } else { w[i].powf(exponent) };
    let integrand: Vec<f64> = (0..n).map(|i| f[i] * g[i] * weight_pow(i) * measure(i)).collect();

    let power = |near: usize, far: usize| -> Result<f64> {
        let q = if exponent == 0.0 { 0.0 } else { boundary_power(w[near], w[far]) };
        let s = exponent * q;
        if s <= -1.0 {
            return Err(Error::DivergentWeight { exponent, power: s });
        }
        Ok(s)
    };
    let reduced = |i: usize, s: f64| integrand[i] / d[i].powf(s);
    let end = |near: usize, far: usize, s: f64| end_cells(h, s, reduced(near, s), reduced(far, s));
    let trapezoid = |i: usize| 0.5 * h * (integrand[i] + integrand[i + 1]);
    // cell [x_i, x_{i+1}] with G linear against d^s
    let product = |i: usize, s: f64| {
        if s == 0.0 {
            return trapezoid(i);
        }
        let (a, b) = if d[i] < d[i + 1] { (i, i + 1) } else { (i + 1, i) };
        let (da, db) = (d[a], d[b]);
        let i0 = (db.powf(s + 1.0) - da.powf(s + 1.0)) / (s + 1.0);
        let i1 = (db.powf(s + 2.0) - da.powf(s + 2.0)) / (s + 2.0);
        (reduced(a, s) * (db * i0 - i1) + reduced(b, s) * (i1 - da * i0)) / (db - da)
    };
    let half = 0.5 * grid.size;
    let x = &grid.nodes;

    let total = match grid.kind {
        GridKind::Interval => {
            let (sl, sr) = (power(0, 1)?, power(n - 1, n - 2)?);
            let mut acc = end(0, 1, sl) + end(n - 1, n - 2, sr);
            for i in 1..n - 2 {
                acc += if x[i + 1] <= half {
                    product(i, sl)
                } else if x[i] >= half {
                    product(i, sr)
                } else {
                    trapezoid(i)
                };
            }
            acc
        }
        GridKind::Radial => {
            let s = power(n - 1, n - 2)?;
            // even quadratic a + b r^2 through the first two samples (measure excluded)
            let f0 = f[0] * g[0] * weight_pow(0);
            let f1 = f[1] * g[1] * weight_pow(1);
            let b = (f1 - f0) / (3.0 * h * h);
            let a = f0 - b * h * h;
            let nd = grid.dim as f64;
            let mut acc = grid.sphere_area * (a * h.powf(nd) / nd + b * h.powf(nd + 2.0) / (nd + 2.0));
            acc += end(n - 1, n - 2, s);
            for i in 0..n - 2 {
                acc += if x[i] >= half { product(i, s) } else { trapezoid(i) };
            }
            acc
        }
    };
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn uniform_partition_arithmetic() {
        let g = Grid::uniform(GridKind::Interval, 1, 1.0, 3).unwrap();
        assert_eq!(g.h(), 0.25);
        assert_eq!(g.nodes(), &[0.25, 0.5, 0.75]);
        let g = build_grid(GridKind::Interval, 1, 1.0, 400).unwrap();
        assert_eq!(g.h(), 1.0 / 401.0);
        assert_relative_eq!(g.h() * 401.0, 1.0, epsilon = 1e-15);
        let g = build_grid(GridKind::Radial, 3, 1.0, 200).unwrap();
        for (i, r) in g.nodes().iter().enumerate() {
            assert_relative_eq!(*r, (i + 1) as f64 / 201.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn rejects_coarse_or_empty_domains() {
        assert!(matches!(build_grid(GridKind::Interval, 1, 1.0, 7), Err(Error::InvalidGrid(_))));
        assert!(matches!(build_grid(GridKind::Interval, 1, 0.0, 100), Err(Error::InvalidGrid(_))));
        assert!(matches!(build_grid(GridKind::Radial, 3, -1.0, 100), Err(Error::InvalidGrid(_))));
        assert!(matches!(build_grid(GridKind::Radial, 0, 1.0, 100), Err(Error::InvalidGrid(_))));
        // interval forces dim = 1
        assert_eq!(build_grid(GridKind::Interval, 3, 1.0, 10).unwrap().dim(), 1);
    }

    #[test]
    fn boundary_distance_examples() {
        let g = Grid::uniform(GridKind::Interval, 1, 1.0, 3).unwrap();
        let d = g.boundary_distance();
        assert_eq!(d[0], 0.25);
        assert_eq!(d[2], 0.25);
        let g = build_grid(GridKind::Radial, 3, 1.0, 9).unwrap();
        let d = g.boundary_distance();
        assert_relative_eq!(d[8], 0.1, epsilon = 1e-15);
    }

    #[test]
    fn sphere_areas() {
        assert_relative_eq!(unit_sphere_area(1), 2.0, epsilon = 1e-14);
        assert_relative_eq!(unit_sphere_area(2), 2.0 * std::f64::consts::PI, epsilon = 1e-14);
        assert_relative_eq!(unit_sphere_area(3), 4.0 * std::f64::consts::PI, epsilon = 1e-14);
        assert_relative_eq!(unit_sphere_area(4), 2.0 * std::f64::consts::PI.powi(2), epsilon = 1e-13);
    }

    #[test]
    fn radial_masses_tile_the_ball() {
        let g = build_grid(GridKind::Radial, 3, 1.0, 99).unwrap();
        let total: f64 = g.mass().iter().sum();
        let inner_ball = 4.0 / 3.0 * std::f64::consts::PI * (1.0 - g.h() / 2.0).powi(3);
        assert_relative_eq!(total, inner_ball, max_relative = 1e-12);
    }

    #[test]
    fn radial_laplacian_is_exact_on_quadratics() {
        // Δ(r^2) = 2n away from the Dirichlet face
        for dim in 1..=3 {
            let g = build_grid(GridKind::Radial, dim, 1.0, 40).unwrap();
            let u: Vec<f64> = g.nodes().iter().map(|r| r * r).collect();
            let lap = g.laplacian(&u);
            for (i, l) in lap.iter().enumerate().take(g.n() - 1) {
                assert_relative_eq!(*l, 2.0 * dim as f64, max_relative = 1e-9, epsilon = 1e-9);
                let _ = i;
            }
        }
    }

    #[test]
    fn unit_integrand_integrates_to_measure() {
        let g = build_grid(GridKind::Interval, 1, 1.0, 64).unwrap();
        let one = g.field_from_fn(|_| 1.0);
        let v = weighted_inner_product(&g, &one, &one, &one, 0.0).unwrap();
        assert_relative_eq!(v, 1.0, epsilon = 1e-13);
        let g = build_grid(GridKind::Radial, 3, 1.0, 200).unwrap();
        let one = g.field_from_fn(|_| 1.0);
        let v = weighted_inner_product(&g, &one, &one, &one, 0.0).unwrap();
        assert_relative_eq!(v, 4.0 / 3.0 * std::f64::consts::PI, max_relative = 1e-4);
    }

    #[test]
    fn singular_weight_integral_matches_pi_over_8() {
        // oracle: ∫_0^1 (x(1-x))^{1/2} dx = π/8 (Beta(3/2, 3/2))
        let g = build_grid(GridKind::Interval, 1, 1.0, 400).unwrap();
        let w = g.field_from_fn(|x| x * (1.0 - x));
        let one = g.field_from_fn(|_| 1.0);
        let v = weighted_inner_product(&g, &w, &one, &w, -0.5).unwrap();
        assert!((v - std::f64::consts::PI / 8.0).abs() < 1e-6, "{v} vs {}", std::f64::consts::PI / 8.0);
    }

    #[test]
    fn divergent_weight_is_rejected() {
        let g = build_grid(GridKind::Interval, 1, 1.0, 100).unwrap();
        let w = g.field_from_fn(|x| x * (1.0 - x));
        let one = g.field_from_fn(|_| 1.0);
        assert!(matches!(
            weighted_inner_product(&g, &one, &one, &w, -1.0),
            Err(Error::DivergentWeight { .. })
        ));
        assert!(weighted_inner_product(&g, &one, &one, &w, -0.9).is_ok());
    }

    #[test]
    fn mismatched_grids_are_rejected() {
        let a = build_grid(GridKind::Interval, 1, 1.0, 100).unwrap();
        let b = build_grid(GridKind::Interval, 1, 1.0, 101).unwrap();
        let fa = a.field_from_fn(|_| 1.0);
        let fb = b.field_from_fn(|_| 1.0);
        assert_eq!(weighted_inner_product(&a, &fa, &fb, &fa, 0.0), Err(Error::GridMismatch));
    }
}
