//! A numerical laboratory for the porous medium equation `u_t = Δ(u^m)` with
//! zero Dirichlet data on intervals and radially symmetric balls.
//!
//! The crate computes the stationary profile `Θ = S^m`, the weighted
//! spectrum of the linearised operator, time-marches the equation in
//! physical and logarithmic time, and extracts large-time expansion
//! coefficients and boundary regularity exponents from the results.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod asymptotics;
pub mod battery;
pub mod config;
pub mod error;
pub mod evolution;
pub mod geometry;
pub mod io;
pub mod quadrature;
pub mod regularity;
pub mod runner;
pub mod spectrum;
pub mod stationary;
pub mod stencil;
pub mod tridiag;

pub use error::{Error, Result};
