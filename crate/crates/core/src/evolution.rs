//! Implicit time marching of the porous medium equation in physical time
//! (`u`-form) and of the rescaled flow `∂_τ θ^p = Δθ + (p/(1-p)) θ^p` in
//! logarithmic time `τ = log t` (`θ`-form).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Field, Grid};
use crate::stationary::{check_p, source_coefficient};
use crate::tridiag::{solve_tridiagonal, solve_tridiagonal_pivoted};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variable {
    U,
    Theta,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    /// Stamp reached by the step (`t` or `τ`).
    pub stamp: f64,
    pub dt: f64,
    pub newton_iterations: usize,
    pub residual: f64,
    pub halvings: usize,
    pub lifted: bool,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub grid: Grid,
    pub variable: Variable,
    /// `m` for `u`-trajectories, `p` for `θ`-trajectories.
    pub exponent: f64,
    pub times: Vec<f64>,
    pub fields: Vec<Field>,
    pub step_log: Vec<StepRecord>,
}

impl Trajectory {
    pub fn new(grid: Grid, variable: Variable, exponent: f64) -> Self {
        Self { grid, variable, exponent, times: Vec::new(), fields: Vec::new(), step_log: Vec::new() }
    }

    pub fn push(&mut self, time: f64, field: Field) {
        debug_assert!(self.times.last().is_none_or(|&t| t < time));
        self.times.push(time);
        self.fields.push(field);
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last(&self) -> Option<(f64, &Field)> {
        self.times.last().map(|&t| (t, self.fields.last().unwrap()))
    }

    /// `∫ u dμ` at every stored stamp (lumped quadrature).
    pub fn masses(&self) -> Vec<f64> {
        self.fields.iter().map(|f| self.grid.mass().iter().zip(f.values()).map(|(m, v)| m * v).sum()).collect()
    }

    /// Keeps only the snapshots with stamps `>= t_min`.
    pub fn since(&self, t_min: f64) -> Trajectory {
        let start = self.times.iter().position(|&t| t >= t_min).unwrap_or(self.times.len());
        Trajectory {
            grid: self.grid.clone(),
            variable: self.variable,
            exponent: self.exponent,
            times: self.times[start..].to_vec(),
            fields: self.fields[start..].to_vec(),
            step_log: self.step_log.clone(),
        }
    }
}

/// Time-step policy for the `u`-form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Schedule {
    /// Constant step; a snapshot every `store_every` steps.
    Fixed { dt: f64, store_every: usize },
    /// Uniform steps of size `t0 (rho - 1)` up to `t0`, then `t_{k+1} = rho t_k`.
    Geometric { t0: f64, rho: f64, store_every: usize },
}

impl Schedule {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Schedule::Fixed { dt, store_every } => {
                if !(dt > 0.0) || store_every == 0 {
                    return Err(Error::InvalidTime(format!("fixed schedule needs dt > 0, got {dt}")));
                }
            }
            Schedule::Geometric { t0, rho, store_every } => {
                if !(t0 > 0.0) || !(rho > 1.0 && rho <= 1.2) || store_every == 0 {
                    return Err(Error::InvalidTime(format!(
                        "geometric schedule needs t0 > 0 and rho in (1, 1.2], got t0 = {t0}, rho = {rho}"
                    )));
                }
            }
        }
        Ok(())
    }

    fn next(&self, t: f64) -> f64 {
        match *self {
            Schedule::Fixed { dt, .. } => t + dt,
            Schedule::Geometric { t0, rho, .. } => {
                if t < t0 * (1.0 - 1e-12) {
                    (t + t0 * (rho - 1.0)).min(t0)
                } else {
                    rho * t
                }
            }
        }
    }

    fn store_every(&self) -> usize {
        match *self {
            Schedule::Fixed { store_every, .. } | Schedule::Geometric { store_every, .. } => store_every,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct EvolveOptions {
    /// Relative tolerance on the max-norm of the step residual.
    pub tol: f64,
    pub max_newton: usize,
    pub max_halvings: usize,
    /// Optional `u ↦ max(u, ε)` lift before each step (stress tests only).
    pub lift: Option<f64>,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        Self { tol: 1e-12, max_newton: 40, max_halvings: 12, lift: None }
    }
}

struct StepOutcome {
    state: Vec<f64>,
    iterations: usize,
    residual: f64,
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

/// One backward-Euler step `M(U - P) + dt K U^m = 0`, `U >= 0`.
fn pme_step(grid: &Grid, m: f64, prev: &[f64], dt: f64, opts: &EvolveOptions) -> Option<StepOutcome> {
    let n = grid.n();
    let mass = grid.mass();
    let k = grid.stiffness();
    let scale = max_abs(prev).max(f64::MIN_POSITIVE);
    let residual = |u: &[f64]| -> Vec<f64> {
        let phi: Vec<f64> = u.iter().map(|v| v.max(0.0).powf(m)).collect();
        let kphi = grid.stiffness_apply(&phi);
        (0..n).map(|i| (u[i] - prev[i]) + dt * kphi[i] / mass[i]).collect()
    };
    let merit = |r: &[f64]| grid.lumped_dot(r, r, None).sqrt();

    let mut u = prev.to_vec();
    let mut r = residual(&u);
    let mut phi_r = merit(&r);
    for it in 0..=opts.max_newton {
        let rmax = max_abs(&r);
        if rmax <= opts.tol * scale {
            return Some(StepOutcome { state: u, iterations: it, residual: rmax / scale });
        }
        if it == opts.max_newton {
            break;
        }
        // J = M + dt K D, rows scaled by M^{-1}
        let dphi: Vec<f64> = u.iter().map(|v| m * v.max(0.0).powf(m - 1.0)).collect();
        let diag: Vec<f64> = (0..n).map(|i| 1.0 + dt * k.diag[i] * dphi[i] / mass[i]).collect();
        let lower: Vec<f64> = (0..n - 1).map(|i| dt * k.off[i] * dphi[i] / mass[i + 1]).collect();
        let upper: Vec<f64> = (0..n - 1).map(|i| dt * k.off[i] * dphi[i + 1] / mass[i]).collect();
        let rhs: Vec<f64> = r.iter().map(|x| -x).collect();
        let step = solve_tridiagonal(&lower, &diag, &upper, &rhs)
            .or_else(|| solve_tridiagonal_pivoted(&lower, &diag, &upper, &rhs))?;
        let mut alpha = 1.0;
        let mut accepted = false;
        for _ in 0..30 {
            let trial: Vec<f64> = u.iter().zip(&step).map(|(a, s)| (a + alpha * s).max(0.0)).collect();
            let tr = residual(&trial);
            let tm = merit(&tr);
            if tm <= (1.0 - 1e-4 * alpha) * phi_r || max_abs(&tr) <= opts.tol * scale {
                u = trial;
                r = tr;
                phi_r = tm;
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if !accepted {
            return None;
        }
    }
    None
}

/// Backward-Euler march of `u_t = Δ(u^m)` with zero Dirichlet data.
pub fn evolve_pme(
    grid: &Grid,
    m: f64,
    u0: &Field,
    t_end: f64,
    schedule: Schedule,
    opts: EvolveOptions,
) -> Result<Trajectory> {
    grid.check(u0)?;
    if !(m > 1.0) {
        return Err(Error::InvalidInitialData(format!("m must exceed 1, got {m}")));
    }
    if u0.min() < 0.0 {
        return Err(Error::InvalidInitialData("initial data must be nonnegative".into()));
    }
    if u0.max() <= 0.0 {
        return Err(Error::InvalidInitialData("initial data vanishes identically".into()));
    }
    if !(t_end > 0.0) {
        return Err(Error::InvalidTime(format!("t_end must be positive, got {t_end}")));
    }
    schedule.validate()?;

    let mut traj = Trajectory::new(grid.clone(), Variable::U, m);
    traj.push(0.0, u0.clone());
    let mut t = 0.0;
    let mut state = u0.values().to_vec();
    let mut steps = 0usize;
    let floor = -10.0 * f64::EPSILON;
    while t < t_end * (1.0 - 1e-14) {
        let target = schedule.next(t).min(t_end);
        let lifted = opts.lift.is_some();
        if let Some(eps) = opts.lift {
            state.iter_mut().for_each(|v| *v = v.max(eps));
        }
        // march to `target`, halving on Newton failure
        let mut halvings = 0;
        let mut dt = target - t;
        let mut iterations = 0;
        let mut residual: f64 = 0.0;
        while t < target * (1.0 - 1e-15) {
            let step = (target - t).min(dt);
            match pme_step(grid, m, &state, step, &opts) {
                Some(out) => {
                    let scale = max_abs(&out.state).max(f64::MIN_POSITIVE);
                    let min = out.state.iter().copied().fold(f64::INFINITY, f64::min);
                    if min < floor * scale {
                        return Err(Error::NegativityViolation { t: t + step, min });
                    }
                    state = out.state;
                    iterations += out.iterations;
                    residual = residual.max(out.residual);
                    t = if step == target - t { target } else { t + step };
                }
                None => {
                    halvings += 1;
                    if halvings > opts.max_halvings {
                        return Err(Error::StepFailure { t, halvings });
                    }
                    dt = 0.5 * step;
                }
            }
        }
        steps += 1;
        traj.step_log.push(StepRecord { stamp: t, dt: target - traj.step_log.last().map_or(0.0, |s| s.stamp), newton_iterations: iterations, residual, halvings, lifted });
        if steps.is_multiple_of(schedule.store_every()) || t >= t_end * (1.0 - 1e-14) {
            traj.push(t, grid.field(state.clone())?);
        }
    }
    Ok(traj)
}

/// Time integrator for the rescaled flow.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Integrator {
    BackwardEuler,
    /// Second-order BDF started by one backward-Euler step.
    Bdf2,
}

#[derive(Debug, Clone, Copy)]
pub struct RescaledOptions {
    pub integrator: Integrator,
    pub store_every: usize,
    pub tol: f64,
    pub max_newton: usize,
}

impl Default for RescaledOptions {
    fn default() -> Self {
        Self { integrator: Integrator::BackwardEuler, store_every: 1, tol: 1e-13, max_newton: 40 }
    }
}

/// Solves `M((a - kλ) θ^p - b) + k K θ = 0` for `θ > 0`, where `b` collects
/// the history terms.
fn rescaled_step(
    grid: &Grid,
    p: f64,
    lead: f64,
    history: &[f64],
    k: f64,
    guess: &[f64],
    opts: &RescaledOptions,
) -> Option<StepOutcome> {
    let n = grid.n();
    let mass = grid.mass();
    let stiff = grid.stiffness();
    let coeff = lead - k * source_coefficient(p);
    let scale = max_abs(history).max(f64::MIN_POSITIVE);
    let residual = |th: &[f64]| -> Vec<f64> {
        let kt = grid.stiffness_apply(th);
        (0..n).map(|i| coeff * th[i].powf(p) - history[i] + k * kt[i] / mass[i]).collect()
    };
    let mut th = guess.to_vec();
    let mut r = residual(&th);
    let mut merit = grid.lumped_dot(&r, &r, None).sqrt();
    for it in 0..=opts.max_newton {
        let rmax = max_abs(&r);
        if rmax <= opts.tol * scale {
            return Some(StepOutcome { state: th, iterations: it, residual: rmax / scale });
        }
        if it == opts.max_newton {
            break;
        }
        // symmetric Jacobian in weak form
        let diag: Vec<f64> =
            (0..n).map(|i| mass[i] * coeff * p * th[i].powf(p - 1.0) + k * stiff.diag[i]).collect();
        let off: Vec<f64> = stiff.off.iter().map(|o| k * o).collect();
        let rhs: Vec<f64> = r.iter().zip(mass).map(|(x, m)| -x * m).collect();
        let step = solve_tridiagonal(&off, &diag, &off, &rhs)?;
        // keep every node above a tenth of its current value
        let mut alpha: f64 = 1.0;
        for (t, s) in th.iter().zip(&step) {
            if *s < 0.0 {
                alpha = alpha.min(0.9 * t / -s);
            }
        }
        let small_step = step.iter().zip(&th).all(|(s, t)| s.abs() <= 4.0 * f64::EPSILON * t.abs());
        let mut accepted = false;
        for _ in 0..30 {
            let trial: Vec<f64> = th.iter().zip(&step).map(|(t, s)| t + alpha * s).collect();
            let tr = residual(&trial);
            let tm = grid.lumped_dot(&tr, &tr, None).sqrt();
            if tm <= (1.0 - 1e-4 * alpha) * merit || max_abs(&tr) <= opts.tol * scale {
                th = trial;
                r = tr;
                merit = tm;
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if !accepted || small_step {
            // converged to roundoff
            let rmax = max_abs(&r);
            if rmax <= 1e3 * opts.tol * scale {
                return Some(StepOutcome { state: th, iterations: it + 1, residual: rmax / scale });
            }
            return None;
        }
    }
    None
}

/// Implicit march of the rescaled flow from `τ0` to `τ_end`.
pub fn evolve_rescaled(
    grid: &Grid,
    p: f64,
    theta0: &Field,
    tau0: f64,
    tau_end: f64,
    dtau: f64,
    opts: RescaledOptions,
) -> Result<Trajectory> {
    check_p(p)?;
    grid.check(theta0)?;
    if theta0.min() <= 0.0 {
        return Err(Error::PositivityLoss { tau: tau0 });
    }
    if !(tau_end > tau0) || !(dtau > 0.0) {
        return Err(Error::InvalidTime(format!("need tau_end > tau0 and dtau > 0 (got {tau0}, {tau_end}, {dtau})")));
    }
    if dtau * source_coefficient(p) >= 1.0 {
        return Err(Error::InvalidTime(format!("dtau = {dtau} too large for p = {p}: needs dtau < (1-p)/p")));
    }
    let mut traj = Trajectory::new(grid.clone(), Variable::Theta, p);
    traj.push(tau0, theta0.clone());
    let mut older: Option<Vec<f64>> = None;
    let mut current = theta0.values().to_vec();
    let mut tau = tau0;
    let mut steps = 0usize;
    while tau < tau_end - 1e-12 * dtau {
        let k = dtau.min(tau_end - tau);
        let uniform = (k - dtau).abs() <= 1e-12 * dtau;
        let (lead, history): (f64, Vec<f64>) = match (&older, opts.integrator) {
            (Some(prev), Integrator::Bdf2) if uniform => (
                1.5,
                current.iter().zip(prev).map(|(c, o)| 2.0 * c.powf(p) - 0.5 * o.powf(p)).collect(),
            ),
            _ => (1.0, current.iter().map(|c| c.powf(p)).collect()),
        };
        let guess = match &older {
            Some(prev) if uniform => current.iter().zip(prev).map(|(c, o)| (2.0 * c - o).max(0.5 * c)).collect(),
            _ => current.clone(),
        };
        let out = rescaled_step(grid, p, lead, &history, k, &guess, &opts)
            .or_else(|| rescaled_step(grid, p, lead, &history, k, &current, &opts))
            .ok_or(Error::StepFailure { t: tau, halvings: 0 })?;
        if out.state.iter().any(|v| !(*v > 0.0)) {
            return Err(Error::PositivityLoss { tau: tau + k });
        }
        older = Some(std::mem::replace(&mut current, out.state));
        tau = if uniform { tau0 + (steps + 1) as f64 * dtau } else { tau + k };
        steps += 1;
        traj.step_log.push(StepRecord {
            stamp: tau,
            dt: k,
            newton_iterations: out.iterations,
            residual: out.residual,
            halvings: 0,
            lifted: false,
        });
        if steps.is_multiple_of(opts.store_every) || tau >= tau_end - 1e-12 * dtau {
            traj.push(tau, grid.field(current.clone())?);
        }
    }
    Ok(traj)
}

/// First stored time at which `min u/d^{1/m} > fraction · max u/d^{1/m}`.
pub fn detect_positivity_time(traj: &Trajectory, fraction: f64) -> Option<f64> {
    let d = traj.grid.boundary_distance();
    let inv_m = 1.0 / traj.exponent;
    traj.times.iter().zip(&traj.fields).find_map(|(&t, u)| {
        let ratios: Vec<f64> = u.values().iter().zip(d.values()).map(|(v, x)| v / x.powf(inv_m)).collect();
        let lo = ratios.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        (hi > 0.0 && lo > fraction * hi).then_some(t)
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrderingReport {
    pub initially_ordered: bool,
    /// `max (u_A - u_B)^+` over all stamps and nodes.
    pub max_violation: f64,
    pub slack: f64,
    pub ordered: bool,
}

/// Checks `u_A(·,0) <= u_B(·,0) ⇒ u_A <= u_B` at every stored stamp, up to a
/// slack of `10 h^2` relative to the sup of `u_B`.
pub fn compare_ordering(a: &Trajectory, b: &Trajectory) -> Result<OrderingReport> {
    if a.grid.key() != b.grid.key() {
        return Err(Error::IncompatibleTrajectories("different grids".into()));
    }
    if a.exponent != b.exponent || a.variable != b.variable {
        return Err(Error::IncompatibleTrajectories("different exponents or variables".into()));
    }
    if a.times != b.times {
        return Err(Error::IncompatibleTrajectories("different time stamps".into()));
    }
    let h = a.grid.h();
    let slack_rel = 10.0 * h * h;
    let mut worst: f64 = 0.0;
    let mut worst_slack: f64 = 0.0;
    let mut initially_ordered = true;
    for (k, (fa, fb)) in a.fields.iter().zip(&b.fields).enumerate() {
        let scale = fb.max_abs();
        let excess = fa.values().iter().zip(fb.values()).fold(0.0_f64, |m, (x, y)| m.max(x - y));
        if k == 0 {
            initially_ordered = excess <= 0.0;
        }
        if excess - slack_rel * scale > worst - worst_slack {
            worst = excess;
            worst_slack = slack_rel * scale;
        }
    }
    Ok(OrderingReport {
        initially_ordered,
        max_violation: worst,
        slack: worst_slack,
        ordered: !initially_ordered || worst <= worst_slack,
    })
}

/// Exact rescaled image of the separable solution `u_s`:
/// `θ(τ) = (1 + s e^{-τ})^{-m/(m-1)} Θ`.
pub fn separable_theta_factor(s: f64, m: f64, tau: f64) -> f64 {
    (1.0 + s * (-tau).exp()).powf(-m / (m - 1.0))
}

/// Amplitude `(s + t)^{1/(1-m)}` of the separable solution `u_s = amp · S`.
pub fn separable_u_factor(s: f64, m: f64, t: f64) -> f64 {
    (s + t).powf(1.0 / (1.0 - m))
}
