//! Reproducibility battery: fixed internal configurations checked against
//! closed-form values, oracles and predicted rates.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::OnceLock;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::asymptotics::{analyze, rescale_trajectory, unscale_trajectory, AsymptoticsOptions, AsymptoticsReport};
use crate::error::{Error, Result};
use crate::evolution::{
    compare_ordering, detect_positivity_time, evolve_pme, evolve_rescaled, EvolveOptions, Integrator, RescaledOptions,
    Schedule, Trajectory,
};
use crate::geometry::{build_grid, Field, Grid, GridKind};
use crate::io::{self, Check};
use crate::regularity::{fit_boundary_expansion, holder_proxy, third_derivative_blowup, time_derivative_decay};
use crate::runner::{bump, separable_error};
use crate::spectrum::{assemble_linearized, solve_eigenpairs, spectral_gap_gamma, EigenSystem, Pencil};
use crate::stationary::{reference_profile, solve_theta, StationaryProfile};

pub const CRITERIA: [(usize, &str); 11] = [
    (1, "stationary-oracle"),
    (2, "first-eigenpair"),
    (3, "second-eigenvalue"),
    (4, "separable-solution"),
    (5, "stability-rate"),
    (6, "improved-rate"),
    (7, "shift-recovery"),
    (8, "boundary-exponent"),
    (9, "time-derivative-decay"),
    (10, "structural-invariants"),
    (11, "radial-smoke"),
];

const P_VALUES: [f64; 3] = [0.3, 0.5, 0.7];

#[derive(Debug, Clone, Default)]
pub struct BatteryOptions {
    pub seed: u64,
    /// Substring of a criterion name, or its number.
    pub filter: Option<String>,
    pub out: Option<PathBuf>,
    /// Tolerance overrides keyed by check name without the `[..]` suffix.
    pub overrides: BTreeMap<String, f64>,
    /// Worker count; `PME_LAB_THREADS` when unset.
    pub threads: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct CriterionResult {
    pub id: usize,
    pub name: &'static str,
    pub checks: Vec<Check>,
    pub error: Option<String>,
    pub seconds: f64,
}

impl CriterionResult {
    pub fn passed(&self) -> bool {
        self.error.is_none() && !self.checks.is_empty() && self.checks.iter().all(|c| c.pass)
    }

    /// One-line human summary.
    pub fn line(&self) -> String {
        let status = if self.passed() { "PASS" } else { "FAIL" };
        let mut out = format!("criterion {:>2} {:<22} {status} ({:.1}s)", self.id, self.name, self.seconds);
        if let Some(e) = &self.error {
            out.push_str(&format!(" error: {e}"));
        }
        for c in self.checks.iter().filter(|c| !c.pass) {
            out.push_str(&format!(" [{} measured {:.6e} target {} tol {:.1e}]", c.criterion, c.measured, c.target, c.tolerance));
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct BatteryReport {
    pub criteria: Vec<CriterionResult>,
}

impl BatteryReport {
    pub fn passed(&self) -> bool {
        self.criteria.iter().all(|c| c.passed())
    }

    pub fn criterion(&self, id: usize) -> Option<&CriterionResult> {
        self.criteria.iter().find(|c| c.id == id)
    }

    /// Flattened report rows; module failures become a failing `error` row.
    pub fn checks(&self) -> Vec<Check> {
        let mut out = Vec::new();
        for c in &self.criteria {
            out.extend(c.checks.iter().cloned());
            if let Some(e) = &c.error {
                out.push(Check::holds(format!("{}.error", c.id), e.clone(), f64::NAN, false));
            }
        }
        out
    }
}

/// Numeric table written next to `report.csv`.
struct Table {
    name: String,
    header: Vec<String>,
    rows: Vec<Vec<f64>>,
}

#[derive(Default)]
struct Output {
    checks: Vec<Check>,
    tables: Vec<Table>,
}

struct Ctx {
    seed: u64,
    overrides: BTreeMap<String, f64>,
    generic: OnceLock<std::result::Result<GenericRun, Error>>,
}

impl Ctx {
    fn tol(&self, key: &str, default: f64) -> f64 {
        self.overrides.get(key).copied().unwrap_or(default)
    }

    fn near(&self, key: &str, tag: &str, target: f64, measured: f64, default: f64) -> Check {
        Check::near(label(key, tag), target, measured, self.tol(key, default))
    }

    fn at_most(&self, key: &str, tag: &str, bound: f64, measured: f64) -> Check {
        Check::at_most(label(key, tag), self.tol(key, bound), measured)
    }

    fn at_least(&self, key: &str, tag: &str, bound: f64, measured: f64) -> Check {
        Check::at_least(label(key, tag), self.tol(key, bound), measured)
    }
}

fn label(key: &str, tag: &str) -> String {
    if tag.is_empty() {
        key.to_string()
    } else {
        format!("{key}[{tag}]")
    }
}

fn selected(filter: &Option<String>, id: usize, name: &str) -> bool {
    match filter {
        None => true,
        Some(f) => f.parse::<usize>().map_or_else(|_| name.contains(f.as_str()), |n| n == id),
    }
}

fn thread_count(opts: &BatteryOptions) -> usize {
    opts.threads
        .or_else(|| std::env::var("PME_LAB_THREADS").ok().and_then(|v| v.parse().ok()))
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

/// Runs the selected criteria in a worker pool; results come back in
/// criterion order. Module failures are recorded per criterion.
pub fn battery(opts: &BatteryOptions) -> Result<BatteryReport> {
    let ctx = Ctx { seed: opts.seed, overrides: opts.overrides.clone(), generic: OnceLock::new() };
    let chosen: Vec<(usize, &'static str)> =
        CRITERIA.iter().copied().filter(|(id, name)| selected(&opts.filter, *id, name)).collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(thread_count(opts))
        .build()
        .map_err(|e| Error::Io(e.to_string()))?;
    let results: Vec<(CriterionResult, Vec<Table>)> = pool.install(|| {
        chosen
            .par_iter()
            .map(|&(id, name)| {
                let clock = Instant::now();
                let outcome = run_criterion(&ctx, id);
                let seconds = clock.elapsed().as_secs_f64();
                match outcome {
                    Ok(out) => (CriterionResult { id, name, checks: out.checks, error: None, seconds }, out.tables),
                    Err(e) => (CriterionResult { id, name, checks: Vec::new(), error: Some(e.to_string()), seconds }, Vec::new()),
                }
            })
            .collect()
    });
    let report = BatteryReport { criteria: results.iter().map(|(c, _)| c.clone()).collect() };
    if let Some(dir) = &opts.out {
        std::fs::create_dir_all(dir)?;
        io::write_report(&dir.join("report.csv"), &report.checks())?;
        for (_, tables) in &results {
            for t in tables {
                write_table(dir, t)?;
            }
        }
    }
    Ok(report)
}

fn write_table(dir: &Path, t: &Table) -> Result<()> {
    let mut w = csv::Writer::from_path(dir.join(&t.name))?;
    w.write_record(&t.header)?;
    for row in &t.rows {
        w.write_record(row.iter().map(|v| format!("{v}")))?;
    }
    w.flush()?;
    Ok(())
}

fn run_criterion(ctx: &Ctx, id: usize) -> Result<Output> {
    match id {
        1 => stationary_oracle(ctx),
        2 => first_eigenpair(ctx),
        3 => second_eigenvalue(ctx),
        4 => separable_solution(ctx),
        5 => stability_rate(ctx),
        6 => improved_rate(ctx),
        7 => shift_recovery(ctx),
        8 => boundary_exponent(ctx),
        9 => time_derivative(ctx),
        10 => structural_invariants(ctx),
        11 => radial_smoke(ctx),
        _ => Err(Error::ConfigInvalid(format!("unknown criterion {id}"))),
    }
}

fn interval(n: usize) -> Result<Grid> {
    build_grid(GridKind::Interval, 1, 1.0, n)
}

fn ball(n: usize) -> Result<Grid> {
    build_grid(GridKind::Radial, 3, 1.0, n)
}

fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0_f64, |m, (x, y)| m.max((x - y).abs()))
}

/// Sup error against the reference profile, overall and on the nodes of
/// `[L/4, 3L/4]`.
fn oracle_errors(grid: &Grid, p: f64) -> Result<(f64, f64)> {
    let prof = solve_theta(grid, p, 1e-12)?;
    let exact = reference_profile(grid, p)?;
    let all = sup_diff(prof.theta.values(), &exact);
    let l = grid.size();
    let inner = grid
        .nodes()
        .iter()
        .zip(prof.theta.values().iter().zip(&exact))
        .filter(|(x, _)| **x >= 0.25 * l && **x <= 0.75 * l)
        .fold(0.0_f64, |m, (_, (a, b))| m.max((a - b).abs()));
    Ok((all, inner))
}

/// Smallest observed convergence order over consecutive refinements.
fn mesh_order(build: impl Fn(usize) -> Result<Grid>, p: f64, sizes: &[usize]) -> Result<(f64, Vec<(f64, f64)>)> {
    let mut samples = Vec::new();
    for &n in sizes {
        let g = build(n)?;
        samples.push((g.h(), oracle_errors(&g, p)?.1));
    }
    let order = samples
        .windows(2)
        .map(|w| (w[0].1 / w[1].1).ln() / (w[0].0 / w[1].0).ln())
        .fold(f64::INFINITY, f64::min);
    Ok((order, samples))
}

fn stationary_checks(ctx: &Ctx, out: &mut Output, key: &str, build: &dyn Fn(usize) -> Result<Grid>, scale: f64) -> Result<()> {
    for p in P_VALUES {
        let tag = format!("p={p}");
        let (err, _) = oracle_errors(&build(800)?, p)?;
        out.checks.push(ctx.at_most(&format!("{key}.oracle_error"), &tag, 1e-4 * scale, err));
        let (order, samples) = mesh_order(build, p, &[200, 400, 800])?;
        out.checks.push(ctx.at_least(&format!("{key}.mesh_order"), &tag, 1.8 - 0.2 * (scale - 1.0), order));
        out.tables.push(Table {
            name: format!("{key}_mesh_p{p}.csv"),
            header: vec!["h".into(), "interior_error".into()],
            rows: samples.iter().map(|&(h, e)| vec![h, e]).collect(),
        });
    }
    Ok(())
}

fn stationary_oracle(ctx: &Ctx) -> Result<Output> {
    let mut out = Output::default();
    stationary_checks(ctx, &mut out, "1", &interval, 1.0)?;
    Ok(out)
}

fn spectrum_of(grid: &Grid, p: f64, k: usize) -> Result<(StationaryProfile, Pencil, EigenSystem)> {
    let prof = solve_theta(grid, p, 1e-12)?;
    let pencil = assemble_linearized(grid, &prof, p)?;
    let sys = solve_eigenpairs(&pencil, k, 1e-10)?;
    Ok((prof, pencil, sys))
}

/// `‖ψ_1 − Θ/‖Θ‖‖_W` in the pencil weight.
fn first_mode_distance(pencil: &Pencil, prof: &StationaryProfile, sys: &EigenSystem) -> f64 {
    let theta = prof.theta.values();
    let norm = pencil.dot(theta, theta).sqrt();
    let diff: Vec<f64> = sys.psis[0].values().iter().zip(theta).map(|(a, b)| a - b / norm).collect();
    pencil.dot(&diff, &diff).sqrt()
}

fn first_eigenpair_checks(ctx: &Ctx, out: &mut Output, key: &str, build: &dyn Fn(usize) -> Result<Grid>, scale: f64) -> Result<()> {
    for p in P_VALUES {
        let tag = format!("p={p}");
        let (prof, pencil, sys) = spectrum_of(&build(800)?, p, 2)?;
        out.checks.push(ctx.near(&format!("{key}.mu_1"), &tag, p, sys.mus[0], 1e-3 * scale));
        out.checks.push(ctx.at_most(&format!("{key}.psi_1_distance"), &tag, 1e-3 * scale, first_mode_distance(&pencil, &prof, &sys)));
    }
    Ok(())
}

fn first_eigenpair(ctx: &Ctx) -> Result<Output> {
    let mut out = Output::default();
    first_eigenpair_checks(ctx, &mut out, "2", &interval, 1.0)?;
    Ok(out)
}

fn second_eigenvalue(ctx: &Ctx) -> Result<Output> {
    let mut out = Output::default();
    for p in P_VALUES {
        let tag = format!("p={p}");
        let grid = interval(800)?;
        let (prof, pencil, sys) = spectrum_of(&grid, p, 2)?;
        let target = 3.0 * p / (1.0 - p);
        out.checks.push(ctx.near("3.mu_2_relative_error", &tag, 0.0, sys.mus[1] / target - 1.0, 0.01));
        let th = prof.theta.values();
        let n = th.len();
        let at = |i: isize| if i < 0 || i as usize >= n { 0.0 } else { th[i as usize] };
        let g: Vec<f64> =
            (0..n as isize).map(|i| at(i) * (at(i + 1) - at(i - 1)) / (2.0 * grid.h())).collect();
        let psi = sys.psis[1].values();
        let corr = pencil.dot(psi, &g).abs() / (pencil.dot(psi, psi) * pencil.dot(&g, &g)).sqrt();
        out.checks.push(ctx.at_least("3.psi_2_correlation", &tag, 0.999, corr));
        if p == 0.5 {
            let mut rows = Vec::new();
            for (i, x) in grid.nodes().iter().enumerate() {
                rows.push(vec![*x, th[i], sys.psis[0].values()[i], psi[i]]);
            }
            out.tables.push(Table {
                name: "spectrum_p0.5.csv".into(),
                header: vec!["x".into(), "theta".into(), "psi_1".into(), "psi_2".into()],
                rows,
            });
        }
    }
    Ok(out)
}

/// Separable run `u0 = S` to `t = 10` at two step sizes.
fn separable_checks(ctx: &Ctx, out: &mut Output, key: &str, grid: &Grid, scale: f64) -> Result<()> {
    let m = 2.0;
    let prof = solve_theta(grid, 1.0 / m, 1e-12)?;
    let mut errs = Vec::new();
    for dt in [1e-3_f64, 5e-4] {
        let store = (0.1 / dt).round() as usize;
        let tr = evolve_pme(grid, m, &prof.s_profile, 10.0, Schedule::Fixed { dt, store_every: store }, EvolveOptions::default())?;
        errs.push(separable_error(&tr, &prof, 1.0));
    }
    out.checks.push(ctx.at_most(&format!("{key}.separable_error"), "dt=1e-3", 1e-3 * scale, errs[0]));
    out.checks.push(ctx.near(&format!("{key}.time_order"), "", 1.0, (errs[0] / errs[1]).log2(), 0.15 * scale));
    Ok(())
}

fn separable_solution(ctx: &Ctx) -> Result<Output> {
    let mut out = Output::default();
    separable_checks(ctx, &mut out, "4", &interval(400)?, 1.0)?;
    Ok(out)
}

/// Physical-time phase until positivity, then the rescaled flow.
struct Pipeline {
    u: Trajectory,
    theta: Trajectory,
}

/// Marches `u0` in physical time until `max(1, 2 T_pos)` and continues in
/// logarithmic time up to `tau_end`.
fn pipeline(grid: &Grid, m: f64, u0: &Field, dt: f64, dtau: f64, tau_end: f64, store: usize) -> Result<Pipeline> {
    let mut t_end = 1.0;
    loop {
        let schedule = Schedule::Geometric { t0: 1.0, rho: 1.0 + dt, store_every: 10 };
        let u = evolve_pme(grid, m, u0, t_end, schedule, EvolveOptions::default())?;
        let t_switch = detect_positivity_time(&u, 0.1).map(|tp| (2.0 * tp).max(1.0));
        if let Some(ts) = t_switch.filter(|ts| *ts <= t_end) {
            let k = u.times.iter().position(|&t| t >= ts * (1.0 - 1e-12)).expect("switch inside the run");
            let mut head = u.clone();
            head.times.truncate(k + 1);
            head.fields.truncate(k + 1);
            let start = rescale_trajectory(&head.since(head.times[k]))?;
            let opts = RescaledOptions { integrator: Integrator::Bdf2, store_every: store, tol: 1e-13, max_newton: 40 };
            let theta = evolve_rescaled(grid, 1.0 / m, &start.fields[0], start.times[0], tau_end, dtau, opts)?;
            return Ok(Pipeline { u: head, theta });
        }
        if t_end >= 64.0 {
            return Err(Error::InvalidInitialData("no positivity before t = 64".into()));
        }
        t_end *= 8.0;
    }
}

struct GenericRun {
    report: AsymptoticsReport,
    theta: Trajectory,
}

/// 1-D, `m = 2`, bump data of height `5 S_max`.
fn generic_run(ctx: &Ctx) -> Result<&GenericRun> {
    ctx.generic
        .get_or_init(|| {
            let grid = interval(200)?;
            let (prof, _, sys) = spectrum_of(&grid, 0.5, 4)?;
            let u0 = bump(&grid, 0.4, 0.15, 5.0 * prof.s_profile.max());
            let run = pipeline(&grid, 2.0, &u0, 1e-4, 1e-3, 16.0, 20)?;
            let opts = AsymptoticsOptions { modes: 4, tail_window: (12.0, 16.0), fit_window: (2.0, 10.0) };
            let report = analyze(&run.theta, &prof, &sys, opts)?;
            Ok(GenericRun { report, theta: run.theta })
        })
        .as_ref()
        .map_err(|e| e.clone())
}

fn asymptotics_table(name: &str, r: &AsymptoticsReport) -> Table {
    let k = r.series.betas.len();
    let mut header = vec!["tau".to_string(), "norm_h".into()];
    header.extend((1..=k).map(|j| format!("beta_{j}")));
    header.push("remainder_norm".into());
    let rows = (0..r.series.taus.len())
        .map(|i| {
            let mut row = vec![r.series.taus[i], r.series.norm_h[i]];
            row.extend(r.series.betas.iter().map(|b| b[i]));
            row.push(r.remainder[i]);
            row
        })
        .collect();
    Table { name: name.into(), header, rows }
}

fn stability_rate(ctx: &Ctx) -> Result<Output> {
    let run = generic_run(ctx)?;
    let mut out = Output::default();
    out.checks.push(ctx.near("5.stability_slope", "", -1.0, run.report.slope_stability.slope, 0.05));
    out.tables.push(asymptotics_table("generic_asymptotics.csv", &run.report));
    Ok(out)
}

fn improved_rate(ctx: &Ctx) -> Result<Output> {
    let run = generic_run(ctx)?;
    let r = &run.report;
    let mut out = Output::default();
    out.checks.push(ctx.near("6.remainder_slope", "", -2.0, r.slope_remainder.slope, 0.2));
    out.checks.push(ctx.at_most("6.n_ratio_slope", "", -1.8, r.slope_n.slope));
    Ok(out)
}

/// Recovered `τ*` for separable data `u_s` on `grid`.
fn shift_estimate(grid: &Grid, prof: &StationaryProfile, sys: &EigenSystem, s0: f64, tau_end: f64) -> Result<f64> {
    let m = 2.0;
    let u0 = prof.s_profile.map(|v| v / s0);
    let u = evolve_pme(grid, m, &u0, s0, Schedule::Fixed { dt: s0 * 1e-4, store_every: 10_000 }, EvolveOptions::default())?;
    let start = rescale_trajectory(&u.since(s0 * (1.0 - 1e-9)))?;
    let opts = RescaledOptions { integrator: Integrator::Bdf2, store_every: 20, tol: 1e-13, max_newton: 40 };
    let theta = evolve_rescaled(grid, 0.5, &start.fields[0], start.times[0], tau_end, 1e-3, opts)?;
    let opts = AsymptoticsOptions { modes: 4, tail_window: (tau_end - 4.0, tau_end), fit_window: (2.0, tau_end) };
    Ok(analyze(&theta, prof, sys, opts)?.tau_star)
}

fn shift_recovery(ctx: &Ctx) -> Result<Output> {
    let grid = interval(200)?;
    let (prof, _, sys) = spectrum_of(&grid, 0.5, 4)?;
    let mut out = Output::default();
    for s0 in [0.05, 0.1] {
        let tau_star = shift_estimate(&grid, &prof, &sys, s0, 10.0)?;
        out.checks.push(ctx.near("7.tau_star_relative_error", &format!("s0={s0}"), 0.0, tau_star / s0 - 1.0, 0.05));
    }
    Ok(out)
}

fn boundary_exponent(ctx: &Ctx) -> Result<Output> {
    let p = 0.5;
    let mut out = Output::default();
    let grid = interval(1600)?;
    let prof = solve_theta(&grid, p, 1e-12)?;
    let fit = fit_boundary_expansion(&prof.theta, &grid)?;
    out.checks.push(ctx.near("8.q_relative_error", "", 0.0, fit.q / 2.5 - 1.0, 0.02));
    let ratio = fit.b.abs() / fit.a.sqrt();
    out.checks.push(ctx.near("8.coefficient_relative_error", "", 0.0, ratio / (4.0 / 15.0) - 1.0, 0.02));
    let third = third_derivative_blowup(&prof.theta, &grid)?;
    out.checks.push(ctx.near("8.third_derivative_slope", "", -0.5, third.slope, 0.05));

    let mut proxies = Vec::new();
    for n in [400, 800, 1600] {
        let g = interval(n)?;
        let th = solve_theta(&g, p, 1e-12)?.theta;
        proxies.push((g.h(), holder_proxy(&th, &g, p)?, holder_proxy(&th, &g, p + 0.2)?));
    }
    for w in proxies.windows(2) {
        let tag = format!("h={:.3e}", w[1].0);
        out.checks.push(ctx.at_most("8.holder_bounded_growth", &tag, 1.1, w[1].1 / w[0].1));
        out.checks.push(ctx.at_least("8.holder_supercritical_growth", &tag, 2.0, w[1].2 / w[0].2));
    }
    out.tables.push(Table {
        name: "holder_proxy.csv".into(),
        header: vec!["h".into(), "proxy_alpha_1_over_m".into(), "proxy_alpha_plus_0.2".into()],
        rows: proxies.iter().map(|&(h, a, b)| vec![h, a, b]).collect(),
    });
    Ok(out)
}

fn time_derivative(ctx: &Ctx) -> Result<Output> {
    let run = generic_run(ctx)?;
    let u = unscale_trajectory(&run.theta)?;
    let mut out = Output::default();
    let d1 = time_derivative_decay(&u, 1, (2.0, 10.0))?;
    let d2 = time_derivative_decay(&u, 2, (2.0, 10.0))?;
    out.checks.push(ctx.near("9.first_derivative_slope", "", -3.0, d1.slope, 0.2));
    out.checks.push(ctx.near("9.second_derivative_slope", "", -4.0, d2.slope, 0.3));
    Ok(out)
}

#[derive(Debug, Clone, Copy)]
struct Sample {
    m: f64,
    center: f64,
    width: f64,
    height: f64,
    lower: f64,
}

#[derive(Debug, Clone, Copy)]
struct SampleOutcome {
    min_u: f64,
    min_theta: f64,
    upper_excess: f64,
    order_excess: f64,
    c1: f64,
    a1: f64,
    tau_star: f64,
    t_switch: f64,
}

/// `max (u − U)^+ / ‖U‖_∞` over the stored stamps of a `u`-trajectory.
fn upper_excess(traj: &Trajectory, prof: &StationaryProfile) -> f64 {
    let m = traj.exponent;
    let smax = prof.s_profile.max();
    traj.times
        .iter()
        .zip(&traj.fields)
        .filter(|(t, _)| **t > 0.0)
        .map(|(&t, u)| {
            let amp = t.powf(-1.0 / (m - 1.0));
            u.values().iter().zip(prof.s_profile.values()).fold(0.0_f64, |e, (a, s)| e.max(a - amp * s)) / (amp * smax)
        })
        .fold(0.0, f64::max)
}

fn run_sample(grid: &Grid, prof: &StationaryProfile, sys: &EigenSystem, s: Sample) -> Result<SampleOutcome> {
    let u0 = bump(grid, s.center, s.width, s.height * prof.s_profile.max());
    let run = pipeline(grid, s.m, &u0, 1e-3, 1e-2, 8.0, 10)?;
    let t_switch = *run.u.times.last().expect("nonempty");
    let tau0 = t_switch.ln();
    let opts = AsymptoticsOptions { modes: 4, tail_window: (5.0, 8.0), fit_window: (tau0, 8.0) };
    let report = analyze(&run.theta, prof, sys, opts)?;
    let lower = u0.map(|v| s.lower * v);
    let schedule = Schedule::Fixed { dt: 1e-3, store_every: 10 };
    let a = evolve_pme(grid, s.m, &lower, 1.0, schedule, EvolveOptions::default())?;
    let b = evolve_pme(grid, s.m, &u0, 1.0, schedule, EvolveOptions::default())?;
    let order = compare_ordering(&a, &b)?;
    let unscaled = unscale_trajectory(&run.theta)?;
    Ok(SampleOutcome {
        min_u: run.u.fields.iter().chain(&a.fields).chain(&b.fields).map(|f| f.min()).fold(f64::INFINITY, f64::min),
        min_theta: run.theta.fields.iter().map(|f| f.min()).fold(f64::INFINITY, f64::min),
        upper_excess: upper_excess(&run.u, prof).max(upper_excess(&unscaled, prof)),
        order_excess: match (order.initially_ordered, order.slack > 0.0) {
            (false, _) => f64::NAN,
            (true, true) => order.max_violation * 10.0 * grid.h() * grid.h() / order.slack,
            (true, false) => order.max_violation,
        },
        c1: report.c_js.first().map_or(f64::NAN, |c| c.c),
        a1: report.a1,
        tau_star: report.tau_star,
        t_switch,
    })
}

fn structural_invariants(ctx: &Ctx) -> Result<Output> {
    let grid = interval(200)?;
    let h2 = grid.h() * grid.h();
    let ms = [1.5, 2.0, 3.0];
    let mut out = Output::default();
    let mut systems = Vec::new();
    for m in ms {
        let (prof, _, sys) = spectrum_of(&grid, 1.0 / m, 4)?;
        let tag = format!("m={m}");
        out.checks.push(ctx.at_most("10.gram_defect", &tag, 1e-8, sys.gram_defect));
        let nodes: Vec<usize> = (0..4).map(|j| sys.sign_changes(j)).collect();
        let worst = nodes.iter().enumerate().map(|(j, &c)| (c as f64 - j as f64).abs()).fold(0.0, f64::max);
        out.checks.push(Check::holds(label("10.sturm_nodes", &tag), "sign changes of psi_j = j - 1", worst, worst == 0.0));
        systems.push((prof, sys));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
    let samples: Vec<(usize, Sample)> = (0..20)
        .map(|_| {
            let k = rng.gen_range(0..ms.len());
            let width = rng.gen_range(0.05..0.2);
            let s = Sample {
                m: ms[k],
                center: rng.gen_range(0.25..0.75),
                width,
                height: rng.gen_range(5.0..20.0),
                lower: rng.gen_range(0.3..0.9),
            };
            (k, s)
        })
        .collect();
    let outcomes: Vec<Result<SampleOutcome>> =
        samples.par_iter().map(|(k, s)| run_sample(&grid, &systems[*k].0, &systems[*k].1, *s)).collect();
    let mut rows = Vec::new();
    let mut agg = SampleOutcome {
        min_u: f64::INFINITY,
        min_theta: f64::INFINITY,
        upper_excess: 0.0,
        order_excess: 0.0,
        c1: f64::NEG_INFINITY,
        a1: f64::INFINITY,
        tau_star: f64::INFINITY,
        t_switch: 0.0,
    };
    for (i, ((_, s), o)) in samples.iter().zip(outcomes).enumerate() {
        let o = o.map_err(|e| Error::InvalidInitialData(format!("sample {i}: {e}")))?;
        agg.min_u = agg.min_u.min(o.min_u);
        agg.min_theta = agg.min_theta.min(o.min_theta);
        agg.upper_excess = agg.upper_excess.max(o.upper_excess);
        agg.order_excess = if o.order_excess.is_nan() { f64::NAN } else { agg.order_excess.max(o.order_excess) };
        agg.c1 = agg.c1.max(o.c1);
        agg.a1 = agg.a1.min(o.a1);
        agg.tau_star = agg.tau_star.min(o.tau_star);
        rows.push(vec![
            i as f64, s.m, s.center, s.width, s.height, s.lower, o.t_switch, o.min_u, o.upper_excess, o.order_excess, o.c1,
            o.a1, o.tau_star,
        ]);
    }
    out.checks.push(ctx.at_least("10.min_u", "", 0.0, agg.min_u));
    out.checks.push(Check::holds("10.min_theta", "> 0", agg.min_theta, agg.min_theta > 0.0));
    out.checks.push(ctx.at_most("10.upper_bound_excess", "", 10.0 * h2, agg.upper_excess));
    out.checks.push(Check::holds(
        "10.comparison_excess",
        format!("<= {}", 10.0 * h2),
        agg.order_excess,
        agg.order_excess <= ctx.tol("10.comparison_excess", 10.0 * h2),
    ));
    out.checks.push(ctx.at_most("10.c_1", "max", 0.0, agg.c1));
    out.checks.push(ctx.at_least("10.a_1", "min", 0.0, agg.a1));
    out.checks.push(ctx.at_least("10.tau_star", "min", 0.0, agg.tau_star));
    out.tables.push(Table {
        name: "invariants.csv".into(),
        header: [
            "sample", "m", "center", "width", "height", "lower", "t_switch", "min_u", "upper_excess", "order_excess", "c_1",
            "a_1", "tau_star",
        ]
        .iter()
        .map(|s| s.to_string())
        .collect(),
        rows,
    });
    Ok(out)
}

fn radial_smoke(ctx: &Ctx) -> Result<Output> {
    let mut out = Output::default();
    stationary_checks(ctx, &mut out, "11.stationary", &ball, 2.0)?;
    first_eigenpair_checks(ctx, &mut out, "11.eigenpair", &ball, 2.0)?;
    separable_checks(ctx, &mut out, "11.separable", &ball(400)?, 2.0)?;

    let grid = ball(200)?;
    let (prof, _, sys) = spectrum_of(&grid, 0.5, 4)?;
    let gap = spectral_gap_gamma(&sys)?;
    let u0 = bump(&grid, 0.0, 0.5, 5.0 * prof.s_profile.max());
    let run = pipeline(&grid, 2.0, &u0, 1e-4, 1e-3, 16.0, 20)?;
    let opts = AsymptoticsOptions { modes: 4, tail_window: (12.0, 16.0), fit_window: (2.0, 10.0) };
    let report = analyze(&run.theta, &prof, &sys, opts)?;
    let within = |target: f64, measured: f64| (measured / target - 1.0).abs();
    out.checks.push(ctx.at_most("11.stability_slope_deviation", "", 0.15, within(-1.0, report.slope_stability.slope)));
    let predicted = -(1.0 + gap.gamma);
    out.checks.push(ctx.at_most("11.remainder_slope_deviation", "", 0.15, within(predicted, report.slope_remainder.slope)));
    out.checks.push(ctx.at_most("11.n_ratio_slope_deviation", "", 0.15, within(-2.0, report.slope_n.slope)));
    let tau_star = shift_estimate(&grid, &prof, &sys, 0.1, 10.0)?;
    out.checks.push(ctx.at_most("11.tau_star_deviation", "", 0.15, within(0.1, tau_star)));
    out.tables.push(asymptotics_table("radial_asymptotics.csv", &report));
    Ok(out)
}
