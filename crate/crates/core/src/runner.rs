//! Config-driven experiment runs with persisted artifacts.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::asymptotics::{analyze, rescale_trajectory, AsymptoticsOptions};
use crate::config::{AsymptoticsConfig, Domain, Experiment, ExperimentConfig, Initial, ScheduleConfig};
use crate::error::{Error, Result};
use crate::evolution::{evolve_pme, evolve_rescaled, EvolveOptions, RescaledOptions, Schedule, Trajectory, Variable};
use crate::geometry::{Field, Grid, GridKind};
use crate::io::{self, Check};
use crate::regularity::{fit_boundary_expansion, relative_error_regularity, third_derivative_blowup};
use crate::spectrum::{assemble_linearized, solve_eigenpairs, EigenSystem};
use crate::stationary::{solve_theta, StationaryProfile, ThetaOracle};

pub const FORMAT_TAG: &str = "pme-lab-run/1";

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ExperimentStats {
    pub experiment: String,
    pub wall_seconds: f64,
    pub steps: usize,
    pub newton_iterations: usize,
    pub halvings: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub format: String,
    pub config_hash: String,
    pub wall_seconds: f64,
    /// File names relative to the output directory.
    pub artifacts: Vec<String>,
    pub failed: Option<String>,
    pub summary: BTreeMap<String, f64>,
    pub config: ExperimentConfig,
    pub stats: Vec<ExperimentStats>,
    pub checks: Vec<Check>,
}

impl RunRecord {
    pub fn passed(&self) -> bool {
        self.failed.is_none() && self.checks.iter().all(|c| c.pass)
    }

    pub fn load(path: &Path) -> Result<RunRecord> {
        let text = std::fs::read_to_string(path)?;
        toml::from_str(&text).map_err(|e| Error::Io(e.to_string()))
    }
}

/// Process exit code for a run outcome: 0 pass, 2 config error, 3 numerical
/// failure, 4 acceptance failure.
pub fn exit_code(outcome: &Result<RunRecord>) -> i32 {
    match outcome {
        Ok(rec) if rec.passed() => 0,
        Ok(_) => 4,
        Err(Error::ConfigInvalid(_)) => 2,
        Err(_) => 3,
    }
}

/// `height · (1 − z²)²` with `z = (x − center)/width`, zero outside `|z| < 1`.
pub fn bump(grid: &Grid, center: f64, width: f64, height: f64) -> Field {
    grid.field_from_fn(|x| {
        let z = (x - center) / width;
        if z.abs() < 1.0 {
            height * (1.0 - z * z).powi(2)
        } else {
            0.0
        }
    })
}

pub fn initial_field(initial: &Initial, grid: &Grid, profile: &StationaryProfile, m: f64) -> Result<Field> {
    match initial {
        Initial::Separable { s } => {
            let amp = s.powf(1.0 / (1.0 - m));
            Ok(profile.s_profile.map(|v| amp * v))
        }
        Initial::Bump { center, width, height } => Ok(bump(grid, *center, *width, *height)),
        Initial::ProfileScale { c } => Ok(profile.s_profile.map(|v| c * v)),
        Initial::File { path } => grid.field(io::read_initial(path, grid)?),
    }
}

/// Shift `s` with `u0 = u_s(·, 0)`, when the initial data is separable.
pub fn separable_shift(initial: &Initial, m: f64) -> Option<f64> {
    match initial {
        Initial::Separable { s } => Some(*s),
        Initial::ProfileScale { c } => Some(c.powf(1.0 - m)),
        _ => None,
    }
}

pub fn schedule_of(cfg: &ScheduleConfig) -> (Schedule, f64) {
    match *cfg {
        ScheduleConfig::Fixed { dt, t_end, store_every } => (Schedule::Fixed { dt, store_every }, t_end),
        ScheduleConfig::Geometric { rho, t0, t_end, store_every } => (Schedule::Geometric { t0, rho, store_every }, t_end),
    }
}

/// Continues a `u`-trajectory in logarithmic time from its last snapshot.
pub fn continue_rescaled(u: &Trajectory, cfg: &AsymptoticsConfig, tol: f64) -> Result<Trajectory> {
    let (t_last, _) = u.last().ok_or_else(|| Error::InvalidTime("empty trajectory".into()))?;
    let start = rescale_trajectory(&u.since(t_last))?;
    let p = 1.0 / u.exponent;
    let opts = RescaledOptions { integrator: cfg.integrator, store_every: cfg.store_every, tol, max_newton: 40 };
    evolve_rescaled(&u.grid, p, &start.fields[0], start.times[0], cfg.tau_end, cfg.dtau, opts)
}

/// Max over stored stamps of `‖u − u_s‖_∞ / ‖u_s‖_∞`.
pub fn separable_error(traj: &Trajectory, profile: &StationaryProfile, s: f64) -> f64 {
    let m = traj.exponent;
    let smax = profile.s_profile.max_abs();
    traj.times
        .iter()
        .zip(&traj.fields)
        .map(|(&t, u)| {
            let amp = (s + t).powf(1.0 / (1.0 - m));
            let err = u.values().iter().zip(profile.s_profile.values()).fold(0.0_f64, |e, (a, b)| e.max((a - amp * b).abs()));
            err / (amp * smax)
        })
        .fold(0.0, f64::max)
}

pub fn asymptotics_options(cfg: &AsymptoticsConfig) -> AsymptoticsOptions {
    AsymptoticsOptions {
        modes: cfg.modes,
        tail_window: (cfg.tail_window[0], cfg.tail_window[1]),
        fit_window: (cfg.fit_window[0], cfg.fit_window[1]),
    }
}

fn step_stats(name: &str, traj: &Trajectory, wall: f64) -> ExperimentStats {
    ExperimentStats {
        experiment: name.into(),
        wall_seconds: wall,
        steps: traj.step_log.len(),
        newton_iterations: traj.step_log.iter().map(|s| s.newton_iterations).sum(),
        halvings: traj.step_log.iter().map(|s| s.halvings).sum(),
    }
}

struct Session {
    dir: PathBuf,
    record: RunRecord,
}

impl Session {
    fn path(&mut self, name: &str) -> PathBuf {
        if !self.record.artifacts.iter().any(|a| a == name) {
            self.record.artifacts.push(name.into());
        }
        self.dir.join(name)
    }

    fn save(&mut self) -> Result<()> {
        let path = self.path("run.toml");
        let text = toml::to_string(&self.record).map_err(|e| Error::Io(e.to_string()))?;
        std::fs::write(path, text)?;
        Ok(())
    }
}

/// Runs the configured experiments in dependency order, writing CSVs, gnuplot
/// data, `report.csv` and `run.toml` into `output_dir`. Numerical failures
/// leave the partial artifacts plus a `FAILED` marker behind.
pub fn run(cfg: &ExperimentConfig) -> Result<RunRecord> {
    cfg.validate()?;
    std::fs::create_dir_all(&cfg.output_dir)
        .map_err(|e| Error::ConfigInvalid(format!("output_dir {}: {e}", cfg.output_dir.display())))?;
    let _ = std::fs::remove_file(cfg.output_dir.join("FAILED"));
    let mut session = Session {
        dir: cfg.output_dir.clone(),
        record: RunRecord {
            format: FORMAT_TAG.into(),
            config_hash: cfg.hash(),
            wall_seconds: 0.0,
            artifacts: Vec::new(),
            failed: None,
            summary: BTreeMap::new(),
            config: cfg.clone(),
            stats: Vec::new(),
            checks: Vec::new(),
        },
    };
    let start = Instant::now();
    let outcome = execute(cfg, &mut session);
    session.record.wall_seconds = start.elapsed().as_secs_f64();
    let report = session.path("report.csv");
    io::write_report(&report, &session.record.checks)?;
    if let Err(e) = &outcome {
        session.record.failed = Some(e.to_string());
        std::fs::write(cfg.output_dir.join("FAILED"), format!("{e}\n"))?;
    }
    session.save()?;
    outcome.map(|_| session.record)
}

fn execute(cfg: &ExperimentConfig, session: &mut Session) -> Result<()> {
    let grid = cfg.grid()?;
    let (m, p) = (cfg.m, cfg.p());
    let one_d = grid.kind() == GridKind::Interval;
    let mut profile: Option<StationaryProfile> = None;
    let mut sys: Option<EigenSystem> = None;
    let mut u_traj: Option<Trajectory> = None;

    for exp in cfg.plan() {
        let clock = Instant::now();
        let mut stats = ExperimentStats { experiment: format!("{exp:?}").to_lowercase(), ..Default::default() };
        match exp {
            Experiment::Stationary => {
                let existing = cfg.output_dir.join("profile.csv");
                let prof = if cfg.resume && existing.exists() {
                    io::read_profile(&existing, &grid, p)?
                } else {
                    let prof = solve_theta(&grid, p, cfg.tolerances.newton)?;
                    io::write_profile(&session.path("profile.csv"), &prof)?;
                    prof
                };
                let d = grid.boundary_distance();
                io::write_dat(
                    &session.path("profile.dat"),
                    &["x", "theta", "S", "d"],
                    &[grid.nodes(), prof.theta.values(), prof.s_profile.values(), d.values()],
                )?;
                let rec = &mut session.record;
                rec.summary.insert("theta_max".into(), prof.theta.max());
                rec.summary.insert("s_max".into(), prof.s_profile.max());
                rec.summary.insert("slope_a".into(), prof.slope_a);
                rec.summary.insert("stationary_residual".into(), prof.residual_norm);
                stats.newton_iterations = prof.iterations;
                if let Domain::Interval { length } = cfg.domain {
                    let oracle = ThetaOracle::new(p, length, 1e-12)?.sample_grid(&grid)?;
                    let err = prof.theta.values().iter().zip(&oracle).fold(0.0_f64, |e, (a, b)| e.max((a - b).abs()));
                    rec.summary.insert("oracle_error".into(), err);
                }
                let rel = prof.residual_norm / prof.theta.max();
                rec.checks.push(Check::at_most("stationary.relative_residual", 1e-8, rel));
                profile = Some(prof);
            }
            Experiment::Spectrum => {
                let prof = profile.as_ref().expect("planned after stationary");
                let k = cfg.asymptotics.modes.min(grid.n() / 4).max(1);
                let s = solve_eigenpairs(&assemble_linearized(&grid, prof, p)?, k, cfg.tolerances.eigen)?;
                io::write_spectrum(&session.path("spectrum.csv"), &s)?;
                let psi: Vec<&[f64]> = s.psis.iter().map(|f| f.values()).collect();
                let mut cols: Vec<&[f64]> = vec![grid.nodes()];
                cols.extend(psi);
                let names: Vec<String> = std::iter::once("x".to_string()).chain((1..=k).map(|j| format!("psi_{j}"))).collect();
                let names: Vec<&str> = names.iter().map(|s| s.as_str()).collect();
                io::write_dat(&session.path("spectrum.dat"), &names, &cols)?;
                let rec = &mut session.record;
                for (j, mu) in s.mus.iter().enumerate() {
                    rec.summary.insert(format!("mu_{}", j + 1), *mu);
                }
                rec.summary.insert("gram_defect".into(), s.gram_defect);
                rec.checks.push(Check::near("spectrum.mu_1", p, s.mus[0], 1e-3));
                rec.checks.push(Check::at_most("spectrum.gram_defect", 1e-8, s.gram_defect));
                if one_d && s.mus.len() >= 2 {
                    let target = 3.0 * p / (1.0 - p);
                    rec.checks.push(Check::near("spectrum.mu_2_relative", 0.0, s.mus[1] / target - 1.0, 0.01));
                }
                sys = Some(s);
            }
            Experiment::Evolve => {
                let prof = profile.as_ref().expect("planned after stationary");
                let initial = cfg.initial.as_ref().expect("validated");
                let (schedule, t_end) = schedule_of(cfg.schedule.as_ref().expect("validated"));
                let u0 = initial_field(initial, &grid, prof, m)?;
                let opts = EvolveOptions { tol: cfg.tolerances.step, ..Default::default() };
                let traj = evolve_pme(&grid, m, &u0, t_end, schedule, opts)?;
                io::write_trajectory(&session.path("trajectory.csv"), &traj)?;
                let masses = traj.masses();
                let maxima: Vec<f64> = traj.fields.iter().map(|f| f.max()).collect();
                io::write_dat(&session.path("evolution.dat"), &["t", "mass", "max_u"], &[&traj.times, &masses, &maxima])?;
                let min = traj.fields.iter().map(|f| f.min()).fold(f64::INFINITY, f64::min);
                let rec = &mut session.record;
                rec.checks.push(Check::at_least("evolve.min_u", 0.0, min));
                if let Some(s) = separable_shift(initial, m) {
                    let err = separable_error(&traj, prof, s);
                    rec.summary.insert("separable_error".into(), err);
                    rec.checks.push(Check::at_most("evolve.separable_error", cfg.tolerances.separable, err));
                }
                stats = step_stats("evolve", &traj, 0.0);
                u_traj = Some(traj);
            }
            Experiment::Asymptotics => {
                let prof = profile.as_ref().expect("planned after stationary");
                let s = sys.as_ref().expect("planned after spectrum");
                let existing = cfg.output_dir.join("rescaled.csv");
                let theta = if cfg.resume && existing.exists() {
                    io::read_trajectory(&existing, &grid, Variable::Theta, p)?
                } else {
                    let u = match u_traj.as_ref() {
                        Some(u) => u.clone(),
                        None => io::read_trajectory(&cfg.output_dir.join("trajectory.csv"), &grid, Variable::U, m)?,
                    };
                    let theta = continue_rescaled(&u, &cfg.asymptotics, cfg.tolerances.step.min(1e-13))?;
                    io::write_trajectory(&session.path("rescaled.csv"), &theta)?;
                    theta
                };
                let report = analyze(&theta, prof, s, asymptotics_options(&cfg.asymptotics))?;
                io::write_asymptotics(&session.path("asymptotics.csv"), &report)?;
                let mut cols: Vec<&[f64]> = vec![&report.series.taus, &report.series.norm_h];
                cols.extend(report.series.betas.iter().map(|b| b.as_slice()));
                cols.push(&report.remainder);
                let names: Vec<String> = ["tau".to_string(), "norm_h".into()]
                    .into_iter()
                    .chain((1..=report.series.betas.len()).map(|j| format!("beta_{j}")))
                    .chain(std::iter::once("remainder_norm".to_string()))
                    .collect();
                let names: Vec<&str> = names.iter().map(|s| s.as_str()).collect();
                io::write_dat(&session.path("asymptotics.dat"), &names, &cols)?;
                let rec = &mut session.record;
                for c in &report.c_js {
                    rec.summary.insert(format!("c_{}", c.j), c.c);
                }
                rec.summary.insert("a1".into(), report.a1);
                rec.summary.insert("tau_star".into(), report.tau_star);
                rec.summary.insert("gamma".into(), report.gap.gamma);
                rec.summary.insert("slope_h".into(), report.slope_h.slope);
                rec.summary.insert("slope_stability".into(), report.slope_stability.slope);
                rec.summary.insert("slope_remainder".into(), report.slope_remainder.slope);
                rec.summary.insert("slope_n".into(), report.slope_n.slope);
                let c1 = report.c_js.first().map_or(0.0, |c| c.c);
                rec.checks.push(Check::at_most("asymptotics.c_1", 0.0, c1));
                rec.checks.push(Check::near("asymptotics.slope_stability", -1.0, report.slope_stability.slope, 0.05));
                rec.checks.push(Check::near(
                    "asymptotics.slope_remainder",
                    -(1.0 + report.gap.gamma),
                    report.slope_remainder.slope,
                    0.2,
                ));
                stats = step_stats("asymptotics", &theta, 0.0);
            }
            Experiment::Regularity => {
                let prof = profile.as_ref().expect("planned after stationary");
                let mut rows: Vec<(String, f64)> = Vec::new();
                let fit = fit_boundary_expansion(&prof.theta, &grid)?;
                rows.extend([("theta_a".to_string(), fit.a), ("theta_b".into(), fit.b), ("theta_q".into(), fit.q)]);
                let ratio = fit.b.abs() / fit.a.sqrt();
                rows.push(("theta_b_over_sqrt_a".into(), ratio));
                let third = third_derivative_blowup(&prof.theta, &grid);
                if let Ok(t) = &third {
                    rows.push(("third_derivative_slope".into(), t.slope));
                }
                if let Some(u) = u_traj.as_ref() {
                    if let Some((t, last)) = u.last() {
                        if let Ok(rel) = relative_error_regularity(last, prof, m) {
                            rows.push(("relative_error_t".into(), t));
                            rows.push(("relative_error_q".into(), rel.q));
                        }
                    }
                }
                io::write_pairs(&session.path("regularity.csv"), ["quantity", "value"], &rows)?;
                let rec = &mut session.record;
                for (k, v) in &rows {
                    rec.summary.insert(format!("regularity.{k}"), *v);
                }
                if one_d {
                    let q = 2.0 + p;
                    rec.checks.push(Check::near("regularity.q", q, fit.q, 0.02 * q));
                    let third = third?;
                    rec.checks.push(Check::near("regularity.third_derivative_slope", p - 1.0, third.slope, 0.05));
                }
            }
        }
        stats.wall_seconds = clock.elapsed().as_secs_f64();
        session.record.stats.push(stats);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(dir: &Path, body: &str) -> ExperimentConfig {
        let text = format!("output_dir = {:?}\n{body}", dir.to_str().unwrap());
        ExperimentConfig::from_toml(&text).unwrap()
    }

    #[test]
    fn exit_codes_follow_outcomes() {
        assert_eq!(exit_code(&Err(Error::ConfigInvalid("x".into()))), 2);
        assert_eq!(exit_code(&Err(Error::CollapseToZero)), 3);
    }

    #[test]
    fn stationary_and_spectrum_run() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = config(
            dir.path(),
            "m = 2.0\nn = 200\nexperiments = [\"spectrum\"]\n[domain]\nkind = \"interval\"\nlength = 1.0\n",
        );
        let rec = run(&cfg).unwrap();
        assert!(rec.passed(), "{:?}", rec.checks);
        assert!((rec.summary["mu_1"] - 0.5).abs() < 1e-3);
        assert!((rec.summary["mu_2"] - 3.0).abs() < 0.03);
        for a in &rec.artifacts {
            assert!(dir.path().join(a).exists(), "{a}");
        }
        let back = RunRecord::load(&dir.path().join("run.toml")).unwrap();
        assert_eq!(back.config_hash, rec.config_hash);
        assert_eq!(back.artifacts, rec.artifacts);
    }
}
