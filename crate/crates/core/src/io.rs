//! CSV and gnuplot persistence of profiles, spectra, trajectories and reports.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::asymptotics::AsymptoticsReport;
use crate::error::{Error, Result};
use crate::evolution::{Trajectory, Variable};
use crate::geometry::Grid;
use crate::spectrum::EigenSystem;
use crate::stationary::StationaryProfile;

/// One measured quantity against its target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub criterion: String,
    pub target: String,
    pub measured: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl Check {
    /// `|measured - target| <= tolerance`.
    pub fn near(criterion: impl Into<String>, target: f64, measured: f64, tolerance: f64) -> Check {
        Check {
            criterion: criterion.into(),
            target: format!("{target}"),
            measured,
            tolerance,
            pass: (measured - target).abs() <= tolerance,
        }
    }

    /// `measured <= bound`.
    pub fn at_most(criterion: impl Into<String>, bound: f64, measured: f64) -> Check {
        Check { criterion: criterion.into(), target: format!("<= {bound}"), measured, tolerance: 0.0, pass: measured <= bound }
    }

    /// `measured >= bound`.
    pub fn at_least(criterion: impl Into<String>, bound: f64, measured: f64) -> Check {
        Check { criterion: criterion.into(), target: format!(">= {bound}"), measured, tolerance: 0.0, pass: measured >= bound }
    }

    /// A boolean property; `measured` carries the witnessing number.
    pub fn holds(criterion: impl Into<String>, target: impl Into<String>, measured: f64, pass: bool) -> Check {
        Check { criterion: criterion.into(), target: target.into(), measured, tolerance: 0.0, pass }
    }
}

fn writer(path: &Path) -> Result<csv::Writer<BufWriter<File>>> {
    Ok(csv::Writer::from_writer(BufWriter::new(File::create(path)?)))
}

fn num(x: f64) -> String {
    format!("{x}")
}

fn parse(s: &str) -> Result<f64> {
    s.trim().parse::<f64>().map_err(|e| Error::Io(format!("bad number {s:?}: {e}")))
}

/// `profile.csv = (x, theta, S, d)`.
pub fn write_profile(path: &Path, profile: &StationaryProfile) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["x", "theta", "S", "d"])?;
    let d = profile.grid.boundary_distance();
    for i in 0..profile.grid.n() {
        w.write_record([
            num(profile.grid.nodes()[i]),
            num(profile.theta.values()[i]),
            num(profile.s_profile.values()[i]),
            num(d.values()[i]),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Rebuilds a profile from `profile.csv` on `grid`.
pub fn read_profile(path: &Path, grid: &Grid, p: f64) -> Result<StationaryProfile> {
    let cols = read_columns(path, 4)?;
    if cols[0].len() != grid.n() {
        return Err(Error::Io(format!("{}: {} rows for a grid of {} nodes", path.display(), cols[0].len(), grid.n())));
    }
    check_nodes(grid, &cols[0], path)?;
    StationaryProfile::from_theta(grid, p, grid.field(cols[1].clone())?)
}

fn check_nodes(grid: &Grid, xs: &[f64], path: &Path) -> Result<()> {
    let tol = 1e-12 * grid.size();
    if xs.iter().zip(grid.nodes()).any(|(a, b)| (a - b).abs() > tol) {
        return Err(Error::Io(format!("{}: nodes do not match the configured grid", path.display())));
    }
    Ok(())
}

/// Reads the first `ncols` numeric columns of a headed CSV.
pub fn read_columns(path: &Path, ncols: usize) -> Result<Vec<Vec<f64>>> {
    let mut r = csv::Reader::from_path(path)?;
    let mut cols = vec![Vec::new(); ncols];
    for rec in r.records() {
        let rec = rec?;
        if rec.len() < ncols {
            return Err(Error::Io(format!("{}: expected {ncols} columns, found {}", path.display(), rec.len())));
        }
        for (c, col) in cols.iter_mut().enumerate() {
            col.push(parse(&rec[c])?);
        }
    }
    Ok(cols)
}

/// Two-column `x,u` initial data sampled at the grid nodes.
pub fn read_initial(path: &Path, grid: &Grid) -> Result<Vec<f64>> {
    let cols = read_columns(path, 2)?;
    if cols[0].len() != grid.n() {
        return Err(Error::InvalidInitialData(format!(
            "{}: {} samples for a grid of {} nodes",
            path.display(),
            cols[0].len(),
            grid.n()
        )));
    }
    check_nodes(grid, &cols[0], path).map_err(|e| Error::InvalidInitialData(e.to_string()))?;
    Ok(cols[1].clone())
}

/// `spectrum.csv`: one row per mode, `(j, mu_j, psi_j(x_0), ..., psi_j(x_{N-1}))`.
pub fn write_spectrum(path: &Path, sys: &EigenSystem) -> Result<()> {
    let mut w = writer(path)?;
    let n = sys.psis.first().map_or(0, |p| p.len());
    let mut header = vec!["j".to_string(), "mu_j".to_string()];
    header.extend((0..n).map(|i| format!("psi_{i}")));
    w.write_record(&header)?;
    for (j, (mu, psi)) in sys.mus.iter().zip(&sys.psis).enumerate() {
        let mut row = vec![(j + 1).to_string(), num(*mu)];
        row.extend(psi.values().iter().map(|v| num(*v)));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Long form `(stamp, node, value)`.
pub fn write_trajectory(path: &Path, traj: &Trajectory) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["stamp", "node", "value"])?;
    for (t, f) in traj.times.iter().zip(&traj.fields) {
        for (i, v) in f.values().iter().enumerate() {
            w.write_record([num(*t), i.to_string(), num(*v)])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_trajectory(path: &Path, grid: &Grid, variable: Variable, exponent: f64) -> Result<Trajectory> {
    let mut r = csv::Reader::from_path(path)?;
    let mut traj = Trajectory::new(grid.clone(), variable, exponent);
    let mut current: Option<(f64, Vec<f64>)> = None;
    let finish = |traj: &mut Trajectory, block: (f64, Vec<f64>)| -> Result<()> {
        if traj.times.last().is_some_and(|&t| t >= block.0) {
            return Err(Error::Io(format!("{}: stamps not increasing at {}", path.display(), block.0)));
        }
        traj.push(block.0, grid.field(block.1).map_err(|e| Error::Io(e.to_string()))?);
        Ok(())
    };
    for rec in r.records() {
        let rec = rec?;
        if rec.len() < 3 {
            return Err(Error::Io(format!("{}: expected (stamp, node, value)", path.display())));
        }
        let (t, node, v) = (parse(&rec[0])?, parse(&rec[1])? as usize, parse(&rec[2])?);
        match current.as_mut() {
            Some((s, vals)) if *s == t => {
                if node != vals.len() {
                    return Err(Error::Io(format!("{}: node {node} out of order", path.display())));
                }
                vals.push(v);
            }
            _ => {
                if let Some(block) = current.take() {
                    finish(&mut traj, block)?;
                }
                if node != 0 {
                    return Err(Error::Io(format!("{}: block at {t} does not start at node 0", path.display())));
                }
                current = Some((t, vec![v]));
            }
        }
    }
    if let Some(block) = current.take() {
        finish(&mut traj, block)?;
    }
    Ok(traj)
}

/// `asymptotics.csv = (tau, norm_h, beta_1..beta_K, remainder_norm)`.
pub fn write_asymptotics(path: &Path, report: &AsymptoticsReport) -> Result<()> {
    let mut w = writer(path)?;
    let k = report.series.betas.len();
    let mut header = vec!["tau".to_string(), "norm_h".to_string()];
    header.extend((1..=k).map(|j| format!("beta_{j}")));
    header.push("remainder_norm".into());
    w.write_record(&header)?;
    for (i, tau) in report.series.taus.iter().enumerate() {
        let mut row = vec![num(*tau), num(report.series.norm_h[i])];
        row.extend(report.series.betas.iter().map(|b| num(b[i])));
        row.push(num(report.remainder[i]));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// `report.csv = (criterion, target, measured, tolerance, pass)`.
pub fn write_report(path: &Path, checks: &[Check]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["criterion", "target", "measured", "tolerance", "pass"])?;
    for c in checks {
        w.write_record([c.criterion.clone(), c.target.clone(), num(c.measured), num(c.tolerance), c.pass.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_report(path: &Path) -> Result<Vec<Check>> {
    let mut r = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        if rec.len() != 5 {
            return Err(Error::Io(format!("{}: report rows need 5 fields", path.display())));
        }
        out.push(Check {
            criterion: rec[0].to_string(),
            target: rec[1].to_string(),
            measured: parse(&rec[2])?,
            tolerance: parse(&rec[3])?,
            pass: &rec[4] == "true",
        });
    }
    Ok(out)
}

/// `(quantity, value)` pairs.
pub fn write_pairs(path: &Path, header: [&str; 2], rows: &[(String, f64)]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(header)?;
    for (k, v) in rows {
        w.write_record([k.clone(), num(*v)])?;
    }
    w.flush()?;
    Ok(())
}

/// Whitespace-separated columns with a `#` header, readable by gnuplot.
pub fn write_dat(path: &Path, names: &[&str], columns: &[&[f64]]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "# {}", names.join(" "))?;
    let rows = columns.iter().map(|c| c.len()).min().unwrap_or(0);
    for i in 0..rows {
        let line: Vec<String> = columns.iter().map(|c| format!("{:.16e}", c[i])).collect();
        writeln!(w, "{}", line.join(" "))?;
    }
    w.flush()?;
    Ok(())
}
