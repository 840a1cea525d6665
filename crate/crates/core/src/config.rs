//! Experiment configuration (TOML with one nesting level).

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::evolution::Integrator;
use crate::geometry::{build_grid, Grid, GridKind};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum Domain {
    Interval { length: f64 },
    Ball { dim: usize, radius: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Initial {
    /// `u_s(·, 0) = s^{1/(1-m)} S`.
    Separable { s: f64 },
    /// `height · (1 − ((x − center)/width)²)²` on its support (radial: `x = r`).
    Bump { center: f64, width: f64, height: f64 },
    /// `c · S`.
    ProfileScale { c: f64 },
    /// Two-column `x,u` CSV sampled at the grid nodes.
    File { path: PathBuf },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum ScheduleConfig {
    Fixed { dt: f64, t_end: f64, store_every: usize },
    Geometric { rho: f64, t0: f64, t_end: f64, store_every: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Experiment {
    Stationary,
    Spectrum,
    Evolve,
    Asymptotics,
    Regularity,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub newton: f64,
    pub eigen: f64,
    pub step: f64,
    /// Acceptance threshold for the separable-solution error.
    pub separable: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { newton: 1e-12, eigen: 1e-9, step: 1e-12, separable: 1e-3 }
    }
}

/// Continuation of an evolve run in logarithmic time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AsymptoticsConfig {
    pub modes: usize,
    pub dtau: f64,
    pub tau_end: f64,
    pub store_every: usize,
    pub integrator: Integrator,
    pub tail_window: [f64; 2],
    pub fit_window: [f64; 2],
}

impl Default for AsymptoticsConfig {
    fn default() -> Self {
        Self {
            modes: 4,
            dtau: 1e-3,
            tau_end: 16.0,
            store_every: 20,
            integrator: Integrator::Bdf2,
            tail_window: [12.0, 16.0],
            fit_window: [2.0, 10.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub m: f64,
    pub n: usize,
    pub experiments: Vec<Experiment>,
    pub output_dir: PathBuf,
    #[serde(default)]
    pub seed: u64,
    /// Reuse `profile.csv` and trajectories already in `output_dir`.
    #[serde(default)]
    pub resume: bool,
    pub domain: Domain,
    pub initial: Option<Initial>,
    pub schedule: Option<ScheduleConfig>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub asymptotics: AsymptoticsConfig,
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::ConfigInvalid(msg.into())
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| invalid(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| invalid(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serialises")
    }

    /// SHA-256 of the canonical TOML serialisation.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.to_toml().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn p(&self) -> f64 {
        1.0 / self.m
    }

    pub fn grid(&self) -> Result<Grid> {
        match self.domain {
            Domain::Interval { length } => build_grid(GridKind::Interval, 1, length, self.n),
            Domain::Ball { dim, radius } => build_grid(GridKind::Radial, dim, radius, self.n),
        }
        .map_err(|e| invalid(e.to_string()))
    }

    /// Requested experiments plus their prerequisites, in execution order.
    pub fn plan(&self) -> Vec<Experiment> {
        let mut plan = self.experiments.clone();
        let needs = |e: Experiment| -> &'static [Experiment] {
            match e {
                Experiment::Spectrum => &[Experiment::Stationary],
                Experiment::Asymptotics => &[Experiment::Stationary, Experiment::Spectrum],
                Experiment::Regularity | Experiment::Evolve => &[Experiment::Stationary],
                Experiment::Stationary => &[],
            }
        };
        for e in self.experiments.clone() {
            plan.extend_from_slice(needs(e));
        }
        if plan.contains(&Experiment::Asymptotics) && !self.resume {
            plan.push(Experiment::Evolve);
        }
        plan.sort();
        plan.dedup();
        // stationary → spectrum → evolve → asymptotics → regularity
        let rank = |e: &Experiment| match e {
            Experiment::Stationary => 0,
            Experiment::Spectrum => 1,
            Experiment::Evolve => 2,
            Experiment::Asymptotics => 3,
            Experiment::Regularity => 4,
        };
        plan.sort_by_key(rank);
        plan
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.m > 1.0) || !self.m.is_finite() {
            return Err(invalid(format!("m must exceed 1, got {}", self.m)));
        }
        if self.seed > i64::MAX as u64 {
            return Err(invalid("seed must fit a signed 64-bit integer"));
        }
        if self.experiments.is_empty() {
            return Err(invalid("experiments list is empty"));
        }
        self.grid()?;
        let needs_evolution =
            self.experiments.iter().any(|e| matches!(e, Experiment::Evolve)) || (self.experiments.contains(&Experiment::Asymptotics) && !self.resume);
        if needs_evolution {
            if self.initial.is_none() {
                return Err(invalid("evolution requires an [initial] table"));
            }
            match self.schedule {
                None => return Err(invalid("evolution requires a [schedule] table")),
                Some(ScheduleConfig::Fixed { dt, t_end, store_every }) => {
                    if !(dt > 0.0) || !(t_end > 0.0) || store_every == 0 {
                        return Err(invalid("fixed schedule needs dt > 0, t_end > 0, store_every >= 1"));
                    }
                }
                Some(ScheduleConfig::Geometric { rho, t0, t_end, store_every }) => {
                    if !(rho - 1.0 > 0.0 && rho - 1.0 <= 0.2) {
                        return Err(invalid(format!("geometric schedule needs 0 < rho - 1 <= 0.2, got rho = {rho}")));
                    }
                    if !(t0 > 0.0) || !(t_end > t0) || store_every == 0 {
                        return Err(invalid("geometric schedule needs 0 < t0 < t_end and store_every >= 1"));
                    }
                }
            }
        }
        match &self.initial {
            Some(Initial::Separable { s }) if !(*s > 0.0) => return Err(invalid("separable s must be positive")),
            Some(Initial::Bump { width, height, .. }) if !(*width > 0.0 && *height > 0.0) => {
                return Err(invalid("bump width and height must be positive"))
            }
            Some(Initial::ProfileScale { c }) if !(*c > 0.0) => return Err(invalid("profile scale must be positive")),
            _ => {}
        }
        let a = &self.asymptotics;
        if a.modes == 0 || !(a.dtau > 0.0) || a.store_every == 0 {
            return Err(invalid("asymptotics needs modes >= 1, dtau > 0, store_every >= 1"));
        }
        if !(a.fit_window[1] - a.fit_window[0] >= 3.0) {
            return Err(invalid("asymptotics fit window must span at least 3"));
        }
        if !(a.tail_window[1] > a.tail_window[0]) {
            return Err(invalid("asymptotics tail window is empty"));
        }
        if self.experiments.contains(&Experiment::Asymptotics) && !self.resume {
            let t_end = match self.schedule {
                Some(ScheduleConfig::Fixed { t_end, .. }) | Some(ScheduleConfig::Geometric { t_end, .. }) => t_end,
                None => 0.0,
            };
            if !(a.tau_end > t_end.ln()) {
                return Err(invalid(format!("asymptotics tau_end {} must exceed ln(t_end) = {}", a.tau_end, t_end.ln())));
            }
        }
        let t = &self.tolerances;
        if !(t.newton > 0.0 && t.eigen > 0.0 && t.step > 0.0 && t.separable > 0.0) {
            return Err(invalid("tolerances must be positive"));
        }
        Ok(())
    }
}
