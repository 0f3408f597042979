use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use super::jobs::JobKind;
use crate::error::{Error, Result};
use crate::quantum::{scattering_times, AdjointMode, Grid, SolverParams, LEAK_THRESHOLD, SHELL_FRACTION};
use crate::symbols::PerturbationSpec;

pub const SCHEMA: &str = "scatterlab.scenario/1";

/// Fraction of the half-width the perturbation support may occupy.
pub const SUPPORT_FRACTION: f64 = 0.8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub schema: String,
    pub name: String,
    pub dim: usize,
    pub perturbation: PerturbationSpec,
    pub grid: GridSettings,
    #[serde(default)]
    pub solver: SolverSettings,
    #[serde(default)]
    pub jobs: Vec<Job>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSettings {
    pub n_points: usize,
    pub half_width: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSettings {
    pub dt: f64,
    pub margin: f64,
    pub leak_threshold: f64,
    pub adjoint: AdjointMode,
    /// Bicharacteristic integration tolerance.
    pub flow_tol: f64,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            margin: 1.0,
            leak_threshold: LEAK_THRESHOLD,
            adjoint: AdjointMode::Exact,
            flow_tol: 1e-11,
        }
    }
}

impl SolverSettings {
    pub fn params(&self) -> SolverParams {
        SolverParams {
            dt: self.dt,
            margin: self.margin,
            leak_threshold: self.leak_threshold,
            adjoint: self.adjoint,
            ..SolverParams::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Job {
    pub name: String,
    pub check: JobKind,
    #[serde(default)]
    pub params: Map<String, Value>,
}

impl Job {
    pub fn new(check: JobKind) -> Self {
        Self {
            name: check.as_str().into(),
            check,
            params: Map::new(),
        }
    }

    /// Negative-control jobs are expected to fail.
    pub fn is_control(&self) -> bool {
        self.params.get("control").and_then(Value::as_bool).unwrap_or(false)
    }
}

/// Selects jobs by name and by kind. Empty lists select everything.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct JobFilter {
    pub names: Vec<String>,
    /// A kind with no job in the scenario runs once with default parameters.
    pub kinds: Vec<JobKind>,
}

impl Scenario {
    pub fn grid(&self) -> Result<Grid> {
        Grid::new(self.dim, self.grid.n_points, self.grid.half_width)
    }

    pub fn select(&self, filter: &JobFilter) -> Result<Vec<Job>> {
        for name in &filter.names {
            if !self.jobs.iter().any(|j| &j.name == name) {
                return Err(Error::Validation(format!("no job named '{name}' in scenario '{}'", self.name)));
            }
        }
        let mut out: Vec<Job> = self
            .jobs
            .iter()
            .filter(|j| filter.names.is_empty() || filter.names.contains(&j.name))
            .filter(|j| filter.kinds.is_empty() || filter.kinds.contains(&j.check))
            .cloned()
            .collect();
        if filter.names.is_empty() {
            for kind in &filter.kinds {
                if !self.jobs.iter().any(|j| j.check == *kind) {
                    let job = Job::new(*kind);
                    self.validate_job(&job)?;
                    out.push(job);
                }
            }
        }
        Ok(out)
    }

    /// Adds a job, replacing any job of the same name, and validates it against the scenario.
    pub fn insert_job(&mut self, job: Job) -> Result<()> {
        self.validate_job(&job)?;
        match self.jobs.iter_mut().find(|j| j.name == job.name) {
            Some(slot) => *slot = job,
            None => self.jobs.push(job),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema != SCHEMA {
            return Err(Error::Validation(format!("unsupported schema '{}', expected '{SCHEMA}'", self.schema)));
        }
        check_name("scenario", &self.name)?;
        if self.perturbation.dim != self.dim {
            return Err(Error::Validation(format!(
                "perturbation has dimension {}, scenario declares {}",
                self.perturbation.dim, self.dim
            )));
        }
        self.perturbation.validate()?;
        let s = &self.solver;
        if !(s.dt > 0.0 && s.margin >= 0.0 && s.leak_threshold > 0.0 && s.flow_tol > 0.0) {
            return Err(Error::Validation("solver dt, leak_threshold and flow_tol must be positive, margin non-negative".into()));
        }
        // Classical-only scenarios may use any dimension; the grid is checked when it is used.
        let grid_ok = self.grid();
        if let (Ok(grid), Some(bx)) = (&grid_ok, self.perturbation.support_box()) {
            let limit = SUPPORT_FRACTION * grid.half_width;
            if bx.lo.iter().chain(&bx.hi).any(|v| v.abs() >= limit) {
                return Err(Error::Validation(format!(
                    "perturbation support must lie strictly inside |z| < {limit} (80% of the box)"
                )));
            }
        }
        for (i, job) in self.jobs.iter().enumerate() {
            if self.jobs[..i].iter().any(|j| j.name == job.name) {
                return Err(Error::Validation(format!("duplicate job name '{}'", job.name)));
            }
            self.validate_job(job)?;
        }
        Ok(())
    }

    fn validate_job(&self, job: &Job) -> Result<()> {
        check_name("job", &job.name)?;
        let fail = |e: Error| Error::Validation(format!("job '{}': {e}", job.name));
        job.check.validate_params(&job.params).map_err(fail)?;
        let beams = job.check.beams(self, &job.params).map_err(fail)?;
        if beams.is_empty() {
            return Ok(());
        }
        let grid = self.grid().map_err(fail)?;
        let (t_minus, t_plus) = scattering_times(&self.perturbation, self.solver.margin);
        let reach = (1.0 - SHELL_FRACTION) * grid.half_width;
        for beam in beams {
            let width = 6.0 / (2.0 * beam.h).sqrt();
            // Centres move linearly in t, so the endpoints bound the excursion.
            let times = [beam.t_min.min(t_minus), beam.t_max.max(t_plus)];
            for t in times {
                for a in 0..self.dim {
                    let center = 2.0 * t * beam.base[a] - beam.fiber[a];
                    if center.abs() + width > reach {
                        return Err(Error::Validation(format!(
                            "job '{}': packet centre {center:.3} ± 6σ ({width:.3}) at t = {t} leaves |z| ≤ {reach}",
                            job.name
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

/// A coherent packet declared by a job, with the time span it is propagated over.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamExtent {
    pub base: Vec<f64>,
    pub fiber: Vec<f64>,
    pub h: f64,
    pub t_min: f64,
    pub t_max: f64,
}

fn check_name(what: &str, name: &str) -> Result<()> {
    let ok = !name.is_empty() && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_');
    if ok {
        Ok(())
    } else {
        Err(Error::Validation(format!("{what} name '{name}' must be non-empty ASCII letters, digits, '-' or '_'")))
    }
}

pub fn parse_scenario(text: &str) -> Result<Scenario> {
    let scenario: Scenario = serde_json::from_str(text).map_err(|e| Error::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    scenario.validate()?;
    Ok(scenario)
}

pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_scenario(&text)
}
