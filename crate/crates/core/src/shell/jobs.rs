use std::time::Instant;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use super::scenario::{BeamExtent, Scenario};
use crate::error::{Error, Result};
use crate::flow::{classical_scatter, integrate, scatter_jacobian, symplectic_defect};
use crate::phasespace::{CuspData, PhasePoint};
use crate::quantum::io::{write_spectral, write_spectral_csv, write_wave};
use crate::quantum::{coherent_data, packet_moments, poisson_free, propagate_window, scattering_map, scattering_times};
use crate::verify::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum JobKind {
    Flow,
    ClassicalMap,
    Jacobian,
    Propagate,
    Scatter,
    Conservation,
    Symplectic,
    Radial,
    Chart,
    FreeIdentity,
    Unitarity,
    Pairing,
    Egorov,
    Eikonal,
    Highfreq,
    Noncompact,
    Profile,
}

impl JobKind {
    pub const ALL: [JobKind; 17] = [
        JobKind::Flow,
        JobKind::ClassicalMap,
        JobKind::Jacobian,
        JobKind::Propagate,
        JobKind::Scatter,
        JobKind::Conservation,
        JobKind::Symplectic,
        JobKind::Radial,
        JobKind::Chart,
        JobKind::FreeIdentity,
        JobKind::Unitarity,
        JobKind::Pairing,
        JobKind::Egorov,
        JobKind::Eikonal,
        JobKind::Highfreq,
        JobKind::Noncompact,
        JobKind::Profile,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            JobKind::Flow => "flow",
            JobKind::ClassicalMap => "classical-map",
            JobKind::Jacobian => "jacobian",
            JobKind::Propagate => "propagate",
            JobKind::Scatter => "scatter",
            JobKind::Conservation => "conservation",
            JobKind::Symplectic => "symplectic",
            JobKind::Radial => "radial",
            JobKind::Chart => "chart",
            JobKind::FreeIdentity => "free-identity",
            JobKind::Unitarity => "unitarity",
            JobKind::Pairing => "pairing",
            JobKind::Egorov => "egorov",
            JobKind::Eikonal => "eikonal",
            JobKind::Highfreq => "highfreq",
            JobKind::Noncompact => "noncompact",
            JobKind::Profile => "profile",
        }
    }

    pub fn parse(name: &str) -> Option<JobKind> {
        Self::ALL.into_iter().find(|k| k.as_str() == name)
    }

    /// Whether the job needs the wave solver.
    pub fn is_quantum(self) -> bool {
        !matches!(
            self,
            JobKind::Flow
                | JobKind::ClassicalMap
                | JobKind::Jacobian
                | JobKind::Conservation
                | JobKind::Symplectic
                | JobKind::Radial
                | JobKind::Chart
        )
    }

    /// Whether the job runs on the scenario's own perturbation and grid rather than a
    /// self-contained check geometry.
    pub fn uses_scenario(self) -> bool {
        matches!(
            self,
            JobKind::Flow | JobKind::ClassicalMap | JobKind::Jacobian | JobKind::Propagate | JobKind::Scatter
        )
    }

    pub(crate) fn validate_params(self, params: &Map<String, Value>) -> Result<()> {
        match self {
            JobKind::Flow => parse::<FlowJob>(params).map(drop),
            JobKind::ClassicalMap => parse::<ClassicalMapJob>(params).map(drop),
            JobKind::Jacobian => parse::<JacobianJob>(params).map(drop),
            JobKind::Propagate => parse::<PropagateJob>(params).map(drop),
            JobKind::Scatter => parse::<ScatterJob>(params).map(drop),
            JobKind::Conservation => parse::<ConservationConfig>(params).map(drop),
            JobKind::Symplectic => parse::<SymplecticConfig>(params).map(drop),
            JobKind::Radial => parse::<RadialConfig>(params).map(drop),
            JobKind::Chart => parse::<ChartConfig>(params).map(drop),
            JobKind::FreeIdentity => parse::<FreeIdentityConfig>(params).map(drop),
            JobKind::Unitarity => parse::<UnitarityConfig>(params).map(drop),
            JobKind::Pairing => parse::<PairingConfig>(params).map(drop),
            JobKind::Egorov => parse::<EgorovConfig>(params).map(drop),
            JobKind::Eikonal => parse::<EikonalConfig>(params).map(drop),
            JobKind::Highfreq => parse::<HighFreqConfig>(params).map(drop),
            JobKind::Noncompact => parse::<NoncompactConfig>(params).map(drop),
            JobKind::Profile => parse::<ProfileConfig>(params).map(drop),
        }
    }

    /// Packets a scenario job propagates on the scenario grid.
    pub(crate) fn beams(self, scenario: &Scenario, params: &Map<String, Value>) -> Result<Vec<BeamExtent>> {
        let (t_minus, t_plus) = scattering_times(&scenario.perturbation, scenario.solver.margin);
        let extent = |p: &PacketSpec, t_min: f64, t_max: f64| -> Result<BeamExtent> {
            let (base, fiber) = p.resolved(scenario.dim)?;
            Ok(BeamExtent { base, fiber, h: p.h, t_min, t_max })
        };
        match self {
            JobKind::Propagate => {
                let job: PropagateJob = parse(params)?;
                let lo = job.times.iter().copied().fold(t_minus, f64::min);
                let hi = job.times.iter().copied().fold(t_plus, f64::max);
                Ok(vec![extent(&job.packet, lo, hi)?])
            }
            JobKind::Scatter => {
                let job: ScatterJob = parse(params)?;
                Ok(vec![extent(&job.packet, t_minus, t_plus)?])
            }
            _ => Ok(Vec::new()),
        }
    }
}

fn parse<T: DeserializeOwned>(params: &Map<String, Value>) -> Result<T> {
    serde_json::from_value(Value::Object(params.clone())).map_err(|e| Error::InvalidInput(e.to_string()))
}

/// A file produced by a job besides its report.
#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    pub file_name: String,
    pub contents: Vec<u8>,
}

pub(crate) struct JobOutput {
    pub report: CheckReport,
    pub artifacts: Vec<Artifact>,
}

/// First unit vector of dimension `n` scaled by `s`.
fn axis(n: usize, s: f64) -> Vec<f64> {
    let mut v = vec![0.0; n];
    v[0] = s;
    v
}

fn pad(v: &[f64], n: usize, what: &str, default: Vec<f64>) -> Result<Vec<f64>> {
    match v.len() {
        0 => Ok(default),
        k if k == n => Ok(v.to_vec()),
        k => Err(Error::Validation(format!("{what} has {k} components, expected {n}"))),
    }
}

/// Beam through the origin at `t = 0`: starts at `2·t0·ζ` with `ζ = e₁`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FlowJob {
    pub z: Vec<f64>,
    pub zeta: Vec<f64>,
    pub t0: f64,
    pub t_final: f64,
    /// Sampling interval of the trajectory CSV.
    pub stride: f64,
}

impl Default for FlowJob {
    fn default() -> Self {
        Self { z: Vec::new(), zeta: Vec::new(), t0: -5.0, t_final: 5.0, stride: 0.05 }
    }
}

/// Explicit beams `[Z…, 𝔷…]`; empty means a fan of nine beams along the first axis.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassicalMapJob {
    pub labels: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct JacobianJob {
    pub base: Vec<f64>,
    pub fiber: Vec<f64>,
    pub h_fd: f64,
}

impl Default for JacobianJob {
    fn default() -> Self {
        Self { base: Vec::new(), fiber: Vec::new(), h_fd: 1e-6 }
    }
}

/// Coherent packet for scenario jobs; empty vectors default to `Z₀ = ½e₁`, `𝔷₀ = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PacketSpec {
    pub base: Vec<f64>,
    pub fiber: Vec<f64>,
    pub h: f64,
}

impl Default for PacketSpec {
    fn default() -> Self {
        Self { base: Vec::new(), fiber: Vec::new(), h: 0.5 }
    }
}

impl PacketSpec {
    fn resolved(&self, n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
        if !(self.h > 0.0) {
            return Err(Error::Validation(format!("packet h must be positive, got {}", self.h)));
        }
        Ok((
            pad(&self.base, n, "packet base", axis(n, 0.5))?,
            pad(&self.fiber, n, "packet fiber", vec![0.0; n])?,
        ))
    }
}

/// Propagates a packet from its incoming time and dumps the field at each of `times`
/// (ascending, after the incoming time); empty means the window ends and midpoint.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PropagateJob {
    pub packet: PacketSpec,
    pub times: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScatterJob {
    pub packet: PacketSpec,
}

pub(crate) fn execute(kind: JobKind, scenario: &Scenario, params: &Map<String, Value>) -> Result<JobOutput> {
    let plain = |report: Result<CheckReport>| report.map(|report| JobOutput { report, artifacts: Vec::new() });
    match kind {
        JobKind::Flow => run_flow(scenario, &parse(params)?),
        JobKind::ClassicalMap => run_classical_map(scenario, &parse(params)?),
        JobKind::Jacobian => run_jacobian(scenario, &parse(params)?),
        JobKind::Propagate => run_propagate(scenario, &parse(params)?),
        JobKind::Scatter => run_scatter(scenario, &parse(params)?),
        JobKind::Conservation => plain(check_conservation(&parse(params)?)),
        JobKind::Symplectic => plain(check_symplectic(&parse(params)?)),
        JobKind::Radial => plain(check_radial(&parse(params)?)),
        JobKind::Chart => plain(check_chart(&parse(params)?)),
        JobKind::FreeIdentity => plain(check_free_identity(&parse(params)?)),
        JobKind::Unitarity => plain(check_unitarity(&parse(params)?)),
        JobKind::Pairing => plain(check_pairing(&parse(params)?)),
        JobKind::Egorov => plain(check_egorov(&parse(params)?)),
        JobKind::Eikonal => plain(check_eikonal(&parse(params)?)),
        JobKind::Highfreq => plain(check_highfreq(&parse(params)?)),
        JobKind::Noncompact => plain(check_noncompact(&parse(params)?)),
        JobKind::Profile => plain(check_profile(&parse(params)?)),
    }
}

fn run_flow(scenario: &Scenario, job: &FlowJob) -> Result<JobOutput> {
    let n = scenario.dim;
    let spec = &scenario.perturbation;
    let zeta = pad(&job.zeta, n, "zeta", axis(n, 1.0))?;
    let z = pad(&job.z, n, "z", zeta.iter().map(|v| 2.0 * job.t0 * v).collect())?;
    let zeta_v = nalgebra::DVector::from_vec(zeta.clone());
    let tau = -spec.metric_norm2(&z, job.t0, &zeta_v);
    let p0 = PhasePoint::from_slices(&z, job.t0, &zeta, tau);
    let start = Instant::now();
    let traj = integrate(spec, &p0, job.t_final, scenario.solver.flow_tol)?;
    let elapsed = start.elapsed().as_secs_f64();
    let mut csv = Vec::new();
    traj.write_csv(spec, job.stride, &mut csv)?;
    let mut report = CheckReport::new("flow");
    report.measure("max |p| along the trajectory", traj.stats.max_p_drift, 1e-9, Bound::Max);
    report.note(format!(
        "{} accepted and {} rejected steps in {elapsed:.3} s",
        traj.stats.steps, traj.stats.rejected
    ));
    Ok(JobOutput {
        report,
        artifacts: vec![Artifact { file_name: "trajectory.csv".into(), contents: csv }],
    })
}

fn default_fan(n: usize) -> Vec<CuspData> {
    let mut out = Vec::new();
    for speed in [0.5, 1.0, 1.5] {
        for offset in [-0.5, 0.0, 0.5] {
            let mut fiber = vec![0.0; n];
            if n > 1 {
                fiber[1] = offset;
            } else {
                fiber[0] = offset;
            }
            out.push(CuspData::from_slices(&axis(n, speed), &fiber));
        }
    }
    out
}

fn run_classical_map(scenario: &Scenario, job: &ClassicalMapJob) -> Result<JobOutput> {
    let n = scenario.dim;
    let labels = if job.labels.is_empty() {
        default_fan(n)
    } else {
        job.labels
            .iter()
            .map(|l| {
                if l.len() != 2 * n {
                    return Err(Error::Validation(format!("label has {} entries, expected {}", l.len(), 2 * n)));
                }
                Ok(CuspData::from_vec(l))
            })
            .collect::<Result<Vec<_>>>()?
    };
    let mut header: Vec<String> = Vec::new();
    for side in ["in", "out"] {
        header.extend((1..=n).map(|i| format!("Z{i}_{side}")));
        header.extend((1..=n).map(|i| format!("frak{i}_{side}")));
    }
    header.extend(["potential_phase", "potential_phase_imag", "action_diff"].map(String::from));
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut table = Table::new("classical_map", &header_refs);
    let mut report = CheckReport::new("classical-map");
    let mut failed = 0usize;
    for (i, c) in labels.iter().enumerate() {
        match classical_scatter(&scenario.perturbation, c, scenario.solver.flow_tol) {
            Ok(r) => {
                let mut row = r.c_in.to_vec();
                row.extend(r.c_out.to_vec());
                row.extend([r.potential_phase, r.potential_phase_imag, r.action_diff]);
                table.push(row);
            }
            Err(e) => {
                failed += 1;
                report.note(format!("beam {i}: {e}"));
            }
        }
    }
    report.measure("failed beams", failed as f64, 0.0, Bound::Max);
    report.tables.push(table);
    Ok(JobOutput { report, artifacts: Vec::new() })
}

fn run_jacobian(scenario: &Scenario, job: &JacobianJob) -> Result<JobOutput> {
    let n = scenario.dim;
    let base = pad(&job.base, n, "base", axis(n, 1.0))?;
    let fiber = pad(&job.fiber, n, "fiber", axis(n, 0.3))?;
    let c = CuspData::from_slices(&base, &fiber);
    let jac = scatter_jacobian(&scenario.perturbation, &c, job.h_fd, scenario.solver.flow_tol)?;
    let mut header: Vec<String> = (1..=n).map(|i| format!("dZ{i}")).collect();
    header.extend((1..=n).map(|i| format!("dfrak{i}")));
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut table = Table::new("jacobian", &header_refs);
    for r in 0..2 * n {
        table.push(jac.row(r).iter().copied().collect());
    }
    let mut report = CheckReport::new("jacobian");
    report.measure("|J^T Ω J - Ω|_F", symplectic_defect(&jac), 1e-6, Bound::Max);
    report.tables.push(table);
    Ok(JobOutput { report, artifacts: Vec::new() })
}

fn run_propagate(scenario: &Scenario, job: &PropagateJob) -> Result<JobOutput> {
    let grid = scenario.grid()?;
    let spec = &scenario.perturbation;
    let params = scenario.solver.params();
    let (base, fiber) = job.packet.resolved(scenario.dim)?;
    let f = coherent_data(&grid, &base, &fiber, job.packet.h)?;
    let (t_minus, t_plus) = scattering_times(spec, params.margin);
    let times = if job.times.is_empty() {
        vec![t_minus, 0.5 * (t_minus + t_plus), t_plus]
    } else {
        job.times.clone()
    };
    if times.windows(2).any(|w| w[1] < w[0]) || times[0] < t_minus {
        return Err(Error::Validation(format!("dump times must ascend from t- = {t_minus}")));
    }
    let mut u = poisson_free(&f, t_minus);
    u.check_leak(params.leak_threshold)?;
    let mut table = Table::new("mass", &["t", "mass", "leak_fraction"]);
    let mut artifacts = Vec::new();
    let mut worst: f64 = 0.0;
    for (k, &t) in times.iter().enumerate() {
        u = propagate_window(spec, u, t, &params)?;
        let leak = u.leak_fraction();
        worst = worst.max(leak);
        table.push(vec![t, u.mass(), leak]);
        let mut buf = Vec::new();
        write_wave(&mut buf, &u)?;
        artifacts.push(Artifact { file_name: format!("wave_{k:03}.field"), contents: buf });
    }
    let mut report = CheckReport::new("propagate");
    report.measure("max outer-shell mass fraction", worst, params.leak_threshold, Bound::Max);
    report.tables.push(table);
    Ok(JobOutput { report, artifacts })
}

fn run_scatter(scenario: &Scenario, job: &ScatterJob) -> Result<JobOutput> {
    let grid = scenario.grid()?;
    let spec = &scenario.perturbation;
    let params = scenario.solver.params();
    let (base, fiber) = job.packet.resolved(scenario.dim)?;
    let f = coherent_data(&grid, &base, &fiber, job.packet.h)?;
    let g = scattering_map(spec, &f, &params)?;
    let (t_minus, t_plus) = scattering_times(spec, params.margin);
    let n = scenario.dim;
    let mut header: Vec<String> = vec!["side".into(), "norm".into()];
    header.extend((1..=n).map(|i| format!("Z{i}")));
    header.extend((1..=n).map(|i| format!("frak{i}")));
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut moments = Table::new("moments", &header_refs);
    for (side, data) in [(-1.0, &f), (1.0, &g)] {
        let (z, frak) = packet_moments(data)?;
        let mut row = vec![side, data.norm()];
        row.extend(z.iter());
        row.extend(frak.iter());
        moments.push(row);
    }
    let non_finite = g.values.iter().filter(|v| !(v.re.is_finite() && v.im.is_finite())).count();
    let mut report = CheckReport::new("scatter");
    report.measure("non-finite samples in Sf", non_finite as f64, 0.0, Bound::Max);
    report.note(format!("|Sf|/|f| = {}", g.norm() / f.norm()));
    report.tables.push(moments);
    let mut artifacts = Vec::new();
    for (name, data, t) in [("f_minus", &f, t_minus), ("f_plus", &g, t_plus)] {
        let mut buf = Vec::new();
        write_spectral(&mut buf, data, t)?;
        artifacts.push(Artifact { file_name: format!("{name}.field"), contents: buf });
    }
    let mut csv = Vec::new();
    write_spectral_csv(&mut csv, &g)?;
    artifacts.push(Artifact { file_name: "f_plus.csv".into(), contents: csv });
    Ok(JobOutput { report, artifacts })
}
