//! Checks that run the quantum scattering map.

use std::time::Instant;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Bound, CheckReport, Table};
use crate::error::{Error, Result};
use crate::flow::{classical_scatter, potential_integral, radial_convergence};
use crate::phasespace::CuspData;
use crate::quantum::{
    adjoint_scattering_map, asymptotic_profile, asymptotic_profile_error, coherent_data, packet_moments,
    poisson_free, scattering_map, AdjointMode, Grid, SolverParams, SpectralData,
};
use crate::symbols::{MetricBump, PerturbationSpec, PotentialTerm};

/// `(Z₀, 𝔷₀, h)` of a coherent packet.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Packet {
    pub base: Vec<f64>,
    pub fiber: Vec<f64>,
    pub h: f64,
}

impl Packet {
    pub fn new(base: f64, fiber: f64, h: f64) -> Self {
        Self { base: vec![base], fiber: vec![fiber], h }
    }

    pub fn data(&self, grid: &Grid) -> Result<SpectralData> {
        coherent_data(grid, &self.base, &self.fiber, self.h)
    }
}

fn default_inputs() -> Vec<Packet> {
    vec![
        Packet::new(0.0, 0.0, 0.5),
        Packet::new(0.5, 0.0, 0.3),
        Packet::new(-0.8, 2.0, 0.4),
        Packet::new(0.2, 3.0, 0.5),
        Packet::new(1.0, -3.0, 0.2),
    ]
}

/// `‖a − b‖/‖b‖`.
fn relative_distance(a: &SpectralData, b: &SpectralData) -> f64 {
    a.distance(b) / b.norm()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FreeIdentityConfig {
    pub n_points: usize,
    pub half_width: f64,
    /// Data are read off at `±horizon`.
    pub horizon: f64,
    pub dt: f64,
    pub inputs: Vec<Packet>,
    /// Control: flip the sign of the free multiplier.
    pub control: bool,
}

impl Default for FreeIdentityConfig {
    fn default() -> Self {
        Self {
            n_points: 1024,
            half_width: 60.0,
            horizon: 6.0,
            dt: 1e-3,
            inputs: default_inputs(),
            control: false,
        }
    }
}

pub fn check_free_identity(cfg: &FreeIdentityConfig) -> Result<CheckReport> {
    let mut report = CheckReport::new("free-identity");
    let start = Instant::now();
    let grid = Grid::new(1, cfg.n_points, cfg.half_width)?;
    let spec = PerturbationSpec::flat(1);
    let params = SolverParams {
        dt: cfg.dt,
        margin: cfg.horizon,
        free_sign: if cfg.control { -1.0 } else { 1.0 },
        ..Default::default()
    };
    let mut table = Table::new("inputs", &["input", "relative_error"]);
    let mut worst: f64 = 0.0;
    for (i, p) in cfg.inputs.iter().enumerate() {
        let f = p.data(&grid)?;
        let e = match scattering_map(&spec, &f, &params) {
            Ok(g) => relative_distance(&g, &f),
            Err(err @ Error::BoundaryLeak { .. }) => {
                report.note(format!("input {i}: {err}"));
                f64::INFINITY
            }
            Err(err) => return Err(err),
        };
        worst = worst.max(e);
        table.push(vec![i as f64, e]);
    }
    report.measure("max |Sf - f|/|f|", worst, 1e-6, Bound::Max);
    report.measure("runtime [s]", start.elapsed().as_secs_f64(), 10.0, Bound::Max);
    report.tables.push(table);
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct UnitarityConfig {
    pub n_points: usize,
    pub half_width: f64,
    pub dt: f64,
    pub amplitude: f64,
    pub radius: f64,
    pub duration: f64,
    pub inputs: Vec<Packet>,
    /// Control: add an absorbing imaginary part `−0.3i` to the potential.
    pub control: bool,
}

impl Default for UnitarityConfig {
    fn default() -> Self {
        Self {
            n_points: 2048,
            half_width: 40.0,
            dt: 5e-4,
            amplitude: 0.5,
            radius: 3.0,
            duration: 1.0,
            inputs: vec![
                Packet::new(0.0, 0.0, 0.5),
                Packet::new(0.5, 0.0, 0.3),
                Packet::new(1.0, 1.0, 0.4),
                Packet::new(-0.7, -0.5, 0.5),
                Packet::new(1.2, -1.0, 0.3),
            ],
            control: false,
        }
    }
}

pub fn unitarity_spec(cfg: &UnitarityConfig) -> PerturbationSpec {
    let amp = Complex64::new(cfg.amplitude, if cfg.control { -0.3 } else { 0.0 });
    PerturbationSpec::flat(1).with_potential(PotentialTerm::new(amp, vec![0.0], 0.0, cfg.radius, cfg.duration))
}

pub fn check_unitarity(cfg: &UnitarityConfig) -> Result<CheckReport> {
    let mut report = CheckReport::new("unitarity");
    let start = Instant::now();
    let grid = Grid::new(1, cfg.n_points, cfg.half_width)?;
    let spec = unitarity_spec(cfg);
    let params = SolverParams::with_dt(cfg.dt);
    let errors: Vec<f64> = cfg
        .inputs
        .par_iter()
        .map(|p| -> Result<f64> {
            let f = p.data(&grid)?;
            let g = scattering_map(&spec, &f, &params)?;
            Ok((g.norm() - f.norm()).abs() / f.norm())
        })
        .collect::<Result<_>>()?;
    let mut table = Table::new("inputs", &["input", "relative_norm_change"]);
    for (i, e) in errors.iter().enumerate() {
        table.push(vec![i as f64, *e]);
    }
    report.measure("max | |Sf| - |f| |/|f|", errors.iter().copied().fold(0.0, f64::max), 1e-6, Bound::Max);
    report.measure("runtime [s]", start.elapsed().as_secs_f64(), 60.0, Bound::Max);
    report.tables.push(table);
    Ok(report)
}

/// Pairing residual `|⟨Sf, g⟩ − ⟨f, S*g⟩| / (‖f‖‖g‖)`.
pub fn pairing_residual(
    spec: &PerturbationSpec,
    f_minus: &SpectralData,
    g_plus: &SpectralData,
    params: &SolverParams,
) -> Result<f64> {
    let f_plus = scattering_map(spec, f_minus, params)?;
    let g_minus = adjoint_scattering_map(spec, g_plus, params)?;
    Ok((f_plus.inner(g_plus) - f_minus.inner(&g_minus)).norm() / (f_minus.norm() * g_plus.norm()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PairingConfig {
    pub n_points: usize,
    pub half_width: f64,
    pub dt: f64,
    pub f: Packet,
    pub g: Packet,
    pub potential: Complex64,
    pub metric_amplitude: f64,
    /// Control: replace the adjoint map by the identity.
    pub control: bool,
}

impl Default for PairingConfig {
    fn default() -> Self {
        Self {
            n_points: 512,
            half_width: 30.0,
            dt: 1e-2,
            f: Packet::new(0.5, 0.0, 0.5),
            g: Packet::new(0.6, 0.3, 0.4),
            potential: Complex64::new(0.3, 0.1),
            metric_amplitude: 0.05,
            control: false,
        }
    }
}

impl PairingConfig {
    pub fn potential_spec(&self) -> PerturbationSpec {
        PerturbationSpec::flat(1).with_potential(PotentialTerm::new(self.potential, vec![0.0], 0.0, 2.0, 1.0))
    }

    /// Measure-compensated metric bump.
    pub fn metric_spec(&self) -> PerturbationSpec {
        let mut spec = PerturbationSpec::flat(1);
        spec.bumps.push(MetricBump::isotropic(1, self.metric_amplitude, vec![0.0], 0.0, 2.0, 1.0));
        spec.measure_compensated = true;
        spec
    }
}

pub fn check_pairing(cfg: &PairingConfig) -> Result<CheckReport> {
    let mut report = CheckReport::new("pairing");
    let run = |spec: &PerturbationSpec, n: usize, dt: f64, mode: AdjointMode| -> Result<f64> {
        let grid = Grid::new(1, n, cfg.half_width)?;
        let f = cfg.f.data(&grid)?;
        let g = cfg.g.data(&grid)?;
        let params = SolverParams { dt, adjoint: mode, ..Default::default() };
        if cfg.control {
            let f_plus = scattering_map(spec, &f, &params)?;
            return Ok((f_plus.inner(&g) - f.inner(&g)).norm() / (f.norm() * g.norm()));
        }
        pairing_residual(spec, &f, &g, &params)
    };
    let potential = cfg.potential_spec();
    let metric = cfg.metric_spec();
    let jobs: Vec<(&PerturbationSpec, usize, f64, AdjointMode)> = vec![
        (&potential, cfg.n_points, cfg.dt, AdjointMode::Exact),
        (&metric, cfg.n_points, cfg.dt, AdjointMode::Exact),
        (&metric, cfg.n_points, cfg.dt, AdjointMode::Independent),
        (&metric, 2 * cfg.n_points, 0.5 * cfg.dt, AdjointMode::Independent),
    ];
    let res: Vec<f64> = jobs
        .par_iter()
        .map(|(spec, n, dt, mode)| run(spec, *n, *dt, *mode))
        .collect::<Result<_>>()?;
    let mut table = Table::new("pairing", &["leg", "N", "dt", "residual"]);
    for (i, ((_, n, dt, _), r)) in jobs.iter().zip(&res).enumerate() {
        table.push(vec![i as f64, *n as f64, *dt, *r]);
    }
    report.measure("residual, flat metric + potential", res[0], 5e-4, Bound::Max);
    report.measure("residual, metric bump", res[1], 5e-3, Bound::Max);
    report.measure("residual, metric bump, continuum adjoint", res[2], 5e-3, Bound::Max);
    report.measure("refinement ratio under (dt/2, 2N)", res[2] / res[3], 3.0, Bound::Min);
    report.note("legs 0-1 use the exact discrete adjoint; legs 2-3 discretize the continuum adjoint independently");
    report.tables.push(table);
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EgorovConfig {
    pub amplitude: f64,
    pub center_time: f64,
    pub radius: f64,
    pub duration: f64,
    /// `Z₀`; the fiber `𝔷₀ = 2 t_c Z₀` puts the beam through the bump centre.
    pub base: f64,
    pub h_list: Vec<f64>,
    pub n_points: usize,
    pub half_width: f64,
    pub dt: f64,
    pub tol: f64,
    /// Control: predict with the identity instead of `Cl_g`.
    pub control: bool,
}

impl Default for EgorovConfig {
    fn default() -> Self {
        Self {
            amplitude: 0.05,
            center_time: 80.0,
            radius: 200.0,
            duration: 10.0,
            base: 0.5,
            h_list: vec![0.1, 0.03, 0.01],
            n_points: 8192,
            half_width: 320.0,
            dt: 1e-2,
            tol: 1e-12,
            control: false,
        }
    }
}

impl EgorovConfig {
    pub fn spec(&self) -> PerturbationSpec {
        let mut spec = PerturbationSpec::flat(1);
        spec.bumps.push(MetricBump::isotropic(
            1,
            self.amplitude,
            vec![0.0],
            self.center_time,
            self.radius,
            self.duration,
        ));
        spec
    }

    pub fn beam(&self) -> CuspData {
        CuspData::from_slices(&[self.base], &[2.0 * self.center_time * self.base])
    }
}

pub fn check_egorov(cfg: &EgorovConfig) -> Result<CheckReport> {
    let mut report = CheckReport::new("egorov");
    let start = Instant::now();
    let spec = cfg.spec();
    let q = cfg.beam();
    let cl = classical_scatter(&spec, &q, cfg.tol)?;
    let displacement = cl.c_out.distance(&q);

    // Independent classical path: radial limits from the mid-bump state.
    let p_mid = cl.trajectory.eval(cfg.center_time);
    let horizon = 1e3 * (cfg.center_time.abs() + cfg.duration + 1.0);
    let rad = radial_convergence(&spec, &p_mid, horizon, cfg.tol)?;
    let cross = rad.forward.limit.distance(&cl.c_out).max(rad.backward.limit.distance(&q));

    let target = if cfg.control { q.clone() } else { cl.c_out.clone() };
    let grid = Grid::new(1, cfg.n_points, cfg.half_width)?;
    let params = SolverParams::with_dt(cfg.dt);
    let errors: Vec<(f64, f64, f64)> = cfg
        .h_list
        .par_iter()
        .map(|&h| -> Result<(f64, f64, f64)> {
            let f = coherent_data(&grid, q.base.as_slice(), q.fiber.as_slice(), h)?;
            let g = scattering_map(&spec, &f, &params)?;
            let (zb, fb) = packet_moments(&g)?;
            let moved = CuspData::new(zb.clone(), fb.clone());
            Ok((moved.distance(&target), zb[0], fb[0]))
        })
        .collect::<Result<_>>()?;
    let mut table = Table::new("errors", &["h", "error", "relative_error", "Zbar", "frakbar"]);
    for (h, (e, zb, fb)) in cfg.h_list.iter().zip(&errors) {
        table.push(vec![*h, *e, e / displacement, *zb, *fb]);
    }
    let worst_ratio = errors
        .windows(2)
        .map(|w| w[1].0 / w[0].0)
        .fold(0.0, f64::max);
    let last = errors.last().map_or(f64::INFINITY, |e| e.0);
    report.measure("max e(h_next)/e(h) (monotone decrease)", worst_ratio, 1.0, Bound::StrictMax);
    report.measure("e(h_min) / |Cl(q) - q|", last / displacement, 0.05, Bound::Max);
    report.measure("radial cross-check of Cl(q)", cross, 1e-8, Bound::Max);
    report.measure("runtime [s]", start.elapsed().as_secs_f64(), 300.0, Bound::Max);
    report.note(format!("classical displacement |Cl(q) - q| = {displacement:.6e}"));
    report.tables.push(table);
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EikonalConfig {
    pub amplitudes: Vec<f64>,
    pub radius: f64,
    pub duration: f64,
    pub packet: Packet,
    pub n_points: usize,
    pub half_width: f64,
    pub dt: f64,
    /// Control: compare against `+∫V dt`.
    pub control: bool,
}

impl Default for EikonalConfig {
    fn default() -> Self {
        Self {
            amplitudes: vec![0.05, 0.1],
            radius: 10.0,
            duration: 1.0,
            packet: Packet::new(0.5, 0.0, 0.5),
            n_points: 1024,
            half_width: 40.0,
            dt: 1e-3,
            control: false,
        }
    }
}

impl EikonalConfig {
    pub fn spec(&self, amplitude: f64) -> PerturbationSpec {
        PerturbationSpec::flat(1).with_potential(PotentialTerm::new(
            Complex64::new(amplitude, 0.0),
            vec![0.0],
            0.0,
            self.radius,
            self.duration,
        ))
    }
}

pub fn check_eikonal(cfg: &EikonalConfig) -> Result<CheckReport> {
    let mut report = CheckReport::new("eikonal");
    let grid = Grid::new(1, cfg.n_points, cfg.half_width)?;
    let f = cfg.packet.data(&grid)?;
    let beam = CuspData::from_slices(&cfg.packet.base, &cfg.packet.fiber);
    let params = SolverParams::with_dt(cfg.dt);
    let phases: Vec<(f64, f64)> = cfg
        .amplitudes
        .par_iter()
        .map(|&a| -> Result<(f64, f64)> {
            let spec = cfg.spec(a);
            let g = scattering_map(&spec, &f, &params)?;
            let num = g.inner(&f).arg();
            let cl = classical_scatter(&spec, &beam, 1e-12)?;
            let integral = potential_integral(&spec, &cl.trajectory, cl.t_in, cl.t_out).re;
            Ok((num, if cfg.control { integral } else { -integral }))
        })
        .collect::<Result<_>>()?;
    let mut table = Table::new("phases", &["amplitude", "phi_num", "phi_cl"]);
    for (a, (num, cl)) in cfg.amplitudes.iter().zip(&phases) {
        table.push(vec![*a, *num, *cl]);
        report.measure(
            format!("|phi_num - phi_cl| at amplitude {a}"),
            (num - cl).abs(),
            0.05 * cl.abs() + 0.01,
            Bound::Max,
        );
    }
    if phases.len() >= 2 {
        let (a0, a1) = (cfg.amplitudes[0], cfg.amplitudes[1]);
        let expected = a1 / a0;
        let ratio = phases[1].0 / phases[0].0;
        report.measure("relative deviation from linearity", (ratio / expected - 1.0).abs(), 0.1, Bound::Max);
    }
    report.tables.push(table);
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HighFreqConfig {
    pub amplitude: f64,
    pub radius: f64,
    pub duration: f64,
    pub base: f64,
    /// Fiber of the far beam; the through-beam uses 0.
    pub far_fiber: f64,
    pub h: f64,
    pub n_points: usize,
    pub half_width: f64,
    pub dt: f64,
    /// Control: send the "far" packet straight through the bump.
    pub control: bool,
}

impl Default for HighFreqConfig {
    fn default() -> Self {
        Self {
            amplitude: 0.2,
            radius: 2.0,
            duration: 1.0,
            base: 1.5,
            far_fiber: 30.0,
            h: 1.0,
            n_points: 16384,
            half_width: 60.0,
            dt: 1e-3,
            control: false,
        }
    }
}

impl HighFreqConfig {
    pub fn spec(&self) -> PerturbationSpec {
        let mut spec = PerturbationSpec::flat(1);
        spec.bumps.push(MetricBump::isotropic(1, self.amplitude, vec![0.0], 0.0, self.radius, self.duration));
        spec
    }
}

pub fn check_highfreq(cfg: &HighFreqConfig) -> Result<CheckReport> {
    let mut report = CheckReport::new("highfreq");
    let spec = cfg.spec();
    let grid = Grid::new(1, cfg.n_points, cfg.half_width)?;
    let params = SolverParams::with_dt(cfg.dt);
    let far = if cfg.control { 0.0 } else { cfg.far_fiber };
    let ratios: Vec<f64> = [far, 0.0]
        .par_iter()
        .map(|&fiber| -> Result<f64> {
            let f = coherent_data(&grid, &[cfg.base], &[fiber], cfg.h)?;
            Ok(relative_distance(&scattering_map(&spec, &f, &params)?, &f))
        })
        .collect::<Result<_>>()?;
    let offset = far.abs() / cfg.radius;
    report.measure("|Sf - f|/|f| for the far beam", ratios[0], 1e-3, Bound::Max);
    report.measure("|Sf - f|/|f| through the bump (positive control)", ratios[1], 0.1, Bound::StrictMin);
    report.note(format!("beam offset at the bump time: {offset:.1} radii"));
    let mut table = Table::new("ratios", &["fiber", "relative_change"]);
    table.push(vec![far, ratios[0]]);
    table.push(vec![0.0, ratios[1]]);
    report.tables.push(table);
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoncompactConfig {
    pub egorov: EgorovConfig,
    /// Centres of the fixed test functions `e^{−(Z−a)²/2s²} e^{i𝔷₀(Z−Z₀)}`.
    pub test_centers: Vec<f64>,
    pub test_width: f64,
    /// Control: run on the flat spec.
    pub control: bool,
}

impl Default for NoncompactConfig {
    fn default() -> Self {
        Self {
            egorov: EgorovConfig::default(),
            test_centers: vec![0.5, 0.7, 0.2],
            test_width: 0.5,
            control: false,
        }
    }
}

pub fn check_noncompact(cfg: &NoncompactConfig) -> Result<CheckReport> {
    let mut report = CheckReport::new("noncompact");
    let e = &cfg.egorov;
    let spec = if cfg.control { PerturbationSpec::flat(1) } else { e.spec() };
    let q = e.beam();
    let grid = Grid::new(1, e.n_points, e.half_width)?;
    let params = SolverParams::with_dt(e.dt);
    let (z0, frak0) = (q.base[0], q.fiber[0]);
    let tests: Vec<SpectralData> = cfg
        .test_centers
        .iter()
        .map(|&a| {
            SpectralData::from_fn(&grid, |zeta| {
                let d = zeta[0] - a;
                Complex64::from_polar((-d * d / (2.0 * cfg.test_width * cfg.test_width)).exp(), frak0 * (zeta[0] - z0))
            })
        })
        .collect();
    let rows: Vec<(f64, f64, Vec<f64>)> = e
        .h_list
        .par_iter()
        .map(|&h| -> Result<(f64, f64, Vec<f64>)> {
            let f = coherent_data(&grid, &[z0], &[frak0], h)?;
            let g = scattering_map(&spec, &f, &params)?;
            let norm = g.distance(&f);
            let asymptotic = (2.0 - 2.0 * g.inner(&f).re).max(0.0).sqrt();
            let ips = tests.iter().map(|phi| f.inner(phi).norm()).collect();
            Ok((norm, asymptotic, ips))
        })
        .collect::<Result<_>>()?;
    let c = 0.5 * rows[0].1;
    let inf = rows.iter().map(|r| r.0).fold(f64::INFINITY, f64::min);
    let mut header = vec!["h", "norm_S_minus_id"];
    let labels: Vec<String> = (0..tests.len()).map(|i| format!("test_{i}")).collect();
    header.extend(labels.iter().map(String::as_str));
    let mut table = Table::new("sequence", &header);
    for (h, (norm, _, ips)) in e.h_list.iter().zip(&rows) {
        let mut row = vec![*h, *norm];
        row.extend(ips);
        table.push(row);
    }
    let mut worst: f64 = 0.0;
    for i in 0..tests.len() {
        for w in rows.windows(2) {
            worst = worst.max(w[1].2[i] / w[0].2[i]);
        }
    }
    report.measure("lower bound c from the largest h", c, 1e-3, Bound::StrictMin);
    report.measure("inf_k |(S - Id) f_k| - c", inf - c, 0.0, Bound::Min);
    report.measure("max |<f_k+1, phi>|/|<f_k, phi>| (monotone decrease)", worst, 1.0, Bound::StrictMax);
    report.tables.push(table);
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProfileConfig {
    pub n_points: usize,
    pub half_width: f64,
    pub time: f64,
    pub h: f64,
    /// Packet width for the branch experiment.
    pub branch_h: f64,
    /// Control: use the opposite branch of `(4πit)^{−n/2}`.
    pub control: bool,
}

impl Default for ProfileConfig {
    fn default() -> Self {
        Self {
            n_points: 4096,
            half_width: 800.0,
            time: 200.0,
            h: 0.0625,
            branch_h: 0.25,
            control: false,
        }
    }
}

pub fn check_profile(cfg: &ProfileConfig) -> Result<CheckReport> {
    let mut report = CheckReport::new("profile");
    let grid = Grid::new(1, cfg.n_points, cfg.half_width)?;
    let f = coherent_data(&grid, &[0.0], &[0.0], cfg.h)?;
    let e1 = asymptotic_profile_error(&f, cfg.time)?;
    let e2 = asymptotic_profile_error(&f, 2.0 * cfg.time)?;
    let wide = coherent_data(&grid, &[0.0], &[0.0], cfg.branch_h)?;
    let u = poisson_free(&wide, cfg.time);
    let v = asymptotic_profile(&wide, cfg.time, if cfg.control { -1.0 } else { 1.0 })?;
    let mid = grid.n_points / 2;
    let phase = (u.values[mid] / v.values[mid]).arg().abs();
    report.measure(format!("relative profile error at t = {}", cfg.time), e1, 2e-2, Bound::Max);
    report.measure("error(t)/error(2t)", e1 / e2, 1.5, Bound::Min);
    report.measure("|arg(u/v)| at z = 0", phase, 1e-2, Bound::Max);
    let mut table = Table::new("profile", &["t", "relative_error"]);
    table.push(vec![cfg.time, e1]);
    table.push(vec![2.0 * cfg.time, e2]);
    report.tables.push(table);
    Ok(report)
}
