//! Checks that only need the bicharacteristic flow.

use std::time::Instant;

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Bound, CheckReport, Table};
use crate::error::Result;
use crate::flow::{classical_scatter, integrate_from_label, radial_convergence, scatter_jacobian, scatter_times, symplectic_defect, Segment};
use crate::phasespace::{from_boundary_chart, galilean_invariant, to_boundary_chart, CuspData};
use crate::symbols::PerturbationSpec;

fn bump_spec() -> PerturbationSpec {
    PerturbationSpec::single_bump(2, 0.05, 1.0, 1.0)
}

/// Beams of speed `|Z| ∈ [0.5, 2]` crossing `t = 0` inside the disc of radius `impact`.
pub fn random_beams(seed: u64, count: usize, impact: f64) -> Vec<CuspData> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let angle = rng.gen_range(0.0..std::f64::consts::TAU);
            let speed = rng.gen_range(0.5..2.0);
            let r = impact * rng.gen_range(0.0f64..1.0).sqrt();
            let phi = rng.gen_range(0.0..std::f64::consts::TAU);
            CuspData::from_slices(
                &[speed * angle.cos(), speed * angle.sin()],
                &[-r * phi.cos(), -r * phi.sin()],
            )
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConservationConfig {
    pub spec: PerturbationSpec,
    pub beams: usize,
    pub seed: u64,
    pub tol: f64,
    /// Control: integrate at a loose tolerance.
    pub control: bool,
}

impl Default for ConservationConfig {
    fn default() -> Self {
        Self {
            spec: bump_spec(),
            beams: 10,
            seed: 5,
            tol: 1e-11,
            control: false,
        }
    }
}

/// `|p| ≤ 1e−9` along bump trajectories and `2tζ − z` constant on free segments.
pub fn check_conservation(cfg: &ConservationConfig) -> Result<CheckReport> {
    let mut report = CheckReport::new("conservation");
    let tol = if cfg.control { 1e-3 } else { cfg.tol };
    let beams = random_beams(cfg.seed, cfg.beams, 0.7);
    let mut table = Table::new("trajectories", &["beam", "steps", "max_p", "max_invariant_drift"]);
    let mut worst_p: f64 = 0.0;
    let mut worst_inv: f64 = 0.0;
    let mut worst_time: f64 = 0.0;
    for (i, c) in beams.iter().enumerate() {
        let (t_in, t_out) = scatter_times(&cfg.spec, c);
        let start = Instant::now();
        let traj = integrate_from_label(&cfg.spec, c, t_in, t_out, tol)?;
        worst_time = worst_time.max(start.elapsed().as_secs_f64());
        let max_p = traj
            .samples
            .iter()
            .map(|p| cfg.spec.principal_symbol(p).abs())
            .fold(0.0, f64::max);
        let mut drift: f64 = 0.0;
        for seg in &traj.segments {
            if let Segment::Free { t0, t1, label, .. } = seg {
                for k in 0..=10 {
                    let t = t0 + (t1 - t0) * k as f64 / 10.0;
                    let p = traj.eval(t);
                    drift = drift.max((galilean_invariant(&p) - &label.fiber).amax());
                }
            }
        }
        worst_p = worst_p.max(max_p);
        worst_inv = worst_inv.max(drift);
        table.push(vec![i as f64, traj.stats.steps as f64, max_p, drift]);
    }
    report.measure("max |p| along trajectories", worst_p, 1e-9, Bound::Max);
    report.measure("max drift of 2t*zeta - z on free segments", worst_inv, 1e-12, Bound::Max);
    report.measure("max runtime per trajectory [s]", worst_time, 1.0, Bound::Max);
    report.tables.push(table);
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SymplecticConfig {
    pub spec: PerturbationSpec,
    pub samples: usize,
    pub seed: u64,
    pub h_fd: f64,
    pub tol: f64,
    /// Control: compose the map with a non-symplectic rescaling of `Z`.
    pub control: bool,
}

impl Default for SymplecticConfig {
    fn default() -> Self {
        Self {
            spec: bump_spec(),
            samples: 20,
            seed: 7,
            h_fd: 1e-4,
            tol: 1e-11,
            control: false,
        }
    }
}

pub fn check_symplectic(cfg: &SymplecticConfig) -> Result<CheckReport> {
    let mut report = CheckReport::new("symplectic");
    let beams = random_beams(cfg.seed, cfg.samples, 0.6);
    let n = cfg.spec.dim;
    let results: Vec<(f64, f64)> = beams
        .par_iter()
        .map(|c| -> Result<(f64, f64)> {
            let mut j = scatter_jacobian(&cfg.spec, c, cfg.h_fd, cfg.tol)?;
            if cfg.control {
                for r in 0..n {
                    for col in 0..2 * n {
                        j[(r, col)] *= 1.01;
                    }
                }
            }
            let deviation = (&j - nalgebra::DMatrix::<f64>::identity(2 * n, 2 * n)).amax();
            Ok((symplectic_defect(&j), deviation))
        })
        .collect::<Result<_>>()?;
    let mut table = Table::new("defects", &["sample", "defect", "jacobian_deviation"]);
    for (i, (d, dev)) in results.iter().enumerate() {
        table.push(vec![i as f64, *d, *dev]);
    }
    let worst = results.iter().map(|r| r.0).fold(0.0, f64::max);
    let min_dev = results.iter().map(|r| r.1).fold(f64::INFINITY, f64::min);
    report.measure("max |J^T Omega J - Omega|_F", worst, 1e-6, Bound::Max);
    report.note(format!("smallest max|J - I| over samples: {min_dev:.3e}"));
    report.tables.push(table);
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RadialConfig {
    pub spec: PerturbationSpec,
    pub beams: usize,
    pub seed: u64,
    pub horizon: f64,
    pub tol: f64,
    /// Control: compare the forward limit against the map applied to itself.
    pub control: bool,
}

impl Default for RadialConfig {
    fn default() -> Self {
        Self {
            spec: bump_spec(),
            beams: 4,
            seed: 9,
            horizon: 1e5,
            tol: 1e-12,
            control: false,
        }
    }
}

/// Decay exponent of `|z/2t − ζ|` and agreement of both limits with `Cl_g`.
pub fn check_radial(cfg: &RadialConfig) -> Result<CheckReport> {
    let mut report = CheckReport::new("radial");
    let mut table = Table::new("radial", &["beam", "direction", "t", "w"]);
    let mut slope_err: f64 = 0.0;
    let mut mismatch: f64 = 0.0;
    for (i, c) in random_beams(cfg.seed, cfg.beams, 0.5).iter().enumerate() {
        // Start from the trajectory point at the time centre of the bump.
        let r = classical_scatter(&cfg.spec, c, cfg.tol)?;
        let p0 = r.trajectory.eval(0.0);
        let rep = radial_convergence(&cfg.spec, &p0, cfg.horizon, cfg.tol)?;
        for (dir, s) in [(1.0, &rep.forward), (-1.0, &rep.backward)] {
            slope_err = slope_err.max(s.slope.map_or(f64::INFINITY, |v| (v - 1.0).abs()));
            for (t, w) in s.times.iter().zip(&s.w_norms) {
                table.push(vec![i as f64, dir, *t, *w]);
            }
        }
        let input = if cfg.control { &rep.forward.limit } else { &rep.backward.limit };
        let mapped = classical_scatter(&cfg.spec, input, cfg.tol)?.c_out;
        mismatch = mismatch.max(mapped.distance(&rep.forward.limit));
        mismatch = mismatch.max(rep.backward.limit.distance(c));
    }
    report.measure("max |fitted exponent - 1|", slope_err, 0.01, Bound::Max);
    report.measure("max limit mismatch against classical map", mismatch, 1e-8, Bound::Max);
    report.tables.push(table);
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChartConfig {
    pub dim: usize,
    pub samples: usize,
    pub seed: u64,
    /// Point `(z₀, t₀)` the beam family passes through.
    pub z0: Vec<f64>,
    pub t0: f64,
    /// Control: use the opposite sign for the Galilean invariant.
    pub control: bool,
}

impl Default for ChartConfig {
    fn default() -> Self {
        Self {
            dim: 3,
            samples: 500,
            seed: 13,
            z0: vec![1.5, -0.5, 0.7],
            t0: 0.8,
            control: false,
        }
    }
}

fn fit_loglog(xs: &[f64], ys: &[f64]) -> f64 {
    let k = xs.len() as f64;
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let mx = lx.iter().sum::<f64>() / k;
    let my = ly.iter().sum::<f64>() / k;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

/// Chart round trips and `ξ + 2t₀ = O(1/|Z|)` along beams through `(z₀, t₀)`.
pub fn check_chart(cfg: &ChartConfig) -> Result<CheckReport> {
    let mut report = CheckReport::new("chart");
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let n = cfg.dim;
    let mut worst: f64 = 0.0;
    for _ in 0..cfg.samples {
        let scale = 10f64.powf(rng.gen_range(-1.0..4.0));
        let base: Vec<f64> = (0..n).map(|_| scale * rng.gen_range(-1.0..1.0)).collect();
        let fiber: Vec<f64> = (0..n).map(|_| rng.gen_range(-100.0..100.0)).collect();
        let c = CuspData::from_slices(&base, &fiber);
        if c.base.norm() == 0.0 {
            continue;
        }
        let back = from_boundary_chart(&to_boundary_chart(&c)?)?;
        let err = ((&back.base - &c.base).amax() / c.base.amax().max(1.0))
            .max((&back.fiber - &c.fiber).amax() / c.fiber.amax().max(1.0));
        worst = worst.max(err);
    }
    report.measure("max relative chart round-trip error", worst, 1e-12, Bound::Max);

    let z0 = DVector::from_column_slice(&cfg.z0);
    let dir = {
        let d: DVector<f64> = DVector::from_iterator(n, (0..n).map(|i| 1.0 + 0.3 * i as f64));
        d.normalize()
    };
    let mut table = Table::new("xi_offset", &["abs_Z", "xi_plus_2t0"]);
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for k in 0..=30 {
        let r = 10f64.powf(1.0 + 3.0 * k as f64 / 30.0);
        let zeta = &dir * r;
        let frak = if cfg.control { &z0 - &zeta * (2.0 * cfg.t0) } else { &zeta * (2.0 * cfg.t0) - &z0 };
        let coords = to_boundary_chart(&CuspData::new(zeta, frak))?;
        let offset = (coords.xi + 2.0 * cfg.t0).abs();
        table.push(vec![r, offset]);
        xs.push(1.0 / r);
        ys.push(offset);
    }
    let slope = fit_loglog(&xs, &ys);
    report.measure("|fitted slope of xi + 2t0 against 1/|Z|| - 1|", (slope - 1.0).abs(), 0.02, Bound::Max);
    report.tables.push(table);
    Ok(report)
}
