//! Bicharacteristic flow of `p = τ + |ζ|²_g` and the classical scattering map.
//!
//! Inside the (slightly inflated) spacetime boxes of the metric bumps the flow
//! is integrated with [`dopri::Dopri5`]. Everywhere else the metric is flat and
//! the flow is the closed-form line `z = 2tζ − 𝔷`; free segments carry their
//! label `(Z, 𝔷)` so a beam that never meets a bump keeps it bit for bit.

pub mod dopri;

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::phasespace::{bichar_from_cusp, cusp_from_bichar, galilean_invariant, CuspData, PhasePoint};
use crate::quadrature;
use crate::symbols::{PerturbationSpec, SupportBox};
use dopri::{DenseStep, Dopri5, StepOutcome, Tolerance};

/// Inflation applied to the bump boxes before switching to the free flow.
pub const BOX_MARGIN: f64 = 1e-9;

/// `H_p` in state order `(ż, ṫ, ζ̇, τ̇)`.
pub fn hamilton_rhs(spec: &PerturbationSpec, p: &PhasePoint) -> DVector<f64> {
    let n = p.dim();
    let jet = spec.symbol_jet(p);
    let mut out = DVector::zeros(2 * n + 2);
    for i in 0..n {
        out[i] = jet.dp_dzeta[i];
        out[n + 1 + i] = -jet.dp_dz[i];
    }
    out[n] = jet.dp_dtau;
    out[2 * n + 1] = -jet.dp_dt;
    out
}

#[derive(Debug, Clone, PartialEq)]
pub enum Segment {
    /// Closed-form free motion labelled by `(ζ, 𝔷)` with constant `τ`.
    Free {
        t0: f64,
        t1: f64,
        label: CuspData,
        tau: f64,
    },
    Integrated(DenseStep),
}

impl Segment {
    fn span(&self) -> (f64, f64) {
        match self {
            Segment::Free { t0, t1, .. } => (*t0, *t1),
            Segment::Integrated(s) => (s.t0, s.t1()),
        }
    }

    fn contains(&self, t: f64) -> bool {
        let (a, b) = self.span();
        t >= a.min(b) && t <= a.max(b)
    }

    fn eval(&self, t: f64) -> PhasePoint {
        match self {
            Segment::Free { label, tau, .. } => {
                let mut p = bichar_from_cusp(label, t);
                p.tau = *tau;
                p
            }
            Segment::Integrated(s) => {
                let mut p = PhasePoint::from_state(&s.eval(t));
                p.t = t;
                p
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct TrajectoryStats {
    pub steps: usize,
    pub rejected: usize,
    /// `max |p(t) − p(t₀)|` over accepted steps.
    pub max_p_drift: f64,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    /// Segment endpoints and accepted steps in increasing time.
    pub samples: Vec<PhasePoint>,
    pub segments: Vec<Segment>,
    pub stats: TrajectoryStats,
    pub t_start: f64,
    pub t_end: f64,
    /// Time spans spent inside bump boxes, in integration order.
    pub box_visits: Vec<(f64, f64)>,
}

impl Trajectory {
    pub fn dim(&self) -> usize {
        self.samples[0].dim()
    }

    /// Dense evaluation at any `t` between the endpoints.
    pub fn eval(&self, t: f64) -> PhasePoint {
        let seg = self
            .segments
            .iter()
            .find(|s| s.contains(t))
            .unwrap_or_else(|| self.segments.last().expect("non-empty trajectory"));
        seg.eval(t)
    }

    pub fn endpoint(&self) -> PhasePoint {
        self.segments.last().expect("non-empty trajectory").eval(self.t_end)
    }

    /// Label of the final segment when it is free.
    pub fn final_label(&self) -> Option<&CuspData> {
        match self.segments.last()? {
            Segment::Free { label, .. } => Some(label),
            Segment::Integrated(_) => None,
        }
    }

    /// Whether any part of the trajectory was integrated numerically.
    pub fn touched_support(&self) -> bool {
        !self.box_visits.is_empty()
    }

    /// Rows `t, z_1..z_n, zeta_1..zeta_n, tau, p_residual` at spacing `stride`.
    pub fn write_csv<W: Write>(&self, spec: &PerturbationSpec, stride: f64, out: &mut W) -> Result<()> {
        if !(stride > 0.0) {
            return Err(Error::InvalidInput("stride must be positive".into()));
        }
        let n = self.dim();
        let mut header = vec!["t".to_string()];
        header.extend((1..=n).map(|i| format!("z_{i}")));
        header.extend((1..=n).map(|i| format!("zeta_{i}")));
        header.push("tau".into());
        header.push("p_residual".into());
        writeln!(out, "{}", header.join(","))?;
        let (lo, hi) = (self.t_start.min(self.t_end), self.t_start.max(self.t_end));
        let count = ((hi - lo) / stride).floor() as usize;
        let mut times: Vec<f64> = (0..=count).map(|k| lo + k as f64 * stride).collect();
        if *times.last().unwrap() < hi {
            times.push(hi);
        }
        for t in times {
            let p = self.eval(t);
            let mut row = vec![format!("{t}")];
            row.extend(p.z.iter().map(|v| format!("{v}")));
            row.extend(p.zeta.iter().map(|v| format!("{v}")));
            row.push(format!("{}", p.tau));
            row.push(format!("{}", spec.principal_symbol(&p)));
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }
}

enum Start<'a> {
    Point(&'a PhasePoint),
    Label(&'a CuspData, f64),
}

/// Integrates the bicharacteristic through `p0` to `t_final`.
pub fn integrate(spec: &PerturbationSpec, p0: &PhasePoint, t_final: f64, tol: f64) -> Result<Trajectory> {
    integrate_inner(spec, Start::Point(p0), t_final, tol)
}

/// Integrates the free bicharacteristic labelled by `c` from `t_init` to `t_final`.
pub fn integrate_from_label(
    spec: &PerturbationSpec,
    c: &CuspData,
    t_init: f64,
    t_final: f64,
    tol: f64,
) -> Result<Trajectory> {
    integrate_inner(spec, Start::Label(c, t_init), t_final, tol)
}

fn transit_budget(boxes: &[SupportBox], zeta: &DVector<f64>) -> f64 {
    let Some(u) = SupportBox::union(boxes) else {
        return 1e3;
    };
    let diam = u
        .lo
        .iter()
        .zip(&u.hi)
        .map(|(a, b)| (b - a).powi(2))
        .sum::<f64>()
        .sqrt();
    let speed = 2.0 * zeta.norm();
    if speed > 0.0 {
        (10.0 * diam / speed).max(1e3)
    } else {
        f64::INFINITY
    }
}

/// Largest step inside the support: a fifth of the shortest bump crossing time, so
/// the error estimator cannot step over a small bump nested in a larger box.
fn step_cap(spec: &PerturbationSpec, zeta: &DVector<f64>) -> f64 {
    let speed = 2.0 * zeta.norm();
    spec.bumps
        .iter()
        .map(|b| if speed > 0.0 { b.duration.min(b.radius / speed) } else { b.duration })
        .fold(f64::INFINITY, f64::min)
        * 0.2
}

enum Mode {
    Free { label: CuspData, tau: f64 },
    Integrating { y: Vec<f64>, forced: bool },
}

fn integrate_inner(spec: &PerturbationSpec, start: Start<'_>, t_final: f64, tol: f64) -> Result<Trajectory> {
    if !(tol > 0.0) {
        return Err(Error::InvalidInput(format!("tolerance must be positive, got {tol}")));
    }
    let (p0, initial_label) = match start {
        Start::Point(p) => (p.clone(), None),
        Start::Label(c, t) => (bichar_from_cusp(c, t), Some(c.clone())),
    };
    if !p0.is_finite() || !t_final.is_finite() {
        return Err(Error::InvalidInput("non-finite initial state".into()));
    }
    if t_final == p0.t {
        return Err(Error::InvalidInput("t_final must differ from the initial time".into()));
    }
    let n = p0.dim();
    let direction = (t_final - p0.t).signum();
    let boxes: Vec<SupportBox> = spec.metric_boxes().iter().map(|b| b.inflate(BOX_MARGIN)).collect();
    let inside = |y: &[f64]| boxes.iter().any(|b| b.contains(&y[..n], y[n]));
    let p_start = spec.principal_symbol(&p0);

    let rhs = |_t: f64, y: &[f64]| -> Vec<f64> {
        hamilton_rhs(spec, &PhasePoint::from_state(y)).as_slice().to_vec()
    };
    let mut solver = Dopri5::new(Tolerance { rtol: tol, atol: tol });
    let mut h = 0.0;

    let mut segments = Vec::new();
    let mut samples = vec![p0.clone()];
    let mut stats = TrajectoryStats::default();
    let mut box_visits = Vec::new();
    let mut visit_start = p0.t;
    let mut t = p0.t;

    let mut mode = if inside(&p0.to_state()) {
        Mode::Integrating { y: p0.to_state(), forced: true }
    } else {
        Mode::Free {
            label: initial_label.unwrap_or_else(|| cusp_from_bichar(&p0)),
            tau: p0.tau,
        }
    };

    loop {
        match mode {
            Mode::Free { label, tau } => {
                let p = bichar_from_cusp(&label, t);
                let entry = boxes
                    .iter()
                    .filter_map(|b| b.line_interval(p.z.as_slice(), t, p.zeta.as_slice()))
                    .filter_map(|(s_lo, s_hi)| {
                        if direction > 0.0 {
                            (s_hi >= 0.0).then(|| t + s_lo.max(0.0))
                        } else {
                            (s_lo <= 0.0).then(|| t + s_hi.min(0.0))
                        }
                    })
                    .filter(|te| (t_final - te) * direction > 0.0)
                    .min_by(|a, b| ((a - t) * direction).total_cmp(&((b - t) * direction)));
                let t_next = entry.unwrap_or(t_final);
                if t_next != t {
                    segments.push(Segment::Free { t0: t, t1: t_next, label: label.clone(), tau });
                    let mut q = bichar_from_cusp(&label, t_next);
                    q.tau = tau;
                    samples.push(q);
                }
                t = t_next;
                match entry {
                    None => break,
                    Some(_) => {
                        let mut q = bichar_from_cusp(&label, t);
                        q.tau = tau;
                        visit_start = t;
                        mode = Mode::Integrating { y: q.to_state(), forced: true };
                    }
                }
            }
            Mode::Integrating { y, forced } => {
                if h == 0.0 {
                    h = solver.initial_step(&rhs, t, &y, direction);
                }
                let zeta = DVector::from_column_slice(&y[n + 1..2 * n + 1]);
                let budget = transit_budget(&boxes, &zeta);
                let cap = step_cap(spec, &zeta);
                let mut y = y;
                let mut forced = forced;
                loop {
                    if h.abs() > cap {
                        h = cap * direction;
                    }
                    if (t + h - t_final) * direction > 0.0 {
                        h = t_final - t;
                    }
                    if h.abs() < 1e-14 * t.abs().max(1.0) {
                        return Err(Error::StepFailure { t, h });
                    }
                    let k1 = rhs(t, &y);
                    match solver.step(&rhs, t, &y, &k1, h) {
                        StepOutcome::Rejected { h_next } => {
                            stats.rejected += 1;
                            h = h_next;
                        }
                        StepOutcome::Accepted { y: y1, dense, h_next } => {
                            stats.steps += 1;
                            let reached_end = (t + h - t_final) * direction >= 0.0;
                            t = if reached_end { t_final } else { dense.t1() };
                            y = y1;
                            y[n] = t;
                            segments.push(Segment::Integrated(dense));
                            let p = PhasePoint::from_state(&y);
                            stats.max_p_drift = stats.max_p_drift.max((spec.principal_symbol(&p) - p_start).abs());
                            samples.push(p);
                            h = h_next;
                            if ((t - visit_start) * direction).abs() > budget {
                                return Err(Error::TrappingSuspected {
                                    elapsed: (t - visit_start).abs(),
                                    budget,
                                });
                            }
                            if reached_end || !inside(&y) || forced && !inside(&y) {
                                break;
                            }
                            forced = false;
                        }
                    }
                }
                box_visits.push((visit_start, t));
                if t == t_final {
                    break;
                }
                let p = PhasePoint::from_state(&y);
                mode = Mode::Free { label: cusp_from_bichar(&p), tau: p.tau };
            }
        }
    }

    if direction < 0.0 {
        samples.reverse();
    }
    Ok(Trajectory {
        samples,
        segments,
        stats,
        t_start: p0.t,
        t_end: t_final,
        box_visits,
    })
}

#[derive(Debug, Clone)]
pub struct ScatterResult {
    pub c_in: CuspData,
    pub c_out: CuspData,
    /// `Re ∫ V(z(t), t) dt` along the bicharacteristic.
    pub potential_phase: f64,
    pub potential_phase_imag: f64,
    /// `∫ |ζ|²_g dt − |Z_in|² (t_out − t_in)`.
    pub action_diff: f64,
    /// First entry into and last exit from the bump boxes, if any.
    pub transit: Option<(f64, f64)>,
    pub t_in: f64,
    pub t_out: f64,
    pub trajectory: Trajectory,
}

/// Seed and end times bracketing the perturbation window for the beam `c`.
pub fn scatter_times(spec: &PerturbationSpec, c: &CuspData) -> (f64, f64) {
    let (lo, hi) = spec.time_window().unwrap_or((0.0, 0.0));
    let offset = c.fiber.norm() / (2.0 * c.base.norm().max(0.1));
    (lo - 1.0 - offset, hi + 1.0 + offset)
}

/// `∫ V(z(t), t) dt` along a trajectory, restricted to each term's time window.
pub fn potential_integral(spec: &PerturbationSpec, traj: &Trajectory, t_a: f64, t_b: f64) -> num_complex::Complex64 {
    let (lo, hi) = (t_a.min(t_b), t_a.max(t_b));
    let mut total = num_complex::Complex64::new(0.0, 0.0);
    for term in &spec.potentials {
        let a = (term.time - term.duration).max(lo);
        let b = (term.time + term.duration).min(hi);
        if a >= b {
            continue;
        }
        total += quadrature::integrate(
            |t| {
                let p = traj.eval(t);
                term.value(p.z.as_slice(), t)
            },
            a,
            b,
            1e-13,
        );
    }
    if t_b < t_a {
        -total
    } else {
        total
    }
}

/// Classical scattering map `Cl_g` with phase and action diagnostics.
pub fn classical_scatter(spec: &PerturbationSpec, c_in: &CuspData, tol: f64) -> Result<ScatterResult> {
    if c_in.base.iter().chain(c_in.fiber.iter()).any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("beam parameters must be finite".into()));
    }
    let (t_in, t_out) = scatter_times(spec, c_in);
    let seed = bichar_from_cusp(c_in, t_in);
    if spec.in_support(seed.z.as_slice(), t_in) {
        return Err(Error::BeamSeedInsideSupport);
    }
    let trajectory = integrate_from_label(spec, c_in, t_in, t_out, tol)?;
    let c_out = match trajectory.final_label() {
        Some(label) => label.clone(),
        None => cusp_from_bichar(&trajectory.endpoint()),
    };

    let phase = potential_integral(spec, &trajectory, t_in, t_out);
    let mut action = 0.0;
    for seg in &trajectory.segments {
        match seg {
            Segment::Free { t0, t1, label, .. } => action += label.base.norm_squared() * (t1 - t0),
            Segment::Integrated(step) => {
                action += quadrature::integrate_real(
                    |t| {
                        let p = PhasePoint::from_state(&step.eval(t));
                        spec.metric_norm2(p.z.as_slice(), t, &p.zeta)
                    },
                    step.t0,
                    step.t1(),
                    1e-14,
                );
            }
        }
    }
    let action_diff = action - c_in.base.norm_squared() * (t_out - t_in);
    let transit = match (trajectory.box_visits.first(), trajectory.box_visits.last()) {
        (Some(first), Some(last)) => Some((first.0, last.1)),
        _ => None,
    };
    Ok(ScatterResult {
        c_in: c_in.clone(),
        c_out,
        potential_phase: phase.re,
        potential_phase_imag: phase.im,
        action_diff,
        transit,
        t_in,
        t_out,
        trajectory,
    })
}

/// Central-difference Jacobian of `(Z, 𝔷) ↦ Cl_g(Z, 𝔷)`.
pub fn scatter_jacobian(spec: &PerturbationSpec, c_in: &CuspData, h_fd: f64, tol: f64) -> Result<DMatrix<f64>> {
    if !(h_fd > 0.0) {
        return Err(Error::InvalidInput("finite-difference step must be positive".into()));
    }
    let x0 = c_in.to_vec();
    let m = x0.len();
    let columns: Vec<Vec<f64>> = (0..m)
        .into_par_iter()
        .map(|i| -> Result<Vec<f64>> {
            let mut xp = x0.clone();
            let mut xm = x0.clone();
            xp[i] += h_fd;
            xm[i] -= h_fd;
            let fp = classical_scatter(spec, &CuspData::from_vec(&xp), tol)?.c_out.to_vec();
            let fm = classical_scatter(spec, &CuspData::from_vec(&xm), tol)?.c_out.to_vec();
            Ok(fp.iter().zip(&fm).map(|(a, b)| (a - b) / (2.0 * h_fd)).collect())
        })
        .collect::<Result<_>>()?;
    Ok(DMatrix::from_fn(m, m, |r, c| columns[c][r]))
}

/// Canonical symplectic matrix on `(Z, 𝔷)`.
pub fn symplectic_form(n: usize) -> DMatrix<f64> {
    let mut omega = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        omega[(i, n + i)] = 1.0;
        omega[(n + i, i)] = -1.0;
    }
    omega
}

/// `‖JᵀΩJ − Ω‖_F`.
pub fn symplectic_defect(jac: &DMatrix<f64>) -> f64 {
    let omega = symplectic_form(jac.nrows() / 2);
    (jac.transpose() * &omega * jac - omega).norm()
}

#[derive(Debug, Clone, Serialize)]
pub struct RadialSeries {
    pub times: Vec<f64>,
    pub w_norms: Vec<f64>,
    /// Least-squares slope of `log|w|` against `log(1/|t|)`; `None` when `w ≡ 0`.
    pub slope: Option<f64>,
    pub limit: CuspData,
}

#[derive(Debug, Clone, Serialize)]
pub struct RadialReport {
    pub forward: RadialSeries,
    pub backward: RadialSeries,
}

fn fit_slope(times: &[f64], norms: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = times
        .iter()
        .zip(norms)
        .filter(|(_, w)| **w > 0.0)
        .map(|(t, w)| (-t.abs().ln(), w.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Some(sxy / sxx)
}

/// Samples `w(t) = z/(2t) − ζ` at logarithmically spaced `|t|` up to `horizon`
/// in both directions and fits its decay exponent.
pub fn radial_convergence(spec: &PerturbationSpec, p0: &PhasePoint, horizon: f64, tol: f64) -> Result<RadialReport> {
    let residual = spec.principal_symbol(p0).abs();
    let tolerance = crate::phasespace::CHARACTERISTIC_TOL * (1.0 + p0.zeta.norm_squared());
    if !(residual <= tolerance) {
        return Err(Error::CharacteristicViolation { residual, tolerance });
    }
    let edge = spec.window_edge().max(p0.t.abs());
    let t_min = (4.0 * (edge + 1.0)).max(10.0);
    if !(horizon > 2.0 * t_min) {
        return Err(Error::InvalidInput(format!("horizon must exceed {}", 2.0 * t_min)));
    }
    let series = |direction: f64| -> Result<RadialSeries> {
        let t_far = direction * t_min;
        let traj = integrate(spec, p0, t_far, tol)?;
        let end = traj.endpoint();
        let label = traj.final_label().cloned().unwrap_or_else(|| cusp_from_bichar(&end));
        let count = 40;
        let times: Vec<f64> = (0..count)
            .map(|k| direction * t_min * (horizon / t_min).powf(k as f64 / (count - 1) as f64))
            .collect();
        let mut w_norms = Vec::with_capacity(count);
        let mut last = None;
        for &t in &times {
            let mut p = bichar_from_cusp(&label, t);
            p.tau = end.tau;
            let w = &p.z / (2.0 * t) - &p.zeta;
            w_norms.push(w.norm());
            last = Some(p);
        }
        let p_last = last.expect("at least one sample");
        Ok(RadialSeries {
            slope: fit_slope(&times, &w_norms),
            limit: CuspData::new(p_last.zeta.clone(), galilean_invariant(&p_last)),
            times,
            w_norms,
        })
    };
    Ok(RadialReport {
        forward: series(1.0)?,
        backward: series(-1.0)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phasespace::free_flow;
    use crate::symbols::{MetricBump, PotentialTerm};
    use num_complex::Complex64;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn bump2() -> PerturbationSpec {
        PerturbationSpec::single_bump(2, 0.05, 1.0, 1.0)
    }

    fn on_shell(spec: &PerturbationSpec, z: &[f64], t: f64, zeta: &[f64]) -> PhasePoint {
        let mut p = PhasePoint::from_slices(z, t, zeta, 0.0);
        p.tau = -spec.metric_norm2(z, t, &p.zeta);
        p
    }

    #[test]
    fn rhs_in_flat_region() {
        let spec = bump2();
        let p = PhasePoint::from_slices(&[5.0, 0.0], 0.0, &[1.0, -0.5], -1.25);
        let v = hamilton_rhs(&spec, &p);
        assert_eq!(v.as_slice(), &[2.0, -1.0, 1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn rhs_at_bump_center() {
        let eps = 0.05;
        let spec = PerturbationSpec::single_bump(2, eps, 1.0, 1.0);
        let p = on_shell(&spec, &[0.0, 0.0], 0.0, &[0.7, 0.2]);
        let v = hamilton_rhs(&spec, &p);
        assert!((v[0] - 2.0 * (1.0 + eps) * 0.7).abs() < 1e-15);
        assert!((v[1] - 2.0 * (1.0 + eps) * 0.2).abs() < 1e-15);
    }

    #[test]
    fn rhs_is_symplectic_gradient() {
        let spec = bump2();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let h = 1e-6;
        for _ in 0..50 {
            let z = [rng.gen_range(-0.9..0.9), rng.gen_range(-0.9..0.9)];
            let t = rng.gen_range(-0.9..0.9);
            let p = on_shell(&spec, &z, t, &[rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)]);
            let y = p.to_state();
            let grad: Vec<f64> = (0..y.len())
                .map(|i| {
                    let mut yp = y.clone();
                    let mut ym = y.clone();
                    yp[i] += h;
                    ym[i] -= h;
                    (spec.principal_symbol(&PhasePoint::from_state(&yp))
                        - spec.principal_symbol(&PhasePoint::from_state(&ym)))
                        / (2.0 * h)
                })
                .collect();
            // J∇p with positions (z, t) and momenta (ζ, τ).
            let m = y.len() / 2;
            let v = hamilton_rhs(&spec, &p);
            for i in 0..m {
                assert!((v[i] - grad[m + i]).abs() < 1e-6);
                assert!((v[m + i] + grad[i]).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn flat_trajectory_is_closed_form() {
        let spec = PerturbationSpec::flat(2);
        let p0 = PhasePoint::from_slices(&[0.5, -1.0], -2.0, &[0.3, 1.1], -1.3);
        let traj = integrate(&spec, &p0, 7.0, 1e-10).unwrap();
        assert_eq!(traj.stats.steps, 0);
        for t in [-2.0, 0.0, 3.3, 7.0] {
            let p = traj.eval(t);
            let q = free_flow(&p0, t - p0.t);
            assert!((&p.z - &q.z).amax() < 1e-14);
            assert_eq!(p.zeta, q.zeta);
        }
    }

    #[test]
    fn time_reversal_round_trip() {
        let spec = bump2();
        let p0 = on_shell(&spec, &[-3.0, 0.2], -2.0, &[1.0, 0.0]);
        let tol = 1e-10;
        let fwd = integrate(&spec, &p0, 3.0, tol).unwrap();
        let back = integrate(&spec, &fwd.endpoint(), -2.0, tol).unwrap();
        let p1 = back.endpoint();
        assert!((&p1.z - &p0.z).amax() < 100.0 * tol);
        assert!((&p1.zeta - &p0.zeta).amax() < 100.0 * tol);
    }

    #[test]
    fn p_is_conserved_through_bump() {
        let spec = bump2();
        let p0 = on_shell(&spec, &[-3.0, 0.3], -1.5, &[1.0, 0.1]);
        let traj = integrate(&spec, &p0, 2.0, 1e-11).unwrap();
        assert!(traj.stats.steps > 0);
        assert!(traj.stats.max_p_drift <= 1e-9, "{}", traj.stats.max_p_drift);
        for w in traj.samples.windows(2) {
            assert!(w[1].t > w[0].t);
        }
    }

    #[test]
    fn galilean_invariant_constant_on_free_segments() {
        let spec = bump2();
        let p0 = on_shell(&spec, &[-6.0, 0.3], -3.0, &[1.0, 0.1]);
        let traj = integrate(&spec, &p0, 4.0, 1e-11).unwrap();
        for seg in &traj.segments {
            if let Segment::Free { t0, t1, .. } = seg {
                let g0 = galilean_invariant(&seg.eval(*t0));
                for k in 0..=10 {
                    let t = t0 + (t1 - t0) * k as f64 / 10.0;
                    assert!((galilean_invariant(&seg.eval(t)) - &g0).amax() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn flat_and_missing_beams_scatter_to_themselves_exactly() {
        let c = CuspData::from_slices(&[1.0, 0.0], &[0.0, 0.3]);
        let r = classical_scatter(&PerturbationSpec::flat(2), &c, 1e-10).unwrap();
        assert_eq!(r.c_out, c);
        assert_eq!(r.potential_phase, 0.0);
        assert_eq!(r.action_diff, 0.0);
        assert!(r.transit.is_none());

        let spec = bump2();
        let far = CuspData::from_slices(&[1.0, 0.0], &[0.0, 5.0]);
        let r = classical_scatter(&spec, &far, 1e-10).unwrap();
        assert_eq!(r.c_out, far);
        assert_eq!(r.action_diff, 0.0);
    }

    #[test]
    fn pure_potential_keeps_beam_and_accumulates_phase() {
        let spec = PerturbationSpec::flat(2).with_potential(PotentialTerm::new(
            Complex64::new(0.2, 0.05),
            vec![0.0, 0.0],
            0.0,
            1.5,
            1.0,
        ));
        let c = CuspData::from_slices(&[0.8, 0.0], &[0.0, -0.4]);
        let r = classical_scatter(&spec, &c, 1e-10).unwrap();
        assert_eq!(r.c_out, c);
        // Independent Simpson quadrature along the straight beam z = 2tZ − 𝔷.
        let n = 20000;
        let (a, b) = (-1.0, 1.0);
        let hs = (b - a) / n as f64;
        let mut sum = Complex64::new(0.0, 0.0);
        for k in 0..=n {
            let t = a + k as f64 * hs;
            let w = if k == 0 || k == n { 1.0 } else if k % 2 == 1 { 4.0 } else { 2.0 };
            sum += spec.potential(&[1.6 * t, 0.4], t) * w;
        }
        sum *= hs / 3.0;
        assert!((r.potential_phase - sum.re).abs() < 1e-8);
        assert!((r.potential_phase_imag - sum.im).abs() < 1e-8);
    }

    #[test]
    fn bump_displaces_beam() {
        let spec = bump2();
        let c = CuspData::from_slices(&[1.0, 0.0], &[0.0, 0.3]);
        let r = classical_scatter(&spec, &c, 1e-12).unwrap();
        assert!(r.c_out.distance(&c) > 1e-4);
        assert!(r.transit.is_some());
    }

    #[test]
    fn reversed_spec_inverts_scattering() {
        let mut spec = bump2();
        spec.bumps.push(MetricBump::isotropic(2, 0.03, vec![0.5, 0.2], 0.4, 0.8, 0.7));
        let c = CuspData::from_slices(&[0.9, 0.2], &[0.1, 0.2]);
        let tol = 1e-11;
        let out = classical_scatter(&spec, &c, tol).unwrap().c_out;
        let reversed_in = CuspData::new(-&out.base, out.fiber.clone());
        let back = classical_scatter(&spec.time_reversed(), &reversed_in, tol).unwrap().c_out;
        assert!((&back.base + &c.base).amax() < 100.0 * tol);
        assert!((&back.fiber - &c.fiber).amax() < 100.0 * tol);
    }

    #[test]
    fn stationary_beam_is_supported() {
        let spec = bump2();
        let c = CuspData::from_slices(&[0.0, 0.0], &[0.2, 0.0]);
        let r = classical_scatter(&spec, &c, 1e-11).unwrap();
        assert!(r.c_out.base.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn jacobian_of_flat_and_potential_specs_is_identity() {
        let c = CuspData::from_slices(&[1.0, 0.5], &[0.2, -0.1]);
        for spec in [
            PerturbationSpec::flat(2),
            PerturbationSpec::flat(2).with_potential(PotentialTerm::new(
                Complex64::new(0.3, 0.0),
                vec![0.0, 0.0],
                0.0,
                1.0,
                1.0,
            )),
        ] {
            let j = scatter_jacobian(&spec, &c, 1e-4, 1e-11).unwrap();
            assert!((j - DMatrix::identity(4, 4)).amax() < 1e-8);
        }
    }

    #[test]
    fn jacobian_is_symplectic() {
        let spec = bump2();
        let c = CuspData::from_slices(&[1.0, 0.1], &[0.0, 0.3]);
        let j = scatter_jacobian(&spec, &c, 1e-4, 1e-11).unwrap();
        assert!((&j - DMatrix::identity(4, 4)).amax() > 1e-4);
        assert!(symplectic_defect(&j) < 1e-6, "{}", symplectic_defect(&j));
    }

    #[test]
    fn radial_flat_closed_form() {
        let spec = PerturbationSpec::flat(2);
        let p0 = PhasePoint::from_slices(&[0.4, -0.3], 0.0, &[1.0, 0.5], -1.25);
        let rep = radial_convergence(&spec, &p0, 1e6, 1e-10).unwrap();
        for s in [&rep.forward, &rep.backward] {
            assert!((s.slope.unwrap() - 1.0).abs() < 1e-6);
            for (t, w) in s.times.iter().zip(&s.w_norms) {
                assert!((w - p0.z.norm() / (2.0 * t.abs())).abs() < 1e-12);
            }
            assert_eq!(s.limit.base, p0.zeta);
        }
    }

    #[test]
    fn radial_limits_match_classical_scatter() {
        let spec = bump2();
        let p0 = on_shell(&spec, &[0.1, 0.2], 0.05, &[1.0, 0.2]);
        let tol = 1e-12;
        let rep = radial_convergence(&spec, &p0, 1e5, tol).unwrap();
        let r = classical_scatter(&spec, &rep.backward.limit, tol).unwrap();
        assert!(r.c_out.distance(&rep.forward.limit) < 1e-8);
        assert!((rep.forward.slope.unwrap() - 1.0).abs() < 1e-6);
    }
}
