//! The operator model `P = D_t + Δ_{g(t)} + V` with a compactly supported
//! perturbation of the flat metric and a compactly supported potential.
//!
//! Each perturbation term is windowed by the mollifier `χ(r) = exp(1 − 1/(1 − r²))`
//! in `|z − z₀|/R_z` and in `|t − t₀|/R_t`, so its support is exactly the
//! open cylinder `{|z − z₀| < R_z, |t − t₀| < R_t}`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::phasespace::PhasePoint;

/// Smooth compactly supported bump, normalized to 1 at the origin.
pub fn bump(r: f64) -> f64 {
    let r2 = r * r;
    if r2 >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - r2)).exp()
    }
}

pub fn bump_derivative(r: f64) -> f64 {
    r * bump_log_slope(r * r) * bump(r)
}

/// `χ′(r) / (r χ(r))` as a function of `r²`; finite at `r = 0`.
fn bump_log_slope(r2: f64) -> f64 {
    if r2 >= 1.0 {
        0.0
    } else {
        -2.0 / ((1.0 - r2) * (1.0 - r2))
    }
}

/// Metric deviation term `ε χ(|z−z₀|/R_z) χ(|t−t₀|/R_t) s^{jk}` added to `g^{jk}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricBump {
    pub amplitude: f64,
    pub center: Vec<f64>,
    pub time: f64,
    pub radius: f64,
    pub duration: f64,
    /// Symmetric `n × n` pattern, row-major.
    pub pattern: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PotentialTerm {
    pub amplitude: Complex64,
    pub center: Vec<f64>,
    pub time: f64,
    pub radius: f64,
    pub duration: f64,
}

/// An axis-aligned spacetime box.
#[derive(Debug, Clone, PartialEq)]
pub struct SupportBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub t_lo: f64,
    pub t_hi: f64,
}

impl SupportBox {
    pub fn inflate(&self, margin: f64) -> SupportBox {
        SupportBox {
            lo: self.lo.iter().map(|v| v - margin).collect(),
            hi: self.hi.iter().map(|v| v + margin).collect(),
            t_lo: self.t_lo - margin,
            t_hi: self.t_hi + margin,
        }
    }

    pub fn contains(&self, z: &[f64], t: f64) -> bool {
        t >= self.t_lo
            && t <= self.t_hi
            && z.iter()
                .zip(self.lo.iter().zip(&self.hi))
                .all(|(v, (lo, hi))| *v >= *lo && *v <= *hi)
    }

    /// Parameter interval on which the free line `(z + 2ζ s, t + s)` lies in the box.
    pub fn line_interval(&self, z: &[f64], t: f64, zeta: &[f64]) -> Option<(f64, f64)> {
        let mut s_lo = self.t_lo - t;
        let mut s_hi = self.t_hi - t;
        for i in 0..z.len() {
            let v = 2.0 * zeta[i];
            if v == 0.0 {
                if z[i] < self.lo[i] || z[i] > self.hi[i] {
                    return None;
                }
            } else {
                let a = (self.lo[i] - z[i]) / v;
                let b = (self.hi[i] - z[i]) / v;
                s_lo = s_lo.max(a.min(b));
                s_hi = s_hi.min(a.max(b));
            }
        }
        (s_lo <= s_hi).then_some((s_lo, s_hi))
    }

    pub fn union(boxes: &[SupportBox]) -> Option<SupportBox> {
        let first = boxes.first()?;
        let mut out = first.clone();
        for b in &boxes[1..] {
            for i in 0..out.lo.len() {
                out.lo[i] = out.lo[i].min(b.lo[i]);
                out.hi[i] = out.hi[i].max(b.hi[i]);
            }
            out.t_lo = out.t_lo.min(b.t_lo);
            out.t_hi = out.t_hi.max(b.t_hi);
        }
        Some(out)
    }
}

/// Inverse metric with its first derivatives at one spacetime point.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricJet {
    pub g_inv: DMatrix<f64>,
    /// `dgdz[i]` holds `∂_{z_i} g^{jk}`.
    pub dgdz: Vec<DMatrix<f64>>,
    pub dgdt: DMatrix<f64>,
}

/// Value and first derivatives of `p = τ + g^{jk}ζ_jζ_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolJet {
    pub p: f64,
    pub dp_dz: DVector<f64>,
    pub dp_dt: f64,
    pub dp_dzeta: DVector<f64>,
    pub dp_dtau: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbationSpec {
    pub dim: usize,
    #[serde(default)]
    pub bumps: Vec<MetricBump>,
    #[serde(default)]
    pub potentials: Vec<PotentialTerm>,
    /// Use the Lebesgue-symmetric form `−∂_j(g^{jk}∂_k)` in the quantum
    /// discretization instead of the Laplace–Beltrami operator. The two differ
    /// by the first-order term `½(∂_j g^{jk})∂_k`.
    #[serde(default)]
    pub measure_compensated: bool,
}

struct Window {
    value: f64,
    /// `∂_z` of the spatial factor divided by the full window value.
    dz_over: Vec<f64>,
    dt_over: f64,
}

fn window(center: &[f64], time: f64, radius: f64, duration: f64, z: &[f64], t: f64) -> Option<Window> {
    let dt = t - time;
    let rt2 = (dt / duration).powi(2);
    if rt2 >= 1.0 {
        return None;
    }
    let rz2 = z
        .iter()
        .zip(center)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        / (radius * radius);
    if rz2 >= 1.0 {
        return None;
    }
    let value = (2.0 - 1.0 / (1.0 - rz2) - 1.0 / (1.0 - rt2)).exp();
    let sz = bump_log_slope(rz2) / (radius * radius);
    let dz_over = z.iter().zip(center).map(|(a, b)| sz * (a - b)).collect();
    let dt_over = bump_log_slope(rt2) * dt / (duration * duration);
    Some(Window {
        value,
        dz_over,
        dt_over,
    })
}

impl MetricBump {
    pub fn support_box(&self) -> SupportBox {
        SupportBox {
            lo: self.center.iter().map(|c| c - self.radius).collect(),
            hi: self.center.iter().map(|c| c + self.radius).collect(),
            t_lo: self.time - self.duration,
            t_hi: self.time + self.duration,
        }
    }

    fn window(&self, z: &[f64], t: f64) -> Option<Window> {
        window(&self.center, self.time, self.radius, self.duration, z, t)
    }
}

impl PotentialTerm {
    pub fn support_box(&self) -> SupportBox {
        SupportBox {
            lo: self.center.iter().map(|c| c - self.radius).collect(),
            hi: self.center.iter().map(|c| c + self.radius).collect(),
            t_lo: self.time - self.duration,
            t_hi: self.time + self.duration,
        }
    }

    pub fn value(&self, z: &[f64], t: f64) -> Complex64 {
        match window(&self.center, self.time, self.radius, self.duration, z, t) {
            Some(w) => self.amplitude * w.value,
            None => Complex64::new(0.0, 0.0),
        }
    }
}

impl PerturbationSpec {
    pub fn flat(dim: usize) -> Self {
        Self {
            dim,
            bumps: Vec::new(),
            potentials: Vec::new(),
            measure_compensated: false,
        }
    }

    /// Validated spec from its parts.
    pub fn new(dim: usize, bumps: Vec<MetricBump>, potentials: Vec<PotentialTerm>) -> Result<Self> {
        let spec = Self {
            dim,
            bumps,
            potentials,
            measure_compensated: false,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// A single isotropic bump `ε χ χ δ^{jk}` centred at the spacetime origin.
    pub fn single_bump(dim: usize, amplitude: f64, radius: f64, duration: f64) -> Self {
        Self::new(
            dim,
            vec![MetricBump::isotropic(dim, amplitude, vec![0.0; dim], 0.0, radius, duration)],
            Vec::new(),
        )
        .expect("small isotropic bump is positive definite")
    }

    pub fn with_potential(mut self, term: PotentialTerm) -> Self {
        self.potentials.push(term);
        self
    }

    pub fn is_flat(&self) -> bool {
        self.bumps.is_empty() && self.potentials.is_empty()
    }

    pub fn has_metric(&self) -> bool {
        !self.bumps.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.dim;
        if n == 0 {
            return Err(Error::Validation("dimension must be at least 1".into()));
        }
        let check_term = |what: &str, center: &[f64], time: f64, radius: f64, duration: f64| {
            if center.len() != n {
                return Err(Error::Validation(format!(
                    "{what} center has {} components, expected {n}",
                    center.len()
                )));
            }
            if !(radius > 0.0 && radius.is_finite() && duration > 0.0 && duration.is_finite()) {
                return Err(Error::Validation(format!("{what} radii must be positive and finite")));
            }
            if !time.is_finite() || center.iter().any(|c| !c.is_finite()) {
                return Err(Error::Validation(format!("{what} center must be finite")));
            }
            Ok(())
        };
        for b in &self.bumps {
            check_term("bump", &b.center, b.time, b.radius, b.duration)?;
            if !b.amplitude.is_finite() {
                return Err(Error::Validation("bump amplitude must be finite".into()));
            }
            if b.pattern.len() != n || b.pattern.iter().any(|row| row.len() != n) {
                return Err(Error::Validation(format!("bump pattern must be {n}×{n}")));
            }
            for j in 0..n {
                for k in 0..n {
                    if !b.pattern[j][k].is_finite() || b.pattern[j][k] != b.pattern[k][j] {
                        return Err(Error::Validation("bump pattern must be finite and symmetric".into()));
                    }
                }
            }
        }
        for v in &self.potentials {
            check_term("potential", &v.center, v.time, v.radius, v.duration)?;
            if !(v.amplitude.re.is_finite() && v.amplitude.im.is_finite()) {
                return Err(Error::Validation("potential amplitude must be finite".into()));
            }
        }
        self.check_positive_definite()
    }

    /// Checks `g^{jk} > 0` on a lattice over the metric support box and at every bump centre.
    fn check_positive_definite(&self) -> Result<()> {
        let Some(bx) = SupportBox::union(&self.metric_boxes()) else {
            return Ok(());
        };
        let n = self.dim;
        let per_axis: usize = if n <= 3 { 64 } else { 16 };
        let nt = 32;
        let check = |z: &[f64], t: f64| -> Result<()> {
            let g = self.inverse_metric(z, t);
            if n == 1 {
                if g[(0, 0)] > 0.0 {
                    return Ok(());
                }
            } else if g.clone().cholesky().is_some() {
                return Ok(());
            }
            Err(Error::NotPositiveDefinite { z: z.to_vec(), t })
        };
        for b in &self.bumps {
            check(&b.center, b.time)?;
        }
        let total = per_axis.pow(n as u32);
        let mut z = vec![0.0; n];
        for it in 0..nt {
            let t = bx.t_lo + (bx.t_hi - bx.t_lo) * (it as f64 + 0.5) / nt as f64;
            for idx in 0..total {
                let mut rem = idx;
                for i in 0..n {
                    let k = rem % per_axis;
                    rem /= per_axis;
                    z[i] = bx.lo[i] + (bx.hi[i] - bx.lo[i]) * (k as f64 + 0.5) / per_axis as f64;
                }
                check(&z, t)?;
            }
        }
        Ok(())
    }

    pub fn metric_boxes(&self) -> Vec<SupportBox> {
        self.bumps.iter().map(MetricBump::support_box).collect()
    }

    pub fn potential_boxes(&self) -> Vec<SupportBox> {
        self.potentials.iter().map(PotentialTerm::support_box).collect()
    }

    /// Bounding box of every perturbation term.
    pub fn support_box(&self) -> Option<SupportBox> {
        let mut all = self.metric_boxes();
        all.extend(self.potential_boxes());
        SupportBox::union(&all)
    }

    /// Time interval outside which `P = P₀` exactly.
    pub fn time_window(&self) -> Option<(f64, f64)> {
        self.support_box().map(|b| (b.t_lo, b.t_hi))
    }

    /// Largest `|t|` inside the time window (0 for a flat spec).
    pub fn window_edge(&self) -> f64 {
        self.time_window()
            .map(|(lo, hi)| lo.abs().max(hi.abs()))
            .unwrap_or(0.0)
    }

    /// Whether `(z, t)` lies in the open support of some term.
    pub fn in_support(&self, z: &[f64], t: f64) -> bool {
        self.bumps.iter().any(|b| b.window(z, t).is_some())
            || self
                .potentials
                .iter()
                .any(|v| window(&v.center, v.time, v.radius, v.duration, z, t).is_some())
    }

    /// The perturbation with every term reflected `t ↦ −t`.
    pub fn time_reversed(&self) -> Self {
        let mut out = self.clone();
        for b in &mut out.bumps {
            b.time = -b.time;
        }
        for v in &mut out.potentials {
            v.time = -v.time;
            v.amplitude = v.amplitude.conj();
        }
        out
    }

    pub fn inverse_metric(&self, z: &[f64], t: f64) -> DMatrix<f64> {
        let n = self.dim;
        let mut g = DMatrix::identity(n, n);
        for b in &self.bumps {
            if let Some(w) = b.window(z, t) {
                let c = b.amplitude * w.value;
                for j in 0..n {
                    for k in 0..n {
                        g[(j, k)] += c * b.pattern[j][k];
                    }
                }
            }
        }
        g
    }

    pub fn inverse_metric_jet(&self, z: &[f64], t: f64) -> MetricJet {
        let n = self.dim;
        let mut g_inv = DMatrix::identity(n, n);
        let mut dgdz = vec![DMatrix::zeros(n, n); n];
        let mut dgdt = DMatrix::zeros(n, n);
        for b in &self.bumps {
            let Some(w) = b.window(z, t) else { continue };
            let c = b.amplitude * w.value;
            for j in 0..n {
                for k in 0..n {
                    let s = c * b.pattern[j][k];
                    g_inv[(j, k)] += s;
                    dgdt[(j, k)] += s * w.dt_over;
                    for i in 0..n {
                        dgdz[i][(j, k)] += s * w.dz_over[i];
                    }
                }
            }
        }
        MetricJet { g_inv, dgdz, dgdt }
    }

    /// `|ζ|²_g = g^{jk}(z, t) ζ_j ζ_k`.
    pub fn metric_norm2(&self, z: &[f64], t: f64, zeta: &DVector<f64>) -> f64 {
        if self.bumps.is_empty() {
            return zeta.norm_squared();
        }
        let g = self.inverse_metric(z, t);
        zeta.dot(&(g * zeta))
    }

    pub fn principal_symbol(&self, p: &PhasePoint) -> f64 {
        if !self.bumps.iter().any(|b| b.window(p.z.as_slice(), p.t).is_some()) {
            return p.tau + p.zeta.norm_squared();
        }
        p.tau + self.metric_norm2(p.z.as_slice(), p.t, &p.zeta)
    }

    pub fn symbol_jet(&self, p: &PhasePoint) -> SymbolJet {
        let jet = self.inverse_metric_jet(p.z.as_slice(), p.t);
        let g_zeta = &jet.g_inv * &p.zeta;
        SymbolJet {
            p: p.tau + p.zeta.dot(&g_zeta),
            dp_dz: DVector::from_iterator(p.dim(), jet.dgdz.iter().map(|d| p.zeta.dot(&(d * &p.zeta)))),
            dp_dt: p.zeta.dot(&(&jet.dgdt * &p.zeta)),
            dp_dzeta: g_zeta * 2.0,
            dp_dtau: 1.0,
        }
    }

    pub fn potential(&self, z: &[f64], t: f64) -> Complex64 {
        self.potentials.iter().map(|v| v.value(z, t)).sum()
    }
}

impl MetricBump {
    pub fn isotropic(dim: usize, amplitude: f64, center: Vec<f64>, time: f64, radius: f64, duration: f64) -> Self {
        let pattern = (0..dim)
            .map(|j| (0..dim).map(|k| if j == k { 1.0 } else { 0.0 }).collect())
            .collect();
        Self {
            amplitude,
            center,
            time,
            radius,
            duration,
            pattern,
        }
    }
}

impl PotentialTerm {
    pub fn new(amplitude: Complex64, center: Vec<f64>, time: f64, radius: f64, duration: f64) -> Self {
        Self {
            amplitude,
            center,
            time,
            radius,
            duration,
        }
    }
}
