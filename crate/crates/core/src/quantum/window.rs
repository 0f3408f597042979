//! Propagation across the perturbation time window.
//!
//! Outside `[t_lo, t_hi]` the exact free multiplier is used. Inside, n = 1 uses
//! Crank–Nicolson on `H = −Q ∂(A ∂·) + V` with `A = |g|^{1/2}g^{11}` at half
//! points and `Q = |g|^{−1/2}`; n = 2 uses Strang splitting around the free flow.

use num_complex::Complex64;

use super::tridiag::solve_cyclic;
use super::{AdjointMode, Fourier, SolverParams, WaveField};
use crate::error::{Error, Result};
use crate::symbols::PerturbationSpec;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Operator {
    Forward,
    Adjoint(AdjointMode),
}

/// Propagates `u` from `u.time` to `t_to` with the forward operator.
pub fn propagate_window(spec: &PerturbationSpec, u: WaveField, t_to: f64, params: &SolverParams) -> Result<WaveField> {
    propagate(spec, u, t_to, params, Operator::Forward)
}

fn free_segment(fourier: &Fourier, u: &WaveField, t_to: f64, sign: f64) -> WaveField {
    let dt = t_to - u.time;
    let mut out = super::free_propagate_with(fourier, u, sign * dt);
    out.time = t_to;
    out
}

/// Step nodes from `a` to `b`, aligned to a partition of the window so forward
/// and backward sweeps share the same steps.
fn nodes(a: f64, b: f64, lo: f64, hi: f64, dt: f64) -> Vec<f64> {
    let count = ((hi - lo) / dt).ceil().max(1.0) as usize;
    let delta = (hi - lo) / count as f64;
    let (min, max) = (a.min(b), a.max(b));
    let mut inner: Vec<f64> = (1..count)
        .map(|k| lo + k as f64 * delta)
        .filter(|t| *t > min && *t < max)
        .collect();
    if b < a {
        inner.reverse();
    }
    let mut out = vec![a];
    out.extend(inner);
    out.push(b);
    out
}

pub(crate) fn propagate(
    spec: &PerturbationSpec,
    u: WaveField,
    t_to: f64,
    params: &SolverParams,
    op: Operator,
) -> Result<WaveField> {
    if spec.dim != u.grid.dim {
        return Err(Error::InvalidInput("spec and field dimensions differ".into()));
    }
    if !(params.dt > 0.0) {
        return Err(Error::InvalidInput(format!("dt must be positive, got {}", params.dt)));
    }
    let fourier = Fourier::new(&u.grid);
    let t_from = u.time;
    let Some((lo, hi)) = spec.time_window() else {
        let out = free_segment(&fourier, &u, t_to, params.free_sign);
        out.check_leak(params.leak_threshold)?;
        return Ok(out);
    };
    let clamp = |t: f64| t.clamp(lo, hi);
    let (a, b) = (clamp(t_from), clamp(t_to));
    let mut u = u;
    if a != t_from {
        u = free_segment(&fourier, &u, a, params.free_sign);
        u.check_leak(params.leak_threshold)?;
    }
    if a != b {
        let ts = nodes(a, b, lo, hi, params.dt);
        let mut stepper = Stepper { spec, op, fourier };
        for w in ts.windows(2) {
            u = stepper.step(&u, w[0], w[1])?;
            u.check_leak(params.leak_threshold)?;
        }
        let Stepper { fourier, .. } = stepper;
        if b != t_to {
            u = free_segment(&fourier, &u, t_to, params.free_sign);
            u.check_leak(params.leak_threshold)?;
        }
        return Ok(u);
    }
    if b != t_to || u.time != t_to {
        u = free_segment(&Fourier::new(&u.grid), &u, t_to, params.free_sign);
        u.check_leak(params.leak_threshold)?;
    }
    Ok(u)
}

struct Stepper<'a> {
    spec: &'a PerturbationSpec,
    op: Operator,
    fourier: Fourier,
}

impl Stepper<'_> {
    fn step(&mut self, u: &WaveField, t0: f64, t1: f64) -> Result<WaveField> {
        match u.grid.dim {
            1 => Ok(self.crank_nicolson(u, t0, t1)),
            _ => self.strang(u, t0, t1),
        }
    }

    /// Scalar `g^{11}` with its first two derivatives in z.
    fn metric_1d(&self, z: f64, t: f64) -> (f64, f64, f64) {
        let jet = self.spec.inverse_metric_jet(&[z], t);
        let g = jet.g_inv[(0, 0)];
        let dg = jet.dgdz[0][(0, 0)];
        if dg == 0.0 && g == 1.0 {
            return (1.0, 0.0, 0.0);
        }
        let h = 1e-4;
        let dp = self.spec.inverse_metric_jet(&[z + h], t).dgdz[0][(0, 0)];
        let dm = self.spec.inverse_metric_jet(&[z - h], t).dgdz[0][(0, 0)];
        (g, dg, (dp - dm) / (2.0 * h))
    }

    /// Tridiagonal rows of the spatial operator at time `t`: (sub, diag, sup).
    fn operator_1d(&self, u: &WaveField, t: f64) -> (Vec<Complex64>, Vec<Complex64>, Vec<Complex64>) {
        let grid = &u.grid;
        let n = grid.n_points;
        let dz = grid.dz();
        let inv_dz2 = 1.0 / (dz * dz);
        let compensated = self.spec.measure_compensated;
        let potential: Vec<Complex64> = (0..n).map(|j| self.spec.potential(&[grid.coord(j)], t)).collect();
        let mut sub = vec![Complex64::new(0.0, 0.0); n];
        let mut diag = vec![Complex64::new(0.0, 0.0); n];
        let mut sup = vec![Complex64::new(0.0, 0.0); n];

        if let Operator::Adjoint(AdjointMode::Independent) = self.op {
            // −[AQ w″ + (A′Q + 2AQ′) w′ + (A′Q′ + AQ″) w] + V̄ w
            for j in 0..n {
                let (g, dg, d2g) = self.metric_1d(grid.coord(j), t);
                let (a, da, q, dq, d2q) = if compensated {
                    (g, dg, 1.0, 0.0, 0.0)
                } else {
                    let s = g.sqrt();
                    let ds = dg / (2.0 * s);
                    let d2s = d2g / (2.0 * s) - dg * dg / (4.0 * s * s * s);
                    (s, ds, s, ds, d2s)
                };
                let second = a * q * inv_dz2;
                let first = (da * q + 2.0 * a * dq) / (2.0 * dz);
                let zeroth = da * dq + a * d2q;
                sub[j] = Complex64::new(-(second - first), 0.0);
                sup[j] = Complex64::new(-(second + first), 0.0);
                diag[j] = Complex64::new(2.0 * second - zeroth, 0.0) + potential[j].conj();
            }
            return (sub, diag, sup);
        }

        let coeffs = |z: f64| -> (f64, f64) {
            let g = self.spec.inverse_metric(&[z], t)[(0, 0)];
            if compensated {
                (g, 1.0)
            } else {
                (g.sqrt(), g.sqrt())
            }
        };
        // A at half points j + ½, Q at nodes.
        let half: Vec<f64> = (0..n).map(|j| coeffs(grid.coord(j) + 0.5 * dz).0).collect();
        let q: Vec<f64> = (0..n).map(|j| coeffs(grid.coord(j)).1).collect();
        for j in 0..n {
            let right = half[j];
            let left = half[(j + n - 1) % n];
            match self.op {
                Operator::Forward => {
                    sub[j] = Complex64::new(-q[j] * left * inv_dz2, 0.0);
                    sup[j] = Complex64::new(-q[j] * right * inv_dz2, 0.0);
                    diag[j] = Complex64::new(q[j] * (left + right) * inv_dz2, 0.0) + potential[j];
                }
                Operator::Adjoint(_) => {
                    sub[j] = Complex64::new(-q[(j + n - 1) % n] * left * inv_dz2, 0.0);
                    sup[j] = Complex64::new(-q[(j + 1) % n] * right * inv_dz2, 0.0);
                    diag[j] = Complex64::new(q[j] * (left + right) * inv_dz2, 0.0) + potential[j].conj();
                }
            }
        }
        (sub, diag, sup)
    }

    /// `(1 + iδH/2) u₁ = (1 − iδH/2) u₀` with `H` frozen at the midpoint.
    fn crank_nicolson(&self, u: &WaveField, t0: f64, t1: f64) -> WaveField {
        let n = u.grid.n_points;
        let delta = t1 - t0;
        let (sub, diag, sup) = self.operator_1d(u, 0.5 * (t0 + t1));
        let c = I * (0.5 * delta);
        let v = &u.values;
        let rhs: Vec<Complex64> = (0..n)
            .map(|j| {
                let hu = sub[j] * v[(j + n - 1) % n] + diag[j] * v[j] + sup[j] * v[(j + 1) % n];
                v[j] - c * hu
            })
            .collect();
        let m_sub: Vec<Complex64> = sub.iter().map(|x| c * x).collect();
        let m_sup: Vec<Complex64> = sup.iter().map(|x| c * x).collect();
        let m_diag: Vec<Complex64> = diag.iter().map(|x| 1.0 + c * x).collect();
        WaveField {
            grid: u.grid.clone(),
            values: solve_cyclic(&m_sub, &m_diag, &m_sup, &rhs),
            time: t1,
        }
    }

    fn strang(&mut self, u: &WaveField, t0: f64, t1: f64) -> Result<WaveField> {
        let delta = t1 - t0;
        let mut v = super::free_propagate_with(&self.fourier, u, 0.5 * delta);
        let substeps = 4;
        let sigma = delta / substeps as f64;
        for s in 0..substeps {
            let tm = t0 + (s as f64 + 0.5) * sigma;
            let coeffs = RemainderCoeffs::new(self.spec, &u.grid, tm, self.op);
            v.values = self.trapezoid(&coeffs, &v.values, sigma)?;
        }
        let mut out = super::free_propagate_with(&self.fourier, &v, 0.5 * delta);
        out.time = t1;
        Ok(out)
    }

    /// Trapezoidal step of `u' = −iRu` solved by fixed-point iteration.
    fn trapezoid(&self, coeffs: &RemainderCoeffs, u0: &[Complex64], sigma: f64) -> Result<Vec<Complex64>> {
        let c = I * (0.5 * sigma);
        let r0 = coeffs.apply(&self.fourier, u0);
        let base: Vec<Complex64> = u0.iter().zip(&r0).map(|(u, r)| u - c * r).collect();
        let scale: f64 = u0.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt().max(1e-300);
        let mut u1 = u0.to_vec();
        for _ in 0..100 {
            let r1 = coeffs.apply(&self.fourier, &u1);
            let next: Vec<Complex64> = base.iter().zip(&r1).map(|(b, r)| b - c * r).collect();
            let change: f64 = next.iter().zip(&u1).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
            u1 = next;
            if change <= 1e-13 * scale {
                return Ok(u1);
            }
        }
        Err(Error::ConvergenceFailure(format!(
            "trapezoidal iteration did not converge (substep {sigma})"
        )))
    }
}

/// Pointwise coefficients of `R = Δ_g − Δ₀ + V` in two dimensions:
/// `R u = −w ∂_j D_j − (w − 1) ∂_j∂_j u + V u`, `D_j = (s g^{jk} − δ_{jk}) ∂_k u`,
/// with `s = |g|^{1/2}`, `w = |g|^{−1/2}` (both 1 when measure compensated).
struct RemainderCoeffs {
    grid: super::Grid,
    /// `s g^{jk} − δ_{jk}` as (00, 01, 11).
    m: Vec<[f64; 3]>,
    w: Vec<f64>,
    v: Vec<Complex64>,
    adjoint: bool,
}

impl RemainderCoeffs {
    fn new(spec: &PerturbationSpec, grid: &super::Grid, t: f64, op: Operator) -> Self {
        let len = grid.len();
        let mut m = vec![[0.0; 3]; len];
        let mut w = vec![1.0; len];
        let mut v = vec![Complex64::new(0.0, 0.0); len];
        let adjoint = matches!(op, Operator::Adjoint(_));
        for idx in 0..len {
            let z = grid.point(idx);
            let pot = spec.potential(&z, t);
            v[idx] = if adjoint { pot.conj() } else { pot };
            let g = spec.inverse_metric(&z, t);
            if g[(0, 0)] == 1.0 && g[(1, 1)] == 1.0 && g[(0, 1)] == 0.0 {
                continue;
            }
            let (s, wi) = if spec.measure_compensated {
                (1.0, 1.0)
            } else {
                let det = g[(0, 0)] * g[(1, 1)] - g[(0, 1)] * g[(1, 0)];
                (det.powf(-0.5), det.sqrt())
            };
            m[idx] = [s * g[(0, 0)] - 1.0, s * g[(0, 1)], s * g[(1, 1)] - 1.0];
            w[idx] = wi;
        }
        Self { grid: grid.clone(), m, w, v, adjoint }
    }

    fn gradient(&self, fourier: &Fourier, u: &[Complex64]) -> (Vec<Complex64>, Vec<Complex64>, Vec<Complex64>) {
        let mut hat = u.to_vec();
        fourier.forward(&mut hat);
        let mut d0 = hat.clone();
        let mut d1 = hat.clone();
        let mut lap = hat;
        for idx in 0..self.grid.len() {
            let zeta = self.grid.frequency(idx);
            d0[idx] *= I * zeta[0];
            d1[idx] *= I * zeta[1];
            lap[idx] *= -(zeta[0] * zeta[0] + zeta[1] * zeta[1]);
        }
        fourier.inverse(&mut d0);
        fourier.inverse(&mut d1);
        fourier.inverse(&mut lap);
        (d0, d1, lap)
    }

    fn divergence(&self, fourier: &Fourier, x0: Vec<Complex64>, x1: Vec<Complex64>) -> Vec<Complex64> {
        let mut a = x0;
        let mut b = x1;
        fourier.forward(&mut a);
        fourier.forward(&mut b);
        for idx in 0..self.grid.len() {
            let zeta = self.grid.frequency(idx);
            a[idx] = I * zeta[0] * a[idx] + I * zeta[1] * b[idx];
        }
        fourier.inverse(&mut a);
        a
    }

    fn apply(&self, fourier: &Fourier, u: &[Complex64]) -> Vec<Complex64> {
        if self.adjoint {
            self.apply_adjoint(fourier, u)
        } else {
            self.apply_forward(fourier, u)
        }
    }

    fn apply_forward(&self, fourier: &Fourier, u: &[Complex64]) -> Vec<Complex64> {
        let (d0, d1, lap) = self.gradient(fourier, u);
        let len = self.grid.len();
        let mut x0 = vec![Complex64::new(0.0, 0.0); len];
        let mut x1 = vec![Complex64::new(0.0, 0.0); len];
        for idx in 0..len {
            let [a, b, c] = self.m[idx];
            x0[idx] = a * d0[idx] + b * d1[idx];
            x1[idx] = b * d0[idx] + c * d1[idx];
        }
        let div = self.divergence(fourier, x0, x1);
        (0..len)
            .map(|idx| -self.w[idx] * div[idx] - (self.w[idx] - 1.0) * lap[idx] + self.v[idx] * u[idx])
            .collect()
    }

    /// Flat-measure adjoint: `R* w = −∂_j(M_{jk} ∂_k (W w)) − Δ((W − 1) w) + V̄ w`.
    fn apply_adjoint(&self, fourier: &Fourier, u: &[Complex64]) -> Vec<Complex64> {
        let len = self.grid.len();
        let weighted: Vec<Complex64> = (0..len).map(|i| self.w[i] * u[i]).collect();
        let shifted: Vec<Complex64> = (0..len).map(|i| (self.w[i] - 1.0) * u[i]).collect();
        let (d0, d1, _) = self.gradient(fourier, &weighted);
        let (_, _, lap) = self.gradient(fourier, &shifted);
        let mut x0 = vec![Complex64::new(0.0, 0.0); len];
        let mut x1 = vec![Complex64::new(0.0, 0.0); len];
        for idx in 0..len {
            let [a, b, c] = self.m[idx];
            x0[idx] = a * d0[idx] + b * d1[idx];
            x1[idx] = b * d0[idx] + c * d1[idx];
        }
        let div = self.divergence(fourier, x0, x1);
        (0..len).map(|idx| -div[idx] - lap[idx] + self.v[idx] * u[idx]).collect()
    }
}
