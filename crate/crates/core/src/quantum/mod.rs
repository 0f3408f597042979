//! Grid solutions of `D_t u + Δ_g u + V u = 0` and the quantum scattering map.
//!
//! Fourier convention: `FT(u)(Z) = ∫ e^{−iz·Z} u dz`, inverse with `(2π)^{−n}`.
//! Asymptotic data are `f(Z) = e^{it|Z|²}·FT(u)(Z)` at any free time `t`.

mod fourier;
pub mod io;
pub mod tridiag;
mod window;

use std::f64::consts::PI;

use nalgebra::DVector;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::symbols::PerturbationSpec;

pub use fourier::{plans_built, Fourier};
pub use window::propagate_window;

/// Fraction of the box (per axis, at each end) counted as the boundary shell.
pub const SHELL_FRACTION: f64 = 0.05;
pub const LEAK_THRESHOLD: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub dim: usize,
    pub n_points: usize,
    pub half_width: f64,
}

impl Grid {
    pub fn new(dim: usize, n_points: usize, half_width: f64) -> Result<Self> {
        if !(1..=2).contains(&dim) {
            return Err(Error::InvalidInput(format!("quantum grids support n = 1 or 2, got {dim}")));
        }
        if n_points < 8 || !n_points.is_power_of_two() {
            return Err(Error::InvalidInput(format!("N must be a power of two ≥ 8, got {n_points}")));
        }
        if !(half_width > 0.0 && half_width.is_finite()) {
            return Err(Error::InvalidInput(format!("L must be positive, got {half_width}")));
        }
        Ok(Self { dim, n_points, half_width })
    }

    pub fn len(&self) -> usize {
        self.n_points.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dz(&self) -> f64 {
        2.0 * self.half_width / self.n_points as f64
    }

    pub fn dzeta(&self) -> f64 {
        PI / self.half_width
    }

    pub fn coord(&self, j: usize) -> f64 {
        -self.half_width + j as f64 * self.dz()
    }

    pub fn freq(&self, k: usize) -> f64 {
        PI * (k as f64 - (self.n_points / 2) as f64) / self.half_width
    }

    /// Per-axis indices of a flat (row-major) index.
    pub fn multi_index(&self, idx: usize) -> [usize; 2] {
        match self.dim {
            1 => [idx, 0],
            _ => [idx / self.n_points, idx % self.n_points],
        }
    }

    pub fn point(&self, idx: usize) -> Vec<f64> {
        let m = self.multi_index(idx);
        (0..self.dim).map(|a| self.coord(m[a])).collect()
    }

    pub fn frequency(&self, idx: usize) -> Vec<f64> {
        let m = self.multi_index(idx);
        (0..self.dim).map(|a| self.freq(m[a])).collect()
    }

    pub fn freq_norm2(&self, idx: usize) -> f64 {
        self.frequency(idx).iter().map(|v| v * v).sum()
    }

    /// Largest representable `|Z_k|` along one axis.
    pub fn max_frequency(&self) -> f64 {
        PI * (self.n_points / 2) as f64 / self.half_width
    }

    fn cell(&self) -> f64 {
        self.dz().powi(self.dim as i32)
    }

    fn dual_cell(&self) -> f64 {
        self.dzeta().powi(self.dim as i32)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WaveField {
    pub grid: Grid,
    pub values: Vec<Complex64>,
    pub time: f64,
}

impl WaveField {
    pub fn new(grid: Grid, values: Vec<Complex64>, time: f64) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidInput(format!("expected {} samples, got {}", grid.len(), values.len())));
        }
        if values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::InvalidInput("field has non-finite samples".into()));
        }
        Ok(Self { grid, values, time })
    }

    /// `‖u‖₂² = dzⁿ Σ|u|²`.
    pub fn mass(&self) -> f64 {
        self.grid.cell() * self.values.iter().map(|v| v.norm_sqr()).sum::<f64>()
    }

    pub fn norm(&self) -> f64 {
        self.mass().sqrt()
    }

    /// Mass fraction in the outer shell of the box.
    pub fn leak_fraction(&self) -> f64 {
        let edge = (1.0 - SHELL_FRACTION) * self.grid.half_width;
        let mut shell = 0.0;
        let mut total = 0.0;
        for (idx, v) in self.values.iter().enumerate() {
            let m = v.norm_sqr();
            total += m;
            if self.grid.point(idx).iter().any(|z| z.abs() >= edge) {
                shell += m;
            }
        }
        if total > 0.0 {
            shell / total
        } else {
            0.0
        }
    }

    pub fn check_leak(&self, threshold: f64) -> Result<()> {
        let fraction = self.leak_fraction();
        if fraction > threshold {
            return Err(Error::BoundaryLeak { fraction, threshold, t: self.time });
        }
        Ok(())
    }

    /// Mass-weighted mean position.
    pub fn center(&self) -> Vec<f64> {
        let mut c = vec![0.0; self.grid.dim];
        let mut total = 0.0;
        for (idx, v) in self.values.iter().enumerate() {
            let m = v.norm_sqr();
            total += m;
            for (a, z) in self.grid.point(idx).iter().enumerate() {
                c[a] += m * z;
            }
        }
        c.iter().map(|x| x / total).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralData {
    pub grid: Grid,
    pub values: Vec<Complex64>,
}

impl SpectralData {
    pub fn new(grid: Grid, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidInput(format!("expected {} samples, got {}", grid.len(), values.len())));
        }
        if values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::InvalidInput("spectral data has non-finite samples".into()));
        }
        Ok(Self { grid, values })
    }

    /// Samples `f(Z_k)` of a closure on the dual grid.
    pub fn from_fn(grid: &Grid, f: impl Fn(&[f64]) -> Complex64) -> Self {
        let values = (0..grid.len()).map(|k| f(&grid.frequency(k))).collect();
        Self { grid: grid.clone(), values }
    }

    /// `⟨f, g⟩ = ∫ f ḡ dZ`.
    pub fn inner(&self, other: &SpectralData) -> Complex64 {
        let s: Complex64 = self.values.iter().zip(&other.values).map(|(a, b)| a * b.conj()).sum();
        s * self.grid.dual_cell()
    }

    pub fn norm(&self) -> f64 {
        (self.grid.dual_cell() * self.values.iter().map(|v| v.norm_sqr()).sum::<f64>()).sqrt()
    }

    pub fn distance(&self, other: &SpectralData) -> f64 {
        (self.grid.dual_cell() * self.values.iter().zip(&other.values).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>())
            .sqrt()
    }

    /// Mass fraction carried by frequencies beyond `fraction` of the Nyquist limit on some axis.
    pub fn outer_band_fraction(&self, fraction: f64) -> f64 {
        let cut = (1.0 - fraction) * self.grid.max_frequency();
        let mut outer = 0.0;
        let mut total = 0.0;
        for (k, v) in self.values.iter().enumerate() {
            let m = v.norm_sqr();
            total += m;
            if self.grid.frequency(k).iter().any(|z| z.abs() > cut) {
                outer += m;
            }
        }
        if total > 0.0 {
            outer / total
        } else {
            0.0
        }
    }
}

fn multiply_free(grid: &Grid, values: &mut [Complex64], dt: f64) {
    for (k, v) in values.iter_mut().enumerate() {
        *v *= Complex64::from_polar(1.0, -dt * grid.freq_norm2(k));
    }
}

/// Exact free evolution by `dt`: `û ↦ e^{−i·dt·|Z|²}·û`.
pub fn free_propagate(u: &WaveField, dt: f64) -> WaveField {
    free_propagate_with(&Fourier::new(&u.grid), u, dt)
}

pub(crate) fn free_propagate_with(fourier: &Fourier, u: &WaveField, dt: f64) -> WaveField {
    if dt == 0.0 {
        return u.clone();
    }
    let mut values = u.values.clone();
    fourier.forward(&mut values);
    multiply_free(&u.grid, &mut values, dt);
    fourier.inverse(&mut values);
    WaveField { grid: u.grid.clone(), values, time: u.time + dt }
}

/// Free solution with asymptotic data `f`, evaluated at time `t`.
pub fn poisson_free(f: &SpectralData, t: f64) -> WaveField {
    let mut values = f.values.clone();
    multiply_free(&f.grid, &mut values, t);
    Fourier::new(&f.grid).inverse(&mut values);
    WaveField { grid: f.grid.clone(), values, time: t }
}

/// `e^{it|Z|²}·FT(u)` without checking that `u.time` is a free time.
pub fn extract_free(u: &WaveField) -> SpectralData {
    let mut values = u.values.clone();
    Fourier::new(&u.grid).forward(&mut values);
    multiply_free(&u.grid, &mut values, -u.time);
    SpectralData { grid: u.grid.clone(), values }
}

/// Asymptotic data of a solution sampled at a time where `P = P₀`.
pub fn extract_asymptotic(spec: &PerturbationSpec, u: &WaveField) -> Result<SpectralData> {
    if let Some((lo, hi)) = spec.time_window() {
        if u.time > lo && u.time < hi {
            return Err(Error::InsideWindow { t: u.time, lo, hi });
        }
    }
    Ok(extract_free(u))
}

/// Band-limited interpolant of `f` at arbitrary frequencies, one axis at a time:
/// `f(Z) = dzⁿ Σ_j e^{−iz_j·Z} u₀_j` with `u₀ = poisson_free(f, 0)`.
fn interpolate_separable(f: &SpectralData, targets: &[f64]) -> Vec<Complex64> {
    let grid = &f.grid;
    let n = grid.n_points;
    let m = targets.len();
    let u0 = poisson_free(f, 0.0).values;
    let dz = grid.dz();
    let kernel: Vec<Complex64> = targets
        .iter()
        .flat_map(|&zeta| (0..n).map(move |j| Complex64::from_polar(dz, -grid.coord(j) * zeta)))
        .collect();
    match grid.dim {
        1 => (0..m)
            .map(|a| kernel[a * n..(a + 1) * n].iter().zip(&u0).map(|(k, u)| k * u).sum())
            .collect(),
        _ => {
            // Contract the second axis, then the first.
            let mut partial = vec![Complex64::new(0.0, 0.0); n * m];
            for i in 0..n {
                for b in 0..m {
                    partial[i * m + b] = kernel[b * n..(b + 1) * n]
                        .iter()
                        .zip(&u0[i * n..(i + 1) * n])
                        .map(|(k, u)| k * u)
                        .sum();
                }
            }
            let mut out = vec![Complex64::new(0.0, 0.0); m * m];
            for a in 0..m {
                for b in 0..m {
                    out[a * m + b] = (0..n).map(|i| kernel[a * n + i] * partial[i * m + b]).sum();
                }
            }
            out
        }
    }
}

/// Stationary-phase profile `|4πt|^{−n/2} e^{−iσπn/4} e^{i|z|²/4t} f(z/2t)` on the grid,
/// with `σ = branch·sign(t)`.
pub fn asymptotic_profile(f: &SpectralData, t: f64, branch: f64) -> Result<WaveField> {
    if t == 0.0 {
        return Err(Error::InvalidInput("profile undefined at t = 0".into()));
    }
    let grid = &f.grid;
    let n = grid.dim as f64;
    let targets: Vec<f64> = (0..grid.n_points).map(|j| grid.coord(j) / (2.0 * t)).collect();
    let samples = interpolate_separable(f, &targets);
    let amplitude = (4.0 * PI * t.abs()).powf(-n / 2.0);
    let sigma = branch * t.signum();
    let values = (0..grid.len())
        .map(|idx| {
            let z2: f64 = grid.point(idx).iter().map(|z| z * z).sum();
            samples[idx] * Complex64::from_polar(amplitude, -sigma * PI * n / 4.0 + z2 / (4.0 * t))
        })
        .collect();
    WaveField::new(grid.clone(), values, t)
}

/// `‖u − v‖/‖u‖` between `poisson_free(f, t)` and its stationary-phase profile.
pub fn asymptotic_profile_error(f: &SpectralData, t: f64) -> Result<f64> {
    let u = poisson_free(f, t);
    let v = asymptotic_profile(f, t, 1.0)?;
    let diff: f64 = u.values.iter().zip(&v.values).map(|(a, b)| (a - b).norm_sqr()).sum();
    let total: f64 = u.values.iter().map(|a| a.norm_sqr()).sum();
    if total == 0.0 {
        return Err(Error::ZeroMass);
    }
    Ok((diff / total).sqrt())
}

/// Normalized coherent state `(πh)^{−n/4} e^{−|Z−Z₀|²/2h} e^{i𝔷₀·(Z−Z₀)}`.
pub fn coherent_data(grid: &Grid, base: &[f64], fiber: &[f64], h: f64) -> Result<SpectralData> {
    if !(h > 0.0) {
        return Err(Error::InvalidInput(format!("h must be positive, got {h}")));
    }
    if base.len() != grid.dim || fiber.len() != grid.dim {
        return Err(Error::InvalidInput("packet dimension does not match the grid".into()));
    }
    let norm = (PI * h).powf(-(grid.dim as f64) / 4.0);
    let f = SpectralData::from_fn(grid, |zeta| {
        let mut r2 = 0.0;
        let mut phase = 0.0;
        for a in 0..zeta.len() {
            let d = zeta[a] - base[a];
            r2 += d * d;
            phase += fiber[a] * d;
        }
        Complex64::from_polar(norm * (-r2 / (2.0 * h)).exp(), phase)
    });
    let outside = 1.0 - f.norm().powi(2);
    if outside > 1e-8 {
        return Err(Error::PacketClipped { outside });
    }
    Ok(f)
}

/// Phase-space center `(Z̄, 𝔷̄)` of spectral data.
pub fn packet_moments(f: &SpectralData) -> Result<(DVector<f64>, DVector<f64>)> {
    let grid = &f.grid;
    let total: f64 = f.values.iter().map(|v| v.norm_sqr()).sum();
    if !(total > 0.0) {
        return Err(Error::ZeroMass);
    }
    let mut zbar = DVector::zeros(grid.dim);
    for (k, v) in f.values.iter().enumerate() {
        for (a, zeta) in grid.frequency(k).iter().enumerate() {
            zbar[a] += zeta * v.norm_sqr();
        }
    }
    zbar /= total;
    // Re ∫ f̄ (−i∇_Z f) = −⟨z⟩ of the time-zero field.
    let u0 = poisson_free(f, 0.0);
    let center = u0.center();
    let frakbar = DVector::from_iterator(grid.dim, center.iter().map(|c| -c));
    Ok((zbar, frakbar))
}

/// How the adjoint propagator discretizes `P*`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdjointMode {
    /// Conjugate transpose of the discretized forward operator.
    #[default]
    Exact,
    /// Centered differences of the continuum adjoint in non-divergence form.
    Independent,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverParams {
    pub dt: f64,
    /// Free time added on both sides of the perturbation window.
    pub margin: f64,
    pub leak_threshold: f64,
    pub adjoint: AdjointMode,
    /// Sign of the free multiplier; `-1.0` is only for negative controls.
    pub free_sign: f64,
}

impl Default for SolverParams {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            margin: 1.0,
            leak_threshold: LEAK_THRESHOLD,
            adjoint: AdjointMode::Exact,
            free_sign: 1.0,
        }
    }
}

impl SolverParams {
    pub fn with_dt(dt: f64) -> Self {
        Self { dt, ..Self::default() }
    }
}

/// Times at which incoming and outgoing data are read off.
pub fn scattering_times(spec: &PerturbationSpec, margin: f64) -> (f64, f64) {
    let (lo, hi) = spec.time_window().unwrap_or((0.0, 0.0));
    (lo - margin, hi + margin)
}

fn check_band_limited(f: &SpectralData) -> Result<()> {
    let outer = f.outer_band_fraction(0.25);
    if outer > 1e-10 {
        return Err(Error::InvalidInput(format!(
            "data carries {outer:e} of its mass in the outer quarter of the dual grid"
        )));
    }
    Ok(())
}

fn check_dims(spec: &PerturbationSpec, grid: &Grid) -> Result<()> {
    if spec.dim != grid.dim {
        return Err(Error::InvalidInput(format!(
            "spec dimension {} does not match grid dimension {}",
            spec.dim, grid.dim
        )));
    }
    Ok(())
}

/// `S f₋ = f₊` through the final-state problem.
pub fn scattering_map(spec: &PerturbationSpec, f_minus: &SpectralData, params: &SolverParams) -> Result<SpectralData> {
    check_dims(spec, &f_minus.grid)?;
    check_band_limited(f_minus)?;
    let (t_minus, t_plus) = scattering_times(spec, params.margin);
    let u = poisson_free(f_minus, t_minus);
    u.check_leak(params.leak_threshold)?;
    let u = window::propagate(spec, u, t_plus, params, window::Operator::Forward)?;
    extract_asymptotic(spec, &u)
}

/// Backward propagation of `P* w = 0` from outgoing data `g₊`.
pub fn adjoint_scattering_map(spec: &PerturbationSpec, g_plus: &SpectralData, params: &SolverParams) -> Result<SpectralData> {
    check_dims(spec, &g_plus.grid)?;
    check_band_limited(g_plus)?;
    let (t_minus, t_plus) = scattering_times(spec, params.margin);
    let w = poisson_free(g_plus, t_plus);
    w.check_leak(params.leak_threshold)?;
    let w = window::propagate(spec, w, t_minus, params, window::Operator::Adjoint(params.adjoint))?;
    extract_asymptotic(spec, &w)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gaussian_field(grid: &Grid) -> WaveField {
        let values = (0..grid.len())
            .map(|j| Complex64::new((-0.5 * grid.coord(j).powi(2)).exp(), 0.0))
            .collect();
        WaveField::new(grid.clone(), values, 0.0).unwrap()
    }

    #[test]
    fn grid_validation() {
        assert!(Grid::new(3, 64, 1.0).is_err());
        assert!(Grid::new(1, 100, 1.0).is_err());
        assert!(Grid::new(1, 64, 0.0).is_err());
        let g = Grid::new(1, 64, 8.0).unwrap();
        assert_eq!(g.freq(32), 0.0);
        assert_eq!(g.freq(0), -g.max_frequency());
    }

    #[test]
    fn free_gaussian_matches_closed_form() {
        let grid = Grid::new(1, 1024, 40.0).unwrap();
        let u = free_propagate(&gaussian_field(&grid), 1.0);
        let s = Complex64::new(1.0, 2.0);
        for j in 0..1024 {
            let z = grid.coord(j);
            let exact = s.powf(-0.5) * (-(z * z) / (2.0 * s)).exp();
            assert!((u.values[j] - exact).norm() < 1e-10, "z = {z}");
        }
    }

    #[test]
    fn free_propagation_is_unitary_group() {
        let grid = Grid::new(1, 512, 30.0).unwrap();
        let u = gaussian_field(&grid);
        let a = free_propagate(&free_propagate(&u, 0.7), 1.6);
        let b = free_propagate(&u, 2.3);
        for (x, y) in a.values.iter().zip(&b.values) {
            assert!((x - y).norm() < 1e-13);
        }
        assert!((a.mass() - u.mass()).abs() < 1e-13);
        assert_eq!(free_propagate(&u, 0.0), u);
    }

    #[test]
    fn plancherel() {
        let grid = Grid::new(2, 64, 10.0).unwrap();
        let f = coherent_data(&grid, &[0.5, -0.2], &[1.0, 0.3], 0.5).unwrap();
        let u = poisson_free(&f, 0.4);
        assert!((f.norm().powi(2) - (2.0 * PI).powi(2) * u.mass()).abs() < 1e-12);
    }

    #[test]
    fn extract_inverts_poisson() {
        let grid = Grid::new(1, 256, 20.0).unwrap();
        let f = coherent_data(&grid, &[0.3], &[-1.0], 0.4).unwrap();
        for t in [-3.0, 0.0, 2.5] {
            let g = extract_free(&poisson_free(&f, t));
            assert!(g.distance(&f) < 1e-13);
        }
        let u = free_propagate(&poisson_free(&f, -1.0), 2.0);
        let v = poisson_free(&f, 1.0);
        for (a, b) in u.values.iter().zip(&v.values) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn extract_rejects_times_inside_window() {
        let spec = PerturbationSpec::single_bump(1, 0.05, 1.0, 1.0);
        let grid = Grid::new(1, 64, 10.0).unwrap();
        let f = coherent_data(&grid, &[0.0], &[0.0], 1.0).unwrap();
        assert!(matches!(
            extract_asymptotic(&spec, &poisson_free(&f, 0.5)),
            Err(Error::InsideWindow { .. })
        ));
        assert!(extract_asymptotic(&spec, &poisson_free(&f, 1.0)).is_ok());
    }

    #[test]
    fn coherent_state_normalization_and_moments() {
        let grid = Grid::new(1, 1024, 60.0).unwrap();
        let f = coherent_data(&grid, &[0.0], &[0.0], 0.2).unwrap();
        assert!((f.norm() - 1.0).abs() < 1e-10);
        assert!(f.values.iter().all(|v| v.im == 0.0));
        let (zb, fb) = packet_moments(&f).unwrap();
        assert!(zb[0].abs() < 1e-12 && fb[0].abs() < 1e-12);

        let f = coherent_data(&grid, &[0.7], &[-4.0], 0.1).unwrap();
        let (zb, fb) = packet_moments(&f).unwrap();
        assert!((zb[0] - 0.7).abs() < grid.dzeta());
        assert!((fb[0] + 4.0).abs() < grid.dz());
        let rotated = SpectralData::new(
            grid.clone(),
            f.values.iter().map(|v| v * Complex64::from_polar(1.0, 0.9)).collect(),
        )
        .unwrap();
        let (zr, fr) = packet_moments(&rotated).unwrap();
        assert!((zr - zb).amax() < 1e-12 && (fr - fb).amax() < 1e-12);
    }

    #[test]
    fn coherent_state_clipping_and_zero_mass() {
        let grid = Grid::new(1, 64, 10.0).unwrap();
        assert!(matches!(
            coherent_data(&grid, &[9.0], &[0.0], 1.0),
            Err(Error::PacketClipped { .. })
        ));
        let zero = SpectralData::new(grid.clone(), vec![Complex64::new(0.0, 0.0); 64]).unwrap();
        assert!(matches!(packet_moments(&zero), Err(Error::ZeroMass)));
    }

    #[test]
    fn free_packet_follows_beam() {
        let grid = Grid::new(1, 2048, 60.0).unwrap();
        let (z0, frak0) = (1.2, 3.0);
        let f = coherent_data(&grid, &[z0], &[frak0], 0.3).unwrap();
        for t in [-10.0, 10.0] {
            let c = poisson_free(&f, t).center()[0];
            assert!((c - (2.0 * t * z0 - frak0)).abs() < 0.5, "t = {t}: {c}");
        }
    }

    #[test]
    fn profile_error_and_branch() {
        let grid = Grid::new(1, 4096, 800.0).unwrap();
        let f = coherent_data(&grid, &[0.0], &[0.0], 0.0625).unwrap();
        let e200 = asymptotic_profile_error(&f, 200.0).unwrap();
        let e400 = asymptotic_profile_error(&f, 400.0).unwrap();
        assert!(e200 <= 2e-2, "{e200}");
        assert!(e200 / e400 > 1.5);

        // Residual phase at z = 0 is atan(1/(2ht))/2, so use a wider packet here.
        let f = coherent_data(&grid, &[0.0], &[0.0], 0.25).unwrap();
        let mid = grid.n_points / 2;
        let u = poisson_free(&f, 200.0);
        for (branch, expect) in [(1.0, 0.0), (-1.0, PI / 2.0)] {
            let v = asymptotic_profile(&f, 200.0, branch).unwrap();
            let phase = (u.values[mid] / v.values[mid]).arg();
            assert!((phase.abs() - expect).abs() < 1e-2, "branch {branch}: {phase}");
        }
    }

    #[test]
    fn flat_scattering_is_identity() {
        let grid = Grid::new(1, 256, 30.0).unwrap();
        let f = coherent_data(&grid, &[0.5], &[1.0], 0.3).unwrap();
        let spec = PerturbationSpec::flat(1);
        let params = SolverParams::default();
        assert!(scattering_map(&spec, &f, &params).unwrap().distance(&f) < 1e-12);
        assert!(adjoint_scattering_map(&spec, &f, &params).unwrap().distance(&f) < 1e-12);
    }

    #[test]
    fn scattering_rejects_wide_band_data() {
        let grid = Grid::new(1, 64, 10.0).unwrap();
        let f = SpectralData::from_fn(&grid, |_| Complex64::new(1.0, 0.0));
        assert!(scattering_map(&PerturbationSpec::flat(1), &f, &SolverParams::default()).is_err());
    }
}
