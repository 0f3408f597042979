//! Discrete realization of `FT(u)(Z) = ∫ e^{−iz·Z} u dz` on the periodic box.
//!
//! Spatial samples sit at `z_j = −L + j·dz`; spectral samples are stored in
//! centered order, index `k` ↔ `Z = π(k − N/2)/L`. With this layout the forward
//! transform of one axis is `dz·(−1)^{k−N/2}·DFT(u)[(k + N/2) mod N]`.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::Grid;

static PLANS_BUILT: AtomicUsize = AtomicUsize::new(0);

/// Process-wide count of `Fourier` constructions; every quantum solve builds at least one.
pub fn plans_built() -> usize {
    PLANS_BUILT.load(Ordering::Relaxed)
}

pub struct Fourier {
    grid: Grid,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    signs: Vec<f64>,
}

impl Fourier {
    pub fn new(grid: &Grid) -> Self {
        PLANS_BUILT.fetch_add(1, Ordering::Relaxed);
        let mut planner = FftPlanner::new();
        let n = grid.n_points;
        let half = (n / 2) as i64;
        Self {
            grid: grid.clone(),
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
            signs: (0..n as i64)
                .map(|k| if (k - half).rem_euclid(2) == 0 { 1.0 } else { -1.0 })
                .collect(),
        }
    }

    fn forward_line(&self, line: &mut [Complex64], scratch: &mut [Complex64]) {
        let n = line.len();
        self.forward.process(line);
        scratch.copy_from_slice(line);
        let dz = self.grid.dz();
        for k in 0..n {
            line[k] = scratch[(k + n / 2) % n] * (dz * self.signs[k]);
        }
    }

    fn inverse_line(&self, line: &mut [Complex64], scratch: &mut [Complex64]) {
        let n = line.len();
        for k in 0..n {
            scratch[(k + n / 2) % n] = line[k] * self.signs[k];
        }
        line.copy_from_slice(scratch);
        self.inverse.process(line);
        let scale = 1.0 / (n as f64 * self.grid.dz());
        for v in line.iter_mut() {
            *v *= scale;
        }
    }

    fn apply(&self, values: &mut [Complex64], line_op: impl Fn(&Self, &mut [Complex64], &mut [Complex64])) {
        let n = self.grid.n_points;
        let mut scratch = vec![Complex64::new(0.0, 0.0); n];
        match self.grid.dim {
            1 => line_op(self, values, &mut scratch),
            _ => {
                for row in values.chunks_mut(n) {
                    line_op(self, row, &mut scratch);
                }
                let mut column = vec![Complex64::new(0.0, 0.0); n];
                for j in 0..n {
                    for i in 0..n {
                        column[i] = values[i * n + j];
                    }
                    line_op(self, &mut column, &mut scratch);
                    for i in 0..n {
                        values[i * n + j] = column[i];
                    }
                }
            }
        }
    }

    /// Physical samples to centered spectral samples, in place.
    pub fn forward(&self, values: &mut [Complex64]) {
        self.apply(values, Self::forward_line);
    }

    /// Centered spectral samples to physical samples, in place.
    pub fn inverse(&self, values: &mut [Complex64]) {
        self.apply(values, Self::inverse_line);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_transform_matches_closed_form() {
        // ∫ e^{−izZ} e^{−z²/2} dz = √(2π) e^{−Z²/2}
        let grid = Grid::new(1, 256, 20.0).unwrap();
        let fourier = Fourier::new(&grid);
        let mut v: Vec<Complex64> = (0..256)
            .map(|j| {
                let z = grid.coord(j);
                Complex64::new((-0.5 * (z - 1.0) * (z - 1.0)).exp(), 0.0)
            })
            .collect();
        fourier.forward(&mut v);
        for k in 0..256 {
            let zeta = grid.freq(k);
            let exact = Complex64::new(0.0, -zeta).exp() * ((2.0 * std::f64::consts::PI).sqrt() * (-0.5 * zeta * zeta).exp());
            assert!((v[k] - exact).norm() < 1e-12, "k = {k}");
        }
    }

    #[test]
    fn round_trip_two_dimensions() {
        let grid = Grid::new(2, 32, 5.0).unwrap();
        let fourier = Fourier::new(&grid);
        let orig: Vec<Complex64> = (0..grid.len())
            .map(|i| Complex64::new((i as f64 * 0.37).sin(), (i as f64 * 0.11).cos()))
            .collect();
        let mut v = orig.clone();
        fourier.forward(&mut v);
        fourier.inverse(&mut v);
        for (a, b) in v.iter().zip(&orig) {
            assert!((a - b).norm() < 1e-13);
        }
    }
}
