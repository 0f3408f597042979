//! Coordinates on phase space and on the asymptotic (1-cusp) data space.
//!
//! A bicharacteristic state is a point `(z, t, ζ, τ)` of `T*ℝ^{n+1}`. Outside
//! the perturbation every bicharacteristic is a free line `z = 2tZ − 𝔷`, and
//! the pair `(Z, 𝔷)` labels it. Near `|Z| = ∞` the label is expressed in the
//! boundary chart `x = 1/|Z|`, `y = Z_⊥/|Z|` with fibre coordinates taken in
//! the frame `{dx/x³, dy/x}`.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::symbols::PerturbationSpec;

/// Relative tolerance for the characteristic condition `τ + |ζ|²_g = 0`.
pub const CHARACTERISTIC_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint {
    pub z: DVector<f64>,
    pub t: f64,
    pub zeta: DVector<f64>,
    pub tau: f64,
}

impl PhasePoint {
    pub fn new(z: DVector<f64>, t: f64, zeta: DVector<f64>, tau: f64) -> Self {
        debug_assert_eq!(z.len(), zeta.len());
        Self { z, t, zeta, tau }
    }

    pub fn from_slices(z: &[f64], t: f64, zeta: &[f64], tau: f64) -> Self {
        Self::new(
            DVector::from_column_slice(z),
            t,
            DVector::from_column_slice(zeta),
            tau,
        )
    }

    pub fn dim(&self) -> usize {
        self.z.len()
    }

    pub fn is_finite(&self) -> bool {
        self.t.is_finite()
            && self.tau.is_finite()
            && self.z.iter().all(|v| v.is_finite())
            && self.zeta.iter().all(|v| v.is_finite())
    }

    /// Flat state vector `(z, t, ζ, τ)` of length `2n + 2`.
    pub fn to_state(&self) -> Vec<f64> {
        let n = self.dim();
        let mut y = Vec::with_capacity(2 * n + 2);
        y.extend(self.z.iter());
        y.push(self.t);
        y.extend(self.zeta.iter());
        y.push(self.tau);
        y
    }

    pub fn from_state(y: &[f64]) -> Self {
        let n = (y.len() - 2) / 2;
        Self::from_slices(&y[..n], y[n], &y[n + 1..2 * n + 1], y[2 * n + 1])
    }
}

/// Asymptotic phase-space point `(Z, 𝔷) ∈ T*ℝⁿ_Z`.
///
/// `base` is the asymptotic position `Z = lim z/(2t)` and `fiber` the dual
/// variable `𝔷 = 2tζ − z`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CuspData {
    pub base: DVector<f64>,
    pub fiber: DVector<f64>,
}

impl CuspData {
    pub fn new(base: DVector<f64>, fiber: DVector<f64>) -> Self {
        debug_assert_eq!(base.len(), fiber.len());
        Self { base, fiber }
    }

    pub fn from_slices(base: &[f64], fiber: &[f64]) -> Self {
        Self::new(
            DVector::from_column_slice(base),
            DVector::from_column_slice(fiber),
        )
    }

    pub fn dim(&self) -> usize {
        self.base.len()
    }

    /// Concatenated coordinates `(Z, 𝔷)`.
    pub fn to_vec(&self) -> Vec<f64> {
        self.base.iter().chain(self.fiber.iter()).copied().collect()
    }

    pub fn from_vec(v: &[f64]) -> Self {
        let n = v.len() / 2;
        Self::from_slices(&v[..n], &v[n..])
    }

    /// Euclidean distance in `(Z, 𝔷)`.
    pub fn distance(&self, other: &CuspData) -> f64 {
        ((&self.base - &other.base).norm_squared() + (&self.fiber - &other.fiber).norm_squared())
            .sqrt()
    }
}

/// Coordinates of a [`CuspData`] point in the boundary chart of one dominant axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CuspBoundaryCoords {
    /// Boundary defining function `1/|Z|`.
    pub x: f64,
    /// Components `Z_j/|Z|` for `j ≠ axis`, in increasing `j`.
    pub y: DVector<f64>,
    pub xi: f64,
    pub eta: DVector<f64>,
    pub axis: usize,
    /// `+1.0` or `-1.0`: sign of `Z_axis`.
    pub sign: f64,
}

/// Closed-form free bicharacteristic flow by `dt`.
pub fn free_flow(p: &PhasePoint, dt: f64) -> PhasePoint {
    PhasePoint {
        z: &p.z + &p.zeta * (2.0 * dt),
        t: p.t + dt,
        zeta: p.zeta.clone(),
        tau: p.tau,
    }
}

/// `2tζ − z`, conserved along free bicharacteristics.
pub fn galilean_invariant(p: &PhasePoint) -> DVector<f64> {
    &p.zeta * (2.0 * p.t) - &p.z
}

/// Asymptotic label of a free bicharacteristic: `Z = ζ`, `𝔷 = 2tζ − z`.
pub fn cusp_from_bichar(p: &PhasePoint) -> CuspData {
    CuspData {
        base: p.zeta.clone(),
        fiber: galilean_invariant(p),
    }
}

/// [`cusp_from_bichar`] with the free-region and characteristic preconditions enforced.
pub fn cusp_from_bichar_checked(spec: &PerturbationSpec, p: &PhasePoint) -> Result<CuspData> {
    let residual = spec.principal_symbol(p).abs();
    let tolerance = CHARACTERISTIC_TOL * (1.0 + p.zeta.norm_squared());
    if !(residual <= tolerance) {
        return Err(Error::CharacteristicViolation {
            residual,
            tolerance,
        });
    }
    if spec.in_support(p.z.as_slice(), p.t) {
        return Err(Error::InsidePerturbation { t: p.t });
    }
    Ok(cusp_from_bichar(p))
}

/// The free bicharacteristic labelled by `c`, evaluated at time `t_init`.
pub fn bichar_from_cusp(c: &CuspData, t_init: f64) -> PhasePoint {
    PhasePoint {
        z: &c.base * (2.0 * t_init) - &c.fiber,
        t: t_init,
        zeta: c.base.clone(),
        tau: -c.base.norm_squared(),
    }
}

fn dominant_axis(base: &DVector<f64>) -> usize {
    base.iamax()
}

/// Boundary chart of the dominant axis of `Z`.
pub fn to_boundary_chart(c: &CuspData) -> Result<CuspBoundaryCoords> {
    if c.base.iter().all(|v| *v == 0.0) {
        return Err(Error::ZeroBasePoint);
    }
    to_boundary_chart_on(c, dominant_axis(&c.base))
}

/// Boundary chart on a caller-chosen axis.
///
/// With `Ẑ = Z/|Z|`, writing `𝔷·dZ = ξ dx/x³ + η·dy/x` gives
/// `ξ = −x (𝔷·Ẑ)` and `η_j = 𝔷_j − 𝔷_a · s y_j / √(1 − |y|²)`.
pub fn to_boundary_chart_on(c: &CuspData, axis: usize) -> Result<CuspBoundaryCoords> {
    let n = c.dim();
    if axis >= n {
        return Err(Error::ChartInvalid(format!("axis {axis} out of range for n = {n}")));
    }
    let r = c.base.norm();
    if r == 0.0 {
        return Err(Error::ZeroBasePoint);
    }
    let max = c.base.amax();
    let za = c.base[axis];
    if za.abs() < 0.5 * max {
        return Err(Error::ChartInvalid(format!(
            "|Z_{axis}| = {} is below half the largest component {max}",
            za.abs()
        )));
    }
    let sign = if za >= 0.0 { 1.0 } else { -1.0 };
    let x = 1.0 / r;
    let w = za.abs() / r;
    let others: Vec<usize> = (0..n).filter(|&j| j != axis).collect();
    let y = DVector::from_iterator(n - 1, others.iter().map(|&j| c.base[j] / r));
    let xi = -c.fiber.dot(&c.base) / (r * r);
    let fa = c.fiber[axis];
    let eta = DVector::from_iterator(
        n - 1,
        others
            .iter()
            .enumerate()
            .map(|(k, &j)| c.fiber[j] - fa * sign * y[k] / w),
    );
    Ok(CuspBoundaryCoords {
        x,
        y,
        xi,
        eta,
        axis,
        sign,
    })
}

/// Exact inverse of [`to_boundary_chart_on`].
pub fn from_boundary_chart(b: &CuspBoundaryCoords) -> Result<CuspData> {
    let m = b.y.len();
    let n = m + 1;
    if b.eta.len() != m {
        return Err(Error::ChartInvalid("y and η lengths differ".into()));
    }
    if b.axis >= n {
        return Err(Error::ChartInvalid(format!("axis {} out of range for n = {n}", b.axis)));
    }
    if !(b.x > 0.0 && b.x.is_finite()) {
        return Err(Error::ChartInvalid(format!("x = {} must be positive", b.x)));
    }
    if b.sign != 1.0 && b.sign != -1.0 {
        return Err(Error::ChartInvalid(format!("sign = {} must be ±1", b.sign)));
    }
    let y2 = b.y.norm_squared();
    if !(y2 < 1.0) {
        return Err(Error::ChartInvalid(format!("|y| = {} must be < 1", y2.sqrt())));
    }
    let w = (1.0 - y2).sqrt();
    if w < 0.5 * b.y.amax() {
        return Err(Error::ChartInvalid("axis does not dominate".into()));
    }
    if !b.xi.is_finite() || b.eta.iter().any(|v| !v.is_finite()) {
        return Err(Error::ChartInvalid("non-finite fibre coordinates".into()));
    }

    // 𝔷_j = η_j + c y_j with c = 𝔷·Ẑ = −ξ/x − η·y, and 𝔷_a = s c w.
    let c = -b.xi / b.x - b.eta.dot(&b.y);
    let mut base = DVector::zeros(n);
    let mut fiber = DVector::zeros(n);
    base[b.axis] = b.sign * w / b.x;
    fiber[b.axis] = b.sign * c * w;
    let others = (0..n).filter(|&j| j != b.axis);
    for (k, j) in others.enumerate() {
        base[j] = b.y[k] / b.x;
        fiber[j] = b.eta[k] + c * b.y[k];
    }
    Ok(CuspData { base, fiber })
}
