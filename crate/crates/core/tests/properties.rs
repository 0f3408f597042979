use num_complex::Complex64;
use proptest::prelude::*;

use scatterlab_core::flow::{classical_scatter, integrate, scatter_jacobian, symplectic_defect};
use scatterlab_core::phasespace::{free_flow, galilean_invariant};
use scatterlab_core::quantum::{
    coherent_data, extract_free, free_propagate, poisson_free, scattering_map, Grid, SolverParams, SpectralData,
};
use scatterlab_core::verify::{Bound, CheckReport};
use scatterlab_core::{CuspData, MetricBump, PerturbationSpec, PhasePoint, PotentialTerm};

fn bump_spec() -> PerturbationSpec {
    let mut spec = PerturbationSpec::single_bump(2, 0.05, 1.0, 1.0);
    spec.bumps.push(MetricBump::isotropic(2, 0.03, vec![0.4, -0.2], 0.3, 0.7, 0.6));
    spec
}

fn on_shell(spec: &PerturbationSpec, z: &[f64], t: f64, zeta: &[f64]) -> PhasePoint {
    let mut p = PhasePoint::from_slices(z, t, zeta, 0.0);
    p.tau = -spec.metric_norm2(z, t, &p.zeta);
    p
}

/// Beams with `|Z| ∈ [0.5, 2]` whose free line passes within `impact` of the origin at `t = 0`.
fn beam(impact: f64) -> impl Strategy<Value = CuspData> {
    (0.0..std::f64::consts::TAU, 0.5..2.0f64, -impact..impact).prop_map(|(angle, speed, offset)| {
        let (s, c) = angle.sin_cos();
        CuspData::from_slices(&[speed * c, speed * s], &[-offset * s, offset * c])
    })
}

fn vec2(r: f64) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-r..r, 2)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn free_flow_keeps_the_galilean_invariant(z in vec2(50.0), t in -20.0..20.0f64, zeta in vec2(5.0), dt in -30.0..30.0f64) {
        let p = PhasePoint::from_slices(&z, t, &zeta, 0.0);
        let before = galilean_invariant(&p);
        let after = galilean_invariant(&free_flow(&p, dt));
        let scale = 1.0 + before.amax() + zeta.iter().fold(0.0f64, |m, v| m.max(v.abs())) * (t.abs() + dt.abs());
        prop_assert!((after - before).amax() <= 8.0 * f64::EPSILON * scale);
    }

    #[test]
    fn symbol_is_bit_identical_to_flat_outside_support(z in vec2(10.0), t in -5.0..5.0f64, zeta in vec2(3.0), tau in -5.0..5.0f64) {
        let spec = bump_spec();
        prop_assume!(!spec.in_support(&z, t));
        let p = PhasePoint::from_slices(&z, t, &zeta, tau);
        prop_assert_eq!(spec.principal_symbol(&p).to_bits(), PerturbationSpec::flat(2).principal_symbol(&p).to_bits());
    }

    #[test]
    fn symbol_gradient_matches_finite_differences(z in vec2(1.0), t in -0.9..0.9f64, zeta in vec2(2.0)) {
        let spec = bump_spec();
        let p = on_shell(&spec, &z, t, &zeta);
        let jet = spec.symbol_jet(&p);
        let analytic: Vec<f64> = jet.dp_dz.iter().copied()
            .chain([jet.dp_dt])
            .chain(jet.dp_dzeta.iter().copied())
            .chain([jet.dp_dtau])
            .collect();
        let y = p.to_state();
        let h = 1e-6;
        for (i, a) in analytic.iter().enumerate() {
            let (mut yp, mut ym) = (y.clone(), y.clone());
            yp[i] += h;
            ym[i] -= h;
            let fd = (spec.principal_symbol(&PhasePoint::from_state(&yp))
                - spec.principal_symbol(&PhasePoint::from_state(&ym))) / (2.0 * h);
            prop_assert!((a - fd).abs() <= 1e-6 * (1.0 + a.abs()), "coordinate {}: {} vs {}", i, a, fd);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn trajectories_stay_on_the_characteristic_set(c in beam(1.2)) {
        let spec = bump_spec();
        let tol = 1e-11;
        let p0 = scatterlab_core::phasespace::bichar_from_cusp(&c, -4.0);
        let traj = integrate(&spec, &p0, 4.0, tol).unwrap();
        prop_assert!(traj.stats.max_p_drift <= 10.0 * tol * 8.0);
    }

    #[test]
    fn time_reversal_inverts_the_classical_map(c in beam(1.2)) {
        let spec = bump_spec();
        let tol = 1e-11;
        let out = classical_scatter(&spec, &c, tol).unwrap().c_out;
        let back = classical_scatter(&spec.time_reversed(), &CuspData::new(-&out.base, out.fiber.clone()), tol)
            .unwrap()
            .c_out;
        prop_assert!((&back.base + &c.base).amax() < 100.0 * tol, "{}", (&back.base + &c.base).amax());
        prop_assert!((&back.fiber - &c.fiber).amax() < 100.0 * tol, "{}", (&back.fiber - &c.fiber).amax());
    }

    #[test]
    fn beams_missing_the_support_are_unscattered(c in beam(30.0)) {
        let spec = bump_spec();
        let (t_in, _) = scatterlab_core::flow::scatter_times(&spec, &c);
        let p = scatterlab_core::phasespace::bichar_from_cusp(&c, t_in);
        let bx = spec.support_box().unwrap();
        prop_assume!(bx.line_interval(p.z.as_slice(), p.t, p.zeta.as_slice()).is_none());
        let r = classical_scatter(&spec, &c, 1e-11).unwrap();
        prop_assert_eq!(r.c_out, c);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn classical_map_is_symplectic(c in beam(1.0)) {
        let jac = scatter_jacobian(&bump_spec(), &c, 1e-4, 1e-11).unwrap();
        prop_assert!(symplectic_defect(&jac) <= 1e-6, "{}", symplectic_defect(&jac));
    }
}

fn band_limited(grid: &Grid, coeffs: &[(f64, f64, f64, f64)]) -> SpectralData {
    SpectralData::from_fn(grid, |zeta| {
        coeffs
            .iter()
            .map(|&(c, w, re, im)| Complex64::new(re, im) * (-(zeta[0] - c).powi(2) / (2.0 * w * w)).exp())
            .sum()
    })
}

fn packets() -> impl Strategy<Value = Vec<(f64, f64, f64, f64)>> {
    prop::collection::vec((-2.0..2.0f64, 0.3..0.8f64, -1.0..1.0f64, -1.0..1.0f64), 1..4)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn free_propagation_is_unitary(coeffs in packets(), t in -5.0..5.0f64, dt in -50.0..50.0f64) {
        let grid = Grid::new(1, 256, 40.0).unwrap();
        let f = band_limited(&grid, &coeffs);
        prop_assume!(f.norm() > 1e-3);
        let u = poisson_free(&f, t);
        let v = free_propagate(&u, dt);
        prop_assert!((v.norm() - u.norm()).abs() <= 1e-13 * u.norm());
    }

    #[test]
    fn extraction_inverts_free_evolution(coeffs in packets(), t in -5.0..5.0f64) {
        let grid = Grid::new(1, 256, 40.0).unwrap();
        let f = band_limited(&grid, &coeffs);
        prop_assume!(f.norm() > 1e-3);
        let g = extract_free(&poisson_free(&f, t));
        prop_assert!(g.distance(&f) <= 1e-13 * f.norm());
    }

    #[test]
    fn status_is_a_pure_function_of_measurements(values in prop::collection::vec((0.0..2.0f64, 0.0..2.0f64, 0usize..4), 1..6)) {
        let bounds = [Bound::Max, Bound::StrictMax, Bound::Min, Bound::StrictMin];
        let mut report = CheckReport::new("p");
        let mut expected = true;
        for &(v, tol, b) in &values {
            report.measure("m", v, tol, bounds[b]);
            expected &= match bounds[b] {
                Bound::Max => v <= tol,
                Bound::StrictMax => v < tol,
                Bound::Min => v >= tol,
                Bound::StrictMin => v > tol,
            };
        }
        prop_assert_eq!(report.passed(), expected);
        let back: CheckReport = serde_json::from_str(&serde_json::to_string(&report).unwrap()).unwrap();
        prop_assert_eq!(back.passed(), expected);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(4))]

    /// Packets whose beam misses a potential-and-metric perturbation are left nearly unchanged.
    #[test]
    fn quantum_map_is_near_identity_away_from_the_support(base in 0.6..1.0f64, side in prop::bool::ANY) {
        let spec = PerturbationSpec::new(
            1,
            vec![MetricBump::isotropic(1, 0.1, vec![0.0], 0.0, 1.5, 0.5)],
            vec![PotentialTerm::new(Complex64::new(0.3, 0.0), vec![0.0], 0.0, 1.5, 0.5)],
        )
        .unwrap();
        let grid = Grid::new(1, 4096, 60.0).unwrap();
        // Beam z = 2tZ₀ − 𝔷₀ stays at |z| ≥ 10 during the window.
        let fiber = if side { 12.0 } else { -12.0 };
        let f = coherent_data(&grid, &[base], &[fiber], 1.0).unwrap();
        let g = scattering_map(&spec, &f, &SolverParams::with_dt(2e-3)).unwrap();
        prop_assert!(g.distance(&f) <= 1e-3 * f.norm(), "{}", g.distance(&f));
    }
}
