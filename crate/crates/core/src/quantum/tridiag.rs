//! Complex tridiagonal and cyclic tridiagonal solvers.

use num_complex::Complex64;

/// Thomas algorithm. `sub[0]` and `sup[n−1]` are ignored.
pub fn solve_tridiagonal(sub: &[Complex64], diag: &[Complex64], sup: &[Complex64], rhs: &[Complex64]) -> Vec<Complex64> {
    let n = diag.len();
    let mut c = vec![Complex64::new(0.0, 0.0); n];
    let mut x = vec![Complex64::new(0.0, 0.0); n];
    let mut beta = diag[0];
    x[0] = rhs[0] / beta;
    for i in 1..n {
        c[i] = sup[i - 1] / beta;
        beta = diag[i] - sub[i] * c[i];
        x[i] = (rhs[i] - sub[i] * x[i - 1]) / beta;
    }
    for i in (0..n - 1).rev() {
        let next = x[i + 1];
        x[i] -= c[i + 1] * next;
    }
    x
}

/// Periodic tridiagonal system via Sherman–Morrison.
/// `sub[0]` is the corner entry `(0, n−1)` and `sup[n−1]` the corner `(n−1, 0)`.
pub fn solve_cyclic(sub: &[Complex64], diag: &[Complex64], sup: &[Complex64], rhs: &[Complex64]) -> Vec<Complex64> {
    let n = diag.len();
    assert!(n >= 3, "cyclic system needs at least three unknowns");
    let beta = sub[0];
    let alpha = sup[n - 1];
    let gamma = -diag[0];
    let mut bb = diag.to_vec();
    bb[0] = diag[0] - gamma;
    bb[n - 1] = diag[n - 1] - alpha * beta / gamma;
    let x = solve_tridiagonal(sub, &bb, sup, rhs);
    let mut u = vec![Complex64::new(0.0, 0.0); n];
    u[0] = gamma;
    u[n - 1] = alpha;
    let z = solve_tridiagonal(sub, &bb, sup, &u);
    let fact = (x[0] + beta * x[n - 1] / gamma) / (1.0 + z[0] + beta * z[n - 1] / gamma);
    x.iter().zip(&z).map(|(xi, zi)| xi - fact * zi).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(rng: &mut ChaCha8Rng, n: usize) -> Vec<Complex64> {
        (0..n).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect()
    }

    #[test]
    fn cyclic_solution_satisfies_system() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in [3, 4, 17, 64] {
            let sub = random(&mut rng, n);
            let sup = random(&mut rng, n);
            let diag: Vec<Complex64> = random(&mut rng, n).iter().map(|d| d + 4.0).collect();
            let rhs = random(&mut rng, n);
            let x = solve_cyclic(&sub, &diag, &sup, &rhs);
            for i in 0..n {
                let prev = x[(i + n - 1) % n];
                let next = x[(i + 1) % n];
                let r = sub[i] * prev + diag[i] * x[i] + sup[i] * next - rhs[i];
                assert!(r.norm() < 1e-12, "n = {n}, row {i}");
            }
        }
    }

    #[test]
    fn plain_tridiagonal() {
        let one = Complex64::new(1.0, 0.0);
        let sub = vec![one; 5];
        let sup = vec![one; 5];
        let diag = vec![Complex64::new(4.0, 1.0); 5];
        let xs: Vec<Complex64> = (0..5).map(|i| Complex64::new(i as f64, -1.0)).collect();
        let rhs: Vec<Complex64> = (0..5)
            .map(|i| {
                let mut r = diag[i] * xs[i];
                if i > 0 {
                    r += xs[i - 1];
                }
                if i < 4 {
                    r += xs[i + 1];
                }
                r
            })
            .collect();
        let x = solve_tridiagonal(&sub, &diag, &sup, &rhs);
        for (a, b) in x.iter().zip(&xs) {
            assert!((a - b).norm() < 1e-13);
        }
    }
}
