//! Dormand–Prince 5(4) with PI step-size control and 4th-order dense output.

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

/// Dense-output polynomial for one accepted step.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseStep {
    pub t0: f64,
    pub h: f64,
    cont: [Vec<f64>; 5],
}

impl DenseStep {
    pub fn t1(&self) -> f64 {
        self.t0 + self.h
    }

    pub fn eval(&self, t: f64) -> Vec<f64> {
        let theta = (t - self.t0) / self.h;
        let theta1 = 1.0 - theta;
        let [r1, r2, r3, r4, r5] = &self.cont;
        (0..r1.len())
            .map(|i| r1[i] + theta * (r2[i] + theta1 * (r3[i] + theta * (r4[i] + theta1 * r5[i]))))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub rtol: f64,
    pub atol: f64,
}

/// Step controller state carried between steps.
#[derive(Debug, Clone)]
pub struct Dopri5 {
    pub tol: Tolerance,
    pub safe: f64,
    pub beta: f64,
    fac_old: f64,
}

pub enum StepOutcome {
    Accepted {
        y: Vec<f64>,
        dense: DenseStep,
        h_next: f64,
    },
    Rejected {
        h_next: f64,
    },
}

fn axpy(y: &[f64], h: f64, terms: &[(f64, &[f64])]) -> Vec<f64> {
    (0..y.len())
        .map(|i| y[i] + h * terms.iter().map(|(c, k)| c * k[i]).sum::<f64>())
        .collect()
}

impl Dopri5 {
    pub fn new(tol: Tolerance) -> Self {
        Self {
            tol,
            safe: 0.9,
            beta: 0.04,
            fac_old: 1e-4,
        }
    }

    /// Starting step from the local scale of the solution.
    pub fn initial_step<F>(&self, f: &F, t: f64, y: &[f64], direction: f64) -> f64
    where
        F: Fn(f64, &[f64]) -> Vec<f64>,
    {
        let f0 = f(t, y);
        let sk: Vec<f64> = y.iter().map(|v| self.tol.atol + self.tol.rtol * v.abs()).collect();
        let rms = |v: &[f64]| (v.iter().zip(&sk).map(|(a, s)| (a / s).powi(2)).sum::<f64>() / v.len() as f64).sqrt();
        let d0 = rms(y);
        let d1 = rms(&f0);
        let h0 = if d0 < 1e-10 || d1 < 1e-10 { 1e-6 } else { 0.01 * d0 / d1 };
        let y1: Vec<f64> = y.iter().zip(&f0).map(|(a, b)| a + direction * h0 * b).collect();
        let f1 = f(t + direction * h0, &y1);
        let diff: Vec<f64> = f1.iter().zip(&f0).map(|(a, b)| a - b).collect();
        let d2 = rms(&diff) / h0;
        let h1 = if d1.max(d2) <= 1e-15 {
            (h0 * 1e-3).max(1e-6)
        } else {
            (0.01 / d1.max(d2)).powf(0.2)
        };
        direction * (100.0 * h0).min(h1)
    }

    pub fn step<F>(&mut self, f: &F, t: f64, y: &[f64], k1: &[f64], h: f64) -> StepOutcome
    where
        F: Fn(f64, &[f64]) -> Vec<f64>,
    {
        let k2 = f(t + C2 * h, &axpy(y, h, &[(A21, k1)]));
        let k3 = f(t + C3 * h, &axpy(y, h, &[(A31, k1), (A32, &k2)]));
        let k4 = f(t + C4 * h, &axpy(y, h, &[(A41, k1), (A42, &k2), (A43, &k3)]));
        let k5 = f(
            t + C5 * h,
            &axpy(y, h, &[(A51, k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
        );
        let k6 = f(
            t + h,
            &axpy(y, h, &[(A61, k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]),
        );
        let y1 = axpy(y, h, &[(A71, k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)]);
        let k7 = f(t + h, &y1);

        let mut err = 0.0;
        for i in 0..y.len() {
            let e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let sk = self.tol.atol + self.tol.rtol * y[i].abs().max(y1[i].abs());
            err += (e / sk).powi(2);
        }
        let err = (err / y.len() as f64).sqrt();

        let expo1 = 0.2 - self.beta * 0.75;
        let fac11 = err.powf(expo1);
        if err <= 1.0 {
            let fac = (fac11 / self.fac_old.powf(self.beta) / self.safe).clamp(0.1, 5.0);
            self.fac_old = err.max(1e-4);
            let r2: Vec<f64> = y1.iter().zip(y).map(|(a, b)| a - b).collect();
            let r3: Vec<f64> = k1.iter().zip(&r2).map(|(k, d)| h * k - d).collect();
            let r4: Vec<f64> = (0..y.len()).map(|i| r2[i] - h * k7[i] - r3[i]).collect();
            let r5: Vec<f64> = (0..y.len())
                .map(|i| h * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]))
                .collect();
            StepOutcome::Accepted {
                dense: DenseStep {
                    t0: t,
                    h,
                    cont: [y.to_vec(), r2, r3, r4, r5],
                },
                y: y1,
                h_next: h / fac,
            }
        } else {
            StepOutcome::Rejected {
                h_next: h / (fac11 / self.safe).min(5.0),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_oscillator(tol: f64, t_end: f64) -> (Vec<f64>, Vec<DenseStep>) {
        let f = |_t: f64, y: &[f64]| vec![y[1], -y[0]];
        let mut solver = Dopri5::new(Tolerance { rtol: tol, atol: tol });
        let mut t = 0.0;
        let mut y = vec![1.0, 0.0];
        let direction = t_end.signum();
        let mut h = solver.initial_step(&f, t, &y, direction);
        let mut steps = Vec::new();
        while (t_end - t) * direction > 0.0 {
            if (t + h - t_end) * direction > 0.0 {
                h = t_end - t;
            }
            let k1 = f(t, &y);
            match solver.step(&f, t, &y, &k1, h) {
                StepOutcome::Accepted { y: y1, dense, h_next } => {
                    t = dense.t1();
                    y = y1;
                    steps.push(dense);
                    h = h_next;
                }
                StepOutcome::Rejected { h_next } => h = h_next,
            }
        }
        (y, steps)
    }

    #[test]
    fn harmonic_oscillator_both_directions() {
        for t_end in [10.0, -10.0] {
            let (y, _) = run_oscillator(1e-10, t_end);
            assert!((y[0] - t_end.cos()).abs() < 1e-8);
            assert!((y[1] + t_end.sin()).abs() < 1e-8);
        }
    }

    #[test]
    fn dense_output_interpolates_between_steps() {
        let (_, steps) = run_oscillator(1e-10, 5.0);
        for s in &steps {
            for theta in [0.0, 0.3, 0.71, 1.0] {
                let t = s.t0 + theta * s.h;
                let y = s.eval(t);
                assert!((y[0] - t.cos()).abs() < 1e-7, "t = {t}");
            }
        }
    }
}
