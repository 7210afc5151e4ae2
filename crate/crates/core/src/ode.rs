//! Dormand–Prince 5(4) embedded Runge–Kutta pair for autonomous systems.

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

// 5th-order weights minus 4th-order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

#[derive(Debug, Clone, Copy)]
pub(crate) struct StepControl {
    pub rtol: f64,
    pub atol: f64,
    pub h_init: f64,
    pub h_max: f64,
    pub h_min: f64,
}

pub(crate) struct Dopri5<F> {
    rhs: F,
    ctl: StepControl,
    pub t: f64,
    pub y: Vec<f64>,
    /// Derivative at `(t, y)`; reused as stage 1 (FSAL).
    pub dy: Vec<f64>,
    h: f64,
    k: [Vec<f64>; 6],
    ytmp: Vec<f64>,
    ynew: Vec<f64>,
}

pub(crate) enum StepResult {
    Accepted,
    Underflow,
}

impl<F: FnMut(&[f64], &mut [f64])> Dopri5<F> {
    pub fn new(mut rhs: F, t0: f64, y0: Vec<f64>, ctl: StepControl) -> Self {
        let n = y0.len();
        let mut dy = vec![0.0; n];
        rhs(&y0, &mut dy);
        Dopri5 {
            rhs,
            ctl,
            t: t0,
            y: y0,
            dy,
            h: ctl.h_init,
            k: std::array::from_fn(|_| vec![0.0; n]),
            ytmp: vec![0.0; n],
            ynew: vec![0.0; n],
        }
    }

    fn stage(&mut self, coeffs: &[(usize, f64)], h: f64, out: usize) {
        for i in 0..self.y.len() {
            let mut acc = 0.0;
            for &(s, a) in coeffs {
                acc += a * if s == 0 { self.dy[i] } else { self.k[s - 1][i] };
            }
            self.ytmp[i] = self.y[i] + h * acc;
        }
        let (ytmp, k) = (&self.ytmp, &mut self.k[out]);
        (self.rhs)(ytmp, k);
    }

    /// Takes one accepted step no longer than `t_end − t`.
    pub fn step(&mut self, t_end: f64) -> StepResult {
        loop {
            let mut h = self.h.min(self.ctl.h_max);
            let last = self.t + h >= t_end;
            if last {
                h = t_end - self.t;
            }
            if h < self.ctl.h_min && !last {
                return StepResult::Underflow;
            }
            self.stage(&[(0, A21)], h, 0);
            self.stage(&[(0, A31), (1, A32)], h, 1);
            self.stage(&[(0, A41), (1, A42), (2, A43)], h, 2);
            self.stage(&[(0, A51), (1, A52), (2, A53), (3, A54)], h, 3);
            self.stage(&[(0, A61), (1, A62), (2, A63), (3, A64), (4, A65)], h, 4);
            for i in 0..self.y.len() {
                self.ynew[i] = self.y[i]
                    + h * (A71 * self.dy[i]
                        + A73 * self.k[1][i]
                        + A74 * self.k[2][i]
                        + A75 * self.k[3][i]
                        + A76 * self.k[4][i]);
            }
            {
                let (ynew, k) = (&self.ynew, &mut self.k[5]);
                (self.rhs)(ynew, k);
            }
            let mut err = 0.0;
            let mut finite = true;
            for i in 0..self.y.len() {
                let e = h
                    * (E1 * self.dy[i]
                        + E3 * self.k[1][i]
                        + E4 * self.k[2][i]
                        + E5 * self.k[3][i]
                        + E6 * self.k[4][i]
                        + E7 * self.k[5][i]);
                let sc = self.ctl.atol + self.ctl.rtol * self.y[i].abs().max(self.ynew[i].abs());
                err += (e / sc).powi(2);
                finite &= self.ynew[i].is_finite();
            }
            let err = (err / self.y.len().max(1) as f64).sqrt();
            if finite && err <= 1.0 {
                let fac = if err == 0.0 {
                    5.0
                } else {
                    (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
                };
                self.t = if last { t_end } else { self.t + h };
                std::mem::swap(&mut self.y, &mut self.ynew);
                std::mem::swap(&mut self.dy, &mut self.k[5]);
                if !last || fac < 1.0 {
                    self.h = h * fac;
                }
                return StepResult::Accepted;
            }
            let fac = if finite {
                (0.9 * err.powf(-0.2)).clamp(0.1, 0.9)
            } else {
                0.1
            };
            self.h = h * fac;
            if self.h < self.ctl.h_min {
                return StepResult::Underflow;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctl(tol: f64) -> StepControl {
        StepControl {
            rtol: tol,
            atol: tol,
            h_init: 1e-3,
            h_max: 1.0,
            h_min: 1e-14,
        }
    }

    #[test]
    fn exponential_decay() {
        let mut s = Dopri5::new(
            |y: &[f64], dy: &mut [f64]| dy[0] = -y[0],
            0.0,
            vec![1.0],
            ctl(1e-10),
        );
        while s.t < 5.0 {
            assert!(matches!(s.step(5.0), StepResult::Accepted));
        }
        assert!((s.y[0] - (-5.0f64).exp()).abs() < 1e-9);
    }

    #[test]
    fn harmonic_oscillator_order() {
        let run = |tol: f64| {
            let mut s = Dopri5::new(
                |y: &[f64], dy: &mut [f64]| {
                    dy[0] = y[1];
                    dy[1] = -y[0];
                },
                0.0,
                vec![1.0, 0.0],
                ctl(tol),
            );
            let mut steps = 0;
            while s.t < 10.0 {
                s.step(10.0);
                steps += 1;
            }
            ((s.y[0] - 10f64.cos()).abs(), steps)
        };
        let (e1, n1) = run(1e-6);
        let (e2, n2) = run(1e-10);
        assert!(e1 < 1e-4 && e2 < 1e-8);
        assert!(n2 > n1);
    }
}
