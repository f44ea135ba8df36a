//! Adaptive Dormand–Prince 5(4) integration for small fixed-size systems.

use crate::error::{Error, Result};

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
// fifth-order weights minus embedded fourth-order weights
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

const MAX_STEPS: usize = 1_000_000;

#[derive(Clone, Debug)]
pub(crate) struct Dopri {
    pub rtol: f64,
    pub atol: f64,
    pub max_step: f64,
    /// Last accepted step size, reused as the next initial guess.
    h: f64,
}

impl Dopri {
    pub fn new(rtol: f64, atol: f64, max_step: f64) -> Self {
        Self {
            rtol,
            atol,
            max_step,
            h: max_step.min(1e-3),
        }
    }

    /// One trial step of size `h`; returns the fifth-order solution and the
    /// scaled error norm.
    fn trial<const N: usize>(
        &self,
        f: &impl Fn(f64, &[f64; N]) -> [f64; N],
        t: f64,
        y: &[f64; N],
        h: f64,
    ) -> ([f64; N], f64) {
        let mut k = [[0.0; N]; 7];
        k[0] = f(t, y);
        for s in 1..7 {
            let mut ys = *y;
            for (j, kj) in k.iter().enumerate().take(s) {
                let a = A[s][j];
                if a != 0.0 {
                    for i in 0..N {
                        ys[i] += h * a * kj[i];
                    }
                }
            }
            k[s] = f(t + C[s] * h, &ys);
        }
        let mut y_new = *y;
        // the seventh stage only feeds the error estimate
        for (ks, b) in k.iter().zip(A[6]) {
            for i in 0..N {
                y_new[i] += h * b * ks[i];
            }
        }
        let mut err: f64 = 0.0;
        for i in 0..N {
            let mut e = 0.0;
            for (s, ks) in k.iter().enumerate() {
                e += E[s] * ks[i];
            }
            let scale = self.atol + self.rtol * y[i].abs().max(y_new[i].abs());
            err = err.max((h * e).abs() / scale);
        }
        (y_new, err)
    }

    /// Takes one accepted adaptive step no longer than `h_cap`. Returns the
    /// step actually taken.
    fn accepted_step<const N: usize>(
        &mut self,
        f: &impl Fn(f64, &[f64; N]) -> [f64; N],
        t: f64,
        y: &mut [f64; N],
        h_cap: f64,
    ) -> Result<f64> {
        let mut h = self.h.min(self.max_step).min(h_cap);
        loop {
            let (y_new, err) = self.trial(f, t, y, h);
            if !err.is_finite() {
                h *= 0.2;
            } else if err <= 1.0 {
                *y = y_new;
                let grow = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
                // do not let a short final step to a mesh point shrink the memory
                if h < h_cap || h >= self.h {
                    self.h = (h * grow).min(self.max_step);
                }
                return Ok(h);
            } else {
                h *= (0.9 * err.powf(-0.2)).clamp(0.1, 0.9);
            }
            if h < 1e-14 * t.abs().max(1.0) {
                return Err(Error::NonConvergence {
                    what: "radial ODE step size underflow".into(),
                    iterations: 0,
                });
            }
        }
    }

    /// Integrates from `t0` to exactly `t1`.
    pub fn advance<const N: usize>(
        &mut self,
        f: &impl Fn(f64, &[f64; N]) -> [f64; N],
        t0: f64,
        y: &mut [f64; N],
        t1: f64,
    ) -> Result<()> {
        let mut t = t0;
        for _ in 0..MAX_STEPS {
            let remaining = t1 - t;
            if remaining <= 1e-15 * t1.abs().max(1.0) {
                return Ok(());
            }
            let h = self.accepted_step(f, t, y, remaining)?;
            t = if h == remaining { t1 } else { t + h };
        }
        Err(Error::NonConvergence {
            what: "radial ODE step budget".into(),
            iterations: MAX_STEPS,
        })
    }

    /// Integrates from `t0` towards `t_end`, calling `stop` after every
    /// accepted step; returns the first non-`None` verdict together with the
    /// radius where it was issued, or `None` if `t_end` was reached.
    pub fn integrate_until<const N: usize, T>(
        &mut self,
        f: &impl Fn(f64, &[f64; N]) -> [f64; N],
        t0: f64,
        y: &mut [f64; N],
        t_end: f64,
        mut stop: impl FnMut(f64, &[f64; N]) -> Option<T>,
    ) -> Result<Option<(f64, T)>> {
        let mut t = t0;
        for _ in 0..MAX_STEPS {
            if t >= t_end {
                return Ok(None);
            }
            let h = self.accepted_step(f, t, y, t_end - t)?;
            t += h;
            if let Some(v) = stop(t, y) {
                return Ok(Some((t, v)));
            }
        }
        Err(Error::NonConvergence {
            what: "radial ODE step budget".into(),
            iterations: MAX_STEPS,
        })
    }
}
