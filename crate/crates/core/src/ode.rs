//! Adaptive Dormand-Prince 5(4) for small autonomous systems.
//!
//! Only autonomous right-hand sides are needed here, so the stage nodes never appear.

use crate::error::{Error, Result};

const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
/// Fifth minus embedded fourth order weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// One explicit step of size `h`: returns the fifth-order solution and the local
/// error estimate.
pub fn dopri5_step<const N: usize, F>(f: &F, y: &[f64; N], h: f64) -> ([f64; N], [f64; N])
where
    F: Fn(&[f64; N]) -> [f64; N],
{
    let mut k = [[0.0; N]; 7];
    for s in 0..7 {
        let mut ys = *y;
        for (j, kj) in k.iter().enumerate().take(s) {
            let a = A[s][j];
            if a != 0.0 {
                for i in 0..N {
                    ys[i] += h * a * kj[i];
                }
            }
        }
        k[s] = f(&ys);
    }
    let mut out = *y;
    let mut err = [0.0; N];
    for s in 0..7 {
        for i in 0..N {
            out[i] += h * B[s] * k[s][i];
            err[i] += h * E[s] * k[s][i];
        }
    }
    (out, err)
}

#[derive(Debug, Clone, Copy)]
pub struct Dopri5 {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
}

impl Dopri5 {
    pub fn new(rtol: f64, atol: f64) -> Self {
        Self { rtol, atol, max_steps: 2_000_000 }
    }

    fn error_norm<const N: usize>(&self, y: &[f64; N], y_new: &[f64; N], err: &[f64; N]) -> f64 {
        let mut s = 0.0;
        for i in 0..N {
            let sc = self.atol + self.rtol * y[i].abs().max(y_new[i].abs());
            s += (err[i] / sc).powi(2);
        }
        (s / N as f64).sqrt()
    }

    /// Try steps starting from `h` until one is accepted. Returns
    /// `(h_taken, y_new, h_suggested)`.
    pub fn adaptive_step<const N: usize, F>(&self, f: &F, y: &[f64; N], h: f64) -> Result<(f64, [f64; N], f64)>
    where
        F: Fn(&[f64; N]) -> [f64; N],
    {
        let mut h = h;
        for _ in 0..100 {
            let (y_new, err) = dopri5_step(f, y, h);
            let en = self.error_norm(y, &y_new, &err);
            if !en.is_finite() || y_new.iter().any(|v| !v.is_finite()) {
                h *= 0.1;
                continue;
            }
            let factor = if en == 0.0 { 5.0 } else { (0.9 * en.powf(-0.2)).clamp(0.2, 5.0) };
            if en <= 1.0 {
                return Ok((h, y_new, h * factor));
            }
            h *= factor;
            if h.abs() < 1e-300 {
                break;
            }
        }
        Err(Error::Integration("step size underflow".into()))
    }

    /// Integrate from `t0` to exactly `t1`. Returns `(y(t1), next step guess, steps)`.
    pub fn integrate<const N: usize, F>(
        &self,
        f: &F,
        t0: f64,
        y0: [f64; N],
        t1: f64,
        h_guess: f64,
    ) -> Result<([f64; N], f64, usize)>
    where
        F: Fn(&[f64; N]) -> [f64; N],
    {
        let dir = (t1 - t0).signum();
        let mut t = t0;
        let mut y = y0;
        let mut h = h_guess.abs() * dir;
        let mut steps = 0;
        while (t1 - t) * dir > 0.0 {
            if steps >= self.max_steps {
                return Err(Error::Integration(format!("more than {} steps", self.max_steps)));
            }
            let remaining = t1 - t;
            let last = h.abs() >= remaining.abs();
            let trial = if last { remaining } else { h };
            let (taken, y_new, h_next) = self.adaptive_step(f, &y, trial)?;
            y = y_new;
            t = if last && taken == trial { t1 } else { t + taken };
            if !(last && taken == trial) {
                h = h_next;
            } else if h_next.abs() > h.abs() {
                h = h_next;
            }
            steps += 1;
        }
        Ok((y, h, steps))
    }
}
