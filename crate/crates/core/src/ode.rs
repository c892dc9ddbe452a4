//! Adaptive Dormand-Prince 5(4) integration with steps landing on requested output times.

use crate::error::{Error, Result};

const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
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

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Dopri5 {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
}

impl Default for Dopri5 {
    fn default() -> Self {
        Dopri5 { rtol: 1e-11, atol: 1e-14, max_steps: 1_000_000 }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct OdeStats {
    pub accepted: usize,
    pub rejected: usize,
}

impl Dopri5 {
    /// Integrates `y' = f(t, y)` from `ts[0]` through the monotone list `ts` (either direction).
    /// Returns the state at every entry of `ts`.
    pub fn integrate<F>(&self, f: F, ts: &[f64], y0: &[f64]) -> Result<(Vec<Vec<f64>>, OdeStats)>
    where
        F: Fn(f64, &[f64], &mut [f64]),
    {
        if ts.is_empty() {
            return Ok((vec![], OdeStats::default()));
        }
        let dim = y0.len();
        let dir = if ts.len() > 1 && ts[ts.len() - 1] < ts[0] { -1.0 } else { 1.0 };
        if ts.windows(2).any(|w| (w[1] - w[0]) * dir <= 0.0) {
            return Err(Error::InvalidInput("output times must be strictly monotone".into()));
        }
        let mut out = Vec::with_capacity(ts.len());
        out.push(y0.to_vec());
        let mut stats = OdeStats::default();
        let mut y = y0.to_vec();
        let mut t = ts[0];
        let mut k = vec![vec![0.0; dim]; 7];
        let mut tmp = vec![0.0; dim];
        f(t, &y, &mut k[0]);
        let mut h = if ts.len() > 1 { (ts[1] - ts[0]).abs() } else { 0.0 };
        for &target in &ts[1..] {
            while (target - t) * dir > 0.0 {
                if stats.accepted + stats.rejected >= self.max_steps {
                    return Err(Error::NonConvergent(format!("integrator exceeded {} steps", self.max_steps)));
                }
                let remaining = (target - t).abs();
                let last = h >= remaining * (1.0 - 1e-12);
                let step = if last { remaining } else { h };
                let hs = step * dir;
                for s in 1..7 {
                    for i in 0..dim {
                        let mut acc = 0.0;
                        for (j, kj) in k.iter().enumerate().take(s) {
                            acc += A[s][j] * kj[i];
                        }
                        tmp[i] = y[i] + hs * acc;
                    }
                    f(t + C[s] * hs, &tmp, &mut k[s]);
                }
                // the last stage is evaluated at the fifth-order solution, reused as the next first stage
                let mut err = 0.0f64;
                for i in 0..dim {
                    let mut e = 0.0;
                    for (s, ks) in k.iter().enumerate() {
                        e += E[s] * ks[i];
                    }
                    let sc = self.atol + self.rtol * y[i].abs().max(tmp[i].abs());
                    err = err.max((hs * e).abs() / sc);
                }
                if !err.is_finite() || tmp.iter().any(|v| !v.is_finite()) {
                    return Err(Error::Overflow(format!("integrator state not finite near t = {t}")));
                }
                if err <= 1.0 {
                    stats.accepted += 1;
                    t = if last { target } else { t + hs };
                    y.copy_from_slice(&tmp);
                    let (first, rest) = k.split_at_mut(1);
                    first[0].copy_from_slice(&rest[5]);
                    let grow = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).min(5.0) };
                    if !last || grow < 1.0 {
                        h = step * grow;
                    }
                } else {
                    stats.rejected += 1;
                    h = step * (0.9 * err.powf(-0.2)).max(0.1);
                }
                if h < 1e-14 * (1.0 + t.abs()) {
                    return Err(Error::NonConvergent(format!("integrator step underflow near t = {t}")));
                }
            }
            out.push(y.clone());
        }
        Ok((out, stats))
    }
}
