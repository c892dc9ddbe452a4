//! Declared asymptotics of sampled data beyond the last grid point.

use crate::error::{Error, Result};
use crate::quad;
use num_complex::Complex64;

/// Shape of a sampled function past `t_max`.
///
/// `Asymptotic { exp_rate: r, power: q }` declares
/// `u(t) = u(T) e^{-r (t - T)} (t / T)^{-q}` for `t > T`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Tail {
    Undeclared,
    Compact,
    Asymptotic { exp_rate: f64, power: f64 },
}

impl Tail {
    pub fn exp(rate: f64) -> Self {
        Tail::Asymptotic { exp_rate: rate, power: 0.0 }
    }

    pub fn power(q: f64) -> Self {
        Tail::Asymptotic { exp_rate: 0.0, power: q }
    }

    pub fn is_declared(&self) -> bool {
        !matches!(self, Tail::Undeclared)
    }

    pub fn require_declared(&self) -> Result<()> {
        if self.is_declared() {
            Ok(())
        } else {
            Err(Error::UndeclaredTail)
        }
    }

    /// `(rate, power)`; compact tails report `None`.
    pub fn params(&self) -> Option<(f64, f64)> {
        match *self {
            Tail::Asymptotic { exp_rate, power } => Some((exp_rate, power)),
            _ => None,
        }
    }

    /// Value of the normalized shape at `t >= t_end` (1 at `t_end`).
    pub fn shape(&self, t_end: f64, t: f64) -> f64 {
        match *self {
            Tail::Asymptotic { exp_rate, power } => {
                let mut v = (-exp_rate * (t - t_end)).exp();
                if power != 0.0 {
                    v *= (t / t_end).powf(-power);
                }
                v
            }
            _ => 0.0,
        }
    }

    /// Logarithmic derivatives `s'/s` and `s''/s` of the shape at `t`.
    pub fn log_derivs(&self, t: f64) -> (f64, f64) {
        match *self {
            Tail::Asymptotic { exp_rate, power } => {
                let d1 = -exp_rate - power / t;
                (d1, d1 * d1 + power / (t * t))
            }
            _ => (0.0, 0.0),
        }
    }

    /// Tail after multiplication by `e^{-beta t}`.
    pub fn conjugate(&self, beta: f64) -> Tail {
        match *self {
            Tail::Asymptotic { exp_rate, power } => Tail::Asymptotic { exp_rate: exp_rate + beta, power },
            t => t,
        }
    }

    /// Tail after multiplication by `t^{-l}`.
    pub fn times_power(&self, l: f64) -> Tail {
        match *self {
            Tail::Asymptotic { exp_rate, power } => Tail::Asymptotic { exp_rate, power: power + l },
            t => t,
        }
    }

    /// The slower-decaying of two tails; undeclared dominates.
    pub fn slower(self, other: Tail) -> Tail {
        match (self, other) {
            (Tail::Undeclared, _) | (_, Tail::Undeclared) => Tail::Undeclared,
            (Tail::Compact, t) | (t, Tail::Compact) => t,
            (
                Tail::Asymptotic { exp_rate: r1, power: q1 },
                Tail::Asymptotic { exp_rate: r2, power: q2 },
            ) => {
                if r1 < r2 || (r1 == r2 && q1 <= q2) {
                    self
                } else {
                    other
                }
            }
        }
    }

    /// `int_0^inf z^k e^{-r z} s(T + z) dz` times `value`, with `s` the shape.
    pub fn moment(&self, value: f64, t_end: f64, rate: Complex64, k: u32) -> Result<Complex64> {
        let (rho, q) = match *self {
            Tail::Undeclared => return Err(Error::UndeclaredTail),
            Tail::Compact => return Ok(Complex64::new(0.0, 0.0)),
            Tail::Asymptotic { exp_rate, power } => (exp_rate, power),
        };
        if value == 0.0 {
            return Ok(Complex64::new(0.0, 0.0));
        }
        let eff = rate + rho;
        let scale = 1.0 + rate.norm() + rho.abs();
        let kf = factorial(k);
        if q == 0.0 {
            if eff.re > 1e-14 * scale {
                return Ok(value * kf / eff.powu(k + 1));
            }
            return Err(Error::Divergent(format!(
                "tail with exponential rate {rho} against kernel rate {rate}"
            )));
        }
        if eff.re > 1e-14 * scale {
            let g = |z: f64, im: bool| {
                let e = (-eff * z).exp() * z.powi(k as i32) * (1.0 + z / t_end).powf(-q);
                if im {
                    e.im
                } else {
                    e.re
                }
            };
            let re = quad::integrate_to_inf(|z| g(z, false), 0.0, 1e-13)?;
            let im = if eff.im != 0.0 { quad::integrate_to_inf(|z| g(z, true), 0.0, 1e-13)? } else { 0.0 };
            return Ok(value * Complex64::new(re, im));
        }
        if eff.re.abs() <= 1e-14 * scale && eff.im == 0.0 && q > (k + 1) as f64 {
            let mut denom = 1.0;
            for j in 1..=(k + 1) {
                denom *= q - j as f64;
            }
            return Ok(Complex64::new(value * t_end.powi(k as i32 + 1) * kf / denom, 0.0));
        }
        Err(Error::Divergent(format!(
            "tail (rate {rho}, power {q}) is not integrable against kernel rate {rate} with power {k}"
        )))
    }
}

pub(crate) fn factorial(k: u32) -> f64 {
    (1..=k).map(|j| j as f64).product()
}
