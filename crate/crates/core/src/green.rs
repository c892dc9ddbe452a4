//! Per-eigenvalue Green operators for the conjugated mode ODEs
//! `u' - lambda u = f` and `u'' - m u' - lambda u = f`.

use crate::diff;
use crate::error::{Error, Result};
use crate::field::TimeGrid;
use crate::quad::{exp_convolution, Direction};
use crate::tail::Tail;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Shifted eigenvalues within this distance of zero are treated as kernel modes.
pub const ZERO_TOL: f64 = 1e-9;

/// Branch for kernel modes: `Plus` for `b > 1/2`, `Minus` for `b < 1/2`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BSide {
    Plus,
    Minus,
}

impl BSide {
    /// Branch selected by a polynomial weight `b`; `b = 1/2` is refused.
    pub fn from_b(b: f64) -> Result<Self> {
        if b > 0.5 {
            Ok(BSide::Plus)
        } else if b < 0.5 {
            Ok(BSide::Minus)
        } else {
            Err(Error::BorderlineB)
        }
    }
}

/// Which closed-form kernel a case uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Kernel {
    /// `-int_t^inf f`
    FirstZeroPlus,
    /// `int^t f`
    FirstZeroMinus,
    /// `-int_t^inf e^{lambda (t-s)} f`
    FirstPositive,
    /// `int^t e^{lambda (t-s)} f`
    FirstNegative,
    /// two real roots, neither zero
    DistinctReal,
    /// real roots `{m, 0}`, zero root integrated forward
    ZeroRootPlus,
    /// real roots `{m, 0}`, zero root integrated from the start
    ZeroRootMinus,
    /// `(s - t) e^{(m/2)(t - s)}` kernel
    DoubleRoot,
    /// `sin(mu (t - s)) e^{(m/2)(t - s)}` kernel
    Oscillatory,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModeCase {
    order: u8,
    lambda: f64,
    b_side: BSide,
    m: f64,
    frame_shift: f64,
}

impl ModeCase {
    pub fn first_order(lambda: f64, b_side: BSide) -> Self {
        let lambda = if lambda.abs() <= ZERO_TOL { 0.0 } else { lambda };
        ModeCase { order: 1, lambda, b_side, m: 0.0, frame_shift: 0.0 }
    }

    /// Second-order case; `m = 0, lambda <= 0` is super-indicial and refused.
    pub fn second_order(m: f64, lambda: f64, b_side: BSide) -> Result<Self> {
        let lambda = if lambda.abs() <= ZERO_TOL { 0.0 } else { lambda };
        let m = if m.abs() <= ZERO_TOL { 0.0 } else { m };
        if m == 0.0 && lambda <= 0.0 {
            return Err(Error::SuperIndicial { beta: f64::NAN });
        }
        Ok(ModeCase { order: 2, lambda, b_side, m, frame_shift: 0.0 })
    }

    /// Solve in the unconjugated frame: data and output are `e^{beta t}` times
    /// the conjugated ones, folded into the kernel rates.
    pub fn with_frame_shift(mut self, beta: f64) -> Self {
        self.frame_shift = beta;
        self
    }

    pub fn order(&self) -> u8 {
        self.order
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn m(&self) -> f64 {
        self.m
    }

    pub fn b_side(&self) -> BSide {
        self.b_side
    }

    pub fn det(&self) -> f64 {
        self.m * self.m + 4.0 * self.lambda
    }

    pub fn mu(&self) -> f64 {
        self.det().abs().sqrt() / 2.0
    }

    pub fn mu_plus(&self) -> f64 {
        self.m / 2.0 + self.mu()
    }

    pub fn mu_minus(&self) -> f64 {
        self.m / 2.0 - self.mu()
    }

    fn det_class(&self) -> std::cmp::Ordering {
        let d = self.det();
        if d.abs() <= 1e-12 * (1.0 + self.m * self.m + self.lambda.abs()) {
            std::cmp::Ordering::Equal
        } else {
            d.partial_cmp(&0.0).unwrap()
        }
    }

    pub fn kernel(&self) -> Kernel {
        if self.order == 1 {
            return match (self.lambda.partial_cmp(&0.0).unwrap(), self.b_side) {
                (std::cmp::Ordering::Equal, BSide::Plus) => Kernel::FirstZeroPlus,
                (std::cmp::Ordering::Equal, BSide::Minus) => Kernel::FirstZeroMinus,
                (std::cmp::Ordering::Greater, _) => Kernel::FirstPositive,
                _ => Kernel::FirstNegative,
            };
        }
        if self.lambda == 0.0 {
            return match self.b_side {
                BSide::Plus => Kernel::ZeroRootPlus,
                BSide::Minus => Kernel::ZeroRootMinus,
            };
        }
        match self.det_class() {
            std::cmp::Ordering::Greater => Kernel::DistinctReal,
            std::cmp::Ordering::Equal => Kernel::DoubleRoot,
            std::cmp::Ordering::Less => Kernel::Oscillatory,
        }
    }

    fn direction(&self, root: f64) -> Direction {
        if root > 0.0 || (root == 0.0 && self.b_side == BSide::Plus) {
            Direction::Future
        } else {
            Direction::Past
        }
    }

    /// Coefficients of the unconjugated ODE: `u' - c0 u` or `u'' - a1 u' - c0 u`.
    fn frame_coefficients(&self) -> (f64, f64) {
        let b = self.frame_shift;
        if self.order == 1 {
            (0.0, self.lambda + b)
        } else {
            (self.m + 2.0 * b, self.lambda - self.m * b - b * b)
        }
    }

    /// Kernel terms `coef * J_power(rate, dir)` whose real part is `u`.
    fn terms(&self) -> Vec<Term> {
        let b = self.frame_shift;
        let c = |re: f64| Complex64::new(re, 0.0);
        if self.order == 1 {
            let dir = self.direction(self.lambda);
            let coef = if dir == Direction::Future { -1.0 } else { 1.0 };
            return vec![Term { rate: c(self.lambda + b), dir, coef: c(coef), power: 0, conj_pair: false }];
        }
        match self.kernel() {
            Kernel::DoubleRoot => {
                let r = self.m / 2.0;
                vec![Term { rate: c(r + b), dir: self.direction(r), coef: c(1.0), power: 1, conj_pair: false }]
            }
            Kernel::Oscillatory => {
                let r1 = Complex64::new(self.m / 2.0, self.mu());
                let dir = self.direction(self.m / 2.0);
                let d = Complex64::new(0.0, 2.0 * self.mu());
                let coef = if dir == Direction::Future { -1.0 / d } else { 1.0 / d };
                vec![Term { rate: r1 + b, dir, coef, power: 0, conj_pair: true }]
            }
            _ => {
                let (r1, r2) = if self.lambda == 0.0 {
                    (self.m.max(0.0), self.m.min(0.0))
                } else {
                    (self.mu_plus(), self.mu_minus())
                };
                let d = r1 - r2;
                let (d1, d2) = (self.direction(r1), self.direction(r2));
                let c1 = if d1 == Direction::Future { -1.0 / d } else { 1.0 / d };
                let c2 = if d2 == Direction::Future { 1.0 / d } else { -1.0 / d };
                vec![
                    Term { rate: c(r1 + b), dir: d1, coef: c(c1), power: 0, conj_pair: false },
                    Term { rate: c(r2 + b), dir: d2, coef: c(c2), power: 0, conj_pair: false },
                ]
            }
        }
    }

    /// Decay envelope of the solution past the data, in the unconjugated frame.
    pub fn output_tail(&self, f_tail: &Tail) -> Tail {
        let mut out = Tail::Compact;
        for t in self.terms() {
            let r = t.rate.re;
            let cand = match (t.dir, f_tail.params()) {
                (Direction::Past, None) => Tail::Asymptotic { exp_rate: -r, power: -(t.power as f64) },
                (Direction::Past, Some((rho, q))) => {
                    let s = rho + r;
                    if s < 0.0 {
                        Tail::Asymptotic { exp_rate: rho, power: q }
                    } else if s == 0.0 && q <= 1.0 {
                        Tail::Asymptotic { exp_rate: rho, power: q - 1.0 - t.power as f64 }
                    } else {
                        Tail::Asymptotic { exp_rate: -r, power: -(t.power as f64) }
                    }
                }
                (Direction::Future, None) => Tail::Compact,
                (Direction::Future, Some((rho, q))) => {
                    if rho + r == 0.0 {
                        Tail::Asymptotic { exp_rate: rho, power: q - 1.0 - t.power as f64 }
                    } else {
                        Tail::Asymptotic { exp_rate: rho, power: q }
                    }
                }
            };
            out = out.slower(cand);
        }
        if matches!(f_tail, Tail::Undeclared) {
            Tail::Undeclared
        } else {
            out
        }
    }
}

#[derive(Clone, Copy, Debug)]
struct Term {
    rate: Complex64,
    dir: Direction,
    coef: Complex64,
    power: usize,
    /// `u` also carries the conjugate term, so contributions are doubled real parts.
    conj_pair: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModeSolution {
    pub u: Vec<f64>,
    pub u_prime: Vec<f64>,
    pub u_second: Option<Vec<f64>>,
    pub residual_sup: f64,
}

/// Solve the mode ODE for samples `f` on `grid` with declared tail `tail`.
pub fn solve(case: &ModeCase, f: &[f64], grid: &TimeGrid, tail: &Tail) -> Result<ModeSolution> {
    solve_with_collar(case, f, grid, tail, &[])
}

/// As [`solve`], with past integrals also running over `collar`: samples at
/// spacing `grid.h` ending at `grid.t0` (last entry equals `f[0]`). The collar is
/// integrated separately so no interpolation stencil straddles `t0`.
pub fn solve_with_collar(
    case: &ModeCase,
    f: &[f64],
    grid: &TimeGrid,
    tail: &Tail,
    collar: &[f64],
) -> Result<ModeSolution> {
    let n = grid.n;
    if f.len() != n {
        return Err(Error::InvalidInput(format!("data length {} != grid size {n}", f.len())));
    }
    if n < 6 {
        return Err(Error::InvalidInput("mode solver needs at least 6 grid points".into()));
    }
    let mut u = vec![0.0; n];
    let mut du = vec![0.0; n];
    let t_end = grid.t_max();
    for term in case.terms() {
        let tail_vals = if term.dir == Direction::Future {
            (0..=term.power)
                .map(|k| tail.moment(f[n - 1], t_end, term.rate, k as u32))
                .collect::<Result<Vec<_>>>()?
        } else {
            tail.require_declared()?;
            if collar.len() >= 2 {
                let c = exp_convolution(collar, grid.h, term.rate, term.power, Direction::Past, &[]);
                c.iter().map(|row| row[collar.len() - 1]).collect()
            } else {
                Vec::new()
            }
        };
        let j = exp_convolution(f, grid.h, term.rate, term.power, term.dir, &tail_vals);
        let sgn = if term.dir == Direction::Future { -1.0 } else { 1.0 };
        let mult = if term.conj_pair { 2.0 } else { 1.0 };
        for i in 0..n {
            let (val, der) = if term.power == 0 {
                (j[0][i], term.rate * j[0][i] + sgn * f[i])
            } else {
                (j[1][i], sgn * j[0][i] + term.rate * j[1][i])
            };
            let v = term.coef * val;
            let d = term.coef * der;
            u[i] += mult * v.re;
            du[i] += mult * d.re;
        }
    }
    if u.iter().chain(&du).any(|v| !v.is_finite()) {
        return Err(Error::Overflow("mode solution overflowed; reduce the time range".into()));
    }
    let (a1, c0) = case.frame_coefficients();
    let u_second = if case.order == 2 {
        Some((0..n).map(|i| a1 * du[i] + c0 * u[i] + f[i]).collect::<Vec<f64>>())
    } else {
        // the ODE identity recovers u' exactly
        du = (0..n).map(|i| c0 * u[i] + f[i]).collect();
        None
    };
    let residual_sup = residual(case, grid, &u, f);
    Ok(ModeSolution { u, u_prime: du, u_second, residual_sup })
}

pub fn solve_first_order(case: &ModeCase, f: &[f64], grid: &TimeGrid, tail: &Tail) -> Result<ModeSolution> {
    if case.order != 1 {
        return Err(Error::InvalidInput("expected a first-order case".into()));
    }
    solve(case, f, grid, tail)
}

pub fn solve_second_order(case: &ModeCase, f: &[f64], grid: &TimeGrid, tail: &Tail) -> Result<ModeSolution> {
    if case.order != 2 {
        return Err(Error::InvalidInput("expected a second-order case".into()));
    }
    solve(case, f, grid, tail)
}

/// Sup over interior nodes of the finite-difference ODE defect of `u`.
pub fn residual(case: &ModeCase, grid: &TimeGrid, u: &[f64], f: &[f64]) -> f64 {
    let n = u.len();
    if n < 6 {
        return f64::NAN;
    }
    let (a1, c0) = case.frame_coefficients();
    let d1 = diff::d1(u, grid.h);
    let d2 = if case.order == 2 { diff::d2(u, grid.h) } else { Vec::new() };
    (2..n - 2)
        .map(|i| {
            let lhs = if case.order == 1 { d1[i] - c0 * u[i] } else { d2[i] - a1 * d1[i] - c0 * u[i] };
            (lhs - f[i]).abs()
        })
        .fold(0.0, f64::max)
}
