//! Numerical checks of the four weighted Hardy inequalities and the
//! exponential-moment bound used to prove them.

use crate::error::{Error, Result};
use crate::field::{tail_power_integral, TimeGrid};
use crate::quad::{self, exp_convolution, Direction};
use crate::tail::Tail;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// Lower limit of every left-hand side.
pub const HARDY_T0: f64 = 0.1;
/// Lower limit of the left-hand inner integrals of the `minus` variants.
pub const INNER_START: f64 = 1.0;
pub const DEFAULT_STEPS_TO_ONE: usize = 450;
pub const DEFAULT_T_END: f64 = 80.0;
/// Exponents and rates of the deterministic `t^a e^{-kt}` family members.
pub const FAMILY_POWERS: [f64; 5] = [0.0, 0.5, 1.0, 2.0, 3.0];
pub const FAMILY_RATES: [f64; 4] = [0.25, 0.5, 1.0, 2.0];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HardyVariant {
    /// `int (t^{b-1} int_t^inf f)^p`
    PolyPlus,
    /// `int (t^{b-1} int_1^t f)^p`
    PolyMinus,
    /// `mu^{p(1+theta)} int (t^b int_t^inf e^{mu(t-s)} (s-t)^theta f)^p`, `mu > 0`
    ExpPlus,
    /// `mu^{p(1+theta)} int (t^b int_1^t e^{mu(t-s)} (t-s)^theta f)^p`, `mu < 0`
    ExpMinus,
}

impl HardyVariant {
    pub fn name(&self) -> &'static str {
        match self {
            HardyVariant::PolyPlus => "poly_plus",
            HardyVariant::PolyMinus => "poly_minus",
            HardyVariant::ExpPlus => "exp_plus",
            HardyVariant::ExpMinus => "exp_minus",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HardyCase {
    pub variant: HardyVariant,
    pub p: f64,
    pub b: f64,
    #[serde(default)]
    pub mu: f64,
    #[serde(default)]
    pub theta: u32,
}

impl HardyCase {
    pub fn new(variant: HardyVariant, p: f64, b: f64, mu: f64, theta: u32) -> Result<Self> {
        HardyCase { variant, p, b, mu, theta }.validated()
    }

    pub fn poly(variant: HardyVariant, p: f64, b: f64) -> Result<Self> {
        Self::new(variant, p, b, 0.0, 0)
    }

    pub fn validated(self) -> Result<Self> {
        if !(self.p >= 2.0 && self.p.is_finite()) {
            return Err(Error::InvalidInput(format!("p must be >= 2, got {}", self.p)));
        }
        if !self.b.is_finite() {
            return Err(Error::InvalidInput("b must be finite".into()));
        }
        match self.variant {
            HardyVariant::ExpPlus if !(self.mu > 0.0) => {
                Err(Error::InvalidInput("exp_plus needs mu > 0".into()))
            }
            HardyVariant::ExpMinus if !(self.mu < 0.0 && self.mu.is_finite()) => {
                Err(Error::InvalidInput("exp_minus needs mu < 0".into()))
            }
            _ => Ok(self),
        }
    }

    /// Whether `b` lies on the side of `1 - 1/p` where the inequality is claimed.
    pub fn is_admissible(&self) -> bool {
        let crit = 1.0 - 1.0 / self.p;
        match self.variant {
            HardyVariant::PolyPlus => self.b > crit,
            HardyVariant::PolyMinus => self.b < crit,
            _ => true,
        }
    }

    fn rate(&self) -> f64 {
        match self.variant {
            HardyVariant::PolyPlus | HardyVariant::PolyMinus => 0.0,
            _ => self.mu,
        }
    }

    fn power(&self) -> usize {
        match self.variant {
            HardyVariant::PolyPlus | HardyVariant::PolyMinus => 0,
            _ => self.theta as usize,
        }
    }

    fn direction(&self) -> Direction {
        match self.variant {
            HardyVariant::PolyPlus | HardyVariant::ExpPlus => Direction::Future,
            _ => Direction::Past,
        }
    }

    fn outer_exponent(&self) -> f64 {
        match self.variant {
            HardyVariant::PolyPlus | HardyVariant::PolyMinus => self.b - 1.0,
            _ => self.b,
        }
    }

    /// `|mu|^{p(1 + theta)}` for the exponential variants.
    pub fn prefactor(&self) -> f64 {
        match self.variant {
            HardyVariant::PolyPlus | HardyVariant::PolyMinus => 1.0,
            _ => self.mu.abs().powf(self.p * (1.0 + self.theta as f64)),
        }
    }
}

/// Sampling grid `[0.1, t_end]` with `t = 1` a node.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HardyGrid {
    pub steps_to_one: usize,
    pub t_end: f64,
}

impl Default for HardyGrid {
    fn default() -> Self {
        HardyGrid { steps_to_one: DEFAULT_STEPS_TO_ONE, t_end: DEFAULT_T_END }
    }
}

impl HardyGrid {
    pub fn halved(&self) -> Self {
        HardyGrid { steps_to_one: 2 * self.steps_to_one, t_end: self.t_end }
    }

    pub fn time_grid(&self) -> Result<TimeGrid> {
        if self.steps_to_one < 4 || !(self.t_end > 2.0) {
            return Err(Error::InvalidInput("Hardy grid needs >= 4 steps to 1 and t_end > 2".into()));
        }
        let h = (INNER_START - HARDY_T0) / self.steps_to_one as f64;
        let n = ((self.t_end - HARDY_T0) / h).round() as usize + 1;
        Ok(TimeGrid::from_spacing(HARDY_T0, h, n))
    }
}

type SampleFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A nonnegative function on `[start, inf)`, zero before `start`, with a declared tail.
#[derive(Clone)]
pub struct TestFunction {
    pub id: String,
    pub start: f64,
    pub tail: Tail,
    f: SampleFn,
}

impl std::fmt::Debug for TestFunction {
    fn fmt(&self, fmt: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        fmt.debug_struct("TestFunction").field("id", &self.id).field("start", &self.start).field("tail", &self.tail).finish()
    }
}

impl TestFunction {
    pub fn new(id: impl Into<String>, start: f64, tail: Tail, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        TestFunction { id: id.into(), start: start.max(HARDY_T0), tail, f: Arc::new(f) }
    }

    pub fn eval(&self, t: f64) -> f64 {
        if t < self.start {
            0.0
        } else {
            (self.f)(t)
        }
    }

    pub fn scaled(&self, c: f64) -> Self {
        let f = self.f.clone();
        TestFunction { id: self.id.clone(), start: self.start, tail: self.tail, f: Arc::new(move |t| c * f(t)) }
    }

    /// `t^a e^{-kt}` on `[0.1, inf)`.
    pub fn power_exp(a: f64, kappa: f64) -> Self {
        TestFunction::new(format!("pow{a}_exp{kappa}"), HARDY_T0, Tail::Asymptotic { exp_rate: kappa, power: -a }, move |t| {
            t.powf(a) * (-kappa * t).exp()
        })
    }

    /// Cubic B-spline bump of half-width `2w` centred at `c`.
    pub fn bspline_bump(id: impl Into<String>, c: f64, w: f64, amp: f64) -> Self {
        let lo = (c - 2.0 * w).max(HARDY_T0);
        TestFunction::new(id, lo, Tail::Compact, move |t| amp * cubic_bspline((t - c) / w))
    }
}

/// Centred cubic B-spline on `[-2, 2]`.
pub fn cubic_bspline(x: f64) -> f64 {
    let a = x.abs();
    if a >= 2.0 {
        0.0
    } else if a >= 1.0 {
        (2.0 - a).powi(3) / 6.0
    } else {
        (4.0 - 6.0 * a * a + 3.0 * a * a * a) / 6.0
    }
}

/// Deterministic part (`t^a e^{-kt}`) followed by seeded B-spline bumps, `n` members in all.
pub fn standard_family(n: usize, seed: u64) -> Vec<TestFunction> {
    let mut out: Vec<TestFunction> = FAMILY_POWERS
        .iter()
        .flat_map(|&a| FAMILY_RATES.iter().map(move |&k| TestFunction::power_exp(a, k)))
        .take(n)
        .collect();
    let fixed = out.len();
    for j in fixed..n {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(j as u64);
        let c = rng.gen_range(0.5..30.0);
        let w = rng.gen_range(0.2..5.0);
        let amp = rng.gen_range(0.1..10.0);
        out.push(TestFunction::bspline_bump(format!("bump{j}"), c, w, amp));
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct HardyRatio {
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
}

fn simpson_range(y: &[f64], h: f64, a: usize, b: usize) -> f64 {
    if b <= a {
        0.0
    } else if b == a + 1 {
        0.5 * h * (y[a] + y[b])
    } else {
        quad::simpson(&y[a..=b], h)
    }
}

/// Tail of the inner integral beyond `t_end`.
fn inner_tail(case: &HardyCase, f_tail: &Tail) -> Result<Tail> {
    let r = case.rate();
    let k = case.power() as f64;
    match (case.direction(), f_tail.params()) {
        (Direction::Future, None) => Ok(Tail::Compact),
        (Direction::Future, Some((rho, q))) => {
            if rho + r > 0.0 {
                Ok(Tail::Asymptotic { exp_rate: rho, power: q })
            } else if rho + r == 0.0 && q > k + 1.0 {
                Ok(Tail::Asymptotic { exp_rate: rho, power: q - k - 1.0 })
            } else {
                Err(Error::ViolationWitness("inner integral diverges".into()))
            }
        }
        (Direction::Past, None) => Ok(Tail::Asymptotic { exp_rate: -r, power: -k }),
        (Direction::Past, Some((rho, q))) => {
            if rho + r < 0.0 {
                Ok(Tail::Asymptotic { exp_rate: rho, power: q })
            } else {
                Ok(Tail::Asymptotic { exp_rate: -r, power: -k })
            }
        }
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// The inner integral of the left-hand side on every grid node.
fn inner(case: &HardyCase, f: &TestFunction, grid: &TimeGrid) -> Result<Vec<f64>> {
    let n = grid.n;
    let h = grid.h;
    let is = (((f.start - grid.t0) / h) - 1e-9).ceil().max(0.0) as usize;
    if is + 4 >= n {
        return Err(Error::InvalidInput(format!("test function {} starts too late for the grid", f.id)));
    }
    let samples: Vec<f64> = (is..n).map(|i| f.eval(grid.t(i))).collect();
    if samples.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(Error::InvalidInput(format!("test function {} must be finite and nonnegative", f.id)));
    }
    let rate = Complex64::new(case.rate(), 0.0);
    let kk = case.power();
    let t_end = grid.t_max();
    let mut g = vec![0.0; n];
    match case.direction() {
        Direction::Future => {
            let seeds = (0..=kk)
                .map(|k| f.tail.moment(samples[samples.len() - 1], t_end, rate, k as u32))
                .collect::<Result<Vec<_>>>()
                .map_err(|e| match e {
                    Error::Divergent(m) => Error::ViolationWitness(m),
                    e => e,
                })?;
            let j = exp_convolution(&samples, h, rate, kk, Direction::Future, &seeds);
            for i in is..n {
                g[i] = j[kk][i - is].re;
            }
            // f vanishes before the start: propagate the start values analytically
            let ts = grid.t(is);
            for (i, gi) in g.iter_mut().enumerate().take(is) {
                let d = ts - grid.t(i);
                let e = (-case.rate() * d).exp();
                *gi = (0..=kk).map(|m| binomial(kk, m) * d.powi((kk - m) as i32) * e * j[m][0].re).sum();
            }
        }
        Direction::Past => {
            f.tail.require_declared()?;
            let j = exp_convolution(&samples, h, rate, kk, Direction::Past, &[]);
            let full = |m: usize, i: usize| if i < is { 0.0 } else { j[m][i - is].re };
            let i1 = ((INNER_START - grid.t0) / h).round() as usize;
            let at_one: Vec<f64> = (0..=kk).map(|m| full(m, i1)).collect();
            for (i, gi) in g.iter_mut().enumerate() {
                let d = grid.t(i) - INNER_START;
                let e = (case.rate() * d).exp();
                let removal: f64 = (0..=kk).map(|m| binomial(kk, m) * d.powi((kk - m) as i32) * e * at_one[m]).sum();
                *gi = full(kk, i) - removal;
            }
        }
    }
    if g.iter().any(|v| !v.is_finite()) {
        return Err(Error::Overflow("inner integral overflowed".into()));
    }
    Ok(g)
}

/// Left- and right-hand sides of the variant's inequality for `f`, and their ratio.
pub fn hardy_ratio(case: &HardyCase, f: &TestFunction, grid: &HardyGrid) -> Result<HardyRatio> {
    let case = case.validated()?;
    let tg = grid.time_grid()?;
    let g = inner(&case, f, &tg)?;
    let n = tg.n;
    let p = case.p;
    let c = case.outer_exponent();
    let y: Vec<f64> = (0..n)
        .map(|i| if g[i] == 0.0 { 0.0 } else { (p * (g[i].abs().ln() + c * tg.t(i).ln())).exp() })
        .collect();
    // the inner integral has a kink where f switches on
    let is = (((f.start - tg.t0) / tg.h) - 1e-9).ceil().max(0.0) as usize;
    let body = simpson_range(&y, tg.h, 0, is) + simpson_range(&y, tg.h, is, n - 1);
    let gt = inner_tail(&case, &f.tail)?;
    let tail = tail_power_integral(&gt, tg.t_max(), g[n - 1], 0.0, c, p, 0).map_err(|e| match e {
        Error::NotInSpace(m) => Error::ViolationWitness(format!("left-hand side diverges: {m}")),
        e => e,
    })?;
    let lhs = case.prefactor() * (body + tail);
    let fy: Vec<f64> = (0..n)
        .map(|i| {
            let v = f.eval(tg.t(i));
            if v == 0.0 {
                0.0
            } else {
                (p * (v.ln() + case.b * tg.t(i).ln())).exp()
            }
        })
        .collect();
    let f_end = f.eval(tg.t_max());
    let rhs = simpson_range(&fy, tg.h, is, n - 1)
        + tail_power_integral(&f.tail, tg.t_max(), f_end, 0.0, case.b, p, 0).map_err(|e| match e {
            Error::NotInSpace(m) => Error::InvalidInput(format!("f is not in the right-hand space: {m}")),
            e => e,
        })?;
    if rhs == 0.0 {
        return Err(Error::InvalidInput("right-hand side vanishes".into()));
    }
    if !lhs.is_finite() {
        return Err(Error::Overflow("left-hand side overflowed".into()));
    }
    Ok(HardyRatio { lhs, rhs, ratio: lhs / rhs })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MemberRatio {
    pub member_id: String,
    pub ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConstantEstimate {
    pub sup_ratio: f64,
    pub argmax_id: String,
    pub members: Vec<MemberRatio>,
}

/// Sup of the Hardy ratio over `standard_family(n, seed)`.
pub fn estimate_constant(case: &HardyCase, n: usize, seed: u64, grid: &HardyGrid) -> Result<ConstantEstimate> {
    estimate_constant_over(case, &standard_family(n, seed), grid)
}

pub fn estimate_constant_over(case: &HardyCase, family: &[TestFunction], grid: &HardyGrid) -> Result<ConstantEstimate> {
    if family.is_empty() {
        return Err(Error::InvalidInput("family must be nonempty".into()));
    }
    let members = family
        .par_iter()
        .map(|f| hardy_ratio(case, f, grid).map(|r| MemberRatio { member_id: f.id.clone(), ratio: r.ratio }))
        .collect::<Result<Vec<_>>>()?;
    let best = members.iter().fold(&members[0], |a, m| if m.ratio > a.ratio { m } else { a });
    Ok(ConstantEstimate { sup_ratio: best.ratio, argmax_id: best.member_id.clone(), members: members.clone() })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct A3Row {
    pub s: f64,
    /// Both sides carry a common factor `e^{-mu s}`.
    pub lhs_scaled: f64,
    pub rhs_scaled: f64,
    pub ratio: f64,
}

/// `|int_1^s e^{mu t} t^d| / (e^{mu s} s^d / mu)` for `mu > 0`, and
/// `int_s^inf e^{mu t} t^d / (e^{mu s} s^d / -mu)` for `mu < 0`.
pub fn a3_check(mu: f64, d: f64, s_values: &[f64]) -> Result<Vec<A3Row>> {
    if mu == 0.0 || !mu.is_finite() {
        return Err(Error::InvalidInput("mu must be nonzero".into()));
    }
    s_values
        .iter()
        .map(|&s| {
            if !(s >= HARDY_T0) {
                return Err(Error::InvalidInput(format!("s must be >= 1/10, got {s}")));
            }
            let k = |t: f64| (mu * (t - s)).exp() * t.powf(d);
            let lhs = if mu > 0.0 {
                quad::integrate(k, INNER_START, s, 1e-14)?.abs()
            } else {
                quad::integrate_to_inf(k, s, 1e-14)?
            };
            let rhs = s.powf(d) / mu.abs();
            Ok(A3Row { s, lhs_scaled: lhs, rhs_scaled: rhs, ratio: lhs / rhs })
        })
        .collect()
}
