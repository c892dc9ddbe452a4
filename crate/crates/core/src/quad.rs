//! Quadrature: composite Simpson, Gauss-Legendre, adaptive rules and the
//! exponential-kernel convolution used by every Green operator.

use crate::error::{Error, Result};
use num_complex::Complex64;
use std::sync::OnceLock;

/// Composite Simpson on uniform samples; an odd interval count closes with a 3/8 panel.
pub fn simpson(y: &[f64], h: f64) -> f64 {
    let n = y.len();
    match n {
        0 | 1 => 0.0,
        2 => 0.5 * h * (y[0] + y[1]),
        3 => h / 3.0 * (y[0] + 4.0 * y[1] + y[2]),
        4 => 3.0 * h / 8.0 * (y[0] + 3.0 * y[1] + 3.0 * y[2] + y[3]),
        _ if (n - 1) % 2 == 0 => simpson_even(y, h),
        _ => {
            let m = n - 3;
            simpson_even(&y[..m], h)
                + 3.0 * h / 8.0 * (y[m - 1] + 3.0 * y[m] + 3.0 * y[m + 1] + y[m + 2])
        }
    }
}

fn simpson_even(y: &[f64], h: f64) -> f64 {
    let n = y.len();
    let mut s = y[0] + y[n - 1];
    for (i, v) in y.iter().enumerate().take(n - 1).skip(1) {
        s += if i % 2 == 1 { 4.0 * v } else { 2.0 * v };
    }
    s * h / 3.0
}

/// Gauss-Legendre nodes and weights on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 0 { 1.0 } else if n == 1 { z } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (z * pn - pm) / (z * z - 1.0);
            let dz = pn / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

fn gl16() -> &'static (Vec<f64>, Vec<f64>) {
    static R: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    R.get_or_init(|| gauss_legendre(16))
}

/// Fixed 16-point Gauss-Legendre on [a, b].
pub fn gl_fixed<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> f64 {
    let (x, w) = gl16();
    let c = 0.5 * (a + b);
    let r = 0.5 * (b - a);
    x.iter().zip(w).map(|(xi, wi)| wi * f(c + r * xi)).sum::<f64>() * r
}

/// `(int f, int |f|)` by fixed 16-point Gauss-Legendre on [a, b].
fn gl_fixed_abs<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let (x, w) = gl16();
    let c = 0.5 * (a + b);
    let r = 0.5 * (b - a);
    let (mut v, mut m) = (0.0, 0.0);
    for (xi, wi) in x.iter().zip(w) {
        let y = f(c + r * xi);
        v += wi * y;
        m += wi * y.abs();
    }
    (v * r, m * r.abs())
}

/// Adaptive bisection on 16-point Gauss-Legendre panels. A panel is accepted when
/// its refinement changes it by at most `tol` or by rounding-level noise.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<f64> {
    const NOISE: f64 = 64.0 * f64::EPSILON;
    fn rec<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (l, la) = gl_fixed_abs(f, a, m);
        let (r, ra) = gl_fixed_abs(f, m, b);
        let both = l + r;
        if depth == 0 || (both - whole).abs() <= tol.max(NOISE * (la + ra)) {
            return both;
        }
        rec(f, a, m, l, 0.5 * tol, depth - 1) + rec(f, m, b, r, 0.5 * tol, depth - 1)
    }
    if a == b {
        return Ok(0.0);
    }
    let whole = gl_fixed(&f, a, b);
    let v = rec(&f, a, b, whole, tol, 40);
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Divergent(format!("non-finite integral on [{a}, {b}]")))
    }
}

/// Integral over `[a, inf)` by the map `t = a + L (e^y - 1)`, `y = x / (1 - x)`,
/// which turns power-law tails into exponentially decaying integrands.
pub fn integrate_to_inf<F: Fn(f64) -> f64>(f: F, a: f64, tol: f64) -> Result<f64> {
    let scale = a.abs().max(1.0);
    let g = |x: f64| {
        let d = 1.0 - x;
        let y = x / d;
        let ey = y.exp();
        if !ey.is_finite() {
            return 0.0;
        }
        let v = f(a + scale * (ey - 1.0)) * scale * ey / (d * d);
        if v.is_finite() {
            v
        } else {
            0.0
        }
    };
    integrate(g, 0.0, 1.0, tol)
}

/// Which side of `t` the kernel integrates over.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    /// `int_t^inf (s - t)^k e^{r (t - s)} f(s) ds`
    Future,
    /// `int_{t_start}^t (t - s)^k e^{r (t - s)} f(s) ds`
    Past,
}

/// Exponential-kernel convolutions of sampled `f` for all powers `0..=max_power`.
///
/// Panels use cubic interpolation of `f` with exact kernel weights and the
/// results are swept by a one-step recursion, so every exponential factor is
/// `e^{-r h}` (future) or `e^{r h}` (past). `tail[k]` seeds the sweep: the
/// contribution beyond the last node (future) or before the first node (past).
pub fn exp_convolution(
    f: &[f64],
    h: f64,
    rate: Complex64,
    max_power: usize,
    dir: Direction,
    tail: &[Complex64],
) -> Vec<Vec<Complex64>> {
    let n = f.len();
    let kk = max_power + 1;
    let zero = Complex64::new(0.0, 0.0);
    let mut out = vec![vec![zero; n]; kk];
    if n < 2 {
        return out;
    }
    let weights = PanelWeights::new(h, rate, max_power, dir, n);
    let binom = binomial_table(max_power);
    let hp: Vec<f64> = (0..kk).map(|j| h.powi(j as i32)).collect();
    let mut local = vec![zero; kk];
    match dir {
        Direction::Future => {
            let e = (-rate * h).exp();
            for k in 0..kk {
                out[k][n - 1] = tail.get(k).copied().unwrap_or(zero);
            }
            for i in (0..n - 1).rev() {
                weights.local(f, i, &mut local);
                for k in 0..kk {
                    let mut acc = zero;
                    for j in 0..=k {
                        acc += binom[k][j] * hp[k - j] * out[j][i + 1];
                    }
                    out[k][i] = local[k] + e * acc;
                }
            }
        }
        Direction::Past => {
            let e = (rate * h).exp();
            for k in 0..kk {
                out[k][0] = tail.get(k).copied().unwrap_or(zero);
            }
            for i in 0..n - 1 {
                weights.local(f, i, &mut local);
                for k in 0..kk {
                    let mut acc = zero;
                    for j in 0..=k {
                        acc += binom[k][j] * hp[k - j] * out[j][i];
                    }
                    out[k][i + 1] = local[k] + e * acc;
                }
            }
        }
    }
    out
}

fn binomial_table(k: usize) -> Vec<Vec<f64>> {
    let mut t = vec![vec![0.0; k + 1]; k + 1];
    for i in 0..=k {
        t[i][0] = 1.0;
        for j in 1..=i {
            t[i][j] = t[i - 1][j - 1] + if j < i { t[i - 1][j] } else { 0.0 };
        }
    }
    t
}

struct PanelWeights {
    n: usize,
    // [shape][power][node]; shape 0 = first panel, 1 = interior, 2 = last panel
    w: [Vec<[Complex64; 4]>; 3],
    small: Option<Vec<[Complex64; 2]>>,
}

impl PanelWeights {
    fn new(h: f64, rate: Complex64, max_power: usize, dir: Direction, n: usize) -> Self {
        let (xs, ws) = gl16();
        let sub = ((rate.norm() * h * 2.0).ceil() as usize).clamp(1, 4096);
        let kernel = |x: f64, k: usize| -> Complex64 {
            match dir {
                Direction::Future => (-rate * x).exp() * x.powi(k as i32),
                Direction::Past => (rate * (h - x)).exp() * (h - x).powi(k as i32),
            }
        };
        // quadrature points on [0, h] shared by every basis function
        let mut pts = Vec::with_capacity(sub * xs.len());
        let sh = h / sub as f64;
        for s in 0..sub {
            let c = (s as f64 + 0.5) * sh;
            for (xi, wi) in xs.iter().zip(ws) {
                pts.push((c + 0.5 * sh * xi, 0.5 * sh * wi));
            }
        }
        let lagrange = |nodes: &[f64], j: usize, x: f64| -> f64 {
            let mut v = 1.0;
            for (m, &xm) in nodes.iter().enumerate() {
                if m != j {
                    v *= (x - xm) / (nodes[j] - xm);
                }
            }
            v
        };
        let build = |offsets: [f64; 4]| -> Vec<[Complex64; 4]> {
            let nodes: Vec<f64> = offsets.iter().map(|o| o * h).collect();
            (0..=max_power)
                .map(|k| {
                    let mut row = [Complex64::new(0.0, 0.0); 4];
                    for &(x, w) in &pts {
                        let kv = kernel(x, k) * w;
                        for (j, r) in row.iter_mut().enumerate() {
                            *r += kv * lagrange(&nodes, j, x);
                        }
                    }
                    row
                })
                .collect()
        };
        let small = if n < 4 {
            let nodes = [0.0, h];
            Some(
                (0..=max_power)
                    .map(|k| {
                        let mut row = [Complex64::new(0.0, 0.0); 2];
                        for &(x, w) in &pts {
                            let kv = kernel(x, k) * w;
                            for (j, r) in row.iter_mut().enumerate() {
                                *r += kv * lagrange(&nodes, j, x);
                            }
                        }
                        row
                    })
                    .collect(),
            )
        } else {
            None
        };
        PanelWeights {
            n,
            w: [build([0.0, 1.0, 2.0, 3.0]), build([-1.0, 0.0, 1.0, 2.0]), build([-2.0, -1.0, 0.0, 1.0])],
            small,
        }
    }

    fn local(&self, f: &[f64], i: usize, out: &mut [Complex64]) {
        if let Some(s) = &self.small {
            for (k, o) in out.iter_mut().enumerate() {
                *o = s[k][0] * f[i] + s[k][1] * f[i + 1];
            }
            return;
        }
        let (shape, start) = if i == 0 {
            (0, 0)
        } else if i + 2 >= self.n {
            (2, self.n - 4)
        } else {
            (1, i - 1)
        };
        let w = &self.w[shape];
        for (k, o) in out.iter_mut().enumerate() {
            let row = &w[k];
            *o = row[0] * f[start] + row[1] * f[start + 1] + row[2] * f[start + 2] + row[3] * f[start + 3];
        }
    }
}
