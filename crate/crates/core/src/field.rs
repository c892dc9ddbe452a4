//! Grid-sampled fields on half-cylinders in Fourier form, their projections,
//! weighted norms, strips and the extension across `t0`.

use crate::diff;
use crate::error::{Error, Result};
use crate::operator::{TidOperator, WeightSpec};
use crate::quad;
use crate::spectrum::LinkSpectrum;
use crate::tail::Tail;

/// Uniform grid `t_i = t0 + i h`, `i < n`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TimeGrid {
    pub t0: f64,
    pub h: f64,
    pub n: usize,
}

impl TimeGrid {
    pub fn new(t0: f64, t_max: f64, n: usize) -> Result<Self> {
        if !(t0 >= 0.1) || !t0.is_finite() {
            return Err(Error::InvalidInput(format!("t0 must be >= 0.1, got {t0}")));
        }
        if !(t_max > t0 + 1.0) || !t_max.is_finite() {
            return Err(Error::InvalidInput(format!("t_max must exceed t0 + 1, got {t_max}")));
        }
        if n < 16 {
            return Err(Error::InvalidInput(format!("grid needs at least 16 samples, got {n}")));
        }
        Ok(TimeGrid { t0, h: (t_max - t0) / (n - 1) as f64, n })
    }

    /// Grid from spacing, without the half-cylinder checks.
    pub fn from_spacing(t0: f64, h: f64, n: usize) -> Self {
        TimeGrid { t0, h, n }
    }

    pub fn t(&self, i: usize) -> f64 {
        self.t0 + i as f64 * self.h
    }

    pub fn t_max(&self) -> f64 {
        self.t(self.n - 1)
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.t(i)).collect()
    }

    /// Sub-grid starting at index `start`.
    pub fn suffix(&self, start: usize) -> TimeGrid {
        TimeGrid { t0: self.t(start), h: self.h, n: self.n - start }
    }

    /// Index of the first node at or after `t` (within a small tolerance).
    pub fn index_at_or_after(&self, t: f64) -> usize {
        let x = (t - self.t0) / self.h;
        let i = (x - 1e-9).ceil().max(0.0) as usize;
        i.min(self.n - 1)
    }
}

/// `(m - k, m + k)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Strip {
    pub m: f64,
    pub half_width: f64,
}

impl Strip {
    pub fn new(m: f64, half_width: f64) -> Result<Self> {
        if !(half_width > 0.0) {
            return Err(Error::InvalidInput("strip half-width must be positive".into()));
        }
        Ok(Strip { m, half_width })
    }

    pub fn unit(m: f64) -> Self {
        Strip { m, half_width: 1.0 }
    }

    /// Grid indices with `t_i` inside the open strip.
    pub fn indices(&self, grid: &TimeGrid) -> std::ops::Range<usize> {
        let lo = self.m - self.half_width;
        let hi = self.m + self.half_width;
        let a = ((lo - grid.t0) / grid.h).floor() as i64 + 1;
        let b = ((hi - grid.t0) / grid.h).ceil() as i64;
        let a = a.clamp(0, grid.n as i64) as usize;
        let b = b.clamp(0, grid.n as i64) as usize;
        a..b.max(a)
    }
}

/// Fourier coefficients `u_lambda(t_i)`, one row per eigen-direction (multiplicity expanded).
#[derive(Clone, Debug, PartialEq)]
pub struct CylField {
    pub grid: TimeGrid,
    pub spectrum: LinkSpectrum,
    pub coeffs: Vec<Vec<f64>>,
    pub tail: Tail,
}

impl CylField {
    pub fn new(grid: TimeGrid, spectrum: LinkSpectrum, coeffs: Vec<Vec<f64>>, tail: Tail) -> Result<Self> {
        if coeffs.len() != spectrum.total_dim() {
            return Err(Error::InvalidInput(format!(
                "field has {} components, spectrum dimension is {}",
                coeffs.len(),
                spectrum.total_dim()
            )));
        }
        for c in &coeffs {
            if c.len() != grid.n {
                return Err(Error::InvalidInput(format!("coefficient length {} != grid size {}", c.len(), grid.n)));
            }
            if c.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidInput("non-finite coefficient".into()));
            }
        }
        Ok(CylField { grid, spectrum, coeffs, tail })
    }

    pub fn zeros(grid: TimeGrid, spectrum: LinkSpectrum, tail: Tail) -> Self {
        let coeffs = vec![vec![0.0; grid.n]; spectrum.total_dim()];
        CylField { grid, spectrum, coeffs, tail }
    }

    /// Field with `u_i(t) = f(i, Lambda_i, t)`.
    pub fn from_fn<F: Fn(usize, f64, f64) -> f64>(grid: TimeGrid, spectrum: LinkSpectrum, tail: Tail, f: F) -> Self {
        let lambdas = spectrum.expanded();
        let coeffs = lambdas
            .iter()
            .enumerate()
            .map(|(i, &l)| (0..grid.n).map(|j| f(i, l, grid.t(j))).collect())
            .collect();
        CylField { grid, spectrum, coeffs, tail }
    }

    pub fn lambdas(&self) -> Vec<f64> {
        self.spectrum.expanded()
    }

    /// Pointwise mode-l2 envelope `|xi|(t_i)`.
    pub fn envelope(&self) -> Vec<f64> {
        envelope(&self.coeffs, self.grid.n)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().flatten().all(|&v| v == 0.0)
    }

    pub fn restrict(&self, start: usize) -> CylField {
        CylField {
            grid: self.grid.suffix(start),
            spectrum: self.spectrum.clone(),
            coeffs: self.coeffs.iter().map(|c| c[start..].to_vec()).collect(),
            tail: self.tail,
        }
    }

    pub fn with_tail(mut self, tail: Tail) -> Self {
        self.tail = tail;
        self
    }

    pub fn map_coeffs<F: Fn(&[f64]) -> Vec<f64>>(&self, f: F) -> CylField {
        CylField {
            grid: self.grid,
            spectrum: self.spectrum.clone(),
            coeffs: self.coeffs.iter().map(|c| f(c)).collect(),
            tail: self.tail,
        }
    }

    /// `self + a * other` on a shared grid.
    pub fn axpy(&self, a: f64, other: &CylField) -> Result<CylField> {
        self.check_compatible(other)?;
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(x, y)| x.iter().zip(y).map(|(x, y)| x + a * y).collect())
            .collect();
        Ok(CylField { grid: self.grid, spectrum: self.spectrum.clone(), coeffs, tail: self.tail.slower(other.tail) })
    }

    pub fn scale(&self, a: f64) -> CylField {
        self.map_coeffs(|c| c.iter().map(|v| a * v).collect())
    }

    pub fn check_compatible(&self, other: &CylField) -> Result<()> {
        if self.grid != other.grid || self.coeffs.len() != other.coeffs.len() {
            return Err(Error::InvalidInput("fields live on different grids or spectra".into()));
        }
        Ok(())
    }

    /// Sup of the envelope over grid nodes with `a <= t <= b`.
    pub fn sup_on(&self, a: f64, b: f64) -> f64 {
        let env = self.envelope();
        (0..self.grid.n)
            .filter(|&i| {
                let t = self.grid.t(i);
                t >= a - 1e-12 && t <= b + 1e-12
            })
            .map(|i| env[i])
            .fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &CylField) -> Result<f64> {
        self.check_compatible(other)?;
        Ok(self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .flat_map(|(x, y)| x.iter().zip(y).map(|(x, y)| (x - y).abs()))
            .fold(0.0, f64::max))
    }
}

pub(crate) fn envelope(coeffs: &[Vec<f64>], n: usize) -> Vec<f64> {
    (0..n).map(|i| coeffs.iter().map(|c| c[i] * c[i]).sum::<f64>().sqrt()).collect()
}

/// Split into kernel-parallel and perpendicular parts at weight `beta`.
pub fn project(field: &CylField, op: &TidOperator, beta: f64) -> (CylField, CylField) {
    let lambdas = field.lambdas();
    let zero = vec![0.0; field.grid.n];
    let mut par = field.clone();
    let mut perp = field.clone();
    for (i, &l) in lambdas.iter().enumerate() {
        if op.is_parallel(l, beta) {
            perp.coeffs[i] = zero.clone();
        } else {
            par.coeffs[i] = zero.clone();
        }
    }
    (par, perp)
}

/// `int_T^inf (amp e^{-beta t} t^c s(t) g(t))^p dt` where `s` is the tail shape
/// and `g` is its `d`-th logarithmic derivative factor.
pub(crate) fn tail_power_integral(tail: &Tail, t_end: f64, amp: f64, beta: f64, c: f64, p: f64, d: u8) -> Result<f64> {
    if amp == 0.0 {
        return Ok(0.0);
    }
    let (rho, q) = match tail.params() {
        None => {
            tail.require_declared()?;
            return Ok(0.0);
        }
        Some(x) => x,
    };
    let decay = beta + rho;
    if decay < 0.0 {
        return Err(Error::NotInSpace(format!("tail decay rate {decay} is negative")));
    }
    if decay == 0.0 {
        // derivative factors of a pure power tail add powers of 1/t
        let lead = if d == 0 {
            q
        } else if q == 0.0 {
            return Ok(0.0);
        } else {
            q + d as f64
        };
        if p * (c - lead) >= -1.0 {
            return Err(Error::NotInSpace(format!(
                "weighted tail t^({c}) against power {lead} is not p-integrable"
            )));
        }
        // pure power: the d-th derivative factor is q (q + 1) ... / t^d
        let coef = match d {
            0 => 1.0,
            1 => q.abs(),
            _ => (q * (q + 1.0)).abs(),
        };
        if coef == 0.0 {
            return Ok(0.0);
        }
        let e = p * (c - q - d as f64) + 1.0;
        let log = p * (amp.abs().ln() + coef.ln() + q * t_end.ln() + rho * t_end) + e * t_end.ln() - (-e).ln();
        return Ok(log.exp());
    }
    let la = amp.abs().ln();
    let g = |t: f64| -> f64 {
        let (d1, d2) = tail.log_derivs(t);
        let factor = match d {
            0 => 1.0,
            1 => d1 - beta,
            _ => d2 - 2.0 * beta * d1 + beta * beta,
        };
        if factor == 0.0 {
            return 0.0;
        }
        let log = la - beta * t + c * t.ln() - rho * (t - t_end) - q * (t / t_end).ln() + factor.abs().ln();
        (p * log).exp()
    };
    quad::integrate_to_inf(g, t_end, 1e-14)
}

/// Simpson value of `int (e^{-beta t} t^c |u|)^p` over the grid, plus the declared tail.
/// `u` is the `d`-th derivative of a function whose value at the last node is `amp`.
#[allow(clippy::too_many_arguments)]
pub(crate) fn weighted_integral(u: &[f64], grid: &TimeGrid, beta: f64, c: f64, p: f64, tail: &Tail, d: u8, amp: f64) -> Result<f64> {
    tail.require_declared()?;
    let y: Vec<f64> = u
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            if v == 0.0 {
                0.0
            } else {
                let t = grid.t(i);
                (p * (v.abs().ln() - beta * t + c * t.ln())).exp()
            }
        })
        .collect();
    let body = quad::simpson(&y, grid.h);
    let tail_v = tail_power_integral(tail, grid.t_max(), amp, beta, c, p, d)?;
    Ok(body + tail_v)
}

/// `( int_{t0}^inf |e^{-beta t} t^b xi|^p )^{1/p}`, with the mode-l2 envelope for `p != 2`.
pub fn weighted_lp_norm(field: &CylField, beta: f64, b: f64, p: f64) -> Result<f64> {
    if !(p >= 2.0) {
        return Err(Error::InvalidInput(format!("p must be >= 2, got {p}")));
    }
    field.tail.require_declared()?;
    if field.is_zero() {
        return Ok(0.0);
    }
    if p == 2.0 {
        let mut s = 0.0;
        for c in &field.coeffs {
            s += weighted_integral(c, &field.grid, beta, b, 2.0, &field.tail, 0, c[c.len() - 1])?;
        }
        return Ok(s.sqrt());
    }
    let env = field.envelope();
    Ok(weighted_integral(&env, &field.grid, beta, b, p, &field.tail, 0, env[env.len() - 1])?.powf(1.0 / p))
}

/// The four norms of a field: hatted (domain) and plain (target), Sobolev and Schauder.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct GraphNorms {
    #[serde(rename = "hatW")]
    pub hat_w: f64,
    #[serde(rename = "W")]
    pub w: f64,
    #[serde(rename = "hatC")]
    pub hat_c: f64,
    #[serde(rename = "C")]
    pub c: f64,
}

/// Conjugated samples `u = e^{-beta t} xi` and their derivatives for one component.
struct Jet {
    u: Vec<f64>,
    d1: Vec<f64>,
    d2: Vec<f64>,
}

fn conjugated_jet(xi: &[f64], grid: &TimeGrid, beta: f64, second: bool) -> Jet {
    let u: Vec<f64> = xi.iter().enumerate().map(|(i, v)| v * (-beta * grid.t(i)).exp()).collect();
    let d1 = diff::d1(&u, grid.h);
    let d2 = if second { diff::d2(&u, grid.h) } else { Vec::new() };
    Jet { u, d1, d2 }
}

/// Sobolev graph norms `(hatW, W)` at `p = 2` in the mode-sum form.
pub fn sobolev_graph_norms_l2(field: &CylField, op: &TidOperator, w: &WeightSpec) -> Result<(f64, f64)> {
    field.tail.require_declared()?;
    let grid = &field.grid;
    let second = op.order() == 2;
    let ctail = field.tail.conjugate(w.beta);
    let mut hat = 0.0;
    let mut plain = 0.0;
    for (xi, &lam) in field.coeffs.iter().zip(&field.lambdas()) {
        if xi.iter().all(|&v| v == 0.0) {
            continue;
        }
        let jet = conjugated_jet(xi, grid, w.beta, second);
        let amp = jet.u[grid.n - 1];
        let int = |s: &[f64], c: f64, d: u8| weighted_integral(s, grid, 0.0, c, 2.0, &ctail, d, amp);
        let l = op.shifted_eigenvalue(lam, w.beta);
        if op.is_parallel(lam, w.beta) {
            hat += int(&jet.u, w.b - 1.0, 0)? + int(&jet.d1, w.b, 1)?;
            if second {
                hat += int(&jet.d2, w.b, 2)?;
            }
            plain += int(&jet.u, w.b, 0)?;
        } else {
            let u2 = int(&jet.u, w.gamma, 0)?;
            let du2 = int(&jet.d1, w.gamma, 1)?;
            if second {
                hat += (1.0 + l * l) * u2 + (1.0 + l.abs()) * du2 + int(&jet.d2, w.gamma, 2)?;
            } else {
                hat += (1.0 + l * l) * u2 + du2;
            }
            plain += u2;
        }
    }
    Ok((hat.sqrt(), plain.sqrt()))
}

/// Envelope-based Sobolev graph norms for general `p` (sum-of-norms form).
fn sobolev_graph_norms_lp(field: &CylField, op: &TidOperator, w: &WeightSpec) -> Result<(f64, f64)> {
    let grid = &field.grid;
    let p = w.p;
    let second = op.order() == 2;
    let n = grid.n;
    let lambdas = field.lambdas();
    let scale = |l: f64| if second { l.abs().sqrt() } else { l.abs() };
    let mut perp_jets: Vec<(Vec<f64>, Vec<f64>)> = Vec::new();
    let mut par: Vec<Vec<f64>> = Vec::new();
    let mut drift: Vec<Vec<f64>> = Vec::new();
    let mut drift2: Vec<Vec<f64>> = Vec::new();
    for (xi, &lam) in field.coeffs.iter().zip(&lambdas) {
        let jet = conjugated_jet(xi, grid, 0.0, second);
        if op.is_parallel(lam, w.beta) {
            par.push(jet.u.clone());
            drift.push(jet.d1.iter().zip(&jet.u).map(|(d, u)| d - w.beta * u).collect());
            if second {
                drift2.push(jet.d2.iter().zip(&jet.u).map(|(d, u)| d - w.beta * w.beta * u).collect());
            }
        } else {
            let s = scale(lam);
            let grad: Vec<f64> = (0..n).map(|i| (jet.d1[i].powi(2) + (s * jet.u[i]).powi(2)).sqrt()).collect();
            perp_jets.push((jet.u, grad));
        }
    }
    let tail = field.tail;
    let norm = |rows: &[Vec<f64>], c: f64| -> Result<f64> {
        if rows.is_empty() {
            return Ok(0.0);
        }
        let env = envelope(rows, n);
        // derivative rows share the value tail amplitude only approximately; use the row itself
        Ok(weighted_integral(&env, grid, w.beta, c, p, &tail, 0, env[n - 1])?.powf(1.0 / p))
    };
    let perp_u: Vec<Vec<f64>> = perp_jets.iter().map(|j| j.0.clone()).collect();
    let perp_g: Vec<Vec<f64>> = perp_jets.iter().map(|j| j.1.clone()).collect();
    let perp0 = norm(&perp_u, w.gamma)?;
    let hat = perp0
        + norm(&perp_g, w.gamma)?
        + norm(&par, w.b - 1.0)?
        + norm(&drift, w.b)?
        + if second { norm(&drift2, w.b)? } else { 0.0 };
    let plain = perp0 + norm(&par, w.b)?;
    Ok((hat, plain))
}

/// Weighted Schauder norm `sup_m m^c e^{-beta m} |xi|_{C^{K,alpha}(S_m)}` of a vector function.
///
/// The order-`j` jet of a component with link scale `s` is `(s^{j-i} d^i xi)_{i <= j}`;
/// Hoelder quotients use at most 256 nodes per strip.
fn schauder_norm(
    rows: &[(Vec<f64>, f64)],
    grid: &TimeGrid,
    k: usize,
    alpha: f64,
    beta: f64,
    c: f64,
    tail: &Tail,
) -> Result<f64> {
    if rows.iter().all(|(r, _)| r.iter().all(|&v| v == 0.0)) {
        return Ok(0.0);
    }
    tail.require_declared()?;
    let h = grid.h;
    // derivatives d^0..d^k of each row
    let derivs: Vec<Vec<Vec<f64>>> = rows
        .iter()
        .map(|(r, _)| {
            let mut ds = vec![r.clone()];
            for j in 1..=k {
                let next = if j >= 2 { diff::d2(&ds[j - 2], h) } else { diff::d1(&ds[j - 1], h) };
                ds.push(next);
            }
            ds
        })
        .collect();
    let jet_sq = |i: usize, j: usize| -> f64 {
        let mut s = 0.0;
        for (row, (_, sc)) in derivs.iter().zip(rows) {
            for m in 0..=j {
                s += (sc.powi((j - m) as i32) * row[m][i]).powi(2);
            }
        }
        s
    };
    let mut best: f64 = 0.0;
    let mut m = grid.t0 + 1.0;
    while m + 1.0 <= grid.t_max() + 1e-9 {
        let idx = Strip::unit(m).indices(grid);
        if idx.is_empty() {
            m += 1.0;
            continue;
        }
        let mut val = 0.0;
        for j in 0..=k {
            val += idx.clone().map(|i| jet_sq(i, j).sqrt()).fold(0.0, f64::max);
        }
        let stride = (idx.len() / 256).max(1);
        let nodes: Vec<usize> = idx.clone().step_by(stride).collect();
        let top: Vec<Vec<f64>> = nodes
            .iter()
            .map(|&i| {
                let mut v = Vec::new();
                for (row, (_, sc)) in derivs.iter().zip(rows) {
                    for mm in 0..=k {
                        v.push(sc.powi((k - mm) as i32) * row[mm][i]);
                    }
                }
                v
            })
            .collect();
        let mut holder: f64 = 0.0;
        for a in 0..nodes.len() {
            for b in a + 1..nodes.len() {
                let dist: f64 = top[a].iter().zip(&top[b]).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
                let dt = (nodes[b] - nodes[a]) as f64 * h;
                holder = holder.max(dist / dt.powf(alpha));
            }
        }
        val += holder;
        best = best.max((c * m.ln() - beta * m).exp() * val);
        m += 1.0;
    }
    // strips beyond the grid, from the declared tail
    if let Some((rho, q)) = tail.params() {
        let t_end = grid.t_max();
        let last = grid.n - 1;
        let amp = (0..=k).map(|j| jet_sq(last, j).sqrt()).sum::<f64>();
        if amp > 0.0 {
            let decay = beta + rho;
            if decay < 0.0 || (decay == 0.0 && c - q > 0.0) {
                return Err(Error::NotInSpace("weighted strip norms grow along the tail".into()));
            }
            for j in 1..=200 {
                let mm = t_end + j as f64;
                let v = (c * mm.ln() - beta * mm).exp() * amp * tail.shape(t_end, mm - 1.0);
                best = best.max(v);
            }
        }
    }
    Ok(best)
}

fn schauder_graph_norms(field: &CylField, op: &TidOperator, w: &WeightSpec) -> Result<(f64, f64)> {
    let grid = &field.grid;
    let second = op.order() == 2;
    let m0 = op.order() as usize;
    let kk = w.k + m0;
    if kk > 3 {
        return Err(Error::InvalidInput("Schauder norms support total regularity at most 3".into()));
    }
    let scale = |l: f64| if second { l.abs().sqrt() } else { l.abs() };
    let mut perp = Vec::new();
    let mut par = Vec::new();
    let mut drift = Vec::new();
    let mut drift2 = Vec::new();
    for (xi, &lam) in field.coeffs.iter().zip(&field.lambdas()) {
        if op.is_parallel(lam, w.beta) {
            let d1 = diff::d1(xi, grid.h);
            drift.push((d1.iter().zip(xi).map(|(d, x)| d - w.beta * x).collect::<Vec<f64>>(), scale(lam)));
            if second {
                let d2 = diff::d2(xi, grid.h);
                drift2.push((d2.iter().zip(xi).map(|(d, x)| d - w.beta * w.beta * x).collect::<Vec<f64>>(), scale(lam)));
            }
            par.push((xi.clone(), scale(lam)));
        } else {
            perp.push((xi.clone(), scale(lam)));
        }
    }
    let t = &field.tail;
    let sn = |rows: &[(Vec<f64>, f64)], k: usize, c: f64| schauder_norm(rows, grid, k, w.alpha, w.beta, c, t);
    let hat = sn(&perp, kk, w.gamma)?
        + sn(&par, kk, w.b - 1.0)?
        + sn(&drift, kk - 1, w.b)?
        + if second { sn(&drift2, kk - 2, w.b)? } else { 0.0 };
    let plain = sn(&perp, w.k, w.gamma)? + sn(&par, w.k, w.b)?;
    Ok((hat, plain))
}

/// All four graph norms at weight `w`.
///
/// Sobolev norms use regularity `(m0, 0)` for `(hatW, W)`; at `p = 2` they are
/// the mode sums of squared weighted integrals, otherwise sums of envelope norms.
/// Schauder norms use `(k + m0, k)`.
pub fn graph_norms(field: &CylField, op: &TidOperator, w: &WeightSpec) -> Result<GraphNorms> {
    let w = w.validated()?;
    field.tail.require_declared()?;
    if field.is_zero() {
        return Ok(GraphNorms { hat_w: 0.0, w: 0.0, hat_c: 0.0, c: 0.0 });
    }
    let (hat_w, plain_w) =
        if w.p == 2.0 { sobolev_graph_norms_l2(field, op, &w)? } else { sobolev_graph_norms_lp(field, op, &w)? };
    let (hat_c, plain_c) = schauder_graph_norms(field, op, &w)?;
    Ok(GraphNorms { hat_w, w: plain_w, hat_c, c: plain_c })
}

/// Smooth cutoff: 1 for `x <= 0`, 0 for `x >= 1`.
pub fn cutoff(x: f64) -> f64 {
    let psi = |y: f64| if y <= 0.0 { 0.0 } else { (-1.0 / y).exp() };
    if x <= 0.0 {
        1.0
    } else if x >= 1.0 {
        0.0
    } else {
        let a = psi(1.0 - x);
        a / (a + psi(x))
    }
}

/// Width of the reflected collar below `t0`.
pub const EXTENSION_COLLAR: f64 = 0.01;

/// L2 inflation bound of [`extend`]: the collar adds at most the input's own mass.
pub const EXTENSION_INFLATION: f64 = std::f64::consts::SQRT_2;

/// Even reflection across `t0` times a smooth cutoff, prepending `extra`
/// zero nodes beyond the collar. Values depend only on grid indices, so a
/// translated input gives a translated output.
pub fn extend(field: &CylField, extra: usize) -> Result<CylField> {
    let g = field.grid;
    if g.t_max() - g.t0 < 1.0 - 1e-12 {
        return Err(Error::InvalidInput("extension needs data on at least [t0, t0 + 1]".into()));
    }
    let collar = (EXTENSION_COLLAR / g.h).ceil() as usize;
    let k = collar + extra;
    if collar >= g.n {
        return Err(Error::InvalidInput("grid too coarse for the extension collar".into()));
    }
    let weights: Vec<f64> = (1..=k).map(|j| if j < g.n { cutoff(j as f64 * g.h / EXTENSION_COLLAR) } else { 0.0 }).collect();
    let coeffs = field
        .coeffs
        .iter()
        .map(|c| {
            let mut out = Vec::with_capacity(k + g.n);
            for j in (1..=k).rev() {
                let w = weights[j - 1];
                out.push(if w == 0.0 { 0.0 } else { w * c[j] });
            }
            out.extend_from_slice(c);
            out
        })
        .collect();
    let grid = TimeGrid::from_spacing(g.t0 - k as f64 * g.h, g.h, g.n + k);
    Ok(CylField { grid, spectrum: field.spectrum.clone(), coeffs, tail: field.tail })
}
