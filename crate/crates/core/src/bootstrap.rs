//! Kernel elements of perturbed first-order operators and their decay rates.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{weighted_lp_norm, CylField, Strip, TimeGrid};
use crate::green::BSide;
use crate::inverse::{InverseHandle, PerturbationKind, PerturbationSpec, Slot};
use crate::ode::Dopri5;
use crate::operator::TidOperator;
use crate::spectrum::LinkSpectrum;
use crate::tail::Tail;

pub const BOOT_T0: f64 = 2.0;
pub const BOOT_T_END: f64 = 45.0;
pub const BOOT_N: usize = 10_001;
/// Strips closer than this to the start are transient and skipped by the fit.
pub const FIT_MARGIN: f64 = 5.0;
pub const MIN_STRIPS: usize = 30;
pub const KERNEL_RESIDUAL_TOL: f64 = 1e-8;
/// `b = -1/2 + NORM_EPS` in the normalizing weight.
pub const NORM_EPS: f64 = 0.1;
/// Start times of successive S-iterates are this far apart.
pub const STAGE_SPACING: f64 = 0.5;
const RELAX_TOL: f64 = 1e-14;
const RELAX_MAX_SWEEPS: usize = 80;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Seed {
    pub lambda: f64,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BootstrapRun {
    pub op: TidOperator,
    pub perturbation: Option<PerturbationSpec>,
    pub beta: f64,
    pub t0: f64,
    pub t_end: f64,
    pub n: usize,
    pub seeds: Vec<Seed>,
    pub iterations: usize,
    pub h0: Option<CylField>,
}

impl BootstrapRun {
    pub fn new(op: TidOperator, beta: f64, seeds: Vec<Seed>) -> Result<Self> {
        let run = BootstrapRun {
            op,
            perturbation: None,
            beta,
            t0: BOOT_T0,
            t_end: BOOT_T_END,
            n: BOOT_N,
            seeds,
            iterations: 3,
            h0: None,
        };
        run.validate()?;
        Ok(run)
    }

    pub fn with_perturbation(mut self, p: PerturbationSpec) -> Result<Self> {
        p.validate(Some(self.op.spectrum().total_dim()))?;
        if p.acts_on != Slot::Identity {
            return Err(Error::InvalidInput("bootstrap perturbations must act on the identity slot".into()));
        }
        self.perturbation = Some(p);
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.op.order() != 1 {
            return Err(Error::InvalidInput("bootstrap runs use first-order operators".into()));
        }
        self.op.require_not_super(self.beta)?;
        self.op.require_not_super(self.beta_lower()?)?;
        TimeGrid::new(self.t0, self.t_end, self.n)?;
        if self.seeds.is_empty() {
            return Err(Error::InvalidInput("at least one seed is required".into()));
        }
        for s in &self.seeds {
            if !s.value.is_finite() {
                return Err(Error::InvalidInput("seed values must be finite".into()));
            }
            if s.lambda >= self.beta {
                return Err(Error::InvalidInput(format!(
                    "seed on lambda = {} does not decay against weight beta = {}",
                    s.lambda, self.beta
                )));
            }
            if !self.op.spectrum().lambdas().iter().any(|&l| (l - s.lambda).abs() <= 1e-12) {
                return Err(Error::InvalidInput(format!("seed lambda {} is not an eigenvalue", s.lambda)));
            }
        }
        Ok(())
    }

    /// Largest indicial root strictly below `beta`.
    pub fn beta_lower(&self) -> Result<f64> {
        Ok(self.op.adjacent_roots(self.beta)?.0)
    }

    pub fn grid(&self) -> Result<TimeGrid> {
        TimeGrid::new(self.t0, self.t_end, self.n)
    }

    fn decay_exponent(&self) -> f64 {
        match self.perturbation.as_ref().map(|p| &p.kind) {
            Some(PerturbationKind::CoefficientDecay { l, .. }) | Some(PerturbationKind::ModeCoupling { l, .. }) => *l,
            _ => 0.0,
        }
    }

    fn handle(&self, t0: f64) -> Result<InverseHandle> {
        let h = InverseHandle::new(self.op.clone(), self.beta, BSide::Plus, t0)?;
        match &self.perturbation {
            Some(p) => h.with_perturbation(p.clone()),
            None => Ok(h),
        }
    }
}

/// Symmetric coupling with unit entries between the eigen-directions of `a` and `b`.
pub fn two_mode_coupling(spectrum: &LinkSpectrum, a: f64, b: f64) -> Result<Vec<Vec<f64>>> {
    let lam = spectrum.expanded();
    let find = |x: f64| {
        lam.iter()
            .position(|&l| (l - x).abs() <= 1e-12)
            .ok_or_else(|| Error::InvalidInput(format!("{x} is not an eigenvalue")))
    };
    let (i, j) = (find(a)?, find(b)?);
    if i == j {
        return Err(Error::InvalidInput("coupled eigenvalues must differ".into()));
    }
    let mut m = vec![vec![0.0; lam.len()]; lam.len()];
    m[i][j] = 1.0;
    m[j][i] = 1.0;
    Ok(m)
}

/// Four-point Lagrange interpolation of grid samples.
fn interp(u: &[f64], grid: &TimeGrid, t: f64) -> f64 {
    let x = (t - grid.t0) / grid.h;
    let i = (x.floor() as i64 - 1).clamp(0, grid.n as i64 - 4) as usize;
    let s = x - i as f64;
    let (a, b, c, d) = (u[i], u[i + 1], u[i + 2], u[i + 3]);
    let l0 = -(s - 1.0) * (s - 2.0) * (s - 3.0) / 6.0;
    let l1 = s * (s - 2.0) * (s - 3.0) / 2.0;
    let l2 = -s * (s - 1.0) * (s - 3.0) / 2.0;
    let l3 = s * (s - 1.0) * (s - 2.0) / 6.0;
    a * l0 + b * l1 + c * l2 + d * l3
}

/// A kernel element of `P = P0 + perturbation`, normalized in the weighted L2 norm.
///
/// Directions decaying against `beta` are integrated forward from the seeds; the others are
/// integrated backward from zero at the far end, and the two sweeps alternate until the
/// coupled system is consistent.
pub fn make_kernel_element(run: &BootstrapRun) -> Result<CylField> {
    run.validate()?;
    let grid = run.grid()?;
    let spectrum = run.op.spectrum().clone();
    let lam = spectrum.expanded();
    let dim = lam.len();
    let pert = run.perturbation.as_ref().filter(|p| !p.is_trivial());
    // entry (i, j) of the coupling matrix, before the profile
    let coupling = |i: usize, j: usize| -> f64 {
        match pert.map(|p| &p.kind) {
            None => 0.0,
            Some(PerturbationKind::ModeCoupling { matrix, .. }) => matrix[i][j],
            Some(_) => {
                if i == j {
                    1.0
                } else {
                    0.0
                }
            }
        }
    };
    let profile = |t: f64| pert.map_or(0.0, |p| p.profile(t));

    let mut init = vec![0.0; dim];
    for s in &run.seeds {
        let i = lam.iter().position(|&l| (l - s.lambda).abs() <= 1e-12).unwrap();
        init[i] += s.value;
    }
    // components reachable from the seeds through the coupling graph
    let mut active: Vec<bool> = init.iter().map(|&v| v != 0.0).collect();
    loop {
        let mut grew = false;
        for i in 0..dim {
            if !active[i] && (0..dim).any(|j| active[j] && coupling(i, j) != 0.0) {
                active[i] = true;
                grew = true;
            }
        }
        if !grew {
            break;
        }
    }
    let forward: Vec<usize> = (0..dim).filter(|&i| active[i] && lam[i] < run.beta).collect();
    let backward: Vec<usize> = (0..dim).filter(|&i| active[i] && lam[i] >= run.beta).collect();
    let coupled = (0..dim).any(|i| active[i] && (0..dim).any(|j| j != i && active[j] && coupling(i, j) != 0.0));

    let slowest = forward.iter().map(|&i| lam[i]).fold(f64::NEG_INFINITY, f64::max);
    let source_tail = Tail::Asymptotic { exp_rate: -slowest, power: run.decay_exponent() };
    let times = grid.times();
    let rev: Vec<f64> = times.iter().rev().copied().collect();
    let scale = init.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let ode = Dopri5 { atol: 1e-16 * scale, ..Dopri5::default() };
    let mut u = vec![vec![0.0; grid.n]; dim];
    let mut prev_change = f64::INFINITY;
    let mut growth = 0;
    for sweep in 0.. {
        let mut change = 0.0f64;
        for &i in forward.iter().chain(&backward) {
            let is_fwd = lam[i] < run.beta;
            let others: Vec<(usize, f64)> =
                (0..dim).filter(|&j| j != i && active[j]).map(|j| (j, coupling(i, j))).filter(|&(_, m)| m != 0.0).collect();
            let diag = coupling(i, i);
            let li = lam[i];
            let cur = &u;
            let rhs = |t: f64, y: &[f64], d: &mut [f64]| {
                let p = profile(t);
                let src: f64 = others.iter().map(|&(j, m)| m * interp(&cur[j], &grid, t)).sum();
                d[0] = (li - p * diag) * y[0] - p * src;
            };
            let y0 = if is_fwd {
                init[i]
            } else {
                // u(T) = -int_T^inf e^{lambda (T - s)} g(s) ds, g continued along the source tail
                let t_end = grid.t_max();
                let p = profile(t_end);
                let g_end = -p * others.iter().map(|&(j, m)| m * cur[j][grid.n - 1]).sum::<f64>();
                let rate = Complex64::new(li - p * diag, 0.0);
                -source_tail.moment(g_end, t_end, rate, 0)?.re
            };
            let ts = if is_fwd { &times } else { &rev };
            let (ys, _) = ode.integrate(rhs, ts, &[y0])?;
            let mut new: Vec<f64> = ys.into_iter().map(|y| y[0]).collect();
            if !is_fwd {
                new.reverse();
            }
            if new.iter().any(|v| !v.is_finite()) {
                return Err(Error::Overflow("kernel element integration overflowed".into()));
            }
            change = new.iter().zip(&u[i]).fold(change, |a, (x, y)| a.max((x - y).abs()));
            u[i] = new;
        }
        if !coupled || change <= RELAX_TOL * scale {
            break;
        }
        growth = if change >= prev_change { growth + 1 } else { 0 };
        if growth >= 3 || sweep + 1 >= RELAX_MAX_SWEEPS {
            return Err(Error::NonConvergent(format!(
                "kernel element sweeps stalled at change {change:.3e} after {} sweeps",
                sweep + 1
            )));
        }
        prev_change = change;
    }

    let field = CylField::new(grid, spectrum, u, Tail::exp(-slowest))?;
    let norm = weighted_lp_norm(&field, run.beta, -0.5 + NORM_EPS, 2.0)?;
    if !(norm > 0.0 && norm.is_finite()) {
        return Err(Error::Overflow(format!("kernel element norm {norm} cannot be normalized")));
    }
    Ok(field.scale(1.0 / norm))
}

/// `sup |P h|` away from the grid ends.
pub fn kernel_residual(run: &BootstrapRun, h: &CylField) -> Result<f64> {
    let handle = run.handle(h.grid.t0)?;
    let zero = CylField::zeros(h.grid, h.spectrum.clone(), h.tail);
    handle.residual_sup(h, &zero)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DecayFit {
    /// `a` in `|h| ~ e^{-a t} t^{-c}`.
    pub fitted_exponent: f64,
    /// `c` in `|h| ~ e^{-a t} t^{-c}`.
    pub fitted_poly_power: f64,
    pub strip_norms: Vec<(f64, f64)>,
    pub r_squared: f64,
    pub beta_lower: f64,
}

/// Fits `log sup_{S_m} |h| = c0 - a t_m - c log t_m` over unit strips with `m >= t0 + 5`,
/// `t_m` being where the strip supremum is attained.
pub fn fit_decay(h: &CylField, beta_lower: f64) -> Result<DecayFit> {
    let g = h.grid;
    let env = h.envelope();
    let first = (g.t0 + FIT_MARGIN).ceil() as i64;
    let last = (g.t_max() - 1.0).floor() as i64;
    let mut rows = Vec::new();
    let mut strip_norms = Vec::new();
    for m in first..=last {
        let idx = Strip::unit(m as f64).indices(&g);
        let Some(best) = idx.clone().max_by(|&a, &b| env[a].total_cmp(&env[b])) else {
            continue;
        };
        let v = env[best];
        if !(v > 1e-300) {
            return Err(Error::InvalidInput(format!("field is numerically zero on strip m = {m}")));
        }
        strip_norms.push((m as f64, v));
        rows.push((g.t(best), v.ln()));
    }
    if rows.len() < MIN_STRIPS {
        return Err(Error::InvalidInput(format!("only {} strips past the transient, need {MIN_STRIPS}", rows.len())));
    }
    let (c0, a, c) = lstsq3(&rows);
    let mean = rows.iter().map(|r| r.1).sum::<f64>() / rows.len() as f64;
    let (mut ss_res, mut ss_tot) = (0.0, 0.0);
    for &(t, y) in &rows {
        let r = y - (c0 - a * t - c * t.ln());
        ss_res += r * r;
        ss_tot += (y - mean) * (y - mean);
    }
    let r_squared = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };
    Ok(DecayFit { fitted_exponent: a, fitted_poly_power: c, strip_norms, r_squared, beta_lower })
}

// least squares for y = c0 - a t - c log t via centered normal equations
fn lstsq3(rows: &[(f64, f64)]) -> (f64, f64, f64) {
    let n = rows.len() as f64;
    let mt = rows.iter().map(|r| r.0).sum::<f64>() / n;
    let ml = rows.iter().map(|r| r.0.ln()).sum::<f64>() / n;
    let my = rows.iter().map(|r| r.1).sum::<f64>() / n;
    let (mut stt, mut stl, mut sll, mut sty, mut sly) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for &(t, y) in rows {
        let (x1, x2, yy) = (t - mt, t.ln() - ml, y - my);
        stt += x1 * x1;
        stl += x1 * x2;
        sll += x2 * x2;
        sty += x1 * yy;
        sly += x2 * yy;
    }
    let det = stt * sll - stl * stl;
    let k1 = (sty * sll - sly * stl) / det;
    let k2 = (sly * stt - sty * stl) / det;
    (my - k1 * mt - k2 * ml, -k1, -k2)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    /// Weighted conclusion with a polynomial loss.
    Weighted,
    /// Clean exponential conclusion, reached when the decay exponent exceeds 1.
    Clean,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SIterate {
    pub t_start: f64,
    pub stage: Stage,
    pub fit: DecayFit,
    pub residual_sup: f64,
    pub max_change: f64,
}

/// Replaces `h` by `-S^{P,t} h` at start times `t0, t0 + 1/2, ...` and fits each iterate.
pub fn iterate_s_experiment(run: &BootstrapRun) -> Result<Vec<SIterate>> {
    let mut h = match &run.h0 {
        Some(h) => h.clone(),
        None => make_kernel_element(run)?,
    };
    let beta_lower = run.beta_lower()?;
    let l = run.decay_exponent();
    let mut out = Vec::with_capacity(run.iterations);
    for k in 0..run.iterations {
        // h already starts at the previous stage
        let start = if k == 0 { 0 } else { (STAGE_SPACING / h.grid.h).round() as usize };
        let x = h.restrict(start);
        let handle = run.handle(x.grid.t0)?;
        let next = handle.apply_s(&x)?.scale(-1.0);
        let zero = CylField::zeros(next.grid, next.spectrum.clone(), next.tail);
        let residual_sup = handle.residual_sup(&next, &zero)?;
        let max_change = next.max_abs_diff(&x)?;
        let stage = if k > 0 && l > 1.0 { Stage::Clean } else { Stage::Weighted };
        let fit = fit_decay(&next, beta_lower)?;
        out.push(SIterate { t_start: x.grid.t0, stage, fit, residual_sup, max_change });
        h = next;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad;

    fn lattice_op() -> TidOperator {
        TidOperator::first_order(LinkSpectrum::lattice(0.0, 3).unwrap())
    }

    fn coupled_run(l: f64, delta: f64) -> BootstrapRun {
        let op = lattice_op();
        let m = two_mode_coupling(op.spectrum(), 0.0, -1.0).unwrap();
        let p = PerturbationSpec {
            kind: PerturbationKind::ModeCoupling { l, delta, matrix: m },
            acts_on: Slot::Identity,
        };
        BootstrapRun::new(op, 0.0, vec![Seed { lambda: -1.0, value: 1.0 }]).unwrap().with_perturbation(p).unwrap()
    }

    fn comp(h: &CylField, lambda: f64) -> &[f64] {
        let i = h.spectrum.expanded().iter().position(|&l| l == lambda).unwrap();
        &h.coeffs[i]
    }

    #[test]
    fn unperturbed_seed_is_a_pure_exponential() {
        let run = BootstrapRun::new(lattice_op(), 0.0, vec![Seed { lambda: -1.0, value: 1.0 }]).unwrap();
        let h = make_kernel_element(&run).unwrap();
        let u = comp(&h, -1.0);
        for i in (0..h.grid.n).step_by(250) {
            let t = h.grid.t(i);
            let exact = u[0] * (-(t - h.grid.t0)).exp();
            assert!((u[i] - exact).abs() <= 1e-10 * exact, "t={t}");
        }
        // normalized: int t^{-0.8} |h|^2 = 1
        let c = u[0] * 2.0f64.exp();
        let n2 = quad::integrate_to_inf(|t| c * c * t.powf(-0.8) * (-2.0 * t).exp(), 2.0, 1e-13).unwrap();
        assert!((n2 - 1.0).abs() < 1e-8, "{n2}");
        assert!(kernel_residual(&run, &h).unwrap() <= KERNEL_RESIDUAL_TOL);
        let f = fit_decay(&h, -1.0).unwrap();
        assert!((f.fitted_exponent - 1.0).abs() < 0.01);
        assert!(f.fitted_poly_power.abs() < 0.05);
    }

    #[test]
    fn mixed_seeds_give_two_exponentials() {
        let seeds = vec![Seed { lambda: -2.0, value: 3.0 }, Seed { lambda: -1.0, value: 1.0 }];
        let run = BootstrapRun::new(lattice_op(), 0.0, seeds).unwrap();
        let h = make_kernel_element(&run).unwrap();
        let (a, b) = (comp(&h, -2.0), comp(&h, -1.0));
        assert!((a[0] / b[0] - 3.0).abs() < 1e-14);
        for i in (0..h.grid.n).step_by(500) {
            let s = h.grid.t(i) - h.grid.t0;
            assert!((a[i] - a[0] * (-2.0 * s).exp()).abs() <= 1e-10 * a[0] * (-2.0 * s).exp());
            assert!((b[i] - b[0] * (-s).exp()).abs() <= 1e-10 * b[0] * (-s).exp());
        }
        let f = fit_decay(&h, -1.0).unwrap();
        assert!((f.fitted_exponent - 1.0).abs() < 0.01, "{f:?}");
    }

    #[test]
    fn coupled_kernel_element_matches_quadrature() {
        let run = coupled_run(1.0, 0.01);
        let h = make_kernel_element(&run).unwrap();
        assert!(kernel_residual(&run, &h).unwrap() <= KERNEL_RESIDUAL_TOL);
        // the neutral component is int_t^inf (delta/s) u_{-1}(s) ds
        let (u0, um) = (comp(&h, 0.0), comp(&h, -1.0));
        let g = h.grid;
        for &i in &[0usize, 2000, 5000, 8000] {
            let y: Vec<f64> = (i..g.n).map(|k| 0.01 / g.t(k) * um[k]).collect();
            let last = *y.last().unwrap();
            let tail = quad::integrate_to_inf(|t| last * g.t_max() / t * (-(t - g.t_max())).exp(), g.t_max(), 1e-14)
                .unwrap();
            let oracle = quad::simpson(&y, g.h) + tail;
            assert!((u0[i] - oracle).abs() <= 1e-9 * oracle.abs(), "i={i}: {} vs {oracle}", u0[i]);
        }
        let f = fit_decay(&h, -1.0).unwrap();
        assert!((f.fitted_exponent - 1.0).abs() <= 0.1, "{f:?}");
    }

    #[test]
    fn fit_recovers_synthetic_rates() {
        let grid = TimeGrid::new(2.0, 45.0, 10_001).unwrap();
        let sp = LinkSpectrum::lattice(0.0, 1).unwrap();
        for &a in &[0.5, 1.0, 2.0] {
            for &c in &[0.0, 1.0, -1.0] {
                let h = CylField::from_fn(grid, sp.clone(), Tail::exp(a), |k, _, t| {
                    if k == 0 {
                        (-a * t).exp() * t.powf(-c)
                    } else {
                        0.0
                    }
                });
                let f = fit_decay(&h, -a).unwrap();
                assert!((f.fitted_exponent - a).abs() <= 0.01 * a, "a={a} c={c}: {f:?}");
                assert!((f.fitted_poly_power - c).abs() <= 0.1, "a={a} c={c}: {f:?}");
                assert!(f.strip_norms.len() >= MIN_STRIPS);
                assert!(f.r_squared > 0.999999);
            }
        }
    }

    #[test]
    fn fit_refuses_zero_fields() {
        let grid = TimeGrid::new(2.0, 45.0, 2001).unwrap();
        let h = CylField::zeros(grid, LinkSpectrum::lattice(0.0, 1).unwrap(), Tail::exp(1.0));
        assert!(fit_decay(&h, -1.0).is_err());
    }

    #[test]
    fn s_iterates_reproduce_unperturbed_kernel() {
        let mut run = BootstrapRun::new(lattice_op(), 0.0, vec![Seed { lambda: -1.0, value: 1.0 }]).unwrap();
        run.iterations = 2;
        let h = make_kernel_element(&run).unwrap();
        let it = iterate_s_experiment(&run).unwrap();
        let base = fit_decay(&h, -1.0).unwrap();
        for s in &it {
            assert!(s.max_change <= 1e-9, "{}", s.max_change);
            assert!(s.residual_sup <= 1e-6);
        }
        let last = &it.last().unwrap().fit;
        assert!((last.fitted_exponent - base.fitted_exponent).abs() < 1e-6);
    }

    #[test]
    fn large_coupling_is_refused() {
        let weak = coupled_run(1.0, 0.01);
        let h = make_kernel_element(&weak).unwrap();
        let mut strong = coupled_run(1.0, 5.0);
        strong.h0 = Some(h);
        assert!(matches!(iterate_s_experiment(&strong), Err(Error::NonConvergent(_))));
    }

    #[test]
    fn perturbed_iterates_stay_in_kernel_and_keep_rate() {
        for &(l, delta) in &[(1.0, 0.001), (1.0, 0.01), (2.0, 0.01)] {
            let run = coupled_run(l, delta);
            let it = iterate_s_experiment(&run).unwrap();
            let h = make_kernel_element(&run).unwrap();
            let base = fit_decay(&h, -1.0).unwrap();
            for s in &it {
                assert!(s.residual_sup <= 1e-6, "l={l} d={delta}: {}", s.residual_sup);
                assert!((s.fit.fitted_exponent - 1.0).abs() <= 0.1, "{:?}", s.fit);
            }
            let last = &it.last().unwrap().fit;
            assert!((last.fitted_exponent - base.fitted_exponent).abs() <= 1e-3);
            assert!((last.fitted_poly_power - base.fitted_poly_power).abs() <= 1e-2);
            if l > 1.0 {
                assert!(last.fitted_poly_power.abs() <= 0.15);
                assert_eq!(it.last().unwrap().stage, Stage::Clean);
            }
        }
    }

    #[test]
    fn seeds_must_decay() {
        assert!(BootstrapRun::new(lattice_op(), 0.0, vec![Seed { lambda: 0.0, value: 1.0 }]).is_err());
        assert!(BootstrapRun::new(lattice_op(), 0.0, vec![Seed { lambda: -0.5, value: 1.0 }]).is_err());
        let op = lattice_op();
        let m = two_mode_coupling(op.spectrum(), 0.0, -1.0).unwrap();
        let p = PerturbationSpec { kind: PerturbationKind::ModeCoupling { l: 1.0, delta: 0.1, matrix: m }, acts_on: Slot::Dt };
        let run = BootstrapRun::new(op, 0.0, vec![Seed { lambda: -1.0, value: 1.0 }]).unwrap();
        assert!(run.with_perturbation(p).is_err());
    }
}
