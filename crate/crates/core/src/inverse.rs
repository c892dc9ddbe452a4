//! Global right inverses of model operators on a half-cylinder, the defect
//! operator `S = Q P - Id`, and Neumann-series inverses of perturbations.

use crate::diff;
use crate::error::{Error, Result};
use crate::field::{extend, sobolev_graph_norms_l2, CylField, TimeGrid};
use crate::green::{self, BSide, ModeCase};
use crate::jacobi;
use crate::operator::{TidOperator, WeightSpec};
use crate::tail::Tail;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub const DEFAULT_SERIES_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_TERMS: usize = 200;
/// Consecutive non-decreasing term norms that declare the series divergent.
pub const STALL_LIMIT: usize = 3;
/// Residuals are reported on `[t0 + RESIDUAL_MARGIN_LO, t_max - RESIDUAL_MARGIN_HI]`.
pub const RESIDUAL_MARGIN_LO: f64 = 0.1;
pub const RESIDUAL_MARGIN_HI: f64 = 1.0;
/// Sampling window of [`check_atid`].
pub const ATID_WINDOW: f64 = 200.0;
const ATID_STEP: f64 = 0.01;

/// Which term of the mode equation a perturbation multiplies.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Slot {
    Identity,
    Dt,
}

fn default_slot() -> Slot {
    Slot::Dt
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PerturbationKind {
    /// `delta t^{-l}` times the slot.
    CoefficientDecay { l: f64, delta: f64 },
    /// `delta sin t` times the slot.
    Oscillatory { delta: f64 },
    /// `delta t^{-l} M` in the eigenbasis, `M` indexed by expanded components.
    ModeCoupling { l: f64, delta: f64, matrix: Vec<Vec<f64>> },
}

/// `P - P0`, acting on Fourier coefficients.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerturbationSpec {
    #[serde(flatten)]
    pub kind: PerturbationKind,
    #[serde(default = "default_slot")]
    pub acts_on: Slot,
}

impl PerturbationSpec {
    pub fn oscillatory(delta: f64) -> Self {
        PerturbationSpec { kind: PerturbationKind::Oscillatory { delta }, acts_on: Slot::Dt }
    }

    pub fn coefficient_decay(l: f64, delta: f64, acts_on: Slot) -> Self {
        PerturbationSpec { kind: PerturbationKind::CoefficientDecay { l, delta }, acts_on }
    }

    pub fn validate(&self, dim: Option<usize>) -> Result<()> {
        let (l, delta) = match &self.kind {
            PerturbationKind::CoefficientDecay { l, delta } => (*l, *delta),
            PerturbationKind::Oscillatory { delta } => (0.0, *delta),
            PerturbationKind::ModeCoupling { l, delta, matrix } => {
                if let Some(d) = dim {
                    if matrix.len() != d || matrix.iter().any(|r| r.len() != d) {
                        return Err(Error::InvalidInput(format!("coupling matrix must be {d}x{d}")));
                    }
                }
                if matrix.iter().flatten().any(|v| !v.is_finite()) {
                    return Err(Error::InvalidInput("coupling matrix has non-finite entries".into()));
                }
                (*l, *delta)
            }
        };
        if !(delta >= 0.0 && delta.is_finite()) {
            return Err(Error::InvalidInput(format!("delta must be >= 0, got {delta}")));
        }
        if !(l >= 0.0 && l.is_finite()) {
            return Err(Error::InvalidInput(format!("decay exponent must be >= 0, got {l}")));
        }
        Ok(())
    }

    pub fn delta(&self) -> f64 {
        match &self.kind {
            PerturbationKind::CoefficientDecay { delta, .. }
            | PerturbationKind::Oscillatory { delta }
            | PerturbationKind::ModeCoupling { delta, .. } => *delta,
        }
    }

    pub fn is_trivial(&self) -> bool {
        self.delta() == 0.0
    }

    /// Scalar profile `c(t)`; for mode coupling it multiplies the matrix.
    pub fn profile(&self, t: f64) -> f64 {
        match &self.kind {
            PerturbationKind::CoefficientDecay { l, delta } | PerturbationKind::ModeCoupling { l, delta, .. } => {
                delta * t.powf(-l)
            }
            PerturbationKind::Oscillatory { delta } => delta * t.sin(),
        }
    }

    /// Operator norm of the coupling matrix, 1 for scalar kinds.
    fn matrix_norm(&self) -> Result<f64> {
        match &self.kind {
            PerturbationKind::ModeCoupling { matrix, .. } => {
                let n = matrix.len();
                let mtm: Vec<Vec<f64>> = (0..n)
                    .map(|i| (0..n).map(|j| (0..n).map(|k| matrix[k][i] * matrix[k][j]).sum()).collect())
                    .collect();
                let eig = jacobi::sym_eigen(&mtm)?;
                Ok(eig.values.iter().fold(0.0f64, |a, &v| a.max(v)).sqrt())
            }
            _ => Ok(1.0),
        }
    }

    fn tail_of_image(&self, tail: Tail) -> Tail {
        match &self.kind {
            PerturbationKind::CoefficientDecay { l, .. } | PerturbationKind::ModeCoupling { l, .. } => tail.times_power(*l),
            PerturbationKind::Oscillatory { .. } => tail,
        }
    }

    /// `(P - P0) x` with grid derivatives.
    pub fn apply(&self, x: &CylField) -> Result<CylField> {
        self.validate(Some(x.coeffs.len()))?;
        let g = x.grid;
        let slotted: Vec<Vec<f64>> = match self.acts_on {
            Slot::Identity => x.coeffs.clone(),
            Slot::Dt => x.coeffs.par_iter().map(|c| diff::d1(c, g.h)).collect(),
        };
        let mixed = match &self.kind {
            PerturbationKind::ModeCoupling { matrix, .. } => (0..slotted.len())
                .map(|i| {
                    (0..g.n).map(|k| matrix[i].iter().zip(&slotted).map(|(m, s)| m * s[k]).sum()).collect()
                })
                .collect(),
            _ => slotted,
        };
        let prof: Vec<f64> = g.times().into_iter().map(|t| self.profile(t)).collect();
        let coeffs = mixed.into_iter().map(|c| c.iter().zip(&prof).map(|(v, p)| v * p).collect()).collect();
        CylField::new(g, x.spectrum.clone(), coeffs, self.tail_of_image(x.tail))
    }
}

/// A right inverse `Q_{beta, sign}` of `P0` (or of `P0 + perturbation`) on `[t0, inf)`.
#[derive(Clone, Debug, PartialEq)]
pub struct InverseHandle {
    op: TidOperator,
    beta: f64,
    sign: BSide,
    t0: f64,
    perturbation: Option<PerturbationSpec>,
    series_tol: f64,
    max_terms: usize,
}

/// Output of the Neumann-series inverse.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SeriesReport {
    pub residual_sup: f64,
    pub terms_used: usize,
    pub ratio: f64,
    pub term_norms: Vec<f64>,
}

impl InverseHandle {
    pub fn new(op: TidOperator, beta: f64, sign: BSide, t0: f64) -> Result<Self> {
        op.require_not_super(beta)?;
        if !(t0 >= 0.1 && t0.is_finite()) {
            return Err(Error::InvalidInput(format!("t0 must be >= 0.1, got {t0}")));
        }
        Ok(InverseHandle {
            op,
            beta,
            sign,
            t0,
            perturbation: None,
            series_tol: DEFAULT_SERIES_TOL,
            max_terms: DEFAULT_MAX_TERMS,
        })
    }

    pub fn with_perturbation(mut self, p: PerturbationSpec) -> Result<Self> {
        p.validate(Some(self.op.spectrum().total_dim()))?;
        self.perturbation = Some(p);
        Ok(self)
    }

    pub fn with_series(mut self, tol: f64, max_terms: usize) -> Result<Self> {
        if !(tol > 0.0) || max_terms == 0 {
            return Err(Error::InvalidInput("series tolerance must be positive and max_terms >= 1".into()));
        }
        self.series_tol = tol;
        self.max_terms = max_terms;
        Ok(self)
    }

    pub fn op(&self) -> &TidOperator {
        &self.op
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn sign(&self) -> BSide {
        self.sign
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn perturbation(&self) -> Option<&PerturbationSpec> {
        self.perturbation.as_ref()
    }

    /// Weight used for convergence control: `b = 1` on the plus side, `0` on the minus side.
    pub fn control_weight(&self) -> WeightSpec {
        let b = if self.sign == BSide::Plus { 1.0 } else { 0.0 };
        WeightSpec { beta: self.beta, gamma: 0.0, b, p: 2.0, k: 0, alpha: 0.5 }
    }

    fn check_field(&self, f: &CylField) -> Result<()> {
        if f.spectrum != *self.op.spectrum() {
            return Err(Error::InvalidInput("field modes do not match the operator spectrum".into()));
        }
        if (f.grid.t0 - self.t0).abs() > 1e-9 * (1.0 + self.t0) {
            return Err(Error::InvalidInput(format!("field starts at {}, handle at {}", f.grid.t0, self.t0)));
        }
        Ok(())
    }

    fn mode_case(&self, lambda: f64) -> Result<ModeCase> {
        let l = self.op.shifted_eigenvalue(lambda, self.beta);
        let case = if self.op.order() == 1 {
            ModeCase::first_order(l, self.sign)
        } else {
            ModeCase::second_order(self.op.shifted_drift(self.beta), l, self.sign)
                .map_err(|_| Error::SuperIndicial { beta: self.beta })?
        };
        Ok(case.with_frame_shift(self.beta))
    }

    /// `Q_{beta, sign} f` for the unperturbed operator.
    pub fn apply_q_model(&self, f: &CylField) -> Result<CylField> {
        self.check_field(f)?;
        let ext = extend(f, 0)?;
        let k = ext.grid.n - f.grid.n;
        let lambdas = f.lambdas();
        let solved: Vec<(Vec<f64>, Tail)> = ext
            .coeffs
            .par_iter()
            .zip(lambdas.par_iter())
            .map(|(c, &lam)| {
                if c.iter().all(|&v| v == 0.0) {
                    return Ok((vec![0.0; f.grid.n], Tail::Compact));
                }
                let case = self.mode_case(lam)?;
                let sol = green::solve_with_collar(&case, &c[k..], &f.grid, &f.tail, &c[..=k])?;
                Ok((sol.u, case.output_tail(&f.tail)))
            })
            .collect::<Result<_>>()?;
        let tail = solved.iter().fold(Tail::Compact, |a, (_, t)| a.slower(*t));
        let tail = if f.tail.is_declared() { tail } else { Tail::Undeclared };
        CylField::new(f.grid, f.spectrum.clone(), solved.into_iter().map(|(u, _)| u).collect(), tail)
            .map_err(|e| match e {
                Error::InvalidInput(_) => Error::Overflow("inverse produced non-finite values".into()),
                e => e,
            })
    }

    /// `P0 u` by grid differentiation.
    pub fn apply_model_operator(&self, u: &CylField) -> CylField {
        let order = self.op.order();
        let a1 = self.op.a1();
        let h = u.grid.h;
        let coeffs = u
            .coeffs
            .par_iter()
            .zip(u.lambdas().par_iter())
            .map(|(c, &lam)| {
                let d1 = diff::d1(c, h);
                if order == 1 {
                    (0..c.len()).map(|i| d1[i] - lam * c[i]).collect()
                } else {
                    let d2 = diff::d2(c, h);
                    (0..c.len()).map(|i| d2[i] - a1 * d1[i] - lam * c[i]).collect()
                }
            })
            .collect();
        CylField { grid: u.grid, spectrum: u.spectrum.clone(), coeffs, tail: u.tail }
    }

    /// `P u`, including the perturbation when present.
    pub fn apply_operator(&self, u: &CylField) -> Result<CylField> {
        let base = self.apply_model_operator(u);
        match &self.perturbation {
            Some(p) if !p.is_trivial() => base.axpy(1.0, &p.apply(u)?),
            _ => Ok(base),
        }
    }

    /// Sup of `|P u - f|` over the residual window.
    pub fn residual_sup(&self, u: &CylField, f: &CylField) -> Result<f64> {
        let r = self.apply_operator(u)?.axpy(-1.0, f)?;
        Ok(r.sup_on(u.grid.t0 + RESIDUAL_MARGIN_LO, u.grid.t_max() - RESIDUAL_MARGIN_HI))
    }

    /// `Q f`: the model inverse, or the Neumann series when perturbed.
    pub fn apply_q(&self, f: &CylField) -> Result<CylField> {
        match &self.perturbation {
            Some(p) if !p.is_trivial() => Ok(self.apply_q_perturbed(f)?.0),
            _ => self.apply_q_model(f),
        }
    }

    /// `sum_j (-Q0 (P - P0))^j Q0 f`, stopped when a term's graph norm drops below
    /// `series_tol` times the first one.
    pub fn apply_q_perturbed(&self, f: &CylField) -> Result<(CylField, SeriesReport)> {
        let x0 = self.apply_q_model(f)?;
        let pert = match &self.perturbation {
            Some(p) if !p.is_trivial() => p,
            _ => {
                let residual_sup = self.residual_sup(&x0, f)?;
                let report = SeriesReport { residual_sup, terms_used: 1, ratio: 0.0, term_norms: vec![] };
                return Ok((x0, report));
            }
        };
        let w = self.control_weight();
        let norm = |x: &CylField| sobolev_graph_norms_l2(x, &self.op, &w).map(|(hat, _)| hat);
        let n0 = norm(&x0)?;
        let mut term_norms = vec![n0];
        let mut sum = x0.clone();
        let mut x = x0;
        let mut stalls = 0;
        if n0 == 0.0 {
            let residual_sup = self.residual_sup(&sum, f)?;
            return Ok((sum, SeriesReport { residual_sup, terms_used: 1, ratio: 0.0, term_norms }));
        }
        loop {
            if term_norms.len() >= self.max_terms {
                return Err(Error::NonConvergent(format!(
                    "series not converged after {} terms (last ratio {:.3e})",
                    self.max_terms,
                    last_ratio(&term_norms)
                )));
            }
            let wx = pert.apply(&x)?;
            x = self.apply_q_model(&wx)?.scale(-1.0);
            let nj = norm(&x)?;
            if !nj.is_finite() {
                return Err(Error::NonConvergent("series term norm is not finite".into()));
            }
            let prev = *term_norms.last().unwrap();
            term_norms.push(nj);
            stalls = if nj >= prev { stalls + 1 } else { 0 };
            if stalls >= STALL_LIMIT {
                return Err(Error::NonConvergent(format!(
                    "term norms failed to decay over {STALL_LIMIT} consecutive terms (ratio {:.3e})",
                    last_ratio(&term_norms)
                )));
            }
            sum = sum.axpy(1.0, &x)?;
            if nj <= self.series_tol * n0 {
                break;
            }
        }
        let residual_sup = self.residual_sup(&sum, f)?;
        let ratio = last_ratio(&term_norms);
        let terms_used = term_norms.len();
        Ok((sum, SeriesReport { residual_sup, terms_used, ratio, term_norms }))
    }

    /// `S xi = Q P xi - xi`.
    pub fn apply_s(&self, xi: &CylField) -> Result<CylField> {
        let pxi = self.apply_operator(xi)?;
        self.apply_q(&pxi)?.axpy(-1.0, xi)
    }
}

/// Geometric mean of the last (up to three) successive term ratios.
fn last_ratio(norms: &[f64]) -> f64 {
    let n = norms.len();
    if n < 2 {
        return 0.0;
    }
    let k = (n - 1).min(3);
    let (a, b) = (norms[n - 1 - k], norms[n - 1]);
    if a == 0.0 {
        return 0.0;
    }
    (b / a).powf(1.0 / k as f64)
}

/// Coefficient-level decay check `sup t^l |c^{(j)}(t)| <= threshold` over `[t0, t0 + 200]`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AtidReport {
    pub l_target: f64,
    pub achieved_delta: f64,
    /// `sup t^l |c^{(j)}|` for `j = 0..=k`.
    pub derivative_sups: Vec<f64>,
    pub threshold: f64,
    pub passes: bool,
}

pub fn check_atid(p: &PerturbationSpec, t0: f64, l_target: f64, k: usize, threshold: f64) -> Result<AtidReport> {
    p.validate(None)?;
    let n = (ATID_WINDOW / ATID_STEP).round() as usize + 1;
    let grid = TimeGrid::from_spacing(t0, ATID_STEP, n);
    let times = grid.times();
    let scale = p.matrix_norm()?;
    let mut c: Vec<f64> = times.iter().map(|&t| scale * p.profile(t)).collect();
    let mut sups = Vec::with_capacity(k + 1);
    for j in 0..=k {
        if j > 0 {
            c = diff::d1(&c, ATID_STEP);
        }
        sups.push(times.iter().zip(&c).map(|(t, v)| t.powf(l_target) * v.abs()).fold(0.0, f64::max));
    }
    let achieved = sups.iter().copied().fold(0.0, f64::max);
    Ok(AtidReport {
        l_target,
        achieved_delta: achieved,
        derivative_sups: sups,
        threshold,
        passes: achieved <= threshold * (1.0 + 1e-12),
    })
}

/// `max_f hatW(Q f) / W(f)` over a family of nonzero fields.
pub fn estimate_operator_norm(h: &InverseHandle, family: &[CylField], w: &WeightSpec) -> Result<f64> {
    if family.is_empty() {
        return Err(Error::InvalidInput("family must be nonempty".into()));
    }
    let ratios = family
        .par_iter()
        .map(|f| {
            let (_, fw) = sobolev_graph_norms_l2(f, h.op(), w)?;
            if fw == 0.0 {
                return Err(Error::InvalidInput("family members must be nonzero".into()));
            }
            let u = h.apply_q(f)?;
            let (uh, _) = sobolev_graph_norms_l2(&u, h.op(), w)?;
            Ok(uh / fw)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(ratios.into_iter().fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectrum::{EigenMode, LinkSpectrum};

    fn single(l: f64) -> LinkSpectrum {
        LinkSpectrum::explicit(vec![EigenMode { lambda: l, multiplicity: 1, label: String::new() }]).unwrap()
    }

    fn bump(t: f64, c: f64) -> f64 {
        (-(t - c).powi(2) * 2.0).exp()
    }

    #[test]
    fn first_order_exponential() {
        let s = single(1.0);
        let op = TidOperator::first_order(s.clone());
        let g = TimeGrid::new(2.0, 40.0, 10_001).unwrap();
        let f = CylField::from_fn(g, s, Tail::exp(1.0), |_, _, t| (-t).exp());
        let h = InverseHandle::new(op, 0.0, BSide::Plus, 2.0).unwrap();
        let u = h.apply_q_model(&f).unwrap();
        let err = u.coeffs[0].iter().zip(g.times()).map(|(v, t)| (v + (-t).exp() / 2.0).abs()).fold(0.0, f64::max);
        assert!(err < 1e-12, "{err}");
        assert!(h.residual_sup(&u, &f).unwrap() <= 1e-6);
        let z = h.apply_q_model(&CylField::zeros(g, u.spectrum.clone(), Tail::Compact)).unwrap();
        assert!(z.is_zero());
    }

    #[test]
    fn kernel_mode_log_growth() {
        let lat = LinkSpectrum::lattice(0.0, 1).unwrap();
        let op = TidOperator::first_order(lat.clone());
        let g = TimeGrid::new(2.0, 30.0, 5_001).unwrap();
        let f = CylField::from_fn(g, lat, Tail::power(1.0), |_, l, t| if l == 0.0 { 1.0 / t } else { 0.0 });
        let minus = InverseHandle::new(op.clone(), 0.0, BSide::Minus, 2.0).unwrap();
        let u = minus.apply_q_model(&f).unwrap();
        // u - log t is constant
        let c: Vec<f64> = u.coeffs[1].iter().zip(g.times()).map(|(v, t)| v - t.ln()).collect();
        let spread = c.iter().fold(f64::MIN, |a, &b| a.max(b)) - c.iter().fold(f64::MAX, |a, &b| a.min(b));
        assert!(spread < 1e-9, "{spread}");
        let plus = InverseHandle::new(op, 0.0, BSide::Plus, 2.0).unwrap();
        assert!(matches!(plus.apply_q_model(&f), Err(Error::Divergent(_))));
    }

    #[test]
    fn super_indicial_refused() {
        let op = TidOperator::second_order(-2.0, single(-3.0)).unwrap();
        assert!(matches!(InverseHandle::new(op, -1.0, BSide::Plus, 2.0), Err(Error::SuperIndicial { .. })));
    }

    #[test]
    fn s_of_kernel_element_is_minus_itself() {
        let s = single(-1.0);
        let op = TidOperator::first_order(s.clone());
        let g = TimeGrid::new(2.0, 30.0, 6_001).unwrap();
        let xi = CylField::from_fn(g, s, Tail::exp(1.0), |_, _, t| (-t).exp());
        let h = InverseHandle::new(op, 0.0, BSide::Plus, 2.0).unwrap();
        let sx = h.apply_s(&xi).unwrap();
        let err = sx.axpy(1.0, &xi).unwrap().sup_on(2.0, 30.0);
        assert!(err < 1e-9, "{err}");
    }

    #[test]
    fn oscillatory_series() {
        let lat = LinkSpectrum::lattice(0.0, 2).unwrap();
        let op = TidOperator::first_order(lat.clone());
        let g = TimeGrid::new(2.0, 30.0, 7_001).unwrap();
        let f = CylField::from_fn(g, lat, Tail::Compact, |i, _, t| bump(t, 4.0 + 0.3 * i as f64));
        let base = InverseHandle::new(op, 0.5, BSide::Plus, 2.0).unwrap();
        let h = base.clone().with_perturbation(PerturbationSpec::oscillatory(0.01)).unwrap();
        let (u, rep) = h.apply_q_perturbed(&f).unwrap();
        assert!(rep.residual_sup <= 1e-6, "{rep:?}");
        assert!(rep.ratio > 0.0 && rep.ratio < 0.1, "{}", rep.ratio);
        assert!(rep.terms_used > 2);
        // fixed-point oracle: u = Q0 (f - W u)
        let w = h.perturbation().unwrap().apply(&u).unwrap();
        let fp = base.apply_q_model(&f.axpy(-1.0, &w).unwrap()).unwrap();
        assert!(fp.max_abs_diff(&u).unwrap() < 1e-9);
        let big = base.clone().with_perturbation(PerturbationSpec::oscillatory(10.0)).unwrap();
        assert!(matches!(big.apply_q_perturbed(&f), Err(Error::NonConvergent(_))));
        let zero = base.clone().with_perturbation(PerturbationSpec::oscillatory(0.0)).unwrap();
        assert_eq!(zero.apply_q(&f).unwrap(), base.apply_q_model(&f).unwrap());
    }

    #[test]
    fn atid_examples() {
        let r = check_atid(&PerturbationSpec::oscillatory(0.3), 2.0, 0.0, 1, 0.3).unwrap();
        assert!(r.passes && (r.achieved_delta - 0.3).abs() < 1e-4);
        assert!(!check_atid(&PerturbationSpec::oscillatory(0.3), 2.0, 0.5, 1, 0.3).unwrap().passes);
        let d = PerturbationSpec::coefficient_decay(2.0, 0.1, Slot::Identity);
        let r = check_atid(&d, 2.0, 1.0, 0, 0.1).unwrap();
        assert!(r.passes && (r.achieved_delta - 0.05).abs() < 1e-12);
        let z = check_atid(&PerturbationSpec::oscillatory(0.0), 2.0, 3.0, 2, 0.0).unwrap();
        assert_eq!(z.achieved_delta, 0.0);
    }

    #[test]
    fn operator_norm_scales_inversely() {
        let mut est = Vec::new();
        for &l in &[1.0, 2.0, 4.0] {
            let s = single(l);
            let op = TidOperator::first_order(s.clone());
            let g = TimeGrid::new(2.0, 40.0, 8_001).unwrap();
            let f = CylField::from_fn(g, s, Tail::exp(1.0), |_, _, t| (-t).exp());
            let h = InverseHandle::new(op, 0.0, BSide::Plus, 2.0).unwrap();
            let w = WeightSpec::sobolev(0.0, 0.0, 0.0, 2.0).unwrap();
            est.push(estimate_operator_norm(&h, &[f], &w).unwrap());
        }
        // Q f = -f/(l+1); hatW^2/W^2 = (1 + l^2 + 1) / (l+1)^2
        for (e, l) in est.iter().zip([1.0f64, 2.0, 4.0]) {
            let exact = ((2.0 + l * l) / (l + 1.0).powi(2)).sqrt();
            assert!((e - exact).abs() < 1e-6, "{e} vs {exact}");
        }
    }

    #[test]
    fn perturbation_serde() {
        let p: PerturbationSpec = serde_json::from_str(r#"{"kind":"oscillatory","delta":0.01}"#).unwrap();
        assert_eq!(p, PerturbationSpec::oscillatory(0.01));
        let q: PerturbationSpec =
            serde_json::from_str(r#"{"kind":"coefficient_decay","l":2,"delta":0.1,"acts_on":"identity"}"#).unwrap();
        assert_eq!(q.acts_on, Slot::Identity);
        assert!(PerturbationSpec::coefficient_decay(-1.0, 0.1, Slot::Dt).validate(None).is_err());
    }
}
