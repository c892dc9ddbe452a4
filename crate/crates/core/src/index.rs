//! Mode-counting index theory for first-order translation-invariant operators
//! `d/dt - B` on the two-ended cylinder, with the `H` ledgers and lattice eta invariants.

use crate::error::{Error, Result};
use crate::operator::{TidOperator, ROOT_TOL};
use crate::spectrum::{LinkSpectrum, SpectrumSource};
use serde::Serialize;
use std::cmp::Ordering;

/// Partial-sum cutoff of the numeric eta route.
pub const ETA_TERMS: usize = 1000;
/// Number of Chebyshev nodes in `s` used to extrapolate the numeric eta to `s = 0`.
pub const ETA_NODES: usize = 16;
pub const ETA_S_RANGE: (f64, f64) = (0.05, 2.0);

/// Weights `(beta_+, beta_-)` and polynomial exponents on the two ends.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, serde::Deserialize)]
pub struct EndWeights {
    pub beta_plus: f64,
    pub beta_minus: f64,
    pub b_plus: f64,
    pub b_minus: f64,
}

impl EndWeights {
    pub fn new(beta_plus: f64, beta_minus: f64, b_plus: f64, b_minus: f64) -> Result<Self> {
        EndWeights { beta_plus, beta_minus, b_plus, b_minus }.validated()
    }

    pub fn validated(self) -> Result<Self> {
        if self.b_plus == 0.5 || self.b_minus == 0.5 {
            return Err(Error::BorderlineB);
        }
        if ![self.beta_plus, self.beta_minus, self.b_plus, self.b_minus].iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidInput("end weights must be finite".into()));
        }
        Ok(self)
    }
}

fn cmp_tol(a: f64, b: f64) -> Ordering {
    if (a - b).abs() <= ROOT_TOL {
        Ordering::Equal
    } else {
        a.total_cmp(&b)
    }
}

/// One row of the admissibility ledger.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LedgerRow {
    pub lambda: f64,
    pub mult: usize,
    pub kernel_plus: bool,
    pub kernel_minus: bool,
    pub in_kernel: bool,
    pub cokernel_plus: bool,
    pub cokernel_minus: bool,
    pub in_cokernel: bool,
    /// Which end rules the mode out of the kernel: "plus", "minus", "both" or "".
    pub kernel_blocked_by: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct HTerms {
    pub plus: f64,
    pub minus: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EtaTerms {
    pub eta_b: f64,
    pub eta_minus_b: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IndexReport {
    pub weights: EndWeights,
    pub ker_dim: i64,
    pub coker_dim: i64,
    pub index: i64,
    pub ledger: Vec<LedgerRow>,
    pub h_terms: HTerms,
    pub eta_terms: Option<EtaTerms>,
    pub alpha0: Option<f64>,
}

fn require_first_order(op: &TidOperator) -> Result<()> {
    if op.order() != 1 {
        return Err(Error::InvalidInput("index machinery is implemented for first-order operators".into()));
    }
    Ok(())
}

/// Truncated lattices must contain every mode the count could see.
fn require_window(spec: &LinkSpectrum, points: &[f64]) -> Result<()> {
    if let SpectrumSource::Lattice { .. } = spec.source {
        let lo = points.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = points.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if spec.min_lambda() >= lo - ROOT_TOL {
            return Err(Error::TruncationExhausted("below"));
        }
        if spec.max_lambda() <= hi + ROOT_TOL {
            return Err(Error::TruncationExhausted("above"));
        }
    }
    Ok(())
}

/// Kernel, cokernel and index of `d/dt - B` between `hatW_{-beta, b-1}` and `L^2_{-beta, b}`.
pub fn mode_count_index(op: &TidOperator, w: &EndWeights) -> Result<IndexReport> {
    require_first_order(op)?;
    let w = w.validated()?;
    let spec = op.spectrum();
    require_window(spec, &[w.beta_plus, -w.beta_minus, 0.0])?;
    let mut ledger = Vec::with_capacity(spec.modes().len());
    let (mut ker, mut coker) = (0i64, 0i64);
    for m in spec.modes() {
        let l = m.lambda;
        let kp = match cmp_tol(l, w.beta_plus) {
            Ordering::Less => true,
            Ordering::Equal => w.b_plus < 0.5,
            Ordering::Greater => false,
        };
        let km = match cmp_tol(-l, w.beta_minus) {
            Ordering::Less => true,
            Ordering::Equal => w.b_minus < 0.5,
            Ordering::Greater => false,
        };
        let cp = match cmp_tol(l, w.beta_plus) {
            Ordering::Greater => true,
            Ordering::Equal => w.b_plus > 0.5,
            Ordering::Less => false,
        };
        let cm = match cmp_tol(l, -w.beta_minus) {
            Ordering::Less => true,
            Ordering::Equal => w.b_minus > 0.5,
            Ordering::Greater => false,
        };
        let (in_k, in_c) = (kp && km, cp && cm);
        if in_k {
            ker += m.multiplicity as i64;
        }
        if in_c {
            coker += m.multiplicity as i64;
        }
        let blocked = match (kp, km) {
            (true, true) => "",
            (false, true) => "plus",
            (true, false) => "minus",
            (false, false) => "both",
        };
        ledger.push(LedgerRow {
            lambda: l,
            mult: m.multiplicity,
            kernel_plus: kp,
            kernel_minus: km,
            in_kernel: in_k,
            cokernel_plus: cp,
            cokernel_minus: cm,
            in_cokernel: in_c,
            kernel_blocked_by: blocked.into(),
        });
    }
    let h_terms = h_terms(spec, &w)?;
    let eta_terms = eta_terms(spec).ok();
    Ok(IndexReport {
        weights: w,
        ker_dim: ker,
        coker_dim: coker,
        index: ker - coker,
        ledger,
        h_terms,
        eta_terms,
        alpha0: None,
    })
}

fn h_of(pairs: &[(f64, usize)], beta: f64) -> f64 {
    let d0 = pairs.iter().filter(|p| cmp_tol(p.0, 0.0) == Ordering::Equal).map(|p| p.1).sum::<usize>() as f64;
    match cmp_tol(beta, 0.0) {
        Ordering::Equal => -d0 / 2.0,
        Ordering::Less => {
            let s: usize = pairs
                .iter()
                .filter(|p| cmp_tol(p.0, 0.0) == Ordering::Less && cmp_tol(p.0, beta) != Ordering::Less)
                .map(|p| p.1)
                .sum();
            -d0 / 2.0 - s as f64
        }
        Ordering::Greater => {
            let s: usize = pairs
                .iter()
                .filter(|p| cmp_tol(p.0, 0.0) == Ordering::Greater && cmp_tol(p.0, beta) == Ordering::Less)
                .map(|p| p.1)
                .sum();
            d0 / 2.0 + s as f64
        }
    }
}

fn d_at(pairs: &[(f64, usize)], beta: f64) -> usize {
    pairs.iter().filter(|p| cmp_tol(p.0, beta) == Ordering::Equal).map(|p| p.1).sum()
}

fn pairs(spec: &LinkSpectrum, sign: f64) -> Vec<(f64, usize)> {
    spec.modes().iter().map(|m| (sign * m.lambda, m.multiplicity)).collect()
}

/// `H_{beta,B}` for the link spectrum of `op`.
pub fn h_beta(op: &TidOperator, beta: f64) -> Result<f64> {
    require_window(op.spectrum(), &[beta, 0.0])?;
    Ok(h_of(&pairs(op.spectrum(), 1.0), beta))
}

/// `H_{beta,B,b}`: `H_{beta,B}`, plus `d_beta` when `b < 1/2`.
pub fn h_beta_b(op: &TidOperator, beta: f64, b: f64) -> Result<f64> {
    h_signed(op.spectrum(), 1.0, beta, b)
}

fn h_signed(spec: &LinkSpectrum, sign: f64, beta: f64, b: f64) -> Result<f64> {
    if b == 0.5 {
        return Err(Error::BorderlineB);
    }
    require_window(spec, &[sign * beta, 0.0])?;
    let p = pairs(spec, sign);
    let h = h_of(&p, beta);
    Ok(if b < 0.5 { h + d_at(&p, beta) as f64 } else { h })
}

fn h_terms(spec: &LinkSpectrum, w: &EndWeights) -> Result<HTerms> {
    Ok(HTerms {
        plus: h_signed(spec, 1.0, w.beta_plus, w.b_plus)?,
        minus: h_signed(spec, -1.0, w.beta_minus, w.b_minus)?,
    })
}

/// Eta invariant of the full lattice `{n + c}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EtaResult {
    pub offset: f64,
    pub eta0: f64,
    pub kernel_dim: usize,
    pub convention_a: f64,
    pub convention_b: f64,
    /// Value from the extrapolated Dirichlet series.
    pub numeric: f64,
    pub discrepancy: f64,
}

/// Fractional part in `[0, 1)`, snapping values within `1e-12` of an integer to 0.
pub fn lattice_offset(c: f64) -> f64 {
    let f = c - c.floor();
    if f < 1e-12 || 1.0 - f < 1e-12 {
        0.0
    } else {
        f
    }
}

/// Closed form `eta(0) = 1 - 2c`, from `zeta(0, a) = 1/2 - a`.
pub fn eta_closed_form(c: f64) -> f64 {
    if c == 0.0 {
        0.0
    } else {
        1.0 - 2.0 * c
    }
}

const BERNOULLI: [f64; 6] = [1.0 / 6.0, -1.0 / 30.0, 1.0 / 42.0, -1.0 / 30.0, 5.0 / 66.0, -691.0 / 2730.0];

/// `sum_{lambda != 0} sign(lambda) |lambda|^{-s}` over `{n + c}`, for `s > 0`.
pub fn eta_series(s: f64, c: f64) -> f64 {
    if c == 0.0 {
        return 0.0;
    }
    let (a, b) = (c, 1.0 - c);
    let g = |x: f64| (x + a).powf(-s) - (x + b).powf(-s);
    let mut sum = 0.0;
    for n in (0..ETA_TERMS).rev() {
        sum += g(n as f64);
    }
    let nn = ETA_TERMS as f64;
    // int_N^inf g, continued analytically; stable as s -> 1
    let (la, lb) = ((nn + a).ln(), (nn + b).ln());
    let x = 1.0 - s;
    let integral = if x == 0.0 { -(la - lb) } else { -(x * lb).exp() * (x * (la - lb)).exp_m1() / x };
    let mut em = integral + 0.5 * g(nn);
    let mut fact = 1.0;
    for (k, bk) in BERNOULLI.iter().enumerate() {
        let j = 2 * k + 1;
        // (2k)!
        fact *= if k == 0 { 2.0 } else { ((2 * k - 1) * (2 * k)) as f64 };
        let poch: f64 = (0..j).map(|i| -s - i as f64).product();
        let dj = poch * ((nn + a).powf(-s - j as f64) - (nn + b).powf(-s - j as f64));
        em -= bk / fact * dj;
    }
    sum + em
}

/// Polynomial extrapolation of `(xs, ys)` to `x0`.
fn neville(xs: &[f64], ys: &[f64], x0: f64) -> f64 {
    let mut p = ys.to_vec();
    let n = xs.len();
    for k in 1..n {
        for i in 0..n - k {
            p[i] = ((x0 - xs[i + k]) * p[i] + (xs[i] - x0) * p[i + 1]) / (xs[i] - xs[i + k]);
        }
    }
    p[0]
}

/// `eta(0)` from the Dirichlet series sampled at Chebyshev nodes and extrapolated to `s = 0`.
pub fn eta_numeric(c: f64) -> f64 {
    let (lo, hi) = ETA_S_RANGE;
    let xs: Vec<f64> = (0..ETA_NODES)
        .map(|k| {
            let th = std::f64::consts::PI * (2 * k + 1) as f64 / (2 * ETA_NODES) as f64;
            0.5 * (lo + hi) + 0.5 * (hi - lo) * th.cos()
        })
        .collect();
    let ys: Vec<f64> = xs.iter().map(|&s| eta_series(s, c)).collect();
    neville(&xs, &ys, 0.0)
}

pub fn eta_lattice(offset: f64) -> Result<EtaResult> {
    if !(0.0..1.0).contains(&offset) {
        return Err(Error::InvalidInput(format!("lattice offset must lie in [0, 1), got {offset}")));
    }
    let c = lattice_offset(offset);
    let eta0 = eta_closed_form(c);
    let h = usize::from(c == 0.0);
    let numeric = eta_numeric(c);
    Ok(EtaResult {
        offset: c,
        eta0,
        kernel_dim: h,
        convention_a: eta0,
        convention_b: eta0 + h as f64,
        numeric,
        discrepancy: (numeric - eta0).abs(),
    })
}

fn lattice_of(spec: &LinkSpectrum) -> Result<f64> {
    match spec.source {
        SpectrumSource::Lattice { offset, .. } => Ok(lattice_offset(offset)),
        ref s => Err(Error::EtaUnavailable(format!("eta is only available for lattice spectra, got {}", s.tag()))),
    }
}

fn eta_terms(spec: &LinkSpectrum) -> Result<EtaTerms> {
    let c = lattice_of(spec)?;
    Ok(EtaTerms { eta_b: eta_closed_form(c), eta_minus_b: eta_closed_form(lattice_offset(1.0 - c)) })
}

/// Total multiplicity of eigenvalues in `[lo, hi)`.
fn crossing_count(spec: &LinkSpectrum, lo: f64, hi: f64) -> i64 {
    spec.modes()
        .iter()
        .filter(|m| cmp_tol(m.lambda, lo) != Ordering::Less && cmp_tol(m.lambda, hi) == Ordering::Less)
        .map(|m| m.multiplicity as i64)
        .sum()
}

/// Index change when the weight on one end moves from `beta_from` to `beta_to`.
pub fn index_change(op: &TidOperator, beta_from: f64, beta_to: f64, b: f64) -> Result<i64> {
    require_first_order(op)?;
    let spec = op.spectrum();
    let d = |beta: f64| -> usize { d_at(&pairs(spec, 1.0), beta) };
    if b == 0.5 && (d(beta_from) > 0 || d(beta_to) > 0) {
        return Err(Error::BorderlineB);
    }
    require_window(spec, &[beta_from, beta_to])?;
    let extra = |beta: f64| if b < 0.5 { d(beta) as i64 } else { 0 };
    let between = match cmp_tol(beta_from, beta_to) {
        Ordering::Equal => 0,
        Ordering::Less => crossing_count(spec, beta_from, beta_to),
        Ordering::Greater => -crossing_count(spec, beta_to, beta_from),
    };
    Ok(between + extra(beta_to) - extra(beta_from))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Prediction {
    pub weights: EndWeights,
    pub predicted: f64,
    pub counted: i64,
    pub agrees: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CalibrationReport {
    pub base: IndexReport,
    pub alpha0: f64,
    pub eta_terms: EtaTerms,
    pub predictions: Vec<Prediction>,
}

/// Fix the heat-kernel constant from the counted index at `base`, then predict `targets`.
pub fn calibrate_and_predict(op: &TidOperator, base: &EndWeights, targets: &[EndWeights]) -> Result<CalibrationReport> {
    let eta = eta_terms(op.spectrum())?;
    let mut base_rep = mode_count_index(op, base)?;
    let ledger_sum = |r: &IndexReport| -eta.eta_b / 2.0 - eta.eta_minus_b / 2.0 + r.h_terms.plus + r.h_terms.minus;
    let alpha0 = base_rep.index as f64 - ledger_sum(&base_rep);
    base_rep.alpha0 = Some(alpha0);
    let predictions = targets
        .iter()
        .map(|t| {
            let r = mode_count_index(op, t)?;
            let predicted = alpha0 + ledger_sum(&r);
            Ok(Prediction { weights: r.weights, predicted, counted: r.index, agrees: (predicted - r.index as f64).abs() < 1e-9 })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CalibrationReport { base: base_rep, alpha0, eta_terms: eta, predictions })
}

/// Both sides of `Eta(B - beta) = Eta(B) - 2 H_{beta,B} - d_beta` under the
/// plain and kernel-augmented eta conventions.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PropEtaReport {
    pub beta: f64,
    pub h_beta: f64,
    pub d_beta: usize,
    pub lhs_a: f64,
    pub rhs_a: f64,
    pub lhs_b: f64,
    pub rhs_b: f64,
    pub discrepancy_a: f64,
    pub discrepancy_b: f64,
}

pub fn check_prop_eta(op: &TidOperator, beta: f64) -> Result<PropEtaReport> {
    require_first_order(op)?;
    let c = lattice_of(op.spectrum())?;
    let shifted = lattice_offset(c - beta);
    let lhs_a = eta_closed_form(shifted);
    let lhs_b = lhs_a + f64::from(u8::from(shifted == 0.0));
    let eta_a = eta_closed_form(c);
    let eta_b = eta_a + f64::from(u8::from(c == 0.0));
    let h = h_beta(op, beta)?;
    let d = usize::from(lattice_offset(beta - c) == 0.0);
    let rhs_a = eta_a - 2.0 * h - d as f64;
    let rhs_b = eta_b - 2.0 * h - d as f64;
    Ok(PropEtaReport {
        beta,
        h_beta: h,
        d_beta: d,
        lhs_a,
        rhs_a,
        lhs_b,
        rhs_b,
        discrepancy_a: lhs_a - rhs_a,
        discrepancy_b: lhs_b - rhs_b,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lat0() -> TidOperator {
        TidOperator::first_order(LinkSpectrum::lattice(0.0, 4).unwrap())
    }

    fn w(bp: f64, bm: f64, b: f64) -> EndWeights {
        EndWeights::new(bp, bm, b, b).unwrap()
    }

    #[test]
    fn counted_examples() {
        let op = lat0();
        let r = mode_count_index(&op, &w(0.0, 0.0, 0.6)).unwrap();
        assert_eq!((r.ker_dim, r.coker_dim, r.index), (0, 1, -1));
        let r = mode_count_index(&op, &w(0.5, 0.0, 0.6)).unwrap();
        assert_eq!((r.ker_dim, r.coker_dim, r.index), (0, 0, 0));
        let r = mode_count_index(&op, &w(1.5, 0.0, 0.6)).unwrap();
        assert_eq!((r.ker_dim, r.coker_dim, r.index), (1, 0, 1));
        assert!(r.ledger.iter().any(|row| row.in_kernel && row.lambda == 1.0));
        assert!(matches!(EndWeights::new(0.0, 0.0, 0.5, 0.6), Err(Error::BorderlineB)));
        assert!(matches!(mode_count_index(&op, &w(4.5, 0.0, 0.6)), Err(Error::TruncationExhausted(_))));
    }

    #[test]
    fn h_examples() {
        let op = lat0();
        assert_eq!(h_beta(&op, 0.0).unwrap(), -0.5);
        assert_eq!(h_beta(&op, 0.5).unwrap(), 0.5);
        assert_eq!(h_beta(&op, -0.25).unwrap(), -0.5);
        assert_eq!(h_beta_b(&op, 1.0, 0.4).unwrap(), 1.5);
        assert_eq!(h_beta(&op, -1.0).unwrap(), -1.5);
        assert_eq!(h_beta(&op, 2.5).unwrap(), 2.5);
    }

    #[test]
    fn eta_examples() {
        let e = eta_lattice(0.25).unwrap();
        assert_eq!(e.eta0, 0.5);
        assert!(e.discrepancy < 1e-6, "{}", e.discrepancy);
        assert_eq!(eta_lattice(0.5).unwrap().convention_a, 0.0);
        let z = eta_lattice(0.0).unwrap();
        assert_eq!((z.eta0, z.kernel_dim, z.convention_b), (0.0, 1, 1.0));
        assert!(eta_lattice(1.0).is_err() && eta_lattice(-0.1).is_err());
    }

    #[test]
    fn eta_series_matches_digamma_at_one() {
        // at s = 1 the series is psi(1 - c) - psi(c); for c = 1/4 this is pi
        let v = eta_series(1.0, 0.25);
        assert!((v - std::f64::consts::PI).abs() < 1e-12, "{v}");
        // s = 2, c = 1/2 cancels exactly
        assert!(eta_series(2.0, 0.5).abs() < 1e-15);
    }

    #[test]
    fn index_change_examples() {
        let op = lat0();
        assert_eq!(index_change(&op, 0.5, 1.5, 0.6).unwrap(), 1);
        assert_eq!(index_change(&op, 0.7, 0.7, 0.4).unwrap(), 0);
        assert_eq!(index_change(&op, 1.5, -0.5, 0.6).unwrap(), -2);
        assert!(matches!(index_change(&op, 1.0, 2.0, 0.5), Err(Error::BorderlineB)));
    }

    #[test]
    fn calibration_examples() {
        let op = lat0();
        let base = w(0.0, 0.0, 0.6);
        let rep = calibrate_and_predict(&op, &base, &[w(0.5, 0.0, 0.6), base, w(1.5, 0.0, 0.6)]).unwrap();
        assert_eq!(rep.alpha0, 0.0);
        assert!(rep.predictions.iter().all(|p| p.agrees));
        assert_eq!(rep.predictions[0].counted, 0);
        assert_eq!(rep.predictions[2].predicted, 1.0);
        let sph = TidOperator::first_order(
            LinkSpectrum::explicit(vec![crate::EigenMode { lambda: 1.0, multiplicity: 2, label: String::new() }]).unwrap(),
        );
        assert!(matches!(calibrate_and_predict(&sph, &base, &[]), Err(Error::EtaUnavailable(_))));
    }

    #[test]
    fn calibration_off_lattice_zero() {
        let op = TidOperator::first_order(LinkSpectrum::lattice(0.25, 5).unwrap());
        let base = w(0.0, 0.0, 0.6);
        let mut targets = Vec::new();
        for &bp in &[-1.75, -0.75, 0.25, 0.6, 1.25, 2.0] {
            for &bm in &[-1.25, 0.0, 0.75, 1.1] {
                for &b in &[0.4, 0.6] {
                    targets.push(EndWeights::new(bp, bm, b, 1.0 - b).unwrap());
                }
            }
        }
        let rep = calibrate_and_predict(&op, &base, &targets).unwrap();
        for p in &rep.predictions {
            assert!(p.agrees, "{p:?}");
        }
    }

    #[test]
    fn prop_eta_examples() {
        let op = lat0();
        let r = check_prop_eta(&op, 0.5).unwrap();
        assert_eq!((r.lhs_a, r.rhs_a, r.rhs_b, r.lhs_b), (0.0, -1.0, 0.0, 0.0));
        let r = check_prop_eta(&op, 0.0).unwrap();
        assert_eq!(r.discrepancy_b, 0.0);
        let r = check_prop_eta(&op, 0.25).unwrap();
        assert_eq!(r.lhs_a, -0.5);
    }
}
