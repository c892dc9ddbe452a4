//! Translation-invariant diagonal model operators and their indicial roots.

use crate::error::{Error, Result};
use crate::spectrum::LinkSpectrum;
use serde::{Deserialize, Serialize};

/// Tolerance for deciding that a weight hits an indicial root.
pub const ROOT_TOL: f64 = 1e-9;

/// `P0 = d/dt - B` (order 1) or `P0 = d^2/dt^2 - a1 d/dt - B` (order 2).
#[derive(Clone, Debug, PartialEq)]
pub struct TidOperator {
    order: u8,
    a1: f64,
    spectrum: LinkSpectrum,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RootKind {
    Ordinary,
    Super,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IndicialRoot {
    pub beta: f64,
    /// Eigenvalues witnessing the root.
    pub witnesses: Vec<f64>,
    pub kind: RootKind,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum WeightClass {
    NonIndicial,
    Indicial { lambda: f64 },
    SuperIndicial { lambda: f64 },
}

impl TidOperator {
    pub fn new(order: u8, a1: f64, spectrum: LinkSpectrum) -> Result<Self> {
        match order {
            1 if a1 != -1.0 => Err(Error::Schema(format!("first-order operators require a1 = -1, got {a1}"))),
            1 | 2 if a1.is_finite() => Ok(TidOperator { order, a1, spectrum }),
            1 | 2 => Err(Error::Schema("a1 must be finite".into())),
            _ => Err(Error::Schema(format!("order must be 1 or 2, got {order}"))),
        }
    }

    pub fn first_order(spectrum: LinkSpectrum) -> Self {
        TidOperator { order: 1, a1: -1.0, spectrum }
    }

    pub fn second_order(a1: f64, spectrum: LinkSpectrum) -> Result<Self> {
        Self::new(2, a1, spectrum)
    }

    pub fn order(&self) -> u8 {
        self.order
    }

    pub fn a1(&self) -> f64 {
        self.a1
    }

    pub fn spectrum(&self) -> &LinkSpectrum {
        &self.spectrum
    }

    /// Eigenvalue of the conjugated link operator for mode `lambda` at weight `beta`.
    pub fn shifted_eigenvalue(&self, lambda: f64, beta: f64) -> f64 {
        if self.order == 1 {
            lambda - beta
        } else {
            lambda + self.a1 * beta - beta * beta
        }
    }

    /// Drift `m = a1 - 2 beta` of the conjugated second-order operator.
    pub fn shifted_drift(&self, beta: f64) -> f64 {
        self.a1 - 2.0 * beta
    }

    pub fn shifted_spectrum(&self, beta: f64) -> Vec<(f64, usize)> {
        let mut v: Vec<(f64, usize)> = self
            .spectrum
            .modes()
            .iter()
            .map(|m| (self.shifted_eigenvalue(m.lambda, beta), m.multiplicity))
            .collect();
        v.sort_by(|a, b| a.0.total_cmp(&b.0));
        v
    }

    /// `Lambda_beta = beta^2 - a1 beta`.
    pub fn lambda_beta(&self, beta: f64) -> Result<f64> {
        if self.order != 2 {
            return Err(Error::InvalidInput("lambda_beta is defined for second-order operators".into()));
        }
        Ok(beta * beta - self.a1 * beta)
    }

    /// Whether eigenvalue `lambda` spans the kernel-parallel part at weight `beta`.
    pub fn is_parallel(&self, lambda: f64, beta: f64) -> bool {
        self.shifted_eigenvalue(lambda, beta).abs() <= ROOT_TOL
    }

    /// Indicial roots, both members of each second-order pair included when either lies in range.
    pub fn indicial_roots(&self, lo: f64, hi: f64) -> Vec<IndicialRoot> {
        let in_range = |b: f64| b >= lo - ROOT_TOL && b <= hi + ROOT_TOL;
        let mut raw: Vec<(f64, f64, RootKind)> = Vec::new();
        for m in self.spectrum.modes() {
            let lam = m.lambda;
            if self.order == 1 {
                if in_range(lam) {
                    raw.push((lam, lam, RootKind::Ordinary));
                }
                continue;
            }
            let half = 0.5 * self.a1;
            let disc = half * half + lam;
            if disc > ROOT_TOL {
                let r = disc.sqrt();
                let (b1, b2) = (half - r, half + r);
                if in_range(b1) || in_range(b2) {
                    raw.push((b1, lam, RootKind::Ordinary));
                    raw.push((b2, lam, RootKind::Ordinary));
                }
            } else if in_range(half) {
                raw.push((half, lam, RootKind::Super));
            }
        }
        raw.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut out: Vec<IndicialRoot> = Vec::new();
        for (beta, lam, kind) in raw {
            match out.last_mut() {
                Some(last) if (beta - last.beta).abs() <= ROOT_TOL => {
                    if !last.witnesses.contains(&lam) {
                        last.witnesses.push(lam);
                    }
                    if kind == RootKind::Super {
                        last.kind = RootKind::Super;
                    }
                }
                _ => out.push(IndicialRoot { beta, witnesses: vec![lam], kind }),
            }
        }
        out
    }

    pub fn classify_weight(&self, beta: f64) -> WeightClass {
        if self.order == 2 && (beta - 0.5 * self.a1).abs() <= ROOT_TOL {
            let bound = -0.25 * self.a1 * self.a1;
            if let Some(m) = self.spectrum.modes().iter().find(|m| m.lambda <= bound + ROOT_TOL) {
                return WeightClass::SuperIndicial { lambda: m.lambda };
            }
        }
        match self.spectrum.modes().iter().find(|m| self.is_parallel(m.lambda, beta)) {
            Some(m) => WeightClass::Indicial { lambda: m.lambda },
            None => WeightClass::NonIndicial,
        }
    }

    pub fn require_not_super(&self, beta: f64) -> Result<()> {
        match self.classify_weight(beta) {
            WeightClass::SuperIndicial { .. } => Err(Error::SuperIndicial { beta }),
            _ => Ok(()),
        }
    }

    /// Nearest indicial roots strictly below and strictly above `beta`.
    pub fn adjacent_roots(&self, beta: f64) -> Result<(f64, f64)> {
        let roots = self.indicial_roots(f64::NEG_INFINITY, f64::INFINITY);
        let below = roots.iter().rev().find(|r| r.beta < beta - ROOT_TOL).map(|r| r.beta);
        let above = roots.iter().find(|r| r.beta > beta + ROOT_TOL).map(|r| r.beta);
        match (below, above) {
            (Some(b), Some(a)) => Ok((b, a)),
            (None, _) => Err(Error::TruncationExhausted("below")),
            (_, None) => Err(Error::TruncationExhausted("above")),
        }
    }
}

/// Weight and regularity parameters `(beta, gamma, b, p)` and `(k, alpha)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightSpec {
    pub beta: f64,
    #[serde(default)]
    pub gamma: f64,
    pub b: f64,
    #[serde(default = "default_p")]
    pub p: f64,
    #[serde(default)]
    pub k: usize,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
}

fn default_p() -> f64 {
    2.0
}

fn default_alpha() -> f64 {
    0.5
}

impl WeightSpec {
    pub fn sobolev(beta: f64, gamma: f64, b: f64, p: f64) -> Result<Self> {
        WeightSpec { beta, gamma, b, p, k: 0, alpha: 0.5 }.validated()
    }

    pub fn schauder(beta: f64, gamma: f64, b: f64, k: usize, alpha: f64) -> Result<Self> {
        WeightSpec { beta, gamma, b, p: 2.0, k, alpha }.validated()
    }

    pub fn validated(self) -> Result<Self> {
        if !(self.p >= 2.0) || !self.p.is_finite() {
            return Err(Error::InvalidInput(format!("p must be >= 2, got {}", self.p)));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidInput(format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        if !(self.beta.is_finite() && self.gamma.is_finite() && self.b.is_finite()) {
            return Err(Error::InvalidInput("weights must be finite".into()));
        }
        Ok(self)
    }
}
