//! Discrete real spectra standing in for the link operator.

use crate::error::{Error, Result};
use crate::jacobi;
use serde::{Deserialize, Serialize};

/// Gap below which eigenvalues are merged.
pub const MERGE_GAP: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EigenMode {
    pub lambda: f64,
    #[serde(rename = "mult")]
    pub multiplicity: usize,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub label: String,
}

#[derive(Clone, Debug, PartialEq)]
pub enum SpectrumSource {
    Lattice { offset: f64, n_max: usize },
    Sphere { dim_link: usize, l_max: usize },
    Explicit,
    Matrix,
}

impl SpectrumSource {
    pub fn tag(&self) -> String {
        match self {
            SpectrumSource::Lattice { offset, .. } => format!("lattice({offset})"),
            SpectrumSource::Sphere { dim_link, l_max } => format!("sphere({dim_link},{l_max})"),
            SpectrumSource::Explicit => "explicit".into(),
            SpectrumSource::Matrix => "matrix".into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LinkSpectrum {
    modes: Vec<EigenMode>,
    pub source: SpectrumSource,
    pub truncation_note: Option<String>,
}

impl LinkSpectrum {
    /// Build from explicit modes; lambdas must be finite and strictly increasing.
    pub fn explicit(modes: Vec<EigenMode>) -> Result<Self> {
        Self::validate(&modes)?;
        Ok(LinkSpectrum { modes, source: SpectrumSource::Explicit, truncation_note: None })
    }

    fn validate(modes: &[EigenMode]) -> Result<()> {
        if modes.is_empty() {
            return Err(Error::Schema("spectrum has no modes".into()));
        }
        for m in modes {
            if !m.lambda.is_finite() {
                return Err(Error::Schema("eigenvalue must be finite".into()));
            }
            if m.multiplicity == 0 {
                return Err(Error::Schema("multiplicity must be at least 1".into()));
            }
        }
        for w in modes.windows(2) {
            if w[0].lambda >= w[1].lambda {
                return Err(Error::Schema(format!(
                    "eigenvalues must be strictly increasing ({} then {})",
                    w[0].lambda, w[1].lambda
                )));
            }
        }
        Ok(())
    }

    /// `{n + c : |n + c| <= n_max + 1/2}`, each simple; for `0 <= c < 1/2` this is `|n| <= n_max`.
    pub fn lattice(offset: f64, n_max: usize) -> Result<Self> {
        if n_max < 1 {
            return Err(Error::InvalidInput("n_max must be at least 1".into()));
        }
        if !offset.is_finite() {
            return Err(Error::InvalidInput("lattice offset must be finite".into()));
        }
        // symmetric window |n + c| <= n_max + 1/2
        let bound = n_max as f64 + 0.5;
        let lo = (-bound - offset).ceil() as i64;
        let hi = (bound - offset).floor() as i64;
        let modes = (lo..=hi)
            .map(|n| EigenMode { lambda: n as f64 + offset, multiplicity: 1, label: format!("n={n}") })
            .collect();
        Ok(LinkSpectrum {
            modes,
            source: SpectrumSource::Lattice { offset, n_max },
            truncation_note: Some(format!("lattice truncated to |lambda| <= {n_max}.5")),
        })
    }

    /// Laplacian on the round sphere `S^k`, `k = dim_link`: eigenvalues
    /// `l (l + k - 1)` with multiplicity `C(l+k, k) - C(l+k-2, k)`.
    pub fn sphere_laplacian(dim_link: usize, l_max: usize) -> Result<Self> {
        if dim_link < 2 {
            return Err(Error::InvalidInput(format!("sphere dimension {dim_link} must be at least 2")));
        }
        let k = dim_link as u64;
        let mut modes: Vec<EigenMode> = Vec::new();
        for l in 0..=l_max as u64 {
            let lambda = (l * (l + k - 1)) as f64;
            let mult = binom(l + k, k) - if l >= 2 { binom(l + k - 2, k) } else { 0 };
            modes.push(EigenMode { lambda, multiplicity: mult as usize, label: format!("l={l}") });
        }
        Ok(LinkSpectrum {
            modes: merge_sorted(modes),
            source: SpectrumSource::Sphere { dim_link, l_max },
            truncation_note: Some(format!("spherical harmonics truncated to degree <= {l_max}")),
        })
    }

    /// Spectrum of a symmetric matrix by cyclic Jacobi, with close eigenvalues merged.
    pub fn from_matrix(sym: &[Vec<f64>]) -> Result<Self> {
        let eig = jacobi::sym_eigen(sym)?;
        let modes = eig
            .values
            .iter()
            .enumerate()
            .map(|(i, &lambda)| EigenMode { lambda, multiplicity: 1, label: format!("v{i}") })
            .collect();
        Ok(LinkSpectrum { modes: merge_sorted(modes), source: SpectrumSource::Matrix, truncation_note: None })
    }

    pub fn modes(&self) -> &[EigenMode] {
        &self.modes
    }

    pub fn lambdas(&self) -> Vec<f64> {
        self.modes.iter().map(|m| m.lambda).collect()
    }

    /// One eigenvalue per orthonormal basis vector (multiplicities expanded).
    pub fn expanded(&self) -> Vec<f64> {
        self.modes.iter().flat_map(|m| std::iter::repeat(m.lambda).take(m.multiplicity)).collect()
    }

    pub fn total_dim(&self) -> usize {
        self.modes.iter().map(|m| m.multiplicity).sum()
    }

    pub fn min_lambda(&self) -> f64 {
        self.modes[0].lambda
    }

    pub fn max_lambda(&self) -> f64 {
        self.modes[self.modes.len() - 1].lambda
    }

    /// Multiplicity of the eigenvalue within `tol` of `value`, or 0.
    pub fn dim_ker_at(&self, value: f64, tol: f64) -> Result<usize> {
        if !(tol >= 0.0) {
            return Err(Error::InvalidInput("tolerance must be non-negative".into()));
        }
        let hits: Vec<&EigenMode> = self.modes.iter().filter(|m| (m.lambda - value).abs() <= tol).collect();
        match hits.len() {
            0 => Ok(0),
            1 => Ok(hits[0].multiplicity),
            k => Err(Error::Ambiguous(k)),
        }
    }
}

fn binom(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u64, |acc, i| acc * (n - i) / (i + 1))
}

fn merge_sorted(mut modes: Vec<EigenMode>) -> Vec<EigenMode> {
    modes.sort_by(|a, b| a.lambda.total_cmp(&b.lambda));
    let mut out: Vec<EigenMode> = Vec::new();
    for m in modes {
        match out.last_mut() {
            Some(last) if (m.lambda - last.lambda).abs() <= MERGE_GAP => {
                last.multiplicity += m.multiplicity;
                if !m.label.is_empty() {
                    last.label = format!("{}+{}", last.label, m.label);
                }
            }
            _ => out.push(m),
        }
    }
    out
}
