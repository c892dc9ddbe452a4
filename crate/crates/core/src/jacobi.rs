//! Cyclic Jacobi eigensolver for dense symmetric matrices.

use crate::error::{Error, Result};

pub const MAX_SWEEPS: usize = 100;

/// Eigen-decomposition `a = q diag(values) q^T`; `vectors[j]` is the j-th eigenvector.
#[derive(Clone, Debug)]
pub struct SymEigen {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
}

pub fn frobenius(a: &[Vec<f64>]) -> f64 {
    a.iter().flatten().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn check_symmetric(a: &[Vec<f64>], rel_tol: f64) -> Result<()> {
    let n = a.len();
    if n == 0 || a.iter().any(|r| r.len() != n) {
        return Err(Error::InvalidInput("matrix must be square and nonempty".into()));
    }
    if a.iter().flatten().any(|x| !x.is_finite()) {
        return Err(Error::InvalidInput("matrix entries must be finite".into()));
    }
    let scale = frobenius(a).max(f64::MIN_POSITIVE);
    for i in 0..n {
        for j in 0..i {
            if (a[i][j] - a[j][i]).abs() > rel_tol * scale {
                return Err(Error::InvalidInput(format!("matrix not symmetric at ({i}, {j})")));
            }
        }
    }
    Ok(())
}

pub fn sym_eigen(a: &[Vec<f64>]) -> Result<SymEigen> {
    check_symmetric(a, 1e-12)?;
    let n = a.len();
    let mut m: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| 0.5 * (a[i][j] + a[j][i])).collect())
        .collect();
    let mut v: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
    let scale = frobenius(&m);
    let mut converged = n == 1 || scale == 0.0;
    for _ in 0..MAX_SWEEPS {
        if converged {
            break;
        }
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[i][j] * m[i][j])
            .sum::<f64>()
            .sqrt();
        if off <= 1e-15 * scale {
            converged = true;
            break;
        }
        for p in 0..n - 1 {
            for q in p + 1..n {
                let apq = m[p][q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (m[q][q] - m[p][p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[k][p];
                    let mkq = m[k][q];
                    m[k][p] = c * mkp - s * mkq;
                    m[k][q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[p][k];
                    let mqk = m[q][k];
                    m[p][k] = c * mpk - s * mqk;
                    m[q][k] = s * mpk + c * mqk;
                }
                for row in v.iter_mut() {
                    let vp = row[p];
                    let vq = row[q];
                    row[p] = c * vp - s * vq;
                    row[q] = s * vp + c * vq;
                }
            }
        }
    }
    if !converged {
        return Err(Error::EigenNonConvergent(MAX_SWEEPS));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[i][i].total_cmp(&m[j][j]));
    Ok(SymEigen {
        values: order.iter().map(|&i| m[i][i]).collect(),
        vectors: order.iter().map(|&j| (0..n).map(|i| v[i][j]).collect()).collect(),
    })
}

impl SymEigen {
    pub fn reconstruct(&self) -> Vec<Vec<f64>> {
        let n = self.values.len();
        let mut a = vec![vec![0.0; n]; n];
        for (lam, vec) in self.values.iter().zip(&self.vectors) {
            for i in 0..n {
                for j in 0..n {
                    a[i][j] += lam * vec[i] * vec[j];
                }
            }
        }
        a
    }
}
