//! Singular values by one-sided Jacobi.
//!
//! This is the verification oracle: it shares no code with the elimination
//! engine. Column pairs of the (possibly transposed, so that rows >= cols)
//! matrix are rotated until every pair is numerically orthogonal; the
//! singular values are then the column norms.

use crate::error::{Error, Result};
use crate::lu::EPS;
use crate::matrix::DenseMatrix;

const ORTHOGONALITY_TOL: f64 = 1e-15;
const MAX_SWEEPS: usize = 100;

/// Nonincreasing singular values, `min(m, n)` of them.
#[derive(Clone, Debug, PartialEq)]
pub struct SvdResult {
    singular_values: Vec<f64>,
}

impl SvdResult {
    pub fn values(&self) -> &[f64] {
        &self.singular_values
    }

    pub fn len(&self) -> usize {
        self.singular_values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.singular_values.is_empty()
    }

    /// `sigma_k` with 1-based `k`; `sigma_{d+1} := 0` and `sigma_0` is
    /// undefined (`None`).
    pub fn sigma(&self, k: usize) -> Option<f64> {
        match k {
            0 => None,
            k if k <= self.len() => Some(self.singular_values[k - 1]),
            _ => Some(0.0),
        }
    }

    pub fn largest(&self) -> f64 {
        self.singular_values.first().copied().unwrap_or(0.0)
    }

    pub fn smallest(&self) -> f64 {
        self.singular_values.last().copied().unwrap_or(0.0)
    }
}

pub fn singular_values(a: &DenseMatrix) -> Result<SvdResult> {
    if a.is_empty() {
        return Err(Error::EmptyMatrix);
    }
    // columns of the tall orientation, each stored contiguously
    let (len, mut cols): (usize, Vec<Vec<f64>>) = if a.nrows() >= a.ncols() {
        (a.nrows(), (0..a.ncols()).map(|j| a.col(j)).collect())
    } else {
        (a.ncols(), (0..a.nrows()).map(|i| a.row(i).to_vec()).collect())
    };
    let tol = ORTHOGONALITY_TOL.max(EPS * (len as f64).sqrt());
    let k = cols.len();

    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for i in 0..k {
            for j in i + 1..k {
                let (left, right) = cols.split_at_mut(j);
                if rotate_pair(&mut left[i], &mut right[0], tol) {
                    rotated = true;
                }
            }
        }
        if !rotated {
            break;
        }
    }

    let mut sv: Vec<f64> = cols.iter().map(|c| norm2(c)).collect();
    sv.sort_by(|x, y| y.total_cmp(x));
    Ok(SvdResult { singular_values: sv })
}

/// Orthogonalizes two columns; returns whether a rotation was applied.
fn rotate_pair(x: &mut [f64], y: &mut [f64], tol: f64) -> bool {
    let mut alpha = 0.0;
    let mut beta = 0.0;
    let mut gamma = 0.0;
    for (a, b) in x.iter().zip(y.iter()) {
        alpha += a * a;
        beta += b * b;
        gamma += a * b;
    }
    if gamma == 0.0 || gamma.abs() <= tol * (alpha * beta).sqrt() {
        return false;
    }
    let zeta = (beta - alpha) / (2.0 * gamma);
    let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
    let c = 1.0 / (1.0 + t * t).sqrt();
    let s = c * t;
    for (a, b) in x.iter_mut().zip(y.iter_mut()) {
        let (u, v) = (*a, *b);
        *a = c * u - s * v;
        *b = s * u + c * v;
    }
    true
}

fn norm2(v: &[f64]) -> f64 {
    // scaled to avoid overflow/underflow on extreme inputs
    let scale = v.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    if scale == 0.0 {
        return 0.0;
    }
    scale * v.iter().map(|x| (x / scale).powi(2)).sum::<f64>().sqrt()
}

/// Product of all `min(m, n)` singular values.
pub fn volume(a: &DenseMatrix) -> Result<f64> {
    Ok(singular_values(a)?.values().iter().product())
}

pub fn spectral_norm(a: &DenseMatrix) -> Result<f64> {
    Ok(singular_values(a)?.largest())
}

/// Threshold `max(m, n) * eps_mach * sigma_1` used to call a singular value
/// numerically nonzero.
pub fn svd_rank_threshold(m: usize, n: usize, sigma_1: f64) -> f64 {
    m.max(n) as f64 * EPS * sigma_1
}

/// Largest `s` with `sigma_s >= max(m, n) * eps_mach * sigma_1`; 0 for the
/// zero matrix.
pub fn numerical_rank_svd(a: &DenseMatrix) -> Result<usize> {
    let sv = singular_values(a)?;
    Ok(numerical_rank_from(&sv, a.nrows(), a.ncols()))
}

pub fn numerical_rank_from(sv: &SvdResult, m: usize, n: usize) -> usize {
    let sigma_1 = sv.largest();
    if sigma_1 == 0.0 {
        return 0;
    }
    let threshold = svd_rank_threshold(m, n, sigma_1);
    sv.values().iter().take_while(|&&s| s >= threshold).count()
}
