//! LU factorization with complete pivoting, `P A Q = L U`.
//!
//! Used for every application of a block inverse (lemma ratios, certificates)
//! so that no explicit inverse is formed unless a caller asks for one.

use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;

pub const EPS: f64 = f64::EPSILON;

#[derive(Clone, Debug)]
pub struct LuFactor {
    n: usize,
    /// Unit lower L below the diagonal, U on and above, row-major.
    lu: Vec<f64>,
    /// `row_perm[k]` is the original row placed at position k.
    row_perm: Vec<usize>,
    col_perm: Vec<usize>,
    sign: f64,
    /// Number of nonzero pivots; less than `n` means exactly singular.
    rank: usize,
    norm1: f64,
}

impl LuFactor {
    pub fn new(a: &DenseMatrix) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::NotSquare {
                rows: a.nrows(),
                cols: a.ncols(),
            });
        }
        let n = a.nrows();
        let mut lu = a.as_slice().to_vec();
        let mut row_perm: Vec<usize> = (0..n).collect();
        let mut col_perm: Vec<usize> = (0..n).collect();
        let mut sign = 1.0;
        let mut rank = n;
        let norm1 = (0..n)
            .map(|j| (0..n).map(|i| a.get(i, j).abs()).sum::<f64>())
            .fold(0.0, f64::max);

        for k in 0..n {
            let (mut pi, mut pj, mut best) = (k, k, 0.0);
            for i in k..n {
                for j in k..n {
                    let v = lu[i * n + j].abs();
                    if v > best {
                        best = v;
                        pi = i;
                        pj = j;
                    }
                }
            }
            if best == 0.0 {
                rank = k;
                break;
            }
            if pi != k {
                for j in 0..n {
                    lu.swap(k * n + j, pi * n + j);
                }
                row_perm.swap(k, pi);
                sign = -sign;
            }
            if pj != k {
                for i in 0..n {
                    lu.swap(i * n + k, i * n + pj);
                }
                col_perm.swap(k, pj);
                sign = -sign;
            }
            let pivot = lu[k * n + k];
            for i in k + 1..n {
                let f = lu[i * n + k] / pivot;
                lu[i * n + k] = f;
                if f != 0.0 {
                    for j in k + 1..n {
                        lu[i * n + j] -= f * lu[k * n + j];
                    }
                }
            }
        }

        Ok(Self {
            n,
            lu,
            row_perm,
            col_perm,
            sign,
            rank,
            norm1,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn is_singular(&self) -> bool {
        self.rank < self.n
    }

    /// Signed product of pivots.
    pub fn det(&self) -> f64 {
        if self.is_singular() {
            return 0.0;
        }
        (0..self.n).map(|k| self.lu[k * self.n + k]).product::<f64>() * self.sign
    }

    /// Solves `A x = b`. Caller must check [`Self::is_singular`] first.
    #[allow(clippy::needless_range_loop)]
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        assert_eq!(b.len(), n);
        let mut y: Vec<f64> = self.row_perm.iter().map(|&i| b[i]).collect();
        for i in 0..n {
            let mut s = y[i];
            for j in 0..i {
                s -= self.lu[i * n + j] * y[j];
            }
            y[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for j in i + 1..n {
                s -= self.lu[i * n + j] * y[j];
            }
            y[i] = s / self.lu[i * n + i];
        }
        let mut x = vec![0.0; n];
        for (k, &j) in self.col_perm.iter().enumerate() {
            x[j] = y[k];
        }
        x
    }

    /// Solves `A^T x = b`.
    #[allow(clippy::needless_range_loop)]
    pub fn solve_transpose(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        assert_eq!(b.len(), n);
        // A^T = Q U^T L^T P
        let mut z: Vec<f64> = self.col_perm.iter().map(|&j| b[j]).collect();
        for i in 0..n {
            let mut s = z[i];
            for j in 0..i {
                s -= self.lu[j * n + i] * z[j];
            }
            z[i] = s / self.lu[i * n + i];
        }
        for i in (0..n).rev() {
            let mut s = z[i];
            for j in i + 1..n {
                s -= self.lu[j * n + i] * z[j];
            }
            z[i] = s;
        }
        let mut x = vec![0.0; n];
        for (k, &i) in self.row_perm.iter().enumerate() {
            x[i] = z[k];
        }
        x
    }

    pub fn inverse(&self) -> DenseMatrix {
        let n = self.n;
        let mut data = vec![0.0; n * n];
        let mut e = vec![0.0; n];
        for j in 0..n {
            e[j] = 1.0;
            let x = self.solve(&e);
            e[j] = 0.0;
            for (i, v) in x.into_iter().enumerate() {
                data[i * n + j] = v;
            }
        }
        DenseMatrix::from_raw(n, n, data)
    }

    /// `1 / (||A||_1 ||A^{-1}||_1)`, with the inverse formed explicitly.
    pub fn rcond(&self) -> f64 {
        if self.n == 0 {
            return 1.0;
        }
        if self.is_singular() || self.norm1 == 0.0 {
            return 0.0;
        }
        let inv = self.inverse();
        let n = self.n;
        let inv_norm1 = (0..n)
            .map(|j| (0..n).map(|i| inv.get(i, j).abs()).sum::<f64>())
            .fold(0.0, f64::max);
        let r = 1.0 / (self.norm1 * inv_norm1);
        if r.is_finite() {
            r
        } else {
            0.0
        }
    }
}

/// Factorizes `a` and fails if it is singular to working precision.
pub fn factor_nonsingular(a: &DenseMatrix) -> Result<LuFactor> {
    let lu = LuFactor::new(a)?;
    let rcond = lu.rcond();
    if rcond < EPS {
        return Err(Error::Singular { rcond });
    }
    Ok(lu)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::det_bruteforce;

    fn sample() -> DenseMatrix {
        DenseMatrix::from_rows(&[[2.0, -1.0, 0.5], [4.0, 3.0, -2.0], [-1.0, 0.25, 6.0]]).unwrap()
    }

    #[test]
    fn solve_and_transpose_solve() {
        let a = sample();
        let lu = LuFactor::new(&a).unwrap();
        let b = [1.0, -2.0, 3.0];
        let x = lu.solve(&b);
        for (r, bi) in a.matvec(&x).iter().zip(b) {
            assert!((r - bi).abs() < 1e-13);
        }
        let y = lu.solve_transpose(&b);
        for (r, bi) in a.transpose().matvec(&y).iter().zip(b) {
            assert!((r - bi).abs() < 1e-13);
        }
    }

    #[test]
    fn det_matches_bruteforce() {
        let a = sample();
        let lu = LuFactor::new(&a).unwrap();
        let d = det_bruteforce(&a).unwrap();
        assert!((lu.det() - d).abs() < 1e-12 * d.abs());
    }

    #[test]
    fn singular_detection() {
        let a = DenseMatrix::from_rows(&[[1.0, 2.0], [2.0, 4.0]]).unwrap();
        let lu = LuFactor::new(&a).unwrap();
        assert!(lu.is_singular() || lu.rcond() < EPS);
        assert!(matches!(factor_nonsingular(&a), Err(Error::Singular { .. })));
        assert!(factor_nonsingular(&DenseMatrix::zeros(3, 3)).is_err());
    }

    #[test]
    fn inverse_times_matrix_is_identity() {
        let a = sample();
        let inv = LuFactor::new(&a).unwrap().inverse();
        let p = a.matmul(&inv).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((p.get(i, j) - e).abs() < 1e-13);
            }
        }
    }
}
