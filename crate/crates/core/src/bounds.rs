//! Independent certificates for a [`RankRevealResult`].
//!
//! Everything is recomputed from `A` and the two index sets: the Schur
//! complement with a refined, compensated solve and singular values with the
//! Jacobi oracle. Engine-internal quantities are never consulted.

use std::fmt;

use crate::compensated::{two_sum, DoubleDouble};
use crate::error::{Error, Result};
use crate::lu::LuFactor;
use crate::matrix::{max_abs_norm, select, DenseMatrix, IndexSet};
use crate::rrge::RankRevealResult;
use crate::svd::{numerical_rank_from, singular_values, SvdResult};

/// Relative slack on every certified inequality.
pub const RELATIVE_SLACK: f64 = 1e-8;
/// Extra absolute slack, in units of `sigma_1(A)`, on inequalities with a
/// side computed by the SVD oracle (its error is absolute, not relative).
pub const ORACLE_ABS_SLACK: f64 = 1e-12;

const REFINEMENT_STEPS: usize = 2;

/// `sigma_min(A11) >= sigma_r(A) / (2 rho^2 r sqrt((m-r+1)(n-r+1)))`.
pub fn lower_bound_factor(rho: f64, m: usize, n: usize, r: usize) -> f64 {
    let (m, n, r) = (m as f64, n as f64, r as f64);
    1.0 / (2.0 * rho * rho * r * ((m - r + 1.0) * (n - r + 1.0)).sqrt())
}

/// `||A/A11||_2 <= 2 rho^2 (r+1) sqrt((m-r)(n-r)) sigma_{r+1}(A)`.
pub fn upper_bound_factor(rho: f64, m: usize, n: usize, r: usize) -> f64 {
    let (m, n, r) = (m as f64, n as f64, r as f64);
    2.0 * rho * rho * (r + 1.0) * ((m - r) * (n - r)).sqrt()
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoundCheck {
    pub name: &'static str,
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

impl fmt::Display for BoundCheck {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdict = if self.holds { "ok" } else { "FAILED" };
        write!(f, "{}: {:.6e} <= {:.6e} {verdict}", self.name, self.lhs, self.rhs)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoundCertificate {
    pub rank: usize,
    pub schur_norm_c: f64,
    /// `||A11^{-1}||_C`, 0 for `r = 0`.
    pub inv_norm_c: f64,
    pub x_norm_c: f64,
    pub y_norm_c: f64,
    pub rho_beta: f64,
    pub rho_over_beta: f64,
    pub sigma_min_a11: Option<f64>,
    pub sigma_r: Option<f64>,
    pub sigma_r_plus_1: Option<f64>,
    pub schur_norm_2: Option<f64>,
    pub lower_bound_factor: Option<f64>,
    pub upper_bound_factor: Option<f64>,
    pub checks: Vec<BoundCheck>,
    pub passed: bool,
}

impl BoundCertificate {
    pub fn first_failure(&self) -> Option<&BoundCheck> {
        self.checks.iter().find(|c| !c.holds)
    }
}

/// `lhs <= rhs (1 + slack) + abs`.
fn check(name: &'static str, lhs: f64, rhs: f64, abs: f64) -> BoundCheck {
    BoundCheck {
        name,
        lhs,
        rhs,
        holds: lhs <= rhs * (1.0 + RELATIVE_SLACK) + abs,
    }
}

struct Partition {
    rows: IndexSet,
    cols: IndexSet,
    rbar: IndexSet,
    cbar: IndexSet,
}

fn partition(a: &DenseMatrix, result: &RankRevealResult) -> Result<Partition> {
    let (m, n) = a.shape();
    let r = result.rank;
    if result.row_set.len() != r || result.col_set.len() != r {
        return Err(Error::DimensionMismatch(format!(
            "rank {r} with {} rows and {} columns selected",
            result.row_set.len(),
            result.col_set.len()
        )));
    }
    if result.row_set.as_slice().last().is_some_and(|&i| i >= m)
        || result.col_set.as_slice().last().is_some_and(|&j| j >= n)
    {
        return Err(Error::DimensionMismatch(format!("index sets exceed {m}x{n}")));
    }
    if result.schur.shape() != (m - r, n - r) {
        return Err(Error::DimensionMismatch(format!(
            "Schur complement is {:?}, expected {:?}",
            result.schur.shape(),
            (m - r, n - r)
        )));
    }
    Ok(Partition {
        rbar: result.row_set.complement(m),
        cbar: result.col_set.complement(n),
        rows: result.row_set.clone(),
        cols: result.col_set.clone(),
    })
}

/// Column-wise `A11^{-1} b` with iterative refinement; residuals in
/// double-double, result kept as `hi + lo`.
fn refined_solve(lu: &LuFactor, a11: &DenseMatrix, b: &[f64]) -> Vec<DoubleDouble> {
    let k = b.len();
    let mut x: Vec<DoubleDouble> = lu.solve(b).into_iter().map(DoubleDouble::new).collect();
    for _ in 0..REFINEMENT_STEPS {
        let residual: Vec<f64> = (0..k)
            .map(|i| {
                let mut acc = DoubleDouble::new(b[i]);
                for (j, xj) in x.iter().enumerate() {
                    let aij = a11.get(i, j);
                    acc.add_product(-aij, xj.hi);
                    acc.add_product(-aij, xj.lo);
                }
                acc.value()
            })
            .collect();
        for (xi, di) in x.iter_mut().zip(lu.solve(&residual)) {
            let (hi, lo) = two_sum(xi.hi, di);
            *xi = DoubleDouble { hi, lo: lo + xi.lo };
        }
    }
    x
}

struct Measured {
    x: DenseMatrix,
    schur: DenseMatrix,
    inv_norm_c: f64,
    y_norm_c: f64,
}

/// `X = A11^{-1} A12`, `A/A11 = A22 - A21 X`, `||A11^{-1}||_C` and
/// `||A21 A11^{-1}||_C`, all from scratch.
fn measure(a: &DenseMatrix, p: &Partition) -> Result<Measured> {
    let r = p.rows.len();
    if r == 0 {
        return Ok(Measured {
            x: DenseMatrix::zeros(0, a.ncols()),
            schur: a.clone(),
            inv_norm_c: 0.0,
            y_norm_c: 0.0,
        });
    }
    let a11 = select(a, &p.rows, &p.cols)?;
    let lu = LuFactor::new(&a11)?;
    if lu.is_singular() {
        return Err(Error::Singular { rcond: 0.0 });
    }

    let x_cols: Vec<Vec<DoubleDouble>> = p
        .cbar
        .iter()
        .map(|q| refined_solve(&lu, &a11, &p.rows.iter().map(|i| a.get(i, q)).collect::<Vec<_>>()))
        .collect();
    let x = DenseMatrix::from_fn(r, p.cbar.len(), |i, t| x_cols[t][i].value())?;
    let schur = DenseMatrix::from_fn(p.rbar.len(), p.cbar.len(), |s, t| {
        let row = p.rbar.as_slice()[s];
        let mut acc = DoubleDouble::new(a.get(row, p.cbar.as_slice()[t]));
        for (kk, col) in p.cols.iter().enumerate() {
            let a21 = a.get(row, col);
            acc.add_product(-a21, x_cols[t][kk].hi);
            acc.add_product(-a21, x_cols[t][kk].lo);
        }
        acc.value()
    })?;
    let y_norm_c = p
        .rbar
        .iter()
        .map(|row| {
            let c: Vec<f64> = p.cols.iter().map(|j| a.get(row, j)).collect();
            lu.solve_transpose(&c).iter().fold(0.0_f64, |m, v| m.max(v.abs()))
        })
        .fold(0.0, f64::max);
    Ok(Measured {
        x,
        schur,
        inv_norm_c: max_abs_norm(&lu.inverse()),
        y_norm_c,
    })
}

fn base_certificate(result: &RankRevealResult, p: &Partition, meas: &Measured) -> BoundCertificate {
    let rho = result.rho_used;
    let beta = result.beta_used;
    BoundCertificate {
        rank: result.rank,
        schur_norm_c: max_abs_norm(&meas.schur),
        inv_norm_c: meas.inv_norm_c,
        x_norm_c: max_abs_norm(&meas.x),
        y_norm_c: meas.y_norm_c,
        rho_beta: rho * beta,
        rho_over_beta: if p.rows.is_empty() { f64::INFINITY } else { rho / beta },
        sigma_min_a11: None,
        sigma_r: None,
        sigma_r_plus_1: None,
        schur_norm_2: None,
        lower_bound_factor: None,
        upper_bound_factor: None,
        checks: Vec::new(),
        passed: false,
    }
}

fn finish(mut cert: BoundCertificate) -> BoundCertificate {
    cert.passed = cert.checks.iter().all(|c| c.holds);
    cert
}

/// Termination bounds: `||A/A11||_C <= rho beta`, `||A11^{-1}||_C <= rho/beta`,
/// `||A11^{-1} A12||_C <= rho` and `||A21 A11^{-1}||_C <= rho`.
pub fn verify_betabound(a: &DenseMatrix, result: &RankRevealResult) -> Result<BoundCertificate> {
    let p = partition(a, result)?;
    let meas = measure(a, &p)?;
    let mut cert = base_certificate(result, &p, &meas);
    let rho = result.rho_used;
    cert.checks.push(check("||A/A11||_C <= rho*beta", cert.schur_norm_c, cert.rho_beta, 0.0));
    if !p.rows.is_empty() {
        cert.checks.push(check("||A11^-1||_C <= rho/beta", cert.inv_norm_c, cert.rho_over_beta, 0.0));
        if !p.cbar.is_empty() {
            cert.checks.push(check("||A11^-1 A12||_C <= rho", cert.x_norm_c, rho, 0.0));
        }
        if !p.rbar.is_empty() {
            cert.checks.push(check("||A21 A11^-1||_C <= rho", cert.y_norm_c, rho, 0.0));
        }
    }
    Ok(finish(cert))
}

/// Interlacing and the two-sided singular value bounds for a block of local
/// `2 rho^2`-maximum volume. The pair involving `sigma_{r+1}` is skipped when
/// `r = min(m, n)`; the pair involving `sigma_r` when `r = 0`.
pub fn verify_theorem_bounds(a: &DenseMatrix, result: &RankRevealResult) -> Result<BoundCertificate> {
    let p = partition(a, result)?;
    let meas = measure(a, &p)?;
    let mut cert = base_certificate(result, &p, &meas);
    let (m, n) = a.shape();
    let r = result.rank;
    let rho = result.rho_used;
    let sv = singular_values(a)?;
    let abs = ORACLE_ABS_SLACK * sv.largest();

    if r >= 1 {
        let a11 = select(a, &p.rows, &p.cols)?;
        let smin = singular_values(&a11)?.smallest();
        let sigma_r = sv.sigma(r).unwrap_or(0.0);
        let lb = lower_bound_factor(rho, m, n, r);
        cert.sigma_min_a11 = Some(smin);
        cert.sigma_r = Some(sigma_r);
        cert.lower_bound_factor = Some(lb);
        cert.checks.push(check("sigma_min(A11) <= sigma_r(A)", smin, sigma_r, abs));
        cert.checks.push(check("lower*sigma_r(A) <= sigma_min(A11)", lb * sigma_r, smin, abs));
    }
    if r < m.min(n) {
        let s2 = singular_values(&meas.schur)?.largest();
        let sigma_r1 = sv.sigma(r + 1).unwrap_or(0.0);
        let ub = upper_bound_factor(rho, m, n, r);
        cert.sigma_r_plus_1 = Some(sigma_r1);
        cert.schur_norm_2 = Some(s2);
        cert.upper_bound_factor = Some(ub);
        cert.checks.push(check("sigma_r+1(A) <= ||A/A11||_2", sigma_r1, s2, abs));
        cert.checks.push(check("||A/A11||_2 <= upper*sigma_r+1(A)", s2, ub * sigma_r1, abs));
    }
    Ok(finish(cert))
}

/// Buckets of `sigma_r(A11) / sigma_r(A)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SigmaRatioBucket {
    Above1e1,
    Above1e2,
    Above1e3,
    Below,
}

impl SigmaRatioBucket {
    pub const ALL: [SigmaRatioBucket; 4] = [Self::Above1e1, Self::Above1e2, Self::Above1e3, Self::Below];

    pub fn of(ratio: f64) -> Self {
        if ratio > 1e-1 {
            Self::Above1e1
        } else if ratio > 1e-2 {
            Self::Above1e2
        } else if ratio > 1e-3 {
            Self::Above1e3
        } else {
            Self::Below
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Self::Above1e1 => "(1e-1,1]",
            Self::Above1e2 => "(1e-2,1e-1]",
            Self::Above1e3 => "(1e-3,1e-2]",
            Self::Below => "<=1e-3",
        }
    }
}

/// Buckets of `pivots / r`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PivotRatioBucket {
    Below1_05,
    Below1_5,
    Below4,
    Below5,
    AtLeast5,
}

impl PivotRatioBucket {
    pub const ALL: [PivotRatioBucket; 5] = [
        Self::Below1_05,
        Self::Below1_5,
        Self::Below4,
        Self::Below5,
        Self::AtLeast5,
    ];

    pub fn of(ratio: f64) -> Self {
        if ratio < 1.05 {
            Self::Below1_05
        } else if ratio < 1.5 {
            Self::Below1_5
        } else if ratio < 4.0 {
            Self::Below4
        } else if ratio < 5.0 {
            Self::Below5
        } else {
            Self::AtLeast5
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Self::Below1_05 => "[1.00,1.05)",
            Self::Below1_5 => "[1.05,1.50)",
            Self::Below4 => "[1.5,4.0)",
            Self::Below5 => "[4.0,5.0)",
            Self::AtLeast5 => ">=5.0",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SvdComparison {
    pub r: usize,
    pub s: usize,
    /// `sigma_r(A) / sigma_s(A)`; 1 when `r = s = 0`.
    pub ratio_r: Option<f64>,
    /// `sigma_{r+1}(A) / sigma_{s+1}(A)`; absent when `r` or `s` is `min(m, n)`.
    pub ratio_r1: Option<f64>,
    pub sigma_min_a11: Option<f64>,
    pub sigma_r: Option<f64>,
    /// `sigma_r(A11) / sigma_r(A)`.
    pub sigma_ratio: Option<f64>,
    pub sigma_ratio_bucket: Option<SigmaRatioBucket>,
    pub pivot_ratio: f64,
    pub pivot_ratio_bucket: PivotRatioBucket,
}

fn ratio(num: f64, den: f64) -> Option<f64> {
    if den != 0.0 {
        Some(num / den)
    } else if num == 0.0 {
        Some(1.0)
    } else {
        None
    }
}

pub fn compare_with_svd(a: &DenseMatrix, result: &RankRevealResult) -> Result<SvdComparison> {
    let sv = singular_values(a)?;
    compare_with_singular_values(a, result, &sv)
}

/// [`compare_with_svd`] with precomputed singular values of `A`.
pub fn compare_with_singular_values(a: &DenseMatrix, result: &RankRevealResult, sv: &SvdResult) -> Result<SvdComparison> {
    let (m, n) = a.shape();
    let d = m.min(n);
    let r = result.rank;
    let s = numerical_rank_from(sv, m, n);

    let ratio_r = match (r, s) {
        (0, 0) => Some(1.0),
        (0, _) | (_, 0) => None,
        _ => ratio(sv.sigma(r).unwrap_or(0.0), sv.sigma(s).unwrap_or(0.0)),
    };
    let ratio_r1 = if r >= d || s >= d {
        None
    } else {
        ratio(sv.sigma(r + 1).unwrap_or(0.0), sv.sigma(s + 1).unwrap_or(0.0))
    };

    let (sigma_min_a11, sigma_r) = if r >= 1 {
        let a11 = select(a, &result.row_set, &result.col_set)?;
        (Some(singular_values(&a11)?.smallest()), sv.sigma(r))
    } else {
        (None, None)
    };
    let sigma_ratio = match (sigma_min_a11, sigma_r) {
        (Some(x), Some(y)) => ratio(x, y),
        _ => None,
    };
    let pivot_ratio = result.pivot_ratio();
    Ok(SvdComparison {
        r,
        s,
        ratio_r,
        ratio_r1,
        sigma_min_a11,
        sigma_r,
        sigma_ratio,
        sigma_ratio_bucket: sigma_ratio.map(SigmaRatioBucket::of),
        pivot_ratio,
        pivot_ratio_bucket: PivotRatioBucket::of(pivot_ratio),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{gen_peters, gen_random_rank_deficient};
    use crate::rrge::{default_beta, find_submatrix, reveal_rank, RrgeOptions};

    #[test]
    fn factor_formulas() {
        assert!((lower_bound_factor(2.0, 5, 5, 5) - 1.0 / 40.0).abs() < 1e-15);
        assert_eq!(upper_bound_factor(2.0, 5, 5, 5), 0.0);
        assert!((upper_bound_factor(1.0, 10, 20, 4) - 2.0 * 5.0 * (6.0f64 * 16.0).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn zero_matrix_certificate() {
        let a = DenseMatrix::zeros(3, 4);
        let res = reveal_rank(&a, &RrgeOptions::default()).unwrap();
        let cert = verify_betabound(&a, &res).unwrap();
        assert!(cert.passed);
        assert_eq!(cert.schur_norm_c, 0.0);
        let thm = verify_theorem_bounds(&a, &res).unwrap();
        assert!(thm.passed, "{:?}", thm.first_failure());
    }

    #[test]
    fn identity_certificate_is_tight() {
        let a = DenseMatrix::identity(5);
        let res = find_submatrix(&a, 2.0, 1e-8).unwrap();
        let cert = verify_theorem_bounds(&a, &res).unwrap();
        assert!(cert.passed);
        assert!((cert.sigma_min_a11.unwrap() - 1.0).abs() < 1e-15);
        assert!((cert.sigma_r.unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(cert.sigma_r_plus_1, None);
    }

    #[test]
    fn peters_certificates() {
        let a = gen_peters(50).unwrap();
        let res = find_submatrix(&a, 2.0, default_beta(&a)).unwrap();
        let cert = verify_betabound(&a, &res).unwrap();
        assert!(cert.passed, "{:?}", cert.first_failure());
        assert!(cert.schur_norm_c <= cert.rho_beta);
        let thm = verify_theorem_bounds(&a, &res).unwrap();
        assert!(thm.passed, "{:?}", thm.first_failure());
        let ratio = thm.sigma_min_a11.unwrap() / thm.sigma_r.unwrap();
        assert!(ratio <= 1.0 + 1e-8 && ratio >= thm.lower_bound_factor.unwrap());
    }

    #[test]
    fn random_rank_deficient_certificate() {
        let a = gen_random_rank_deficient(30, 50, 15, 1e-8, 1).unwrap();
        let res = find_submatrix(&a, 2.0, default_beta(&a)).unwrap();
        assert!(verify_betabound(&a, &res).unwrap().passed);
        assert!(verify_theorem_bounds(&a, &res).unwrap().passed);
    }

    #[test]
    fn mismatched_result_is_rejected() {
        let a = DenseMatrix::identity(4);
        let res = find_submatrix(&a, 2.0, 1e-8).unwrap();
        assert!(verify_betabound(&DenseMatrix::identity(3), &res).is_err());
    }

    #[test]
    fn comparison_fields() {
        let a = gen_random_rank_deficient(20, 30, 7, 1e-12, 1).unwrap();
        let res = find_submatrix(&a, 2.0, default_beta(&a)).unwrap();
        let cmp = compare_with_svd(&a, &res).unwrap();
        assert_eq!((cmp.r, cmp.s), (7, 7));
        assert_eq!(cmp.ratio_r, Some(1.0));
        assert_eq!(cmp.ratio_r1, Some(1.0));
        assert_eq!(cmp.sigma_ratio_bucket, Some(SigmaRatioBucket::Above1e1));

        let full = find_submatrix(&DenseMatrix::identity(3), 2.0, 1e-8).unwrap();
        let cmp = compare_with_svd(&DenseMatrix::identity(3), &full).unwrap();
        assert_eq!(cmp.ratio_r1, None);
        assert_eq!(cmp.pivot_ratio_bucket, PivotRatioBucket::Below1_05);

        let z = DenseMatrix::zeros(2, 2);
        let zr = reveal_rank(&z, &RrgeOptions::default()).unwrap();
        let cmp = compare_with_svd(&z, &zr).unwrap();
        assert_eq!(cmp.ratio_r, Some(1.0));
        assert_eq!(cmp.sigma_ratio, None);
    }

    #[test]
    fn bucket_edges() {
        assert_eq!(PivotRatioBucket::of(1.0), PivotRatioBucket::Below1_05);
        assert_eq!(PivotRatioBucket::of(1.05), PivotRatioBucket::Below1_5);
        assert_eq!(PivotRatioBucket::of(1.5), PivotRatioBucket::Below4);
        assert_eq!(PivotRatioBucket::of(4.0), PivotRatioBucket::Below5);
        assert_eq!(PivotRatioBucket::of(5.0), PivotRatioBucket::AtLeast5);
        assert_eq!(SigmaRatioBucket::of(1.0), SigmaRatioBucket::Above1e1);
        assert_eq!(SigmaRatioBucket::of(0.1), SigmaRatioBucket::Above1e2);
        assert_eq!(SigmaRatioBucket::of(1e-3), SigmaRatioBucket::Below);
    }
}
