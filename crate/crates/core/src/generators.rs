//! Test-matrix generators.
//!
//! Everything here is a pure function of its arguments (and seed).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::compensated::DoubleDouble;
use crate::error::{Error, Result};
use crate::lu::EPS;
use crate::matrix::DenseMatrix;

/// Unit upper triangular `m x m` matrix with -1 everywhere above the
/// diagonal. Complete pivoting takes the diagonal and reports full rank
/// although `sigma_m` decays like `2^-m`.
pub fn gen_peters(m: usize) -> Result<DenseMatrix> {
    if m == 0 {
        return Err(Error::InvalidArgument("Peters matrix needs m >= 1".into()));
    }
    DenseMatrix::from_fn(m, m, |i, j| match i.cmp(&j) {
        std::cmp::Ordering::Equal => 1.0,
        std::cmp::Ordering::Less => -1.0,
        std::cmp::Ordering::Greater => 0.0,
    })
}

/// 7x4 0/1 matrix whose leading 3x3 block (the identity) has normal but not
/// local maximum volume. Every three columns have singular values
/// `(sqrt 5, sqrt 2, sqrt 2)`.
pub fn gen_example_normal_not_local() -> DenseMatrix {
    const ROWS: [[f64; 4]; 7] = [
        [1.0, 0.0, 0.0, 1.0],
        [0.0, 1.0, 0.0, 1.0],
        [0.0, 0.0, 1.0, 1.0],
        [1.0, 1.0, 1.0, 0.0],
        [1.0, 0.0, 0.0, 0.0],
        [0.0, 1.0, 0.0, 0.0],
        [0.0, 0.0, 1.0, 0.0],
    ];
    DenseMatrix::from_rows(&ROWS).expect("constant matrix")
}

/// 4x3 matrix `[[1,0,0],[0,1,0],[d,-1,-d],[-1,d,-d]]` whose leading 2x2
/// block has local but not normal maximum volume (`d = 0.99` in the
/// classical instance).
pub fn gen_example_local_not_normal(d: f64) -> Result<DenseMatrix> {
    if !(d > 0.0 && d < 1.0) {
        return Err(Error::InvalidArgument(format!("d must lie in (0, 1), got {d}")));
    }
    DenseMatrix::from_rows(&[[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [d, -1.0, -d], [-1.0, d, -d]])
}

/// `m x k` matrix with orthonormal columns, Haar distributed (Gram-Schmidt
/// with reorthogonalization on a Gaussian matrix). Stored column-major.
fn random_orthonormal_columns(rng: &mut ChaCha8Rng, m: usize, k: usize) -> Vec<Vec<f64>> {
    let mut q: Vec<Vec<f64>> = Vec::with_capacity(k);
    while q.len() < k {
        let mut v: Vec<f64> = (0..m).map(|_| rng.sample(StandardNormal)).collect();
        for _ in 0..2 {
            for u in &q {
                let dot: f64 = u.iter().zip(&v).map(|(a, b)| a * b).sum();
                for (x, ui) in v.iter_mut().zip(u) {
                    *x -= dot * ui;
                }
            }
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        // a draw numerically inside span(q) is discarded and redrawn
        if norm > 1e-8 {
            v.iter_mut().for_each(|x| *x /= norm);
            q.push(v);
        }
    }
    q
}

/// Singular values used by [`gen_random_rank_deficient`]: `r_true` values
/// log-uniform in `[1e-2, 1]` (sorted), then a tail
/// `gap * eps_mach * sigma_r * 2^(1-j)` that sits below roundoff, so the
/// numerical rank is exactly `r_true`.
pub fn rank_deficient_spectrum(rng: &mut ChaCha8Rng, d: usize, r_true: usize, gap: f64) -> Vec<f64> {
    let mut head: Vec<f64> = (0..r_true)
        .map(|_| 10f64.powf(-2.0 * rng.random::<f64>()))
        .collect();
    head.sort_by(|a, b| b.total_cmp(a));
    let sigma_r = head.last().copied().unwrap_or(1.0);
    let mut sigma = head;
    let mut tail = gap * EPS * sigma_r;
    while sigma.len() < d {
        sigma.push(tail);
        tail *= 0.5;
    }
    sigma
}

/// `A = U diag(sigma) V^T` with seeded Haar-random `U`, `V` and the spectrum
/// of [`rank_deficient_spectrum`]. Entries are accumulated in double-double
/// so the stored matrix is the correctly rounded product.
pub fn gen_random_rank_deficient(m: usize, n: usize, r_true: usize, gap: f64, seed: u64) -> Result<DenseMatrix> {
    let d = m.min(n);
    if d == 0 {
        return Err(Error::InvalidArgument(format!("invalid dimensions {m}x{n}")));
    }
    if r_true < 1 || r_true > d {
        return Err(Error::InvalidArgument(format!("rank {r_true} outside [1, {d}]")));
    }
    if !(gap > 0.0 && gap < 1.0) {
        return Err(Error::InvalidArgument(format!("gap must lie in (0, 1), got {gap}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sigma = rank_deficient_spectrum(&mut rng, d, r_true, gap);
    let u = random_orthonormal_columns(&mut rng, m, d);
    let v = random_orthonormal_columns(&mut rng, n, d);

    DenseMatrix::from_fn(m, n, |i, j| {
        let mut acc = DoubleDouble::default();
        for k in 0..d {
            let (p, e) = crate::compensated::two_prod(u[k][i], v[k][j]);
            acc.add_product(p, sigma[k]);
            acc.add_product(e, sigma[k]);
        }
        acc.value()
    })
}

/// Seeded Haar-random orthogonal `n x n` matrix.
pub fn gen_random_orthogonal(n: usize, seed: u64) -> Result<DenseMatrix> {
    if n == 0 {
        return Err(Error::InvalidArgument("dimension must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let q = random_orthonormal_columns(&mut rng, n, n);
    DenseMatrix::from_fn(n, n, |i, j| q[j][i])
}

/// Entries i.i.d. uniform in `[-1, 1)`.
pub fn gen_random_uniform(rng: &mut impl Rng, m: usize, n: usize) -> DenseMatrix {
    DenseMatrix::from_raw(m, n, (0..m * n).map(|_| rng.random_range(-1.0..1.0)).collect())
}

/// One member of a seeded benchmark suite.
#[derive(Clone, Debug)]
pub struct SuiteMatrix {
    pub name: String,
    pub matrix: DenseMatrix,
    pub r_true: usize,
}

pub const SUITE_MIN_DIM: usize = 5;
pub const SUITE_MAX_DIM: usize = 40;
pub const SUITE_GAPS: [f64; 2] = [1e-8, 1e-12];

/// `count` random matrices with `m, n` in `[5, 40]`, rank uniform in
/// `0..=min(m, n)` (rank 0 is the zero matrix) and gaps alternating over
/// [`SUITE_GAPS`].
pub fn random_suite(count: usize, seed: u64) -> Vec<SuiteMatrix> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|t| {
            let m = rng.random_range(SUITE_MIN_DIM..=SUITE_MAX_DIM);
            let n = rng.random_range(SUITE_MIN_DIM..=SUITE_MAX_DIM);
            let r = rng.random_range(0..=m.min(n));
            let gap = SUITE_GAPS[t % SUITE_GAPS.len()];
            let sub_seed: u64 = rng.random();
            let matrix = if r == 0 {
                DenseMatrix::zeros(m, n)
            } else {
                gen_random_rank_deficient(m, n, r, gap, sub_seed).expect("suite parameters are valid")
            };
            SuiteMatrix {
                name: format!("random:{m},{n},{r},{gap:e},{sub_seed}"),
                matrix,
                r_true: r,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::svd::{numerical_rank_svd, singular_values};

    #[test]
    fn peters_small_cases() {
        assert_eq!(gen_peters(1).unwrap(), DenseMatrix::identity(1));
        assert_eq!(gen_peters(2).unwrap(), DenseMatrix::from_rows(&[[1.0, -1.0], [0.0, 1.0]]).unwrap());
        let want = DenseMatrix::from_rows(&[
            [1.0, -1.0, -1.0, -1.0],
            [0.0, 1.0, -1.0, -1.0],
            [0.0, 0.0, 1.0, -1.0],
            [0.0, 0.0, 0.0, 1.0],
        ])
        .unwrap();
        assert_eq!(gen_peters(4).unwrap(), want);
        assert!(gen_peters(0).is_err());
    }

    #[test]
    fn peters_smallest_singular_value_decays_like_two_to_minus_m() {
        for m in 10..=40 {
            let sv = singular_values(&gen_peters(m).unwrap()).unwrap();
            let scaled = sv.smallest() * 2f64.powi(m as i32);
            assert!(scaled <= 4.0 && scaled > 0.5, "m={m}: {scaled}");
        }
    }

    #[test]
    fn first_counterexample_layout() {
        let a = gen_example_normal_not_local();
        assert_eq!(a.shape(), (7, 4));
        assert_eq!(a.row(3), &[1.0, 1.0, 1.0, 0.0]);
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(a.get(i, j), if i == j { 1.0 } else { 0.0 });
            }
        }
        let cols = crate::matrix::IndexSet::range(0..3);
        let sub = crate::matrix::select(&a, &crate::matrix::IndexSet::range(0..7), &cols).unwrap();
        let vol = crate::svd::volume(&sub).unwrap();
        assert!((vol - 20f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn second_counterexample_layout() {
        let a = gen_example_local_not_normal(0.99).unwrap();
        assert_eq!(a.get(2, 0), 0.99);
        assert_eq!(a.get(3, 2), -0.99);
        assert!(gen_example_local_not_normal(1.0).is_err());
        assert!(gen_example_local_not_normal(0.0).is_err());
    }

    #[test]
    fn random_family_ranks() {
        let full = gen_random_rank_deficient(8, 12, 8, 0.5, 3).unwrap();
        assert_eq!(numerical_rank_svd(&full).unwrap(), 8);
        let a = gen_random_rank_deficient(20, 30, 7, 1e-12, 1).unwrap();
        assert_eq!(numerical_rank_svd(&a).unwrap(), 7);
        let b = gen_random_rank_deficient(20, 30, 7, 1e-12, 1).unwrap();
        assert_eq!(a.as_slice(), b.as_slice());
        assert!(gen_random_rank_deficient(5, 5, 0, 0.1, 1).is_err());
        assert!(gen_random_rank_deficient(5, 5, 6, 0.1, 1).is_err());
        assert!(gen_random_rank_deficient(5, 5, 2, 1.5, 1).is_err());
    }

    #[test]
    fn random_orthogonal_has_unit_singular_values() {
        let q = gen_random_orthogonal(10, 11).unwrap();
        let sv = singular_values(&q).unwrap();
        for s in sv.values() {
            assert!((s - 1.0).abs() < 1e-13);
        }
        assert_eq!(numerical_rank_svd(&q).unwrap(), 10);
    }

    #[test]
    fn suite_is_deterministic() {
        let a = random_suite(6, 42);
        let b = random_suite(6, 42);
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.name, y.name);
            assert_eq!(x.matrix.as_slice(), y.matrix.as_slice());
        }
    }
}
