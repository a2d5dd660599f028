use std::collections::HashSet;

use proptest::prelude::*;
use rrge_core::bounds::{compare_with_svd, lower_bound_factor, upper_bound_factor, verify_betabound};
use rrge_core::generators::{gen_random_rank_deficient, random_suite};
use rrge_core::lu::LuFactor;
use rrge_core::rrge::{find_submatrix_with, BasisState};
use rrge_core::svd::{numerical_rank_svd, singular_values};
use rrge_core::volume::is_local_max_volume;
use rrge_core::{default_beta, det_bruteforce, find_submatrix, max_abs_norm, select, DenseMatrix, Execution, IndexSet};

fn matrix_from(m: usize, n: usize, entries: &[f64]) -> DenseMatrix {
    DenseMatrix::new(m, n, entries[..m * n].to_vec()).unwrap()
}

/// Uniform entries or an exactly rank-deficient product, to exercise both
/// full and deficient ranks.
fn test_matrix(max_dim: usize) -> impl Strategy<Value = DenseMatrix> {
    (1..=max_dim, 1..=max_dim, 0usize..3, any::<u64>(), prop::collection::vec(-1.0f64..1.0, max_dim * max_dim))
        .prop_map(|(m, n, kind, seed, entries)| {
            let d = m.min(n);
            match kind {
                0 => matrix_from(m, n, &entries),
                _ => {
                    let r = 1 + (seed as usize) % d;
                    let gap = if kind == 1 { 1e-8 } else { 1e-12 };
                    gen_random_rank_deficient(m, n, r, gap, seed).unwrap()
                }
            }
        })
}

/// `AA_B` for the basis of `state`: structural columns of `A`, logical ones
/// `beta e_i`.
fn basis_matrix(a: &DenseMatrix, beta: f64, basis: &[usize]) -> DenseMatrix {
    let (m, n) = a.shape();
    DenseMatrix::from_fn(m, m, |i, t| {
        let q = basis[t];
        if q < n {
            a.get(i, q)
        } else if q - n == i {
            beta
        } else {
            0.0
        }
    })
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn pivots_grow_volume_and_never_repeat_a_basis(a in test_matrix(7), rho in 1.0f64..3.0) {
        let beta = default_beta(&a).max(1e-6);
        let mut state = BasisState::new(&a, rho, beta).unwrap();
        let mut seen = HashSet::new();
        seen.insert(state.basis_columns());
        let mut det = det_bruteforce(&basis_matrix(&a, beta, &state.basis_columns())).unwrap().abs();
        while let Some(c) = state.choose_pivot() {
            let rec = state.apply_pivot(c.row, c.col).unwrap();
            prop_assert!(rec.magnitude > rho);
            let basis = state.basis_columns();
            prop_assert!(seen.insert(basis.clone()), "basis repeated");
            let next = det_bruteforce(&basis_matrix(&a, beta, &basis)).unwrap().abs();
            prop_assert!(next > det * rho * (1.0 - 1e-8), "volume {det} -> {next}");
            prop_assert!((next / det - rec.magnitude).abs() <= 1e-6 * rec.magnitude);
            det = next;

            prop_assert!(state.tableau().unit_column_defect() <= 1e-8);
            let structural = state.tableau().basic().iter().filter(|&&q| q < a.ncols()).count();
            prop_assert_eq!(structural, state.k());
        }
    }

    #[test]
    fn termination_blocks_hold_with_explicit_inverse(a in test_matrix(20), rho in 1.0f64..3.0) {
        let beta = default_beta(&a);
        prop_assume!(beta > 0.0);
        let res = find_submatrix(&a, rho, beta).unwrap();
        let (m, n) = a.shape();
        prop_assert_eq!(res.a11.clone(), select(&a, &res.row_set, &res.col_set).unwrap());
        let slack = 1.0 + 1e-8;
        prop_assert!(max_abs_norm(&res.schur) <= rho * beta * slack);
        if res.rank > 0 {
            let inv = LuFactor::new(&res.a11).unwrap().inverse();
            prop_assert!(max_abs_norm(&inv) <= rho / beta * slack);
            let rbar = res.row_set.complement(m);
            let cbar = res.col_set.complement(n);
            let a12 = select(&a, &res.row_set, &cbar).unwrap();
            let a21 = select(&a, &rbar, &res.col_set).unwrap();
            if !cbar.is_empty() {
                prop_assert!(max_abs_norm(&inv.matmul(&a12).unwrap()) <= rho * slack);
            }
            if !rbar.is_empty() {
                prop_assert!(max_abs_norm(&a21.matmul(&inv).unwrap()) <= rho * slack);
            }
        }
        prop_assert!(verify_betabound(&a, &res).unwrap().passed);
    }

    #[test]
    fn rank_is_bracketed_by_singular_values(a in test_matrix(20)) {
        let beta = default_beta(&a);
        prop_assume!(beta > 0.0);
        let rho = 2.0;
        let res = find_submatrix(&a, rho, beta).unwrap();
        let (m, n) = a.shape();
        let r = res.rank;
        let sv = singular_values(&a).unwrap();
        let abs = 1e-12 * sv.largest();
        if r > 0 {
            prop_assert!(sv.sigma(r).unwrap() + abs >= beta / (rho * r as f64));
        }
        let tail = rho * beta * (((m - r) * (n - r)) as f64).sqrt();
        prop_assert!(sv.sigma(r + 1).unwrap() <= tail * (1.0 + 1e-8) + abs);
    }

    #[test]
    fn transpose_gives_same_rank_and_swapped_sets(a in test_matrix(12)) {
        let beta = default_beta(&a);
        prop_assume!(beta > 0.0);
        let res = find_submatrix(&a, 2.0, beta).unwrap();
        let rt = find_submatrix(&a.transpose(), 2.0, beta).unwrap();
        prop_assert_eq!(res.rank, rt.rank);
        // the engine always works on the wide orientation, so both runs are
        // the same computation unless A is square
        if !a.is_square() {
            prop_assert_eq!(&res.row_set, &rt.col_set);
            prop_assert_eq!(&res.col_set, &rt.row_set);
        }
    }

    #[test]
    fn block_row_criterion(k in 1usize..=4, extra in 1usize..=3, entries in prop::collection::vec(-1.0f64..1.0, 28), rho in 1.0f64..3.0) {
        let n = k + extra;
        let a = matrix_from(k, n, &entries);
        let rows = IndexSet::range(0..k);
        let cols = IndexSet::range(0..k);
        let a11 = select(&a, &rows, &cols).unwrap();
        let d0 = det_bruteforce(&a11).unwrap().abs();
        prop_assume!(d0 > 1e-6);
        let x = LuFactor::new(&a11).unwrap().inverse().matmul(&select(&a, &rows, &cols.complement(n)).unwrap()).unwrap();
        let norm = max_abs_norm(&x);
        prop_assume!((norm - rho).abs() > 1e-9 * rho);
        let mut best = 0.0f64;
        for j in 0..k {
            for q in k..n {
                let b: Vec<f64> = (0..k).map(|i| a.get(i, q)).collect();
                best = best.max(det_bruteforce(&a11.with_col(j, &b).unwrap()).unwrap().abs() / d0);
            }
        }
        prop_assert_eq!(best <= rho, norm <= rho);
        prop_assert_eq!(is_local_max_volume(&a, &rows, &cols, rho).unwrap(), norm <= rho);
    }

    #[test]
    fn removal_criterion(k in 1usize..=4, entries in prop::collection::vec(-1.0f64..1.0, 25), i in 0usize..5, j in 0usize..5, rho in 1.0f64..3.0) {
        let ahat = matrix_from(k + 1, k + 1, &entries);
        let (i, j) = (i % (k + 1), j % (k + 1));
        let det = det_bruteforce(&ahat).unwrap().abs();
        prop_assume!(det > 1e-6);
        let inv = LuFactor::new(&ahat).unwrap().inverse();
        let lhs = rho * inv.get(j, i).abs();
        let rhs = max_abs_norm(&inv);
        prop_assume!((lhs - rhs).abs() > 1e-9 * rhs);
        let minor = |r: usize, c: usize| {
            let rows: IndexSet = (0..=k).filter(|&x| x != r).collect();
            let cols: IndexSet = (0..=k).filter(|&x| x != c).collect();
            det_bruteforce(&select(&ahat, &rows, &cols).unwrap()).unwrap().abs()
        };
        let vol_b = minor(i, j);
        let max_vol = (0..=k).flat_map(|r| (0..=k).map(move |c| (r, c))).map(|(r, c)| minor(r, c)).fold(0.0, f64::max);
        prop_assert_eq!(rho * vol_b >= max_vol, lhs >= rhs);
    }

    #[test]
    fn local_max_volume_is_monotone_in_rho(a in test_matrix(6), rho in 1.0f64..2.0, bump in 0.0f64..2.0) {
        let beta = default_beta(&a);
        prop_assume!(beta > 0.0);
        let res = find_submatrix(&a, 2.0, beta).unwrap();
        prop_assume!(res.rank > 0);
        if is_local_max_volume(&a, &res.row_set, &res.col_set, rho).unwrap() {
            prop_assert!(is_local_max_volume(&a, &res.row_set, &res.col_set, rho + bump).unwrap());
        }
    }
}

#[test]
fn singular_value_ratios_are_ordered_on_the_suite() {
    for s in random_suite(60, 9) {
        let beta = default_beta(&s.matrix);
        if beta == 0.0 {
            continue;
        }
        let res = find_submatrix(&s.matrix, 2.0, beta).unwrap();
        let c = compare_with_svd(&s.matrix, &res).unwrap();
        if c.r <= c.s {
            assert!(c.ratio_r.is_none_or(|x| x >= 1.0), "{}", s.name);
        }
        if c.r >= c.s {
            assert!(c.ratio_r1.is_none_or(|x| x <= 1.0), "{}", s.name);
        }
        assert_eq!(c.s, numerical_rank_svd(&s.matrix).unwrap());
    }
}

#[test]
fn bound_factors_match_direct_formulas() {
    for (rho, m, n, r) in [(1.0, 7, 9, 3), (2.0, 40, 40, 1), (1.1, 12, 30, 11)] {
        let lower = 1.0 / (2.0 * rho * rho * r as f64 * (((m - r + 1) * (n - r + 1)) as f64).sqrt());
        let upper = 2.0 * rho * rho * (r + 1) as f64 * (((m - r) * (n - r)) as f64).sqrt();
        assert!((lower_bound_factor(rho, m, n, r) - lower).abs() <= 1e-15 * lower);
        assert!((upper_bound_factor(rho, m, n, r) - upper).abs() <= 1e-15 * upper);
    }
}

#[test]
fn parallel_and_sequential_runs_are_identical() {
    // wide enough that the tableau kernels actually take the parallel path
    for seed in 0..3 {
        let a = gen_random_rank_deficient(80, 200, 50 + seed as usize * 10, 1e-8, seed).unwrap();
        let beta = default_beta(&a);
        let seq = find_submatrix_with(&a, 2.0, beta, Execution::Sequential).unwrap();
        let par = find_submatrix_with(&a, 2.0, beta, Execution::Parallel).unwrap();
        assert_eq!(seq.pivot_log, par.pivot_log);
        assert_eq!(seq.row_set, par.row_set);
        assert_eq!(seq.col_set, par.col_set);
        assert_eq!(seq.schur.as_slice(), par.schur.as_slice());
    }
}

#[test]
fn generators_are_pure() {
    let a = random_suite(10, 77);
    let b = random_suite(10, 77);
    assert!(a.iter().zip(&b).all(|(x, y)| x.name == y.name && x.matrix.as_slice() == y.matrix.as_slice()));
}
