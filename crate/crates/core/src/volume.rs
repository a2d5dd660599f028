//! Volume-change ratios for single row/column exchanges and the brute-force
//! local / normal maximum-volume predicates.
//!
//! All ratios are `vol(new) / vol(old)` computed through a pivoted LU of the
//! square block, never through determinants of the modified matrices.

use crate::compensated::DoubleDouble;
use crate::error::{Error, Result};
use crate::exec::{self, Execution};
use crate::lu::{factor_nonsingular, LuFactor};
use crate::matrix::{select, DenseMatrix, IndexSet};
use crate::svd::{numerical_rank_from, singular_values};

/// An exchange increases volume "by more than rho" only past this relative
/// slack, so ratios equal to rho up to roundoff count as ties.
pub const TIE_SLACK: f64 = 1e-12;

fn exceeds(ratio: f64, rho: f64) -> bool {
    ratio > rho * (1.0 + TIE_SLACK)
}

fn check_len(what: &str, got: usize, want: usize) -> Result<()> {
    if got != want {
        return Err(Error::DimensionMismatch(format!("{what} has length {got}, expected {want}")));
    }
    Ok(())
}

fn check_index(index: usize, len: usize) -> Result<()> {
    if index >= len {
        return Err(Error::InvalidSelection { index, len });
    }
    Ok(())
}

fn unit(k: usize, i: usize) -> Vec<f64> {
    let mut e = vec![0.0; k];
    e[i] = 1.0;
    e
}

/// Replacing column `j` of `A11` by `b` scales the volume by `|(A11^{-1} b)_j|`.
pub fn col_replace_ratio(a11: &DenseMatrix, j: usize, b: &[f64]) -> Result<f64> {
    let lu = factor_nonsingular(a11)?;
    check_index(j, lu.dim())?;
    check_len("b", b.len(), lu.dim())?;
    Ok(lu.solve(b)[j].abs())
}

/// Deleting row `i` and column `j` of `Ahat` scales the volume by
/// `|(Ahat^{-1})_{j,i}|`.
pub fn remove_rowcol_ratio(ahat: &DenseMatrix, i: usize, j: usize) -> Result<f64> {
    let lu = factor_nonsingular(ahat)?;
    check_index(i, lu.dim())?;
    check_index(j, lu.dim())?;
    Ok(lu.solve(&unit(lu.dim(), i))[j].abs())
}

/// For the bordered matrix `[[A11, b], [c^T, alpha]]`, exchanging row `i` with
/// the border row and column `j` with the border column scales the volume of
/// the leading block by `|gamma (A11^{-1})_{j,i} + (A11^{-1} b)_j (A11^{-T} c)_i|`
/// with `gamma = alpha - c^T A11^{-1} b`.
pub fn swap_rowcol_ratio(a11: &DenseMatrix, b: &[f64], c: &[f64], alpha: f64, i: usize, j: usize) -> Result<f64> {
    let lu = factor_nonsingular(a11)?;
    let k = lu.dim();
    check_index(i, k)?;
    check_index(j, k)?;
    check_len("b", b.len(), k)?;
    check_len("c", c.len(), k)?;
    let x = lu.solve(b);
    let y = lu.solve_transpose(c);
    let gamma = schur_entry(alpha, c, &x);
    let inv_ji = lu.solve(&unit(k, i))[j];
    Ok((gamma * inv_ji + x[j] * y[i]).abs())
}

/// `alpha - c . x` with a compensated dot product.
fn schur_entry(alpha: f64, c: &[f64], x: &[f64]) -> f64 {
    let mut acc = DoubleDouble::new(alpha);
    for (ci, xi) in c.iter().zip(x) {
        acc.add_product(-ci, *xi);
    }
    acc.value()
}

/// A single exchange, in the row/column indices of `A`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Exchange {
    Column { out_col: usize, in_col: usize },
    Row { out_row: usize, in_row: usize },
    Both { out_row: usize, in_row: usize, out_col: usize, in_col: usize },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BestExchange {
    pub ratio: f64,
    pub exchange: Exchange,
}

fn keep_larger(best: Option<BestExchange>, cand: Option<BestExchange>) -> Option<BestExchange> {
    match (best, cand) {
        (Some(b), Some(c)) if c.ratio > b.ratio => Some(c),
        (None, c) => c,
        (b, _) => b,
    }
}

fn validate_block(a: &DenseMatrix, rows: &IndexSet, cols: &IndexSet) -> Result<DenseMatrix> {
    if rows.len() != cols.len() {
        return Err(Error::NotSquare {
            rows: rows.len(),
            cols: cols.len(),
        });
    }
    select(a, rows, cols)
}

/// Largest volume ratio over every single row, single column and combined
/// row+column exchange of the block `A[rows, cols]`; `None` when no exchange
/// exists.
pub fn best_local_exchange(a: &DenseMatrix, rows: &IndexSet, cols: &IndexSet) -> Result<Option<BestExchange>> {
    best_local_exchange_with(a, rows, cols, Execution::default())
}

pub fn best_local_exchange_with(
    a: &DenseMatrix,
    rows: &IndexSet,
    cols: &IndexSet,
    exec: Execution,
) -> Result<Option<BestExchange>> {
    let a11 = validate_block(a, rows, cols)?;
    let k = rows.len();
    if k == 0 {
        return Ok(None);
    }
    let lu: LuFactor = factor_nonsingular(&a11)?;
    let rbar = rows.complement(a.nrows());
    let cbar = cols.complement(a.ncols());
    let inv = lu.inverse();

    // x[t] = A11^{-1} A[rows, cbar[t]],  y[s] = A11^{-T} A[rbar[s], cols]^T
    let x: Vec<Vec<f64>> = exec::map_slice(exec, cbar.as_slice(), |&q| {
        lu.solve(&rows.iter().map(|i| a.get(i, q)).collect::<Vec<_>>())
    });
    let c_rows: Vec<Vec<f64>> = rbar.iter().map(|p| cols.iter().map(|j| a.get(p, j)).collect()).collect();
    let y: Vec<Vec<f64>> = exec::map_slice(exec, &c_rows, |c| lu.solve_transpose(c));

    let mut best = None;
    for (t, q) in cbar.iter().enumerate() {
        for (jj, j) in cols.iter().enumerate() {
            best = keep_larger(
                best,
                Some(BestExchange {
                    ratio: x[t][jj].abs(),
                    exchange: Exchange::Column { out_col: j, in_col: q },
                }),
            );
        }
    }
    for (s, p) in rbar.iter().enumerate() {
        for (ii, i) in rows.iter().enumerate() {
            best = keep_larger(
                best,
                Some(BestExchange {
                    ratio: y[s][ii].abs(),
                    exchange: Exchange::Row { out_row: i, in_row: p },
                }),
            );
        }
    }

    let combined = exec::map_range(exec, rbar.len(), |s| {
        let p = rbar.as_slice()[s];
        let mut local = None;
        for (t, q) in cbar.iter().enumerate() {
            let gamma = schur_entry(a.get(p, q), &c_rows[s], &x[t]);
            for (ii, i) in rows.iter().enumerate() {
                for (jj, j) in cols.iter().enumerate() {
                    let ratio = (gamma * inv.get(jj, ii) + x[t][jj] * y[s][ii]).abs();
                    local = keep_larger(
                        local,
                        Some(BestExchange {
                            ratio,
                            exchange: Exchange::Both {
                                out_row: i,
                                in_row: p,
                                out_col: j,
                                in_col: q,
                            },
                        }),
                    );
                }
            }
        }
        local
    });
    Ok(combined.into_iter().fold(best, keep_larger))
}

/// Whether no single row and/or column exchange grows the volume of
/// `A[rows, cols]` by more than `rho`. The empty block is trivially maximal.
pub fn is_local_max_volume(a: &DenseMatrix, rows: &IndexSet, cols: &IndexSet, rho: f64) -> Result<bool> {
    check_rho(rho)?;
    Ok(best_local_exchange(a, rows, cols)?.is_none_or(|b| !exceeds(b.ratio, rho)))
}

fn check_rho(rho: f64) -> Result<()> {
    if !(rho >= 1.0 && rho.is_finite()) {
        return Err(Error::InvalidArgument(format!("rho must be finite and >= 1, got {rho}")));
    }
    Ok(())
}

/// Largest `vol(A[:, cols with j -> q]) / vol(A[:, cols])` over single column
/// exchanges, volumes from the SVD. Errors when `A[:, cols]` is numerically
/// rank deficient.
pub fn best_column_exchange(a: &DenseMatrix, cols: &IndexSet) -> Result<Option<BestExchange>> {
    let k = cols.len();
    if k == 0 {
        return Ok(None);
    }
    let all_rows = IndexSet::range(0..a.nrows());
    let base = select(a, &all_rows, cols)?;
    let sv = singular_values(&base)?;
    if k > a.nrows() || numerical_rank_from(&sv, base.nrows(), base.ncols()) < k {
        return Err(Error::Singular {
            rcond: sv.smallest() / sv.largest().max(f64::MIN_POSITIVE),
        });
    }
    let base_volume: f64 = sv.values().iter().product();
    let cbar = cols.complement(a.ncols());
    let candidates: Vec<(usize, usize)> = cols
        .iter()
        .flat_map(|j| cbar.iter().map(move |q| (j, q)))
        .collect();
    let ratios = exec::map_slice(Execution::default(), &candidates, |&(j, q)| -> Result<BestExchange> {
        let swapped = IndexSet::from_unsorted(cols.iter().map(|c| if c == j { q } else { c }).collect());
        let vol: f64 = singular_values(&select(a, &all_rows, &swapped)?)?.values().iter().product();
        Ok(BestExchange {
            ratio: vol / base_volume,
            exchange: Exchange::Column { out_col: j, in_col: q },
        })
    });
    let mut best = None;
    for r in ratios {
        best = keep_larger(best, Some(r?));
    }
    Ok(best)
}

/// Column subset with local `rho`-maximum volume in `A` (single column
/// exchanges, SVD volumes), and the square block with `rho`-maximum volume
/// among row exchanges inside those columns.
pub fn is_normal_max_volume(a: &DenseMatrix, rows: &IndexSet, cols: &IndexSet, rho: f64) -> Result<bool> {
    check_rho(rho)?;
    let a11 = validate_block(a, rows, cols)?;
    if rows.is_empty() {
        return Ok(true);
    }
    if best_column_exchange(a, cols)?.is_some_and(|b| exceeds(b.ratio, rho)) {
        return Ok(false);
    }
    let lu = factor_nonsingular(&a11)?;
    for p in rows.complement(a.nrows()).iter() {
        let c: Vec<f64> = cols.iter().map(|j| a.get(p, j)).collect();
        if lu.solve_transpose(&c).iter().any(|&y| exceeds(y.abs(), rho)) {
            return Ok(false);
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{gen_example_local_not_normal, gen_example_normal_not_local};
    use crate::matrix::det_bruteforce;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn set(v: &[usize]) -> IndexSet {
        IndexSet::new(v.to_vec()).unwrap()
    }

    fn random_matrix(rng: &mut ChaCha8Rng, m: usize, n: usize) -> DenseMatrix {
        DenseMatrix::from_fn(m, n, |_, _| rng.random_range(-1.0..1.0)).unwrap()
    }

    #[test]
    fn col_replace_trivial_cases() {
        let i3 = DenseMatrix::identity(3);
        assert_eq!(col_replace_ratio(&i3, 1, &[0.0, 1.0, 0.0]).unwrap(), 1.0);
        assert_eq!(col_replace_ratio(&i3, 1, &[0.0, 2.0, 0.0]).unwrap(), 2.0);
        assert!(col_replace_ratio(&i3, 3, &[0.0; 3]).is_err());
        assert!(col_replace_ratio(&i3, 0, &[0.0; 2]).is_err());
        assert!(col_replace_ratio(&DenseMatrix::zeros(2, 2), 0, &[1.0, 0.0]).is_err());
    }

    #[test]
    fn col_replace_matches_determinants() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = random_matrix(&mut rng, 4, 4);
        let b: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
        let d0 = det_bruteforce(&a).unwrap().abs();
        for j in 0..4 {
            let want = det_bruteforce(&a.with_col(j, &b).unwrap()).unwrap().abs() / d0;
            let got = col_replace_ratio(&a, j, &b).unwrap();
            assert!((got - want).abs() <= 1e-9 * want.max(1e-300), "{got} vs {want}");
        }
    }

    #[test]
    fn remove_rowcol_trivial_cases() {
        let i4 = DenseMatrix::identity(4);
        assert_eq!(remove_rowcol_ratio(&i4, 2, 2).unwrap(), 1.0);
        assert_eq!(remove_rowcol_ratio(&i4, 1, 3).unwrap(), 0.0);
        assert!(remove_rowcol_ratio(&DenseMatrix::zeros(3, 3), 0, 0).is_err());
    }

    #[test]
    fn remove_rowcol_matches_determinants() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let a = random_matrix(&mut rng, 5, 5);
        let d0 = det_bruteforce(&a).unwrap().abs();
        for i in 0..5 {
            for j in 0..5 {
                let keep_r: IndexSet = (0..5).filter(|&r| r != i).collect();
                let keep_c: IndexSet = (0..5).filter(|&c| c != j).collect();
                let want = det_bruteforce(&select(&a, &keep_r, &keep_c).unwrap()).unwrap().abs() / d0;
                let got = remove_rowcol_ratio(&a, i, j).unwrap();
                assert!((got - want).abs() <= 1e-9 * want.max(1e-12), "({i},{j}) {got} vs {want}");
            }
        }
    }

    #[test]
    fn swap_rowcol_second_counterexample_entry() {
        let d = 0.99;
        let r = swap_rowcol_ratio(&DenseMatrix::identity(2), &[0.0, 0.0], &[d, -1.0], -d, 0, 0).unwrap();
        assert!((r - 0.99).abs() < 1e-15);
    }

    #[test]
    fn swap_rowcol_singular_border_gives_zero() {
        // Ahat = [[1,0,0],[0,1,1],[0,1,1]] is singular and (A11^{-1} b)_0 = 0
        let r = swap_rowcol_ratio(&DenseMatrix::identity(2), &[0.0, 1.0], &[0.0, 1.0], 1.0, 0, 0).unwrap();
        assert_eq!(r, 0.0);
    }

    #[test]
    fn swap_rowcol_matches_determinants() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let k = 4;
        let ahat = random_matrix(&mut rng, k + 1, k + 1);
        let a11 = select(&ahat, &IndexSet::range(0..k), &IndexSet::range(0..k)).unwrap();
        let b: Vec<f64> = (0..k).map(|i| ahat.get(i, k)).collect();
        let c: Vec<f64> = (0..k).map(|j| ahat.get(k, j)).collect();
        let d0 = det_bruteforce(&a11).unwrap().abs();
        for i in 0..k {
            for j in 0..k {
                let rows: IndexSet = (0..=k).filter(|&r| r != i).collect();
                let cols: IndexSet = (0..=k).filter(|&c| c != j).collect();
                let want = det_bruteforce(&select(&ahat, &rows, &cols).unwrap()).unwrap().abs() / d0;
                let got = swap_rowcol_ratio(&a11, &b, &c, ahat.get(k, k), i, j).unwrap();
                assert!((got - want).abs() <= 1e-9 * want.max(1e-12), "({i},{j}) {got} vs {want}");
            }
        }
    }

    #[test]
    fn first_counterexample_is_normal_not_local() {
        let a = gen_example_normal_not_local();
        let lead = IndexSet::range(0..3);
        assert!(is_normal_max_volume(&a, &lead, &lead, 1.0).unwrap());
        assert!(!is_local_max_volume(&a, &lead, &lead, 1.0).unwrap());
        let best = best_local_exchange(&a, &lead, &lead).unwrap().unwrap();
        assert!((best.ratio - 2.0).abs() < 1e-12);
        assert!(matches!(best.exchange, Exchange::Both { in_row: 3, in_col: 3, .. }));
    }

    #[test]
    fn second_counterexample_is_local_not_normal() {
        let a = gen_example_local_not_normal(0.99).unwrap();
        let lead = IndexSet::range(0..2);
        assert!(is_local_max_volume(&a, &lead, &lead, 1.0).unwrap());
        assert!(!is_normal_max_volume(&a, &lead, &lead, 1.0).unwrap());
        // swapping in column 2 for either leading column grows the volume
        let best = best_column_exchange(&a, &lead).unwrap().unwrap();
        assert!(matches!(best.exchange, Exchange::Column { in_col: 2, .. }));
        assert!(best.ratio >= 2.4169 / 2.2272 - 1e-4);
    }

    #[test]
    fn lower_left_block_exchange_factor_is_99() {
        let a = gen_example_local_not_normal(0.99).unwrap();
        let a21 = select(&a, &set(&[2, 3]), &set(&[0, 1])).unwrap();
        let b = [a.get(2, 2), a.get(3, 2)];
        let r = col_replace_ratio(&a21, 1, &b).unwrap();
        assert!((r - 99.0).abs() <= 1e-9 * 99.0, "{r}");
    }

    #[test]
    fn identity_blocks_are_maximal() {
        let a = DenseMatrix::identity(3);
        let s = set(&[0, 1]);
        assert!(is_local_max_volume(&a, &s, &s, 1.0).unwrap());
        assert!(is_normal_max_volume(&a, &s, &s, 1.0).unwrap());
        assert!(is_local_max_volume(&a, &IndexSet::empty(), &IndexSet::empty(), 1.0).unwrap());
        let full = IndexSet::range(0..3);
        assert!(best_local_exchange(&a, &full, &full).unwrap().is_none());
    }

    #[test]
    fn predicate_errors() {
        let a = DenseMatrix::identity(3);
        assert!(is_local_max_volume(&a, &set(&[0]), &set(&[0, 1]), 1.0).is_err());
        assert!(is_local_max_volume(&a, &set(&[0]), &set(&[1]), 1.0).is_err(), "singular block");
        assert!(is_local_max_volume(&a, &set(&[0]), &set(&[0]), 0.5).is_err());
        let z = DenseMatrix::zeros(4, 3);
        assert!(is_normal_max_volume(&z, &set(&[0]), &set(&[0]), 1.0).is_err());
    }
}
