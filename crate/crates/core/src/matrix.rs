//! Dense real matrices, index sets and the small kernels everything else is
//! built from.
//!
//! Storage is a single row-major buffer. Matrices are immutable once built;
//! every constructor rejects NaN and infinite entries.

use std::fmt;

use crate::error::{Error, Result};

/// Largest dimension accepted by [`det_bruteforce`].
pub const BRUTEFORCE_MAX_DIM: usize = 8;

/// Dense `rows x cols` matrix of finite reals.
#[derive(Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    /// Builds a matrix from a row-major buffer.
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::ShapeMismatch {
                rows,
                cols,
                len: data.len(),
            });
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                row: pos / cols.max(1),
                col: pos % cols.max(1),
                value: data[pos],
            });
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from a slice of equally long rows.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != cols {
                return Err(Error::DimensionMismatch(format!(
                    "row {i} has {} entries, expected {cols}",
                    row.len()
                )));
            }
            data.extend_from_slice(row);
        }
        Self::new(rows.len(), cols, data)
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self::new(rows, cols, data)
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    /// Skips the finiteness scan; callers guarantee the buffer is finite.
    pub(crate) fn from_raw(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), rows * cols);
        Self { rows, cols, data }
    }

    #[inline]
    pub fn nrows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn ncols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn is_empty(&self) -> bool {
        self.rows == 0 || self.cols == 0
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn col(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    /// Row-major view of all entries.
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn transpose(&self) -> Self {
        let mut data = Vec::with_capacity(self.data.len());
        for j in 0..self.cols {
            for i in 0..self.rows {
                data.push(self.get(i, j));
            }
        }
        Self::from_raw(self.cols, self.rows, data)
    }

    pub fn matmul(&self, rhs: &DenseMatrix) -> Result<DenseMatrix> {
        if self.cols != rhs.rows {
            return Err(Error::DimensionMismatch(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let mut data = vec![0.0; self.rows * rhs.cols];
        for i in 0..self.rows {
            let out = &mut data[i * rhs.cols..(i + 1) * rhs.cols];
            for (l, &a) in self.row(i).iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                for (o, &b) in out.iter_mut().zip(rhs.row(l)) {
                    *o += a * b;
                }
            }
        }
        DenseMatrix::new(self.rows, rhs.cols, data)
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols, "matvec dimension mismatch");
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// Copy with column `j` replaced by `v`.
    pub fn with_col(&self, j: usize, v: &[f64]) -> Result<DenseMatrix> {
        if j >= self.cols || v.len() != self.rows {
            return Err(Error::DimensionMismatch(format!(
                "cannot put a {}-vector into column {j} of a {}x{} matrix",
                v.len(),
                self.rows,
                self.cols
            )));
        }
        let mut out = self.clone();
        for (i, &x) in v.iter().enumerate() {
            out.data[i * self.cols + j] = x;
        }
        DenseMatrix::new(out.rows, out.cols, out.data)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }
}

impl fmt::Debug for DenseMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "DenseMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  ")?;
            for x in self.row(i) {
                write!(f, "{x:>12.5e} ")?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

/// Strictly increasing list of 0-based indices into one axis of a matrix.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct IndexSet {
    indices: Vec<usize>,
}

impl IndexSet {
    pub fn new(indices: Vec<usize>) -> Result<Self> {
        if let Some(w) = indices.windows(2).find(|w| w[0] >= w[1]) {
            return Err(Error::InvalidIndexSet(format!(
                "indices must be strictly increasing, found {} before {}",
                w[0], w[1]
            )));
        }
        Ok(Self { indices })
    }

    /// Sorts and deduplicates.
    pub fn from_unsorted(mut indices: Vec<usize>) -> Self {
        indices.sort_unstable();
        indices.dedup();
        Self { indices }
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn range(range: std::ops::Range<usize>) -> Self {
        Self {
            indices: range.collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.indices
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.indices.iter().copied()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.indices.binary_search(&i).is_ok()
    }

    /// `[0, n)` minus this set.
    pub fn complement(&self, n: usize) -> Self {
        Self {
            indices: (0..n).filter(|i| !self.contains(*i)).collect(),
        }
    }

    /// Indices of `self` picked by positions in `inner`, so that
    /// `select(select(A, r1, c1), r2, c2) == select(A, r1.compose(r2), c1.compose(c2))`.
    pub fn compose(&self, inner: &IndexSet) -> Result<Self> {
        let indices = inner
            .iter()
            .map(|k| {
                self.indices.get(k).copied().ok_or(Error::InvalidSelection {
                    index: k,
                    len: self.len(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { indices })
    }

    fn check_within(&self, len: usize) -> Result<()> {
        match self.indices.last() {
            Some(&last) if last >= len => Err(Error::InvalidSelection { index: last, len }),
            _ => Ok(()),
        }
    }

    /// 1-based rendering for human-facing reports.
    pub fn to_one_based_string(&self) -> String {
        let parts: Vec<String> = self.indices.iter().map(|i| (i + 1).to_string()).collect();
        format!("{{{}}}", parts.join(","))
    }
}

impl FromIterator<usize> for IndexSet {
    fn from_iter<T: IntoIterator<Item = usize>>(iter: T) -> Self {
        Self::from_unsorted(iter.into_iter().collect())
    }
}

/// Chebyshev norm: the largest absolute entry, 0 for empty matrices.
pub fn max_abs_norm(a: &DenseMatrix) -> f64 {
    a.data.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()))
}

/// The `|rows| x |cols|` submatrix in index order.
pub fn select(a: &DenseMatrix, rows: &IndexSet, cols: &IndexSet) -> Result<DenseMatrix> {
    rows.check_within(a.rows)?;
    cols.check_within(a.cols)?;
    let mut data = Vec::with_capacity(rows.len() * cols.len());
    for i in rows.iter() {
        let row = a.row(i);
        data.extend(cols.iter().map(|j| row[j]));
    }
    Ok(DenseMatrix::from_raw(rows.len(), cols.len(), data))
}

/// Determinant by the permutation sum (Heap's algorithm). Test oracle only,
/// limited to dimension [`BRUTEFORCE_MAX_DIM`].
pub fn det_bruteforce(a: &DenseMatrix) -> Result<f64> {
    if !a.is_square() {
        return Err(Error::NotSquare {
            rows: a.rows,
            cols: a.cols,
        });
    }
    let k = a.rows;
    if k > BRUTEFORCE_MAX_DIM {
        return Err(Error::TooLarge(k));
    }
    if k == 0 {
        return Ok(1.0);
    }

    let term = |perm: &[usize]| -> f64 { perm.iter().enumerate().map(|(i, &j)| a.get(i, j)).product() };

    let mut perm: Vec<usize> = (0..k).collect();
    let mut counters = vec![0usize; k];
    let mut sign = 1.0;
    let mut det = term(&perm);
    let mut i = 1;
    while i < k {
        if counters[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(counters[i], i);
            }
            sign = -sign;
            det += sign * term(&perm);
            counters[i] += 1;
            i = 1;
        } else {
            counters[i] = 0;
            i += 1;
        }
    }
    Ok(det)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::gen_peters;

    #[test]
    fn constructor_rejects_non_finite() {
        let err = DenseMatrix::new(1, 2, vec![1.0, f64::NAN]).unwrap_err();
        assert!(matches!(err, Error::NonFinite { row: 0, col: 1, .. }));
        assert!(DenseMatrix::new(2, 2, vec![1.0, f64::INFINITY, 0.0, 0.0]).is_err());
        assert!(DenseMatrix::new(2, 2, vec![0.0; 3]).is_err());
    }

    #[test]
    fn max_abs_norm_cases() {
        assert_eq!(max_abs_norm(&DenseMatrix::zeros(3, 4)), 0.0);
        assert_eq!(max_abs_norm(&DenseMatrix::zeros(0, 0)), 0.0);
        for m in [1, 2, 7, 20] {
            assert_eq!(max_abs_norm(&gen_peters(m).unwrap()), 1.0);
        }
        let a = DenseMatrix::from_rows(&[[0.5, -3.25], [2.0, 1.0]]).unwrap();
        assert_eq!(max_abs_norm(&a), 3.25);
    }

    #[test]
    fn select_blocks() {
        let i3 = DenseMatrix::identity(3);
        let s = select(&i3, &IndexSet::range(0..2), &IndexSet::range(0..2)).unwrap();
        assert_eq!(s, DenseMatrix::identity(2));

        let p = gen_peters(4).unwrap();
        let block = select(&p, &IndexSet::range(0..3), &IndexSet::range(1..4)).unwrap();
        let expected = DenseMatrix::from_rows(&[[-1.0, -1.0, -1.0], [1.0, -1.0, -1.0], [0.0, 1.0, -1.0]]).unwrap();
        assert_eq!(block, expected);

        let all = select(&p, &IndexSet::range(0..4), &IndexSet::range(0..4)).unwrap();
        assert_eq!(all, p);
    }

    #[test]
    fn select_out_of_range() {
        let a = DenseMatrix::identity(3);
        let err = select(&a, &IndexSet::new(vec![0, 3]).unwrap(), &IndexSet::range(0..1)).unwrap_err();
        assert!(matches!(err, Error::InvalidSelection { index: 3, len: 3 }));
    }

    #[test]
    fn index_set_validation() {
        assert!(IndexSet::new(vec![0, 2, 2]).is_err());
        assert!(IndexSet::new(vec![3, 1]).is_err());
        let s = IndexSet::new(vec![1, 3]).unwrap();
        assert_eq!(s.complement(5).as_slice(), &[0, 2, 4]);
        assert_eq!(s.to_one_based_string(), "{2,4}");
    }

    #[test]
    fn det_small_cases() {
        for k in 0..=BRUTEFORCE_MAX_DIM {
            assert_eq!(det_bruteforce(&DenseMatrix::identity(k)).unwrap(), 1.0);
        }
        let d = 0.99;
        let a = DenseMatrix::from_rows(&[[d, -1.0], [-1.0, d]]).unwrap();
        let det_a = det_bruteforce(&a).unwrap();
        assert!((det_a - (d * d - 1.0)).abs() < 1e-15);
        assert!((det_a + 0.0199).abs() < 1e-12);

        let b = DenseMatrix::from_rows(&[[d, -d], [-1.0, -d]]).unwrap();
        let det_b = det_bruteforce(&b).unwrap();
        assert!((det_b + 1.9701).abs() < 1e-12);
        assert!((det_b.abs() / det_a.abs() - 99.0).abs() < 1e-9 * 99.0);
    }

    #[test]
    fn det_sign_of_permutation() {
        // swapping two rows of I_3 flips the sign
        let p = DenseMatrix::from_rows(&[[0.0, 1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0]]).unwrap();
        assert_eq!(det_bruteforce(&p).unwrap(), -1.0);
        // cyclic shift of I_4 is an odd permutation
        let c = DenseMatrix::from_fn(4, 4, |i, j| if j == (i + 1) % 4 { 1.0 } else { 0.0 }).unwrap();
        assert_eq!(det_bruteforce(&c).unwrap(), -1.0);
    }

    #[test]
    fn det_rejects_bad_shapes() {
        assert!(matches!(det_bruteforce(&DenseMatrix::zeros(2, 3)), Err(Error::NotSquare { .. })));
        assert!(matches!(det_bruteforce(&DenseMatrix::identity(9)), Err(Error::TooLarge(9))));
    }
}
