//! Rank revealing Gaussian elimination on the augmented matrix `[A | beta I]`.
//!
//! The engine keeps the explicit tableau `W = Abar_B^{-1} [A I]`, where
//! `Abar_B` is the basis matrix with its logical (identity) columns left
//! unscaled. The true entries of `M = AA_B^{-1} AA_N` for `AA = [A  beta I]`
//! are recovered on the fly:
//!
//! | basic row   | nonbasic column | block of `M`           | scale     |
//! |-------------|-----------------|------------------------|-----------|
//! | structural  | logical         | `beta A11^{-1}`        | `beta`    |
//! | structural  | structural      | `A11^{-1} A12`         | 1         |
//! | logical     | logical         | `-A21 A11^{-1}`        | 1         |
//! | logical     | structural      | `beta^{-1} A/A11`      | `1/beta`  |
//!
//! Each pivot replaces a basic column by a nonbasic one whose entry of `M`
//! exceeds `rho` in magnitude, which multiplies `|det AA_B|` by that entry.
//! The loop stops once `||M||_C <= rho`; the structural part of the basis
//! then defines a square `A11` with `||A/A11||_C <= rho beta` and
//! `||A11^{-1}||_C <= rho / beta`.

use crate::error::{Error, Result};
use crate::exec::{self, Execution};
use crate::lu::EPS;
use crate::matrix::{max_abs_norm, select, DenseMatrix, IndexSet};

/// A pivot whose scaled entry is at most this (or non-finite) is rejected:
/// the new basis would lose twelve digits of volume.
pub const BREAKDOWN_FLOOR: f64 = 1e-12;

/// Tableaus with fewer entries are scanned and updated sequentially.
const PARALLEL_MIN_ENTRIES: usize = 1 << 14;

/// Pivot cap `50 min(m, n) + 100`; exact arithmetic cannot cycle, so hitting
/// it means floating-point cycling.
pub fn iteration_cap(m: usize, n: usize) -> usize {
    50 * m.min(n) + 100
}

/// `beta = max(m, n) * eps_mach * ||A||_C`.
pub fn default_beta(a: &DenseMatrix) -> f64 {
    a.nrows().max(a.ncols()) as f64 * EPS * max_abs_norm(a)
}

/// Pivot priority classes, highest priority first.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PivotTier {
    /// (i) entry of `A11^{-1}`: a logical column enters, `A11` shrinks.
    ShrinkInverse,
    /// (ii) entry of `A11^{-1} A12` or `-A21 A11^{-1}`: dimension unchanged.
    Exchange,
    /// (iii) entry of `A/A11`: a structural column enters, `A11` grows.
    Grow,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PivotRecord {
    pub row: usize,
    pub entering: usize,
    pub leaving: usize,
    /// `|M_pq|`, the factor by which the basis volume grew.
    pub magnitude: f64,
    pub tier: PivotTier,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PivotCandidate {
    pub row: usize,
    pub col: usize,
    pub stored: f64,
    pub tier: PivotTier,
}

impl PivotCandidate {
    /// Strict priority: lower tier, then larger stored magnitude. Equal
    /// candidates keep the one seen first (smallest row, then column).
    fn beats(&self, other: &PivotCandidate) -> bool {
        self.tier < other.tier || (self.tier == other.tier && self.stored.abs() > other.stored.abs())
    }
}

/// Explicit simplex-style tableau over the `n + m` columns of `[A I]`.
#[derive(Clone, Debug)]
pub struct Tableau {
    m: usize,
    n: usize,
    w: Vec<f64>,
    basic: Vec<usize>,
    basic_row: Vec<Option<usize>>,
}

impl Tableau {
    fn new(a: &DenseMatrix) -> Self {
        let (m, n) = a.shape();
        let width = n + m;
        let mut w = vec![0.0; m * width];
        for i in 0..m {
            w[i * width..i * width + n].copy_from_slice(a.row(i));
            w[i * width + n + i] = 1.0;
        }
        let mut basic_row = vec![None; width];
        for p in 0..m {
            basic_row[n + p] = Some(p);
        }
        Self {
            m,
            n,
            w,
            basic: (n..n + m).collect(),
            basic_row,
        }
    }

    pub fn nrows(&self) -> usize {
        self.m
    }

    pub fn nstructural(&self) -> usize {
        self.n
    }

    pub fn width(&self) -> usize {
        self.n + self.m
    }

    #[inline]
    pub fn entry(&self, p: usize, q: usize) -> f64 {
        self.w[p * self.width() + q]
    }

    #[inline]
    pub fn row(&self, p: usize) -> &[f64] {
        let width = self.width();
        &self.w[p * width..(p + 1) * width]
    }

    /// Basic column index per tableau row.
    pub fn basic(&self) -> &[usize] {
        &self.basic
    }

    pub fn is_basic(&self, q: usize) -> bool {
        self.basic_row[q].is_some()
    }

    pub fn row_of(&self, q: usize) -> Option<usize> {
        self.basic_row[q]
    }

    #[inline]
    pub fn is_structural(&self, q: usize) -> bool {
        q < self.n
    }

    /// Largest deviation of a basic column from its unit vector.
    pub fn unit_column_defect(&self) -> f64 {
        let mut worst = 0.0_f64;
        for (p, &b) in self.basic.iter().enumerate() {
            for i in 0..self.m {
                let want = if i == p { 1.0 } else { 0.0 };
                worst = worst.max((self.entry(i, b) - want).abs());
            }
        }
        worst
    }
}

/// Mutable state of one elimination run.
#[derive(Clone, Debug)]
pub struct BasisState {
    tableau: Tableau,
    k: usize,
    pivot_log: Vec<PivotRecord>,
    beta: f64,
    rho: f64,
    exec: Execution,
    flops: u64,
}

impl BasisState {
    /// All-logical starting basis `B = {n, .., n+m-1}`.
    pub fn new(a: &DenseMatrix, rho: f64, beta: f64) -> Result<Self> {
        if !(rho >= 1.0 && rho.is_finite()) {
            return Err(Error::InvalidArgument(format!("rho must be finite and >= 1, got {rho}")));
        }
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::InvalidArgument(format!("beta must be finite and > 0, got {beta}")));
        }
        Ok(Self {
            tableau: Tableau::new(a),
            k: 0,
            pivot_log: Vec::new(),
            beta,
            rho,
            exec: Execution::default(),
            flops: 0,
        })
    }

    /// Starts from an arbitrary basis given as `m` column indices of `[A I]`.
    /// The warm-start pivots are not logged.
    pub fn from_basis(a: &DenseMatrix, rho: f64, beta: f64, basis: &[usize]) -> Result<Self> {
        let mut state = Self::new(a, rho, beta)?;
        let (m, n) = a.shape();
        let wanted = IndexSet::new({
            let mut b = basis.to_vec();
            b.sort_unstable();
            b
        })?;
        if wanted.len() != m || wanted.as_slice().last().is_some_and(|&q| q >= n + m) {
            return Err(Error::InvalidArgument(format!("basis must hold {m} distinct columns below {}", n + m)));
        }
        for q in wanted.iter().filter(|&q| q < n) {
            let mut best: Option<(usize, f64)> = None;
            for p in 0..m {
                let b = state.tableau.basic[p];
                if b >= n && !wanted.contains(b) {
                    let v = state.tableau.entry(p, q).abs();
                    if best.is_none_or(|(_, bv)| v > bv) {
                        best = Some((p, v));
                    }
                }
            }
            match best {
                Some((p, v)) if v > 0.0 => state.pivot_unchecked(p, q),
                _ => return Err(Error::Singular { rcond: 0.0 }),
            }
        }
        state.pivot_log.clear();
        state.flops = 0;
        Ok(state)
    }

    pub fn with_execution(mut self, exec: Execution) -> Self {
        self.exec = exec;
        self
    }

    pub fn tableau(&self) -> &Tableau {
        &self.tableau
    }

    /// Number of structural basic columns, the current dimension of `A11`.
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn pivot_log(&self) -> &[PivotRecord] {
        &self.pivot_log
    }

    pub fn flops(&self) -> u64 {
        self.flops
    }

    fn effective_exec(&self) -> Execution {
        if self.tableau.w.len() >= PARALLEL_MIN_ENTRIES {
            self.exec
        } else {
            Execution::Sequential
        }
    }

    /// Factor turning a stored entry into the true entry of `M`.
    #[inline]
    fn scale(&self, p: usize, q: usize) -> f64 {
        let row_structural = self.tableau.is_structural(self.tableau.basic[p]);
        match (row_structural, self.tableau.is_structural(q)) {
            (true, false) => self.beta,
            (false, true) => 1.0 / self.beta,
            _ => 1.0,
        }
    }

    #[inline]
    fn tier_of(row_structural: bool, col_structural: bool) -> PivotTier {
        match (row_structural, col_structural) {
            (true, false) => PivotTier::ShrinkInverse,
            (false, true) => PivotTier::Grow,
            _ => PivotTier::Exchange,
        }
    }

    /// True entry `M_pq` for basic row `p` and nonbasic column `q`.
    pub fn read_scaled_entry(&self, p: usize, q: usize) -> Result<f64> {
        if p >= self.tableau.m || q >= self.tableau.width() {
            return Err(Error::InvalidArgument(format!("entry ({p}, {q}) outside the tableau")));
        }
        if self.tableau.is_basic(q) {
            return Err(Error::InvalidArgument(format!("column {q} is basic")));
        }
        Ok(self.tableau.entry(p, q) * self.scale(p, q))
    }

    /// Violation thresholds in stored units, indexed by tier.
    fn thresholds(&self) -> [f64; 3] {
        [self.rho / self.beta, self.rho, self.rho * self.beta]
    }

    /// Best violating entry of the highest-priority nonempty tier, or `None`
    /// when every `|M_pq| <= rho`.
    pub fn choose_pivot(&self) -> Option<PivotCandidate> {
        let tab = &self.tableau;
        let thresholds = self.thresholds();
        let per_row = exec::map_range(self.effective_exec(), tab.m, |p| {
            let row_structural = tab.is_structural(tab.basic[p]);
            let mut best: Option<PivotCandidate> = None;
            for (q, &v) in tab.row(p).iter().enumerate() {
                if tab.basic_row[q].is_some() {
                    continue;
                }
                let tier = Self::tier_of(row_structural, tab.is_structural(q));
                if v.abs() > thresholds[tier as usize] {
                    let cand = PivotCandidate {
                        row: p,
                        col: q,
                        stored: v,
                        tier,
                    };
                    if best.is_none_or(|b| cand.beats(&b)) {
                        best = Some(cand);
                    }
                }
            }
            best
        });
        per_row.into_iter().flatten().fold(None, |best, cand| match best {
            Some(b) if !cand.beats(&b) => Some(b),
            _ => Some(cand),
        })
    }

    /// Gauss-Jordan step bringing column `q` into the basis at row `p`.
    pub fn apply_pivot(&mut self, p: usize, q: usize) -> Result<PivotRecord> {
        let scaled = self.read_scaled_entry(p, q)?;
        if !scaled.is_finite() || scaled.abs() <= BREAKDOWN_FLOOR {
            return Err(Error::NumericalBreakdown {
                row: p,
                col: q,
                magnitude: scaled.abs(),
            });
        }
        let tier = Self::tier_of(
            self.tableau.is_structural(self.tableau.basic[p]),
            self.tableau.is_structural(q),
        );
        let leaving = self.tableau.basic[p];
        self.pivot_unchecked(p, q);
        let record = PivotRecord {
            row: p,
            entering: q,
            leaving,
            magnitude: scaled.abs(),
            tier,
        };
        self.pivot_log.push(record.clone());
        Ok(record)
    }

    fn pivot_unchecked(&mut self, p: usize, q: usize) {
        let exec = self.effective_exec();
        let tab = &mut self.tableau;
        let width = tab.width();
        let pivot = tab.entry(p, q);
        let pivot_row: Vec<f64> = {
            let row = &mut tab.w[p * width..(p + 1) * width];
            row.iter_mut().for_each(|x| *x /= pivot);
            row[q] = 1.0;
            row.to_vec()
        };
        exec::for_each_row_mut(exec, &mut tab.w, width, |i, row| {
            if i == p {
                return;
            }
            let f = row[q];
            if f != 0.0 {
                for (x, y) in row.iter_mut().zip(&pivot_row) {
                    *x -= f * y;
                }
                row[q] = 0.0;
            }
        });

        let leaving = tab.basic[p];
        tab.basic[p] = q;
        tab.basic_row[leaving] = None;
        tab.basic_row[q] = Some(p);
        if tab.is_structural(q) {
            self.k += 1;
        }
        if tab.is_structural(leaving) {
            self.k -= 1;
        }
        self.flops += (2 * tab.m.saturating_sub(1) * width + width) as u64;
    }

    /// Sorted basic column indices.
    pub fn basis_columns(&self) -> Vec<usize> {
        let mut b = self.tableau.basic.clone();
        b.sort_unstable();
        b
    }

    /// Rows and columns of `A` forming `A11` for the current basis.
    pub fn partition(&self) -> (IndexSet, IndexSet) {
        let tab = &self.tableau;
        let logical_rows: IndexSet = tab.basic.iter().filter(|&&b| b >= tab.n).map(|&b| b - tab.n).collect();
        let cols: IndexSet = tab.basic.iter().copied().filter(|&b| b < tab.n).collect();
        (logical_rows.complement(tab.m), cols)
    }

    /// `A/A11` read from the logical rows of the tableau, rows and columns in
    /// ascending order.
    pub fn schur_complement(&self) -> DenseMatrix {
        let tab = &self.tableau;
        let (rows, cols) = self.partition();
        let schur_rows = rows.complement(tab.m);
        let schur_cols = cols.complement(tab.n);
        let mut data = Vec::with_capacity(schur_rows.len() * schur_cols.len());
        for i in schur_rows.iter() {
            let p = tab.basic_row[tab.n + i].expect("row outside A11 has its logical column basic");
            data.extend(schur_cols.iter().map(|j| tab.entry(p, j)));
        }
        DenseMatrix::from_raw(schur_rows.len(), schur_cols.len(), data)
    }
}

#[derive(Clone, Debug)]
pub struct RankRevealResult {
    pub rank: usize,
    pub row_set: IndexSet,
    pub col_set: IndexSet,
    pub a11: DenseMatrix,
    /// `A/A11`, rows and columns in ascending order of the complements.
    pub schur: DenseMatrix,
    pub pivot_count: usize,
    pub beta_used: f64,
    pub rho_used: f64,
    pub pivot_log: Vec<PivotRecord>,
    pub flops: u64,
    /// Whether the engine worked on `A^T` (done when `m > n`).
    pub transposed: bool,
}

impl RankRevealResult {
    /// `pivots / r`, defined as 1 for a pivot-free rank-0 result.
    pub fn pivot_ratio(&self) -> f64 {
        if self.rank == 0 {
            if self.pivot_count == 0 {
                1.0
            } else {
                f64::INFINITY
            }
        } else {
            self.pivot_count as f64 / self.rank as f64
        }
    }

    fn trivial(a: &DenseMatrix, rho: f64, beta: f64) -> Self {
        Self {
            rank: 0,
            row_set: IndexSet::empty(),
            col_set: IndexSet::empty(),
            a11: DenseMatrix::zeros(0, 0),
            schur: a.clone(),
            pivot_count: 0,
            beta_used: beta,
            rho_used: rho,
            pivot_log: Vec::new(),
            flops: 0,
            transposed: false,
        }
    }
}

/// Engine settings. `beta = None` selects [`default_beta`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RrgeOptions {
    pub rho: f64,
    pub beta: Option<f64>,
    pub execution: Execution,
}

impl Default for RrgeOptions {
    fn default() -> Self {
        Self {
            rho: 2.0,
            beta: None,
            execution: Execution::default(),
        }
    }
}

/// Runs the elimination from the all-logical basis until `||M||_C <= rho`.
pub fn find_submatrix(a: &DenseMatrix, rho: f64, beta: f64) -> Result<RankRevealResult> {
    find_submatrix_with(a, rho, beta, Execution::default())
}

pub fn find_submatrix_with(a: &DenseMatrix, rho: f64, beta: f64, exec: Execution) -> Result<RankRevealResult> {
    if !(rho >= 1.0 && rho.is_finite()) {
        return Err(Error::InvalidArgument(format!("rho must be finite and >= 1, got {rho}")));
    }
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::InvalidArgument(format!("beta must be finite and > 0, got {beta}")));
    }
    if a.is_empty() {
        return Ok(RankRevealResult::trivial(a, rho, beta));
    }

    let transposed = a.nrows() > a.ncols();
    let work = if transposed { a.transpose() } else { a.clone() };
    let cap = iteration_cap(work.nrows(), work.ncols());

    let mut state = BasisState::new(&work, rho, beta)?.with_execution(exec);
    while let Some(c) = state.choose_pivot() {
        if state.pivot_log.len() >= cap {
            return Err(Error::IterationCap {
                cap,
                pivot_log: state.pivot_log,
            });
        }
        state.apply_pivot(c.row, c.col)?;
    }

    let (rows, cols) = state.partition();
    let schur = state.schur_complement();
    let (row_set, col_set, schur) = if transposed {
        (cols, rows, schur.transpose())
    } else {
        (rows, cols, schur)
    };
    let a11 = select(a, &row_set, &col_set)?;
    Ok(RankRevealResult {
        rank: row_set.len(),
        row_set,
        col_set,
        a11,
        schur,
        pivot_count: state.pivot_log.len(),
        beta_used: beta,
        rho_used: rho,
        flops: state.flops,
        pivot_log: state.pivot_log,
        transposed,
    })
}

/// [`find_submatrix`] with the default `beta` and the zero-matrix shortcut
/// (`beta = 0` only happens for `A = 0`, whose rank is 0).
pub fn reveal_rank(a: &DenseMatrix, opts: &RrgeOptions) -> Result<RankRevealResult> {
    let beta = opts.beta.unwrap_or_else(|| default_beta(a));
    if opts.beta.is_none() && beta == 0.0 {
        if !(opts.rho >= 1.0 && opts.rho.is_finite()) {
            return Err(Error::InvalidArgument(format!("rho must be finite and >= 1, got {}", opts.rho)));
        }
        return Ok(RankRevealResult::trivial(a, opts.rho, 0.0));
    }
    find_submatrix_with(a, opts.rho, beta, opts.execution)
}
