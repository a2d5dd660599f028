//! Per-matrix evaluation rows, the CSV report and bucket summaries.

use std::fmt;
use std::io::Write;
use std::path::Path;

use crate::bounds::{
    compare_with_singular_values, verify_betabound, verify_theorem_bounds, BoundCertificate, PivotRatioBucket,
    SigmaRatioBucket, SvdComparison,
};
use crate::error::Result;
use crate::matrix::DenseMatrix;
use crate::rrge::RankRevealResult;
use crate::svd::singular_values;

pub const REPORT_HEADER: [&str; 18] = [
    "name",
    "m",
    "n",
    "rho",
    "beta",
    "rank_rrge",
    "rank_svd",
    "pivots",
    "pivot_ratio",
    "sigma_min_a11",
    "sigma_r",
    "sigma_r_ratio",
    "ratio_fig1_r",
    "ratio_fig1_r1",
    "schur_norm_c",
    "betabound_pass",
    "theorem_pass",
    "elapsed_ms",
];

/// One CSV row. `None` fields are written as empty strings.
#[derive(Clone, Debug, PartialEq)]
pub struct ReportRow {
    pub name: String,
    pub m: usize,
    pub n: usize,
    pub rho: f64,
    pub beta: Option<f64>,
    pub rank_rrge: Option<usize>,
    pub rank_svd: Option<usize>,
    pub pivots: Option<usize>,
    pub pivot_ratio: Option<f64>,
    pub sigma_min_a11: Option<f64>,
    pub sigma_r: Option<f64>,
    pub sigma_r_ratio: Option<f64>,
    pub ratio_fig1_r: Option<f64>,
    pub ratio_fig1_r1: Option<f64>,
    pub schur_norm_c: Option<f64>,
    pub betabound_pass: bool,
    pub theorem_pass: bool,
    pub elapsed_ms: Option<f64>,
}

impl ReportRow {
    /// Row for a matrix whose run failed before producing a result.
    pub fn failed(name: impl Into<String>, m: usize, n: usize, rho: f64, beta: Option<f64>) -> Self {
        Self {
            name: name.into(),
            m,
            n,
            rho,
            beta,
            rank_rrge: None,
            rank_svd: None,
            pivots: None,
            pivot_ratio: None,
            sigma_min_a11: None,
            sigma_r: None,
            sigma_r_ratio: None,
            ratio_fig1_r: None,
            ratio_fig1_r1: None,
            schur_norm_c: None,
            betabound_pass: false,
            theorem_pass: false,
            elapsed_ms: None,
        }
    }

    fn fields(&self) -> Vec<String> {
        fn real(x: Option<f64>) -> String {
            x.map(|v| format!("{v:.16e}")).unwrap_or_default()
        }
        fn int(x: Option<usize>) -> String {
            x.map(|v| v.to_string()).unwrap_or_default()
        }
        vec![
            self.name.clone(),
            self.m.to_string(),
            self.n.to_string(),
            real(Some(self.rho)),
            real(self.beta),
            int(self.rank_rrge),
            int(self.rank_svd),
            int(self.pivots),
            real(self.pivot_ratio),
            real(self.sigma_min_a11),
            real(self.sigma_r),
            real(self.sigma_r_ratio),
            real(self.ratio_fig1_r),
            real(self.ratio_fig1_r1),
            real(self.schur_norm_c),
            self.betabound_pass.to_string(),
            self.theorem_pass.to_string(),
            real(self.elapsed_ms),
        ]
    }
}

/// A finished run together with its certificates.
#[derive(Clone, Debug)]
pub struct Evaluation {
    pub row: ReportRow,
    pub comparison: SvdComparison,
    pub betabound: BoundCertificate,
    pub theorem: BoundCertificate,
}

/// Certifies `result` against `a` and assembles its report row.
pub fn evaluate(name: &str, a: &DenseMatrix, result: &RankRevealResult, elapsed_ms: Option<f64>) -> Result<Evaluation> {
    let comparison = if a.is_empty() {
        None
    } else {
        let sv = singular_values(a)?;
        Some(compare_with_singular_values(a, result, &sv)?)
    };
    let betabound = verify_betabound(a, result)?;
    let theorem = verify_theorem_bounds(a, result)?;
    let comparison = comparison.expect("empty matrices fail in the certificates");
    let row = ReportRow {
        name: name.to_string(),
        m: a.nrows(),
        n: a.ncols(),
        rho: result.rho_used,
        beta: Some(result.beta_used),
        rank_rrge: Some(result.rank),
        rank_svd: Some(comparison.s),
        pivots: Some(result.pivot_count),
        pivot_ratio: Some(comparison.pivot_ratio),
        sigma_min_a11: comparison.sigma_min_a11,
        sigma_r: comparison.sigma_r,
        sigma_r_ratio: comparison.sigma_ratio,
        ratio_fig1_r: comparison.ratio_r,
        ratio_fig1_r1: comparison.ratio_r1,
        schur_norm_c: Some(betabound.schur_norm_c),
        betabound_pass: betabound.passed,
        theorem_pass: theorem.passed,
        elapsed_ms,
    };
    Ok(Evaluation {
        row,
        comparison,
        betabound,
        theorem,
    })
}

pub fn write_csv_report_to<W: Write>(rows: &[ReportRow], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(REPORT_HEADER)?;
    for row in rows {
        w.write_record(row.fields())?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_csv_report(rows: &[ReportRow], path: impl AsRef<Path>) -> Result<()> {
    write_csv_report_to(rows, std::fs::File::create(path)?)
}

/// Appends rows to `path`, writing the header first if the file is new or
/// empty.
pub fn append_csv_report(rows: &[ReportRow], path: impl AsRef<Path>) -> Result<()> {
    let file = std::fs::OpenOptions::new().create(true).append(true).open(path)?;
    let fresh = file.metadata()?.len() == 0;
    let mut w = csv::Writer::from_writer(file);
    if fresh {
        w.write_record(REPORT_HEADER)?;
    }
    for row in rows {
        w.write_record(row.fields())?;
    }
    w.flush()?;
    Ok(())
}

/// Counts per pivot-ratio and sigma-ratio bucket.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct BucketSummary {
    pub pivot: [usize; 5],
    pub sigma: [usize; 4],
    /// Rows without a pivot ratio (failed runs).
    pub pivot_missing: usize,
    /// Rows without a sigma ratio (rank 0 or failed).
    pub sigma_missing: usize,
}

impl BucketSummary {
    pub fn from_rows(rows: &[ReportRow]) -> Self {
        let mut s = Self::default();
        for row in rows {
            match row.pivot_ratio {
                Some(p) => s.pivot[PivotRatioBucket::of(p) as usize] += 1,
                None => s.pivot_missing += 1,
            }
            match row.sigma_r_ratio {
                Some(x) => s.sigma[SigmaRatioBucket::of(x) as usize] += 1,
                None => s.sigma_missing += 1,
            }
        }
        s
    }

    pub fn pivot_count(&self, bucket: PivotRatioBucket) -> usize {
        self.pivot[bucket as usize]
    }

    pub fn sigma_count(&self, bucket: SigmaRatioBucket) -> usize {
        self.sigma[bucket as usize]
    }
}

impl fmt::Display for BucketSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "sigma_r(A11)/sigma_r(A)")?;
        for b in SigmaRatioBucket::ALL {
            writeln!(f, "  {:<14}{:>6}", b.label(), self.sigma_count(b))?;
        }
        if self.sigma_missing > 0 {
            writeln!(f, "  {:<14}{:>6}", "n/a", self.sigma_missing)?;
        }
        writeln!(f, "pivots/r")?;
        for b in PivotRatioBucket::ALL {
            writeln!(f, "  {:<14}{:>6}", b.label(), self.pivot_count(b))?;
        }
        if self.pivot_missing > 0 {
            writeln!(f, "  {:<14}{:>6}", "n/a", self.pivot_missing)?;
        }
        Ok(())
    }
}
