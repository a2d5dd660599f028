use std::fmt;
use std::io::Write;
use std::time::Instant;

use rrge_core::battery::{bounds_battery, examples_battery, lemma_battery, BatteryOutcome};
use rrge_core::report::{append_csv_report, evaluate, write_csv_report, write_csv_report_to, BucketSummary, ReportRow};
use rrge_core::volume::{best_local_exchange, is_local_max_volume, is_normal_max_volume};
use rrge_core::{reveal_rank, Error, Execution, IndexSet, RankRevealResult, RrgeOptions};

use crate::source::{NamedMatrix, Source};
use crate::{Battery, CompareArgs, EngineArgs, RankArgs, VerifyArgs};

#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Core(Error),
    Verify(String),
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Core(Error::NumericalBreakdown { .. }) => 2,
            Failure::Core(Error::IterationCap { .. }) => 3,
            Failure::Verify(_) => 4,
            _ => 1,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Usage(msg) | Failure::Verify(msg) => f.write_str(msg),
            Failure::Core(e) => write!(f, "{e}"),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Core(Error::Io(e))
    }
}

fn options(engine: &EngineArgs, execution: Execution) -> RrgeOptions {
    RrgeOptions {
        rho: engine.rho,
        beta: engine.beta,
        execution,
    }
}

fn pass(b: bool) -> &'static str {
    if b {
        "pass"
    } else {
        "FAIL"
    }
}

fn timed_run(nm: &NamedMatrix, opts: &RrgeOptions) -> rrge_core::Result<(RankRevealResult, f64)> {
    let start = Instant::now();
    let res = reveal_rank(&nm.matrix, opts)?;
    Ok((res, start.elapsed().as_secs_f64() * 1e3))
}

pub fn rank(args: RankArgs) -> Result<(), Failure> {
    let mut loaded = args.source.load()?;
    if loaded.len() != 1 {
        return Err(Failure::Usage("rank takes a single matrix; use compare for suites".into()));
    }
    let nm = loaded.remove(0);
    let a = &nm.matrix;
    let (res, ms) = timed_run(&nm, &options(&args.engine, Execution::Parallel))?;
    let ev = evaluate(&nm.name, a, &res, args.engine.timing.then_some(ms))?;

    let mut out = std::io::stdout().lock();
    writeln!(out, "matrix     {} ({}x{})", nm.name, a.nrows(), a.ncols())?;
    writeln!(out, "rank       {}", res.rank)?;
    writeln!(out, "rows       {}", res.row_set.len())?;
    writeln!(out, "columns    {}", res.col_set.len())?;
    writeln!(out, "pivots     {}", res.pivot_count)?;
    writeln!(out, "flops      {}", res.flops)?;
    writeln!(out, "rho        {}", res.rho_used)?;
    writeln!(out, "beta       {:e}", res.beta_used)?;
    writeln!(out, "svd rank   {}", ev.comparison.s)?;
    writeln!(out, "||A/A11||  {:e}", ev.betabound.schur_norm_c)?;
    writeln!(out, "betabound  {}", pass(ev.betabound.passed))?;
    writeln!(out, "theorem    {}", pass(ev.theorem.passed))?;
    for c in ev.betabound.checks.iter().chain(&ev.theorem.checks).filter(|c| !c.holds) {
        writeln!(out, "  {c}")?;
    }
    if args.show_sets {
        writeln!(out, "row set    {}", res.row_set.to_one_based_string())?;
        writeln!(out, "col set    {}", res.col_set.to_one_based_string())?;
    }

    if args.check_local || args.check_normal {
        let (rows, cols, label) = match args.leading.or(nm.designated_block) {
            Some(k) => {
                if k > a.nrows().min(a.ncols()) {
                    return Err(Failure::Usage(format!("--leading {k} exceeds {}x{}", a.nrows(), a.ncols())));
                }
                (IndexSet::range(0..k), IndexSet::range(0..k), format!("leading {k}x{k} block"))
            }
            None => (res.row_set.clone(), res.col_set.clone(), format!("selected {}x{} block", res.rank, res.rank)),
        };
        let rho = args.engine.rho;
        if args.check_local {
            let yes = is_local_max_volume(a, &rows, &cols, rho)?;
            let best = best_local_exchange(a, &rows, &cols)?.map(|b| b.ratio).unwrap_or(0.0);
            writeln!(
                out,
                "{label}: {} local maximum volume at rho={rho} (largest exchange ratio {best:.6})",
                if yes { "has" } else { "does not have" }
            )?;
        }
        if args.check_normal {
            let yes = is_normal_max_volume(a, &rows, &cols, rho)?;
            writeln!(
                out,
                "{label}: {} normal maximum volume at rho={rho}",
                if yes { "has" } else { "does not have" }
            )?;
        }
    }

    if let Some(path) = &args.csv {
        append_csv_report(&[ev.row], path)?;
    }
    Ok(())
}

fn compare_one(nm: &NamedMatrix, opts: &RrgeOptions, timing: bool) -> (ReportRow, Option<String>) {
    let (m, n) = nm.matrix.shape();
    let run = timed_run(nm, opts).and_then(|(res, ms)| evaluate(&nm.name, &nm.matrix, &res, timing.then_some(ms)));
    match run {
        Ok(ev) => (ev.row, None),
        Err(e) => (ReportRow::failed(&nm.name, m, n, opts.rho, opts.beta), Some(e.to_string())),
    }
}

#[cfg(feature = "parallel")]
fn map_matrices<F>(items: &[NamedMatrix], f: F) -> Vec<(ReportRow, Option<String>)>
where
    F: Fn(&NamedMatrix) -> (ReportRow, Option<String>) + Sync + Send,
{
    use rayon::prelude::*;
    items.par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
fn map_matrices<F>(items: &[NamedMatrix], f: F) -> Vec<(ReportRow, Option<String>)>
where
    F: Fn(&NamedMatrix) -> (ReportRow, Option<String>),
{
    items.iter().map(f).collect()
}

pub fn compare(args: CompareArgs) -> Result<(), Failure> {
    // a source that fails to load still gets a (failed) row
    let mut items = Vec::new();
    let mut load_failures: Vec<(usize, ReportRow, String)> = Vec::new();
    for source in &args.sources {
        match source.load() {
            Ok(v) => items.extend(v),
            Err(e) => {
                let name = match source {
                    Source::File(p) => p.display().to_string(),
                    other => format!("{other:?}"),
                };
                let row = ReportRow::failed(name, 0, 0, args.engine.rho, args.engine.beta);
                load_failures.push((items.len(), row, e.to_string()));
            }
        }
    }

    let opts = options(&args.engine, Execution::Sequential);
    let mut results = map_matrices(&items, |nm| compare_one(nm, &opts, args.engine.timing));
    for (pos, row, err) in load_failures.into_iter().rev() {
        results.insert(pos, (row, Some(err)));
    }

    let rows: Vec<ReportRow> = results.iter().map(|(r, _)| r.clone()).collect();
    for (row, err) in &results {
        if let Some(e) = err {
            eprintln!("warning: {}: {e}", row.name);
        }
    }

    let summary = render_summary(&rows);
    match &args.csv {
        Some(path) => {
            write_csv_report(&rows, path)?;
            print!("{summary}");
        }
        None => {
            write_csv_report_to(&rows, std::io::stdout().lock())?;
            eprint!("{summary}");
        }
    }
    Ok(())
}

fn render_summary(rows: &[ReportRow]) -> String {
    let done: Vec<&ReportRow> = rows.iter().filter(|r| r.rank_rrge.is_some()).collect();
    let agree = done.iter().filter(|r| r.rank_rrge == r.rank_svd).count();
    let beta_ok = done.iter().filter(|r| r.betabound_pass).count();
    let thm_ok = done.iter().filter(|r| r.theorem_pass).count();
    format!(
        "matrices {} (failed {})\nrank agreement with svd {agree}/{}\nbetabound pass {beta_ok}/{}\ntheorem pass {thm_ok}/{}\n{}",
        rows.len(),
        rows.len() - done.len(),
        done.len(),
        done.len(),
        done.len(),
        BucketSummary::from_rows(rows)
    )
}

pub fn verify(args: VerifyArgs) -> Result<(), Failure> {
    if !(args.rho >= 1.0 && args.rho.is_finite()) {
        return Err(Failure::Usage(format!("--rho must be finite and >= 1, got {}", args.rho)));
    }
    let mut outcomes: Vec<BatteryOutcome> = Vec::new();
    let run = |b: Battery| args.suite == Battery::All || args.suite == b;
    if run(Battery::Lemmas) {
        outcomes.extend(lemma_battery(args.trials.unwrap_or(1000), args.seed));
    }
    if run(Battery::Bounds) {
        outcomes.extend(bounds_battery(args.trials.unwrap_or(200), args.seed, args.rho, Execution::Parallel));
    }
    if run(Battery::Examples) {
        outcomes.extend(examples_battery());
    }
    for o in &outcomes {
        println!("{o}");
    }
    let failed = outcomes.iter().filter(|o| !o.passed()).count();
    if failed > 0 {
        return Err(Failure::Verify(format!("{failed} of {} checks failed", outcomes.len())));
    }
    Ok(())
}
