//! Seeded verification batteries shared by the CLI and the test suites.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::exec::{self, Execution};
use crate::generators::{gen_example_local_not_normal, gen_example_normal_not_local, gen_random_uniform, random_suite, SuiteMatrix};
use crate::matrix::{det_bruteforce, select, DenseMatrix, IndexSet};
use crate::report::{evaluate, Evaluation};
use crate::rrge::{reveal_rank, RrgeOptions};
use crate::svd::{singular_values, volume};
use crate::volume::{col_replace_ratio, is_local_max_volume, is_normal_max_volume, remove_rowcol_ratio, swap_rowcol_ratio};

/// Largest block dimension in the lemma battery.
pub const LEMMA_MAX_K: usize = 6;
pub const LEMMA_REL_TOL: f64 = 1e-9;
/// Ratios below this are compared absolutely (both sides are roundoff).
pub const LEMMA_ABS_FLOOR: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct BatteryOutcome {
    pub name: String,
    pub trials: usize,
    pub failures: usize,
    pub first_failure: Option<String>,
}

impl BatteryOutcome {
    fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            trials: 0,
            failures: 0,
            first_failure: None,
        }
    }

    fn record(&mut self, ok: bool, context: impl FnOnce() -> String) {
        self.trials += 1;
        if !ok {
            self.failures += 1;
            if self.first_failure.is_none() {
                self.first_failure = Some(context());
            }
        }
    }

    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

impl fmt::Display for BatteryOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdict = if self.passed() { "PASS" } else { "FAIL" };
        write!(f, "{verdict} {}: {}/{} ok", self.name, self.trials - self.failures, self.trials)?;
        if let Some(ctx) = &self.first_failure {
            write!(f, "\n  first failure: {ctx}")?;
        }
        Ok(())
    }
}

fn ratio_matches(got: f64, want: f64) -> bool {
    (got - want).abs() <= LEMMA_REL_TOL * want.abs().max(LEMMA_ABS_FLOOR)
}

fn random_vec(rng: &mut ChaCha8Rng, k: usize) -> Vec<f64> {
    (0..k).map(|_| rng.random_range(-1.0..1.0)).collect()
}

/// Compares the three closed-form ratios with brute-force determinant ratios
/// on `trials` random instances each.
pub fn lemma_battery(trials: usize, seed: u64) -> Vec<BatteryOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut col = BatteryOutcome::new("column replacement ratio");
    let mut remove = BatteryOutcome::new("row/column removal ratio");
    let mut swap = BatteryOutcome::new("row and column swap ratio");

    for t in 0..trials {
        let k = rng.random_range(1..=LEMMA_MAX_K);
        let a11 = gen_random_uniform(&mut rng, k, k);
        let b = random_vec(&mut rng, k);
        let j = rng.random_range(0..k);
        let want = (|| -> Result<f64> {
            Ok((det_bruteforce(&a11.with_col(j, &b)?)? / det_bruteforce(&a11)?).abs())
        })();
        let got = col_replace_ratio(&a11, j, &b);
        col.record(matches!((&got, &want), (Ok(g), Ok(w)) if ratio_matches(*g, *w)), || {
            format!("trial {t}: k={k} j={j} got {got:?} want {want:?}")
        });

        let ahat = gen_random_uniform(&mut rng, k + 1, k + 1);
        let (i, j) = (rng.random_range(0..=k), rng.random_range(0..=k));
        let want = (|| -> Result<f64> {
            let rows: IndexSet = (0..=k).filter(|&r| r != i).collect();
            let cols: IndexSet = (0..=k).filter(|&c| c != j).collect();
            Ok((det_bruteforce(&select(&ahat, &rows, &cols)?)? / det_bruteforce(&ahat)?).abs())
        })();
        let got = remove_rowcol_ratio(&ahat, i, j);
        remove.record(matches!((&got, &want), (Ok(g), Ok(w)) if ratio_matches(*g, *w)), || {
            format!("trial {t}: k+1={} (i,j)=({i},{j}) got {got:?} want {want:?}", k + 1)
        });

        let ahat = gen_random_uniform(&mut rng, k + 1, k + 1);
        let (i, j) = (rng.random_range(0..k), rng.random_range(0..k));
        let (got, want) = swap_instance(&ahat, k, i, j);
        swap.record(matches!((&got, &want), (Ok(g), Ok(w)) if ratio_matches(*g, *w)), || {
            format!("trial {t}: k={k} (i,j)=({i},{j}) got {got:?} want {want:?}")
        });
    }
    vec![col, remove, swap]
}

/// Closed form and brute force for the bordered matrix `ahat` whose leading
/// `k x k` block is `A11`.
fn swap_instance(ahat: &DenseMatrix, k: usize, i: usize, j: usize) -> (Result<f64>, Result<f64>) {
    let lead = IndexSet::range(0..k);
    let a11 = match select(ahat, &lead, &lead) {
        Ok(a) => a,
        Err(e) => return (Err(e), Err(crate::Error::EmptyMatrix)),
    };
    let b: Vec<f64> = (0..k).map(|r| ahat.get(r, k)).collect();
    let c: Vec<f64> = (0..k).map(|s| ahat.get(k, s)).collect();
    let got = swap_rowcol_ratio(&a11, &b, &c, ahat.get(k, k), i, j);
    let want = (|| -> Result<f64> {
        let rows: IndexSet = (0..=k).filter(|&r| r != i).collect();
        let cols: IndexSet = (0..=k).filter(|&s| s != j).collect();
        Ok((det_bruteforce(&select(ahat, &rows, &cols)?)? / det_bruteforce(&a11)?).abs())
    })();
    (got, want)
}

/// Result of one engine run on a suite member.
#[derive(Clone, Debug)]
pub struct SuiteOutcome {
    pub name: String,
    pub r_true: usize,
    pub evaluation: std::result::Result<Evaluation, String>,
}

/// Runs the engine and the certificates on every suite member. Members are
/// processed concurrently under [`Execution::Parallel`]; output order is
/// input order.
pub fn run_suite(suite: &[SuiteMatrix], rho: f64, exec: Execution) -> Vec<SuiteOutcome> {
    let opts = RrgeOptions {
        rho,
        beta: None,
        execution: Execution::Sequential,
    };
    exec::map_slice(exec, suite, |s| SuiteOutcome {
        name: s.name.clone(),
        r_true: s.r_true,
        evaluation: reveal_rank(&s.matrix, &opts)
            .and_then(|res| evaluate(&s.name, &s.matrix, &res, None))
            .map_err(|e| e.to_string()),
    })
}

/// Termination and singular value certificates on `trials` suite matrices.
pub fn bounds_battery(trials: usize, seed: u64, rho: f64, exec: Execution) -> Vec<BatteryOutcome> {
    let suite = random_suite(trials, seed);
    let mut beta = BatteryOutcome::new("termination bounds");
    let mut theorem = BatteryOutcome::new("singular value bounds");
    for out in run_suite(&suite, rho, exec) {
        match &out.evaluation {
            Ok(ev) => {
                beta.record(ev.betabound.passed, || {
                    format!("{}: {}", out.name, ev.betabound.first_failure().map(|c| c.to_string()).unwrap_or_default())
                });
                theorem.record(ev.theorem.passed, || {
                    format!("{}: {}", out.name, ev.theorem.first_failure().map(|c| c.to_string()).unwrap_or_default())
                });
            }
            Err(e) => {
                beta.record(false, || format!("{}: {e}", out.name));
                theorem.record(false, || format!("{}: {e}", out.name));
            }
        }
    }
    vec![beta, theorem]
}

pub const EXAMPLE_VOLUME_TOL: f64 = 5e-5;

/// Fixed checks on the two counterexample matrices.
pub fn examples_battery() -> Vec<BatteryOutcome> {
    let mut out = Vec::new();
    let mut single = |name: &str, result: Result<bool>, detail: String| {
        let mut o = BatteryOutcome::new(name);
        let ok = matches!(result, Ok(true));
        o.record(ok, || match &result {
            Err(e) => format!("{detail}: {e}"),
            _ => detail.clone(),
        });
        out.push(o);
    };

    let a1 = gen_example_normal_not_local();
    let a2 = gen_example_local_not_normal(0.99).expect("d in range");
    let all4 = IndexSet::range(0..4);
    let lead3 = IndexSet::range(0..3);
    let lead2 = IndexSet::range(0..2);

    let svs: Result<Vec<Vec<f64>>> = (0..4)
        .map(|skip| {
            let cols: IndexSet = all4.iter().filter(|&j| j != skip).collect();
            Ok(singular_values(&select(&a1, &IndexSet::range(0..7), &cols)?)?.values().to_vec())
        })
        .collect();
    let want = [5f64.sqrt(), 2f64.sqrt(), 2f64.sqrt()];
    let detail = format!("{svs:?}");
    single(
        "7x4 example: every three columns have singular values (sqrt5, sqrt2, sqrt2)",
        svs.map(|v| v.iter().all(|s| s.iter().zip(&want).all(|(x, y)| (x - y).abs() <= 1e-12))),
        detail,
    );
    single(
        "7x4 example: leading 3x3 block has normal maximum volume",
        is_normal_max_volume(&a1, &lead3, &lead3, 1.0),
        "rho = 1".into(),
    );
    single(
        "7x4 example: leading 3x3 block lacks local maximum volume",
        is_local_max_volume(&a1, &lead3, &lead3, 1.0).map(|b| !b),
        "rho = 1".into(),
    );

    let rows = IndexSet::range(0..4);
    for (cols, want, label) in [(vec![0, 1], 2.2272, "{1,2}"), (vec![0, 2], 2.4169, "{1,3}")] {
        let v = select(&a2, &rows, &IndexSet::new(cols).expect("sorted")).and_then(|s| volume(&s));
        let detail = format!("got {v:?}, want {want} +- {EXAMPLE_VOLUME_TOL}");
        single(
            &format!("4x3 example: volume of columns {label}"),
            v.map(|x| (x - want).abs() <= EXAMPLE_VOLUME_TOL),
            detail,
        );
    }
    let factor = select(&a2, &IndexSet::range(2..4), &lead2)
        .and_then(|a21| col_replace_ratio(&a21, 1, &[a2.get(2, 2), a2.get(3, 2)]));
    let detail = format!("got {factor:?}, want 99");
    single(
        "4x3 example: column exchange grows the lower-left block by 99",
        factor.map(|f| (f - 99.0).abs() <= 1e-9 * 99.0),
        detail,
    );
    single(
        "4x3 example: leading 2x2 block has local maximum volume",
        is_local_max_volume(&a2, &lead2, &lead2, 1.0),
        "rho = 1".into(),
    );
    single(
        "4x3 example: leading 2x2 block lacks normal maximum volume",
        is_normal_max_volume(&a2, &lead2, &lead2, 1.0).map(|b| !b),
        "rho = 1".into(),
    );
    out
}
