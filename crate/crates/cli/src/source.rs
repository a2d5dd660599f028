//! Matrix sources: a Matrix Market path or a generator description.

use std::path::PathBuf;
use std::str::FromStr;

use rrge_core::generators::{
    gen_example_local_not_normal, gen_example_normal_not_local, gen_peters, gen_random_rank_deficient, random_suite,
};
use rrge_core::mtx::read_matrix_market;
use rrge_core::DenseMatrix;

pub const GRAMMAR: &str = "\
MATRIX SOURCES:
  <path>.mtx                 Matrix Market file (coordinate or array, real or integer)
  peters:<m>                 m x m unit upper triangular matrix with -1 above the diagonal
  example1                   7x4 example whose leading 3x3 block has normal, not local, maximum volume
  example2[:<d>]             4x3 example (d in (0,1), default 0.99) whose leading 2x2 block has local, not normal, maximum volume
  random:<m>,<n>,<r>,<gap>,<seed>
                             U diag(sigma) V^T with rank r and a gap below roundoff
  suite:<count>,<seed>       seeded batch of random matrices (compare only)";

#[derive(Clone, Debug, PartialEq)]
pub enum Source {
    File(PathBuf),
    Peters(usize),
    Example1,
    Example2(f64),
    Random {
        m: usize,
        n: usize,
        r: usize,
        gap: f64,
        seed: u64,
    },
    Suite {
        count: usize,
        seed: u64,
    },
}

/// A loaded matrix with its report name.
pub struct NamedMatrix {
    pub name: String,
    pub matrix: DenseMatrix,
    /// Leading block the example generators are built around.
    pub designated_block: Option<usize>,
}

fn args<T: FromStr>(src: &str, raw: &str, want: usize) -> Result<Vec<T>, String> {
    let parts: Vec<&str> = raw.split(',').collect();
    if parts.len() != want {
        return Err(format!("'{src}' needs {want} comma-separated arguments"));
    }
    parts
        .iter()
        .map(|p| p.trim().parse::<T>().map_err(|_| format!("bad argument '{p}' in '{src}'")))
        .collect()
}

impl FromStr for Source {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let (head, rest) = match s.split_once(':') {
            Some((h, r)) => (h, Some(r)),
            None => (s, None),
        };
        match (head, rest) {
            ("peters", Some(r)) => Ok(Source::Peters(args::<usize>(s, r, 1)?[0])),
            ("example1", None) => Ok(Source::Example1),
            ("example2", None) => Ok(Source::Example2(0.99)),
            ("example2", Some(r)) => Ok(Source::Example2(args::<f64>(s, r, 1)?[0])),
            ("random", Some(r)) => {
                let parts: Vec<&str> = r.split(',').collect();
                if parts.len() != 5 {
                    return Err(format!("'{s}' needs m,n,r,gap,seed"));
                }
                let int = |p: &str| p.trim().parse::<usize>().map_err(|_| format!("bad argument '{p}' in '{s}'"));
                Ok(Source::Random {
                    m: int(parts[0])?,
                    n: int(parts[1])?,
                    r: int(parts[2])?,
                    gap: parts[3].trim().parse().map_err(|_| format!("bad gap '{}' in '{s}'", parts[3]))?,
                    seed: parts[4].trim().parse().map_err(|_| format!("bad seed '{}' in '{s}'", parts[4]))?,
                })
            }
            ("suite", Some(r)) => {
                let v = args::<u64>(s, r, 2)?;
                Ok(Source::Suite {
                    count: v[0] as usize,
                    seed: v[1],
                })
            }
            _ if s.ends_with(".mtx") => Ok(Source::File(PathBuf::from(s))),
            _ => Err(format!("unknown matrix source '{s}' (see --help)")),
        }
    }
}

impl Source {
    pub fn load(&self) -> rrge_core::Result<Vec<NamedMatrix>> {
        let one = |name: String, matrix: DenseMatrix, designated_block: Option<usize>| {
            Ok(vec![NamedMatrix {
                name,
                matrix,
                designated_block,
            }])
        };
        match *self {
            Source::File(ref path) => one(path.display().to_string(), read_matrix_market(path)?, None),
            Source::Peters(m) => one(format!("peters:{m}"), gen_peters(m)?, None),
            Source::Example1 => one("example1".into(), gen_example_normal_not_local(), Some(3)),
            Source::Example2(d) => one(format!("example2:{d}"), gen_example_local_not_normal(d)?, Some(2)),
            Source::Random { m, n, r, gap, seed } => one(
                format!("random:{m},{n},{r},{gap:e},{seed}"),
                gen_random_rank_deficient(m, n, r, gap, seed)?,
                None,
            ),
            Source::Suite { count, seed } => Ok(random_suite(count, seed)
                .into_iter()
                .map(|s| NamedMatrix {
                    name: s.name,
                    matrix: s.matrix,
                    designated_block: None,
                })
                .collect()),
        }
    }
}
