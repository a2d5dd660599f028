//! Rank revealing Gaussian elimination by local maximum volume.
//!
//! [`rrge::find_submatrix`] selects a square nonsingular submatrix `A11` of a
//! dense matrix `A` by pivoting on the augmented matrix `[A | beta I]`. The
//! dimension of `A11` is the numerical rank of `A`, the Schur complement
//! `A/A11` is small, and `sigma_min(A11)` stays within a polynomial factor of
//! `sigma_r(A)`. [`bounds`] re-derives all of this from `A` alone and
//! [`svd`] provides an independent singular value oracle.

pub mod battery;
pub mod bounds;
pub mod compensated;
pub mod error;
pub mod exec;
pub mod generators;
pub mod lu;
pub mod matrix;
pub mod mtx;
pub mod report;
pub mod rrge;
pub mod svd;
pub mod volume;

pub use error::{Error, Result};
pub use exec::Execution;
pub use matrix::{det_bruteforce, max_abs_norm, select, DenseMatrix, IndexSet};
pub use rrge::{default_beta, find_submatrix, reveal_rank, RankRevealResult, RrgeOptions};
