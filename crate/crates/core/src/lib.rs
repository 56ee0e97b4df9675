//! Closed-form rank-1 non-negative matrix factorization under the KL
//! divergence, for matrices with missing values.
//!
//! The core pieces:
//!
//! * [`nmmf::best_rank1_nmmf`]: the closed-form best rank-1 factorization of
//!   a triple `(X, Y, Z)` sharing factors as `(w⊗h, a⊗h, w⊗b)`.
//! * [`grid::a1gm`]: rank-1 missing NMF. Missing entries are expanded to a
//!   grid `S1 × S2`, permuted to the bottom-right corner, and the observed
//!   blocks are solved with the NMMF formula. Exact whenever the mask is
//!   already grid-like.
//! * [`baselines`]: KL-WNMF multiplicative updates and the em-algorithm,
//!   for comparison.
//! * [`infogeo`]: the log-linear poset model used to check structural
//!   properties of the solutions.
//! * [`data`] and [`bench`]: CSV ingestion, synthetic generators and the
//!   runtime/error comparison harness.
//!
//! ```
//! use a1gm::{a1gm, DenseMatrix, MaskMatrix};
//!
//! let t = DenseMatrix::from_rows(&[[1.0, 2.0, 3.0], [4.0, 5.0, 6.0], [7.0, 8.0, 9.0]])?;
//! let phi = MaskMatrix::from_rows(&[[1u8, 1, 1], [1, 0, 1], [1, 1, 1]])?;
//! let out = a1gm(&phi, &t)?;
//! assert_eq!(out.increase_rate, 1.0);
//! assert!(out.masked_cost >= 0.0);
//! # Ok::<(), a1gm::Error>(())
//! ```

#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod bench;
pub mod data;
pub mod error;
pub mod grid;
pub mod infogeo;
pub mod matrix;
pub mod nmmf;

pub use baselines::{em_rank1, relative_error, wnmf_rank1, IterativeConfig, IterativeResult};
pub use bench::{run_compare, BenchReport};
pub use data::{gen_corner_missing, gen_grid_missing, load_csv, CsvOptions, Dataset, Provenance};
pub use error::{Error, ErrorKind, Result};
pub use grid::{a1gm, a1gm_factors, expand_to_grid, grid_sets, is_grid_like, A1gmResult, GridSets};
pub use matrix::{
    kl_div, masked_kl, nmmf_cost, outer, DenseMatrix, MaskMatrix, MatrixTriple, Rank1Factors,
};
pub use nmmf::{best_rank1_nmf, best_rank1_nmmf};
