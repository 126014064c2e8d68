//! Pivoting factorization: a lossless compact form for rank-`r` matrices.
//!
//! A rank-`r` matrix `W'` (`m x n`) has `r` linearly independent rows. Keeping
//! those pivot rows `W_p` plus a coefficient matrix `C` with
//! `W'[non-pivot rows] = C * W_p` stores `r(m + n) - r^2` values (plus `r`
//! indices) instead of the `r(m + n)` of a factor pair `U * V^T`.

mod build;
mod count;
mod io;
mod kernel;
mod layer;

pub use build::{pifa_build, pifa_build_factors, pifa_build_with_tol, NORMAL_EQUATION_COND_LIMIT};
pub use count::{lowrank_param_count, pifa_param_count};
pub use io::{decode_pifa, encode_pifa, pifl_file_bytes, read_pifa, write_pifa, PIFL_HEADER_BYTES, PIFL_MAGIC};
pub use kernel::{CountingKernel, DefaultKernel, MatmulKernel, OpCount};
pub use layer::{pifa_forward, reconstruct_dense, PifaLayer};
