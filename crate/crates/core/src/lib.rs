//! Pivoting factorization (PIFA) and online error-accumulation-minimization
//! reconstruction for low-rank weight compression.
//!
//! Every routine is generic over [`Scalar`] (`f32` or `f64`); the aliases at
//! the crate root fix the precision used by the correctness paths (`f64`) and
//! by the benchmark kernels (`f32`).

pub mod bench;
pub mod decomp;
pub mod error;
pub mod fsio;
pub mod lowrank;
pub mod pifa;
pub mod pipeline;
pub mod reconstruct;
pub mod report;
pub mod scalar;
pub mod tensor;
pub mod threads;

pub use error::{Error, ErrorClass, Result};
pub use scalar::{DType, Scalar};
pub use tensor::{DenseMatrix, SeededRng};

pub type Matrix = DenseMatrix<f64>;
pub type Matrix32 = DenseMatrix<f32>;
