//! Dense matrices, seeded randomness and the PFT tensor container.

mod matrix;
pub mod pft;
mod rng;

pub use matrix::{frobenius_norm, matmul, DenseMatrix};
pub use pft::{read_pft, read_pft_any, write_pft, AnyMatrix};
pub use rng::SeededRng;
