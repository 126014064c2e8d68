//! Linear-algebra engine: pivoted QR, thin SVD, Cholesky, linear solves.
//!
//! Everything here is implemented in-repo so that pivot selection order is
//! reproducible bit-for-bit across platforms.

mod cholesky;
mod lu;
mod qr;
mod svd;

pub use cholesky::{cholesky, solve_lower, solve_lower_transposed, solve_upper};
pub use lu::solve_linear;
pub(crate) use qr::leading_pivots;
pub use qr::{lstsq, qr_column_pivoted, PivotedQr, DEFAULT_RANK_TOL};
pub use svd::{thin_svd, ThinSvd};

use crate::error::Result;
use crate::scalar::Scalar;
use crate::tensor::DenseMatrix;

/// `s_max / s_min` from the thin SVD; `+inf` when `s_min` is zero.
pub fn condition_number<T: Scalar>(a: &DenseMatrix<T>) -> Result<T> {
    if a.is_empty() {
        return Ok(T::infinity());
    }
    let svd = thin_svd(a)?;
    let max = svd.s[0];
    let min = *svd.s.last().expect("non-empty");
    if min <= T::zero() || max <= T::zero() {
        return Ok(T::infinity());
    }
    Ok(max / min)
}

/// Condition estimate above which a square solve of order `n` is treated as singular.
pub(crate) fn singular_threshold<T: Scalar>(n: usize) -> T {
    (T::epsilon() * T::of(n.max(1) as f64)).recip()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn condition_of_simple_matrices() {
        assert_eq!(condition_number(&DenseMatrix::<f64>::identity(4)).unwrap(), 1.0);
        let d = DenseMatrix::<f64>::from_diag(&[10.0, 1.0]);
        assert!((condition_number(&d).unwrap() - 10.0).abs() < 1e-12);
        let s = DenseMatrix::<f64>::from_rows(&[[1.0, 2.0], [2.0, 4.0]]);
        assert!(condition_number(&s).unwrap() > 1e15);
        assert!(condition_number(&DenseMatrix::<f64>::zeros(2, 2))
            .unwrap()
            .is_infinite());
    }

    #[test]
    fn random_orthogonal_has_unit_condition() {
        let g = crate::tensor::SeededRng::new(3).gaussian::<f64>(12, 12);
        let q = qr_column_pivoted(&g, 1e-10).unwrap().q;
        assert!((condition_number(&q).unwrap() - 1.0).abs() < 1e-8);
    }
}
