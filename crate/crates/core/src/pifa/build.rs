use super::layer::PifaLayer;
use crate::decomp::{leading_pivots, lstsq, solve_linear, DEFAULT_RANK_TOL};
use crate::error::{Error, Result};
use crate::lowrank::LowRankFactors;
use crate::scalar::Scalar;
use crate::tensor::DenseMatrix;

/// Above this condition estimate of `W_p W_p^T` the coefficient matrix is
/// solved by Householder least squares instead of the normal equations.
pub const NORMAL_EQUATION_COND_LIMIT: f64 = 1e12;

/// Builds a PIFA layer from a matrix of numerical rank `r`.
pub fn pifa_build<T: Scalar>(w_prime: &DenseMatrix<T>, r: usize) -> Result<PifaLayer<T>> {
    pifa_build_with_tol(w_prime, r, T::of(DEFAULT_RANK_TOL))
}

/// Forms `W' = U V^T` and builds at the factors' inner dimension.
pub fn pifa_build_factors<T: Scalar>(factors: &LowRankFactors<T>) -> Result<PifaLayer<T>> {
    pifa_build(&factors.to_dense(), factors.rank())
}

/// Pivot rows are the first `r` column pivots of `W'^T`; `C` solves
/// `C W_p = W_np` through the `r x r` system `(W_p W_p^T) C^T = W_p W_np^T`.
pub fn pifa_build_with_tol<T: Scalar>(w_prime: &DenseMatrix<T>, r: usize, tol: T) -> Result<PifaLayer<T>> {
    let (m, n) = w_prime.shape();
    if r == 0 || r > m || r > n {
        return Err(Error::shape(
            "pifa_build",
            format!("rank {r} outside 1..=min({m}, {n})"),
        ));
    }
    let (pivots, diag) = leading_pivots(&w_prime.transpose(), r, tol)?;
    let w_p = w_prime.select_rows(&pivots);
    let mut is_pivot = vec![false; m];
    for &p in &pivots {
        is_pivot[p] = true;
    }
    let nonpivots: Vec<usize> = (0..m).filter(|&i| !is_pivot[i]).collect();
    let c = if nonpivots.is_empty() {
        DenseMatrix::zeros(0, r)
    } else {
        let w_np = w_prime.select_rows(&nonpivots);
        solve_coefficients(&w_p, &w_np, &diag)?
    };
    PifaLayer::from_parts(m, n, pivots, w_p, c)
}

fn solve_coefficients<T: Scalar>(w_p: &DenseMatrix<T>, w_np: &DenseMatrix<T>, diag: &[T]) -> Result<DenseMatrix<T>> {
    // The pivoted-QR diagonal ratio estimates cond(W_p); the Gram squares it.
    let ratio = diag[0] / diag[diag.len() - 1];
    let gram_cond = (ratio * ratio).as_f64();
    if gram_cond <= NORMAL_EQUATION_COND_LIMIT {
        let gram = w_p.gram();
        let rhs = w_p.matmul(&w_np.transpose())?;
        match solve_linear(&gram, &rhs) {
            Ok(ct) => return Ok(ct.transpose()),
            Err(Error::Singular { .. }) => {}
            Err(e) => return Err(e),
        }
    }
    Ok(lstsq(&w_p.transpose(), &w_np.transpose())?.transpose())
}
