//! Initial low-rank factors: truncated SVD, activation-whitened truncated
//! SVD, and the density-to-rank mapping for both storage layouts.

use serde::{Deserialize, Serialize};

use crate::decomp::{cholesky, solve_lower_transposed, thin_svd};
use crate::error::{Error, Result};
use crate::pifa::{lowrank_param_count, pifa_param_count, DefaultKernel, MatmulKernel};
use crate::scalar::Scalar;
use crate::tensor::DenseMatrix;

/// `W ~= U * V^T` with `U: m x r`, `V^T: r x n`.
#[derive(Clone, Debug, PartialEq)]
pub struct LowRankFactors<T> {
    u: DenseMatrix<T>,
    vt: DenseMatrix<T>,
}

impl<T: Scalar> LowRankFactors<T> {
    pub fn new(u: DenseMatrix<T>, vt: DenseMatrix<T>) -> Result<Self> {
        if u.cols() != vt.rows() {
            return Err(Error::shape(
                "LowRankFactors::new",
                format!("U is {}x{}, V^T is {}x{}", u.rows(), u.cols(), vt.rows(), vt.cols()),
            ));
        }
        if u.cols() > u.rows().min(vt.cols()) {
            return Err(Error::shape(
                "LowRankFactors::new",
                format!("inner dimension {} exceeds min({}, {})", u.cols(), u.rows(), vt.cols()),
            ));
        }
        Ok(Self { u, vt })
    }

    pub fn u(&self) -> &DenseMatrix<T> {
        &self.u
    }

    pub fn vt(&self) -> &DenseMatrix<T> {
        &self.vt
    }

    pub fn into_parts(self) -> (DenseMatrix<T>, DenseMatrix<T>) {
        (self.u, self.vt)
    }

    pub fn rank(&self) -> usize {
        self.u.cols()
    }

    pub fn m(&self) -> usize {
        self.u.rows()
    }

    pub fn n(&self) -> usize {
        self.vt.cols()
    }

    pub fn param_count(&self) -> u64 {
        lowrank_param_count(self.m(), self.n(), self.rank())
    }

    pub fn to_dense(&self) -> DenseMatrix<T> {
        self.u.matmul(&self.vt).expect("conformable by construction")
    }

    /// `U (V^T X)`.
    pub fn forward(&self, x: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
        self.forward_with(x, &DefaultKernel)
    }

    pub fn forward_with<K: MatmulKernel<T>>(&self, x: &DenseMatrix<T>, kernel: &K) -> Result<DenseMatrix<T>> {
        let inner = kernel.matmul(&self.vt, x)?;
        kernel.matmul(&self.u, &inner)
    }
}

/// Which storage layout a density budget is counted against.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CountingMode {
    /// `r(m + n)` values for a factor pair.
    SvdLowrank,
    /// `r(m + n) - r^2 + r` for a PIFA layer.
    Pifa,
}

/// Remaining-parameter fraction relative to the dense matrix.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensitySpec {
    pub density: f64,
    pub counting_mode: CountingMode,
}

impl DensitySpec {
    pub fn new(density: f64, counting_mode: CountingMode) -> Result<Self> {
        if !(density > 0.0 && density <= 1.0) {
            return Err(Error::Invalid(format!("density must lie in (0, 1], got {density}")));
        }
        Ok(Self { density, counting_mode })
    }
}

pub fn param_count(mode: CountingMode, m: usize, n: usize, r: usize) -> u64 {
    match mode {
        CountingMode::SvdLowrank => lowrank_param_count(m, n, r),
        CountingMode::Pifa => pifa_param_count(m, n, r),
    }
}

/// Largest rank whose parameter count fits in `density * m * n`.
///
/// A PIFA density of exactly 1 maps to full rank `min(m, n)`: the dense
/// budget is treated as "no compression" rather than charging the index list
/// against it.
pub fn density_to_rank(m: usize, n: usize, spec: DensitySpec) -> Result<usize> {
    let DensitySpec {
        density,
        counting_mode: mode,
    } = DensitySpec::new(spec.density, spec.counting_mode)?;
    let full = m.min(n);
    if mode == CountingMode::Pifa && density >= 1.0 {
        return Ok(full);
    }
    let budget = density * m as f64 * n as f64;
    let (mf, nf) = (m as f64, n as f64);
    let guess = match mode {
        CountingMode::SvdLowrank => budget / (mf + nf),
        CountingMode::Pifa => {
            // Smaller root of r^2 - (m + n + 1) r + budget = 0.
            let b = mf + nf + 1.0;
            let disc = (b * b - 4.0 * budget).max(0.0);
            (b - disc.sqrt()) / 2.0
        }
    };
    let mut r = (guess.floor().max(0.0) as usize).min(full);
    let fits = |r: usize| param_count(mode, m, n, r) as f64 <= budget;
    while r < full && fits(r + 1) {
        r += 1;
    }
    while r > 0 && !fits(r) {
        r -= 1;
    }
    if r == 0 {
        return Err(Error::Infeasible {
            density,
            detail: format!("no rank >= 1 fits a {m}x{n} layer"),
        });
    }
    Ok(r)
}

fn check_rank(op: &'static str, m: usize, n: usize, r: usize) -> Result<()> {
    if r == 0 || r > m.min(n) {
        return Err(Error::shape(op, format!("rank {r} outside 1..=min({m}, {n})")));
    }
    Ok(())
}

/// Keeps the top-`r` singular triplets: `U = B_r E_r`, `V^T = A_r^T`.
pub fn truncated_svd_prune<T: Scalar>(w: &DenseMatrix<T>, r: usize) -> Result<LowRankFactors<T>> {
    check_rank("truncated_svd_prune", w.rows(), w.cols(), r)?;
    let svd = thin_svd(w)?;
    let mut u = svd.u.col_range(0, r);
    for i in 0..u.rows() {
        for (v, &s) in u.row_mut(i).iter_mut().zip(&svd.s) {
            *v *= s;
        }
    }
    LowRankFactors::new(u, svd.vt.row_range(0, r))
}

/// `1e-8 * trace(xxt) / n`.
pub fn default_jitter<T: Scalar>(xxt: &DenseMatrix<T>) -> T {
    let n = xxt.rows().max(1);
    T::of(1e-8) * xxt.trace() / T::of(n as f64)
}

/// Rank-`r` minimizer of `||(W - U V^T) S||_F` where `S S^T = xxt + jitter I`.
///
/// With `S = cholesky(xxt)` and `W S = B E A^T`: `U = B_r E_r`,
/// `V^T = A_r^T S^{-1}` (triangular solve). `jitter = None` uses
/// [`default_jitter`].
pub fn whitened_svd_prune<T: Scalar>(
    w: &DenseMatrix<T>,
    xxt: &DenseMatrix<T>,
    r: usize,
    jitter: Option<T>,
) -> Result<LowRankFactors<T>> {
    let (m, n) = w.shape();
    check_rank("whitened_svd_prune", m, n, r)?;
    if xxt.shape() != (n, n) {
        return Err(Error::shape(
            "whitened_svd_prune",
            format!("Gram matrix is {:?}, expected ({n}, {n})", xxt.shape()),
        ));
    }
    let jitter = jitter.unwrap_or_else(|| default_jitter(xxt));
    let s = cholesky(xxt, jitter)?;
    let svd = thin_svd(&w.matmul(&s)?)?;
    let mut u = svd.u.col_range(0, r);
    for i in 0..m {
        for (v, &sv) in u.row_mut(i).iter_mut().zip(&svd.s) {
            *v *= sv;
        }
    }
    let a_r = svd.vt.row_range(0, r).transpose();
    let vt = solve_lower_transposed(&s, &a_r)?.transpose();
    LowRankFactors::new(u, vt)
}
