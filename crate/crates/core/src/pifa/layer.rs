use super::count::pifa_param_count;
use super::kernel::{DefaultKernel, MatmulKernel};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::DenseMatrix;

/// Compact lossless representation of a rank-`r` `m x n` matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct PifaLayer<T> {
    m: usize,
    n: usize,
    pivots: Vec<usize>,
    nonpivots: Vec<usize>,
    w_p: DenseMatrix<T>,
    c: DenseMatrix<T>,
}

impl<T: Scalar> PifaLayer<T> {
    /// Assembles a layer from its stored parts, validating every invariant.
    pub fn from_parts(m: usize, n: usize, pivots: Vec<usize>, w_p: DenseMatrix<T>, c: DenseMatrix<T>) -> Result<Self> {
        let r = pivots.len();
        if r == 0 || r > m || r > n {
            return Err(Error::shape(
                "PifaLayer::from_parts",
                format!("rank {r} outside 1..=min({m}, {n})"),
            ));
        }
        if w_p.shape() != (r, n) {
            return Err(Error::shape(
                "PifaLayer::from_parts",
                format!("pivot-row matrix is {:?}, expected ({r}, {n})", w_p.shape()),
            ));
        }
        if c.shape() != (m - r, r) {
            return Err(Error::shape(
                "PifaLayer::from_parts",
                format!("coefficient matrix is {:?}, expected ({}, {r})", c.shape(), m - r),
            ));
        }
        let mut seen = vec![false; m];
        for &p in &pivots {
            if p >= m || seen[p] {
                return Err(Error::Invalid(format!("pivot index {p} is out of range or repeated")));
            }
            seen[p] = true;
        }
        let nonpivots = (0..m).filter(|&i| !seen[i]).collect();
        Ok(Self {
            m,
            n,
            pivots,
            nonpivots,
            w_p,
            c,
        })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn rank(&self) -> usize {
        self.pivots.len()
    }

    /// Pivot row indices in selection order.
    pub fn pivots(&self) -> &[usize] {
        &self.pivots
    }

    /// Sorted complement of the pivot set.
    pub fn nonpivots(&self) -> &[usize] {
        &self.nonpivots
    }

    pub fn w_p(&self) -> &DenseMatrix<T> {
        &self.w_p
    }

    pub fn c(&self) -> &DenseMatrix<T> {
        &self.c
    }

    pub fn param_count(&self) -> u64 {
        pifa_param_count(self.m, self.n, self.rank())
    }

    /// Floating-point values actually stored (`W_p` and `C`).
    pub fn stored_values(&self) -> usize {
        self.w_p.len() + self.c.len()
    }

    pub fn forward(&self, x: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
        self.forward_with(x, &DefaultKernel)
    }

    /// Two products and a scatter: `Y_p = W_p X`, `Y_np = C Y_p`,
    /// `Y[I] = Y_p`, `Y[I^c] = Y_np`.
    pub fn forward_with<K: MatmulKernel<T>>(&self, x: &DenseMatrix<T>, kernel: &K) -> Result<DenseMatrix<T>> {
        if x.rows() != self.n {
            return Err(Error::shape(
                "pifa_forward",
                format!("layer expects {} input rows, got {}", self.n, x.rows()),
            ));
        }
        let y_p = kernel.matmul(&self.w_p, x)?;
        let y_np = kernel.matmul(&self.c, &y_p)?;
        Ok(self.scatter(&y_p, &y_np))
    }

    fn scatter(&self, top: &DenseMatrix<T>, rest: &DenseMatrix<T>) -> DenseMatrix<T> {
        let b = top.cols();
        let mut y = DenseMatrix::zeros(self.m, b);
        for (t, &row) in self.pivots.iter().enumerate() {
            y.row_mut(row).copy_from_slice(top.row(t));
        }
        for (t, &row) in self.nonpivots.iter().enumerate() {
            y.row_mut(row).copy_from_slice(rest.row(t));
        }
        y
    }

    /// Dense `m x n` matrix: pivot rows verbatim, the rest as `C * W_p`.
    pub fn to_dense(&self) -> DenseMatrix<T> {
        let rest = self.c.matmul(&self.w_p).expect("conformable by construction");
        self.scatter(&self.w_p, &rest)
    }
}

pub fn pifa_forward<T: Scalar>(p: &PifaLayer<T>, x: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
    p.forward(x)
}

pub fn reconstruct_dense<T: Scalar>(p: &PifaLayer<T>) -> DenseMatrix<T> {
    p.to_dense()
}
