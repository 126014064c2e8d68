use std::cell::Cell;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::{matmul, DenseMatrix};

/// Matrix product used by the layer forward schedules.
pub trait MatmulKernel<T: Scalar> {
    fn matmul(&self, a: &DenseMatrix<T>, b: &DenseMatrix<T>) -> Result<DenseMatrix<T>>;
}

/// Blocked GEMM backend.
#[derive(Clone, Copy, Debug, Default)]
pub struct DefaultKernel;

impl<T: Scalar> MatmulKernel<T> for DefaultKernel {
    fn matmul(&self, a: &DenseMatrix<T>, b: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
        matmul(a, b)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct OpCount {
    pub multiplies: u64,
    pub adds: u64,
}

impl OpCount {
    pub fn flops(&self) -> u64 {
        self.multiplies + self.adds
    }
}

/// Naive triple-loop kernel that tallies every scalar multiply and add it executes.
#[derive(Debug, Default)]
pub struct CountingKernel {
    multiplies: Cell<u64>,
    adds: Cell<u64>,
}

impl CountingKernel {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn count(&self) -> OpCount {
        OpCount {
            multiplies: self.multiplies.get(),
            adds: self.adds.get(),
        }
    }
}

impl<T: Scalar> MatmulKernel<T> for CountingKernel {
    fn matmul(&self, a: &DenseMatrix<T>, b: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
        if a.cols() != b.rows() {
            return Err(Error::shape(
                "CountingKernel::matmul",
                format!("{}x{} times {}x{}", a.rows(), a.cols(), b.rows(), b.cols()),
            ));
        }
        let (mut muls, mut adds) = (0u64, 0u64);
        let out = DenseMatrix::from_fn(a.rows(), b.cols(), |i, j| {
            let mut acc = T::zero();
            for k in 0..a.cols() {
                let prod = a.get(i, k) * b.get(k, j);
                muls += 1;
                acc += prod;
                adds += 1;
            }
            acc
        });
        self.multiplies.set(self.multiplies.get() + muls);
        self.adds.set(self.adds.get() + adds);
        Ok(out)
    }
}
