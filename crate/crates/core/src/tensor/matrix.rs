use std::fmt;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::threads::num_threads;

/// Row-major dense matrix.
#[derive(Clone, PartialEq)]
pub struct DenseMatrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: fmt::Debug> fmt::Debug for DenseMatrix<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "DenseMatrix<{}>({}x{})",
            std::any::type_name::<T>(),
            self.rows,
            self.cols
        )?;
        if self.rows * self.cols <= 64 {
            let mut list = f.debug_list();
            for i in 0..self.rows {
                list.entry(&&self.data[i * self.cols..(i + 1) * self.cols]);
            }
            list.finish()?;
        }
        Ok(())
    }
}

impl<T: Scalar> DenseMatrix<T> {
    pub fn new(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::shape(
                "DenseMatrix::new",
                format!("{} values for a {rows}x{cols} matrix", data.len()),
            ));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = T::one();
        }
        m
    }

    pub fn from_diag(diag: &[T]) -> Self {
        let n = diag.len();
        let mut m = Self::zeros(n, n);
        for (i, &d) in diag.iter().enumerate() {
            m.data[i * n + i] = d;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Builds a matrix from `f64` row literals; panics on ragged rows.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Self {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            let r = r.as_ref();
            assert_eq!(r.len(), cols, "ragged row literal");
            data.extend(r.iter().map(|&v| T::of(v)));
        }
        Self {
            rows: rows.len(),
            cols,
            data,
        }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    /// Bytes held by the element buffer (capacity, not length).
    pub fn allocated_bytes(&self) -> usize {
        self.data.capacity() * std::mem::size_of::<T>()
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: T) {
        self.data[i * self.cols + j] = v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [T] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn col(&self, j: usize) -> Vec<T> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.data[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        out
    }

    pub fn matmul(&self, rhs: &Self) -> Result<Self> {
        matmul(self, rhs)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn frobenius_norm(&self) -> T {
        frobenius_norm(self)
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |acc, v| acc.max(v.abs()))
    }

    pub fn trace(&self) -> T {
        (0..self.rows.min(self.cols)).fold(T::zero(), |acc, i| acc + self.get(i, i))
    }

    pub fn diag(&self) -> Vec<T> {
        (0..self.rows.min(self.cols)).map(|i| self.get(i, i)).collect()
    }

    fn check_same_shape(&self, rhs: &Self, op: &'static str) -> Result<()> {
        if self.shape() != rhs.shape() {
            return Err(Error::shape(
                op,
                format!("{}x{} vs {}x{}", self.rows, self.cols, rhs.rows, rhs.cols),
            ));
        }
        Ok(())
    }

    pub fn add(&self, rhs: &Self) -> Result<Self> {
        self.check_same_shape(rhs, "add")?;
        Ok(self.zip_map(rhs, |a, b| a + b))
    }

    pub fn sub(&self, rhs: &Self) -> Result<Self> {
        self.check_same_shape(rhs, "sub")?;
        Ok(self.zip_map(rhs, |a, b| a - b))
    }

    /// `self += alpha * rhs`
    pub fn axpy(&mut self, alpha: T, rhs: &Self) -> Result<()> {
        self.check_same_shape(rhs, "axpy")?;
        for (a, &b) in self.data.iter_mut().zip(&rhs.data) {
            *a += alpha * b;
        }
        Ok(())
    }

    pub fn scale(&self, alpha: T) -> Self {
        self.map(|v| v * alpha)
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    fn zip_map(&self, rhs: &Self, f: impl Fn(T, T) -> T) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(&a, &b)| f(a, b)).collect(),
        }
    }

    /// Adds `alpha` to every diagonal entry of a square matrix.
    pub fn add_diag(&self, alpha: T) -> Self {
        let mut out = self.clone();
        for i in 0..self.rows.min(self.cols) {
            out.data[i * self.cols + i] += alpha;
        }
        out
    }

    pub fn select_rows(&self, idx: &[usize]) -> Self {
        let mut data = Vec::with_capacity(idx.len() * self.cols);
        for &i in idx {
            data.extend_from_slice(self.row(i));
        }
        Self {
            rows: idx.len(),
            cols: self.cols,
            data,
        }
    }

    pub fn select_cols(&self, idx: &[usize]) -> Self {
        Self::from_fn(self.rows, idx.len(), |i, j| self.get(i, idx[j]))
    }

    /// Columns `start..end`.
    pub fn col_range(&self, start: usize, end: usize) -> Self {
        Self::from_fn(self.rows, end - start, |i, j| self.get(i, start + j))
    }

    /// Rows `start..end`.
    pub fn row_range(&self, start: usize, end: usize) -> Self {
        Self {
            rows: end - start,
            cols: self.cols,
            data: self.data[start * self.cols..end * self.cols].to_vec(),
        }
    }

    /// Horizontal concatenation `[self | rhs]`.
    pub fn hstack(&self, rhs: &Self) -> Result<Self> {
        if self.rows != rhs.rows {
            return Err(Error::shape(
                "hstack",
                format!("{} rows vs {} rows", self.rows, rhs.rows),
            ));
        }
        let cols = self.cols + rhs.cols;
        let mut data = Vec::with_capacity(self.rows * cols);
        for i in 0..self.rows {
            data.extend_from_slice(self.row(i));
            data.extend_from_slice(rhs.row(i));
        }
        Ok(Self {
            rows: self.rows,
            cols,
            data,
        })
    }

    /// `self * self^T`, exactly symmetric.
    pub fn gram(&self) -> Self {
        let mut g = matmul(self, &self.transpose()).expect("conformable by construction");
        let n = g.rows;
        for i in 0..n {
            for j in 0..i {
                g.data[i * n + j] = g.data[j * n + i];
            }
        }
        g
    }

    /// Maximum entrywise asymmetry `|a_ij - a_ji|`.
    pub fn asymmetry(&self) -> T {
        let mut worst = T::zero();
        for i in 0..self.rows {
            for j in 0..i.min(self.cols) {
                worst = worst.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        worst
    }

    pub fn cast<U: Scalar>(&self) -> DenseMatrix<U> {
        DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| U::of(v.as_f64())).collect(),
        }
    }
}

/// Matrix product; splits output rows across [`num_threads`] threads.
pub fn matmul<T: Scalar>(a: &DenseMatrix<T>, b: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
    if a.cols != b.rows {
        return Err(Error::shape(
            "matmul",
            format!("{}x{} times {}x{}", a.rows, a.cols, b.rows, b.cols),
        ));
    }
    let (m, k, n) = (a.rows, a.cols, b.cols);
    let mut out = DenseMatrix::zeros(m, n);
    if m == 0 || n == 0 {
        return Ok(out);
    }
    if k == 0 {
        return Ok(out);
    }
    let threads = num_threads().min(m);
    if threads <= 1 || m * n * k < 1 << 18 {
        T::gemm(m, k, n, &a.data, &b.data, &mut out.data);
        return Ok(out);
    }
    let rows_per = m.div_ceil(threads);
    std::thread::scope(|s| {
        for (chunk_idx, c_chunk) in out.data.chunks_mut(rows_per * n).enumerate() {
            let row0 = chunk_idx * rows_per;
            let rows = c_chunk.len() / n;
            let a_chunk = &a.data[row0 * k..(row0 + rows) * k];
            let b_data = &b.data;
            s.spawn(move || T::gemm(rows, k, n, a_chunk, b_data, c_chunk));
        }
    });
    Ok(out)
}

pub fn frobenius_norm<T: Scalar>(a: &DenseMatrix<T>) -> T {
    a.data.iter().fold(T::zero(), |acc, &v| acc + v * v).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    type M = DenseMatrix<f64>;

    #[test]
    fn identity_times_a() {
        let a = M::from_rows(&[[1.0, 2.0], [3.0, 4.0]]);
        assert_eq!(matmul(&M::identity(2), &a).unwrap(), a);
    }

    #[test]
    fn hand_product() {
        let a = M::from_rows(&[[1.0, 2.0], [3.0, 4.0]]);
        let b = M::from_rows(&[[0.0], [1.0]]);
        assert_eq!(matmul(&a, &b).unwrap(), M::from_rows(&[[2.0], [4.0]]));
    }

    #[test]
    fn shape_mismatch() {
        let a = M::zeros(2, 3);
        assert!(matches!(matmul(&a, &a), Err(Error::Shape { .. })));
        assert!(M::new(2, 2, vec![0.0; 3]).is_err());
    }

    #[test]
    fn zero_extent_products() {
        let a = M::zeros(0, 4);
        let b = M::zeros(4, 3);
        assert_eq!(matmul(&a, &b).unwrap().shape(), (0, 3));
        let c = M::zeros(3, 0);
        let d = M::zeros(0, 2);
        assert_eq!(matmul(&c, &d).unwrap(), M::zeros(3, 2));
    }

    #[test]
    fn norms() {
        assert_eq!(frobenius_norm(&M::from_rows(&[[3.0, 4.0]])), 5.0);
        assert_eq!(frobenius_norm(&M::zeros(3, 3)), 0.0);
    }

    #[test]
    fn gram_is_exactly_symmetric() {
        let a = M::from_fn(5, 9, |i, j| ((i * 7 + j * 3) % 11) as f64 / 3.0 - 1.1);
        let g = a.gram();
        assert_eq!(g.asymmetry(), 0.0);
    }

    #[test]
    fn threaded_matmul_matches_single() {
        let a = M::from_fn(130, 70, |i, j| ((i * 31 + j * 17) % 23) as f64 - 11.0);
        let b = M::from_fn(70, 90, |i, j| ((i * 13 + j * 5) % 19) as f64 / 7.0);
        crate::threads::set_num_threads(1);
        let single = matmul(&a, &b).unwrap();
        crate::threads::set_num_threads(4);
        let multi = matmul(&a, &b).unwrap();
        crate::threads::set_num_threads(1);
        assert_eq!(single, multi);
    }
}
