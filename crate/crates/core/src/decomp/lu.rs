use super::singular_threshold;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::DenseMatrix;

/// Solves `a X = b` by LU with partial pivoting (no explicit inverse).
///
/// Fails with [`Error::Singular`] when a pivot vanishes or the pivot-ratio
/// condition estimate exceeds `1 / (n * eps)`.
pub fn solve_linear<T: Scalar>(a: &DenseMatrix<T>, b: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
    let n = a.rows();
    if a.cols() != n || b.rows() != n {
        return Err(Error::shape(
            "solve_linear",
            format!("a is {}x{}, b is {}x{}", n, a.cols(), b.rows(), b.cols()),
        ));
    }
    let mut lu = a.clone();
    let mut x = b.clone();
    let nc = b.cols();
    for k in 0..n {
        let mut p = k;
        let mut best = lu.get(k, k).abs();
        for i in k + 1..n {
            let v = lu.get(i, k).abs();
            if v > best {
                best = v;
                p = i;
            }
        }
        if best == T::zero() {
            return Err(Error::Singular {
                op: "solve_linear",
                condition: f64::INFINITY,
                hint: "",
            });
        }
        if p != k {
            swap_rows(&mut lu, p, k);
            swap_rows(&mut x, p, k);
        }
        let pivot = lu.get(k, k);
        for i in k + 1..n {
            let f = lu.get(i, k) / pivot;
            lu.set(i, k, f);
            if f == T::zero() {
                continue;
            }
            for j in k + 1..n {
                let v = lu.get(i, j) - f * lu.get(k, j);
                lu.set(i, j, v);
            }
            let (head, tail) = x.as_mut_slice().split_at_mut(i * nc);
            for (dst, &s) in tail[..nc].iter_mut().zip(&head[k * nc..(k + 1) * nc]) {
                *dst -= f * s;
            }
        }
    }
    let diag: Vec<T> = lu.diag().iter().map(|d| d.abs()).collect();
    let hi = diag.iter().fold(T::zero(), |acc, &d| acc.max(d));
    let lo = diag.iter().fold(T::infinity(), |acc, &d| acc.min(d));
    let estimate = if n == 0 { T::one() } else { hi / lo };
    if estimate > singular_threshold::<T>(n) {
        return Err(Error::Singular {
            op: "solve_linear",
            condition: estimate.as_f64(),
            hint: "",
        });
    }
    // Back substitution with the upper factor.
    for i in (0..n).rev() {
        for k in i + 1..n {
            let f = lu.get(i, k);
            if f == T::zero() {
                continue;
            }
            let (head, tail) = x.as_mut_slice().split_at_mut(k * nc);
            for (dst, &s) in head[i * nc..(i + 1) * nc].iter_mut().zip(&tail[..nc]) {
                *dst -= f * s;
            }
        }
        let d = lu.get(i, i);
        for v in x.row_mut(i) {
            *v /= d;
        }
    }
    Ok(x)
}

fn swap_rows<T: Scalar>(m: &mut DenseMatrix<T>, a: usize, b: usize) {
    let c = m.cols();
    let (lo, hi) = (a.min(b), a.max(b));
    let (head, tail) = m.as_mut_slice().split_at_mut(hi * c);
    head[lo * c..(lo + 1) * c].swap_with_slice(&mut tail[..c]);
}
