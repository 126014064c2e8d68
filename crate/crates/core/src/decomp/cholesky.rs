use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::DenseMatrix;

const SYMMETRY_TOL: f64 = 1e-9;

/// Lower-triangular `L` with `L * L^T = a + jitter * I`.
pub fn cholesky<T: Scalar>(a: &DenseMatrix<T>, jitter: T) -> Result<DenseMatrix<T>> {
    let n = a.rows();
    if a.cols() != n {
        return Err(Error::shape("cholesky", format!("{}x{} is not square", n, a.cols())));
    }
    if jitter.is_nan() || jitter < T::zero() {
        return Err(Error::Invalid(format!("jitter must be >= 0, got {jitter}")));
    }
    let scale = a.max_abs().max(T::one());
    if a.asymmetry() > T::of(SYMMETRY_TOL) * scale {
        return Err(Error::Invalid(format!(
            "cholesky input is not symmetric (max asymmetry {})",
            a.asymmetry()
        )));
    }
    let mut l = DenseMatrix::<T>::zeros(n, n);
    for j in 0..n {
        let lj = l.row(j)[..j].to_vec();
        let d = a.get(j, j) + jitter - lj.iter().fold(T::zero(), |acc, &x| acc + x * x);
        if d.is_nan() || d <= T::zero() || !d.is_finite() {
            return Err(Error::NotPositiveDefinite {
                pivot: j,
                value: d.as_f64(),
            });
        }
        let djj = d.sqrt();
        l.set(j, j, djj);
        for i in j + 1..n {
            let li = &l.row(i)[..j];
            let s = li.iter().zip(&lj).fold(T::zero(), |acc, (&x, &y)| acc + x * y);
            l.set(i, j, (a.get(i, j) - s) / djj);
        }
    }
    Ok(l)
}

fn check_triangular<T: Scalar>(t: &DenseMatrix<T>, b: &DenseMatrix<T>, op: &'static str) -> Result<()> {
    if t.rows() != t.cols() || b.rows() != t.rows() {
        return Err(Error::shape(
            op,
            format!("triangle {}x{}, rhs {}x{}", t.rows(), t.cols(), b.rows(), b.cols()),
        ));
    }
    if t.diag().iter().any(|&d| d == T::zero()) {
        return Err(Error::Singular {
            op,
            condition: f64::INFINITY,
            hint: "",
        });
    }
    Ok(())
}

/// Solves `L X = B` for lower-triangular `L`.
pub fn solve_lower<T: Scalar>(l: &DenseMatrix<T>, b: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
    check_triangular(l, b, "solve_lower")?;
    let mut x = b.clone();
    let nc = b.cols();
    for i in 0..l.rows() {
        for k in 0..i {
            let f = l.get(i, k);
            if f == T::zero() {
                continue;
            }
            let (done, rest) = x.as_mut_slice().split_at_mut(i * nc);
            let src = &done[k * nc..(k + 1) * nc];
            for (dst, &s) in rest[..nc].iter_mut().zip(src) {
                *dst -= f * s;
            }
        }
        let d = l.get(i, i);
        for v in x.row_mut(i) {
            *v /= d;
        }
    }
    Ok(x)
}

/// Solves `U X = B` for upper-triangular `U`.
pub fn solve_upper<T: Scalar>(u: &DenseMatrix<T>, b: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
    check_triangular(u, b, "solve_upper")?;
    let n = u.rows();
    let nc = b.cols();
    let mut x = b.clone();
    for i in (0..n).rev() {
        for k in i + 1..n {
            let f = u.get(i, k);
            if f == T::zero() {
                continue;
            }
            let (head, tail) = x.as_mut_slice().split_at_mut(k * nc);
            let src = &tail[..nc];
            for (dst, &s) in head[i * nc..(i + 1) * nc].iter_mut().zip(src) {
                *dst -= f * s;
            }
        }
        let d = u.get(i, i);
        for v in x.row_mut(i) {
            *v /= d;
        }
    }
    Ok(x)
}

/// Solves `L^T X = B` given lower-triangular `L`.
pub fn solve_lower_transposed<T: Scalar>(l: &DenseMatrix<T>, b: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
    solve_upper(&l.transpose(), b)
}
