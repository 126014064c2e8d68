use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::DenseMatrix;

const MAX_SWEEPS: usize = 80;

/// Thin SVD `a = u * diag(s) * vt` with `k = min(m, n)`.
#[derive(Clone, Debug)]
pub struct ThinSvd<T> {
    pub u: DenseMatrix<T>,
    /// Non-increasing, non-negative.
    pub s: Vec<T>,
    pub vt: DenseMatrix<T>,
}

impl<T: Scalar> ThinSvd<T> {
    pub fn reconstruct(&self) -> DenseMatrix<T> {
        let mut us = self.u.clone();
        for i in 0..us.rows() {
            for (v, &s) in us.row_mut(i).iter_mut().zip(&self.s) {
                *v *= s;
            }
        }
        us.matmul(&self.vt).expect("conformable by construction")
    }
}

/// One-sided (Hestenes) Jacobi SVD.
pub fn thin_svd<T: Scalar>(a: &DenseMatrix<T>) -> Result<ThinSvd<T>> {
    if !a.is_finite() {
        return Err(Error::Invalid("thin_svd input contains non-finite values".into()));
    }
    if a.rows() >= a.cols() {
        jacobi_tall(a)
    } else {
        let t = jacobi_tall(&a.transpose())?;
        Ok(ThinSvd {
            u: t.vt.transpose(),
            s: t.s,
            vt: t.u.transpose(),
        })
    }
}

fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

fn rotate<T: Scalar>(buf: &mut [T], len: usize, p: usize, q: usize, c: T, s: T) {
    let (lo, hi) = buf.split_at_mut(q * len);
    let xp = &mut lo[p * len..(p + 1) * len];
    let xq = &mut hi[..len];
    for (a, b) in xp.iter_mut().zip(xq.iter_mut()) {
        let (va, vb) = (*a, *b);
        *a = c * va - s * vb;
        *b = s * va + c * vb;
    }
}

/// `m >= n`: orthogonalize the columns of `a` in place.
fn jacobi_tall<T: Scalar>(a: &DenseMatrix<T>) -> Result<ThinSvd<T>> {
    let (m, n) = a.shape();
    // Column-major copies: g holds the columns of a, v the columns of V.
    let mut g = a.transpose().into_vec();
    let mut v = DenseMatrix::<T>::identity(n).into_vec();
    let tol = T::epsilon() * T::of((m.max(1)) as f64).sqrt();

    let mut converged = n < 2;
    let mut sweeps = 0;
    while !converged {
        if sweeps == MAX_SWEEPS {
            return Err(Error::NoConvergence {
                op: "thin_svd",
                iterations: sweeps,
            });
        }
        sweeps += 1;
        converged = true;
        for p in 0..n - 1 {
            for q in p + 1..n {
                let gp = &g[p * m..(p + 1) * m];
                let gq = &g[q * m..(q + 1) * m];
                let alpha = dot(gp, gp);
                let beta = dot(gq, gq);
                let gamma = dot(gp, gq);
                if alpha == T::zero() || beta == T::zero() || gamma == T::zero() {
                    continue;
                }
                if gamma.abs() <= tol * (alpha.sqrt() * beta.sqrt()) {
                    continue;
                }
                converged = false;
                let zeta = (beta - alpha) / (T::of(2.0) * gamma);
                let t = zeta.signum() / (zeta.abs() + (T::one() + zeta * zeta).sqrt());
                let c = (T::one() + t * t).sqrt().recip();
                let s = c * t;
                rotate(&mut g, m, p, q, c, s);
                rotate(&mut v, n, p, q, c, s);
            }
        }
    }

    let norms: Vec<T> = (0..n)
        .map(|j| dot(&g[j * m..(j + 1) * m], &g[j * m..(j + 1) * m]).sqrt())
        .collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| norms[j].partial_cmp(&norms[i]).expect("finite norms").then(i.cmp(&j)));

    let s: Vec<T> = order.iter().map(|&j| norms[j]).collect();
    let s_max = s.first().copied().unwrap_or(T::zero());
    let null_cut = s_max * T::epsilon() * T::of((m.max(n) * 4) as f64);

    // Column-major U, filled in sorted order.
    let mut u_cols: Vec<Vec<T>> = Vec::with_capacity(n);
    let mut null_slots = Vec::new();
    for (slot, &j) in order.iter().enumerate() {
        let sj = norms[j];
        if sj > null_cut && sj > T::zero() {
            u_cols.push(g[j * m..(j + 1) * m].iter().map(|&x| x / sj).collect());
        } else {
            u_cols.push(vec![T::zero(); m]);
            null_slots.push(slot);
        }
    }
    complete_basis(&mut u_cols, &null_slots, m);

    let u = DenseMatrix::from_fn(m, n, |i, c| u_cols[c][i]);
    let vt = DenseMatrix::from_fn(n, n, |r, c| v[order[r] * n + c]);
    Ok(ThinSvd { u, s, vt })
}

/// Fills the listed columns with unit vectors orthogonal to every other column.
fn complete_basis<T: Scalar>(cols: &mut [Vec<T>], slots: &[usize], m: usize) {
    for &slot in slots {
        let mut best: Option<(T, Vec<T>)> = None;
        for e in 0..m {
            let mut cand = vec![T::zero(); m];
            cand[e] = T::one();
            // Two Gram-Schmidt passes for stability.
            for _ in 0..2 {
                for (c, col) in cols.iter().enumerate() {
                    if c == slot || col.iter().all(|&x| x == T::zero()) {
                        continue;
                    }
                    let d = dot(&cand, col);
                    for (x, &y) in cand.iter_mut().zip(col) {
                        *x -= d * y;
                    }
                }
            }
            let nrm = dot(&cand, &cand).sqrt();
            if best.as_ref().is_none_or(|(b, _)| nrm > *b) {
                best = Some((nrm, cand));
            }
        }
        if let Some((nrm, cand)) = best {
            if nrm > T::zero() {
                cols[slot] = cand.into_iter().map(|x| x / nrm).collect();
            }
        }
    }
}
