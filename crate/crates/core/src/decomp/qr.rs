use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::DenseMatrix;

/// Rank tolerance relative to the first pivot's norm.
pub const DEFAULT_RANK_TOL: f64 = 1e-10;

/// Column-pivoted QR: `a[:, pivots] = q * r_factor`.
#[derive(Clone, Debug)]
pub struct PivotedQr<T> {
    /// `m x k` with orthonormal columns, `k = min(m, n)`.
    pub q: DenseMatrix<T>,
    /// `k x n` upper trapezoidal, `|diag|` non-increasing.
    pub r_factor: DenseMatrix<T>,
    /// Column indices of `a` in selection order (length `n`).
    pub pivots: Vec<usize>,
    pub numerical_rank: usize,
}

/// Householder QR over a column-major copy of the input.
///
/// Column `j` of the working matrix lives at `work[j*m..(j+1)*m]`; after step
/// `k` rows `k..m` of column `k` hold the Householder vector and rows `0..k`
/// of later columns hold the computed part of `R`.
struct Householder<T> {
    m: usize,
    n: usize,
    work: Vec<T>,
    perm: Vec<usize>,
    betas: Vec<T>,
    diag: Vec<T>,
}

impl<T: Scalar> Householder<T> {
    fn new(a: &DenseMatrix<T>) -> Self {
        let (m, n) = a.shape();
        let mut work = vec![T::zero(); m * n];
        for i in 0..m {
            for j in 0..n {
                work[j * m + i] = a.get(i, j);
            }
        }
        Self {
            m,
            n,
            work,
            perm: (0..n).collect(),
            betas: Vec::new(),
            diag: Vec::new(),
        }
    }

    fn steps(&self) -> usize {
        self.diag.len()
    }

    fn col(&self, j: usize) -> &[T] {
        &self.work[j * self.m..(j + 1) * self.m]
    }

    fn tail_norm_sq(&self, j: usize, from: usize) -> T {
        self.col(j)[from..].iter().fold(T::zero(), |acc, &v| acc + v * v)
    }

    /// Selects the remaining column with the largest norm; lowest index wins ties.
    fn select_pivot(&mut self) {
        let k = self.steps();
        let mut best = k;
        let mut best_norm = self.tail_norm_sq(k, k);
        for j in k + 1..self.n {
            let nrm = self.tail_norm_sq(j, k);
            if nrm > best_norm {
                best = j;
                best_norm = nrm;
            }
        }
        if best != k {
            let m = self.m;
            for i in 0..m {
                self.work.swap(k * m + i, best * m + i);
            }
            self.perm.swap(k, best);
        }
    }

    /// One Householder step on column `steps()`; returns the new `R` diagonal entry.
    fn reflect(&mut self) -> T {
        let (m, n, k) = (self.m, self.n, self.steps());
        let norm_sq = self.tail_norm_sq(k, k);
        let norm = norm_sq.sqrt();
        if norm == T::zero() {
            self.betas.push(T::zero());
            self.diag.push(T::zero());
            return T::zero();
        }
        let x0 = self.work[k * m + k];
        let alpha = if x0 >= T::zero() { -norm } else { norm };
        let v0 = x0 - alpha;
        let vtv = norm_sq - x0 * x0 + v0 * v0;
        let beta = T::of(2.0) / vtv;
        self.work[k * m + k] = v0;

        let (head, tail) = self.work.split_at_mut((k + 1) * m);
        let v = &head[k * m + k..(k + 1) * m];
        for j in 0..n - k - 1 {
            let col = &mut tail[j * m + k..(j + 1) * m];
            let s = v.iter().zip(col.iter()).fold(T::zero(), |acc, (&a, &b)| acc + a * b);
            let f = beta * s;
            for (c, &vi) in col.iter_mut().zip(v) {
                *c -= f * vi;
            }
        }
        self.betas.push(beta);
        self.diag.push(alpha);
        alpha
    }

    /// Applies `H_0 .. H_{s-1}` (transposed product `Q^T`) to the rows of `b`.
    fn apply_qt(&self, b: &mut DenseMatrix<T>) {
        let m = self.m;
        for k in 0..self.steps() {
            let beta = self.betas[k];
            if beta == T::zero() {
                continue;
            }
            let v = &self.work[k * m + k..(k + 1) * m];
            for c in 0..b.cols() {
                let mut s = T::zero();
                for (t, &vi) in v.iter().enumerate() {
                    s += vi * b.get(k + t, c);
                }
                let f = beta * s;
                for (t, &vi) in v.iter().enumerate() {
                    let cur = b.get(k + t, c);
                    b.set(k + t, c, cur - f * vi);
                }
            }
        }
    }

    fn q(&self) -> DenseMatrix<T> {
        let (m, s) = (self.m, self.steps());
        // Column-major m x s, starting from the leading columns of the identity.
        let mut e = vec![T::zero(); m * s];
        for c in 0..s {
            e[c * m + c] = T::one();
        }
        for k in (0..s).rev() {
            let beta = self.betas[k];
            if beta == T::zero() {
                continue;
            }
            let v = &self.work[k * m + k..(k + 1) * m];
            for c in k..s {
                let col = &mut e[c * m + k..(c + 1) * m];
                let dot = v.iter().zip(col.iter()).fold(T::zero(), |acc, (&a, &b)| acc + a * b);
                let f = beta * dot;
                for (x, &vi) in col.iter_mut().zip(v) {
                    *x -= f * vi;
                }
            }
        }
        DenseMatrix::from_fn(m, s, |i, c| e[c * m + i])
    }

    fn r(&self) -> DenseMatrix<T> {
        let (m, n, s) = (self.m, self.n, self.steps());
        DenseMatrix::from_fn(s, n, |i, j| match i.cmp(&j) {
            std::cmp::Ordering::Equal => self.diag[i],
            std::cmp::Ordering::Less => self.work[j * m + i],
            std::cmp::Ordering::Greater => T::zero(),
        })
    }
}

/// Businger–Golub QR with column pivoting.
///
/// `numerical_rank` counts diagonal entries with `|r_ii| > tol * |r_00|`.
pub fn qr_column_pivoted<T: Scalar>(a: &DenseMatrix<T>, tol: T) -> Result<PivotedQr<T>> {
    if a.is_empty() {
        return Err(Error::shape("qr_column_pivoted", "empty matrix"));
    }
    if tol.is_nan() || tol < T::zero() {
        return Err(Error::Invalid(format!("rank tolerance must be >= 0, got {tol}")));
    }
    let mut h = Householder::new(a);
    let k = a.rows().min(a.cols());
    for _ in 0..k {
        h.select_pivot();
        h.reflect();
    }
    let lead = h.diag[0].abs();
    let numerical_rank = if lead == T::zero() {
        0
    } else {
        h.diag.iter().take_while(|d| d.abs() > tol * lead).count()
    };
    Ok(PivotedQr {
        q: h.q(),
        r_factor: h.r(),
        pivots: h.perm.clone(),
        numerical_rank,
    })
}

/// First `count` pivot columns of `a`, stopping early when the next diagonal
/// falls to `tol * |r_00|` or below.
///
/// Returns the pivots with the absolute `R` diagonal, or `Err(Rank)` carrying
/// the detected rank when fewer than `count` columns clear the tolerance.
pub(crate) fn leading_pivots<T: Scalar>(a: &DenseMatrix<T>, count: usize, tol: T) -> Result<(Vec<usize>, Vec<T>)> {
    let mut h = Householder::new(a);
    let mut lead = T::zero();
    for step in 0..count {
        h.select_pivot();
        let d = h.reflect().abs();
        if step == 0 {
            lead = d;
        }
        if lead == T::zero() || (step > 0 && d <= tol * lead) {
            return Err(Error::Rank {
                requested: count,
                detected: step,
            });
        }
    }
    Ok((h.perm[..count].to_vec(), h.diag.iter().map(|d| d.abs()).collect()))
}

/// Least-squares solution of `a x = b` through unpivoted Householder QR.
///
/// `a` must be `p x q` with `p >= q` and full column rank.
pub fn lstsq<T: Scalar>(a: &DenseMatrix<T>, b: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
    let (p, q) = a.shape();
    if p < q || b.rows() != p {
        return Err(Error::shape(
            "lstsq",
            format!("a is {p}x{q}, b is {}x{}", b.rows(), b.cols()),
        ));
    }
    let mut h = Householder::new(a);
    for _ in 0..q {
        h.reflect();
    }
    let lead = h.diag.iter().fold(T::zero(), |acc, d| acc.max(d.abs()));
    let small = h.diag.iter().fold(T::infinity(), |acc, d| acc.min(d.abs()));
    if q > 0 && (small == T::zero() || lead / small > super::singular_threshold::<T>(p)) {
        return Err(Error::Singular {
            op: "lstsq",
            condition: (lead / small).as_f64(),
            hint: "",
        });
    }
    let mut qtb = b.clone();
    h.apply_qt(&mut qtb);
    let r = h.r();
    super::solve_upper(&r, &qtb.row_range(0, q))
}
