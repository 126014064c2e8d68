//! Exact-arithmetic oracle for PIFA on small integer matrices: pivots by the
//! largest residual row norm, coefficients from the rational normal equations.

use num_rational::Ratio;
use pifa_core::pifa::{pifa_build, reconstruct_dense};
use pifa_core::{Matrix, SeededRng};

type Q = Ratio<i128>;

fn dot(a: &[Q], b: &[Q]) -> Q {
    a.iter().zip(b).map(|(x, y)| *x * *y).sum()
}

fn pivot_rows(rows: &[Vec<Q>], r: usize) -> (Vec<usize>, Vec<Q>) {
    let mut residual = rows.to_vec();
    let mut pivots = Vec::new();
    let mut norms = Vec::new();
    for _ in 0..r {
        let (best, norm) = residual
            .iter()
            .enumerate()
            .filter(|(i, _)| !pivots.contains(i))
            .map(|(i, row)| (i, dot(row, row)))
            .max_by(|a, b| a.1.cmp(&b.1))
            .unwrap();
        let p = residual[best].clone();
        for row in residual.iter_mut() {
            let t = dot(row, &p) / norm;
            for (v, q) in row.iter_mut().zip(&p) {
                *v -= t * *q;
            }
        }
        pivots.push(best);
        norms.push(norm);
    }
    (pivots, norms)
}

/// Gauss-Jordan on a square nonsingular system, many right-hand sides.
fn solve(mut a: Vec<Vec<Q>>, mut b: Vec<Vec<Q>>) -> Vec<Vec<Q>> {
    let n = a.len();
    for col in 0..n {
        let piv = (col..n).find(|&i| a[i][col] != Q::from_integer(0)).unwrap();
        a.swap(col, piv);
        b.swap(col, piv);
        let d = a[col][col];
        for row in 0..n {
            if row != col {
                let f = a[row][col] / d;
                let pivot_row = a[col].clone();
                for (v, p) in a[row].iter_mut().zip(&pivot_row) {
                    *v -= f * *p;
                }
                for k in 0..b[0].len() {
                    let v = b[col][k];
                    b[row][k] -= f * v;
                }
            }
        }
    }
    (0..n).map(|i| b[i].iter().map(|v| *v / a[i][i]).collect()).collect()
}

struct RationalPifa {
    pivots: Vec<usize>,
    /// Row `k` holds the coefficients of the `k`-th non-pivot row.
    c: Vec<Vec<Q>>,
}

fn oracle(w: &[Vec<i64>], r: usize) -> (RationalPifa, Vec<Q>) {
    let rows: Vec<Vec<Q>> = w
        .iter()
        .map(|row| row.iter().map(|&v| Q::from_integer(v as i128)).collect())
        .collect();
    let (pivots, norms) = pivot_rows(&rows, r);
    let w_p: Vec<&Vec<Q>> = pivots.iter().map(|&i| &rows[i]).collect();
    let gram: Vec<Vec<Q>> = w_p.iter().map(|a| w_p.iter().map(|b| dot(a, b)).collect()).collect();
    let nonpivots: Vec<usize> = (0..rows.len()).filter(|i| !pivots.contains(i)).collect();
    let c = if nonpivots.is_empty() {
        Vec::new()
    } else {
        let rhs: Vec<Vec<Q>> = w_p
            .iter()
            .map(|p| nonpivots.iter().map(|&j| dot(p, &rows[j])).collect())
            .collect();
        let ct = solve(gram, rhs);
        (0..nonpivots.len())
            .map(|j| (0..r).map(|k| ct[k][j]).collect())
            .collect()
    };
    (RationalPifa { pivots, c }, norms)
}

fn to_f64(q: Q) -> f64 {
    *q.numer() as f64 / *q.denom() as f64
}

fn dense(w: &[Vec<i64>]) -> Matrix {
    Matrix::from_fn(w.len(), w[0].len(), |i, j| w[i][j] as f64)
}

#[test]
fn rank_one_example_is_exact() {
    let w = vec![vec![1, 2], vec![2, 4]];
    let (exact, _) = oracle(&w, 1);
    assert_eq!(exact.pivots, vec![1]);
    assert_eq!(exact.c, vec![vec![Q::new(1, 2)]]);

    let layer = pifa_build(&dense(&w), 1).unwrap();
    assert_eq!(layer.pivots(), &[1]);
    assert_eq!(layer.w_p().as_slice(), &[2.0, 4.0]);
    assert_eq!(layer.c().as_slice(), &[0.5]);
    assert_eq!(reconstruct_dense(&layer).as_slice(), &[1.0, 2.0, 2.0, 4.0]);

    let y = layer.forward(&Matrix::from_rows(&[[1.0], [0.0]])).unwrap();
    assert_eq!(y.as_slice(), &[1.0, 2.0]);
}

#[test]
fn integer_low_rank_matrices_match_rational_oracle() {
    let mut rng = SeededRng::new(11);
    let mut compared = 0;
    let mut ties = 0;
    while compared < 30 {
        let m = rng.range(2, 7);
        let n = rng.range(2, 7);
        let r = rng.range(1, m.min(n));
        let a: Vec<Vec<i64>> = (0..m)
            .map(|_| (0..r).map(|_| rng.range(0, 8) as i64 - 4).collect())
            .collect();
        let b: Vec<Vec<i64>> = (0..r)
            .map(|_| (0..n).map(|_| rng.range(0, 8) as i64 - 4).collect())
            .collect();
        let w: Vec<Vec<i64>> = (0..m)
            .map(|i| (0..n).map(|j| (0..r).map(|k| a[i][k] * b[k][j]).sum()).collect())
            .collect();
        let (exact, norms) = match std::panic::catch_unwind(|| oracle(&w, r)) {
            Ok(v) => v,
            Err(_) => continue,
        };
        if norms.iter().any(|q| *q == Q::from_integer(0)) {
            continue;
        }
        let layer = match pifa_build(&dense(&w), r) {
            Ok(l) => l,
            Err(_) => continue,
        };
        // Ties in residual norm can legitimately pick either row.
        if layer.pivots() != exact.pivots.as_slice() {
            ties += 1;
            continue;
        }
        for (j, row) in exact.c.iter().enumerate() {
            for (k, &q) in row.iter().enumerate() {
                let got = layer.c().get(j, k);
                assert!(
                    (got - to_f64(q)).abs() <= 1e-9 * (1.0 + to_f64(q).abs()),
                    "c[{j}][{k}] {got} vs {q}"
                );
            }
        }
        let err = reconstruct_dense(&layer).sub(&dense(&w)).unwrap().max_abs();
        assert!(err <= 1e-9, "reconstruction error {err}");
        compared += 1;
    }
    assert!(ties < compared / 2, "{ties} pivot disagreements");
}
