/// Values stored by a factor pair `U (m x r)`, `V^T (r x n)`: `r(m + n)`.
pub fn lowrank_param_count(m: usize, n: usize, r: usize) -> u64 {
    r as u64 * (m as u64 + n as u64)
}

/// PIFA storage with the `r` pivot indices charged as one parameter each:
/// `r(m + n) - r^2 + r`.
pub fn pifa_param_count(m: usize, n: usize, r: usize) -> u64 {
    let r = r as u64;
    r * (m as u64 + n as u64) - r * r + r
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_4096_half_rank() {
        assert_eq!(lowrank_param_count(4096, 4096, 2048), 16_777_216);
        assert_eq!(pifa_param_count(4096, 4096, 2048), 12_584_960);
    }

    #[test]
    fn rank_one_counts_coincide() {
        for &(m, n) in &[(1, 1), (3, 7), (64, 48)] {
            assert_eq!(pifa_param_count(m, n, 1), (m + n) as u64);
            assert_eq!(lowrank_param_count(m, n, 1), (m + n) as u64);
        }
    }

    #[test]
    fn pifa_values_beat_dense_below_full_rank() {
        // (m - r)(n - r) > 0  =>  mn > r(m + n) - r^2, index list excluded.
        for m in 1..40usize {
            for n in 1..40usize {
                for r in 1..m.min(n) {
                    assert!(pifa_param_count(m, n, r) - (r as u64) < (m * n) as u64, "{m} {n} {r}");
                    let (p, l) = (pifa_param_count(m, n, r), lowrank_param_count(m, n, r));
                    assert!(p <= l);
                    assert_eq!(p == l, r == 1);
                }
            }
        }
    }
}
