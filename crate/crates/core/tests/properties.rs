use nalgebra::DMatrix;
use pifa_core::decomp::{cholesky, lstsq, qr_column_pivoted, thin_svd};
use pifa_core::lowrank::{
    density_to_rank, param_count, truncated_svd_prune, whitened_svd_prune, CountingMode, DensitySpec, LowRankFactors,
};
use pifa_core::pifa::{decode_pifa, encode_pifa, lowrank_param_count, pifa_build, pifa_param_count, reconstruct_dense};
use pifa_core::reconstruct::{
    reconstruct_pair, reconstruction_objective, CalibrationAccumulator, ReconstructionConfig,
};
use pifa_core::tensor::pft::{decode_pft, encode_pft};
use pifa_core::{Matrix, Matrix32, SeededRng};
use proptest::prelude::*;

fn to_na(a: &Matrix) -> DMatrix<f64> {
    DMatrix::from_row_slice(a.rows(), a.cols(), a.as_slice())
}

fn rel(a: &Matrix, b: &Matrix) -> f64 {
    a.sub(b).unwrap().frobenius_norm() / b.frobenius_norm().max(1e-300)
}

fn exact_rank(seed: u64, m: usize, n: usize, r: usize) -> Matrix {
    let mut rng = SeededRng::new(seed);
    rng.gaussian::<f64>(m, r).matmul(&rng.gaussian(r, n)).unwrap()
}

fn shape_and_rank() -> impl Strategy<Value = (usize, usize, usize, u64)> {
    (2usize..40, 2usize..40, any::<u64>()).prop_flat_map(|(m, n, seed)| (Just(m), Just(n), 1..=m.min(n), Just(seed)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn pifa_is_lossless_on_exact_rank((m, n, r, seed) in shape_and_rank()) {
        let w = exact_rank(seed, m, n, r);
        let layer = pifa_build(&w, r).unwrap();
        prop_assert!(rel(&reconstruct_dense(&layer), &w) <= 1e-9);

        let mut pivots = layer.pivots().to_vec();
        pivots.sort_unstable();
        pivots.dedup();
        prop_assert_eq!(pivots.len(), r);
        prop_assert_eq!(layer.nonpivots().len(), m - r);

        let x = SeededRng::new(seed ^ 1).gaussian::<f64>(n, 3);
        let y = layer.forward(&x).unwrap();
        prop_assert!(rel(&y, &w.matmul(&x).unwrap()) <= 1e-9);
    }

    #[test]
    fn pifa_counts_never_exceed_lowrank((m, n, r, _seed) in shape_and_rank()) {
        let pifa = pifa_param_count(m, n, r);
        let lowrank = lowrank_param_count(m, n, r);
        prop_assert!(pifa <= lowrank);
        prop_assert_eq!(pifa == lowrank, r == 1);
        let stored = r * (m + n) - r * r;
        prop_assert!(stored <= m * n);
        prop_assert_eq!(stored == m * n, r == m.min(n));
    }

    #[test]
    fn pifl_round_trip_is_bit_identical((m, n, r, seed) in shape_and_rank()) {
        let layer = pifa_build(&exact_rank(seed, m, n, r), r).unwrap();
        let bytes = encode_pifa(&layer).unwrap();
        let back = decode_pifa::<f64>(&bytes).unwrap();
        prop_assert_eq!(back.pivots(), layer.pivots());
        prop_assert_eq!(back.w_p().as_slice(), layer.w_p().as_slice());
        prop_assert_eq!(back.c().as_slice(), layer.c().as_slice());
        prop_assert_eq!(encode_pifa(&back).unwrap(), bytes);
    }

    #[test]
    fn pft_round_trip(rows in 1usize..20, cols in 1usize..20, seed in any::<u64>()) {
        let m: Matrix32 = SeededRng::new(seed).gaussian(rows, cols);
        let back = decode_pft::<f32>(&encode_pft(&m).unwrap()).unwrap();
        prop_assert_eq!(back.as_slice(), m.as_slice());
    }

    #[test]
    fn truncated_header_is_format_error(cut in 0usize..22) {
        let m: Matrix = Matrix::identity(3);
        let bytes = encode_pft(&m).unwrap();
        let err = decode_pft::<f64>(&bytes[..cut]).unwrap_err();
        prop_assert_eq!(err.class(), pifa_core::ErrorClass::Io);
    }

    #[test]
    fn singular_values_match_nalgebra(m in 1usize..25, n in 1usize..25, seed in any::<u64>()) {
        let a: Matrix = SeededRng::new(seed).gaussian(m, n);
        let ours = thin_svd(&a).unwrap();
        let mut theirs: Vec<f64> = to_na(&a).singular_values().iter().copied().collect();
        theirs.sort_by(|x, y| y.partial_cmp(x).unwrap());
        for (s, t) in ours.s.iter().zip(&theirs) {
            prop_assert!((s - t).abs() <= 1e-10 * theirs[0].max(1.0));
        }
        prop_assert!(rel(&ours.reconstruct(), &a) <= 1e-10);
    }

    #[test]
    fn cholesky_reproduces_spd(n in 1usize..20, seed in any::<u64>()) {
        let b: Matrix = SeededRng::new(seed).gaussian(n, n + 3);
        let a = b.gram();
        let l = cholesky(&a, 0.0).unwrap();
        prop_assert!(rel(&l.matmul(&l.transpose()).unwrap(), &a) <= 1e-12);
        for i in 0..n {
            for j in i + 1..n {
                prop_assert_eq!(l.get(i, j), 0.0);
            }
        }
    }

    #[test]
    fn lstsq_matches_nalgebra(m in 3usize..25, extra in 0usize..10, seed in any::<u64>()) {
        let mut rng = SeededRng::new(seed);
        let n = m.saturating_sub(extra).max(1);
        let a: Matrix = rng.gaussian(m, n);
        let b: Matrix = rng.gaussian(m, 2);
        let ours = lstsq(&a, &b).unwrap();
        let theirs = to_na(&a).svd(true, true).solve(&to_na(&b), 1e-14).unwrap();
        let theirs = Matrix::from_fn(n, 2, |i, j| theirs[(i, j)]);
        prop_assert!(rel(&ours, &theirs) <= 1e-9);
    }

    #[test]
    fn pivoted_qr_diagonal_is_non_increasing(m in 2usize..25, n in 2usize..25, seed in any::<u64>()) {
        let a: Matrix = SeededRng::new(seed).gaussian(m, n);
        let qr = qr_column_pivoted(&a, 1e-10).unwrap();
        let d: Vec<f64> = (0..m.min(n)).map(|i| qr.r_factor.get(i, i).abs()).collect();
        prop_assert!(d.windows(2).all(|w| w[0] >= w[1] * (1.0 - 1e-12)));
        let ap = a.select_cols(&qr.pivots);
        prop_assert!(rel(&qr.q.matmul(&qr.r_factor).unwrap(), &ap) <= 1e-12);
    }

    #[test]
    fn whitening_by_identity_is_plain_svd((m, n, r, seed) in shape_and_rank()) {
        let w: Matrix = SeededRng::new(seed).gaussian(m, n);
        let plain = truncated_svd_prune(&w, r).unwrap().to_dense();
        let whitened = whitened_svd_prune(&w, &Matrix::identity(n), r, Some(0.0)).unwrap().to_dense();
        let svd = thin_svd(&w).unwrap();
        // Degenerate singular gaps make the rank-r subspace ambiguous.
        prop_assume!(r == m.min(n) || svd.s[r - 1] - svd.s[r] > 1e-6 * svd.s[0]);
        prop_assert!(rel(&whitened, &plain) <= 1e-8);
    }

    #[test]
    fn whitened_svd_beats_plain_on_its_objective(m in 4usize..20, n in 4usize..20, seed in any::<u64>()) {
        let mut rng = SeededRng::new(seed);
        let r = (m.min(n) / 2).max(1);
        let w: Matrix = rng.gaussian(m, n);
        let x = rng.gaussian::<f64>(n, 3 * n).map(|v| v * 2.0);
        let scaled = Matrix::from_fn(n, 3 * n, |i, j| x.get(i, j) * (1.0 + i as f64));
        let xxt = scaled.matmul(&scaled.transpose()).unwrap();
        let loss = |f: &LowRankFactors<f64>| {
            w.sub(&f.to_dense()).unwrap().matmul(&scaled).unwrap().frobenius_norm()
        };
        let plain = truncated_svd_prune(&w, r).unwrap();
        let whitened = whitened_svd_prune(&w, &xxt, r, None).unwrap();
        prop_assert!(loss(&whitened) <= loss(&plain) * (1.0 + 1e-9));
    }

    #[test]
    fn density_to_rank_is_the_largest_fit(m in 1usize..300, n in 1usize..300, density in 0.01f64..1.0, pifa in any::<bool>()) {
        let mode = if pifa { CountingMode::Pifa } else { CountingMode::SvdLowrank };
        let budget = density * (m * n) as f64;
        match density_to_rank(m, n, DensitySpec::new(density, mode).unwrap()) {
            Ok(r) => {
                prop_assert!(r >= 1 && r <= m.min(n));
                prop_assert!(param_count(mode, m, n, r) as f64 <= budget);
                prop_assert!(r == m.min(n) || param_count(mode, m, n, r + 1) as f64 > budget);
            }
            Err(e) => {
                prop_assert!(param_count(mode, m, n, 1) as f64 > budget);
                prop_assert_eq!(e.class(), pifa_core::ErrorClass::Validation);
            }
        }
    }

    #[test]
    fn reconstruction_never_raises_objective(
        m in 3usize..12, n in 3usize..12, seed in any::<u64>(), lambda in 0.0f64..=1.0,
    ) {
        let mut rng = SeededRng::new(seed);
        let r = rng.range(1, m.min(n) - 1);
        let samples = n + rng.range(1, 30);
        let w: Matrix = rng.gaussian(m, n);
        let x_o: Matrix = rng.gaussian(n, samples);
        let x_u = x_o.add(&rng.gaussian::<f64>(n, samples).scale(0.5)).unwrap();
        let init = truncated_svd_prune(&w, r).unwrap();
        let mut acc = CalibrationAccumulator::new(m, n, lambda).unwrap();
        acc.accumulate(&w, &x_o, &x_u).unwrap();
        let cfg = ReconstructionConfig { lambda, alpha: 0.0, ..ReconstructionConfig::default() };
        let out = reconstruct_pair(&acc, &init, &w, &cfg).unwrap();
        let before = reconstruction_objective(&w, &init, &x_o, &x_u, lambda).unwrap();
        let after = reconstruction_objective(&w, &out.factors, &x_o, &x_u, lambda).unwrap();
        prop_assert!(after <= before * (1.0 + 1e-9) + 1e-12);
    }

    #[test]
    fn accumulator_is_partition_invariant(split in 1usize..39, seed in any::<u64>()) {
        let mut rng = SeededRng::new(seed);
        let (m, n, samples) = (5, 4, 40);
        let w: Matrix = rng.gaussian(m, n);
        let x_o: Matrix = rng.gaussian(n, samples);
        let x_u: Matrix = rng.gaussian(n, samples);
        let mut whole = CalibrationAccumulator::new(m, n, 0.3).unwrap();
        whole.accumulate(&w, &x_o, &x_u).unwrap();
        let mut parts = CalibrationAccumulator::new(m, n, 0.3).unwrap();
        parts.accumulate(&w, &x_o.col_range(0, split), &x_u.col_range(0, split)).unwrap();
        parts.accumulate(&w, &x_o.col_range(split, samples), &x_u.col_range(split, samples)).unwrap();
        prop_assert_eq!(parts.samples(), samples);
        prop_assert!(rel(parts.xxt(), whole.xxt()) <= 1e-12);
        prop_assert!(rel(parts.ytxt(), whole.ytxt()) <= 1e-12);
    }
}
