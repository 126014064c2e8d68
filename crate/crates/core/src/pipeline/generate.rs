use serde::{Deserialize, Serialize};

use super::network::{Activation, ToyNetwork};
use crate::decomp::qr_column_pivoted;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::{DenseMatrix, SeededRng};

/// Shape and spectrum of a generated toy network.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetworkSpec {
    /// `[input, hidden.., output]`; layer `i` is `dims[i + 1] x dims[i]`.
    pub dims: Vec<usize>,
    pub activation: Activation,
    /// Singular values fall off as `(k + 1)^-decay`.
    pub spectral_decay: f64,
}

impl NetworkSpec {
    pub fn new(dims: Vec<usize>, activation: Activation) -> Self {
        Self {
            dims,
            activation,
            spectral_decay: 0.5,
        }
    }
}

fn orthonormal(rng: &mut SeededRng, n: usize, k: usize) -> Result<DenseMatrix<f64>> {
    Ok(qr_column_pivoted(&rng.gaussian::<f64>(n, k), 0.0)?.q)
}

/// `U diag(s) V^T` scaled so `||W||_F^2 = rows`, which keeps the output
/// variance near the input variance for whitened inputs.
fn decaying_weight(rng: &mut SeededRng, m: usize, n: usize, decay: f64) -> Result<DenseMatrix<f64>> {
    let k = m.min(n);
    let s: Vec<f64> = (0..k).map(|j| ((j + 1) as f64).powf(-decay)).collect();
    let norm = s.iter().map(|v| v * v).sum::<f64>().sqrt();
    let scale = (m as f64).sqrt() / norm;
    let u = orthonormal(rng, m, k)?;
    let v = orthonormal(rng, n, k)?;
    let mut us = u;
    for i in 0..m {
        for (x, sv) in us.row_mut(i).iter_mut().zip(&s) {
            *x *= sv * scale;
        }
    }
    us.matmul(&v.transpose())
}

pub fn random_network<T: Scalar>(spec: &NetworkSpec, rng: &mut SeededRng) -> Result<ToyNetwork<T>> {
    if spec.dims.len() < 2 || spec.dims.contains(&0) {
        return Err(Error::Invalid(format!(
            "network dims need at least two positive entries, got {:?}",
            spec.dims
        )));
    }
    if !(spec.spectral_decay >= 0.0 && spec.spectral_decay.is_finite()) {
        return Err(Error::Invalid(format!(
            "spectral decay must be >= 0, got {}",
            spec.spectral_decay
        )));
    }
    let layers = spec
        .dims
        .windows(2)
        .enumerate()
        .map(|(i, d)| {
            let mut layer_rng = rng.fork(i as u64);
            decaying_weight(&mut layer_rng, d[1], d[0], spec.spectral_decay).map(|w| w.cast())
        })
        .collect::<Result<Vec<_>>>()?;
    ToyNetwork::new(layers, spec.activation)
}

/// Zero-mean Gaussian inputs with covariance `B diag(scales^2) B^T`.
#[derive(Clone, Debug, PartialEq)]
pub struct InputDistribution {
    basis: DenseMatrix<f64>,
    scales: Vec<f64>,
}

impl InputDistribution {
    /// Variances fall off as `(k + 1)^-decay` along a random basis and average
    /// to one; `decay = 0` is isotropic.
    pub fn anisotropic(rng: &mut SeededRng, dim: usize, decay: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Invalid("input dimension must be positive".into()));
        }
        let var: Vec<f64> = (0..dim).map(|j| ((j + 1) as f64).powf(-decay)).collect();
        let mean = var.iter().sum::<f64>() / dim as f64;
        Ok(Self {
            basis: orthonormal(rng, dim, dim)?,
            scales: var.iter().map(|v| (v / mean).sqrt()).collect(),
        })
    }

    pub fn isotropic(dim: usize) -> Self {
        Self {
            basis: DenseMatrix::identity(dim),
            scales: vec![1.0; dim],
        }
    }

    /// Same spectrum along a fresh random basis: a different covariance with
    /// the same total energy.
    pub fn shifted(&self, rng: &mut SeededRng) -> Result<Self> {
        Ok(Self {
            basis: orthonormal(rng, self.dim(), self.dim())?,
            scales: self.scales.clone(),
        })
    }

    pub fn dim(&self) -> usize {
        self.scales.len()
    }

    pub fn sample<T: Scalar>(&self, rng: &mut SeededRng, cols: usize) -> DenseMatrix<T> {
        let mut g = rng.gaussian::<f64>(self.dim(), cols);
        for (i, &s) in self.scales.iter().enumerate() {
            for v in g.row_mut(i) {
                *v *= s;
            }
        }
        self.basis.matmul(&g).expect("square basis").cast()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decomp::thin_svd;
    use crate::pipeline::Network;

    #[test]
    fn network_is_seeded_and_chained() {
        let spec = NetworkSpec::new(vec![12, 8, 5], Activation::Relu);
        let a = random_network::<f64>(&spec, &mut SeededRng::new(3)).unwrap();
        let b = random_network::<f64>(&spec, &mut SeededRng::new(3)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.layer_shapes(), vec![(8, 12), (5, 8)]);
        assert_eq!(a.output_dim(), 5);
        assert!(random_network::<f64>(&NetworkSpec::new(vec![4], Activation::Relu), &mut SeededRng::new(3)).is_err());
    }

    #[test]
    fn spectrum_follows_decay() {
        let spec = NetworkSpec {
            spectral_decay: 1.0,
            ..NetworkSpec::new(vec![6, 6], Activation::Identity)
        };
        let net = random_network::<f64>(&spec, &mut SeededRng::new(4)).unwrap();
        let s = thin_svd(&net.layers()[0]).unwrap().s;
        for (k, pair) in s.windows(2).enumerate() {
            let expected = (k + 1) as f64 / (k + 2) as f64;
            assert!((pair[1] / pair[0] - expected).abs() < 1e-9);
        }
        let fro: f64 = s.iter().map(|v| v * v).sum();
        assert!((fro - 6.0).abs() < 1e-9);
    }

    #[test]
    fn sample_covariance_matches_model() {
        let mut rng = SeededRng::new(5);
        let dist = InputDistribution::anisotropic(&mut rng, 4, 1.0).unwrap();
        let x = dist.sample::<f64>(&mut rng, 40_000);
        let cov = x.gram().scale(1.0 / 40_000.0);
        let mut s2 = dist.scales.iter().map(|s| s * s).collect::<Vec<_>>();
        let model = dist
            .basis
            .matmul(&DenseMatrix::from_diag(&s2))
            .unwrap()
            .matmul(&dist.basis.transpose())
            .unwrap();
        assert!(cov.sub(&model).unwrap().max_abs() < 0.05);
        s2.iter_mut().for_each(|v| *v -= 1.0);
        assert!(s2.iter().sum::<f64>().abs() < 1e-12);
    }
}
