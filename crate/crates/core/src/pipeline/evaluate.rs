use serde::{Deserialize, Serialize};

use super::network::Network;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::DenseMatrix;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LayerError {
    pub layer: usize,
    pub mse: f64,
    pub rel_frobenius: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub probes: usize,
    /// Mean squared difference of the final outputs.
    pub mse: f64,
    /// `||Y_a - Y_b||_F / ||Y_a||_F`.
    pub rel_frobenius: f64,
    /// The same metrics after every layer, each network on its own flow.
    pub per_layer: Vec<LayerError>,
}

fn compare<T: Scalar>(layer: usize, a: &DenseMatrix<T>, b: &DenseMatrix<T>) -> Result<LayerError> {
    let diff = a.sub(b)?;
    let err = diff.frobenius_norm().as_f64();
    let reference = a.frobenius_norm().as_f64();
    let rel_frobenius = if reference > 0.0 {
        err / reference
    } else if err == 0.0 {
        0.0
    } else {
        f64::INFINITY
    };
    Ok(LayerError {
        layer,
        mse: if diff.is_empty() {
            0.0
        } else {
            err * err / diff.len() as f64
        },
        rel_frobenius,
    })
}

/// Compares `net_b` against the reference `net_a` on the probe columns.
pub fn evaluate<T: Scalar, A: Network<T>, B: Network<T>>(
    net_a: &A,
    net_b: &B,
    probes: &DenseMatrix<T>,
) -> Result<EvalReport> {
    let shapes_a: Vec<_> = (0..net_a.depth()).map(|i| net_a.layer_shape(i)).collect();
    let shapes_b: Vec<_> = (0..net_b.depth()).map(|i| net_b.layer_shape(i)).collect();
    if shapes_a != shapes_b {
        return Err(Error::shape(
            "evaluate",
            format!("layer shapes differ: {shapes_a:?} vs {shapes_b:?}"),
        ));
    }
    if probes.rows() != net_a.input_dim() {
        return Err(Error::shape(
            "evaluate",
            format!(
                "probes have {} rows, network input is {}",
                probes.rows(),
                net_a.input_dim()
            ),
        ));
    }
    let trace_a = net_a.forward_trace(probes)?;
    let trace_b = net_b.forward_trace(probes)?;
    let per_layer = trace_a
        .iter()
        .zip(&trace_b)
        .enumerate()
        .map(|(i, (a, b))| compare(i, a, b))
        .collect::<Result<Vec<_>>>()?;
    let last = *per_layer.last().expect("networks have at least one layer");
    Ok(EvalReport {
        probes: probes.cols(),
        mse: last.mse,
        rel_frobenius: last.rel_frobenius,
        per_layer,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::{Activation, ToyNetwork};
    use crate::tensor::SeededRng;

    #[test]
    fn self_comparison_is_zero() {
        let mut rng = SeededRng::new(21);
        let net = ToyNetwork::new(vec![rng.gaussian::<f64>(5, 4), rng.gaussian(3, 5)], Activation::Relu).unwrap();
        let r = evaluate(&net, &net, &rng.gaussian(4, 9)).unwrap();
        assert_eq!(r.mse, 0.0);
        assert_eq!(r.rel_frobenius, 0.0);
        assert!(r.per_layer.iter().all(|l| l.mse == 0.0));
        assert_eq!(r.probes, 9);
    }

    #[test]
    fn hand_checked_metrics() {
        let a = ToyNetwork::new(vec![DenseMatrix::<f64>::identity(2)], Activation::Identity).unwrap();
        let b = ToyNetwork::new(vec![DenseMatrix::from_diag(&[1.0, 0.0])], Activation::Identity).unwrap();
        let x = DenseMatrix::from_rows(&[[3.0], [4.0]]);
        let r = evaluate(&a, &b, &x).unwrap();
        assert!((r.mse - 8.0).abs() < 1e-15);
        assert!((r.rel_frobenius - 0.8).abs() < 1e-15);
    }

    #[test]
    fn shape_mismatch() {
        let a = ToyNetwork::new(vec![DenseMatrix::<f64>::identity(2)], Activation::Identity).unwrap();
        let b = ToyNetwork::new(vec![DenseMatrix::<f64>::identity(3)], Activation::Identity).unwrap();
        assert!(evaluate(&a, &b, &DenseMatrix::zeros(2, 1)).is_err());
        assert!(evaluate(&a, &a, &DenseMatrix::zeros(3, 1)).is_err());
    }
}
