use serde::{Deserialize, Serialize};

use super::compress::LayerProvenance;
use crate::error::{Error, Result};
use crate::lowrank::LowRankFactors;
use crate::pifa::PifaLayer;
use crate::scalar::Scalar;
use crate::tensor::DenseMatrix;

/// Elementwise nonlinearity applied between consecutive layers (never after
/// the last one).
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    #[default]
    Identity,
    Relu,
}

impl Activation {
    pub fn apply<T: Scalar>(self, x: DenseMatrix<T>) -> DenseMatrix<T> {
        match self {
            Activation::Identity => x,
            Activation::Relu => x.map(|v| v.max(T::zero())),
        }
    }
}

impl std::str::FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "identity" => Ok(Activation::Identity),
            "relu" => Ok(Activation::Relu),
            other => Err(Error::Invalid(format!("unknown activation '{other}'"))),
        }
    }
}

/// Anything that maps a batch of input columns through a chain of layers.
pub trait Network<T: Scalar> {
    fn depth(&self) -> usize;

    /// `(rows, cols)` of layer `i`.
    fn layer_shape(&self, i: usize) -> (usize, usize);

    fn activation(&self) -> Activation;

    fn layer_forward(&self, i: usize, x: &DenseMatrix<T>) -> Result<DenseMatrix<T>>;

    fn input_dim(&self) -> usize {
        self.layer_shape(0).1
    }

    fn output_dim(&self) -> usize {
        self.layer_shape(self.depth() - 1).0
    }

    /// Output of every layer, activation included except on the last.
    fn forward_trace(&self, x: &DenseMatrix<T>) -> Result<Vec<DenseMatrix<T>>> {
        let mut outs: Vec<DenseMatrix<T>> = Vec::with_capacity(self.depth());
        for i in 0..self.depth() {
            let input = outs.last().unwrap_or(x);
            let mut y = self.layer_forward(i, input).map_err(|e| e.at_layer(i))?;
            if i + 1 < self.depth() {
                y = self.activation().apply(y);
            }
            outs.push(y);
        }
        Ok(outs)
    }

    fn forward(&self, x: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
        Ok(self.forward_trace(x)?.pop().expect("networks have at least one layer"))
    }
}

fn check_chain(shapes: &[(usize, usize)]) -> Result<()> {
    if shapes.is_empty() {
        return Err(Error::Invalid("a network needs at least one layer".into()));
    }
    for (i, pair) in shapes.windows(2).enumerate() {
        if pair[1].1 != pair[0].0 {
            return Err(Error::shape(
                "network",
                format!(
                    "layer {} takes {} inputs but layer {} produces {}",
                    i + 1,
                    pair[1].1,
                    i,
                    pair[0].0
                ),
            ));
        }
    }
    Ok(())
}

/// Dense reference network `W_L act(... act(W_1 x))`.
#[derive(Clone, Debug, PartialEq)]
pub struct ToyNetwork<T> {
    layers: Vec<DenseMatrix<T>>,
    activation: Activation,
    tags: Vec<String>,
}

impl<T: Scalar> ToyNetwork<T> {
    /// Every layer gets the module-type tag `"linear"`.
    pub fn new(layers: Vec<DenseMatrix<T>>, activation: Activation) -> Result<Self> {
        let tags = vec!["linear".to_string(); layers.len()];
        Self::with_tags(layers, activation, tags)
    }

    pub fn with_tags(layers: Vec<DenseMatrix<T>>, activation: Activation, tags: Vec<String>) -> Result<Self> {
        check_chain(&layers.iter().map(DenseMatrix::shape).collect::<Vec<_>>())?;
        if tags.len() != layers.len() {
            return Err(Error::Invalid(format!(
                "{} tags for {} layers",
                tags.len(),
                layers.len()
            )));
        }
        if let Some(i) = layers.iter().position(|w| !w.is_finite()) {
            return Err(Error::Invalid(format!("layer {i} has non-finite weights")));
        }
        Ok(Self {
            layers,
            activation,
            tags,
        })
    }

    pub fn layers(&self) -> &[DenseMatrix<T>] {
        &self.layers
    }

    pub fn tags(&self) -> &[String] {
        &self.tags
    }

    pub fn layer_shapes(&self) -> Vec<(usize, usize)> {
        self.layers.iter().map(DenseMatrix::shape).collect()
    }

    pub fn param_count(&self) -> u64 {
        self.layers.iter().map(|w| w.len() as u64).sum()
    }
}

impl<T: Scalar> Network<T> for ToyNetwork<T> {
    fn depth(&self) -> usize {
        self.layers.len()
    }

    fn layer_shape(&self, i: usize) -> (usize, usize) {
        self.layers[i].shape()
    }

    fn activation(&self) -> Activation {
        self.activation
    }

    fn layer_forward(&self, i: usize, x: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
        self.layers[i].matmul(x)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum CompressedLayer<T> {
    Dense(DenseMatrix<T>),
    LowRank(LowRankFactors<T>),
    Pifa(PifaLayer<T>),
}

impl<T: Scalar> CompressedLayer<T> {
    pub fn shape(&self) -> (usize, usize) {
        match self {
            CompressedLayer::Dense(w) => w.shape(),
            CompressedLayer::LowRank(f) => (f.m(), f.n()),
            CompressedLayer::Pifa(p) => (p.m(), p.n()),
        }
    }

    pub fn rank(&self) -> usize {
        match self {
            CompressedLayer::Dense(w) => w.rows().min(w.cols()),
            CompressedLayer::LowRank(f) => f.rank(),
            CompressedLayer::Pifa(p) => p.rank(),
        }
    }

    /// Parameter count under the layer's own storage layout.
    pub fn param_count(&self) -> u64 {
        match self {
            CompressedLayer::Dense(w) => w.len() as u64,
            CompressedLayer::LowRank(f) => f.param_count(),
            CompressedLayer::Pifa(p) => p.param_count(),
        }
    }

    pub fn forward(&self, x: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
        match self {
            CompressedLayer::Dense(w) => w.matmul(x),
            CompressedLayer::LowRank(f) => f.forward(x),
            CompressedLayer::Pifa(p) => p.forward(x),
        }
    }

    pub fn to_dense(&self) -> DenseMatrix<T> {
        match self {
            CompressedLayer::Dense(w) => w.clone(),
            CompressedLayer::LowRank(f) => f.to_dense(),
            CompressedLayer::Pifa(p) => p.to_dense(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct CompressedNetwork<T> {
    layers: Vec<CompressedLayer<T>>,
    activation: Activation,
    provenance: Vec<Option<LayerProvenance>>,
}

impl<T: Scalar> CompressedNetwork<T> {
    pub fn new(
        layers: Vec<CompressedLayer<T>>,
        activation: Activation,
        provenance: Vec<Option<LayerProvenance>>,
    ) -> Result<Self> {
        check_chain(&layers.iter().map(CompressedLayer::shape).collect::<Vec<_>>())?;
        if provenance.len() != layers.len() {
            return Err(Error::Invalid(format!(
                "{} provenance records for {} layers",
                provenance.len(),
                layers.len()
            )));
        }
        Ok(Self {
            layers,
            activation,
            provenance,
        })
    }

    pub fn layers(&self) -> &[CompressedLayer<T>] {
        &self.layers
    }

    pub fn provenance(&self) -> &[Option<LayerProvenance>] {
        &self.provenance
    }

    /// Sum of per-layer parameter counts (PIFA layers charge their indices).
    pub fn param_count(&self) -> u64 {
        self.layers.iter().map(CompressedLayer::param_count).sum()
    }

    /// The dense network with the same weights, if nothing is factored.
    pub fn to_toy(&self) -> Option<ToyNetwork<T>> {
        let dense = self
            .layers
            .iter()
            .map(|l| match l {
                CompressedLayer::Dense(w) => Some(w.clone()),
                _ => None,
            })
            .collect::<Option<Vec<_>>>()?;
        ToyNetwork::new(dense, self.activation).ok()
    }
}

impl<T: Scalar> From<ToyNetwork<T>> for CompressedNetwork<T> {
    fn from(net: ToyNetwork<T>) -> Self {
        let depth = net.layers.len();
        Self {
            layers: net.layers.into_iter().map(CompressedLayer::Dense).collect(),
            activation: net.activation,
            provenance: vec![None; depth],
        }
    }
}

impl<T: Scalar> Network<T> for CompressedNetwork<T> {
    fn depth(&self) -> usize {
        self.layers.len()
    }

    fn layer_shape(&self, i: usize) -> (usize, usize) {
        self.layers[i].shape()
    }

    fn activation(&self) -> Activation {
        self.activation
    }

    fn layer_forward(&self, i: usize, x: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
        self.layers[i].forward(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chain_mismatch_is_rejected() {
        let a = DenseMatrix::<f64>::zeros(3, 4);
        let b = DenseMatrix::<f64>::zeros(2, 2);
        assert!(matches!(
            ToyNetwork::new(vec![a, b], Activation::Relu),
            Err(Error::Shape { .. })
        ));
        assert!(ToyNetwork::<f64>::new(vec![], Activation::Relu).is_err());
    }

    #[test]
    fn relu_sits_between_layers_only() {
        let neg = DenseMatrix::<f64>::from_rows(&[[-1.0]]);
        let net = ToyNetwork::new(vec![DenseMatrix::identity(1), neg], Activation::Relu).unwrap();
        let y = net.forward(&DenseMatrix::from_rows(&[[2.0, -3.0]])).unwrap();
        assert_eq!(y.as_slice(), &[-2.0, 0.0]);
    }

    #[test]
    fn compressed_view_of_dense_matches() {
        let w1 = DenseMatrix::<f64>::from_rows(&[[1.0, 2.0], [3.0, 4.0], [0.5, 0.0]]);
        let w2 = DenseMatrix::<f64>::from_rows(&[[1.0, -1.0, 2.0]]);
        let net = ToyNetwork::new(vec![w1, w2], Activation::Relu).unwrap();
        let c = CompressedNetwork::from(net.clone());
        let x = DenseMatrix::from_rows(&[[1.0, -2.0], [0.5, 1.0]]);
        assert_eq!(net.forward(&x).unwrap(), c.forward(&x).unwrap());
        assert_eq!(c.to_toy().unwrap(), net);
        assert_eq!(c.param_count(), 9);
    }
}
