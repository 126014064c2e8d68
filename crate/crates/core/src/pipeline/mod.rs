//! Layer-by-layer compression of a chain of dense linear layers.
//!
//! The toy network stands in for a transformer's sequence of linear modules:
//! every step of the method only needs a layer's weight and the two data flows
//! feeding it, so any conformable chain exercises the same arithmetic.

mod compress;
mod density;
mod evaluate;
mod generate;
mod manifest;
mod network;

pub use compress::{compress, Arm, CompressionPlan, FlowMode, LayerProvenance};
pub use density::{allocate_densities, DensityAllocation};
pub use evaluate::{evaluate, EvalReport, LayerError};
pub use generate::{random_network, InputDistribution, NetworkSpec};
pub use manifest::{load_network, save_network, LayerEntry, LayerKind, NetworkManifest, MANIFEST_FORMAT};
pub use network::{Activation, CompressedLayer, CompressedNetwork, Network, ToyNetwork};
