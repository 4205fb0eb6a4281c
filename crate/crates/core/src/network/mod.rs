//! The grasp network: configuration, layers and checkpoint archives.

mod checkpoint;
mod config;
mod model;

use ndarray::{s, Array3};
use pixgrasp_nn::{Element, Tensor};

pub use checkpoint::{load_checkpoint, read_arrays, save_checkpoint, write_arrays, NamedArrays};
pub use config::NetworkConfig;
pub use model::{spp_pool, Network, HEAD_NAMES};
pub use pixgrasp_nn::Mode;

use crate::error::{Error, Result};

pub fn build_network(cfg: NetworkConfig, seed: u64) -> Result<Network<f32>> {
    Network::new(cfg, seed)
}

pub fn count_parameters<F: Element>(net: &Network<F>) -> usize {
    net.count_parameters()
}

/// Stacks `C x H x W` inputs into one batch tensor.
pub fn batch_inputs(inputs: &[&Array3<f32>]) -> Result<Tensor<f32>> {
    let first = inputs.first().ok_or_else(|| Error::Shape("empty batch".into()))?;
    let (c, h, w) = first.dim();
    let mut data = Vec::with_capacity(inputs.len() * c * h * w);
    for x in inputs {
        if x.dim() != (c, h, w) {
            return Err(Error::Shape(format!("batch item {:?} vs {:?}", x.dim(), (c, h, w))));
        }
        data.extend(x.slice(s![.., .., ..]).iter().copied());
    }
    Ok(Tensor::from_vec([inputs.len(), c, h, w], data)?)
}
