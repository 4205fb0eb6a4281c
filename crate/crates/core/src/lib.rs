//! Pixel-wise antipodal grasp detection: dataset loading, a compact
//! encoder-decoder network, Smooth-L1 training, rectangle-metric evaluation
//! and a closed-loop visual-servoing simulator.

pub mod cli;
pub mod datasets;
pub mod error;
pub mod evaluation;
pub mod grasp;
pub mod network;
pub mod sim;
pub mod training;
mod toml_file;

pub use error::{Error, Result};
