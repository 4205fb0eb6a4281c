//! A small CPU tensor engine for NCHW convolutional networks with explicit
//! backward passes. Generic over `f32` and `f64` so gradients can be checked
//! in double precision.

pub mod activation;
pub mod block;
pub mod conv;
pub mod element;
pub mod error;
pub mod norm;
pub mod optim;
pub mod param;
pub mod pool;
pub mod shuffle;
pub mod tensor;

pub use activation::{mish, sigmoid, Activation};
pub use block::{ConvBnAct, Mode};
pub use conv::{Conv2d, Conv2dConfig};
pub use element::Element;
pub use error::{NnError, Result};
pub use norm::BatchNorm2d;
pub use optim::Adam;
pub use param::{join, Module, Param};
pub use pool::{max_pool_same, max_pool_same_backward, PoolOutput};
pub use shuffle::{pixel_shuffle, pixel_unshuffle};
pub use tensor::Tensor;
