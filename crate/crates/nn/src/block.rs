use rand::Rng;

use crate::activation::Activation;
use crate::conv::{Conv2d, Conv2dConfig};
use crate::element::Element;
use crate::error::{NnError, Result};
use crate::norm::{BatchNorm2d, BnCache};
use crate::param::{join, Module, Param};
use crate::tensor::Tensor;

/// Whether normalization uses batch statistics (and caches for backward) or
/// running statistics.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

#[derive(Clone, Debug)]
struct Cache<F> {
    input: Tensor<F>,
    bn: Option<BnCache<F>>,
    pre_act: Tensor<F>,
}

/// Convolution, optional batch norm, activation. The convolution carries a
/// bias only when there is no batch norm after it.
#[derive(Clone, Debug)]
pub struct ConvBnAct<F> {
    pub conv: Conv2d<F>,
    pub bn: Option<BatchNorm2d<F>>,
    pub act: Activation,
    cache: Option<Cache<F>>,
}

impl<F: Element> ConvBnAct<F> {
    pub fn new(cfg: Conv2dConfig, batch_norm: bool, act: Activation, rng: &mut impl Rng) -> Self {
        let cfg = cfg.with_bias(!batch_norm);
        let bn = batch_norm.then(|| BatchNorm2d::new(cfg.out_channels));
        Self { conv: Conv2d::new(cfg, rng), bn, act, cache: None }
    }

    pub fn out_channels(&self) -> usize {
        self.conv.config().out_channels
    }

    pub fn forward(&mut self, x: &Tensor<F>, mode: Mode) -> Result<Tensor<F>> {
        let z = self.conv.forward(x)?;
        let (pre_act, bn_cache) = match (&mut self.bn, mode) {
            (Some(bn), Mode::Train) => {
                let (y, c) = bn.forward_train(&z)?;
                (y, Some(c))
            }
            (Some(bn), Mode::Eval) => (bn.forward_eval(&z)?, None),
            (None, _) => (z, None),
        };
        let mut out = pre_act.clone();
        self.act.forward_inplace(out.data_mut());
        self.cache = match mode {
            Mode::Train => Some(Cache { input: x.clone(), bn: bn_cache, pre_act }),
            Mode::Eval => None,
        };
        Ok(out)
    }

    /// Inference with running statistics; leaves any training cache untouched.
    pub fn infer(&self, x: &Tensor<F>) -> Result<Tensor<F>> {
        let z = self.conv.forward(x)?;
        let mut out = match &self.bn {
            Some(bn) => bn.forward_eval(&z)?,
            None => z,
        };
        self.act.forward_inplace(out.data_mut());
        Ok(out)
    }

    /// Consumes the cache of the last training forward.
    pub fn backward(&mut self, grad_out: &Tensor<F>, input_grad: bool) -> Result<Option<Tensor<F>>> {
        let cache = self.cache.take().ok_or(NnError::MissingCache("conv block"))?;
        cache.pre_act.ensure_same_shape(grad_out, "block backward")?;
        let mut g = grad_out.clone();
        self.act.backward_inplace(cache.pre_act.data(), g.data_mut());
        if let (Some(bn), Some(bc)) = (&mut self.bn, &cache.bn) {
            g = bn.backward(bc, &g)?;
        }
        self.conv.backward(&cache.input, &g, input_grad)
    }

    pub fn clear_cache(&mut self) {
        self.cache = None;
    }
}

impl<F: Element> Module<F> for ConvBnAct<F> {
    fn visit_params(&self, prefix: &str, f: &mut dyn FnMut(&str, &Param<F>)) {
        self.conv.visit_params(&join(prefix, "conv"), f);
        if let Some(bn) = &self.bn {
            bn.visit_params(&join(prefix, "bn"), f);
        }
    }

    fn visit_params_mut(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &mut Param<F>)) {
        self.conv.visit_params_mut(&join(prefix, "conv"), f);
        if let Some(bn) = &mut self.bn {
            bn.visit_params_mut(&join(prefix, "bn"), f);
        }
    }
}
