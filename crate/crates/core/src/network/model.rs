use pixgrasp_nn::{
    max_pool_same, max_pool_same_backward, pixel_shuffle, pixel_unshuffle, Activation, Conv2d, Conv2dConfig, ConvBnAct,
    Element, Mode, Module, NnError, Param, Tensor,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::config::NetworkConfig;
use crate::error::{Error, Result};

/// Output planes, in channel order.
pub const HEAD_NAMES: [&str; 4] = ["quality", "angle_sin", "angle_cos", "width"];

#[derive(Clone, Debug)]
struct ResidualBlock<F> {
    a: ConvBnAct<F>,
    b: ConvBnAct<F>,
}

impl<F: Element> ResidualBlock<F> {
    fn forward(&mut self, x: &Tensor<F>, mode: Mode) -> Result<Tensor<F>> {
        let y = self.a.forward(x, mode)?;
        let mut y = self.b.forward(&y, mode)?;
        y.add_assign(x)?;
        Ok(y)
    }

    fn infer(&self, x: &Tensor<F>) -> Result<Tensor<F>> {
        let mut y = self.b.infer(&self.a.infer(x)?)?;
        y.add_assign(x)?;
        Ok(y)
    }

    fn backward(&mut self, g: &Tensor<F>) -> Result<Tensor<F>> {
        let gb = need(self.b.backward(g, true)?)?;
        let mut gx = need(self.a.backward(&gb, true)?)?;
        gx.add_assign(g)?;
        Ok(gx)
    }
}

/// One decoder step: refine, pixel-shuffle up, concatenate the encoder skip, fuse.
#[derive(Clone, Debug)]
struct DecoderStage<F> {
    pre: ConvBnAct<F>,
    post: ConvBnAct<F>,
}

#[derive(Clone, Debug)]
struct Cache<F> {
    pool_argmax: Vec<Vec<u32>>,
    head_input: Tensor<F>,
}

/// Fully convolutional encoder-decoder producing four per-pixel planes.
///
/// Layout: stem, strided encoder stages, residual blocks and spatial pyramid
/// pooling at the bottleneck, pixel-shuffle decoder stages with concatenated
/// skips, a final pixel-shuffle up to input resolution concatenated with the
/// stem output, a Conv-BN-ReLU block and four 1x1 heads.
#[derive(Clone, Debug)]
pub struct Network<F = f32> {
    cfg: NetworkConfig,
    stem: ConvBnAct<F>,
    down: Vec<ConvBnAct<F>>,
    res: Vec<ResidualBlock<F>>,
    spp_fuse: ConvBnAct<F>,
    dec: Vec<DecoderStage<F>>,
    final_pre: ConvBnAct<F>,
    final_act: ConvBnAct<F>,
    heads: Vec<Conv2d<F>>,
    cache: Option<Cache<F>>,
}

fn need<F>(t: Option<Tensor<F>>) -> Result<Tensor<F>> {
    t.ok_or(Error::Nn(NnError::MissingCache("input gradient")))
}

impl<F: Element> Network<F> {
    pub fn new(cfg: NetworkConfig, seed: u64) -> Result<Self> {
        cfg.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mish = |i, o, k, s, rng: &mut ChaCha8Rng| {
            ConvBnAct::new(Conv2dConfig::same(i, o, k).with_stride(s), true, Activation::Mish, rng)
        };
        let r = cfg.upsample_factor_per_stage;
        let sched = &cfg.channel_schedule;
        let stem = mish(cfg.input_channels, cfg.stem_channels, 3, 1, &mut rng);
        let mut down = Vec::new();
        let mut prev = cfg.stem_channels;
        for &c in sched {
            down.push(mish(prev, c, 3, r, &mut rng));
            prev = c;
        }
        let bottom = *sched.last().unwrap_or(&cfg.stem_channels);
        let res = (0..cfg.num_residual_blocks)
            .map(|_| ResidualBlock { a: mish(bottom, bottom, 3, 1, &mut rng), b: mish(bottom, bottom, 3, 1, &mut rng) })
            .collect();
        let spp_fuse = mish(bottom * (cfg.spp_kernels.len() + 1), bottom, 1, 1, &mut rng);
        let mut dec = Vec::new();
        for level in (1..sched.len()).rev() {
            let (c_in, c_skip) = (sched[level], sched[level - 1]);
            let pre = mish(c_in, c_in, 3, 1, &mut rng);
            let post = mish(c_in / (r * r) + c_skip, c_skip, 3, 1, &mut rng);
            dec.push(DecoderStage { pre, post });
        }
        let top = sched[0];
        let final_pre = mish(top, top, 3, 1, &mut rng);
        let final_act = ConvBnAct::new(
            Conv2dConfig::same(top / (r * r) + cfg.stem_channels, cfg.head_channels, 3),
            true,
            Activation::Relu,
            &mut rng,
        );
        let heads = HEAD_NAMES
            .iter()
            .map(|_| Conv2d::new(Conv2dConfig::same(cfg.head_channels, 1, 1).with_bias(true), &mut rng))
            .collect();
        Ok(Self { cfg, stem, down, res, spp_fuse, dec, final_pre, final_act, heads, cache: None })
    }

    pub fn config(&self) -> &NetworkConfig {
        &self.cfg
    }

    pub fn count_parameters(&self) -> usize {
        self.num_trainable()
    }

    /// Sets every head weight and bias to zero, so all outputs are exactly zero.
    pub fn zero_heads(&mut self) {
        for h in &mut self.heads {
            h.weight.value.iter_mut().for_each(|v| *v = F::zero());
            if let Some(b) = &mut h.bias {
                b.value.iter_mut().for_each(|v| *v = F::zero());
            }
        }
    }

    fn check_input(&self, x: &Tensor<F>) -> Result<()> {
        let f = self.cfg.downsample_factor();
        if x.channels() != self.cfg.input_channels {
            return Err(Error::Shape(format!(
                "network expects {} input channels, got {}",
                self.cfg.input_channels,
                x.channels()
            )));
        }
        for (what, n) in [("height", x.height()), ("width", x.width())] {
            if n == 0 || n % f != 0 {
                return Err(Error::Shape(format!("input {what} {n} must be a positive multiple of {f}")));
            }
        }
        Ok(())
    }

    fn spp_widths(&self) -> Vec<usize> {
        let c = *self.cfg.channel_schedule.last().unwrap_or(&self.cfg.stem_channels);
        vec![c; self.cfg.spp_kernels.len() + 1]
    }

    /// Batched forward pass; output is `N x 4 x H x W` (quality, sin, cos, width,
    /// all raw). In [`Mode::Train`] batch statistics are used and activations are
    /// cached for [`Network::backward`].
    pub fn forward(&mut self, x: &Tensor<F>, mode: Mode) -> Result<Tensor<F>> {
        if mode == Mode::Eval {
            return self.infer(x);
        }
        self.check_input(x)?;
        let r = self.cfg.upsample_factor_per_stage;
        let stem = self.stem.forward(x, mode)?;
        let mut cur = stem.clone();
        let mut feats = Vec::with_capacity(self.down.len());
        for d in &mut self.down {
            cur = d.forward(&cur, mode)?;
            feats.push(cur.clone());
        }
        for rb in &mut self.res {
            cur = rb.forward(&cur, mode)?;
        }
        let mut pooled = Vec::new();
        let mut pool_argmax = Vec::new();
        for &k in &self.cfg.spp_kernels {
            let p = max_pool_same(&cur, k)?;
            pooled.push(p.output);
            pool_argmax.push(p.argmax);
        }
        let mut parts = vec![&cur];
        parts.extend(pooled.iter());
        cur = self.spp_fuse.forward(&Tensor::concat_channels(&parts)?, mode)?;
        let n_levels = feats.len();
        for (i, st) in self.dec.iter_mut().enumerate() {
            let up = pixel_shuffle(&st.pre.forward(&cur, mode)?, r)?;
            cur = st.post.forward(&Tensor::concat_channels(&[&up, &feats[n_levels - 2 - i]])?, mode)?;
        }
        let up = pixel_shuffle(&self.final_pre.forward(&cur, mode)?, r)?;
        let h = self.final_act.forward(&Tensor::concat_channels(&[&up, &stem])?, mode)?;
        let outs = self.heads.iter().map(|hd| hd.forward(&h)).collect::<Result<Vec<_>, _>>()?;
        self.cache = Some(Cache { pool_argmax, head_input: h });
        Ok(Tensor::concat_channels(&outs.iter().collect::<Vec<_>>())?)
    }

    /// Inference with running statistics. Does not touch any training state,
    /// so it can run concurrently on a shared network.
    pub fn infer(&self, x: &Tensor<F>) -> Result<Tensor<F>> {
        self.check_input(x)?;
        let r = self.cfg.upsample_factor_per_stage;
        let stem = self.stem.infer(x)?;
        let mut cur = stem.clone();
        let mut feats = Vec::with_capacity(self.down.len());
        for d in &self.down {
            cur = d.infer(&cur)?;
            feats.push(cur.clone());
        }
        for rb in &self.res {
            cur = rb.infer(&cur)?;
        }
        let pooled = self
            .cfg
            .spp_kernels
            .iter()
            .map(|&k| max_pool_same(&cur, k).map(|p| p.output))
            .collect::<Result<Vec<_>, _>>()?;
        let mut parts = vec![&cur];
        parts.extend(pooled.iter());
        cur = self.spp_fuse.infer(&Tensor::concat_channels(&parts)?)?;
        let n_levels = feats.len();
        for (i, st) in self.dec.iter().enumerate() {
            let up = pixel_shuffle(&st.pre.infer(&cur)?, r)?;
            cur = st.post.infer(&Tensor::concat_channels(&[&up, &feats[n_levels - 2 - i]])?)?;
        }
        let up = pixel_shuffle(&self.final_pre.infer(&cur)?, r)?;
        let h = self.final_act.infer(&Tensor::concat_channels(&[&up, &stem])?)?;
        let outs = self.heads.iter().map(|hd| hd.forward(&h)).collect::<Result<Vec<_>, _>>()?;
        Ok(Tensor::concat_channels(&outs.iter().collect::<Vec<_>>())?)
    }

    /// Accumulates parameter gradients for the last training forward pass.
    pub fn backward(&mut self, grad_out: &Tensor<F>) -> Result<()> {
        let cache = self.cache.take().ok_or(Error::Nn(NnError::MissingCache("network")))?;
        let r = self.cfg.upsample_factor_per_stage;
        let h = &cache.head_input;
        let grads = grad_out.split_channels(&[1; 4])?;
        let mut g = Tensor::zeros(h.shape());
        for (head, gk) in self.heads.iter_mut().zip(&grads) {
            g.add_assign(&need(head.backward(h, gk, true)?)?)?;
        }
        let g_cat = need(self.final_act.backward(&g, true)?)?;
        let mut parts = g_cat.split_channels(&[g_cat.channels() - self.cfg.stem_channels, self.cfg.stem_channels])?;
        let stem_grad = parts.pop().expect("two parts");
        let g_up = parts.pop().expect("two parts");
        g = need(self.final_pre.backward(&pixel_unshuffle(&g_up, r)?, true)?)?;

        let n_levels = self.down.len();
        let mut skip_grads: Vec<Option<Tensor<F>>> = vec![None; n_levels];
        for (i, st) in self.dec.iter_mut().enumerate().rev() {
            let g_cat = need(st.post.backward(&g, true)?)?;
            let skip = n_levels - 2 - i;
            let up_ch = g_cat.channels() - self.cfg.channel_schedule[skip];
            let mut parts = g_cat.split_channels(&[up_ch, self.cfg.channel_schedule[skip]])?;
            skip_grads[skip] = parts.pop();
            let g_up = parts.pop().expect("two parts");
            g = need(st.pre.backward(&pixel_unshuffle(&g_up, r)?, true)?)?;
        }

        let g_cat = need(self.spp_fuse.backward(&g, true)?)?;
        let mut parts = g_cat.split_channels(&self.spp_widths())?.into_iter();
        g = parts.next().expect("identity branch");
        for (gp, argmax) in parts.zip(&cache.pool_argmax) {
            g.add_assign(&max_pool_same_backward(&gp, argmax))?;
        }
        for rb in self.res.iter_mut().rev() {
            g = rb.backward(&g)?;
        }
        for (j, d) in self.down.iter_mut().enumerate().rev() {
            if let Some(sg) = &skip_grads[j] {
                g.add_assign(sg)?;
            }
            g = need(d.backward(&g, true)?)?;
        }
        g.add_assign(&stem_grad)?;
        self.stem.backward(&g, false)?;
        Ok(())
    }

    /// Per-layer gradient norms, keyed by parameter path (trainable params only).
    pub fn grad_norms(&self) -> Vec<(String, f64)> {
        let mut out = Vec::new();
        self.visit_params("", &mut |name, p| {
            if p.trainable {
                out.push((name.to_string(), p.grad_norm()));
            }
        });
        out
    }
}

impl<F: Element> Module<F> for Network<F> {
    fn visit_params(&self, prefix: &str, f: &mut dyn FnMut(&str, &Param<F>)) {
        use pixgrasp_nn::join;
        self.stem.visit_params(&join(prefix, "stem"), f);
        for (i, d) in self.down.iter().enumerate() {
            d.visit_params(&join(prefix, &format!("down.{i}")), f);
        }
        for (i, rb) in self.res.iter().enumerate() {
            rb.a.visit_params(&join(prefix, &format!("res.{i}.a")), f);
            rb.b.visit_params(&join(prefix, &format!("res.{i}.b")), f);
        }
        self.spp_fuse.visit_params(&join(prefix, "spp.fuse"), f);
        for (i, st) in self.dec.iter().enumerate() {
            st.pre.visit_params(&join(prefix, &format!("dec.{i}.pre")), f);
            st.post.visit_params(&join(prefix, &format!("dec.{i}.post")), f);
        }
        self.final_pre.visit_params(&join(prefix, "final.pre"), f);
        self.final_act.visit_params(&join(prefix, "final.act"), f);
        for (h, name) in self.heads.iter().zip(HEAD_NAMES) {
            h.visit_params(&join(prefix, &format!("heads.{name}")), f);
        }
    }

    fn visit_params_mut(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &mut Param<F>)) {
        use pixgrasp_nn::join;
        self.stem.visit_params_mut(&join(prefix, "stem"), f);
        for (i, d) in self.down.iter_mut().enumerate() {
            d.visit_params_mut(&join(prefix, &format!("down.{i}")), f);
        }
        for (i, rb) in self.res.iter_mut().enumerate() {
            rb.a.visit_params_mut(&join(prefix, &format!("res.{i}.a")), f);
            rb.b.visit_params_mut(&join(prefix, &format!("res.{i}.b")), f);
        }
        self.spp_fuse.visit_params_mut(&join(prefix, "spp.fuse"), f);
        for (i, st) in self.dec.iter_mut().enumerate() {
            st.pre.visit_params_mut(&join(prefix, &format!("dec.{i}.pre")), f);
            st.post.visit_params_mut(&join(prefix, &format!("dec.{i}.post")), f);
        }
        self.final_pre.visit_params_mut(&join(prefix, "final.pre"), f);
        self.final_act.visit_params_mut(&join(prefix, "final.act"), f);
        for (h, name) in self.heads.iter_mut().zip(HEAD_NAMES) {
            h.visit_params_mut(&join(prefix, &format!("heads.{name}")), f);
        }
    }
}

/// Stride-1 same-padded max pooling at each kernel, concatenated after the
/// input along channels.
pub fn spp_pool<F: Element>(x: &Tensor<F>, kernels: &[usize]) -> Result<Tensor<F>> {
    let pooled = kernels
        .iter()
        .map(|&k| max_pool_same(x, k).map(|p| p.output))
        .collect::<Result<Vec<_>, _>>()?;
    let mut parts = vec![x];
    parts.extend(pooled.iter());
    Ok(Tensor::concat_channels(&parts)?)
}
