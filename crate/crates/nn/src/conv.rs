//! 2-D convolution lowered to GEMM via im2col.

use rand::Rng;

use crate::element::{gemm, Element, MatRef};
use crate::error::{NnError, Result};
use crate::param::{join, Module, Param};
use crate::tensor::Tensor;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Conv2dConfig {
    pub in_channels: usize,
    pub out_channels: usize,
    pub kernel_size: usize,
    pub stride: usize,
    pub padding: usize,
    pub bias: bool,
}

impl Conv2dConfig {
    /// Stride-1 convolution whose output keeps the input's spatial size.
    pub fn same(in_channels: usize, out_channels: usize, kernel_size: usize) -> Self {
        Self { in_channels, out_channels, kernel_size, stride: 1, padding: kernel_size / 2, bias: false }
    }

    pub fn with_stride(mut self, stride: usize) -> Self {
        self.stride = stride;
        self
    }

    pub fn with_bias(mut self, bias: bool) -> Self {
        self.bias = bias;
        self
    }

    fn is_pointwise(&self) -> bool {
        self.kernel_size == 1 && self.stride == 1 && self.padding == 0
    }

    fn patch_len(&self) -> usize {
        self.in_channels * self.kernel_size * self.kernel_size
    }
}

#[derive(Clone, Debug)]
pub struct Conv2d<F> {
    cfg: Conv2dConfig,
    /// `[out, in * k * k]`, row-major.
    pub weight: Param<F>,
    pub bias: Option<Param<F>>,
}

impl<F: Element> Conv2d<F> {
    /// Fan-in scaled uniform init (`U(-b, b)`, `b = sqrt(6 / fan_in)`), zero bias.
    pub fn new(cfg: Conv2dConfig, rng: &mut impl Rng) -> Self {
        let fan_in = cfg.patch_len().max(1);
        let bound = (6.0 / fan_in as f64).sqrt();
        let value = (0..cfg.out_channels * fan_in)
            .map(|_| F::from_f64_lossy(rng.random_range(-bound..bound)))
            .collect();
        Self::from_weights(cfg, value, cfg.bias.then(|| vec![F::zero(); cfg.out_channels]))
    }

    pub fn from_weights(cfg: Conv2dConfig, weight: Vec<F>, bias: Option<Vec<F>>) -> Self {
        let k = cfg.kernel_size;
        let weight = Param::new(vec![cfg.out_channels, cfg.in_channels, k, k], weight);
        let bias = bias.map(|b| Param::new(vec![cfg.out_channels], b));
        Self { cfg: Conv2dConfig { bias: bias.is_some(), ..cfg }, weight, bias }
    }

    pub fn config(&self) -> &Conv2dConfig {
        &self.cfg
    }

    pub fn output_size(&self, h: usize, w: usize) -> (usize, usize) {
        let Conv2dConfig { kernel_size: k, stride: s, padding: p, .. } = self.cfg;
        ((h + 2 * p - k) / s + 1, (w + 2 * p - k) / s + 1)
    }

    fn check_input(&self, x: &Tensor<F>) -> Result<()> {
        if x.channels() != self.cfg.in_channels {
            return Err(NnError::Shape(format!(
                "conv expects {} input channels, got {}",
                self.cfg.in_channels,
                x.channels()
            )));
        }
        if x.height() + 2 * self.cfg.padding < self.cfg.kernel_size
            || x.width() + 2 * self.cfg.padding < self.cfg.kernel_size
        {
            return Err(NnError::Shape(format!(
                "input {}x{} smaller than kernel {}",
                x.height(),
                x.width(),
                self.cfg.kernel_size
            )));
        }
        Ok(())
    }

    pub fn forward(&self, x: &Tensor<F>) -> Result<Tensor<F>> {
        self.check_input(x)?;
        let [n, _, h, w] = x.shape();
        let (oh, ow) = self.output_size(h, w);
        let (co, k_len, p) = (self.cfg.out_channels, self.cfg.patch_len(), oh * ow);
        let mut out = Tensor::zeros([n, co, oh, ow]);
        let mut cols = if self.cfg.is_pointwise() { Vec::new() } else { vec![F::zero(); k_len * p] };
        for b in 0..n {
            let rhs: &[F] = if self.cfg.is_pointwise() {
                x.image(b)
            } else {
                im2col(x.image(b), &self.cfg, h, w, oh, ow, &mut cols);
                &cols
            };
            let dst = out.image_mut(b);
            gemm(
                F::one(),
                MatRef::row_major(&self.weight.value, co, k_len),
                MatRef::row_major(rhs, k_len, p),
                F::zero(),
                dst,
            );
            if let Some(bias) = &self.bias {
                for (row, &bv) in dst.chunks_mut(p).zip(&bias.value) {
                    row.iter_mut().for_each(|v| *v += bv);
                }
            }
        }
        Ok(out)
    }

    /// Accumulates weight/bias gradients; returns the input gradient when requested.
    pub fn backward(
        &mut self,
        x: &Tensor<F>,
        grad_out: &Tensor<F>,
        input_grad: bool,
    ) -> Result<Option<Tensor<F>>> {
        self.check_input(x)?;
        let [n, _, h, w] = x.shape();
        let (oh, ow) = self.output_size(h, w);
        let (co, k_len, p) = (self.cfg.out_channels, self.cfg.patch_len(), oh * ow);
        if grad_out.shape() != [n, co, oh, ow] {
            return Err(NnError::Shape(format!(
                "conv grad {:?}, expected {:?}",
                grad_out.shape(),
                [n, co, oh, ow]
            )));
        }
        let pointwise = self.cfg.is_pointwise();
        let mut cols = if pointwise { Vec::new() } else { vec![F::zero(); k_len * p] };
        let mut dcols = if input_grad && !pointwise { vec![F::zero(); k_len * p] } else { Vec::new() };
        let mut dx = input_grad.then(|| Tensor::zeros(x.shape()));
        for b in 0..n {
            let dout = grad_out.image(b);
            let rhs: &[F] = if pointwise {
                x.image(b)
            } else {
                im2col(x.image(b), &self.cfg, h, w, oh, ow, &mut cols);
                &cols
            };
            gemm(
                F::one(),
                MatRef::row_major(dout, co, p),
                MatRef::row_major_t(rhs, k_len, p),
                F::one(),
                &mut self.weight.grad,
            );
            if let Some(bias) = &mut self.bias {
                for (g, row) in bias.grad.iter_mut().zip(dout.chunks(p)) {
                    *g += row.iter().copied().sum::<F>();
                }
            }
            if let Some(dx) = dx.as_mut() {
                let wt = MatRef::row_major_t(&self.weight.value, co, k_len);
                if pointwise {
                    gemm(F::one(), wt, MatRef::row_major(dout, co, p), F::zero(), dx.image_mut(b));
                } else {
                    gemm(F::one(), wt, MatRef::row_major(dout, co, p), F::zero(), &mut dcols);
                    col2im(&dcols, &self.cfg, h, w, oh, ow, dx.image_mut(b));
                }
            }
        }
        Ok(dx)
    }
}

impl<F: Element> Module<F> for Conv2d<F> {
    fn visit_params(&self, prefix: &str, f: &mut dyn FnMut(&str, &Param<F>)) {
        f(&join(prefix, "weight"), &self.weight);
        if let Some(b) = &self.bias {
            f(&join(prefix, "bias"), b);
        }
    }

    fn visit_params_mut(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &mut Param<F>)) {
        f(&join(prefix, "weight"), &mut self.weight);
        if let Some(b) = &mut self.bias {
            f(&join(prefix, "bias"), b);
        }
    }
}

/// Range of output columns `ox` whose input column `ox + shift` lies in `[0, w)`
/// for stride 1.
fn valid_span(shift: isize, w: usize, ow: usize) -> (usize, usize) {
    let lo = (-shift).clamp(0, ow as isize) as usize;
    let hi = (w as isize - shift).clamp(lo as isize, ow as isize) as usize;
    (lo, hi)
}

fn im2col<F: Element>(
    x: &[F],
    cfg: &Conv2dConfig,
    h: usize,
    w: usize,
    oh: usize,
    ow: usize,
    cols: &mut [F],
) {
    let (k, s, pad) = (cfg.kernel_size, cfg.stride, cfg.padding as isize);
    let p = oh * ow;
    for ci in 0..cfg.in_channels {
        let plane = &x[ci * h * w..(ci + 1) * h * w];
        for ky in 0..k {
            for kx in 0..k {
                let row = (ci * k + ky) * k + kx;
                let dst = &mut cols[row * p..(row + 1) * p];
                let shift = kx as isize - pad;
                for oy in 0..oh {
                    let drow = &mut dst[oy * ow..(oy + 1) * ow];
                    let iy = (oy * s) as isize + ky as isize - pad;
                    if iy < 0 || iy >= h as isize {
                        drow.fill(F::zero());
                        continue;
                    }
                    let src = &plane[iy as usize * w..(iy as usize + 1) * w];
                    if s == 1 {
                        let (lo, hi) = valid_span(shift, w, ow);
                        drow[..lo].fill(F::zero());
                        let start = (lo as isize + shift) as usize;
                        drow[lo..hi].copy_from_slice(&src[start..start + (hi - lo)]);
                        drow[hi..].fill(F::zero());
                    } else {
                        for (ox, d) in drow.iter_mut().enumerate() {
                            let ix = (ox * s) as isize + shift;
                            *d = if ix >= 0 && ix < w as isize { src[ix as usize] } else { F::zero() };
                        }
                    }
                }
            }
        }
    }
}

fn col2im<F: Element>(
    cols: &[F],
    cfg: &Conv2dConfig,
    h: usize,
    w: usize,
    oh: usize,
    ow: usize,
    dx: &mut [F],
) {
    let (k, s, pad) = (cfg.kernel_size, cfg.stride, cfg.padding as isize);
    let p = oh * ow;
    dx.fill(F::zero());
    for ci in 0..cfg.in_channels {
        let plane = &mut dx[ci * h * w..(ci + 1) * h * w];
        for ky in 0..k {
            for kx in 0..k {
                let row = (ci * k + ky) * k + kx;
                let src = &cols[row * p..(row + 1) * p];
                let shift = kx as isize - pad;
                for oy in 0..oh {
                    let iy = (oy * s) as isize + ky as isize - pad;
                    if iy < 0 || iy >= h as isize {
                        continue;
                    }
                    let srow = &src[oy * ow..(oy + 1) * ow];
                    let drow = &mut plane[iy as usize * w..(iy as usize + 1) * w];
                    if s == 1 {
                        let (lo, hi) = valid_span(shift, w, ow);
                        let start = (lo as isize + shift) as usize;
                        for (d, &v) in drow[start..start + (hi - lo)].iter_mut().zip(&srow[lo..hi]) {
                            *d += v;
                        }
                    } else {
                        for (ox, &v) in srow.iter().enumerate() {
                            let ix = (ox * s) as isize + shift;
                            if ix >= 0 && ix < w as isize {
                                drow[ix as usize] += v;
                            }
                        }
                    }
                }
            }
        }
    }
}
