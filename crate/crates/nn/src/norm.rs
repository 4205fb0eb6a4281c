use crate::element::Element;
use crate::error::{NnError, Result};
use crate::param::{join, Module, Param};
use crate::tensor::Tensor;

/// Per-channel batch normalization. Batch statistics in training, running
/// statistics in inference.
#[derive(Clone, Debug)]
pub struct BatchNorm2d<F> {
    pub gamma: Param<F>,
    pub beta: Param<F>,
    pub running_mean: Param<F>,
    pub running_var: Param<F>,
    pub momentum: f64,
    pub eps: f64,
}

/// What backward needs from a training-mode forward.
#[derive(Clone, Debug)]
pub struct BnCache<F> {
    x_hat: Tensor<F>,
    inv_std: Vec<f64>,
}

impl<F: Element> BatchNorm2d<F> {
    pub fn new(channels: usize) -> Self {
        Self {
            gamma: Param::new(vec![channels], vec![F::one(); channels]),
            beta: Param::zeros(vec![channels]),
            running_mean: Param::buffer(vec![channels], vec![F::zero(); channels]),
            running_var: Param::buffer(vec![channels], vec![F::one(); channels]),
            momentum: 0.1,
            eps: 1e-5,
        }
    }

    pub fn channels(&self) -> usize {
        self.gamma.len()
    }

    fn check(&self, x: &Tensor<F>) -> Result<()> {
        if x.channels() != self.channels() {
            return Err(NnError::Shape(format!(
                "batch norm over {} channels got {}",
                self.channels(),
                x.channels()
            )));
        }
        Ok(())
    }

    pub fn forward_eval(&self, x: &Tensor<F>) -> Result<Tensor<F>> {
        self.check(x)?;
        let mut y = x.clone();
        let [n, c, _, _] = x.shape();
        for ch in 0..c {
            let mean = self.running_mean.value[ch];
            let inv = F::one() / (self.running_var.value[ch] + F::from_f64_lossy(self.eps)).sqrt();
            let scale = self.gamma.value[ch] * inv;
            let shift = self.beta.value[ch] - mean * scale;
            for b in 0..n {
                y.plane_mut(b, ch).iter_mut().for_each(|v| *v = *v * scale + shift);
            }
        }
        Ok(y)
    }

    /// Normalizes with batch statistics and updates the running estimates.
    pub fn forward_train(&mut self, x: &Tensor<F>) -> Result<(Tensor<F>, BnCache<F>)> {
        self.check(x)?;
        let [n, c, h, w] = x.shape();
        let count = (n * h * w) as f64;
        let mut x_hat = x.clone();
        let mut y = x.clone();
        let mut inv_std = vec![0.0; c];
        for ch in 0..c {
            let mut sum = 0.0;
            for b in 0..n {
                sum += x.plane(b, ch).iter().map(|v| v.to_f64().unwrap_or(0.0)).sum::<f64>();
            }
            let mean = sum / count;
            let mut sq = 0.0;
            for b in 0..n {
                sq += x
                    .plane(b, ch)
                    .iter()
                    .map(|v| {
                        let d = v.to_f64().unwrap_or(0.0) - mean;
                        d * d
                    })
                    .sum::<f64>();
            }
            let var = sq / count;
            let inv = 1.0 / (var + self.eps).sqrt();
            inv_std[ch] = inv;
            let (mean_f, inv_f) = (F::from_f64_lossy(mean), F::from_f64_lossy(inv));
            let (g, bt) = (self.gamma.value[ch], self.beta.value[ch]);
            for b in 0..n {
                let xh = x_hat.plane_mut(b, ch);
                xh.iter_mut().for_each(|v| *v = (*v - mean_f) * inv_f);
                let yp = y.plane_mut(b, ch);
                for (o, &z) in yp.iter_mut().zip(x_hat.plane(b, ch)) {
                    *o = g * z + bt;
                }
            }
            let m = self.momentum;
            let unbiased = if count > 1.0 { var * count / (count - 1.0) } else { var };
            let rm = &mut self.running_mean.value[ch];
            *rm = F::from_f64_lossy((1.0 - m) * rm.to_f64().unwrap_or(0.0) + m * mean);
            let rv = &mut self.running_var.value[ch];
            *rv = F::from_f64_lossy((1.0 - m) * rv.to_f64().unwrap_or(1.0) + m * unbiased);
        }
        Ok((y, BnCache { x_hat, inv_std }))
    }

    pub fn backward(&mut self, cache: &BnCache<F>, grad_out: &Tensor<F>) -> Result<Tensor<F>> {
        cache.x_hat.ensure_same_shape(grad_out, "batch norm backward")?;
        let [n, c, h, w] = grad_out.shape();
        let count = (n * h * w) as f64;
        let mut dx = Tensor::zeros(grad_out.shape());
        for ch in 0..c {
            let mut sum_dy = 0.0;
            let mut sum_dy_xhat = 0.0;
            for b in 0..n {
                for (&dy, &xh) in grad_out.plane(b, ch).iter().zip(cache.x_hat.plane(b, ch)) {
                    let dy = dy.to_f64().unwrap_or(0.0);
                    sum_dy += dy;
                    sum_dy_xhat += dy * xh.to_f64().unwrap_or(0.0);
                }
            }
            self.gamma.grad[ch] += F::from_f64_lossy(sum_dy_xhat);
            self.beta.grad[ch] += F::from_f64_lossy(sum_dy);
            let g = self.gamma.value[ch].to_f64().unwrap_or(0.0);
            let k = g * cache.inv_std[ch];
            let mean_dy = F::from_f64_lossy(sum_dy / count);
            let mean_dy_xhat = F::from_f64_lossy(sum_dy_xhat / count);
            let k = F::from_f64_lossy(k);
            for b in 0..n {
                let dxp = dx.plane_mut(b, ch);
                for ((d, &dy), &xh) in dxp.iter_mut().zip(grad_out.plane(b, ch)).zip(cache.x_hat.plane(b, ch)) {
                    *d = k * (dy - mean_dy - xh * mean_dy_xhat);
                }
            }
        }
        Ok(dx)
    }
}

impl<F: Element> Module<F> for BatchNorm2d<F> {
    fn visit_params(&self, prefix: &str, f: &mut dyn FnMut(&str, &Param<F>)) {
        f(&join(prefix, "weight"), &self.gamma);
        f(&join(prefix, "bias"), &self.beta);
        f(&join(prefix, "running_mean"), &self.running_mean);
        f(&join(prefix, "running_var"), &self.running_var);
    }

    fn visit_params_mut(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &mut Param<F>)) {
        f(&join(prefix, "weight"), &mut self.gamma);
        f(&join(prefix, "bias"), &mut self.beta);
        f(&join(prefix, "running_mean"), &mut self.running_mean);
        f(&join(prefix, "running_var"), &mut self.running_var);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn training_output_is_standardized_per_channel() {
        let mut bn = BatchNorm2d::<f64>::new(2);
        let data: Vec<f64> = (0..32).map(|v| (v as f64).powi(2) * 0.1).collect();
        let x = Tensor::from_vec([2, 2, 2, 4], data).unwrap();
        let (y, _) = bn.forward_train(&x).unwrap();
        for ch in 0..2 {
            let vals: Vec<f64> = (0..2).flat_map(|b| y.plane(b, ch).to_vec()).collect();
            let mean = vals.iter().sum::<f64>() / vals.len() as f64;
            let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / vals.len() as f64;
            assert!(mean.abs() < 1e-12);
            assert!((var - 1.0).abs() < 1e-3);
        }
    }

    #[test]
    fn eval_with_matching_running_stats_reproduces_training_output() {
        let mut bn = BatchNorm2d::<f64>::new(1);
        bn.momentum = 1.0;
        let x = Tensor::from_vec([1, 1, 1, 5], vec![1.0, 2.0, 4.0, 8.0, 16.0]).unwrap();
        let (y_train, _) = bn.forward_train(&x).unwrap();
        // Running variance is unbiased; undo that to compare.
        bn.running_var.value[0] *= 4.0 / 5.0;
        let y_eval = bn.forward_eval(&x).unwrap();
        for (a, b) in y_train.data().iter().zip(y_eval.data()) {
            assert!((a - b).abs() < 1e-9);
        }
    }
}
