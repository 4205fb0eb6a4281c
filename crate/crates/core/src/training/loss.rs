use ndarray::Array2;
use pixgrasp_nn::{Element, Tensor};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evaluation::NetworkOutput;
use crate::grasp::GraspMaps;

/// Per-plane Smooth-L1 terms; `total` is their sum.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub total: f64,
    pub quality_term: f64,
    pub angle_sin_term: f64,
    pub angle_cos_term: f64,
    pub width_term: f64,
}

impl LossBreakdown {
    pub fn from_terms(terms: [f64; 4]) -> Self {
        Self {
            total: terms.iter().sum(),
            quality_term: terms[0],
            angle_sin_term: terms[1],
            angle_cos_term: terms[2],
            width_term: terms[3],
        }
    }

    pub fn terms(&self) -> [f64; 4] {
        [self.quality_term, self.angle_sin_term, self.angle_cos_term, self.width_term]
    }

    pub fn is_finite(&self) -> bool {
        self.total.is_finite() && self.terms().iter().all(|t| t.is_finite())
    }
}

fn check_beta(beta: f64) -> Result<()> {
    if !(beta > 0.0) {
        return Err(Error::InvalidArgument(format!("smooth L1 beta must be positive, got {beta}")));
    }
    Ok(())
}

fn element_loss(d: f64, beta: f64) -> f64 {
    if d.abs() < beta {
        0.5 * d * d / beta
    } else {
        d.abs() - 0.5 * beta
    }
}

fn element_grad(d: f64, beta: f64) -> f64 {
    if d.abs() < beta {
        d / beta
    } else {
        d.signum()
    }
}

/// Mean Smooth-L1 between two equally sized buffers.
pub fn smooth_l1<F: Element>(x: &[F], y: &[F], beta: f64) -> Result<f64> {
    check_beta(beta)?;
    if x.len() != y.len() {
        return Err(Error::Shape(format!("smooth L1 over {} vs {} elements", x.len(), y.len())));
    }
    if x.is_empty() {
        return Ok(0.0);
    }
    let sum: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| element_loss(a.to_f64().unwrap_or(f64::NAN) - b.to_f64().unwrap_or(f64::NAN), beta))
        .sum();
    Ok(sum / x.len() as f64)
}

/// Smooth-L1 between two planes.
pub fn smooth_l1_planes(x: &Array2<f32>, y: &Array2<f32>, beta: f64) -> Result<f64> {
    if x.dim() != y.dim() {
        return Err(Error::Shape(format!("smooth L1 over planes {:?} vs {:?}", x.dim(), y.dim())));
    }
    let (x, y) = (x.as_standard_layout(), y.as_standard_layout());
    smooth_l1(x.as_slice().expect("standard layout"), y.as_slice().expect("standard layout"), beta)
}

/// Loss of one raw prediction against its labels. All four planes are
/// compared before any activation; the quality sigmoid belongs to decoding.
pub fn total_loss(pred: &NetworkOutput, gt: &GraspMaps, beta: f64) -> Result<LossBreakdown> {
    let raw = [&pred.quality, &pred.angle_sin, &pred.angle_cos, &pred.width];
    let mut terms = [0.0; 4];
    for (t, (p, g)) in terms.iter_mut().zip(raw.into_iter().zip(gt.planes())) {
        *t = smooth_l1_planes(p, g, beta)?;
    }
    Ok(LossBreakdown::from_terms(terms))
}

/// Batched loss and its gradient with respect to the raw `N x 4 x H x W`
/// network output. Each plane term is a mean over `N * H * W` pixels.
pub fn batch_loss<F: Element>(raw: &Tensor<F>, target: &Tensor<F>, beta: f64) -> Result<(LossBreakdown, Tensor<F>)> {
    check_beta(beta)?;
    raw.ensure_same_shape(target, "loss").map_err(Error::from)?;
    let [n, c, _, _] = raw.shape();
    if c != 4 {
        return Err(Error::Shape(format!("loss expects 4 planes, got {c}")));
    }
    let count = (n * raw.plane_len()) as f64;
    let mut grad = Tensor::zeros(raw.shape());
    let mut terms = [0.0; 4];
    for b in 0..n {
        for (ch, term) in terms.iter_mut().enumerate() {
            let (x, y) = (raw.plane(b, ch), target.plane(b, ch));
            let g = grad.plane_mut(b, ch);
            for i in 0..x.len() {
                let d = x[i].to_f64().unwrap_or(f64::NAN) - y[i].to_f64().unwrap_or(f64::NAN);
                *term += element_loss(d, beta);
                g[i] = F::from_f64_lossy(element_grad(d, beta) / count);
            }
        }
    }
    Ok((LossBreakdown::from_terms(terms.map(|t| t / count)), grad))
}

/// Whether each prediction sits on the quadratic side of the Smooth-L1 kink.
/// Used to keep finite differences off the kink.
pub fn branch_pattern<F: Element>(raw: &Tensor<F>, target: &Tensor<F>, beta: f64) -> Vec<bool> {
    raw.data()
        .iter()
        .zip(target.data())
        .map(|(&x, &y)| (x.to_f64().unwrap_or(f64::NAN) - y.to_f64().unwrap_or(f64::NAN)).abs() < beta)
        .collect()
}

/// Stacks label maps into an `N x 4 x H x W` target tensor.
pub fn batch_targets(maps: &[&GraspMaps]) -> Result<Tensor<f32>> {
    let first = maps.first().ok_or_else(|| Error::Shape("empty batch".into()))?;
    let (h, w) = first.dim();
    let mut data = Vec::with_capacity(maps.len() * 4 * h * w);
    for m in maps {
        if m.dim() != (h, w) {
            return Err(Error::Shape(format!("label maps {:?} vs {:?}", m.dim(), (h, w))));
        }
        for p in m.planes() {
            data.extend(p.iter().copied());
        }
    }
    Ok(Tensor::from_vec([maps.len(), 4, h, w], data)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_inputs_give_zero() {
        let x = [0.3f64, -2.0, 7.5];
        assert_eq!(smooth_l1(&x, &x, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn quadratic_and_linear_branches() {
        assert!((smooth_l1(&[0.5f64], &[0.0], 1.0).unwrap() - 0.125).abs() < 1e-12);
        assert!((smooth_l1(&[2.0f64], &[0.0], 1.0).unwrap() - 1.5).abs() < 1e-12);
        assert!((smooth_l1(&[-2.0f64], &[0.0], 1.0).unwrap() - 1.5).abs() < 1e-12);
    }

    #[test]
    fn branches_meet_at_beta() {
        for beta in [0.25, 1.0, 3.0] {
            let below = element_loss(beta - 1e-12, beta);
            let above = element_loss(beta, beta);
            assert!((below - above).abs() < 1e-9);
        }
    }

    #[test]
    fn single_plane_offset() {
        let gt = GraspMaps::zeros(4, 6);
        let mut quality = Array2::zeros((4, 6));
        quality.fill(0.5);
        let pred = NetworkOutput { quality, angle_sin: gt.angle_sin.clone(), angle_cos: gt.angle_cos.clone(), width: gt.width.clone() };
        let l = total_loss(&pred, &gt, 1.0).unwrap();
        assert!((l.total - 0.125).abs() < 1e-12);
        assert!((l.quality_term - 0.125).abs() < 1e-12);
        assert_eq!(l.terms()[1..], [0.0; 3]);
    }

    #[test]
    fn mismatched_lengths_and_bad_beta_are_errors() {
        assert!(matches!(smooth_l1(&[0.0f64; 2], &[0.0; 3], 1.0), Err(Error::Shape(_))));
        assert!(matches!(smooth_l1(&[0.0f64], &[0.0], 0.0), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn batch_loss_agrees_with_per_image_loss() {
        let (h, w) = (3, 5);
        let raw_data: Vec<f32> = (0..2 * 4 * h * w).map(|i| ((i * 37 % 23) as f32 - 11.0) / 4.0).collect();
        let tgt_data: Vec<f32> = (0..2 * 4 * h * w).map(|i| ((i * 11 % 7) as f32) / 7.0).collect();
        let raw = Tensor::from_vec([2, 4, h, w], raw_data).unwrap();
        let tgt = Tensor::from_vec([2, 4, h, w], tgt_data).unwrap();
        let (batch, _) = batch_loss(&raw, &tgt, 1.0).unwrap();
        let outs = NetworkOutput::from_batch(&raw).unwrap();
        let mut mean = [0.0; 4];
        for (b, out) in outs.iter().enumerate() {
            let plane = |ch| Array2::from_shape_vec((h, w), tgt.plane(b, ch).to_vec()).unwrap();
            let gt = GraspMaps::from_planes(plane(0), plane(1), plane(2), plane(3)).unwrap();
            let l = total_loss(out, &gt, 1.0).unwrap();
            for (m, t) in mean.iter_mut().zip(l.terms()) {
                *m += t / 2.0;
            }
        }
        for (a, b) in batch.terms().iter().zip(mean) {
            assert!((a - b).abs() < 1e-6, "{a} vs {b}");
        }
        assert!((batch.total - batch.terms().iter().sum::<f64>()).abs() < 1e-12);
    }
}
