//! Stride-1, same-padded max pooling (the building block of spatial pyramid pooling).

use crate::element::Element;
use crate::error::{NnError, Result};
use crate::tensor::Tensor;

/// Output plus, for every output element, the flat in-plane index of the
/// input element that produced it.
#[derive(Clone, Debug)]
pub struct PoolOutput<F> {
    pub output: Tensor<F>,
    pub argmax: Vec<u32>,
}

/// Max over the `k x k` window centred on each pixel; windows are clipped at the
/// border, which is equivalent to `-inf` padding. Ties resolve to the first
/// element in row-major order.
pub fn max_pool_same<F: Element>(x: &Tensor<F>, kernel: usize) -> Result<PoolOutput<F>> {
    if kernel % 2 == 0 || kernel == 0 {
        return Err(NnError::Config(format!("pool kernel must be odd, got {kernel}")));
    }
    let [n, c, h, w] = x.shape();
    let r = kernel / 2;
    let mut output = Tensor::zeros(x.shape());
    let mut argmax = vec![0u32; x.len()];
    // Horizontal pass keeps the column of the row-wise winner.
    let mut row_val = vec![F::zero(); h * w];
    let mut row_col = vec![0u32; h * w];
    for b in 0..n {
        for ch in 0..c {
            let src = x.plane(b, ch);
            for y in 0..h {
                for xx in 0..w {
                    let lo = xx.saturating_sub(r);
                    let hi = (xx + r).min(w - 1);
                    let mut best = lo;
                    for cx in lo + 1..=hi {
                        if src[y * w + cx] > src[y * w + best] {
                            best = cx;
                        }
                    }
                    row_val[y * w + xx] = src[y * w + best];
                    row_col[y * w + xx] = best as u32;
                }
            }
            let plane_off = (b * c + ch) * h * w;
            let dst = output.plane_mut(b, ch);
            for y in 0..h {
                let lo = y.saturating_sub(r);
                let hi = (y + r).min(h - 1);
                for xx in 0..w {
                    let mut best = lo;
                    for cy in lo + 1..=hi {
                        if row_val[cy * w + xx] > row_val[best * w + xx] {
                            best = cy;
                        }
                    }
                    dst[y * w + xx] = row_val[best * w + xx];
                    argmax[plane_off + y * w + xx] = (best * w) as u32 + row_col[best * w + xx];
                }
            }
        }
    }
    Ok(PoolOutput { output, argmax })
}

/// Routes each output gradient back to its winning input element.
pub fn max_pool_same_backward<F: Element>(grad_out: &Tensor<F>, argmax: &[u32]) -> Tensor<F> {
    let [n, c, _, _] = grad_out.shape();
    let mut dx = Tensor::zeros(grad_out.shape());
    let p = grad_out.plane_len();
    for b in 0..n {
        for ch in 0..c {
            let off = (b * c + ch) * p;
            let g = grad_out.plane(b, ch);
            let d = dx.plane_mut(b, ch);
            for (i, &gv) in g.iter().enumerate() {
                d[argmax[off + i] as usize] += gv;
            }
        }
    }
    dx
}
