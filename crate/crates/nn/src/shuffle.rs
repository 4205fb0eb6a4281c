//! Sub-pixel rearrangement: `(N, C*r*r, H, W) <-> (N, C, H*r, W*r)`.

use crate::element::Element;
use crate::error::{NnError, Result};
use crate::tensor::Tensor;

/// `out[n, c, y*r + i, x*r + j] = in[n, c*r*r + i*r + j, y, x]`.
pub fn pixel_shuffle<F: Element>(x: &Tensor<F>, r: usize) -> Result<Tensor<F>> {
    let [n, c_in, h, w] = x.shape();
    if r == 0 || c_in % (r * r) != 0 {
        return Err(NnError::Config(format!(
            "pixel shuffle x{r} needs channels divisible by {}, got {c_in}",
            r * r
        )));
    }
    let c = c_in / (r * r);
    let (oh, ow) = (h * r, w * r);
    let mut out = Tensor::zeros([n, c, oh, ow]);
    for b in 0..n {
        for ch in 0..c {
            for i in 0..r {
                for j in 0..r {
                    let src = x.plane(b, ch * r * r + i * r + j);
                    let dst = out.plane_mut(b, ch);
                    for y in 0..h {
                        let drow = &mut dst[(y * r + i) * ow..(y * r + i + 1) * ow];
                        for (xx, &v) in src[y * w..(y + 1) * w].iter().enumerate() {
                            drow[xx * r + j] = v;
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Exact inverse of [`pixel_shuffle`]; also its adjoint, so it carries gradients back.
pub fn pixel_unshuffle<F: Element>(x: &Tensor<F>, r: usize) -> Result<Tensor<F>> {
    let [n, c, oh, ow] = x.shape();
    if r == 0 || oh % r != 0 || ow % r != 0 {
        return Err(NnError::Shape(format!("cannot unshuffle {oh}x{ow} by {r}")));
    }
    let (h, w) = (oh / r, ow / r);
    let mut out = Tensor::zeros([n, c * r * r, h, w]);
    for b in 0..n {
        for ch in 0..c {
            let src = x.plane(b, ch).to_vec();
            for i in 0..r {
                for j in 0..r {
                    let dst = out.plane_mut(b, ch * r * r + i * r + j);
                    for y in 0..h {
                        let srow = &src[(y * r + i) * ow..(y * r + i + 1) * ow];
                        for xx in 0..w {
                            dst[y * w + xx] = srow[xx * r + j];
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn places_channel_groups_into_sub_pixels() {
        let x = Tensor::<f32>::from_vec([1, 4, 1, 1], vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let y = pixel_shuffle(&x, 2).unwrap();
        assert_eq!(y.shape(), [1, 1, 2, 2]);
        assert_eq!(y.data(), &[1.0, 2.0, 3.0, 4.0]);
    }

    #[test]
    fn indivisible_channels_are_rejected() {
        let x = Tensor::<f32>::zeros([1, 6, 2, 2]);
        assert!(matches!(pixel_shuffle(&x, 2), Err(NnError::Config(_))));
    }

    proptest! {
        #[test]
        fn unshuffle_inverts_shuffle(c in 1usize..4, h in 1usize..5, w in 1usize..5, seed in 0u32..1000) {
            let len = 4 * c * h * w;
            let data: Vec<f64> = (0..len).map(|i| ((i as u32).wrapping_mul(2654435761).wrapping_add(seed)) as f64).collect();
            let x = Tensor::from_vec([1, 4 * c, h, w], data).unwrap();
            let back = pixel_unshuffle(&pixel_shuffle(&x, 2).unwrap(), 2).unwrap();
            prop_assert_eq!(back, x);
        }
    }
}
