use crate::element::Element;
use crate::error::{NnError, Result};

/// Dense `N x C x H x W` tensor.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor<F> {
    shape: [usize; 4],
    data: Vec<F>,
}

impl<F: Element> Tensor<F> {
    pub fn zeros(shape: [usize; 4]) -> Self {
        Self { shape, data: vec![F::zero(); shape.iter().product()] }
    }

    pub fn full(shape: [usize; 4], value: F) -> Self {
        Self { shape, data: vec![value; shape.iter().product()] }
    }

    pub fn from_vec(shape: [usize; 4], data: Vec<F>) -> Result<Self> {
        let expected: usize = shape.iter().product();
        if data.len() != expected {
            return Err(NnError::Shape(format!(
                "buffer of {} elements cannot hold shape {:?} ({} elements)",
                data.len(),
                shape,
                expected
            )));
        }
        Ok(Self { shape, data })
    }

    pub fn shape(&self) -> [usize; 4] {
        self.shape
    }

    pub fn batch(&self) -> usize {
        self.shape[0]
    }

    pub fn channels(&self) -> usize {
        self.shape[1]
    }

    pub fn height(&self) -> usize {
        self.shape[2]
    }

    pub fn width(&self) -> usize {
        self.shape[3]
    }

    pub fn plane_len(&self) -> usize {
        self.shape[2] * self.shape[3]
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[F] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [F] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<F> {
        self.data
    }

    /// Contiguous `C x H x W` block of sample `n`.
    pub fn image(&self, n: usize) -> &[F] {
        let len = self.shape[1] * self.plane_len();
        &self.data[n * len..(n + 1) * len]
    }

    pub fn image_mut(&mut self, n: usize) -> &mut [F] {
        let len = self.shape[1] * self.plane_len();
        &mut self.data[n * len..(n + 1) * len]
    }

    pub fn plane(&self, n: usize, c: usize) -> &[F] {
        let p = self.plane_len();
        let start = (n * self.shape[1] + c) * p;
        &self.data[start..start + p]
    }

    pub fn plane_mut(&mut self, n: usize, c: usize) -> &mut [F] {
        let p = self.plane_len();
        let start = (n * self.shape[1] + c) * p;
        &mut self.data[start..start + p]
    }

    pub fn at(&self, n: usize, c: usize, y: usize, x: usize) -> F {
        self.data[((n * self.shape[1] + c) * self.shape[2] + y) * self.shape[3] + x]
    }

    pub fn set(&mut self, n: usize, c: usize, y: usize, x: usize, v: F) {
        let (c_, h, w) = (self.shape[1], self.shape[2], self.shape[3]);
        self.data[((n * c_ + c) * h + y) * w + x] = v;
    }

    pub fn map(&self, f: impl Fn(F) -> F) -> Self {
        Self { shape: self.shape, data: self.data.iter().map(|&v| f(v)).collect() }
    }

    pub fn ensure_same_shape(&self, other: &Self, what: &str) -> Result<()> {
        if self.shape != other.shape {
            return Err(NnError::Shape(format!(
                "{what}: {:?} vs {:?}",
                self.shape, other.shape
            )));
        }
        Ok(())
    }

    pub fn add_assign(&mut self, other: &Self) -> Result<()> {
        self.ensure_same_shape(other, "add")?;
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
        Ok(())
    }

    pub fn cast<G: Element>(&self) -> Tensor<G> {
        Tensor {
            shape: self.shape,
            data: self
                .data
                .iter()
                .map(|v| G::from_f64_lossy(v.to_f64().unwrap_or(f64::NAN)))
                .collect(),
        }
    }

    /// Concatenate along the channel axis.
    pub fn concat_channels(parts: &[&Tensor<F>]) -> Result<Self> {
        let first = parts
            .first()
            .ok_or_else(|| NnError::Shape("concat of zero tensors".into()))?;
        let [n, _, h, w] = first.shape;
        for p in parts {
            if p.shape[0] != n || p.shape[2] != h || p.shape[3] != w {
                return Err(NnError::Shape(format!(
                    "concat: {:?} vs {:?}",
                    first.shape, p.shape
                )));
            }
        }
        let c_total: usize = parts.iter().map(|p| p.shape[1]).sum();
        let mut data = Vec::with_capacity(n * c_total * h * w);
        for b in 0..n {
            for p in parts {
                data.extend_from_slice(p.image(b));
            }
        }
        Ok(Self { shape: [n, c_total, h, w], data })
    }

    /// Inverse of [`Tensor::concat_channels`]: split into groups of the given widths.
    pub fn split_channels(&self, widths: &[usize]) -> Result<Vec<Self>> {
        if widths.iter().sum::<usize>() != self.shape[1] {
            return Err(NnError::Shape(format!(
                "split {:?} does not cover {} channels",
                widths, self.shape[1]
            )));
        }
        let [n, _, h, w] = self.shape;
        let plane = h * w;
        let mut out: Vec<Self> = widths.iter().map(|&c| Self::zeros([n, c, h, w])).collect();
        for b in 0..n {
            let src = self.image(b);
            let mut offset = 0;
            for (t, &c) in out.iter_mut().zip(widths) {
                t.image_mut(b).copy_from_slice(&src[offset..offset + c * plane]);
                offset += c * plane;
            }
        }
        Ok(out)
    }

    /// Shift every sample by `(dy, dx)` pixels, filling vacated pixels with `fill`.
    pub fn shifted(&self, dy: isize, dx: isize, fill: F) -> Self {
        let [n, c, h, w] = self.shape;
        let mut out = Self::full(self.shape, fill);
        for b in 0..n {
            for ch in 0..c {
                let src = self.plane(b, ch);
                let dst = out.plane_mut(b, ch);
                for y in 0..h {
                    let sy = y as isize - dy;
                    if sy < 0 || sy >= h as isize {
                        continue;
                    }
                    for x in 0..w {
                        let sx = x as isize - dx;
                        if sx < 0 || sx >= w as isize {
                            continue;
                        }
                        dst[y * w + x] = src[sy as usize * w + sx as usize];
                    }
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn concat_then_split_restores_parts() {
        let a = Tensor::<f32>::from_vec([2, 1, 2, 2], (0..8).map(|v| v as f32).collect()).unwrap();
        let b = Tensor::<f32>::from_vec([2, 2, 2, 2], (0..16).map(|v| -(v as f32)).collect()).unwrap();
        let cat = Tensor::concat_channels(&[&a, &b]).unwrap();
        assert_eq!(cat.shape(), [2, 3, 2, 2]);
        assert_eq!(cat.plane(1, 0), a.plane(1, 0));
        assert_eq!(cat.plane(1, 2), b.plane(1, 1));
        let parts = cat.split_channels(&[1, 2]).unwrap();
        assert_eq!(parts[0], a);
        assert_eq!(parts[1], b);
    }

    #[test]
    fn from_vec_rejects_wrong_length() {
        assert!(Tensor::<f32>::from_vec([1, 1, 2, 2], vec![0.0; 3]).is_err());
    }
}
