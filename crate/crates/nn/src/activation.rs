use crate::element::Element;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Activation {
    Mish,
    Relu,
    Identity,
}

// tanh(softplus(x)) = n / (n + 2) with n = e^x (e^x + 2); one exp per element.
#[inline]
fn mish_parts<F: Element>(x: F) -> (F, F) {
    let two = F::one() + F::one();
    let e = x.exp();
    let n = e * (e + two);
    (n / (n + two), e)
}

#[inline]
pub fn mish<F: Element>(x: F) -> F {
    if x > F::from_f64_lossy(20.0) {
        return x;
    }
    x * mish_parts(x).0
}

#[inline]
pub fn mish_derivative<F: Element>(x: F) -> F {
    if x > F::from_f64_lossy(20.0) {
        return F::one();
    }
    let (t, e) = mish_parts(x);
    let sigmoid = e / (F::one() + e);
    t + x * (F::one() - t * t) * sigmoid
}

#[inline]
pub fn sigmoid<F: Element>(x: F) -> F {
    if x >= F::zero() {
        F::one() / (F::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (F::one() + e)
    }
}

impl Activation {
    pub fn apply<F: Element>(self, x: F) -> F {
        match self {
            Activation::Mish => mish(x),
            Activation::Relu => x.max(F::zero()),
            Activation::Identity => x,
        }
    }

    /// Derivative evaluated at the pre-activation value.
    pub fn derivative<F: Element>(self, x: F) -> F {
        match self {
            Activation::Mish => mish_derivative(x),
            Activation::Relu => {
                if x > F::zero() {
                    F::one()
                } else {
                    F::zero()
                }
            }
            Activation::Identity => F::one(),
        }
    }

    pub fn forward_inplace<F: Element>(self, data: &mut [F]) {
        if self != Activation::Identity {
            data.iter_mut().for_each(|v| *v = self.apply(*v));
        }
    }

    /// `grad *= act'(pre_activation)` element-wise.
    pub fn backward_inplace<F: Element>(self, pre_activation: &[F], grad: &mut [F]) {
        if self != Activation::Identity {
            for (g, &x) in grad.iter_mut().zip(pre_activation) {
                *g *= self.derivative(x);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mish_reference(x: f64) -> f64 {
        x * (1.0 + x.exp()).ln().tanh()
    }

    #[test]
    fn mish_matches_definition() {
        assert_eq!(mish(0.0f64), 0.0);
        for i in -200..=200 {
            let x = i as f64 * 0.1;
            assert!((mish(x) - mish_reference(x)).abs() < 1e-12, "x={x}");
        }
    }

    #[test]
    fn mish_derivative_matches_central_difference() {
        let h = 1e-6;
        for i in -100..=100 {
            let x = i as f64 * 0.07;
            let fd = (mish_reference(x + h) - mish_reference(x - h)) / (2.0 * h);
            assert!((mish_derivative(x) - fd).abs() < 1e-8, "x={x}");
        }
    }

    #[test]
    fn mish_second_difference_is_bounded() {
        let h = 1e-3;
        let worst = (-5000..=5000)
            .map(|i| {
                let x = i as f64 * 1e-3;
                ((mish(x + h) - 2.0 * mish(x) + mish(x - h)) / (h * h)).abs()
            })
            .fold(0.0, f64::max);
        // Analytic maximum of mish'' on [-5, 5] is ~0.6 (near the origin).
        assert!(worst < 1.0, "{worst}");
    }

    #[test]
    fn sigmoid_is_stable_at_extremes() {
        assert_eq!(sigmoid(-1000.0f64), 0.0);
        assert_eq!(sigmoid(1000.0f64), 1.0);
        assert!((sigmoid(0.0f32) - 0.5).abs() < 1e-7);
    }
}
