use crate::element::Element;
use crate::param::Module;

/// Adam with bias correction.
#[derive(Clone, Debug)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    step: u64,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl Adam {
    pub fn new(lr: f64) -> Self {
        Self { lr, beta1: 0.9, beta2: 0.999, eps: 1e-8, step: 0, m: Vec::new(), v: Vec::new() }
    }

    pub fn steps_taken(&self) -> u64 {
        self.step
    }

    /// Applies one update to every trainable param from its accumulated gradient.
    /// Moment state is matched to params by visiting order.
    pub fn step<F: Element, M: Module<F> + ?Sized>(&mut self, module: &mut M) {
        self.step += 1;
        let t = self.step as i32;
        let bc1 = 1.0 - self.beta1.powi(t);
        let bc2 = 1.0 - self.beta2.powi(t);
        let (b1, b2, lr, eps) = (self.beta1, self.beta2, self.lr, self.eps);
        let (ms, vs) = (&mut self.m, &mut self.v);
        let mut slot = 0;
        module.visit_params_mut("", &mut |_, p| {
            if !p.trainable {
                return;
            }
            if ms.len() <= slot {
                ms.push(vec![0.0; p.len()]);
                vs.push(vec![0.0; p.len()]);
            }
            let (m, v) = (&mut ms[slot], &mut vs[slot]);
            for i in 0..p.len() {
                let g = p.grad[i].to_f64().unwrap_or(f64::NAN);
                m[i] = b1 * m[i] + (1.0 - b1) * g;
                v[i] = b2 * v[i] + (1.0 - b2) * g * g;
                let update = lr * (m[i] / bc1) / ((v[i] / bc2).sqrt() + eps);
                p.value[i] -= F::from_f64_lossy(update);
            }
            slot += 1;
        });
    }
}
