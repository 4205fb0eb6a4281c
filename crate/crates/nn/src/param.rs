use crate::element::Element;

/// A named weight array with its accumulated gradient.
///
/// Buffers (e.g. batch-norm running statistics) are stored as non-trainable
/// params so that they travel through the same visitor into checkpoints.
#[derive(Clone, Debug)]
pub struct Param<F> {
    pub value: Vec<F>,
    pub grad: Vec<F>,
    pub shape: Vec<usize>,
    pub trainable: bool,
}

impl<F: Element> Param<F> {
    pub fn new(shape: Vec<usize>, value: Vec<F>) -> Self {
        debug_assert_eq!(shape.iter().product::<usize>(), value.len());
        let grad = vec![F::zero(); value.len()];
        Self { value, grad, shape, trainable: true }
    }

    pub fn zeros(shape: Vec<usize>) -> Self {
        let len = shape.iter().product();
        Self::new(shape, vec![F::zero(); len])
    }

    pub fn buffer(shape: Vec<usize>, value: Vec<F>) -> Self {
        Self { trainable: false, ..Self::new(shape, value) }
    }

    pub fn len(&self) -> usize {
        self.value.len()
    }

    pub fn is_empty(&self) -> bool {
        self.value.is_empty()
    }

    pub fn zero_grad(&mut self) {
        self.grad.iter_mut().for_each(|g| *g = F::zero());
    }

    pub fn grad_norm(&self) -> f64 {
        self.grad
            .iter()
            .map(|g| {
                let g = g.to_f64().unwrap_or(f64::NAN);
                g * g
            })
            .sum::<f64>()
            .sqrt()
    }
}

/// Anything owning params. Visiting order is stable and defines the
/// optimizer-state layout.
pub trait Module<F: Element> {
    fn visit_params(&self, prefix: &str, f: &mut dyn FnMut(&str, &Param<F>));
    fn visit_params_mut(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &mut Param<F>));

    fn num_trainable(&self) -> usize {
        let mut total = 0;
        self.visit_params("", &mut |_, p| {
            if p.trainable {
                total += p.len();
            }
        });
        total
    }

    fn zero_grad(&mut self) {
        self.visit_params_mut("", &mut |_, p| p.zero_grad());
    }
}

/// `prefix.name`, or `name` for an empty prefix.
pub fn join(prefix: &str, name: &str) -> String {
    if prefix.is_empty() {
        name.to_string()
    } else {
        format!("{prefix}.{name}")
    }
}
