//! Adam optimizer and the cosine-annealing learning-rate schedule.

use std::collections::BTreeMap;

use crate::graph::Graph;
use crate::params::ParamStore;
use crate::scalar::Scalar;
use crate::tensor::Tensor;

const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const EPS: f64 = 1e-8;

/// Per-parameter first/second moment estimates plus the shared step count.
pub struct AdamState<E: Scalar> {
    moments: BTreeMap<String, (Tensor<E>, Tensor<E>)>,
    step: u64,
}

impl<E: Scalar> Default for AdamState<E> {
    fn default() -> Self {
        Self::new()
    }
}

impl<E: Scalar> AdamState<E> {
    pub fn new() -> Self {
        AdamState {
            moments: BTreeMap::new(),
            step: 0,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// Apply one bias-corrected Adam update to every named leaf of `graph`
    /// that accumulated a gradient. Parameters with zero gradient and zero
    /// moments stay bit-identical.
    pub fn step(&mut self, store: &mut ParamStore<E>, graph: &Graph<E>, lr: f64) {
        self.step += 1;
        let t = self.step as i32;
        let bc1 = 1.0 - BETA1.powi(t);
        let bc2 = 1.0 - BETA2.powi(t);
        let (b1, b2) = (E::from_f64(BETA1), E::from_f64(BETA2));
        let (ob1, ob2) = (E::from_f64(1.0 - BETA1), E::from_f64(1.0 - BETA2));
        // lr * (m/bc1) / (sqrt(v/bc2) + eps)
        //   = (lr*sqrt(bc2)/bc1) * m / (sqrt(v) + eps*sqrt(bc2))
        let alpha = E::from_f64(lr * bc2.sqrt() / bc1);
        let eps_scaled = E::from_f64(EPS * bc2.sqrt());

        for (name, var) in graph.named_leaves() {
            if !graph.requires_grad(var) {
                continue;
            }
            let Some(grad) = graph.grad(var) else {
                continue;
            };
            let param = store.get_mut(&name);
            let (m, v) = self.moments.entry(name.clone()).or_insert_with(|| {
                (Tensor::zeros(param.shape()), Tensor::zeros(param.shape()))
            });
            assert_eq!(m.shape(), param.shape(), "moment shape for {name}");
            for (((p, &g), m_i), v_i) in param
                .data_mut()
                .iter_mut()
                .zip(grad.data())
                .zip(m.data_mut().iter_mut())
                .zip(v.data_mut().iter_mut())
            {
                *m_i = b1 * *m_i + ob1 * g;
                *v_i = b2 * *v_i + ob2 * g * g;
                *p -= alpha * *m_i / ((*v_i).sqrt() + eps_scaled);
            }
        }
    }
}

/// Cosine annealing from `initial` to `min_rate` over `total_epochs`.
#[derive(Clone, Copy, Debug)]
pub struct LrSchedule {
    pub initial: f64,
    pub total_epochs: usize,
    pub min_rate: f64,
}

impl LrSchedule {
    pub fn new(initial: f64, total_epochs: usize) -> Self {
        LrSchedule {
            initial,
            total_epochs,
            min_rate: 0.0,
        }
    }

    /// rate = min + 0.5 (init - min)(1 + cos(pi epoch / total));
    /// epochs past the end clamp to the minimum.
    pub fn rate(&self, epoch: usize) -> f64 {
        if epoch >= self.total_epochs {
            return self.min_rate;
        }
        let frac = epoch as f64 / self.total_epochs as f64;
        self.min_rate
            + 0.5 * (self.initial - self.min_rate) * (1.0 + (std::f64::consts::PI * frac).cos())
    }
}

/// Global-norm gradient clipping over the named leaves of a graph.
/// Returns the pre-clip norm. `max_norm <= 0` disables clipping.
pub fn clip_grad_norm<E: Scalar>(graph: &Graph<E>, max_norm: f64) -> f64 {
    let leaves = graph.named_leaves();
    let mut total = 0.0f64;
    for (_, var) in &leaves {
        if let Some(g) = graph.grad(*var) {
            for &x in g.data() {
                let x = x.to_f64();
                total += x * x;
            }
        }
    }
    let norm = total.sqrt();
    if max_norm > 0.0 && norm > max_norm {
        let scale = max_norm / norm;
        for (_, var) in &leaves {
            graph.scale_grad(*var, scale);
        }
    }
    norm
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Graph;
    use crate::params::ParamStore;

    fn one_step(grad: f64, param: f64, lr: f64, state: &mut AdamState<f64>) -> f64 {
        let mut store = ParamStore::new();
        store.insert("p", Tensor::scalar(param), true);
        let g: Graph<f64> = Graph::new();
        let p = g.param(&store, "p");
        let gv = g.mul_const(p, Tensor::scalar(grad));
        let loss = g.sum_all(gv);
        g.backward(loss);
        state.step(&mut store, &g, lr);
        store.get("p").item()
    }

    #[test]
    fn zero_grad_means_no_update() {
        let mut state = AdamState::new();
        let after = one_step(0.0, 1.5, 0.01, &mut state);
        assert_eq!(after, 1.5);
    }

    #[test]
    fn first_step_magnitude_close_to_lr() {
        // fresh state, grad g != 0: bias-corrected first step is
        // -lr * g / (|g| + eps') which has magnitude ~ lr
        let mut state = AdamState::new();
        let after = one_step(0.3, 1.0, 0.01, &mut state);
        let delta = after - 1.0;
        assert!(delta < 0.0);
        assert!((delta.abs() - 0.01).abs() < 1e-4, "delta {delta}");
    }

    #[test]
    fn two_steps_match_hand_computed_sequence() {
        // hand-evaluated Adam at 64-bit: constant gradient 0.2, lr 0.1
        let lr = 0.1;
        let grad = 0.2;
        let mut p = 1.0f64;
        let (mut m, mut v) = (0.0f64, 0.0f64);
        for t in 1..=2 {
            m = BETA1 * m + (1.0 - BETA1) * grad;
            v = BETA2 * v + (1.0 - BETA2) * grad * grad;
            let m_hat = m / (1.0 - BETA1.powi(t));
            let v_hat = v / (1.0 - BETA2.powi(t));
            p -= lr * m_hat / (v_hat.sqrt() + EPS);
        }
        let mut state = AdamState::new();
        let mut actual = 1.0;
        for _ in 0..2 {
            actual = one_step(grad, actual, lr, &mut state);
        }
        assert!(
            (actual - p).abs() < 1e-9,
            "optimizer {actual} vs oracle {p}"
        );
    }

    #[test]
    fn cosine_schedule_endpoints() {
        let s = LrSchedule::new(0.01, 80);
        assert_eq!(s.rate(0), 0.01);
        assert!((s.rate(40) - 0.005).abs() < 1e-12);
        assert_eq!(s.rate(80), 0.0);
        assert_eq!(s.rate(200), 0.0);
        // non-increasing
        let mut prev = f64::INFINITY;
        for e in 0..=80 {
            let r = s.rate(e);
            assert!(r <= prev + 1e-15);
            prev = r;
        }
    }
}
