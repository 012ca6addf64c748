use super::net::IntentionNet;
use super::tensor::Real;

/// Learning rate for epoch `k`: `lr0 / (1 + k)`.
pub fn lr_at(lr0: f64, epoch: usize) -> f64 {
    lr0 / (1.0 + epoch as f64)
}

/// RMSprop with decoupled per-tensor state. The running square average is
/// refreshed before it scales the step.
#[derive(Clone, Debug, PartialEq)]
pub struct RmsProp<T> {
    pub rho: f64,
    pub eps: f64,
    cache: Vec<Vec<T>>,
}

impl<T: Real> RmsProp<T> {
    pub fn new(rho: f64, eps: f64) -> Self {
        Self {
            rho,
            eps,
            cache: Vec::new(),
        }
    }

    /// One update of tensor `slot`. With `l2 > 0` the gradient of
    /// `l2 * |w|^2` is added first.
    pub fn step_slice(&mut self, slot: usize, w: &mut [T], g: &[T], lr: f64, l2: f64) {
        while self.cache.len() <= slot {
            self.cache.push(Vec::new());
        }
        let c = &mut self.cache[slot];
        if c.len() != w.len() {
            *c = vec![T::zero(); w.len()];
        }
        let (rho, one_m) = (T::of(self.rho), T::of(1.0 - self.rho));
        let (lr, eps, l2x2) = (T::of(lr), T::of(self.eps), T::of(2.0 * l2));
        for ((wi, &gi), ci) in w.iter_mut().zip(g).zip(c.iter_mut()) {
            let gi = gi + l2x2 * *wi;
            *ci = rho * *ci + one_m * gi * gi;
            *wi -= lr * gi / (ci.sqrt() + eps);
        }
    }

    /// Updates every parameter of the net from its accumulated gradient;
    /// biases are exempt from L2.
    pub fn step(&mut self, net: &mut IntentionNet<T>, lr: f64, l2: f64) {
        for (slot, p) in net.params_mut().into_iter().enumerate() {
            let l2 = if p.decay { l2 } else { 0.0 };
            self.step_slice(slot, p.value, p.grad, lr, l2);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schedule_values() {
        assert_eq!(lr_at(1e-4, 0), 1e-4);
        assert_eq!(lr_at(1e-4, 1), 5e-5);
        assert_eq!(lr_at(1e-4, 3), 2.5e-5);
    }

    #[test]
    fn decay_alone_shrinks_weights() {
        let mut opt = RmsProp::<f64>::new(0.9, 1e-8);
        let mut w = vec![0.5, -0.3, 0.2];
        for _ in 0..10 {
            let before = w.clone();
            opt.step_slice(0, &mut w, &[0.0; 3], 1e-3, 1e-4);
            for (a, b) in w.iter().zip(&before) {
                assert!(a.abs() < b.abs() && a.signum() == b.signum());
            }
        }
    }
}
