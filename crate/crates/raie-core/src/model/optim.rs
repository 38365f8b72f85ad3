//! AdamW (adaptive moments with decoupled weight decay) and global
//! gradient-norm clipping.

/// One optimizer instance per parameter tensor; moment buffers match the
/// tensor's flat length.
#[derive(Clone, Debug)]
pub struct AdamW {
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
    weight_decay: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
}

impl AdamW {
    pub fn new(param_count: usize, lr: f64, weight_decay: f64) -> Self {
        Self {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay,
            m: vec![0.0; param_count],
            v: vec![0.0; param_count],
            t: 0,
        }
    }

    /// One update: decay is applied directly to the weights (decoupled
    /// from the gradient), then the bias-corrected moment step.
    pub fn step(&mut self, params: &mut [f64], grads: &[f64]) {
        assert_eq!(params.len(), self.m.len());
        assert_eq!(grads.len(), self.m.len());
        self.t += 1;
        let bc1 = 1.0 - self.beta1.powi(self.t as i32);
        let bc2 = 1.0 - self.beta2.powi(self.t as i32);
        for i in 0..params.len() {
            params[i] -= self.lr * self.weight_decay * params[i];
            let g = grads[i];
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g;
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * g * g;
            let m_hat = self.m[i] / bc1;
            let v_hat = self.v[i] / bc2;
            params[i] -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
        }
    }
}

/// Scales all gradient tensors so their joint ℓ2 norm is at most
/// `max_norm`; returns the pre-clip norm.
pub fn clip_global_norm(grads: &mut [&mut [f64]], max_norm: f64) -> f64 {
    let sq: f64 = grads
        .iter()
        .flat_map(|g| g.iter())
        .map(|x| x * x)
        .sum();
    let norm = sq.sqrt();
    if norm > max_norm && norm > 0.0 {
        let scale = max_norm / norm;
        for g in grads.iter_mut() {
            for x in g.iter_mut() {
                *x *= scale;
            }
        }
    }
    norm
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimizes_a_quadratic_bowl() {
        // f(x) = (x − 3)², ∇f = 2(x − 3)
        let mut x = [0.0f64];
        let mut opt = AdamW::new(1, 0.05, 0.0);
        for _ in 0..2000 {
            let g = [2.0 * (x[0] - 3.0)];
            opt.step(&mut x, &g);
        }
        assert!((x[0] - 3.0).abs() < 1e-3, "ended at {}", x[0]);
    }

    #[test]
    fn weight_decay_is_decoupled_from_gradients() {
        // Zero gradients: the only movement is the multiplicative decay.
        let mut x = [2.0f64];
        let mut opt = AdamW::new(1, 0.1, 0.5);
        opt.step(&mut x, &[0.0]);
        assert!((x[0] - 2.0 * (1.0 - 0.1 * 0.5)).abs() < 1e-12);
    }

    #[test]
    fn clip_rescales_only_above_the_cap() {
        let mut a = vec![3.0, 0.0];
        let mut b = vec![0.0, 4.0];
        // Joint norm 5 > 1: rescale to norm 1.
        let n = clip_global_norm(&mut [&mut a, &mut b], 1.0);
        assert!((n - 5.0).abs() < 1e-12);
        assert!((a[0] - 0.6).abs() < 1e-12);
        assert!((b[1] - 0.8).abs() < 1e-12);

        let mut c = vec![0.1, 0.1];
        clip_global_norm(&mut [&mut c], 1.0);
        assert_eq!(c, vec![0.1, 0.1]);
    }
}
