//! AdamW with decoupled weight decay, plus the multi-step learning-rate
//! schedule (rate multiplied by gamma at each milestone epoch).

use super::Tensor;

#[derive(Debug, Clone, Copy)]
pub struct AdamWConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
}

impl Default for AdamWConfig {
    fn default() -> Self {
        AdamWConfig {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay: 0.01,
        }
    }
}

/// Optimizer state bound to a fixed parameter list (by position).
pub struct AdamW {
    config: AdamWConfig,
    step: u64,
    first_moment: Vec<Vec<f64>>,
    second_moment: Vec<Vec<f64>>,
}

impl AdamW {
    pub fn new(params: &[Tensor], config: AdamWConfig) -> AdamW {
        AdamW {
            config,
            step: 0,
            first_moment: params.iter().map(|p| vec![0.0; p.len()]).collect(),
            second_moment: params.iter().map(|p| vec![0.0; p.len()]).collect(),
        }
    }

    pub fn set_lr(&mut self, lr: f64) {
        self.config.lr = lr;
    }

    pub fn lr(&self) -> f64 {
        self.config.lr
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// One update from the gradients currently stored on the parameters.
    /// Decoupled weight decay is applied first, then the bias-corrected
    /// moment update.
    pub fn step(&mut self, params: &[Tensor]) {
        assert_eq!(params.len(), self.first_moment.len(), "parameter list changed");
        self.step += 1;
        let t = self.step as f64;
        let c = self.config;
        let bc1 = 1.0 - c.beta1.powf(t);
        let bc2 = 1.0 - c.beta2.powf(t);
        for (i, p) in params.iter().enumerate() {
            let grad = p.grad();
            let mut values = p.to_vec();
            let m = &mut self.first_moment[i];
            let v = &mut self.second_moment[i];
            for j in 0..values.len() {
                values[j] -= c.lr * c.weight_decay * values[j];
                m[j] = c.beta1 * m[j] + (1.0 - c.beta1) * grad[j];
                v[j] = c.beta2 * v[j] + (1.0 - c.beta2) * grad[j] * grad[j];
                let m_hat = m[j] / bc1;
                let v_hat = v[j] / bc2;
                values[j] -= c.lr * m_hat / (v_hat.sqrt() + c.eps);
            }
            p.set_values(&values);
        }
    }

    /// Moment buffers and step counter, for checkpointing.
    pub fn state(&self) -> (u64, &[Vec<f64>], &[Vec<f64>]) {
        (self.step, &self.first_moment, &self.second_moment)
    }

    pub fn restore_state(&mut self, step: u64, first: Vec<Vec<f64>>, second: Vec<Vec<f64>>) {
        assert_eq!(first.len(), self.first_moment.len());
        assert_eq!(second.len(), self.second_moment.len());
        self.step = step;
        self.first_moment = first;
        self.second_moment = second;
    }
}

/// `base_lr * gamma^(number of milestones <= epoch)`.
pub fn multistep_lr(epoch: usize, base_lr: f64, milestones: &[usize], gamma: f64) -> f64 {
    let decays = milestones.iter().filter(|&&m| m <= epoch).count();
    base_lr * gamma.powi(decays as i32)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_grad_zero_decay_leaves_params() {
        let p = Tensor::parameter(2, 2, vec![1.0, -2.0, 3.0, 0.5]).unwrap();
        let mut opt = AdamW::new(
            &[p.clone()],
            AdamWConfig {
                weight_decay: 0.0,
                ..Default::default()
            },
        );
        let before = p.to_vec();
        for _ in 0..5 {
            p.zero_grad();
            opt.step(&[p.clone()]);
        }
        assert_eq!(p.to_vec(), before);
    }

    #[test]
    fn quadratic_converges() {
        // f(x) = x^2 driven by its own gradient for 200 steps at lr 0.1.
        let x = Tensor::parameter(1, 1, vec![3.0]).unwrap();
        let mut opt = AdamW::new(
            &[x.clone()],
            AdamWConfig {
                lr: 0.1,
                weight_decay: 0.0,
                ..Default::default()
            },
        );
        for _ in 0..200 {
            x.zero_grad();
            let loss = x.mul(&x).unwrap().sum_all().unwrap();
            loss.backward().unwrap();
            opt.step(&[x.clone()]);
        }
        assert!(x.item().abs() < 1e-3, "x = {}", x.item());
    }

    #[test]
    fn decoupled_decay_shrinks_params() {
        let p = Tensor::parameter(1, 1, vec![2.0]).unwrap();
        let lr = 0.05;
        let wd = 0.01;
        let mut opt = AdamW::new(
            &[p.clone()],
            AdamWConfig {
                lr,
                weight_decay: wd,
                ..Default::default()
            },
        );
        let mut expected = 2.0;
        for _ in 0..10 {
            p.zero_grad();
            opt.step(&[p.clone()]);
            expected *= 1.0 - lr * wd;
            assert!((p.item() - expected).abs() < 1e-15);
        }
    }

    #[test]
    fn multistep_schedule_values() {
        assert_eq!(multistep_lr(0, 1e-3, &[50], 0.5), 1e-3);
        assert_eq!(multistep_lr(49, 1e-3, &[50], 0.5), 1e-3);
        assert_eq!(multistep_lr(50, 1e-3, &[50], 0.5), 5e-4);
        assert_eq!(multistep_lr(120, 1e-3, &[50, 100], 0.5), 2.5e-4);
    }
}
