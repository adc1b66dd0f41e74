//! Dense layer: `y = x W + b`.

use crate::autodiff::Tensor;
use crate::rng::Rng;
use crate::Result;

pub struct Linear {
    pub weight: Tensor,
    pub bias: Tensor,
}

impl Linear {
    /// Kaiming-style uniform fan-in init, zero bias.
    pub fn new(in_dim: usize, out_dim: usize, rng: &mut Rng) -> Linear {
        Linear {
            weight: Tensor::kaiming_uniform(in_dim, out_dim, in_dim, rng),
            bias: Tensor::zeros(1, out_dim, true),
        }
    }

    /// All-zero weights and bias (residual output layers).
    pub fn zeroed(in_dim: usize, out_dim: usize) -> Linear {
        Linear {
            weight: Tensor::zeros(in_dim, out_dim, true),
            bias: Tensor::zeros(1, out_dim, true),
        }
    }

    pub fn forward(&self, x: &Tensor) -> Result<Tensor> {
        x.matmul(&self.weight)?.add_row(&self.bias)
    }

    pub fn collect_params(&self, prefix: &str, out: &mut Vec<(String, Tensor)>) {
        out.push((format!("{prefix}.weight"), self.weight.clone()));
        out.push((format!("{prefix}.bias"), self.bias.clone()));
    }
}
