//! Point-transformer blocks and the U-shaped mesh encoder.
//!
//! Each block runs vector self-attention over k-nearest neighborhoods:
//! per-channel attention logits come from an MLP of `q_i - k_j + delta_ij`,
//! where `delta_ij` encodes the 3D relative position, softmax-normalized
//! over the neighborhood; the aggregated value is `v_j + delta_ij`, with a
//! residual connection around the block. Down transitions max-pool features
//! onto farthest-point-sampled subsets; up transitions interpolate back with
//! inverse-distance weights and add the skip connection.

use crate::autodiff::Tensor;
use crate::rng::Rng;
use crate::Result;

use super::graph::{LevelGraph, MeshGraph};
use super::linear::Linear;
use super::NetworkConfig;

pub(crate) const LN_EPS: f64 = 1e-5;

pub struct PtBlock {
    query: Linear,
    key: Linear,
    value: Linear,
    pos1: Linear,
    pos2: Linear,
    attn1: Linear,
    attn2: Linear,
}

impl PtBlock {
    pub fn new(channels: usize, rng: &mut Rng) -> PtBlock {
        PtBlock {
            query: Linear::new(channels, channels, rng),
            key: Linear::new(channels, channels, rng),
            value: Linear::new(channels, channels, rng),
            pos1: Linear::new(3, channels, rng),
            pos2: Linear::new(channels, channels, rng),
            attn1: Linear::new(channels, channels, rng),
            attn2: Linear::new(channels, channels, rng),
        }
    }

    /// Vector attention over each point's neighborhood; input and output are
    /// `n x c` at the level's resolution. Pre-norm residual: attention runs
    /// on the row-normalized stream, keeping activations bounded through the
    /// stack.
    pub fn forward(&self, x: &Tensor, level: &LevelGraph) -> Result<Tensor> {
        let k = level.k;
        let xn = x.layer_norm_rows(LN_EPS)?;
        let q = self.query.forward(&xn)?.gather_rows(&level.center_idx)?;
        let key = self.key.forward(&xn)?.gather_rows(&level.neighbor_idx)?;
        let value = self.value.forward(&xn)?.gather_rows(&level.neighbor_idx)?;
        let delta = self.pos2.forward(&self.pos1.forward(&level.rel_pos)?.relu()?)?;

        let gamma_in = q.sub(&key)?.add(&delta)?;
        let logits = self.attn2.forward(&self.attn1.forward(&gamma_in)?.relu()?)?;
        let attn = logits.group_softmax(k)?;
        let message = attn.mul(&value.add(&delta)?)?;
        let aggregated = message.sum_groups(k)?;
        x.add(&aggregated)
    }

    /// The attention weights alone (for inspection in tests).
    pub fn attention(&self, x: &Tensor, level: &LevelGraph) -> Result<Tensor> {
        let xn = x.layer_norm_rows(LN_EPS)?;
        let q = self.query.forward(&xn)?.gather_rows(&level.center_idx)?;
        let key = self.key.forward(&xn)?.gather_rows(&level.neighbor_idx)?;
        let delta = self.pos2.forward(&self.pos1.forward(&level.rel_pos)?.relu()?)?;
        let gamma_in = q.sub(&key)?.add(&delta)?;
        let logits = self.attn2.forward(&self.attn1.forward(&gamma_in)?.relu()?)?;
        logits.group_softmax(level.k)
    }

    pub fn collect_params(&self, prefix: &str, out: &mut Vec<(String, Tensor)>) {
        self.query.collect_params(&format!("{prefix}.query"), out);
        self.key.collect_params(&format!("{prefix}.key"), out);
        self.value.collect_params(&format!("{prefix}.value"), out);
        self.pos1.collect_params(&format!("{prefix}.pos1"), out);
        self.pos2.collect_params(&format!("{prefix}.pos2"), out);
        self.attn1.collect_params(&format!("{prefix}.attn1"), out);
        self.attn2.collect_params(&format!("{prefix}.attn2"), out);
    }
}

/// Embedding MLP, one block per level on the way down, one per level on the
/// way up; the finest up-stage output is the encoder output (`m x c`).
pub struct MeshEncoder {
    embed1: Linear,
    embed2: Linear,
    blocks: Vec<PtBlock>,
    depth: usize,
    knn: usize,
}

impl MeshEncoder {
    pub fn new(config: &NetworkConfig, rng: &mut Rng) -> MeshEncoder {
        let c = config.channels;
        let block_count = 2 * config.depth + 1;
        MeshEncoder {
            embed1: Linear::new(crate::pgse::FEATURE_WIDTH, c, rng),
            embed2: Linear::new(c, c, rng),
            blocks: (0..block_count).map(|_| PtBlock::new(c, rng)).collect(),
            depth: config.depth,
            knn: config.knn,
        }
    }

    pub fn forward(&self, graph: &MeshGraph, features: &Tensor) -> Result<Tensor> {
        let mut x = self.embed2.forward(&self.embed1.forward(features)?.relu()?)?;
        x = self.blocks[0].forward(&x, &graph.levels[0])?;

        let mut skips: Vec<Tensor> = Vec::with_capacity(self.depth);
        for d in 0..self.depth {
            skips.push(x.clone());
            // kNN max-pool features onto the kept points of the next level.
            let gathered = x.gather_rows(&graph.downs[d].pool_idx)?;
            x = gathered.max_groups(self.knn)?;
            x = self.blocks[1 + d].forward(&x, &graph.levels[d + 1])?;
        }
        for d in (0..self.depth).rev() {
            let up = &graph.ups[d];
            x = x.interpolate_rows(&up.idx, &up.weights)?;
            x = x.add(&skips[d])?;
            let block = &self.blocks[1 + self.depth + (self.depth - 1 - d)];
            x = block.forward(&x, &graph.levels[d])?;
        }
        Ok(x)
    }

    pub fn collect_params(&self, prefix: &str, out: &mut Vec<(String, Tensor)>) {
        self.embed1.collect_params(&format!("{prefix}.embed1"), out);
        self.embed2.collect_params(&format!("{prefix}.embed2"), out);
        for (i, b) in self.blocks.iter().enumerate() {
            b.collect_params(&format!("{prefix}.block{i}"), out);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::gradient_check;
    use crate::math::vec3;
    use crate::net::graph::build_level_graph;
    use crate::rng::Rng;

    fn random_points(n: usize, rng: &mut Rng) -> Vec<crate::math::Vec3> {
        (0..n)
            .map(|_| {
                vec3(
                    rng.uniform(-0.5, 0.5),
                    rng.uniform(-0.5, 0.5),
                    rng.uniform(-0.5, 0.5),
                )
            })
            .collect()
    }

    #[test]
    fn neighborhood_attention_sums_to_one() {
        let mut rng = Rng::new(1);
        let pts = random_points(12, &mut rng);
        let level = build_level_graph(pts, 4).unwrap();
        let block = PtBlock::new(6, &mut rng);
        let x = Tensor::constant(12, 6, (0..72).map(|i| 0.05 * i as f64 - 1.0).collect()).unwrap();
        let attn = block.attention(&x, &level).unwrap();
        let v = attn.to_vec();
        // per (point, channel): the 4 neighbor weights sum to 1
        for point in 0..12 {
            for ch in 0..6 {
                let mut sum = 0.0;
                for r in 0..4 {
                    sum += v[(point * 4 + r) * 6 + ch];
                }
                assert!((sum - 1.0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn k1_degenerates_to_pointwise_residual_mlp() {
        let mut rng = Rng::new(2);
        let pts = random_points(9, &mut rng);
        let level = build_level_graph(pts, 1).unwrap();
        let block = PtBlock::new(5, &mut rng);
        let x = Tensor::constant(9, 5, (0..45).map(|i| 0.1 * i as f64 - 2.0).collect()).unwrap();
        let out = block.forward(&x, &level).unwrap();

        // With the neighborhood reduced to the point itself the attention
        // weight is exactly 1, so out = x + value(norm(x)) + delta(0).
        let xn = x.layer_norm_rows(LN_EPS).unwrap();
        let delta = block
            .pos2
            .forward(&block.pos1.forward(&level.rel_pos).unwrap().relu().unwrap())
            .unwrap();
        let expected = x
            .add(&block.value.forward(&xn).unwrap().add(&delta).unwrap())
            .unwrap();
        for (a, b) in out.to_vec().iter().zip(expected.to_vec().iter()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn block_gradient_check() {
        let mut rng = Rng::new(3);
        let pts = random_points(12, &mut rng);
        let level = build_level_graph(pts, 4).unwrap();
        let block = PtBlock::new(4, &mut rng);
        let x = Tensor::constant(12, 4, (0..48).map(|i| (i as f64) * 0.07 - 1.5).collect()).unwrap();

        let mut params = Vec::new();
        block.collect_params("block", &mut params);
        let tensors: Vec<Tensor> = params.into_iter().map(|(_, t)| t).collect();
        // Check at a generic point: zero biases put the self-neighbor rows
        // (relative position exactly zero) on the relu kink, where central
        // differences straddle the nondifferentiability.
        for t in &tensors {
            let nudged: Vec<f64> = t.to_vec().iter().map(|v| v + rng.uniform(0.01, 0.2)).collect();
            t.set_values(&nudged);
        }
        let rel = gradient_check(
            &tensors,
            &move || block.forward(&x, &level)?.mul(&block.forward(&x, &level)?)?.mean_all(),
            1e-5,
            None,
            0,
        )
        .unwrap();
        assert!(rel < 1e-4, "rel err {rel}");
    }
}
