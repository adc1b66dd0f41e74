//! Mutual cross-attention between skeleton and mesh feature streams.
//!
//! Each direction is standard multi-head scaled dot-product attention,
//! `softmax(Q K^T / sqrt(d)) V`, with learned per-head Q/K/V projections, an
//! output projection and a residual add of the query stream. Direction one
//! enhances skeleton features with mesh context (Q = skeleton features);
//! direction two enhances mesh features with skeleton context.

use crate::autodiff::Tensor;
use crate::rng::Rng;
use crate::Result;

use super::linear::Linear;

pub struct CrossAttention {
    query_proj: Vec<Linear>,
    key_proj: Vec<Linear>,
    value_proj: Vec<Linear>,
    output_proj: Linear,
    head_width: usize,
}

impl CrossAttention {
    pub fn new(channels: usize, heads: usize, rng: &mut Rng) -> CrossAttention {
        let head_width = channels / heads;
        let make = |rng: &mut Rng| -> Vec<Linear> {
            (0..heads).map(|_| Linear::new(channels, head_width, rng)).collect()
        };
        CrossAttention {
            query_proj: make(rng),
            key_proj: make(rng),
            value_proj: make(rng),
            output_proj: Linear::new(channels, channels, rng),
            head_width,
        }
    }

    /// Returns the enhanced query stream and the per-head attention maps.
    /// Pre-norm residual: projections see row-normalized streams, the raw
    /// query is added back.
    pub fn forward(&self, query: &Tensor, context: &Tensor) -> Result<(Tensor, Vec<Tensor>)> {
        let qn = query.layer_norm_rows(super::block::LN_EPS)?;
        let cn = context.layer_norm_rows(super::block::LN_EPS)?;
        let mut head_outputs: Vec<Tensor> = Vec::with_capacity(self.query_proj.len());
        let mut attention_maps = Vec::with_capacity(self.query_proj.len());
        for h in 0..self.query_proj.len() {
            let q = self.query_proj[h].forward(&qn)?;
            let k = self.key_proj[h].forward(&cn)?;
            let v = self.value_proj[h].forward(&cn)?;
            let scores = q.matmul(&k.transpose()?)?.div_by_sqrt(self.head_width as f64)?;
            let attn = scores.softmax_rows()?;
            head_outputs.push(attn.matmul(&v)?);
            attention_maps.push(attn);
        }
        let mut concat = head_outputs[0].clone();
        for h in head_outputs.iter().skip(1) {
            concat = concat.concat(h, 1)?;
        }
        let out = query.add(&self.output_proj.forward(&concat)?)?;
        Ok((out, attention_maps))
    }

    pub fn collect_params(&self, prefix: &str, out: &mut Vec<(String, Tensor)>) {
        for (h, l) in self.query_proj.iter().enumerate() {
            l.collect_params(&format!("{prefix}.q{h}"), out);
        }
        for (h, l) in self.key_proj.iter().enumerate() {
            l.collect_params(&format!("{prefix}.k{h}"), out);
        }
        for (h, l) in self.value_proj.iter().enumerate() {
            l.collect_params(&format!("{prefix}.v{h}"), out);
        }
        self.output_proj.collect_params(&format!("{prefix}.out"), out);
    }
}

/// Both fusion directions.
pub struct Msman {
    skeleton_from_mesh: CrossAttention,
    mesh_from_skeleton: CrossAttention,
}

pub struct MsmanOutput {
    /// Mesh-enhanced skeleton features, `s x c`.
    pub to_skeleton: Tensor,
    /// Skeleton-enhanced mesh features, `m x c`.
    pub to_mesh: Tensor,
    pub attn_to_skeleton: Vec<Tensor>,
    pub attn_to_mesh: Vec<Tensor>,
}

impl Msman {
    pub fn new(channels: usize, heads: usize, rng: &mut Rng) -> Msman {
        Msman {
            skeleton_from_mesh: CrossAttention::new(channels, heads, rng),
            mesh_from_skeleton: CrossAttention::new(channels, heads, rng),
        }
    }

    pub fn forward(&self, skeleton_features: &Tensor, mesh_features: &Tensor) -> Result<MsmanOutput> {
        let (to_skeleton, attn_to_skeleton) =
            self.skeleton_from_mesh.forward(skeleton_features, mesh_features)?;
        let (to_mesh, attn_to_mesh) =
            self.mesh_from_skeleton.forward(mesh_features, skeleton_features)?;
        Ok(MsmanOutput {
            to_skeleton,
            to_mesh,
            attn_to_skeleton,
            attn_to_mesh,
        })
    }

    pub fn collect_params(&self, prefix: &str, out: &mut Vec<(String, Tensor)>) {
        self.skeleton_from_mesh
            .collect_params(&format!("{prefix}.skeleton_from_mesh"), out);
        self.mesh_from_skeleton
            .collect_params(&format!("{prefix}.mesh_from_skeleton"), out);
    }
}
