//! The rigging network: an MLP skeleton encoder and a U-shaped
//! point-transformer mesh encoder, fused by bidirectional cross-attention,
//! with a residual skeleton-refinement head and a row-softmax skinning head.

mod attention;
mod block;
mod graph;
mod linear;
mod loss;

pub use attention::{CrossAttention, Msman, MsmanOutput};
pub use block::{MeshEncoder, PtBlock};
pub use graph::{build_level_graph, build_mesh_graph, LevelGraph, MeshGraph};
pub use linear::Linear;
pub use loss::{loss_skeleton, loss_skinning, loss_total, KL_EPS};

use std::path::Path;

use crate::autodiff::{NamedTensor, Tensor};
use crate::kvfile::{KvFile, KvWriter};
use crate::math::Vec3;
use crate::mesh::TriMesh;
use crate::pgse::{skeleton_aware_features, CoarseSkeleton, FEATURE_WIDTH};
use crate::rng::Rng;
use crate::skeleton::{SkinningMatrix, JOINT_COUNT};
use crate::{Error, Result};

/// Architecture hyperparameters. The defaults are sized so a few-thousand
/// vertex mesh trains in minutes on one core.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkConfig {
    /// Feature channels `c` shared by both encoders.
    pub channels: usize,
    /// Cross-attention head count; head width is `channels / heads`.
    pub heads: usize,
    /// Number of down/up stages in the mesh encoder.
    pub depth: usize,
    /// Neighborhood size for point-transformer attention and pooling.
    pub knn: usize,
    /// Per-stage farthest-point-sampling keep ratios, each in (0, 1).
    pub ratios: Vec<f64>,
    /// Hidden width of the skeleton encoder heads.
    pub mlp_hidden: usize,
    /// Parameter initialization seed; also seeds farthest-point sampling.
    pub seed: u64,
    /// When false, skip the mutual-attention stage: skinning is predicted
    /// directly from mesh features and the skeleton output is the coarse
    /// estimate (the skinning-expert ablation).
    pub use_msman: bool,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        NetworkConfig {
            channels: 64,
            heads: 4,
            depth: 2,
            knn: 16,
            ratios: vec![0.25, 0.25],
            mlp_hidden: 64,
            seed: 0,
            use_msman: true,
        }
    }
}

impl NetworkConfig {
    /// Small configuration for fast experiments and regressions.
    pub fn desk(seed: u64) -> NetworkConfig {
        NetworkConfig {
            channels: 16,
            heads: 2,
            depth: 2,
            knn: 8,
            ratios: vec![0.25, 0.25],
            mlp_hidden: 16,
            seed,
            use_msman: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.channels == 0 || self.heads == 0 || self.channels % self.heads != 0 {
            return Err(Error::invalid(
                "network config",
                format!(
                    "channels {} not divisible by heads {}",
                    self.channels, self.heads
                ),
            ));
        }
        if self.knn < 3 {
            return Err(Error::invalid(
                "network config",
                format!("knn {} below the minimum of 3", self.knn),
            ));
        }
        if self.ratios.len() != self.depth {
            return Err(Error::invalid(
                "network config",
                format!("{} ratios for depth {}", self.ratios.len(), self.depth),
            ));
        }
        for r in &self.ratios {
            if !(*r > 0.0 && *r < 1.0) {
                return Err(Error::invalid(
                    "network config",
                    format!("ratio {r} outside (0, 1)"),
                ));
            }
        }
        if self.mlp_hidden == 0 {
            return Err(Error::invalid("network config", "mlp_hidden must be positive"));
        }
        Ok(())
    }

    pub fn head_width(&self) -> usize {
        self.channels / self.heads
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w = KvWriter::new();
        w.ints("channels", &[self.channels as i64])
            .ints("heads", &[self.heads as i64])
            .ints("depth", &[self.depth as i64])
            .ints("knn", &[self.knn as i64])
            .floats("ratios", &self.ratios)
            .ints("mlp_hidden", &[self.mlp_hidden as i64])
            .ints("seed", &[self.seed as i64])
            .ints("use_msman", &[self.use_msman as i64]);
        w.save(path)
    }

    pub fn load(path: &Path) -> Result<NetworkConfig> {
        let kv = KvFile::load(path)?;
        let config = NetworkConfig {
            channels: kv.int("channels")? as usize,
            heads: kv.int("heads")? as usize,
            depth: kv.int("depth")? as usize,
            knn: kv.int("knn")? as usize,
            ratios: kv.floats("ratios")?,
            mlp_hidden: kv.int("mlp_hidden")? as usize,
            seed: kv.int("seed")? as u64,
            use_msman: kv.opt_int("use_msman", 1)? != 0,
        };
        config.validate()?;
        Ok(config)
    }
}

/// Prepared per-sample network inputs: constant tensors plus the sampling
/// and neighborhood structure, reusable across epochs.
pub struct PreparedInputs {
    pub coarse: Tensor,
    pub features: Tensor,
    pub graph: MeshGraph,
}

/// Build the constant inputs for one sample from its mesh and coarse
/// skeleton.
pub fn prepare_inputs(
    mesh: &TriMesh,
    coarse: &CoarseSkeleton,
    config: &NetworkConfig,
) -> Result<PreparedInputs> {
    let coarse_values: Vec<f64> = coarse
        .positions()
        .iter()
        .flat_map(|p| [p.x, p.y, p.z])
        .collect();
    let coarse_t = Tensor::constant(JOINT_COUNT, 3, coarse_values)?;
    let features = Tensor::constant(
        mesh.vertex_count(),
        FEATURE_WIDTH,
        skeleton_aware_features(mesh, coarse),
    )?;
    let graph = build_mesh_graph(mesh.vertices(), config)?;
    Ok(PreparedInputs {
        coarse: coarse_t,
        features,
        graph,
    })
}

/// Network output: refined joints (22 x 3) and row-stochastic skinning
/// weights (m x 22), still attached to the autodiff graph. The attention
/// maps are exposed for inspection.
pub struct RigPrediction {
    pub joints: Tensor,
    pub skinning: Tensor,
    pub attn_to_skeleton: Vec<Tensor>,
    pub attn_to_mesh: Vec<Tensor>,
}

impl RigPrediction {
    pub fn joint_positions(&self) -> Vec<Vec3> {
        self.joints
            .to_vec()
            .chunks(3)
            .map(|c| Vec3 {
                x: c[0],
                y: c[1],
                z: c[2],
            })
            .collect()
    }

    pub fn skinning_matrix(&self) -> Result<SkinningMatrix> {
        SkinningMatrix::new(
            self.skinning.rows(),
            self.skinning.cols(),
            self.skinning.to_vec(),
        )
    }
}

/// Per-joint 3-layer MLP (3 -> c -> c -> c, final layer linear).
pub struct SkeletonEncoder {
    layers: [Linear; 3],
}

impl SkeletonEncoder {
    fn new(channels: usize, rng: &mut Rng) -> SkeletonEncoder {
        SkeletonEncoder {
            layers: [
                Linear::new(3, channels, rng),
                Linear::new(channels, channels, rng),
                Linear::new(channels, channels, rng),
            ],
        }
    }

    pub fn forward(&self, coarse: &Tensor) -> Result<Tensor> {
        let h = self.layers[0].forward(coarse)?.relu()?;
        let h = self.layers[1].forward(&h)?.relu()?;
        self.layers[2].forward(&h)
    }

    fn collect_params(&self, prefix: &str, out: &mut Vec<(String, Tensor)>) {
        for (i, l) in self.layers.iter().enumerate() {
            l.collect_params(&format!("{prefix}.l{i}"), out);
        }
    }
}

struct MlpHead {
    hidden: Linear,
    output: Linear,
}

impl MlpHead {
    /// Two-layer head with a zero-initialized output layer.
    fn new(in_dim: usize, hidden: usize, out_dim: usize, rng: &mut Rng) -> MlpHead {
        MlpHead {
            hidden: Linear::new(in_dim, hidden, rng),
            output: Linear::zeroed(hidden, out_dim),
        }
    }

    fn forward(&self, x: &Tensor) -> Result<Tensor> {
        let xn = x.layer_norm_rows(block::LN_EPS)?;
        self.output.forward(&self.hidden.forward(&xn)?.relu()?)
    }

    fn collect_params(&self, prefix: &str, out: &mut Vec<(String, Tensor)>) {
        self.hidden.collect_params(&format!("{prefix}.hidden"), out);
        self.output.collect_params(&format!("{prefix}.output"), out);
    }
}

/// The full model. Construction is deterministic under `config.seed`.
pub struct RiggingNetwork {
    pub config: NetworkConfig,
    pub skeleton_encoder: SkeletonEncoder,
    pub mesh_encoder: MeshEncoder,
    msman: Option<Msman>,
    skeleton_head: Option<MlpHead>,
    skinning_head: MlpHead,
}

impl RiggingNetwork {
    pub fn new(config: NetworkConfig) -> Result<RiggingNetwork> {
        config.validate()?;
        let mut rng = Rng::new(config.seed);
        let c = config.channels;
        let skeleton_encoder = SkeletonEncoder::new(c, &mut rng);
        let mesh_encoder = MeshEncoder::new(&config, &mut rng);
        let (msman, skeleton_head) = if config.use_msman {
            (
                Some(Msman::new(c, config.heads, &mut rng)),
                Some(MlpHead::new(c, config.mlp_hidden, 3, &mut rng)),
            )
        } else {
            (None, None)
        };
        let skinning_head = MlpHead::new(c, config.mlp_hidden, JOINT_COUNT, &mut rng);
        Ok(RiggingNetwork {
            config,
            skeleton_encoder,
            mesh_encoder,
            msman,
            skeleton_head,
            skinning_head,
        })
    }

    pub fn forward(&self, inputs: &PreparedInputs) -> Result<RigPrediction> {
        let f_m = self.mesh_encoder.forward(&inputs.graph, &inputs.features)?;
        match (&self.msman, &self.skeleton_head) {
            (Some(msman), Some(skeleton_head)) => {
                let f_s = self.skeleton_encoder.forward(&inputs.coarse)?;
                let fused = msman.forward(&f_s, &f_m)?;
                // Residual refinement on the coarse skeleton.
                let delta = skeleton_head.forward(&fused.to_skeleton)?;
                let joints = inputs.coarse.add(&delta)?;
                let skinning = self.skinning_head.forward(&fused.to_mesh)?.softmax_rows()?;
                Ok(RigPrediction {
                    joints,
                    skinning,
                    attn_to_skeleton: fused.attn_to_skeleton,
                    attn_to_mesh: fused.attn_to_mesh,
                })
            }
            _ => {
                // Skinning-expert ablation: the coarse skeleton passes
                // through untouched.
                let joints = inputs.coarse.detach();
                let skinning = self.skinning_head.forward(&f_m)?.softmax_rows()?;
                Ok(RigPrediction {
                    joints,
                    skinning,
                    attn_to_skeleton: Vec::new(),
                    attn_to_mesh: Vec::new(),
                })
            }
        }
    }

    /// All trainable parameters with stable names, in construction order.
    pub fn parameters(&self) -> Vec<(String, Tensor)> {
        let mut out = Vec::new();
        self.skeleton_encoder.collect_params("skeleton_encoder", &mut out);
        self.mesh_encoder.collect_params("mesh_encoder", &mut out);
        if let Some(msman) = &self.msman {
            msman.collect_params("msman", &mut out);
        }
        if let Some(head) = &self.skeleton_head {
            head.collect_params("skeleton_head", &mut out);
        }
        self.skinning_head.collect_params("skinning_head", &mut out);
        out
    }

    pub fn parameter_tensors(&self) -> Vec<Tensor> {
        self.parameters().into_iter().map(|(_, t)| t).collect()
    }

    pub fn zero_grads(&self) {
        for (_, p) in self.parameters() {
            p.zero_grad();
        }
    }

    pub fn export_parameters(&self) -> Vec<NamedTensor> {
        self.parameters()
            .into_iter()
            .map(|(name, t)| NamedTensor::new(name, vec![t.rows(), t.cols()], t.to_vec()))
            .collect()
    }

    /// Load parameters by name, checking shapes.
    pub fn load_parameters(&self, tensors: &[NamedTensor]) -> Result<()> {
        for (name, param) in self.parameters() {
            let found = tensors
                .iter()
                .find(|t| t.name == name)
                .ok_or_else(|| Error::TensorMissing { name: name.clone() })?;
            let expected = vec![param.rows(), param.cols()];
            if found.shape != expected {
                return Err(Error::TensorShape {
                    name,
                    expected,
                    found: found.shape.clone(),
                });
            }
            param.set_values(&found.values);
        }
        Ok(())
    }
}
