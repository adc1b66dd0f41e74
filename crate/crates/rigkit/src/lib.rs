//! Automatic rigging toolkit for T-pose humanoid meshes.
//!
//! Given a normalized triangle mesh, a front-view pinhole camera and 2D
//! skeleton joints, the pipeline lifts the joints to a coarse 3D skeleton by
//! casting camera rays against the mesh, encodes skeleton and mesh features,
//! fuses them with bidirectional cross-attention, and predicts a refined
//! 22-joint skeleton plus per-vertex skinning weights. A procedural character
//! generator provides rigged ground-truth data for training and evaluation,
//! and a metric suite (joint/bone chamfer distances, skinning precision and
//! L1, deformation error) measures rig quality.
//!
//! Modules:
//! - [`mesh`], [`camera`], [`raycast`]: geometric substrate (OBJ meshes,
//!   pinhole projection with pseudo-inverse back-projection, ray casting).
//! - [`skeleton`]: fixed 22-joint topology, rigs, forward kinematics and
//!   linear blend skinning.
//! - [`pgse`]: coarse skeleton estimation from 2D joints and skeleton-aware
//!   vertex features.
//! - [`autodiff`]: minimal reverse-mode tensor engine, AdamW, checkpoints.
//! - [`net`]: skeleton encoder, U-shaped point-transformer mesh encoder,
//!   mutual cross-attention, prediction heads and losses.
//! - [`synth`]: procedural rigged-character generator and dataset layout.
//! - [`metrics`]: evaluation suite and geometric skinning baselines.
//! - [`train`]: training loop, validation, checkpointing.

pub mod autodiff;
pub mod camera;
pub mod kvfile;
pub mod math;
pub mod mesh;
pub mod metrics;
pub mod net;
pub mod pgse;
pub mod raycast;
pub mod rng;
pub mod skeleton;
pub mod synth;
pub mod train;

use std::path::PathBuf;

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error in {path} at line {line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("face index {index} out of range for {vertex_count} vertices (line {line})")]
    FaceIndexOutOfRange {
        line: usize,
        index: usize,
        vertex_count: usize,
    },
    #[error("mesh is empty")]
    EmptyMesh,
    #[error("degenerate mesh: zero extent on all axes")]
    DegenerateMesh,
    #[error("camera rotation is not orthonormal (max deviation {deviation:e})")]
    NotOrthonormal { deviation: f64 },
    #[error("point projects to w ~= 0 and cannot be dehomogenized")]
    Unprojectable,
    #[error("invalid {what}: {message}")]
    Invalid { what: &'static str, message: String },
    #[error("{op}: shape mismatch {lhs:?} vs {rhs:?}")]
    ShapeMismatch {
        op: &'static str,
        lhs: Vec<usize>,
        rhs: Vec<usize>,
    },
    #[error("{op}: produced a non-finite value")]
    NonFinite { op: &'static str },
    #[error("backward requires a scalar loss, got shape {shape:?}")]
    NotScalar { shape: Vec<usize> },
    #[error("checkpoint tensor {name}: expected shape {expected:?}, found {found:?}")]
    TensorShape {
        name: String,
        expected: Vec<usize>,
        found: Vec<usize>,
    },
    #[error("checkpoint tensor {name} is missing")]
    TensorMissing { name: String },
    #[error("non-finite loss on sample {sample}")]
    NonFiniteLoss { sample: String },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            message: message.into(),
        }
    }

    pub(crate) fn invalid(what: &'static str, message: impl Into<String>) -> Self {
        Error::Invalid {
            what,
            message: message.into(),
        }
    }

    /// True when the error stems from bad user input (files, flags, schema)
    /// rather than a failed computation.
    pub fn is_input_error(&self) -> bool {
        !matches!(
            self,
            Error::NonFinite { .. } | Error::NonFiniteLoss { .. } | Error::NotScalar { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
