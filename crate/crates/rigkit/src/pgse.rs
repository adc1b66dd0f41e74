//! Coarse skeleton estimation from 2D joints.
//!
//! Each 2D joint is back-projected to a camera ray; the coarse 3D joint is
//! the midpoint of the ray's first and last intersection with the mesh
//! surface. Rays that miss the mesh fall back to the ray point closest to
//! the mesh's bounding-box center. The module also builds the
//! skeleton-aware per-vertex features (position plus distances to every
//! coarse joint) that condition the mesh encoder, and can synthesize noisy
//! 2D joints from ground truth in place of an external 2D predictor.

use std::path::Path;

use crate::camera::CameraModel;
use crate::kvfile::{KvFile, KvWriter};
use crate::math::Vec3;
use crate::mesh::TriMesh;
use crate::raycast::ray_mesh_intersections;
use crate::rng::Rng;
use crate::skeleton::{JOINT_BOX_LIMIT, JOINT_COUNT};
use crate::{Error, Result};

/// Feature width of the skeleton-aware vertex features: xyz + one distance
/// per joint.
pub const FEATURE_WIDTH: usize = 3 + JOINT_COUNT;

/// 2D skeleton joints in pixel coordinates, in topology order.
#[derive(Debug, Clone, PartialEq)]
pub struct Joints2D {
    positions: Vec<[f64; 2]>,
}

impl Joints2D {
    pub fn new(positions: Vec<[f64; 2]>) -> Result<Joints2D> {
        if positions.len() != JOINT_COUNT {
            return Err(Error::invalid(
                "joints2d",
                format!("expected {JOINT_COUNT} joints, found {}", positions.len()),
            ));
        }
        for (i, p) in positions.iter().enumerate() {
            if !(p[0].is_finite() && p[1].is_finite()) {
                return Err(Error::invalid(
                    "joints2d",
                    format!("joint {i} is non-finite"),
                ));
            }
        }
        Ok(Joints2D { positions })
    }

    pub fn positions(&self) -> &[[f64; 2]] {
        &self.positions
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w = KvWriter::new();
        for p in &self.positions {
            w.floats("joints2d", p);
        }
        w.save(path)
    }

    pub fn load(path: &Path) -> Result<Joints2D> {
        let kv = KvFile::load(path)?;
        let vals = kv.floats("joints2d")?;
        if vals.len() != JOINT_COUNT * 2 {
            return Err(Error::invalid(
                "joints2d",
                format!(
                    "expected {JOINT_COUNT} joints ({} numbers), found {}",
                    JOINT_COUNT * 2,
                    vals.len()
                ),
            ));
        }
        Joints2D::new(vals.chunks(2).map(|c| [c[0], c[1]]).collect())
    }
}

/// How each coarse joint was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JointProvenance {
    /// Midpoint of the first and last ray-mesh intersections (a single hit
    /// is its own midpoint).
    IntersectionMidpoint,
    /// Ray missed the mesh; placed at the ray point nearest the bounding-box
    /// center.
    Fallback,
}

#[derive(Debug, Clone)]
pub struct CoarseSkeleton {
    positions: Vec<Vec3>,
    provenance: Vec<JointProvenance>,
}

impl CoarseSkeleton {
    pub fn new(positions: Vec<Vec3>, provenance: Vec<JointProvenance>) -> Result<CoarseSkeleton> {
        if positions.len() != JOINT_COUNT || provenance.len() != JOINT_COUNT {
            return Err(Error::invalid(
                "coarse skeleton",
                format!("expected {JOINT_COUNT} joints, found {}", positions.len()),
            ));
        }
        for (i, p) in positions.iter().enumerate() {
            if !p.is_finite() {
                return Err(Error::invalid(
                    "coarse skeleton",
                    format!("joint {i} is non-finite"),
                ));
            }
        }
        Ok(CoarseSkeleton {
            positions,
            provenance,
        })
    }

    pub fn positions(&self) -> &[Vec3] {
        &self.positions
    }

    pub fn provenance(&self) -> &[JointProvenance] {
        &self.provenance
    }

    pub fn fallback_count(&self) -> usize {
        self.provenance
            .iter()
            .filter(|p| **p == JointProvenance::Fallback)
            .count()
    }
}

/// Lift 2D joints to a coarse 3D skeleton by ray casting against the mesh.
pub fn estimate_coarse_skeleton(
    mesh: &TriMesh,
    camera: &CameraModel,
    joints2d: &Joints2D,
) -> Result<CoarseSkeleton> {
    let bbox_center = mesh.bounding_box_center()?;
    let mut positions = Vec::with_capacity(JOINT_COUNT);
    let mut provenance = Vec::with_capacity(JOINT_COUNT);
    for j2d in joints2d.positions() {
        let ray = camera.back_project_ray(*j2d);
        let hits = ray_mesh_intersections(mesh, &ray);
        if hits.is_empty() {
            let mu = (bbox_center - ray.origin()).dot(ray.direction()).max(0.0);
            let p = ray.point(mu);
            positions.push(clamp_to_joint_box(p));
            provenance.push(JointProvenance::Fallback);
        } else {
            let first = hits.first().unwrap().point;
            let last = hits.last().unwrap().point;
            positions.push((first + last) * 0.5);
            provenance.push(JointProvenance::IntersectionMidpoint);
        }
    }
    CoarseSkeleton::new(positions, provenance)
}

fn clamp_to_joint_box(p: Vec3) -> Vec3 {
    Vec3 {
        x: p.x.clamp(-JOINT_BOX_LIMIT, JOINT_BOX_LIMIT),
        y: p.y.clamp(-JOINT_BOX_LIMIT, JOINT_BOX_LIMIT),
        z: p.z.clamp(-JOINT_BOX_LIMIT, JOINT_BOX_LIMIT),
    }
}

/// Per-vertex features: xyz concatenated with Euclidean distances to every
/// coarse joint. Row-major, `vertex_count x FEATURE_WIDTH`.
pub fn skeleton_aware_features(mesh: &TriMesh, coarse: &CoarseSkeleton) -> Vec<f64> {
    let mut features = Vec::with_capacity(mesh.vertex_count() * FEATURE_WIDTH);
    for &v in mesh.vertices() {
        features.push(v.x);
        features.push(v.y);
        features.push(v.z);
        for &j in coarse.positions() {
            features.push((v - j).norm());
        }
    }
    features
}

/// Default pixel noise for synthesized 2D joints: 1% of the image width.
pub fn default_noise_sigma(image_width: f64) -> f64 {
    0.01 * image_width
}

/// Project ground-truth joints and add isotropic Gaussian pixel noise;
/// deterministic under `seed`. Stands in for an external 2D joint predictor.
pub fn synthesize_j2d(
    camera: &CameraModel,
    gt_joints: &[Vec3],
    noise_sigma: f64,
    seed: u64,
) -> Result<Joints2D> {
    let mut rng = Rng::new(seed);
    let mut out = Vec::with_capacity(gt_joints.len());
    for &j in gt_joints {
        let p = camera.project_point(j)?;
        out.push([
            rng.normal_scaled(p[0], noise_sigma),
            rng.normal_scaled(p[1], noise_sigma),
        ]);
    }
    Joints2D::new(out)
}
