//! Procedural rigged T-pose characters.
//!
//! Characters are unions of capsules (one per bone) plus a sphere head,
//! laid out from a head-to-body ratio and width/thickness knobs. Because the
//! geometry is analytic, ground-truth skinning weights (Gaussian falloff
//! over distance to the nearest bones) and ray-cast behavior are exact,
//! which makes coarse-skeleton and metric oracles straightforward. The
//! generator is bitwise deterministic under its seed.

use std::path::{Path, PathBuf};

use crate::camera::CameraModel;
use crate::kvfile::{KvFile, KvWriter};
use crate::math::{point_segment_distance, vec3, Mat3, Vec3};
use crate::mesh::{load_obj, normalize_mesh, save_obj, TriMesh};
use crate::pgse::{default_noise_sigma, synthesize_j2d, Joints2D};
use crate::rng::Rng;
use crate::skeleton::{
    load_rig, mixamo_topology, save_rig, Rig, SkinningMatrix, BONE_COUNT, JOINT_COUNT,
};
use crate::{Error, Result};

pub const IMAGE_SIZE: f64 = 512.0;
pub const CAMERA_DISTANCE: f64 = 2.2;

/// Front-view camera on the +z axis looking at the origin, focal length such
/// that the unit box spans ~80% of a 512x512 image.
pub fn canonical_camera() -> CameraModel {
    let focal = 0.8 * IMAGE_SIZE / 2.0 * CAMERA_DISTANCE / 0.5;
    let rot = Mat3([[1.0, 0.0, 0.0], [0.0, -1.0, 0.0], [0.0, 0.0, -1.0]]);
    CameraModel::new(
        focal,
        focal,
        IMAGE_SIZE / 2.0,
        IMAGE_SIZE / 2.0,
        rot,
        vec3(0.0, 0.0, CAMERA_DISTANCE),
    )
    .expect("canonical camera is valid")
}

/// Body-proportion and tessellation knobs for one character.
#[derive(Debug, Clone, PartialEq)]
pub struct CharacterSpec {
    /// Body height in head units, in [2, 9].
    pub head_to_body_ratio: f64,
    /// Multiplier on limb capsule radii.
    pub limb_thickness: f64,
    /// Multiplier on torso capsule radii.
    pub torso_thickness: f64,
    pub shoulder_half_width: f64,
    pub hip_half_width: f64,
    /// Approximate total vertex count (>= 500).
    pub vertex_budget: usize,
    /// Pixel sigma for the synthesized 2D joints.
    pub noise_sigma: f64,
    pub seed: u64,
}

impl CharacterSpec {
    pub fn validate(&self) -> Result<()> {
        if !(2.0..=9.0).contains(&self.head_to_body_ratio) {
            return Err(Error::invalid(
                "character spec",
                format!("head-to-body ratio {} outside [2, 9]", self.head_to_body_ratio),
            ));
        }
        if self.vertex_budget < 500 {
            return Err(Error::invalid(
                "character spec",
                format!("vertex budget {} below the 500 minimum", self.vertex_budget),
            ));
        }
        Ok(())
    }

    /// Default knobs for a given ratio and seed.
    pub fn with_ratio(ratio: f64, seed: u64) -> CharacterSpec {
        CharacterSpec {
            head_to_body_ratio: ratio,
            limb_thickness: 1.0,
            torso_thickness: 1.0,
            shoulder_half_width: 0.115,
            hip_half_width: 0.065,
            vertex_budget: 700,
            noise_sigma: default_noise_sigma(IMAGE_SIZE),
            seed,
        }
    }

    /// Draw proportion knobs from a seeded stream.
    pub fn sample(ratio: f64, vertex_budget: usize, noise_sigma: f64, rng: &mut Rng) -> CharacterSpec {
        CharacterSpec {
            head_to_body_ratio: ratio,
            limb_thickness: rng.uniform(0.85, 1.2),
            torso_thickness: rng.uniform(0.85, 1.15),
            shoulder_half_width: rng.uniform(0.1, 0.13),
            hip_half_width: rng.uniform(0.055, 0.075),
            vertex_budget,
            noise_sigma,
            seed: rng.next_u64(),
        }
    }
}

/// Capsule around a segment; `p0 == p1` degenerates to a sphere.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CapsulePart {
    pub p0: Vec3,
    pub p1: Vec3,
    pub radius: f64,
}

/// One training/eval datum: normalized mesh, front camera, 2D joints and the
/// ground-truth rig, all in the same normalized space.
#[derive(Debug, Clone)]
pub struct RiggedSample {
    pub mesh: TriMesh,
    pub camera: CameraModel,
    pub joints2d: Joints2D,
    pub gt_rig: Rig,
}

/// T-pose joint layout in model space (height 1, y up, arms along +-x,
/// toes along +z).
fn layout_joints(spec: &CharacterSpec) -> Vec<Vec3> {
    let h = 1.0 / spec.head_to_body_ratio; // head unit
    let body = 1.0 - h; // feet (y=0) to head joint
    let hips_y = 0.5 * body;
    let torso = body - hips_y;
    let sw = spec.shoulder_half_width;
    let hw = spec.hip_half_width;
    let arm_y = hips_y + 0.85 * torso;
    let reach = 0.42 - sw; // arm length along x

    let mut joints = vec![Vec3::ZERO; JOINT_COUNT];
    let topo = mixamo_topology();
    let mut set = |name: &str, p: Vec3| {
        joints[topo.index_of(name).expect("known joint")] = p;
    };

    set("Hips", vec3(0.0, hips_y, 0.0));
    set("Spine", vec3(0.0, hips_y + 0.2 * torso, 0.0));
    set("Spine1", vec3(0.0, hips_y + 0.45 * torso, 0.0));
    set("Spine2", vec3(0.0, hips_y + 0.7 * torso, 0.0));
    set("Neck", vec3(0.0, hips_y + 0.9 * torso, 0.0));
    set("Head", vec3(0.0, body, 0.0));

    for (side, sign) in [("Left", 1.0), ("Right", -1.0)] {
        set(&format!("{side}Shoulder"), vec3(sign * 0.3 * sw, arm_y, 0.0));
        set(&format!("{side}Arm"), vec3(sign * sw, arm_y, 0.0));
        set(
            &format!("{side}ForeArm"),
            vec3(sign * (sw + 0.5 * reach), arm_y, 0.0),
        );
        set(
            &format!("{side}Hand"),
            vec3(sign * (sw + 0.85 * reach), arm_y, 0.0),
        );
        set(&format!("{side}UpLeg"), vec3(sign * hw, hips_y - 0.02 * body, 0.0));
        set(&format!("{side}Leg"), vec3(sign * hw, 0.55 * hips_y, 0.0));
        set(&format!("{side}Foot"), vec3(sign * hw, 0.09 * body, 0.0));
        set(
            &format!("{side}ToeBase"),
            vec3(sign * hw, 0.05 * body, 0.07),
        );
    }
    joints
}

/// Capsule radius for the bone ending at `child` (model space, height 1).
fn bone_radius(spec: &CharacterSpec, child_name: &str) -> f64 {
    let limb = spec.limb_thickness;
    let torso = spec.torso_thickness;
    let base = match child_name {
        "Spine" | "Spine1" | "Spine2" => 0.065 * torso,
        "Neck" => 0.038 * torso,
        "Head" => 0.034 * torso,
        name if name.ends_with("Shoulder") => 0.03 * limb,
        name if name.ends_with("Arm") && !name.ends_with("ForeArm") => 0.03 * limb,
        name if name.ends_with("ForeArm") => 0.028 * limb,
        name if name.ends_with("Hand") => 0.024 * limb,
        name if name.ends_with("UpLeg") => 0.042 * limb,
        name if name.ends_with("Leg") => 0.04 * limb,
        name if name.ends_with("Foot") => 0.032 * limb,
        name if name.ends_with("ToeBase") => 0.026 * limb,
        other => panic!("unknown joint name {other}"),
    };
    base
}

/// The analytic parts of a character in model space: one capsule per bone
/// plus the head sphere (last entry).
pub fn character_parts_model_space(spec: &CharacterSpec) -> (Vec<Vec3>, Vec<CapsulePart>) {
    let joints = layout_joints(spec);
    let topo = mixamo_topology();
    let names = topo.joint_names();
    let mut parts = Vec::with_capacity(BONE_COUNT + 1);
    for (p, c) in topo.bones() {
        parts.push(CapsulePart {
            p0: joints[p],
            p1: joints[c],
            radius: bone_radius(spec, &names[c]),
        });
    }
    // Head sphere: top of the head at one head unit above the head joint,
    // bottom dipping slightly past the joint so the joint sits strictly
    // inside (and never exactly on a tessellation vertex).
    let h = 1.0 / spec.head_to_body_ratio;
    let head = joints[topo.index_of("Head").unwrap()];
    let radius = 0.52 * h;
    let center = head + vec3(0.0, h - radius, 0.0);
    parts.push(CapsulePart {
        p0: center,
        p1: center,
        radius,
    });
    (joints, parts)
}

fn orthonormal_frame(axis: Vec3) -> (Vec3, Vec3) {
    let helper = if axis.x.abs() < 0.9 {
        vec3(1.0, 0.0, 0.0)
    } else {
        vec3(0.0, 1.0, 0.0)
    };
    let u = axis.cross(helper).normalized();
    let v = axis.cross(u);
    (u, v)
}

struct MeshBuilder {
    vertices: Vec<Vec3>,
    faces: Vec<[usize; 3]>,
}

impl MeshBuilder {
    fn new() -> Self {
        MeshBuilder {
            vertices: Vec::new(),
            faces: Vec::new(),
        }
    }

    fn ring(&mut self, center: Vec3, u: Vec3, v: Vec3, radius: f64, segments: usize) -> Vec<usize> {
        let mut idx = Vec::with_capacity(segments);
        for k in 0..segments {
            let theta = 2.0 * std::f64::consts::PI * k as f64 / segments as f64;
            idx.push(self.vertices.len());
            self.vertices
                .push(center + (u * theta.cos() + v * theta.sin()) * radius);
        }
        idx
    }

    fn strip(&mut self, lower: &[usize], upper: &[usize]) {
        let q = lower.len();
        for k in 0..q {
            let k1 = (k + 1) % q;
            self.faces.push([lower[k], lower[k1], upper[k1]]);
            self.faces.push([lower[k], upper[k1], upper[k]]);
        }
    }

    fn fan(&mut self, pole: usize, ring: &[usize], pole_first: bool) {
        let q = ring.len();
        for k in 0..q {
            let k1 = (k + 1) % q;
            if pole_first {
                self.faces.push([pole, ring[k1], ring[k]]);
            } else {
                self.faces.push([pole, ring[k], ring[k1]]);
            }
        }
    }

    /// Tessellate one capsule (or sphere when degenerate) with `q` radial
    /// segments, `cap_rings` latitude rings per cap and `body_rings` axial
    /// divisions.
    fn capsule(&mut self, part: &CapsulePart, q: usize, cap_rings: usize, body_rings: usize) {
        let axis = part.p1 - part.p0;
        let len = axis.norm();
        let w_hat = if len > 1e-12 { axis / len } else { vec3(0.0, 1.0, 0.0) };
        let (u, v) = orthonormal_frame(w_hat);
        let r = part.radius;

        let bottom_pole = self.vertices.len();
        self.vertices.push(part.p0 - w_hat * r);
        let mut rings: Vec<Vec<usize>> = Vec::new();
        // bottom hemisphere, pole to equator
        for i in 1..=cap_rings {
            let alpha = std::f64::consts::FRAC_PI_2 * i as f64 / cap_rings as f64;
            let center = part.p0 - w_hat * (r * alpha.cos());
            rings.push(self.ring(center, u, v, r * alpha.sin(), q));
        }
        // body rings strictly between the equators
        if len > 1e-12 {
            for j in 1..body_rings {
                let center = part.p0 + w_hat * (len * j as f64 / body_rings as f64);
                rings.push(self.ring(center, u, v, r, q));
            }
            // top equator
            rings.push(self.ring(part.p1, u, v, r, q));
        }
        // top hemisphere, equator to pole (equator ring itself already added
        // for capsules; for spheres mirror the bottom)
        for i in (1..cap_rings).rev() {
            let alpha = std::f64::consts::FRAC_PI_2 * i as f64 / cap_rings as f64;
            let center = part.p1 + w_hat * (r * alpha.cos());
            rings.push(self.ring(center, u, v, r * alpha.sin(), q));
        }
        let top_pole = self.vertices.len();
        self.vertices.push(part.p1 + w_hat * r);

        self.fan(bottom_pole, &rings[0], true);
        for w in 0..rings.len() - 1 {
            let (a, b) = (rings[w].clone(), rings[w + 1].clone());
            self.strip(&a, &b);
        }
        self.fan(top_pole, rings.last().unwrap(), false);
    }
}

/// Build the character mesh in model space from its parts, spending roughly
/// `vertex_budget` vertices (the head sphere gets a double share).
fn tessellate_parts(parts: &[CapsulePart], vertex_budget: usize) -> TriMesh {
    let shares = parts.len() + 1;
    let per_part = vertex_budget as f64 / shares as f64;
    let mut builder = MeshBuilder::new();
    for (i, part) in parts.iter().enumerate() {
        let head_sphere = i == parts.len() - 1;
        let budget = if head_sphere { 2.0 * per_part } else { per_part };
        let len = (part.p1 - part.p0).norm();
        let cap_rings = 2;
        let body_rings = if len > 1e-12 {
            ((len / (2.0 * part.radius)).round() as usize).clamp(1, 5)
        } else {
            1
        };
        let denom = (2 * cap_rings + body_rings - 1) as f64;
        let q = (((budget - 2.0) / denom).round() as usize).clamp(6, 32);
        builder.capsule(part, q, cap_rings, body_rings);
    }
    TriMesh::new(builder.vertices, builder.faces).expect("generated mesh is valid")
}

/// Falloff floor as a multiple of the bone's capsule radius. A pure
/// length-proportional falloff on short thick bones is far narrower than
/// the surface offset, which turns the weights into near-discontinuous
/// spikes instead of smooth blends.
pub const FALLOFF_RADIUS_FLOOR: f64 = 1.0;

/// Ground-truth skinning: Gaussian falloff over distance to the four most
/// influential bones, attributed to each bone's child joint, renormalized
/// per vertex. The falloff is 0.3 x bone length, floored at
/// `FALLOFF_RADIUS_FLOOR` x the bone's capsule radius.
fn ground_truth_skinning(
    vertices: &[Vec3],
    joints: &[Vec3],
    bones: &[(usize, usize)],
    radii: &[f64],
) -> SkinningMatrix {
    const TOP_K: usize = 4;
    let falloffs: Vec<f64> = bones
        .iter()
        .zip(radii)
        .map(|(&(p, c), &r)| {
            (0.3 * (joints[c] - joints[p]).norm()).max(FALLOFF_RADIUS_FLOOR * r).max(1e-3)
        })
        .collect();
    let mut data = vec![0.0; vertices.len() * JOINT_COUNT];
    for (i, &v) in vertices.iter().enumerate() {
        // Keep the four most influential bones. Ranking by falloff weight
        // rather than raw distance matters once falloffs differ per bone: a
        // close-but-sharp bone can carry less influence than a farther
        // wide one, and cutting by distance would drop real weight.
        let mut weights: Vec<(f64, usize)> = bones
            .iter()
            .enumerate()
            .map(|(b, &(p, c))| {
                let d = point_segment_distance(v, joints[p], joints[c]);
                ((-(d / falloffs[b]).powi(2)).exp(), b)
            })
            .collect();
        weights.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));
        let row = &mut data[i * JOINT_COUNT..(i + 1) * JOINT_COUNT];
        let mut sum = 0.0;
        for &(w, b) in weights.iter().take(TOP_K) {
            row[bones[b].1] += w;
            sum += w;
        }
        if sum < 1e-12 {
            row[bones[weights[0].1].1] = 1.0;
        } else {
            for w in row.iter_mut() {
                *w /= sum;
            }
        }
    }
    SkinningMatrix::new(vertices.len(), JOINT_COUNT, data).expect("rows renormalized")
}

/// Generate one character plus its analytic parts mapped into the normalized
/// mesh space (for geometric oracles).
pub fn generate_character_with_parts(spec: &CharacterSpec) -> Result<(RiggedSample, Vec<CapsulePart>)> {
    spec.validate()?;
    let (joints, parts) = character_parts_model_space(spec);
    let mesh = tessellate_parts(&parts, spec.vertex_budget);
    let topo = mixamo_topology();
    let bone_radii: Vec<f64> = parts[..BONE_COUNT].iter().map(|p| p.radius).collect();
    let skinning = ground_truth_skinning(mesh.vertices(), &joints, &topo.bones(), &bone_radii);

    let (mesh, transform) = normalize_mesh(&mesh)?;
    let joints: Vec<Vec3> = joints.iter().map(|&j| transform.apply(j)).collect();
    let parts: Vec<CapsulePart> = parts
        .iter()
        .map(|p| CapsulePart {
            p0: transform.apply(p.p0),
            p1: transform.apply(p.p1),
            radius: p.radius * transform.scale,
        })
        .collect();

    let camera = canonical_camera();
    let joints2d = synthesize_j2d(&camera, &joints, spec.noise_sigma, spec.seed)?;
    let gt_rig = Rig::new(topo, joints, skinning)?;
    Ok((
        RiggedSample {
            mesh,
            camera,
            joints2d,
            gt_rig,
        },
        parts,
    ))
}

pub fn generate_character(spec: &CharacterSpec) -> Result<RiggedSample> {
    Ok(generate_character_with_parts(spec)?.0)
}

/// Head-to-body ratio distribution for dataset generation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RatioDistribution {
    /// Uniform over [lo, hi] (the diverse-proportions regime).
    Uniform { lo: f64, hi: f64 },
    /// Every character at the same ratio (the single-proportion regime).
    Point(f64),
}

impl RatioDistribution {
    pub fn uniform_default() -> RatioDistribution {
        RatioDistribution::Uniform { lo: 2.0, hi: 9.0 }
    }

    fn sample(&self, rng: &mut Rng) -> f64 {
        match *self {
            RatioDistribution::Uniform { lo, hi } => rng.uniform(lo, hi),
            RatioDistribution::Point(r) => r,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetSplit {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

impl DatasetSplit {
    pub fn ids(&self, name: &str) -> Result<&[usize]> {
        match name {
            "train" => Ok(&self.train),
            "val" => Ok(&self.val),
            "test" => Ok(&self.test),
            other => Err(Error::invalid(
                "split",
                format!("unknown split `{other}` (expected train, val or test)"),
            )),
        }
    }

    pub fn all_ids(&self) -> Vec<usize> {
        let mut ids: Vec<usize> =
            [&self.train[..], &self.val[..], &self.test[..]].concat();
        ids.sort_unstable();
        ids
    }
}

/// Generate `count` characters with ratios from the given distribution and a
/// deterministic shuffled 80/10/10 split.
pub fn generate_dataset(
    count: usize,
    distribution: RatioDistribution,
    seed: u64,
    vertex_budget: usize,
    noise_sigma: f64,
) -> Result<(Vec<RiggedSample>, DatasetSplit)> {
    if count < 10 {
        return Err(Error::invalid(
            "dataset",
            format!("count {count} below the minimum of 10"),
        ));
    }
    let root = Rng::new(seed);
    let mut samples = Vec::with_capacity(count);
    for i in 0..count {
        let mut stream = root.split(i as u64);
        let ratio = distribution.sample(&mut stream);
        let spec = CharacterSpec::sample(ratio, vertex_budget, noise_sigma, &mut stream);
        samples.push(generate_character(&spec)?);
    }

    let mut ids: Vec<usize> = (0..count).collect();
    let mut shuffle_rng = root.split(u64::MAX);
    shuffle_rng.shuffle(&mut ids);
    let n_train = count * 8 / 10;
    let n_val = count / 10;
    let split = DatasetSplit {
        train: ids[..n_train].to_vec(),
        val: ids[n_train..n_train + n_val].to_vec(),
        test: ids[n_train + n_val..].to_vec(),
    };
    Ok((samples, split))
}

fn sample_dir(root: &Path, id: usize) -> PathBuf {
    root.join(format!("{id:04}"))
}

/// Write a dataset directory: `NNNN/{mesh.obj, rig.txt, camera.txt,
/// joints2d.txt}` plus `split.txt`.
pub fn write_dataset(root: &Path, samples: &[RiggedSample], split: &DatasetSplit) -> Result<()> {
    std::fs::create_dir_all(root).map_err(|e| Error::io(root, e))?;
    for (id, sample) in samples.iter().enumerate() {
        let dir = sample_dir(root, id);
        std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        save_obj(&sample.mesh, &dir.join("mesh.obj"))?;
        save_rig(&sample.gt_rig, &dir.join("rig.txt"))?;
        sample.camera.save(&dir.join("camera.txt"))?;
        sample.joints2d.save(&dir.join("joints2d.txt"))?;
    }
    let mut w = KvWriter::new();
    let fmt = |ids: &[usize]| ids.iter().map(|i| *i as i64).collect::<Vec<i64>>();
    w.ints("train", &fmt(&split.train));
    w.ints("val", &fmt(&split.val));
    w.ints("test", &fmt(&split.test));
    w.save(&root.join("split.txt"))
}

#[derive(Debug, Clone)]
pub struct LoadedSample {
    pub id: usize,
    pub mesh: TriMesh,
    pub camera: CameraModel,
    pub joints2d: Joints2D,
    pub gt_rig: Rig,
}

pub fn load_split(root: &Path) -> Result<DatasetSplit> {
    let kv = KvFile::load(&root.join("split.txt"))?;
    let to_ids = |vals: Vec<i64>| vals.into_iter().map(|v| v as usize).collect::<Vec<usize>>();
    Ok(DatasetSplit {
        train: to_ids(kv.ints("train")?),
        val: to_ids(kv.ints("val")?),
        test: to_ids(kv.ints("test")?),
    })
}

pub fn load_sample(root: &Path, id: usize) -> Result<LoadedSample> {
    let dir = sample_dir(root, id);
    Ok(LoadedSample {
        id,
        mesh: load_obj(&dir.join("mesh.obj"))?,
        camera: CameraModel::load(&dir.join("camera.txt"))?,
        joints2d: Joints2D::load(&dir.join("joints2d.txt"))?,
        gt_rig: load_rig(&dir.join("rig.txt"))?,
    })
}

/// Load every sample named by the split file.
pub fn load_dataset(root: &Path) -> Result<(Vec<LoadedSample>, DatasetSplit)> {
    let split = load_split(root)?;
    let samples = split
        .all_ids()
        .into_iter()
        .map(|id| load_sample(root, id))
        .collect::<Result<Vec<_>>>()?;
    Ok((samples, split))
}
