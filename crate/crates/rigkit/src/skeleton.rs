//! The fixed 22-joint humanoid skeleton: topology, rig container, forward
//! kinematics, linear blend skinning and rig file I/O.

use std::path::Path;

use crate::kvfile::{KvFile, KvWriter};
use crate::math::{Mat3, Mat4, Vec3};
use crate::mesh::TriMesh;
use crate::{Error, Result};

pub const JOINT_COUNT: usize = 22;
pub const BONE_COUNT: usize = JOINT_COUNT - 1;

/// Joints may extend slightly beyond the normalized mesh box.
pub const JOINT_BOX_LIMIT: f64 = 0.75;

/// Row sums within this tolerance of 1 are renormalized on load; worse ones
/// are rejected.
const ROW_SUM_LOAD_TOL: f64 = 1e-4;
const ROW_SUM_TOL: f64 = 1e-6;

/// Fixed humanoid joint hierarchy. Always 22 joints forming a tree with a
/// single root; the 21 bones are (parent, child) pairs ordered by child index.
#[derive(Debug, Clone, PartialEq)]
pub struct SkeletonTopology {
    joint_names: Vec<String>,
    parent: Vec<Option<usize>>,
}

/// The pinned 22-joint humanoid topology (industry-standard naming):
/// Hips(root) -> Spine -> Spine1 -> Spine2 -> Neck -> Head, with
/// Spine2 -> {Left,Right}Shoulder -> Arm -> ForeArm -> Hand and
/// Hips -> {Left,Right}UpLeg -> Leg -> Foot -> ToeBase.
pub fn mixamo_topology() -> SkeletonTopology {
    const NAMES: [&str; JOINT_COUNT] = [
        "Hips",
        "Spine",
        "Spine1",
        "Spine2",
        "Neck",
        "Head",
        "LeftShoulder",
        "LeftArm",
        "LeftForeArm",
        "LeftHand",
        "RightShoulder",
        "RightArm",
        "RightForeArm",
        "RightHand",
        "LeftUpLeg",
        "LeftLeg",
        "LeftFoot",
        "LeftToeBase",
        "RightUpLeg",
        "RightLeg",
        "RightFoot",
        "RightToeBase",
    ];
    const PARENTS: [i64; JOINT_COUNT] = [
        -1, 0, 1, 2, 3, 4, 3, 6, 7, 8, 3, 10, 11, 12, 0, 14, 15, 16, 0, 18, 19, 20,
    ];
    SkeletonTopology::new(
        NAMES.iter().map(|s| s.to_string()).collect(),
        PARENTS
            .iter()
            .map(|&p| if p < 0 { None } else { Some(p as usize) })
            .collect(),
    )
    .expect("builtin topology is valid")
}

impl SkeletonTopology {
    pub fn new(joint_names: Vec<String>, parent: Vec<Option<usize>>) -> Result<SkeletonTopology> {
        if joint_names.len() != JOINT_COUNT || parent.len() != JOINT_COUNT {
            return Err(Error::invalid(
                "topology",
                format!(
                    "expected {JOINT_COUNT} joints, found {} names / {} parents",
                    joint_names.len(),
                    parent.len()
                ),
            ));
        }
        let roots = parent.iter().filter(|p| p.is_none()).count();
        if roots != 1 {
            return Err(Error::invalid(
                "topology",
                format!("expected exactly one root, found {roots}"),
            ));
        }
        // Tree check: walking up from every joint must reach the root without
        // revisiting a node.
        for start in 0..JOINT_COUNT {
            let mut seen = [false; JOINT_COUNT];
            let mut cur = start;
            loop {
                if seen[cur] {
                    return Err(Error::invalid("topology", "parent graph contains a cycle"));
                }
                seen[cur] = true;
                match parent[cur] {
                    Some(p) if p < JOINT_COUNT => cur = p,
                    Some(p) => {
                        return Err(Error::invalid(
                            "topology",
                            format!("parent index {p} out of range"),
                        ))
                    }
                    None => break,
                }
            }
        }
        Ok(SkeletonTopology {
            joint_names,
            parent,
        })
    }

    pub fn joint_names(&self) -> &[String] {
        &self.joint_names
    }

    pub fn parent(&self, joint: usize) -> Option<usize> {
        self.parent[joint]
    }

    pub fn root(&self) -> usize {
        self.parent.iter().position(|p| p.is_none()).unwrap()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.joint_names.iter().position(|n| n == name)
    }

    /// The 21 bones as (parent, child), ordered by child index.
    pub fn bones(&self) -> Vec<(usize, usize)> {
        (0..JOINT_COUNT)
            .filter_map(|j| self.parent[j].map(|p| (p, j)))
            .collect()
    }

    /// Joint order sorted so parents precede children (root first).
    pub fn topological_order(&self) -> Vec<usize> {
        let mut order = Vec::with_capacity(JOINT_COUNT);
        let mut placed = [false; JOINT_COUNT];
        while order.len() < JOINT_COUNT {
            for j in 0..JOINT_COUNT {
                if placed[j] {
                    continue;
                }
                let ready = match self.parent[j] {
                    None => true,
                    Some(p) => placed[p],
                };
                if ready {
                    placed[j] = true;
                    order.push(j);
                }
            }
        }
        order
    }
}

/// Row-stochastic vertex-to-joint weight matrix (m x 22). May have zero rows
/// for skeleton-only rigs.
#[derive(Debug, Clone, PartialEq)]
pub struct SkinningMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl SkinningMatrix {
    pub fn empty() -> SkinningMatrix {
        SkinningMatrix {
            rows: 0,
            cols: JOINT_COUNT,
            data: Vec::new(),
        }
    }

    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<SkinningMatrix> {
        if data.len() != rows * cols {
            return Err(Error::invalid(
                "skinning",
                format!("{} values for {rows}x{cols} matrix", data.len()),
            ));
        }
        let m = SkinningMatrix { rows, cols, data };
        m.validate(ROW_SUM_TOL)?;
        Ok(m)
    }

    /// Build from raw data, renormalizing row sums within `1e-4` of 1 and
    /// rejecting anything worse (the rig-file tolerance rule).
    pub fn new_renormalized(rows: usize, cols: usize, mut data: Vec<f64>) -> Result<SkinningMatrix> {
        if data.len() != rows * cols {
            return Err(Error::invalid(
                "skinning",
                format!("{} values for {rows}x{cols} matrix", data.len()),
            ));
        }
        for i in 0..rows {
            let row = &mut data[i * cols..(i + 1) * cols];
            for (j, w) in row.iter().enumerate() {
                if *w < 0.0 {
                    return Err(Error::invalid(
                        "skinning",
                        format!("negative weight {w} at vertex {i}, joint {j}"),
                    ));
                }
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > ROW_SUM_LOAD_TOL {
                return Err(Error::invalid(
                    "skinning",
                    format!("row {i} sums to {sum}, outside the {ROW_SUM_LOAD_TOL} tolerance"),
                ));
            }
            for w in row.iter_mut() {
                *w /= sum;
            }
        }
        Ok(SkinningMatrix { rows, cols, data })
    }

    fn validate(&self, tol: f64) -> Result<()> {
        for i in 0..self.rows {
            let row = self.row(i);
            let mut sum = 0.0;
            for (j, &w) in row.iter().enumerate() {
                if !w.is_finite() || w < 0.0 {
                    return Err(Error::invalid(
                        "skinning",
                        format!("invalid weight {w} at vertex {i}, joint {j}"),
                    ));
                }
                sum += w;
            }
            if (sum - 1.0).abs() > tol {
                return Err(Error::invalid(
                    "skinning",
                    format!("row {i} sums to {sum}"),
                ));
            }
        }
        Ok(())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }
}

/// A rigged skeleton: topology, joint positions in normalized mesh space and
/// (possibly empty) skinning weights.
#[derive(Debug, Clone, PartialEq)]
pub struct Rig {
    pub topology: SkeletonTopology,
    pub joints: Vec<Vec3>,
    pub skinning: SkinningMatrix,
}

impl Rig {
    pub fn new(
        topology: SkeletonTopology,
        joints: Vec<Vec3>,
        skinning: SkinningMatrix,
    ) -> Result<Rig> {
        if joints.len() != JOINT_COUNT {
            return Err(Error::invalid(
                "rig",
                format!("expected {JOINT_COUNT} joints, found {}", joints.len()),
            ));
        }
        for (i, j) in joints.iter().enumerate() {
            if !j.is_finite() {
                return Err(Error::invalid("rig", format!("joint {i} is non-finite")));
            }
            if j.max_abs() > JOINT_BOX_LIMIT {
                return Err(Error::invalid(
                    "rig",
                    format!(
                        "joint {i} at ({}, {}, {}) outside the +-{JOINT_BOX_LIMIT} box",
                        j.x, j.y, j.z
                    ),
                ));
            }
        }
        Ok(Rig {
            topology,
            joints,
            skinning,
        })
    }

    /// Midpoint-uniform samples along every bone, endpoints included.
    /// Total sample count is always `21 * samples_per_bone`.
    pub fn bone_segment_samples(&self, samples_per_bone: usize) -> Vec<Vec3> {
        bone_segment_samples(&self.topology, &self.joints, samples_per_bone)
    }
}

pub fn bone_segment_samples(
    topology: &SkeletonTopology,
    joints: &[Vec3],
    samples_per_bone: usize,
) -> Vec<Vec3> {
    assert!(samples_per_bone >= 2, "need at least the two endpoints");
    let mut out = Vec::with_capacity(BONE_COUNT * samples_per_bone);
    for (p, c) in topology.bones() {
        for s in 0..samples_per_bone {
            let t = s as f64 / (samples_per_bone - 1) as f64;
            out.push(joints[p].lerp(joints[c], t));
        }
    }
    out
}

/// Per-joint rotations as axis-angle vectors (radians); root translation is
/// fixed at zero. The identity pose is all zeros.
#[derive(Debug, Clone, PartialEq)]
pub struct Pose {
    rotations: Vec<Vec3>,
}

impl Pose {
    pub fn identity() -> Pose {
        Pose {
            rotations: vec![Vec3::ZERO; JOINT_COUNT],
        }
    }

    pub fn from_axis_angles(rotations: Vec<Vec3>) -> Result<Pose> {
        if rotations.len() != JOINT_COUNT {
            return Err(Error::invalid(
                "pose",
                format!("expected {JOINT_COUNT} rotations, found {}", rotations.len()),
            ));
        }
        for (i, r) in rotations.iter().enumerate() {
            if !r.is_finite() {
                return Err(Error::invalid("pose", format!("rotation {i} is non-finite")));
            }
        }
        Ok(Pose { rotations })
    }

    pub fn rotations(&self) -> &[Vec3] {
        &self.rotations
    }

    pub fn set_rotation(&mut self, joint: usize, axis_angle: Vec3) {
        self.rotations[joint] = axis_angle;
    }

    pub fn rotation_matrix(&self, joint: usize) -> Mat3 {
        Mat3::from_axis_angle(self.rotations[joint])
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w = KvWriter::new();
        for r in &self.rotations {
            w.floats("rotation", &[r.x, r.y, r.z]);
        }
        w.save(path)
    }

    pub fn load(path: &Path) -> Result<Pose> {
        let kv = KvFile::load(path)?;
        let vals = kv.floats_exact("rotation", JOINT_COUNT * 3)?;
        Pose::from_axis_angles(
            vals.chunks(3)
                .map(|c| Vec3 {
                    x: c[0],
                    y: c[1],
                    z: c[2],
                })
                .collect(),
        )
    }
}

/// Rest-to-posed transform per joint. The root rotates about its own rest
/// position; each child composes its parent's transform with a rotation
/// about the child's rest position. The identity pose yields the identity
/// transform for every joint.
pub fn forward_kinematics(rig: &Rig, pose: &Pose) -> Vec<Mat4> {
    let mut transforms = vec![Mat4::IDENTITY; JOINT_COUNT];
    for j in rig.topology.topological_order() {
        let local = Mat4::rotation_about(pose.rotation_matrix(j), rig.joints[j]);
        transforms[j] = match rig.topology.parent(j) {
            None => local,
            Some(p) => transforms[p].mul_mat(local),
        };
    }
    transforms
}

/// Linear blend skinning: `v_i' = sum_j w_ij T_j v_i`.
pub fn linear_blend_skinning(
    mesh: &TriMesh,
    rig: &Rig,
    skinning: &SkinningMatrix,
    pose: &Pose,
) -> Result<Vec<Vec3>> {
    if skinning.rows() != mesh.vertex_count() {
        return Err(Error::invalid(
            "skinning",
            format!(
                "skinning has {} rows but mesh has {} vertices",
                skinning.rows(),
                mesh.vertex_count()
            ),
        ));
    }
    let transforms = forward_kinematics(rig, pose);
    let mut out = Vec::with_capacity(mesh.vertex_count());
    for (i, &v) in mesh.vertices().iter().enumerate() {
        let weights = skinning.row(i);
        // Blend the matrices, then apply. The (1 - sum) identity term absorbs
        // row-sum rounding so the identity pose reproduces rest vertices
        // exactly and one-hot rows reduce to the bare joint transform.
        let mut blended = Mat4([[0.0; 4]; 4]);
        let mut weight_sum = 0.0;
        for (j, &w) in weights.iter().enumerate() {
            if w != 0.0 {
                blended = blended.add(transforms[j].scale(w));
                weight_sum += w;
            }
        }
        blended = blended.add(Mat4::IDENTITY.scale(1.0 - weight_sum));
        out.push(blended.transform_point(v));
    }
    Ok(out)
}

pub fn save_rig(rig: &Rig, path: &Path) -> Result<()> {
    let mut w = KvWriter::new();
    let names: Vec<&str> = rig.topology.joint_names().iter().map(|s| s.as_str()).collect();
    w.strings("joint_names", &names);
    let parents: Vec<i64> = (0..JOINT_COUNT)
        .map(|j| rig.topology.parent(j).map_or(-1, |p| p as i64))
        .collect();
    w.ints("parents", &parents);
    for j in &rig.joints {
        w.floats("joint", &[j.x, j.y, j.z]);
    }
    w.ints("vertex_count", &[rig.skinning.rows() as i64]);
    for i in 0..rig.skinning.rows() {
        for j in 0..rig.skinning.cols() {
            let weight = rig.skinning.get(i, j);
            if weight != 0.0 {
                w.floats("skin", &[i as f64, j as f64, weight]);
            }
        }
    }
    w.save(path)
}

pub fn load_rig(path: &Path) -> Result<Rig> {
    let kv = KvFile::load(path)?;
    let names = kv.tokens("joint_names")?;
    let parents_raw = kv.ints("parents")?;
    if parents_raw.len() != JOINT_COUNT {
        return Err(Error::invalid(
            "rig",
            format!("expected {JOINT_COUNT} parents, found {}", parents_raw.len()),
        ));
    }
    let parents = parents_raw
        .iter()
        .map(|&p| if p < 0 { None } else { Some(p as usize) })
        .collect();
    let topology = SkeletonTopology::new(names, parents)?;

    let joint_vals = kv.floats_exact("joint", JOINT_COUNT * 3)?;
    let joints: Vec<Vec3> = joint_vals
        .chunks(3)
        .map(|c| Vec3 {
            x: c[0],
            y: c[1],
            z: c[2],
        })
        .collect();

    let vertex_count = kv.int("vertex_count")? as usize;
    let skinning = if vertex_count == 0 {
        SkinningMatrix::empty()
    } else {
        let mut data = vec![0.0; vertex_count * JOINT_COUNT];
        if kv.has("skin") {
            let triplets = kv.floats("skin")?;
            if triplets.len() % 3 != 0 {
                return Err(Error::invalid("rig", "skin triplets must be (vertex, joint, weight)"));
            }
            for t in triplets.chunks(3) {
                let (vi, ji, w) = (t[0] as usize, t[1] as usize, t[2]);
                if vi >= vertex_count || ji >= JOINT_COUNT {
                    return Err(Error::invalid(
                        "rig",
                        format!("skin triplet ({vi}, {ji}) out of range"),
                    ));
                }
                if w < 0.0 {
                    return Err(Error::invalid(
                        "rig",
                        format!("negative skin weight {w} at vertex {vi}, joint {ji}"),
                    ));
                }
                data[vi * JOINT_COUNT + ji] = w;
            }
        }
        SkinningMatrix::new_renormalized(vertex_count, JOINT_COUNT, data)?
    };
    Rig::new(topology, joints, skinning)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::vec3;
    use crate::mesh::box_mesh;
    use crate::rng::Rng;

    fn t_pose_joints() -> Vec<Vec3> {
        // A plausible normalized-space layout for tests.
        let topo = mixamo_topology();
        let mut joints = vec![Vec3::ZERO; JOINT_COUNT];
        let set = |joints: &mut Vec<Vec3>, name: &str, p: Vec3| {
            let idx = topo.index_of(name).unwrap();
            joints[idx] = p;
        };
        set(&mut joints, "Hips", vec3(0.0, 0.0, 0.0));
        set(&mut joints, "Spine", vec3(0.0, 0.07, 0.0));
        set(&mut joints, "Spine1", vec3(0.0, 0.14, 0.0));
        set(&mut joints, "Spine2", vec3(0.0, 0.21, 0.0));
        set(&mut joints, "Neck", vec3(0.0, 0.30, 0.0));
        set(&mut joints, "Head", vec3(0.0, 0.35, 0.0));
        set(&mut joints, "LeftShoulder", vec3(0.04, 0.27, 0.0));
        set(&mut joints, "LeftArm", vec3(0.1, 0.27, 0.0));
        set(&mut joints, "LeftForeArm", vec3(0.25, 0.27, 0.0));
        set(&mut joints, "LeftHand", vec3(0.38, 0.27, 0.0));
        set(&mut joints, "RightShoulder", vec3(-0.04, 0.27, 0.0));
        set(&mut joints, "RightArm", vec3(-0.1, 0.27, 0.0));
        set(&mut joints, "RightForeArm", vec3(-0.25, 0.27, 0.0));
        set(&mut joints, "RightHand", vec3(-0.38, 0.27, 0.0));
        set(&mut joints, "LeftUpLeg", vec3(0.06, -0.03, 0.0));
        set(&mut joints, "LeftLeg", vec3(0.06, -0.22, 0.0));
        set(&mut joints, "LeftFoot", vec3(0.06, -0.42, 0.0));
        set(&mut joints, "LeftToeBase", vec3(0.06, -0.46, 0.05));
        set(&mut joints, "RightUpLeg", vec3(-0.06, -0.03, 0.0));
        set(&mut joints, "RightLeg", vec3(-0.06, -0.22, 0.0));
        set(&mut joints, "RightFoot", vec3(-0.06, -0.42, 0.0));
        set(&mut joints, "RightToeBase", vec3(-0.06, -0.46, 0.05));
        joints
    }

    fn uniform_skinning(rows: usize) -> SkinningMatrix {
        let w = 1.0 / JOINT_COUNT as f64;
        SkinningMatrix::new(rows, JOINT_COUNT, vec![w; rows * JOINT_COUNT]).unwrap()
    }

    fn test_rig(rows: usize) -> Rig {
        Rig::new(mixamo_topology(), t_pose_joints(), uniform_skinning(rows)).unwrap()
    }

    #[test]
    fn topology_counts() {
        let topo = mixamo_topology();
        assert_eq!(topo.joint_names().len(), 22);
        assert_eq!(topo.bones().len(), 21);
        let head = topo.index_of("Head").unwrap();
        let neck = topo.index_of("Neck").unwrap();
        assert_eq!(topo.parent(head), Some(neck));
        assert_eq!(topo.root(), topo.index_of("Hips").unwrap());
    }

    #[test]
    fn identity_pose_gives_identity_transforms() {
        let rig = test_rig(0);
        let transforms = forward_kinematics(&rig, &Pose::identity());
        for t in transforms {
            assert_eq!(t, Mat4::IDENTITY);
        }
    }

    #[test]
    fn root_rotation_is_rigid() {
        let rig = test_rig(0);
        let mut pose = Pose::identity();
        pose.set_rotation(
            rig.topology.root(),
            vec3(0.0, std::f64::consts::FRAC_PI_2, 0.0),
        );
        let transforms = forward_kinematics(&rig, &pose);
        let moved: Vec<Vec3> = (0..JOINT_COUNT)
            .map(|j| transforms[j].transform_point(rig.joints[j]))
            .collect();
        for a in 0..JOINT_COUNT {
            for b in 0..JOINT_COUNT {
                let before = (rig.joints[a] - rig.joints[b]).norm();
                let after = (moved[a] - moved[b]).norm();
                assert!((before - after).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn two_bone_chain_hand_computed() {
        // Chain along x: parent at origin, child at (1,0,0), grandchild at
        // (2,0,0). Rotating the child 90 degrees about z at its rest
        // position maps the grandchild's offset (1,0,0) to (0,1,0).
        let topo = mixamo_topology();
        let mut joints = t_pose_joints();
        // Use Hips -> Spine -> Spine1 as the chain under test.
        joints[0] = vec3(0.0, 0.0, 0.0);
        joints[1] = vec3(0.25, 0.0, 0.0);
        joints[2] = vec3(0.5, 0.0, 0.0);
        let rig = Rig::new(topo, joints, SkinningMatrix::empty()).unwrap();
        let mut pose = Pose::identity();
        pose.set_rotation(1, vec3(0.0, 0.0, std::f64::consts::FRAC_PI_2));
        let transforms = forward_kinematics(&rig, &pose);
        let grandchild = transforms[2].transform_point(rig.joints[2]);
        let expected = vec3(0.25, 0.25, 0.0); // child + rotated offset
        assert!((grandchild - expected).norm() < 1e-12);
    }

    #[test]
    fn lbs_identity_pose_is_exact() {
        let mesh = box_mesh(vec3(-0.4, -0.4, -0.4), vec3(0.4, 0.4, 0.4));
        let rig = test_rig(mesh.vertex_count());
        let deformed =
            linear_blend_skinning(&mesh, &rig, &rig.skinning, &Pose::identity()).unwrap();
        for (a, b) in deformed.iter().zip(mesh.vertices()) {
            assert_eq!(a, b);
        }
    }

    #[test]
    fn lbs_all_root_weight_is_rigid_rotation() {
        let mesh = box_mesh(vec3(-0.4, -0.4, -0.4), vec3(0.4, 0.4, 0.4));
        let m = mesh.vertex_count();
        let mut data = vec![0.0; m * JOINT_COUNT];
        for i in 0..m {
            data[i * JOINT_COUNT] = 1.0; // all weight on root (index 0 = Hips)
        }
        let skinning = SkinningMatrix::new(m, JOINT_COUNT, data).unwrap();
        let rig = test_rig(0);
        let mut pose = Pose::identity();
        let aa = vec3(0.3, 0.5, -0.2);
        pose.set_rotation(0, aa);
        let deformed = linear_blend_skinning(&mesh, &rig, &skinning, &pose).unwrap();
        let r = Mat3::from_axis_angle(aa);
        let pivot = rig.joints[0];
        for (d, &v) in deformed.iter().zip(mesh.vertices()) {
            let expected = r.mul_vec(v - pivot) + pivot;
            assert!((*d - expected).norm() < 1e-12);
        }
    }

    #[test]
    fn lbs_half_half_matches_matrix_blend_oracle() {
        let mesh = box_mesh(vec3(-0.3, -0.3, -0.3), vec3(0.3, 0.3, 0.3));
        let m = mesh.vertex_count();
        let mut data = vec![0.0; m * JOINT_COUNT];
        for i in 0..m {
            data[i * JOINT_COUNT + 1] = 0.5; // Spine
            data[i * JOINT_COUNT + 4] = 0.5; // Neck
        }
        let skinning = SkinningMatrix::new(m, JOINT_COUNT, data).unwrap();
        let rig = test_rig(0);
        let mut pose = Pose::identity();
        pose.set_rotation(1, vec3(0.4, 0.0, 0.1));
        let deformed = linear_blend_skinning(&mesh, &rig, &skinning, &pose).unwrap();

        // Oracle: blend the two 4x4 transforms explicitly per vertex.
        let transforms = forward_kinematics(&rig, &pose);
        for (d, &v) in deformed.iter().zip(mesh.vertices()) {
            let blend = transforms[1].scale(0.5).add(transforms[4].scale(0.5));
            let expected = blend.transform_point(v);
            assert!((*d - expected).norm() < 1e-12);
        }
    }

    #[test]
    fn lbs_is_linear_in_weights() {
        let mesh = box_mesh(vec3(-0.3, -0.3, -0.3), vec3(0.3, 0.3, 0.3));
        let m = mesh.vertex_count();
        let mut rng = Rng::new(11);
        let mut random_skinning = || {
            let mut data = vec![0.0; m * JOINT_COUNT];
            for i in 0..m {
                let mut sum = 0.0;
                for j in 0..JOINT_COUNT {
                    let w = rng.next_f64();
                    data[i * JOINT_COUNT + j] = w;
                    sum += w;
                }
                for j in 0..JOINT_COUNT {
                    data[i * JOINT_COUNT + j] /= sum;
                }
            }
            SkinningMatrix::new(m, JOINT_COUNT, data).unwrap()
        };
        let w1 = random_skinning();
        let w2 = random_skinning();
        let mixed_data: Vec<f64> = w1
            .data()
            .iter()
            .zip(w2.data())
            .map(|(a, b)| 0.5 * (a + b))
            .collect();
        let mixed = SkinningMatrix::new(m, JOINT_COUNT, mixed_data).unwrap();

        let rig = test_rig(0);
        let mut pose = Pose::identity();
        pose.set_rotation(1, vec3(0.2, -0.3, 0.15));
        pose.set_rotation(14, vec3(0.0, 0.0, 0.25));

        let d1 = linear_blend_skinning(&mesh, &rig, &w1, &pose).unwrap();
        let d2 = linear_blend_skinning(&mesh, &rig, &w2, &pose).unwrap();
        let dm = linear_blend_skinning(&mesh, &rig, &mixed, &pose).unwrap();
        for i in 0..m {
            let avg = (d1[i] + d2[i]) * 0.5;
            assert!((dm[i] - avg).norm() < 1e-12);
        }
    }

    #[test]
    fn one_hot_skinning_equals_rigid_attachment() {
        let mesh = box_mesh(vec3(-0.2, -0.2, -0.2), vec3(0.2, 0.2, 0.2));
        let m = mesh.vertex_count();
        let joint = 8; // LeftForeArm
        let mut data = vec![0.0; m * JOINT_COUNT];
        for i in 0..m {
            data[i * JOINT_COUNT + joint] = 1.0;
        }
        let skinning = SkinningMatrix::new(m, JOINT_COUNT, data).unwrap();
        let rig = test_rig(0);
        let mut pose = Pose::identity();
        pose.set_rotation(7, vec3(0.0, 0.6, 0.0));
        pose.set_rotation(8, vec3(0.3, 0.0, 0.0));
        let deformed = linear_blend_skinning(&mesh, &rig, &skinning, &pose).unwrap();
        let transforms = forward_kinematics(&rig, &pose);
        for (d, &v) in deformed.iter().zip(mesh.vertices()) {
            let expected = transforms[joint].transform_point(v);
            assert_eq!(*d, expected);
        }
    }

    #[test]
    fn bone_samples_counts_and_midpoints() {
        let rig = test_rig(0);
        let two = rig.bone_segment_samples(2);
        assert_eq!(two.len(), 2 * BONE_COUNT);
        let three = rig.bone_segment_samples(3);
        assert_eq!(three.len(), 3 * BONE_COUNT);
        // middle sample of each bone is the midpoint
        for (b, (p, c)) in rig.topology.bones().iter().enumerate() {
            let mid = (rig.joints[*p] + rig.joints[*c]) * 0.5;
            assert!((three[b * 3 + 1] - mid).norm() < 1e-15);
        }
        // degenerate bone: all samples collapse onto the joint
        let mut joints = t_pose_joints();
        joints[1] = joints[0];
        let rig2 = Rig::new(mixamo_topology(), joints, SkinningMatrix::empty()).unwrap();
        let s = rig2.bone_segment_samples(5);
        for i in 0..5 {
            assert_eq!(s[i], rig2.joints[0]);
        }
    }

    #[test]
    fn rig_roundtrip_is_bitwise() {
        let dir = std::env::temp_dir().join("rigkit_rig_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("rig.txt");

        let mut rng = Rng::new(3);
        let m = 10;
        let mut data = vec![0.0; m * JOINT_COUNT];
        for i in 0..m {
            let mut sum = 0.0;
            for j in 0..JOINT_COUNT {
                let w = if rng.next_f64() < 0.3 { rng.next_f64() } else { 0.0 };
                data[i * JOINT_COUNT + j] = w;
                sum += w;
            }
            if sum == 0.0 {
                data[i * JOINT_COUNT] = 1.0;
                sum = 1.0;
            }
            for j in 0..JOINT_COUNT {
                data[i * JOINT_COUNT + j] /= sum;
            }
        }
        let rig = Rig::new(
            mixamo_topology(),
            t_pose_joints(),
            SkinningMatrix::new(m, JOINT_COUNT, data).unwrap(),
        )
        .unwrap();
        save_rig(&rig, &path).unwrap();
        let back = load_rig(&path).unwrap();
        for (a, b) in rig.joints.iter().zip(&back.joints) {
            assert_eq!(a.x.to_bits(), b.x.to_bits());
            assert_eq!(a.y.to_bits(), b.y.to_bits());
            assert_eq!(a.z.to_bits(), b.z.to_bits());
        }
        // Renormalization may touch the last ulp of weights; 1e-12 is the
        // contract.
        for (a, b) in rig.skinning.data().iter().zip(back.skinning.data()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn rig_file_negative_weight_rejected() {
        let dir = std::env::temp_dir().join("rigkit_rig_neg");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("rig.txt");
        let rig = test_rig(2);
        save_rig(&rig, &path).unwrap();
        let mut text = std::fs::read_to_string(&path).unwrap();
        text.push_str("skin 0 3 -0.5\n");
        std::fs::write(&path, text).unwrap();
        assert!(load_rig(&path).is_err());
    }

    #[test]
    fn rig_file_row_sum_tolerance() {
        let dir = std::env::temp_dir().join("rigkit_rig_tol");
        std::fs::create_dir_all(&dir).unwrap();

        let make_text = |w: f64| {
            let rig = test_rig(0);
            let path = dir.join("base.txt");
            save_rig(&rig, &path).unwrap();
            let mut text = std::fs::read_to_string(&path).unwrap();
            text = text.replace("vertex_count 0", "vertex_count 1");
            text.push_str(&format!("skin 0 0 {w}\n"));
            text
        };

        // 1.00005 is within the 1e-4 tolerance: accepted and renormalized.
        let ok_path = dir.join("ok.txt");
        std::fs::write(&ok_path, make_text(1.00005)).unwrap();
        let rig = load_rig(&ok_path).unwrap();
        assert!((rig.skinning.get(0, 0) - 1.0).abs() < 1e-15);

        // 1.2 is far outside: rejected.
        let bad_path = dir.join("bad.txt");
        std::fs::write(&bad_path, make_text(1.2)).unwrap();
        assert!(load_rig(&bad_path).is_err());
    }
}
