//! Rig quality metrics and geometric skinning baselines.
//!
//! Chamfer-style skeleton metrics (joint-to-joint, joint-to-bone,
//! bone-to-bone), skinning precision and L1, and the deformation error over
//! random small poses. All chamfer variants are symmetrized by averaging
//! both directions and use means, applied uniformly to predictions and
//! ground truth.

use crate::math::{euler_xyz_to_matrix, point_segment_distance, Vec3};
use crate::mesh::TriMesh;
use crate::rng::Rng;
use crate::skeleton::{
    bone_segment_samples, linear_blend_skinning, Pose, Rig, SkinningMatrix, JOINT_COUNT,
};
use crate::{Error, Result};

/// Samples per bone for the bone-to-bone chamfer distance.
pub const B2B_SAMPLES_PER_BONE: usize = 16;
/// Default weight threshold for the influential-joint set.
pub const PRECISION_THRESHOLD: f64 = 1e-4;

fn nearest_point_distance(p: Vec3, points: &[Vec3]) -> f64 {
    points
        .iter()
        .map(|&q| (p - q).norm())
        .fold(f64::INFINITY, f64::min)
}

fn nearest_segment_distance(p: Vec3, segments: &[(Vec3, Vec3)]) -> f64 {
    segments
        .iter()
        .map(|&(a, b)| point_segment_distance(p, a, b))
        .fold(f64::INFINITY, f64::min)
}

fn mean_nearest(points: &[Vec3], targets: &[Vec3]) -> f64 {
    points.iter().map(|&p| nearest_point_distance(p, targets)).sum::<f64>() / points.len() as f64
}

/// Symmetric chamfer distance between two point sets (mean of both
/// directions' mean nearest-neighbor distances).
pub fn chamfer_points(a: &[Vec3], b: &[Vec3]) -> f64 {
    0.5 * (mean_nearest(a, b) + mean_nearest(b, a))
}

/// Joint-to-joint chamfer distance.
pub fn cd_j2j(pred_joints: &[Vec3], gt_joints: &[Vec3]) -> f64 {
    chamfer_points(pred_joints, gt_joints)
}

fn bone_segments(rig: &Rig) -> Vec<(Vec3, Vec3)> {
    rig.topology
        .bones()
        .iter()
        .map(|&(p, c)| (rig.joints[p], rig.joints[c]))
        .collect()
}

/// Joint-to-bone chamfer: joints of one rig against bone segments of the
/// other, symmetrized.
pub fn cd_j2b(pred: &Rig, gt: &Rig) -> f64 {
    let pred_bones = bone_segments(pred);
    let gt_bones = bone_segments(gt);
    let p2g = pred
        .joints
        .iter()
        .map(|&p| nearest_segment_distance(p, &gt_bones))
        .sum::<f64>()
        / pred.joints.len() as f64;
    let g2p = gt
        .joints
        .iter()
        .map(|&p| nearest_segment_distance(p, &pred_bones))
        .sum::<f64>()
        / gt.joints.len() as f64;
    0.5 * (p2g + g2p)
}

/// Bone-to-bone chamfer over dense uniform bone samples.
pub fn cd_b2b(pred: &Rig, gt: &Rig) -> f64 {
    let a = bone_segment_samples(&pred.topology, &pred.joints, B2B_SAMPLES_PER_BONE);
    let b = bone_segment_samples(&gt.topology, &gt.joints, B2B_SAMPLES_PER_BONE);
    chamfer_points(&a, &b)
}

/// Mean over vertices of |pred-set intersect gt-set| / |pred-set|, where a
/// joint is in a vertex's influential set when its weight is at least
/// `threshold`. Vertices with an empty predicted set are skipped.
pub fn skinning_precision(
    pred: &SkinningMatrix,
    gt: &SkinningMatrix,
    threshold: f64,
) -> Result<f64> {
    if pred.rows() != gt.rows() || pred.cols() != gt.cols() {
        return Err(Error::ShapeMismatch {
            op: "skinning_precision",
            lhs: vec![pred.rows(), pred.cols()],
            rhs: vec![gt.rows(), gt.cols()],
        });
    }
    let mut total = 0.0;
    let mut counted = 0usize;
    for i in 0..pred.rows() {
        let p_row = pred.row(i);
        let g_row = gt.row(i);
        let mut pred_size = 0usize;
        let mut inter = 0usize;
        for j in 0..pred.cols() {
            if p_row[j] >= threshold {
                pred_size += 1;
                if g_row[j] >= threshold {
                    inter += 1;
                }
            }
        }
        if pred_size > 0 {
            total += inter as f64 / pred_size as f64;
            counted += 1;
        }
    }
    if counted == 0 {
        return Ok(0.0);
    }
    Ok(total / counted as f64)
}

/// Mean over vertices of the L1 distance between weight rows.
pub fn skinning_l1(pred: &SkinningMatrix, gt: &SkinningMatrix) -> Result<f64> {
    if pred.rows() != gt.rows() || pred.cols() != gt.cols() {
        return Err(Error::ShapeMismatch {
            op: "skinning_l1",
            lhs: vec![pred.rows(), pred.cols()],
            rhs: vec![gt.rows(), gt.cols()],
        });
    }
    if pred.rows() == 0 {
        return Ok(0.0);
    }
    let mut total = 0.0;
    for i in 0..pred.rows() {
        total += pred
            .row(i)
            .iter()
            .zip(gt.row(i))
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>();
    }
    Ok(total / pred.rows() as f64)
}

/// Sample `pose_count` poses with every joint's Euler angles uniform in
/// +-`angle_range_deg`, deform with both skinnings on the same rig, and
/// return the mean vertex distance. Deterministic under `seed`.
pub fn deformation_error(
    mesh: &TriMesh,
    rig: &Rig,
    pred_skinning: &SkinningMatrix,
    gt_skinning: &SkinningMatrix,
    pose_count: usize,
    angle_range_deg: f64,
    seed: u64,
) -> Result<f64> {
    let mut rng = Rng::new(seed);
    let range = angle_range_deg.to_radians();
    let mut total = 0.0;
    let mut count = 0usize;
    for _ in 0..pose_count {
        let mut pose = Pose::identity();
        for j in 0..JOINT_COUNT {
            let r = euler_xyz_to_matrix(
                rng.uniform(-range, range),
                rng.uniform(-range, range),
                rng.uniform(-range, range),
            );
            pose.set_rotation(j, r.to_axis_angle());
        }
        let d_pred = linear_blend_skinning(mesh, rig, pred_skinning, &pose)?;
        let d_gt = linear_blend_skinning(mesh, rig, gt_skinning, &pose)?;
        for (a, b) in d_pred.iter().zip(&d_gt) {
            total += (*a - *b).norm();
            count += 1;
        }
    }
    Ok(total / count.max(1) as f64)
}

/// Full per-sample metric report.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalReport {
    pub cd_j2j: f64,
    pub cd_j2b: f64,
    pub cd_b2b: f64,
    pub precision: f64,
    pub l1: f64,
    pub deformation_error: f64,
}

impl EvalReport {
    pub const CSV_HEADER: &'static str =
        "sample,cd_j2j,cd_j2b,cd_b2b,precision,l1,deformation_error";

    pub fn csv_row(&self, label: &str) -> String {
        format!(
            "{label},{},{},{},{},{},{}",
            self.cd_j2j, self.cd_j2b, self.cd_b2b, self.precision, self.l1, self.deformation_error
        )
    }

    /// Structured text block (key-value lines).
    pub fn to_kv(&self) -> String {
        format!(
            "cd_j2j {}\ncd_j2b {}\ncd_b2b {}\nprecision {}\nl1 {}\ndeformation_error {}\n",
            self.cd_j2j, self.cd_j2b, self.cd_b2b, self.precision, self.l1, self.deformation_error
        )
    }

    pub fn mean_of(reports: &[EvalReport]) -> EvalReport {
        let n = reports.len().max(1) as f64;
        let mut sum = EvalReport {
            cd_j2j: 0.0,
            cd_j2b: 0.0,
            cd_b2b: 0.0,
            precision: 0.0,
            l1: 0.0,
            deformation_error: 0.0,
        };
        for r in reports {
            sum.cd_j2j += r.cd_j2j;
            sum.cd_j2b += r.cd_j2b;
            sum.cd_b2b += r.cd_b2b;
            sum.precision += r.precision;
            sum.l1 += r.l1;
            sum.deformation_error += r.deformation_error;
        }
        EvalReport {
            cd_j2j: sum.cd_j2j / n,
            cd_j2b: sum.cd_j2b / n,
            cd_b2b: sum.cd_b2b / n,
            precision: sum.precision / n,
            l1: sum.l1 / n,
            deformation_error: sum.deformation_error / n,
        }
    }

    /// Compare a predicted rig + skinning against ground truth on one mesh.
    pub fn compute(
        mesh: &TriMesh,
        pred: &Rig,
        gt: &Rig,
        pose_seed: u64,
    ) -> Result<EvalReport> {
        Ok(EvalReport {
            cd_j2j: cd_j2j(&pred.joints, &gt.joints),
            cd_j2b: cd_j2b(pred, gt),
            cd_b2b: cd_b2b(pred, gt),
            precision: skinning_precision(&pred.skinning, &gt.skinning, PRECISION_THRESHOLD)?,
            l1: skinning_l1(&pred.skinning, &gt.skinning)?,
            deformation_error: deformation_error(
                mesh,
                gt,
                &pred.skinning,
                &gt.skinning,
                10,
                10.0,
                pose_seed,
            )?,
        })
    }
}

/// Inverse-distance skinning baseline: weights proportional to
/// `1 / max(dist to joint, eps)^power` over the `top_k` nearest joints.
pub fn baseline_inverse_distance(
    mesh: &TriMesh,
    rig: &Rig,
    power: f64,
    top_k: usize,
) -> SkinningMatrix {
    const EPS: f64 = 1e-8;
    let m = mesh.vertex_count();
    let mut data = vec![0.0; m * JOINT_COUNT];
    for (i, &v) in mesh.vertices().iter().enumerate() {
        let mut dists: Vec<(f64, usize)> = rig
            .joints
            .iter()
            .enumerate()
            .map(|(j, &p)| ((v - p).norm(), j))
            .collect();
        dists.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let row = &mut data[i * JOINT_COUNT..(i + 1) * JOINT_COUNT];
        let mut sum = 0.0;
        for &(d, j) in dists.iter().take(top_k) {
            let w = 1.0 / d.max(EPS).powf(power);
            row[j] += w;
            sum += w;
        }
        for w in row.iter_mut() {
            *w /= sum;
        }
    }
    SkinningMatrix::new(m, JOINT_COUNT, data).expect("renormalized rows")
}

/// Bone-line skinning baseline: like the inverse-distance rule but measured
/// to bone segments, each attributed to the bone's child joint.
pub fn baseline_bone_line(mesh: &TriMesh, rig: &Rig, power: f64, top_k: usize) -> SkinningMatrix {
    const EPS: f64 = 1e-8;
    let m = mesh.vertex_count();
    let bones = rig.topology.bones();
    let mut data = vec![0.0; m * JOINT_COUNT];
    for (i, &v) in mesh.vertices().iter().enumerate() {
        let mut dists: Vec<(f64, usize)> = bones
            .iter()
            .enumerate()
            .map(|(b, &(p, c))| (point_segment_distance(v, rig.joints[p], rig.joints[c]), b))
            .collect();
        dists.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let row = &mut data[i * JOINT_COUNT..(i + 1) * JOINT_COUNT];
        let mut sum = 0.0;
        for &(d, b) in dists.iter().take(top_k) {
            let w = 1.0 / d.max(EPS).powf(power);
            row[bones[b].1] += w;
            sum += w;
        }
        for w in row.iter_mut() {
            *w /= sum;
        }
    }
    SkinningMatrix::new(m, JOINT_COUNT, data).expect("renormalized rows")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::vec3;
    use crate::mesh::box_mesh;
    use crate::skeleton::mixamo_topology;

    fn random_joints(rng: &mut Rng) -> Vec<Vec3> {
        (0..JOINT_COUNT)
            .map(|_| {
                vec3(
                    rng.uniform(-0.4, 0.4),
                    rng.uniform(-0.4, 0.4),
                    rng.uniform(-0.4, 0.4),
                )
            })
            .collect()
    }

    fn rig_with(joints: Vec<Vec3>) -> Rig {
        Rig::new(mixamo_topology(), joints, SkinningMatrix::empty()).unwrap()
    }

    fn random_stochastic(rows: usize, rng: &mut Rng) -> SkinningMatrix {
        let mut data = vec![0.0; rows * JOINT_COUNT];
        for i in 0..rows {
            let mut sum = 0.0;
            for j in 0..JOINT_COUNT {
                let w = if rng.next_f64() < 0.25 { rng.next_f64() } else { 0.0 };
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
        SkinningMatrix::new(rows, JOINT_COUNT, data).unwrap()
    }

    // Brute-force references, written as plain index loops independent of the
    // library helpers.

    fn brute_chamfer(a: &[Vec3], b: &[Vec3]) -> f64 {
        let mut s1 = 0.0;
        for i in 0..a.len() {
            let mut best = f64::INFINITY;
            for j in 0..b.len() {
                let d = (a[i] - b[j]).norm();
                if d < best {
                    best = d;
                }
            }
            s1 += best;
        }
        let mut s2 = 0.0;
        for j in 0..b.len() {
            let mut best = f64::INFINITY;
            for i in 0..a.len() {
                let d = (a[i] - b[j]).norm();
                if d < best {
                    best = d;
                }
            }
            s2 += best;
        }
        0.5 * (s1 / a.len() as f64 + s2 / b.len() as f64)
    }

    #[test]
    fn cd_j2j_identical_is_zero_and_symmetric() {
        let mut rng = Rng::new(1);
        let a = random_joints(&mut rng);
        assert_eq!(cd_j2j(&a, &a), 0.0);
        let b = random_joints(&mut rng);
        assert!((cd_j2j(&a, &b) - cd_j2j(&b, &a)).abs() < 1e-15);
    }

    #[test]
    fn cd_j2j_uniform_shift() {
        // Generic positions: every nearest neighbor is the shifted twin.
        let mut rng = Rng::new(2);
        let a = random_joints(&mut rng);
        let shift = vec3(0.01, 0.0, 0.0);
        let b: Vec<Vec3> = a.iter().map(|&p| p + shift).collect();
        let d = cd_j2j(&a, &b);
        assert!((d - 0.01).abs() < 1e-12, "d = {d}");
        assert!((d - brute_chamfer(&a, &b)).abs() < 1e-15);
    }

    #[test]
    fn cd_j2j_invariant_under_relabeling() {
        let mut rng = Rng::new(3);
        let a = random_joints(&mut rng);
        let b = random_joints(&mut rng);
        let mut perm: Vec<usize> = (0..JOINT_COUNT).collect();
        rng.shuffle(&mut perm);
        let b_perm: Vec<Vec3> = perm.iter().map(|&i| b[i]).collect();
        assert!((cd_j2j(&a, &b) - cd_j2j(&a, &b_perm)).abs() < 1e-15);
    }

    #[test]
    fn cd_j2b_on_segment_and_identity() {
        let mut rng = Rng::new(4);
        let joints = random_joints(&mut rng);
        let rig = rig_with(joints.clone());
        assert_eq!(cd_j2b(&rig, &rig), 0.0);
        assert_eq!(cd_b2b(&rig, &rig), 0.0);

        // A pred joint exactly on a gt bone midpoint has a zero term.
        let (p, c) = rig.topology.bones()[5];
        let mid = (rig.joints[p] + rig.joints[c]) * 0.5;
        let segs = bone_segments(&rig);
        assert!(nearest_segment_distance(mid, &segs) < 1e-15);
    }

    #[test]
    fn cd_b2b_matches_brute_force_over_samples() {
        let mut rng = Rng::new(5);
        let a = rig_with(random_joints(&mut rng));
        let b = rig_with(random_joints(&mut rng));
        let sa = bone_segment_samples(&a.topology, &a.joints, B2B_SAMPLES_PER_BONE);
        let sb = bone_segment_samples(&b.topology, &b.joints, B2B_SAMPLES_PER_BONE);
        let brute = brute_chamfer(&sa, &sb);
        assert!((cd_b2b(&a, &b) - brute).abs() < 1e-12);
    }

    #[test]
    fn precision_cases() {
        let mut rng = Rng::new(6);
        let p = random_stochastic(50, &mut rng);
        assert_eq!(skinning_precision(&p, &p, PRECISION_THRESHOLD).unwrap(), 1.0);

        // pred influential {1, 2}, gt influential {1} -> 0.5
        let mut pd = vec![0.0; JOINT_COUNT];
        pd[1] = 0.5;
        pd[2] = 0.5;
        let mut gd = vec![0.0; JOINT_COUNT];
        gd[1] = 1.0;
        let pm = SkinningMatrix::new(1, JOINT_COUNT, pd).unwrap();
        let gm = SkinningMatrix::new(1, JOINT_COUNT, gd).unwrap();
        assert_eq!(skinning_precision(&pm, &gm, PRECISION_THRESHOLD).unwrap(), 0.5);
    }

    #[test]
    fn precision_matches_brute_force() {
        let mut rng = Rng::new(7);
        for _ in 0..10 {
            let p = random_stochastic(100, &mut rng);
            let g = random_stochastic(100, &mut rng);
            let fast = skinning_precision(&p, &g, PRECISION_THRESHOLD).unwrap();
            // loop-based reference
            let mut acc = 0.0;
            let mut rows = 0;
            for i in 0..100 {
                let mut inter = 0.0;
                let mut size = 0.0;
                for j in 0..JOINT_COUNT {
                    if p.get(i, j) >= PRECISION_THRESHOLD {
                        size += 1.0;
                        if g.get(i, j) >= PRECISION_THRESHOLD {
                            inter += 1.0;
                        }
                    }
                }
                if size > 0.0 {
                    acc += inter / size;
                    rows += 1;
                }
            }
            assert!((fast - acc / rows as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn l1_cases_and_brute_force() {
        let mut rng = Rng::new(8);
        let p = random_stochastic(50, &mut rng);
        assert_eq!(skinning_l1(&p, &p).unwrap(), 0.0);

        // disjoint one-hot rows hit the stochastic maximum of 2
        let mut pd = vec![0.0; JOINT_COUNT];
        pd[0] = 1.0;
        let mut gd = vec![0.0; JOINT_COUNT];
        gd[1] = 1.0;
        let pm = SkinningMatrix::new(1, JOINT_COUNT, pd).unwrap();
        let gm = SkinningMatrix::new(1, JOINT_COUNT, gd).unwrap();
        assert_eq!(skinning_l1(&pm, &gm).unwrap(), 2.0);

        let g = random_stochastic(50, &mut rng);
        let mut brute = 0.0;
        for i in 0..50 {
            for j in 0..JOINT_COUNT {
                brute += (p.get(i, j) - g.get(i, j)).abs();
            }
        }
        brute /= 50.0;
        assert!((skinning_l1(&p, &g).unwrap() - brute).abs() < 1e-12);
    }

    #[test]
    fn deformation_error_zero_cases() {
        let mesh = box_mesh(vec3(-0.3, -0.3, -0.3), vec3(0.3, 0.3, 0.3));
        let mut rng = Rng::new(9);
        let mut rig = rig_with(random_joints(&mut rng));
        rig.skinning = random_stochastic(mesh.vertex_count(), &mut rng);
        let s = rig.skinning.clone();
        // identical skinning -> 0 for any pose sample
        let e = deformation_error(&mesh, &rig, &s, &s, 10, 10.0, 7).unwrap();
        assert_eq!(e, 0.0);
        // zero angle range -> identity poses -> 0 even for different skinning
        let other = random_stochastic(mesh.vertex_count(), &mut rng);
        let e0 = deformation_error(&mesh, &rig, &other, &s, 10, 0.0, 7).unwrap();
        assert_eq!(e0, 0.0);
    }

    #[test]
    fn deformation_error_two_joint_hand_computed() {
        // One vertex, weights split between two joints, one joint rotated:
        // compare against the explicitly blended transforms.
        let mesh = TriMesh::new(vec![vec3(0.2, 0.1, 0.0)], vec![]).unwrap();
        let mut rng = Rng::new(10);
        let rig = rig_with(random_joints(&mut rng));
        let mut pred = vec![0.0; JOINT_COUNT];
        pred[0] = 0.5;
        pred[3] = 0.5;
        let mut gt = vec![0.0; JOINT_COUNT];
        gt[0] = 1.0;
        let pred = SkinningMatrix::new(1, JOINT_COUNT, pred).unwrap();
        let gt = SkinningMatrix::new(1, JOINT_COUNT, gt).unwrap();

        // Reproduce the library's pose stream to compute the expected value.
        let seed = 31;
        let mut pose_rng = Rng::new(seed);
        let range = 10.0_f64.to_radians();
        let mut expected = 0.0;
        for _ in 0..10 {
            let mut pose = Pose::identity();
            for j in 0..JOINT_COUNT {
                let r = euler_xyz_to_matrix(
                    pose_rng.uniform(-range, range),
                    pose_rng.uniform(-range, range),
                    pose_rng.uniform(-range, range),
                );
                pose.set_rotation(j, r.to_axis_angle());
            }
            let t = crate::skeleton::forward_kinematics(&rig, &pose);
            let v = mesh.vertices()[0];
            let blended = t[0].scale(0.5).add(t[3].scale(0.5));
            let v_pred = blended.transform_point(v);
            let v_gt = t[0].transform_point(v);
            expected += (v_pred - v_gt).norm();
        }
        expected /= 10.0;
        let got = deformation_error(&mesh, &rig, &pred, &gt, 10, 10.0, seed).unwrap();
        assert!((got - expected).abs() < 1e-12, "{got} vs {expected}");
        assert!(got > 0.0);
    }

    #[test]
    fn baselines_are_stochastic_and_symmetric() {
        let mesh = box_mesh(vec3(-0.4, -0.4, -0.4), vec3(0.4, 0.4, 0.4));
        let mut rng = Rng::new(11);
        let rig = rig_with(random_joints(&mut rng));
        for skinning in [
            baseline_inverse_distance(&mesh, &rig, 2.0, 4),
            baseline_bone_line(&mesh, &rig, 2.0, 4),
        ] {
            for i in 0..skinning.rows() {
                let sum: f64 = skinning.row(i).iter().sum();
                assert!((sum - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn baseline_vertex_on_joint_gets_full_weight() {
        let mut rng = Rng::new(12);
        let joints = random_joints(&mut rng);
        let mesh = TriMesh::new(vec![joints[7]], vec![]).unwrap();
        let rig = rig_with(joints);
        let skinning = baseline_inverse_distance(&mesh, &rig, 2.0, 4);
        assert!(skinning.get(0, 7) > 1.0 - 1e-9);
    }

    #[test]
    fn baseline_equidistant_pair_splits_evenly() {
        // Vertex equidistant from joints 0 and 1; remaining joints far away.
        let mut joints = vec![vec3(0.5, 0.5, 0.5); JOINT_COUNT];
        joints[0] = vec3(0.1, 0.0, 0.0);
        joints[1] = vec3(-0.1, 0.0, 0.0);
        joints[2] = vec3(0.0, 0.4, 0.0);
        joints[3] = vec3(0.0, -0.4, 0.0);
        let mesh = TriMesh::new(vec![vec3(0.0, 0.0, 0.0)], vec![]).unwrap();
        let rig = rig_with(joints);
        let skinning = baseline_inverse_distance(&mesh, &rig, 2.0, 4);
        assert!((skinning.get(0, 0) - skinning.get(0, 1)).abs() < 1e-12);
        assert!(skinning.get(0, 0) > skinning.get(0, 2));
    }

    #[test]
    fn report_mean_and_csv() {
        let r1 = EvalReport {
            cd_j2j: 0.1,
            cd_j2b: 0.2,
            cd_b2b: 0.3,
            precision: 0.8,
            l1: 0.4,
            deformation_error: 0.05,
        };
        let r2 = EvalReport {
            cd_j2j: 0.3,
            cd_j2b: 0.4,
            cd_b2b: 0.5,
            precision: 0.6,
            l1: 0.6,
            deformation_error: 0.15,
        };
        let mean = EvalReport::mean_of(&[r1, r2]);
        assert!((mean.cd_j2j - 0.2).abs() < 1e-15);
        assert!((mean.precision - 0.7).abs() < 1e-15);
        let row = mean.csv_row("mean");
        assert!(row.starts_with("mean,"));
        assert_eq!(row.split(',').count(), 7);
    }
}
