use rigkit::math::point_segment_distance;
use rigkit::synth::{generate_character_with_parts, CharacterSpec};

fn main() {
    let spec = CharacterSpec { noise_sigma: 1.0, ..CharacterSpec::with_ratio(5.0, 0) };
    let (s, parts) = generate_character_with_parts(&spec).unwrap();
    let topo = &s.gt_rig.topology;
    let joints = &s.gt_rig.joints;
    let bones = topo.bones();
    let names = topo.joint_names();

    let mut l1_by_bone: Vec<(f64, usize)> = vec![(0.0, 0); bones.len()];
    let mut total_l1 = 0.0;
    for (vi, &v) in s.mesh.vertices().iter().enumerate() {
        let ws: Vec<f64> = bones.iter().enumerate().map(|(bi, &(p, c))| {
            let d = point_segment_distance(v, joints[p], joints[c]);
            let len = (joints[c] - joints[p]).norm();
            let sigma = (0.3 * len).max(0.75 * parts[bi].radius).max(1e-3);
            (-(d / sigma).powi(2)).exp()
        }).collect();
        let total: f64 = ws.iter().sum();
        // untruncated row over child joints
        let mut smooth = vec![0.0; 22];
        for (bi, w) in ws.iter().enumerate() { smooth[bones[bi].1] += w / total; }
        // exact GT row
        let gt = s.gt_rig.skinning.row(vi);
        let l1: f64 = smooth.iter().zip(gt).map(|(a, b)| (a - b).abs()).sum();
        let dom = ws.iter().enumerate().max_by(|a, b| a.1.partial_cmp(b.1).unwrap()).unwrap().0;
        l1_by_bone[dom].0 += l1;
        l1_by_bone[dom].1 += 1;
        total_l1 += l1;
    }
    println!("TOTAL untruncated-vs-GT L1: {:.4}", total_l1 / s.mesh.vertex_count() as f64);
    let mut rows: Vec<(f64, String, usize)> = l1_by_bone.iter().enumerate()
        .filter(|(_, (_, n))| *n > 0)
        .map(|(bi, (sum, n))| (sum / *n as f64, names[bones[bi].1].clone(), *n))
        .collect();
    rows.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
    for (mean_l1, name, n) in rows.iter().take(10) {
        println!("bone->{name:<14} verts {n:>4} mean L1 {mean_l1:.4}");
    }
    // dump one forearm-dominated vertex row
    let fa = topo.index_of("LeftForeArm").unwrap();
    let hand = topo.index_of("LeftHand").unwrap();
    let mid = (joints[fa] + joints[hand]) * 0.5;
    let (vi, _) = s.mesh.vertices().iter().enumerate()
        .map(|(i, v)| (i, (*v - mid).norm()))
        .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap()).unwrap();
    let v = s.mesh.vertices()[vi];
    println!("forearm vertex {vi} at ({:.3},{:.3},{:.3})", v.x, v.y, v.z);
    let mut detail: Vec<(f64, f64, String)> = bones.iter().enumerate().map(|(bi, &(p, c))| {
        let d = point_segment_distance(v, joints[p], joints[c]);
        let len = (joints[c] - joints[p]).norm();
        let sigma = (0.3 * len).max(0.75 * parts[bi].radius).max(1e-3);
        ((-(d / sigma).powi(2)).exp(), d, names[c].clone())
    }).collect();
    detail.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
    for (w, d, name) in detail.iter().take(6) {
        println!("  weight {w:.5} dist {d:.4} -> {name}");
    }
    let gt = s.gt_rig.skinning.row(vi);
    let nonzero: Vec<String> = gt.iter().enumerate().filter(|(_, w)| **w > 0.0)
        .map(|(j, w)| format!("{}={:.4}", names[j], w)).collect();
    println!("  GT row: {}", nonzero.join(" "));
}
// appended: row dump
