use rigkit::metrics::{baseline_bone_line, skinning_l1};
use rigkit::synth::CharacterSpec;

fn main() {
    // How well does a geometric top-4 truncated baseline match GT skinning?
    // And what does the best *smooth* approximation pay on the truncation?
    let mut l1s = vec![];
    for seed in 0..4 {
        let spec = CharacterSpec { noise_sigma: 1.0, ..CharacterSpec::with_ratio(4.0 + seed as f64, seed) };
        let (s, parts) = rigkit::synth::generate_character_with_parts(&spec).unwrap();
        let bl = baseline_bone_line(&s.mesh, &s.gt_rig, 2.0, 4);
        l1s.push(skinning_l1(&bl, &s.gt_rig.skinning).unwrap());

        // Oracle "smooth" predictor: the untruncated falloff rule itself
        // (same formula over ALL bones, no top-4 cut), i.e. the best a
        // smooth model could plausibly do.
        let topo = &s.gt_rig.topology;
        let joints = &s.gt_rig.joints;
        let bones = topo.bones();
        let m = s.mesh.vertex_count();
        let mut data = vec![0.0; m * 22];
        for (i, &v) in s.mesh.vertices().iter().enumerate() {
            let mut sum = 0.0;
            let row = &mut data[i * 22..(i + 1) * 22];
            for (bi, &(p, c)) in bones.iter().enumerate() {
                let d = rigkit::math::point_segment_distance(v, joints[p], joints[c]);
                let len = (joints[c] - joints[p]).norm();
                let sigma = (0.3 * len).max(rigkit::synth::FALLOFF_RADIUS_FLOOR * parts[bi].radius).max(1e-3);
                let w = (-(d / sigma).powi(2)).exp();
                row[c] += w;
                sum += w;
            }
            for w in row.iter_mut() { *w /= sum; }
        }
        let smooth = rigkit::skeleton::SkinningMatrix::new(m, 22, data).unwrap();
        let l1_smooth = skinning_l1(&smooth, &s.gt_rig.skinning).unwrap();
        println!("seed {seed}: bone-line-baseline L1 {:.4}, untruncated-falloff L1 {:.4}", l1s.last().unwrap(), l1_smooth);
    }
}
