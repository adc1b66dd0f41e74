use rigkit::autodiff::{AdamW, AdamWConfig, Tensor};
use rigkit::net::{loss_skinning, Linear};
use rigkit::pgse::{estimate_coarse_skeleton, skeleton_aware_features, FEATURE_WIDTH};
use rigkit::rng::Rng;
use rigkit::skeleton::JOINT_COUNT;
use rigkit::synth::{generate_character, CharacterSpec};

fn main() {
    let wd: f64 = std::env::args().nth(1).map(|s| s.parse().unwrap()).unwrap_or(0.01);
    let spec = CharacterSpec { noise_sigma: 1.0, ..CharacterSpec::with_ratio(5.0, 17) };
    let s = generate_character(&spec).unwrap();
    let coarse = estimate_coarse_skeleton(&s.mesh, &s.camera, &s.joints2d).unwrap();
    let m = s.mesh.vertex_count();
    let f = Tensor::constant(m, FEATURE_WIDTH, skeleton_aware_features(&s.mesh, &coarse)).unwrap();
    let g = Tensor::constant(m, JOINT_COUNT, s.gt_rig.skinning.data().to_vec()).unwrap();

    let mut rng = Rng::new(1);
    let hidden = 96;
    let l1 = Linear::new(FEATURE_WIDTH, hidden, &mut rng);
    let l2 = Linear::new(hidden, hidden, &mut rng);
    let l3 = Linear::new(hidden, JOINT_COUNT, &mut rng);
    let mut named = Vec::new();
    l1.collect_params("l1", &mut named);
    l2.collect_params("l2", &mut named);
    l3.collect_params("l3", &mut named);
    let tensors: Vec<Tensor> = named.into_iter().map(|(_, t)| t).collect();
    let mut opt = AdamW::new(&tensors, AdamWConfig { lr: 1e-3, weight_decay: wd, ..Default::default() });

    for step in 0..8000 {
        if step == 4000 { opt.set_lr(5e-4); }
        if step == 6500 { opt.set_lr(2e-4); }
        for t in &tensors { t.zero_grad(); }
        let h = l2.forward(&l1.forward(&f).unwrap().relu().unwrap()).unwrap().relu().unwrap();
        let p = l3.forward(&h).unwrap().softmax_rows().unwrap();
        let loss = loss_skinning(&p, &g).unwrap();
        if step % 1000 == 0 {
            // also L1
            let pv = p.to_vec();
            let gv = g.to_vec();
            let l1v: f64 = pv.iter().zip(&gv).map(|(a, b)| (a - b).abs()).sum::<f64>() / m as f64;
            println!("wd{wd} step {step} kl {:.4} L1 {:.4}", loss.item(), l1v);
        }
        loss.backward().unwrap();
        opt.step(&tensors);
    }
}
