use rigkit::autodiff::{AdamW, AdamWConfig, Tensor};
use rigkit::net::{loss_skinning, loss_skeleton, prepare_inputs, NetworkConfig, RiggingNetwork};
use rigkit::pgse::estimate_coarse_skeleton;
use rigkit::skeleton::JOINT_COUNT;
use rigkit::synth::{generate_character, CharacterSpec};
use std::time::Instant;

fn main() {
    let steps: usize = std::env::args().nth(1).map(|s| s.parse().unwrap()).unwrap_or(2400);
    let depth: usize = std::env::args().nth(2).map(|s| s.parse().unwrap()).unwrap_or(2);
    let hidden: usize = std::env::args().nth(3).map(|s| s.parse().unwrap()).unwrap_or(64);
    let t0 = Instant::now();
    let spec = CharacterSpec { noise_sigma: 1.0, ..CharacterSpec::with_ratio(5.0, 17) };
    let s = generate_character(&spec).unwrap();
    let config = NetworkConfig {
        channels: 16, heads: 2, depth, knn: 8,
        ratios: vec![0.25; depth], mlp_hidden: hidden, seed: 5, use_msman: true,
    };
    let net = RiggingNetwork::new(config.clone()).unwrap();
    let coarse = estimate_coarse_skeleton(&s.mesh, &s.camera, &s.joints2d).unwrap();
    let inputs = prepare_inputs(&s.mesh, &coarse, &config).unwrap();
    let gt_j = Tensor::constant(JOINT_COUNT, 3, s.gt_rig.joints.iter().flat_map(|p| [p.x, p.y, p.z]).collect()).unwrap();
    let gt_s = Tensor::constant(s.gt_rig.skinning.rows(), JOINT_COUNT, s.gt_rig.skinning.data().to_vec()).unwrap();
    let params = net.parameter_tensors();
    let mut opt = AdamW::new(&params, AdamWConfig { lr: 1e-3, ..Default::default() });
    for step in 0..steps {
        if step == steps / 2 { opt.set_lr(5e-4); }
        net.zero_grads();
        let pred = net.forward(&inputs).unwrap();
        let loss = loss_skinning(&pred.skinning, &gt_s).unwrap()
            .add(&loss_skeleton(&pred.joints, &gt_j).unwrap()).unwrap();
        if step % (steps / 8) == 0 { println!("d{depth}h{hidden} step {step} loss {:.4}", loss.item()); }
        loss.backward().unwrap();
        opt.step(&params);
    }
    // final L1
    let pred = net.forward(&inputs).unwrap();
    let pm = pred.skinning_matrix().unwrap();
    let l1 = rigkit::metrics::skinning_l1(&pm, &s.gt_rig.skinning).unwrap();
    println!("d{depth}h{hidden} ONE-SAMPLE final L1 {:.4} ({:.0?})", l1, t0.elapsed());
    // per-row L1 percentiles + sample rows
    let m = pm.rows();
    let mut rows: Vec<(f64, usize)> = (0..m).map(|i| {
        let l: f64 = pm.row(i).iter().zip(s.gt_rig.skinning.row(i)).map(|(a, b)| (a - b).abs()).sum();
        (l, i)
    }).collect();
    rows.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    for pct in [10, 50, 75, 90, 99] {
        println!("  row-L1 p{pct}: {:.4}", rows[m * pct / 100].0);
    }
    let names = s.gt_rig.topology.joint_names();
    for (_, i) in [rows[m / 2], rows[m * 9 / 10], rows[m - 1]] {
        let mut top: Vec<(f64, f64, usize)> = (0..22).map(|j| (pm.get(i, j), s.gt_rig.skinning.get(i, j), j)).collect();
        top.sort_by(|a, b| (b.0 + b.1).partial_cmp(&(a.0 + a.1)).unwrap());
        let desc: Vec<String> = top.iter().take(4).map(|(p, g, j)| format!("{}: p={:.3} g={:.3}", names[*j], p, g)).collect();
        println!("  row {i}: {}", desc.join(" | "));
    }
}
