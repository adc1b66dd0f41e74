use rigkit::autodiff::{AdamW, AdamWConfig, Tensor};
use rigkit::net::{loss_skinning, Linear, NetworkConfig};
use rigkit::pgse::{estimate_coarse_skeleton, skeleton_aware_features, FEATURE_WIDTH};
use rigkit::rng::Rng;
use rigkit::skeleton::JOINT_COUNT;
use rigkit::synth::{generate_dataset, write_dataset, RatioDistribution};
use rigkit::train::{evaluate_checkpoint, train, TrainConfig};
use std::time::Instant;

fn main() {
    let which = std::env::args().nth(1).unwrap_or_else(|| "raw".into());
    let t0 = Instant::now();

    if which == "raw" {
        // Upper-bound probe: two-layer softmax head on the raw 25-d
        // skeleton-aware features, trained to match GT skinning on 8 samples.
        let (samples, split) = generate_dataset(10, RatioDistribution::uniform_default(), 40, 500, 1.0).unwrap();
        let mut rng = Rng::new(1);
        let hidden: usize = std::env::args().nth(2).map(|s| s.parse().unwrap()).unwrap_or(64);
        println!("raw hidden {hidden}");
        let l1 = Linear::new(FEATURE_WIDTH, hidden, &mut rng);
        let l2 = Linear::new(hidden, JOINT_COUNT, &mut rng);
        let mut params = Vec::new();
        l1.collect_params("l1", &mut params);
        l2.collect_params("l2", &mut params);
        let tensors: Vec<Tensor> = params.into_iter().map(|(_, t)| t).collect();
        let mut opt = AdamW::new(&tensors, AdamWConfig { lr: 1e-3, ..Default::default() });

        let data: Vec<(Tensor, Tensor)> = split.train.iter().map(|&id| {
            let s = &samples[id];
            let coarse = estimate_coarse_skeleton(&s.mesh, &s.camera, &s.joints2d).unwrap();
            let f = skeleton_aware_features(&s.mesh, &coarse);
            let m = s.mesh.vertex_count();
            (Tensor::constant(m, FEATURE_WIDTH, f).unwrap(),
             Tensor::constant(m, JOINT_COUNT, s.gt_rig.skinning.data().to_vec()).unwrap())
        }).collect();

        let base: f64 = std::env::args().nth(3).map(|s| s.parse().unwrap()).unwrap_or(1e-3);
        for step in 0..2400 {
            if step == 1600 { opt.set_lr(base * 0.5); }
            for t in &tensors { t.zero_grad(); }
            let (f, g) = &data[step % data.len()];
            let p = l2.forward(&l1.forward(f).unwrap().relu().unwrap()).unwrap().softmax_rows().unwrap();
            let loss = loss_skinning(&p, g).unwrap();
            if step % 200 == 0 { println!("raw step {step} kl {:.4}", loss.item()); }
            loss.backward().unwrap();
            opt.step(&tensors);
        }
        // final L1 over train samples
        let mut l1sum = 0.0;
        for (f, g) in &data {
            let p = l2.forward(&l1.forward(f).unwrap().relu().unwrap()).unwrap().softmax_rows().unwrap();
            let (pv, gv) = (p.to_vec(), g.to_vec());
            let m = p.rows();
            let mut per = 0.0;
            for i in 0..pv.len() { per += (pv[i] - gv[i]).abs(); }
            l1sum += per / m as f64;
        }
        println!("raw-head train L1 {:.4} ({:.0?})", l1sum / data.len() as f64, t0.elapsed());
    }

    if which == "expert" {
        let dir = std::env::temp_dir().join("rigkit_probe5_expert");
        let _ = std::fs::remove_dir_all(&dir);
        let (samples, split) = generate_dataset(10, RatioDistribution::uniform_default(), 40, 500, 1.0).unwrap();
        write_dataset(&dir.join("ds"), &samples, &split).unwrap();
        let mut config = TrainConfig::new(dir.join("ds"), dir.join("run"));
        config.epochs = 300;
        config.batch_size = 1;
        config.milestones = vec![50, 100, 150, 200, 250];
        config.val_cadence = 0;
        config.seed = 5;
        config.net = NetworkConfig { mlp_hidden: 64, use_msman: false, seed: 5, ..NetworkConfig::desk(5) };
        let out = train(&config).unwrap();
        let last = out.log.entries.last().unwrap();
        println!("expert final skin {:.4}", last.loss_skinning);
        let outcome = evaluate_checkpoint(&out.final_checkpoint, &dir.join("ds"), "train").unwrap();
        println!("expert TRAIN l1 {:.4} ({:.0?})", outcome.mean.l1, t0.elapsed());
    }
}
