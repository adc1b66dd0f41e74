use rigkit::net::NetworkConfig;
use rigkit::synth::{generate_dataset, write_dataset, RatioDistribution};
use rigkit::train::{evaluate_checkpoint, train, TrainConfig};
use std::time::Instant;

fn main() {
    let which = std::env::args().nth(1).unwrap_or_else(|| "v1".into());
    let dir = std::env::temp_dir().join(format!("rigkit_probe5_{which}"));
    let _ = std::fs::remove_dir_all(&dir);
    let t0 = Instant::now();
    let (sigma, milestones, hidden, heads, depth, beta2, clip): (f64, Vec<usize>, usize, usize, usize, f64, f64) = match which.as_str() {
        "v1" => (1.0, vec![50], 256, 2, 1, 0.99, 1.0),   // wd 0
        "v2" => (0.0, vec![50], 384, 2, 1, 0.99, 1.0),  // wd 0, sigma 0, hidden 384
        "v3" => (1.0, vec![50], 256, 2, 1, 0.999, 1.0),
        _ => panic!(),
    };
    let _ = (beta2, clip);
    let (samples, split) = generate_dataset(10, RatioDistribution::uniform_default(), 40, 500, sigma).unwrap();
    write_dataset(&dir.join("ds"), &samples, &split).unwrap();
    let mut config = TrainConfig::new(dir.join("ds"), dir.join("run"));
    config.epochs = 300;
    config.batch_size = 1;
    config.milestones = milestones;
    config.base_lr = 1e-3;
    config.val_cadence = 0;
    config.seed = 5;
    config.net = NetworkConfig { mlp_hidden: hidden, heads, depth, ratios: vec![0.25; depth], seed: 5, ..NetworkConfig::desk(5) };
    config.beta2 = beta2;
    config.clip_norm = clip;
    config.weight_decay = 0.0;
    let out = train(&config).unwrap();
    let last = out.log.entries.last().unwrap();
    println!("{which} final losses total {:.4} ske {:.6} skin {:.4}", last.loss_total, last.loss_skeleton, last.loss_skinning);
    let outcome = evaluate_checkpoint(&out.final_checkpoint, &dir.join("ds"), "train").unwrap();
    println!("{which} TRAIN metrics: cd_j2j {:.5} l1 {:.4} (targets cd<0.01 l1<0.15), time {:.0?}", outcome.mean.cd_j2j, outcome.mean.l1, t0.elapsed());
}
