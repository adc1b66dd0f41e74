use rigkit::autodiff::{AdamW, AdamWConfig, Tensor};
use rigkit::net::{loss_skinning, Linear};
use rigkit::rng::Rng;

fn main() {
    let mut rng = Rng::new(9);
    let (n, d_in, d_out) = (50, 25, 22);
    let f = Tensor::constant(n, d_in, (0..n * d_in).map(|_| rng.uniform(-1.0, 1.0)).collect()).unwrap();
    // random stochastic targets with zeros
    let mut gd = vec![0.0; n * d_out];
    for i in 0..n {
        let mut sum = 0.0;
        for j in 0..4 {
            let col = rng.uniform_usize(d_out);
            let w = rng.uniform(0.1, 1.0);
            gd[i * d_out + col] += w;
            sum += w;
            let _ = j;
        }
        for j in 0..d_out { gd[i * d_out + j] /= sum; }
    }
    let g = Tensor::constant(n, d_out, gd).unwrap();

    let l1 = Linear::new(d_in, 96, &mut rng);
    let l2 = Linear::new(96, d_out, &mut rng);
    let mut named = Vec::new();
    l1.collect_params("l1", &mut named);
    l2.collect_params("l2", &mut named);
    let tensors: Vec<Tensor> = named.into_iter().map(|(_, t)| t).collect();
    let mode = std::env::args().nth(1).unwrap_or_else(|| "clip".into());
    let beta2 = if mode == "b2" { 0.99 } else { 0.999 };
    let mut opt = AdamW::new(&tensors, AdamWConfig { lr: 1e-3, weight_decay: 0.0, beta2, ..Default::default() });
    for step in 0..4000 {
        for t in &tensors { t.zero_grad(); }
        let p = l2.forward(&l1.forward(&f).unwrap().relu().unwrap()).unwrap().softmax_rows().unwrap();
        let loss = loss_skinning(&p, &g).unwrap();
        if step % 500 == 0 {
            let pv = p.to_vec();
            let gv = g.to_vec();
            let l1v: f64 = pv.iter().zip(&gv).map(|(a, b)| (a - b).abs()).sum::<f64>() / n as f64;
            println!("{mode} step {step} kl {:.5} L1 {:.5}", loss.item(), l1v);
        }
        loss.backward().unwrap();
        if mode == "clip" {
            let mut sq = 0.0;
            for t in &tensors { for gg in t.grad() { sq += gg * gg; } }
            let norm = sq.sqrt();
            if norm > 1.0 {
                for t in &tensors { t.scale_grad(1.0 / norm); }
            }
        }
        opt.step(&tensors);
    }
}
