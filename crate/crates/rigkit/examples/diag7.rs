use rigkit::autodiff::{AdamW, AdamWConfig, Tensor};
use rigkit::net::loss_skinning;
use rigkit::rng::Rng;

fn main() {
    let mut rng = Rng::new(9);
    let (n, d_in, d_out) = (50, 25, 22);
    let fv: Vec<f64> = (0..n * d_in).map(|_| rng.uniform(-1.0, 1.0)).collect();
    let mut gd = vec![0.0; n * d_out];
    for i in 0..n {
        let mut sum = 0.0;
        for _ in 0..4 {
            let col = rng.uniform_usize(d_out);
            let w = rng.uniform(0.1, 1.0);
            gd[i * d_out + col] += w;
            sum += w;
        }
        for j in 0..d_out { gd[i * d_out + j] /= sum; }
    }
    let w0: Vec<f64> = (0..d_in * d_out).map(|_| rng.uniform(-0.4, 0.4)).collect();

    // --- my stack ---
    let f = Tensor::constant(n, d_in, fv.clone()).unwrap();
    let g = Tensor::constant(n, d_out, gd.clone()).unwrap();
    let w = Tensor::parameter(d_in, d_out, w0.clone()).unwrap();
    let mut opt = AdamW::new(&[w.clone()], AdamWConfig { lr: 1e-2, weight_decay: 0.0, ..Default::default() });
    for step in 0..3000 {
        w.zero_grad();
        let p = f.matmul(&w).unwrap().softmax_rows().unwrap();
        let loss = loss_skinning(&p, &g).unwrap();
        if step % 750 == 0 { println!("stack step {step} kl {:.6}", loss.item()); }
        loss.backward().unwrap();
        opt.step(&[w.clone()]);
    }

    // --- hand-written reference: same init, same data, hand gradient ---
    // d/d logits of (1/n) sum p (ln p - ln g') with g' = max(g, 1e-8):
    // p .* (a - <p,a>) / n with a = ln p - ln g' + 1
    let mut wref = w0.clone();
    let (mut m1, mut m2) = (vec![0.0; wref.len()], vec![0.0; wref.len()]);
    let (b1, b2, eps, lr) = (0.9, 0.999, 1e-8, 1e-2);
    for step in 0..3000 {
        // forward
        let mut grad_w = vec![0.0; wref.len()];
        let mut kl_total = 0.0;
        for i in 0..n {
            let x = &fv[i * d_in..(i + 1) * d_in];
            let mut logits = vec![0.0; d_out];
            for j in 0..d_out {
                for k in 0..d_in { logits[j] += x[k] * wref[k * d_out + j]; }
            }
            let mx = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let mut p: Vec<f64> = logits.iter().map(|l| (l - mx).exp()).collect();
            let s: f64 = p.iter().sum();
            for v in p.iter_mut() { *v /= s; }
            let gr = &gd[i * d_out..(i + 1) * d_out];
            let a: Vec<f64> = (0..d_out).map(|j| p[j].max(1e-8).ln() - gr[j].max(1e-8).ln() + 1.0).collect();
            kl_total += (0..d_out).map(|j| p[j] * (p[j].max(1e-8).ln() - gr[j].max(1e-8).ln())).sum::<f64>();
            let dot: f64 = (0..d_out).map(|j| p[j] * a[j]).sum();
            for j in 0..d_out {
                let dlogit = p[j] * (a[j] - dot) / n as f64;
                for k in 0..d_in { grad_w[k * d_out + j] += x[k] * dlogit; }
            }
        }
        if step % 750 == 0 { println!("ref   step {step} kl {:.6}", kl_total / n as f64); }
        // Adam
        let t = (step + 1) as f64;
        for idx in 0..wref.len() {
            m1[idx] = b1 * m1[idx] + (1.0 - b1) * grad_w[idx];
            m2[idx] = b2 * m2[idx] + (1.0 - b2) * grad_w[idx] * grad_w[idx];
            let mh = m1[idx] / (1.0 - b1.powf(t));
            let vh = m2[idx] / (1.0 - b2.powf(t));
            wref[idx] -= lr * mh / (vh.sqrt() + eps);
        }
    }
}
