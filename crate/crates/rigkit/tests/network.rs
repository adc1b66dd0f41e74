//! Whole-network integration: end-to-end gradient check through coarse
//! estimation, both encoders, mutual attention, heads and the total loss;
//! and the overfit-one sanity that ten optimizer steps strictly decrease
//! the loss.

use rigkit::autodiff::{gradient_check, AdamW, AdamWConfig, Tensor};
use rigkit::net::{loss_skeleton, loss_skinning, prepare_inputs, NetworkConfig, RiggingNetwork};
use rigkit::pgse::estimate_coarse_skeleton;
use rigkit::rng::Rng;
use rigkit::skeleton::JOINT_COUNT;
use rigkit::synth::{generate_character, CharacterSpec};

fn fd_config() -> NetworkConfig {
    NetworkConfig {
        channels: 16,
        heads: 2,
        depth: 2,
        knn: 4,
        ratios: vec![0.4, 0.4],
        mlp_hidden: 16,
        seed: 5,
        use_msman: true,
    }
}

/// A 40-vertex cloud with ground-truth-style targets.
fn fd_sample() -> (rigkit::mesh::TriMesh, Tensor, Tensor, rigkit::pgse::CoarseSkeleton) {
    let mut rng = Rng::new(77);
    let verts: Vec<rigkit::math::Vec3> = (0..40)
        .map(|_| rigkit::math::Vec3 {
            x: rng.uniform(-0.5, 0.5),
            y: rng.uniform(-0.5, 0.5),
            z: rng.uniform(-0.5, 0.5),
        })
        .collect();
    let mesh = rigkit::mesh::TriMesh::new(verts, vec![]).unwrap();
    let cam = rigkit::synth::canonical_camera();
    let joints: Vec<rigkit::math::Vec3> = (0..JOINT_COUNT)
        .map(|i| rigkit::math::Vec3 {
            x: 0.02 * i as f64 - 0.2,
            y: 0.35 - 0.03 * i as f64,
            z: 0.02,
        })
        .collect();
    let j2d = rigkit::pgse::synthesize_j2d(&cam, &joints, 1.0, 3).unwrap();
    // No faces: every ray falls back, which is fine for a gradient check.
    let coarse = estimate_coarse_skeleton(&mesh, &cam, &j2d).unwrap();

    let gt_joints = Tensor::constant(
        JOINT_COUNT,
        3,
        joints.iter().flat_map(|p| [p.x, p.y, p.z]).collect(),
    )
    .unwrap();
    let mut gt_rows = vec![0.0; 40 * JOINT_COUNT];
    for (i, row) in gt_rows.chunks_mut(JOINT_COUNT).enumerate() {
        row[i % JOINT_COUNT] = 0.7;
        row[(i + 3) % JOINT_COUNT] = 0.3;
    }
    let gt_skinning = Tensor::constant(40, JOINT_COUNT, gt_rows).unwrap();
    (mesh, gt_joints, gt_skinning, coarse)
}

#[test]
fn end_to_end_gradient_check() {
    let config = fd_config();
    let (mesh, gt_joints, gt_skinning, coarse) = fd_sample();
    let net = RiggingNetwork::new(config.clone()).unwrap();
    let inputs = prepare_inputs(&mesh, &coarse, &config).unwrap();

    // Nudge all parameters off their init so no relu sits exactly on its
    // kink (zero-init biases + exact-zero relative positions would).
    let params = net.parameter_tensors();
    let mut rng = Rng::new(123);
    for t in &params {
        let nudged: Vec<f64> = t
            .to_vec()
            .iter()
            .map(|v| v + rng.uniform(0.01, 0.05))
            .collect();
        t.set_values(&nudged);
    }

    let rel = gradient_check(
        &params,
        &move || {
            let pred = net.forward(&inputs)?;
            loss_skinning(&pred.skinning, &gt_skinning)?
                .add(&loss_skeleton(&pred.joints, &gt_joints)?)
        },
        1e-5,
        Some(4),
        99,
    )
    .unwrap();
    assert!(rel < 1e-3, "end-to-end relative error {rel}");
}

#[test]
fn ten_steps_strictly_decrease_loss_on_one_sample() {
    let spec = CharacterSpec {
        vertex_budget: 500,
        noise_sigma: 2.0,
        ..CharacterSpec::with_ratio(5.0, 21)
    };
    let sample = generate_character(&spec).unwrap();
    let config = NetworkConfig::desk(7);
    let net = RiggingNetwork::new(config.clone()).unwrap();
    let coarse =
        estimate_coarse_skeleton(&sample.mesh, &sample.camera, &sample.joints2d).unwrap();
    let inputs = prepare_inputs(&sample.mesh, &coarse, &config).unwrap();
    let gt_joints = Tensor::constant(
        JOINT_COUNT,
        3,
        sample
            .gt_rig
            .joints
            .iter()
            .flat_map(|p| [p.x, p.y, p.z])
            .collect(),
    )
    .unwrap();
    let gt_skinning = Tensor::constant(
        sample.gt_rig.skinning.rows(),
        JOINT_COUNT,
        sample.gt_rig.skinning.data().to_vec(),
    )
    .unwrap();

    let params = net.parameter_tensors();
    let mut opt = AdamW::new(
        &params,
        AdamWConfig {
            lr: 1e-3,
            ..Default::default()
        },
    );
    let mut last = f64::INFINITY;
    for step in 0..10 {
        net.zero_grads();
        let pred = net.forward(&inputs).unwrap();
        let loss = loss_skinning(&pred.skinning, &gt_skinning)
            .unwrap()
            .add(&loss_skeleton(&pred.joints, &gt_joints).unwrap())
            .unwrap();
        let value = loss.item();
        assert!(
            value < last,
            "step {step}: loss {value} did not decrease from {last}"
        );
        last = value;
        loss.backward().unwrap();
        opt.step(&params);
    }
}
