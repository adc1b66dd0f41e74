//! Training pipeline: two-stage protocol (coarse skeletons precomputed and
//! cached, then network training), shuffled mini-batches with gradient
//! accumulation, the multi-step learning-rate schedule, validation and
//! checkpointing. Deterministic under the run seed: shuffles are derived
//! statelessly from (seed, epoch), so identical runs produce byte-identical
//! logs and checkpoints, and a resumed run rejoins the uninterrupted one.

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use crate::autodiff::{
    load_tensors, multistep_lr, save_tensors, AdamW, AdamWConfig, NamedTensor, Tensor,
};
use crate::kvfile::{KvFile, KvWriter};
use crate::math::Vec3;
use crate::metrics::EvalReport;
use crate::net::{
    loss_skeleton, loss_skinning, prepare_inputs, NetworkConfig, PreparedInputs, RiggingNetwork,
};
use crate::pgse::{estimate_coarse_skeleton, CoarseSkeleton, JointProvenance, Joints2D};
use crate::rng::Rng;
use crate::skeleton::{Rig, JOINT_COUNT};
use crate::synth::{load_dataset, LoadedSample};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub base_lr: f64,
    pub milestones: Vec<usize>,
    pub gamma: f64,
    pub batch_size: usize,
    pub seed: u64,
    pub dataset_dir: PathBuf,
    pub out_dir: PathBuf,
    pub net: NetworkConfig,
    /// Extra pixel noise added to the stored 2D joints before coarse
    /// estimation (0 uses them as recorded).
    pub noise_sigma: f64,
    /// AdamW second-moment decay. The KL loss starts with a gradient cliff;
    /// a faster decay lets the step size recover sooner afterwards.
    pub beta2: f64,
    /// Global gradient-norm clip per optimizer step (0 disables).
    pub clip_norm: f64,
    /// Decoupled weight decay (0 disables; overfit regressions want 0).
    pub weight_decay: f64,
    /// Validate every this many epochs (0 disables validation).
    pub val_cadence: usize,
    /// Overwrite `latest.ckpt` every this many epochs (0 disables).
    pub checkpoint_cadence: usize,
    pub resume_from: Option<PathBuf>,
}

impl TrainConfig {
    pub fn new(dataset_dir: impl Into<PathBuf>, out_dir: impl Into<PathBuf>) -> TrainConfig {
        TrainConfig {
            epochs: 300,
            base_lr: 1e-3,
            milestones: vec![50],
            gamma: 0.5,
            batch_size: 16,
            seed: 0,
            dataset_dir: dataset_dir.into(),
            out_dir: out_dir.into(),
            net: NetworkConfig::default(),
            noise_sigma: 0.0,
            beta2: 0.999,
            clip_norm: 0.0,
            weight_decay: 0.01,
            val_cadence: 10,
            checkpoint_cadence: 0,
            resume_from: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::invalid("train config", "epochs must be >= 1"));
        }
        if self.batch_size == 0 {
            return Err(Error::invalid("train config", "batch_size must be >= 1"));
        }
        let mut sorted = self.milestones.clone();
        sorted.sort_unstable();
        if sorted != self.milestones {
            return Err(Error::invalid("train config", "milestones must be ascending"));
        }
        self.net.validate()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w = KvWriter::new();
        w.ints("epochs", &[self.epochs as i64])
            .floats("base_lr", &[self.base_lr])
            .ints(
                "milestones",
                &self.milestones.iter().map(|&m| m as i64).collect::<Vec<_>>(),
            )
            .floats("gamma", &[self.gamma])
            .ints("batch_size", &[self.batch_size as i64])
            .ints("seed", &[self.seed as i64])
            .strings("dataset", &[&self.dataset_dir.display().to_string()])
            .strings("out_dir", &[&self.out_dir.display().to_string()])
            .floats("noise_sigma", &[self.noise_sigma])
            .floats("beta2", &[self.beta2])
            .floats("clip_norm", &[self.clip_norm])
            .floats("weight_decay", &[self.weight_decay])
            .ints("val_cadence", &[self.val_cadence as i64])
            .ints("checkpoint_cadence", &[self.checkpoint_cadence as i64])
            .ints("channels", &[self.net.channels as i64])
            .ints("heads", &[self.net.heads as i64])
            .ints("depth", &[self.net.depth as i64])
            .ints("knn", &[self.net.knn as i64])
            .floats("ratios", &self.net.ratios)
            .ints("mlp_hidden", &[self.net.mlp_hidden as i64])
            .ints("net_seed", &[self.net.seed as i64])
            .ints("use_msman", &[self.net.use_msman as i64]);
        if let Some(resume) = &self.resume_from {
            w.strings("resume_from", &[&resume.display().to_string()]);
        }
        w.save(path)
    }

    pub fn load(path: &Path) -> Result<TrainConfig> {
        let kv = KvFile::load(path)?;
        let defaults = NetworkConfig::default();
        let seed = kv.opt_int("seed", 0)? as u64;
        let config = TrainConfig {
            epochs: kv.opt_int("epochs", 300)? as usize,
            base_lr: kv.opt_float("base_lr", 1e-3)?,
            milestones: if kv.has("milestones") {
                kv.ints("milestones")?.into_iter().map(|m| m as usize).collect()
            } else {
                vec![50]
            },
            gamma: kv.opt_float("gamma", 0.5)?,
            batch_size: kv.opt_int("batch_size", 16)? as usize,
            seed,
            dataset_dir: PathBuf::from(kv.string("dataset")?),
            out_dir: PathBuf::from(kv.string("out_dir")?),
            net: NetworkConfig {
                channels: kv.opt_int("channels", defaults.channels as i64)? as usize,
                heads: kv.opt_int("heads", defaults.heads as i64)? as usize,
                depth: kv.opt_int("depth", defaults.depth as i64)? as usize,
                knn: kv.opt_int("knn", defaults.knn as i64)? as usize,
                ratios: if kv.has("ratios") {
                    kv.floats("ratios")?
                } else {
                    defaults.ratios.clone()
                },
                mlp_hidden: kv.opt_int("mlp_hidden", defaults.mlp_hidden as i64)? as usize,
                seed: kv.opt_int("net_seed", seed as i64)? as u64,
                use_msman: kv.opt_int("use_msman", 1)? != 0,
            },
            noise_sigma: kv.opt_float("noise_sigma", 0.0)?,
            beta2: kv.opt_float("beta2", 0.999)?,
            clip_norm: kv.opt_float("clip_norm", 0.0)?,
            weight_decay: kv.opt_float("weight_decay", 0.01)?,
            val_cadence: kv.opt_int("val_cadence", 10)? as usize,
            checkpoint_cadence: kv.opt_int("checkpoint_cadence", 0)? as usize,
            resume_from: kv.opt_string("resume_from")?.map(PathBuf::from),
        };
        config.validate()?;
        Ok(config)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochLog {
    pub epoch: usize,
    pub lr: f64,
    pub loss_total: f64,
    pub loss_skeleton: f64,
    pub loss_skinning: f64,
    pub val: Option<EvalReport>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainLog {
    pub entries: Vec<EpochLog>,
}

impl TrainLog {
    pub const CSV_HEADER: &'static str = "epoch,lr,loss_total,loss_skeleton,loss_skinning,\
val_cd_j2j,val_cd_j2b,val_cd_b2b,val_precision,val_l1,val_deformation_error";

    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for e in &self.entries {
            out.push_str(&format!(
                "{},{},{},{},{}",
                e.epoch, e.lr, e.loss_total, e.loss_skeleton, e.loss_skinning
            ));
            match &e.val {
                Some(v) => out.push_str(&format!(
                    ",{},{},{},{},{},{}\n",
                    v.cd_j2j, v.cd_j2b, v.cd_b2b, v.precision, v.l1, v.deformation_error
                )),
                None => out.push_str(",,,,,,\n"),
            }
        }
        out
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        if let Some(parent) = path.parent() {
            if !parent.as_os_str().is_empty() {
                std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
            }
        }
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }
}

pub struct TrainOutput {
    pub final_checkpoint: PathBuf,
    pub best_checkpoint: PathBuf,
    pub log_path: PathBuf,
    pub log: TrainLog,
}

fn config_path(checkpoint: &Path) -> PathBuf {
    PathBuf::from(format!("{}.config.txt", checkpoint.display()))
}

/// Save model parameters, optimizer moments and the epoch counter; the
/// network configuration is written alongside as structured text.
pub fn save_checkpoint(
    path: &Path,
    net: &RiggingNetwork,
    opt: &AdamW,
    completed_epochs: usize,
) -> Result<()> {
    let mut tensors = net.export_parameters();
    let (step, first, second) = opt.state();
    for ((name, param), (m, v)) in net.parameters().iter().zip(first.iter().zip(second.iter())) {
        let shape = vec![param.rows(), param.cols()];
        tensors.push(NamedTensor::new(format!("opt.{name}.m"), shape.clone(), m.clone()));
        tensors.push(NamedTensor::new(format!("opt.{name}.v"), shape, v.clone()));
    }
    tensors.push(NamedTensor::new(
        "__meta",
        vec![1, 2],
        vec![completed_epochs as f64, step as f64],
    ));
    save_tensors(path, &tensors)?;
    net.config.save(&config_path(path))
}

pub struct LoadedCheckpoint {
    pub config: NetworkConfig,
    pub tensors: Vec<NamedTensor>,
    pub completed_epochs: usize,
    pub step: u64,
}

pub fn load_checkpoint(path: &Path) -> Result<LoadedCheckpoint> {
    let config = NetworkConfig::load(&config_path(path))?;
    let tensors = load_tensors(path)?;
    let meta = tensors
        .iter()
        .find(|t| t.name == "__meta")
        .ok_or_else(|| Error::TensorMissing {
            name: "__meta".into(),
        })?;
    Ok(LoadedCheckpoint {
        config,
        completed_epochs: meta.values[0] as usize,
        step: meta.values[1] as u64,
        tensors,
    })
}

/// Build a network from a checkpoint (parameters only; optimizer state is
/// restored separately when resuming training).
pub fn network_from_checkpoint(loaded: &LoadedCheckpoint) -> Result<RiggingNetwork> {
    let net = RiggingNetwork::new(loaded.config.clone())?;
    net.load_parameters(&loaded.tensors)?;
    Ok(net)
}

fn restore_optimizer(
    opt: &mut AdamW,
    net: &RiggingNetwork,
    loaded: &LoadedCheckpoint,
) -> Result<()> {
    let mut first = Vec::new();
    let mut second = Vec::new();
    for (name, _) in net.parameters() {
        let find = |suffix: &str| -> Result<Vec<f64>> {
            let full = format!("opt.{name}.{suffix}");
            loaded
                .tensors
                .iter()
                .find(|t| t.name == full)
                .map(|t| t.values.clone())
                .ok_or(Error::TensorMissing { name: full })
        };
        first.push(find("m")?);
        second.push(find("v")?);
    }
    opt.restore_state(loaded.step, first, second);
    Ok(())
}

// ----- coarse skeleton cache (stage 1) -----

fn coarse_cache_path(out_dir: &Path, id: usize) -> PathBuf {
    out_dir.join("pgse_cache").join(format!("{id:04}.txt"))
}

fn save_coarse(path: &Path, coarse: &CoarseSkeleton) -> Result<()> {
    let mut w = KvWriter::new();
    for p in coarse.positions() {
        w.floats("coarse", &[p.x, p.y, p.z]);
    }
    let flags: Vec<i64> = coarse
        .provenance()
        .iter()
        .map(|p| matches!(p, JointProvenance::Fallback) as i64)
        .collect();
    w.ints("fallback", &flags);
    w.save(path)
}

fn load_coarse(path: &Path) -> Result<CoarseSkeleton> {
    let kv = KvFile::load(path)?;
    let vals = kv.floats_exact("coarse", JOINT_COUNT * 3)?;
    let flags = kv.ints("fallback")?;
    let positions = vals
        .chunks(3)
        .map(|c| Vec3 {
            x: c[0],
            y: c[1],
            z: c[2],
        })
        .collect();
    let provenance = flags
        .iter()
        .map(|&f| {
            if f != 0 {
                JointProvenance::Fallback
            } else {
                JointProvenance::IntersectionMidpoint
            }
        })
        .collect();
    CoarseSkeleton::new(positions, provenance)
}

/// Stage 1 for one sample: coarse skeleton from the (optionally re-noised)
/// stored 2D joints, cached on disk under the run directory.
fn coarse_for_sample(
    sample: &LoadedSample,
    out_dir: &Path,
    noise_sigma: f64,
    seed: u64,
) -> Result<CoarseSkeleton> {
    let cache = coarse_cache_path(out_dir, sample.id);
    if cache.exists() {
        return load_coarse(&cache);
    }
    let joints2d = if noise_sigma > 0.0 {
        let mut rng = Rng::new(seed ^ (sample.id as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15));
        let noisy: Vec<[f64; 2]> = sample
            .joints2d
            .positions()
            .iter()
            .map(|p| {
                [
                    rng.normal_scaled(p[0], noise_sigma),
                    rng.normal_scaled(p[1], noise_sigma),
                ]
            })
            .collect();
        Joints2D::new(noisy)?
    } else {
        sample.joints2d.clone()
    };
    let coarse = estimate_coarse_skeleton(&sample.mesh, &sample.camera, &joints2d)?;
    save_coarse(&cache, &coarse)?;
    Ok(coarse)
}

struct PreparedSample {
    id: usize,
    inputs: PreparedInputs,
    gt_joints: Tensor,
    gt_skinning: Tensor,
}

fn prepare_sample(
    sample: &LoadedSample,
    coarse: &CoarseSkeleton,
    net: &NetworkConfig,
) -> Result<PreparedSample> {
    let inputs = prepare_inputs(&sample.mesh, coarse, net)?;
    let gt_joints = Tensor::constant(
        JOINT_COUNT,
        3,
        sample
            .gt_rig
            .joints
            .iter()
            .flat_map(|p| [p.x, p.y, p.z])
            .collect(),
    )?;
    let gt_skinning = Tensor::constant(
        sample.gt_rig.skinning.rows(),
        sample.gt_rig.skinning.cols(),
        sample.gt_rig.skinning.data().to_vec(),
    )?;
    Ok(PreparedSample {
        id: sample.id,
        inputs,
        gt_joints,
        gt_skinning,
    })
}

/// Predicted rig for one prepared sample (frozen forward).
fn predict_rig(net: &RiggingNetwork, sample: &LoadedSample, prep: &PreparedSample) -> Result<Rig> {
    let pred = net.forward(&prep.inputs)?;
    Rig::new(
        sample.gt_rig.topology.clone(),
        pred.joint_positions()
            .into_iter()
            .map(clamp_joint)
            .collect(),
        pred.skinning_matrix()?,
    )
}

fn clamp_joint(p: Vec3) -> Vec3 {
    use crate::skeleton::JOINT_BOX_LIMIT;
    Vec3 {
        x: p.x.clamp(-JOINT_BOX_LIMIT, JOINT_BOX_LIMIT),
        y: p.y.clamp(-JOINT_BOX_LIMIT, JOINT_BOX_LIMIT),
        z: p.z.clamp(-JOINT_BOX_LIMIT, JOINT_BOX_LIMIT),
    }
}

fn pose_seed_for(id: usize) -> u64 {
    0x5EED ^ id as u64
}

pub fn train(config: &TrainConfig) -> Result<TrainOutput> {
    config.validate()?;
    std::fs::create_dir_all(&config.out_dir).map_err(|e| Error::io(&config.out_dir, e))?;
    let (samples, split) = load_dataset(&config.dataset_dir)?;
    if split.train.is_empty() {
        return Err(Error::invalid("train", "train split is empty"));
    }
    let by_id: HashMap<usize, &LoadedSample> = samples.iter().map(|s| (s.id, s)).collect();

    // Stage 1: coarse skeletons, cached. Stage 2 consumes them as fixed
    // inputs.
    let mut prepared: HashMap<usize, PreparedSample> = HashMap::new();
    let mut needed: Vec<usize> = split.train.clone();
    needed.extend(&split.val);
    for id in needed {
        if prepared.contains_key(&id) {
            continue;
        }
        let sample = by_id
            .get(&id)
            .ok_or_else(|| Error::invalid("train", format!("sample {id} missing from dataset")))?;
        let coarse = coarse_for_sample(sample, &config.out_dir, config.noise_sigma, config.seed)?;
        prepared.insert(id, prepare_sample(sample, &coarse, &config.net)?);
    }

    let net = RiggingNetwork::new(config.net.clone())?;
    let params = net.parameter_tensors();
    let mut opt = AdamW::new(
        &params,
        AdamWConfig {
            lr: config.base_lr,
            beta2: config.beta2,
            weight_decay: config.weight_decay,
            ..Default::default()
        },
    );
    let mut start_epoch = 0usize;
    if let Some(resume) = &config.resume_from {
        let loaded = load_checkpoint(resume)?;
        if loaded.config != config.net {
            return Err(Error::invalid(
                "train",
                "checkpoint network config does not match the training config",
            ));
        }
        net.load_parameters(&loaded.tensors)?;
        restore_optimizer(&mut opt, &net, &loaded)?;
        start_epoch = loaded.completed_epochs;
    }

    let mut log = TrainLog::default();
    let mut best_score = f64::INFINITY;
    let final_path = config.out_dir.join("final.ckpt");
    let best_path = config.out_dir.join("best.ckpt");
    let latest_path = config.out_dir.join("latest.ckpt");
    let shuffle_root = Rng::new(config.seed);

    for epoch in start_epoch..config.epochs {
        let epoch_start = std::time::Instant::now();
        let lr = multistep_lr(epoch, config.base_lr, &config.milestones, config.gamma);
        opt.set_lr(lr);

        let mut order = split.train.clone();
        shuffle_root.split(0xE0C0 ^ epoch as u64).shuffle(&mut order);

        let mut sum_total = 0.0;
        let mut sum_skeleton = 0.0;
        let mut sum_skinning = 0.0;
        for chunk in order.chunks(config.batch_size) {
            net.zero_grads();
            let scale = 1.0 / chunk.len() as f64;
            for &id in chunk {
                let prep = &prepared[&id];
                let step = || -> Result<(f64, f64)> {
                    let pred = net.forward(&prep.inputs)?;
                    let l_ske = loss_skeleton(&pred.joints, &prep.gt_joints)?;
                    let l_skin = loss_skinning(&pred.skinning, &prep.gt_skinning)?;
                    let total = l_skin.add(&l_ske)?;
                    total.mul_scalar(scale)?.backward()?;
                    Ok((l_ske.item(), l_skin.item()))
                };
                let (l_ske, l_skin) = step().map_err(|e| match e {
                    Error::NonFinite { .. } => Error::NonFiniteLoss {
                        sample: format!("{id:04}"),
                    },
                    other => other,
                })?;
                sum_skeleton += l_ske;
                sum_skinning += l_skin;
                sum_total += l_ske + l_skin;
            }
            if config.clip_norm > 0.0 {
                let mut sq = 0.0;
                for p in &params {
                    for g in p.grad() {
                        sq += g * g;
                    }
                }
                let norm = sq.sqrt();
                if norm > config.clip_norm {
                    let scale = config.clip_norm / norm;
                    for p in &params {
                        p.scale_grad(scale);
                    }
                }
            }
            opt.step(&params);
        }

        let n = split.train.len() as f64;
        let mut entry = EpochLog {
            epoch,
            lr,
            loss_total: sum_total / n,
            loss_skeleton: sum_skeleton / n,
            loss_skinning: sum_skinning / n,
            val: None,
        };

        if config.val_cadence > 0 && (epoch + 1) % config.val_cadence == 0 && !split.val.is_empty()
        {
            let mut reports = Vec::new();
            for &id in &split.val {
                let sample = by_id[&id];
                let rig = predict_rig(&net, sample, &prepared[&id])?;
                reports.push(EvalReport::compute(
                    &sample.mesh,
                    &rig,
                    &sample.gt_rig,
                    pose_seed_for(id),
                )?);
            }
            let mean = EvalReport::mean_of(&reports);
            let score = mean.cd_j2j + mean.l1;
            if score < best_score {
                best_score = score;
                save_checkpoint(&best_path, &net, &opt, epoch + 1)?;
            }
            entry.val = Some(mean);
        }

        if config.checkpoint_cadence > 0 && (epoch + 1) % config.checkpoint_cadence == 0 {
            save_checkpoint(&latest_path, &net, &opt, epoch + 1)?;
        }

        println!(
            "epoch {epoch} lr {lr} loss_total {} ({:.2?})",
            entry.loss_total,
            epoch_start.elapsed()
        );
        log.entries.push(entry);
    }

    save_checkpoint(&final_path, &net, &opt, config.epochs)?;
    if best_score.is_infinite() {
        save_checkpoint(&best_path, &net, &opt, config.epochs)?;
    }
    let log_path = config.out_dir.join("train_log.csv");
    log.save(&log_path)?;
    Ok(TrainOutput {
        final_checkpoint: final_path,
        best_checkpoint: best_path,
        log_path,
        log,
    })
}

pub struct EvalOutcome {
    pub rows: Vec<(usize, EvalReport)>,
    pub mean: EvalReport,
}

impl EvalOutcome {
    /// CSV with one row per sample plus a mean row.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(EvalReport::CSV_HEADER);
        out.push('\n');
        for (id, r) in &self.rows {
            out.push_str(&r.csv_row(&format!("{id:04}")));
            out.push('\n');
        }
        out.push_str(&self.mean.csv_row("mean"));
        out.push('\n');
        out
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        if let Some(parent) = path.parent() {
            if !parent.as_os_str().is_empty() {
                std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
            }
        }
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }
}

/// Frozen-model evaluation of a dataset split: coarse estimation, forward
/// pass and the full metric suite per sample.
pub fn evaluate_checkpoint(
    checkpoint: &Path,
    dataset_dir: &Path,
    split_name: &str,
) -> Result<EvalOutcome> {
    let loaded = load_checkpoint(checkpoint)?;
    let net = network_from_checkpoint(&loaded)?;
    let (samples, split) = load_dataset(dataset_dir)?;
    let by_id: HashMap<usize, &LoadedSample> = samples.iter().map(|s| (s.id, s)).collect();
    let ids = split.ids(split_name)?;
    let mut rows = Vec::with_capacity(ids.len());
    for &id in ids {
        let sample = by_id
            .get(&id)
            .ok_or_else(|| Error::invalid("eval", format!("sample {id} missing from dataset")))?;
        let coarse = estimate_coarse_skeleton(&sample.mesh, &sample.camera, &sample.joints2d)?;
        let prep = prepare_sample(sample, &coarse, &net.config)?;
        let rig = predict_rig(&net, sample, &prep)?;
        rows.push((
            id,
            EvalReport::compute(&sample.mesh, &rig, &sample.gt_rig, pose_seed_for(id))?,
        ));
    }
    let mean = EvalReport::mean_of(&rows.iter().map(|(_, r)| *r).collect::<Vec<_>>());
    Ok(EvalOutcome { rows, mean })
}

/// Oracle evaluation: the ground-truth rig is scored against itself
/// (all-zero distances, precision 1), exercising the metric path end to end.
pub fn evaluate_oracle(dataset_dir: &Path, split_name: &str) -> Result<EvalOutcome> {
    let (samples, split) = load_dataset(dataset_dir)?;
    let by_id: HashMap<usize, &LoadedSample> = samples.iter().map(|s| (s.id, s)).collect();
    let ids = split.ids(split_name)?;
    let mut rows = Vec::with_capacity(ids.len());
    for &id in ids {
        let sample = by_id
            .get(&id)
            .ok_or_else(|| Error::invalid("eval", format!("sample {id} missing from dataset")))?;
        rows.push((
            id,
            EvalReport::compute(&sample.mesh, &sample.gt_rig, &sample.gt_rig, pose_seed_for(id))?,
        ));
    }
    let mean = EvalReport::mean_of(&rows.iter().map(|(_, r)| *r).collect::<Vec<_>>());
    Ok(EvalOutcome { rows, mean })
}

/// Full single-mesh inference: coarse estimation then the network, returning
/// a complete rig (joints + skinning).
pub fn rig_single(
    checkpoint: &Path,
    mesh: &crate::mesh::TriMesh,
    camera: &crate::camera::CameraModel,
    joints2d: &Joints2D,
) -> Result<(Rig, CoarseSkeleton)> {
    let loaded = load_checkpoint(checkpoint)?;
    let net = network_from_checkpoint(&loaded)?;
    let coarse = estimate_coarse_skeleton(mesh, camera, joints2d)?;
    let inputs = prepare_inputs(mesh, &coarse, &net.config)?;
    let pred = net.forward(&inputs)?;
    let topology = crate::skeleton::mixamo_topology();
    let rig = Rig::new(
        topology,
        pred.joint_positions().into_iter().map(clamp_joint).collect(),
        pred.skinning_matrix()?,
    )?;
    Ok((rig, coarse))
}
