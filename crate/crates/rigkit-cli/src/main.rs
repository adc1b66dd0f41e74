//! `rigkit` command-line interface.
//!
//! Subcommands: `synth` (generate a rigged-character dataset), `pgse`
//! (coarse skeleton from 2D joints), `train`, `rig` (full inference on one
//! mesh), `eval` (metric reports over a dataset split) and `deform`
//! (linear-blend-skinning a mesh with a pose).
//!
//! Exit codes: 0 success, 1 computation failure, 2 bad input or flags.

mod flags;

use std::path::PathBuf;

use flags::Flags;
use rigkit::mesh::{load_obj, save_obj};
use rigkit::pgse::{estimate_coarse_skeleton, JointProvenance, Joints2D};
use rigkit::skeleton::{
    linear_blend_skinning, load_rig, mixamo_topology, save_rig, Pose, Rig, SkinningMatrix,
};
use rigkit::synth::{generate_dataset, write_dataset, RatioDistribution};
use rigkit::train::{evaluate_checkpoint, evaluate_oracle, rig_single, train, TrainConfig};
use rigkit::camera::CameraModel;

const USAGE: &str = "\
rigkit <subcommand> [flags]

Subcommands:
  synth    generate a procedural rigged-character dataset
  pgse     estimate a coarse skeleton from a mesh, camera and 2D joints
  train    train the rigging network from a config file
  rig      predict a full rig (skeleton + skinning) for one mesh
  eval     evaluate a checkpoint (or the ground-truth oracle) on a split
  deform   deform a rigged mesh with a pose via linear blend skinning

Run `rigkit <subcommand> --help` for flags.";

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    std::process::exit(run(&args));
}

fn run(args: &[String]) -> i32 {
    let Some(subcommand) = args.first() else {
        eprintln!("{USAGE}");
        return 2;
    };
    let rest = &args[1..];
    let result = match subcommand.as_str() {
        "synth" => cmd_synth(rest),
        "pgse" => cmd_pgse(rest),
        "train" => cmd_train(rest),
        "rig" => cmd_rig(rest),
        "eval" => cmd_eval(rest),
        "deform" => cmd_deform(rest),
        "--help" | "-h" | "help" => {
            println!("{USAGE}");
            return 0;
        }
        other => {
            eprintln!("unknown subcommand `{other}`\n\n{USAGE}");
            return 2;
        }
    };
    match result {
        Ok(()) => 0,
        Err(CliError::Usage(message)) => {
            eprintln!("{message}");
            2
        }
        Err(CliError::Help(text)) => {
            println!("{text}");
            0
        }
        Err(CliError::Lib(err)) => {
            eprintln!("error: {err}");
            if err.is_input_error() {
                2
            } else {
                1
            }
        }
    }
}

pub(crate) enum CliError {
    Usage(String),
    Help(String),
    Lib(rigkit::Error),
}

impl From<rigkit::Error> for CliError {
    fn from(err: rigkit::Error) -> Self {
        CliError::Lib(err)
    }
}

type CliResult = Result<(), CliError>;

fn print_config(pairs: &[(&str, String)]) {
    for (key, value) in pairs {
        println!("config {key} {value}");
    }
}

const SYNTH_HELP: &str = "\
rigkit synth --count N --out DIR [--ratio-dist uniform|point:R] [--seed S]
             [--noise-sigma PX] [--vertex-budget N]

Writes N sample directories (mesh.obj, rig.txt, camera.txt, joints2d.txt)
plus split.txt with a deterministic shuffled 80/10/10 split. Defaults:
ratio-dist uniform (head-to-body in [2,9]), seed 0, noise-sigma 5.12
(1% of the 512px image), vertex-budget 700.";

fn cmd_synth(args: &[String]) -> CliResult {
    let flags = Flags::parse(
        args,
        &["count", "out", "ratio-dist", "seed", "noise-sigma", "vertex-budget"],
        SYNTH_HELP,
    )?;
    let count: usize = flags.require_parsed("count")?;
    let out: PathBuf = PathBuf::from(flags.require("out")?);
    let dist_text = flags.get("ratio-dist").unwrap_or("uniform").to_string();
    let distribution = parse_ratio_dist(&dist_text)?;
    let seed: u64 = flags.parsed_or("seed", 0)?;
    let noise_sigma: f64 = flags.parsed_or("noise-sigma", rigkit::pgse::default_noise_sigma(rigkit::synth::IMAGE_SIZE))?;
    let vertex_budget: usize = flags.parsed_or("vertex-budget", 700)?;

    print_config(&[
        ("count", count.to_string()),
        ("ratio_dist", dist_text.clone()),
        ("seed", seed.to_string()),
        ("noise_sigma", noise_sigma.to_string()),
        ("vertex_budget", vertex_budget.to_string()),
        ("out", out.display().to_string()),
    ]);

    let (samples, split) = generate_dataset(count, distribution, seed, vertex_budget, noise_sigma)?;
    write_dataset(&out, &samples, &split)?;
    println!(
        "synth wrote {count} samples to {} (train {} / val {} / test {})",
        out.display(),
        split.train.len(),
        split.val.len(),
        split.test.len()
    );
    Ok(())
}

fn parse_ratio_dist(text: &str) -> Result<RatioDistribution, CliError> {
    if text == "uniform" {
        return Ok(RatioDistribution::uniform_default());
    }
    if let Some(r) = text.strip_prefix("point:") {
        let ratio: f64 = r
            .parse()
            .map_err(|_| CliError::Usage(format!("bad ratio `{r}` in --ratio-dist")))?;
        return Ok(RatioDistribution::Point(ratio));
    }
    Err(CliError::Usage(format!(
        "--ratio-dist must be `uniform` or `point:R`, got `{text}`"
    )))
}

const PGSE_HELP: &str = "\
rigkit pgse --mesh MESH.obj --camera CAMERA.txt --joints2d J2D.txt --out RIG.txt

Back-projects each 2D joint to a camera ray and places the coarse joint at
the midpoint of the ray's first and last mesh intersections (rays that miss
fall back to the point nearest the bounding-box center). Writes the coarse
skeleton as a rig file with no skinning; per-joint provenance is printed.";

fn cmd_pgse(args: &[String]) -> CliResult {
    let flags = Flags::parse(args, &["mesh", "camera", "joints2d", "out"], PGSE_HELP)?;
    let mesh_path = PathBuf::from(flags.require("mesh")?);
    let camera_path = PathBuf::from(flags.require("camera")?);
    let joints_path = PathBuf::from(flags.require("joints2d")?);
    let out = PathBuf::from(flags.require("out")?);
    print_config(&[
        ("mesh", mesh_path.display().to_string()),
        ("camera", camera_path.display().to_string()),
        ("joints2d", joints_path.display().to_string()),
        ("out", out.display().to_string()),
    ]);

    let mesh = load_obj(&mesh_path)?;
    check_normalized(&mesh)?;
    let camera = CameraModel::load(&camera_path)?;
    let joints2d = Joints2D::load(&joints_path)?;
    let coarse = estimate_coarse_skeleton(&mesh, &camera, &joints2d)?;

    let topology = mixamo_topology();
    for (name, provenance) in topology.joint_names().iter().zip(coarse.provenance()) {
        let label = match provenance {
            JointProvenance::IntersectionMidpoint => "midpoint",
            JointProvenance::Fallback => "fallback",
        };
        println!("joint {name} {label}");
    }
    let rig = Rig::new(topology, coarse.positions().to_vec(), SkinningMatrix::empty())?;
    save_rig(&rig, &out)?;
    println!(
        "pgse wrote {} ({} fallback joints)",
        out.display(),
        coarse.fallback_count()
    );
    Ok(())
}

fn check_normalized(mesh: &rigkit::mesh::TriMesh) -> Result<(), CliError> {
    let (lo, hi) = mesh.bounding_box()?;
    let limit = 0.5 + 1e-9;
    if lo.max_abs() > limit || hi.max_abs() > limit {
        return Err(CliError::Lib(rigkit::Error::Invalid {
            what: "mesh",
            message: "mesh must be normalized to the [-0.5, 0.5] box before coarse estimation"
                .into(),
        }));
    }
    Ok(())
}

const TRAIN_HELP: &str = "\
rigkit train --config TRAIN.txt

Runs the two-stage pipeline: coarse skeletons are estimated and cached under
the run directory, then the network trains with shuffled gradient-accumulated
batches, the multi-step learning-rate schedule, periodic validation and
best/final checkpoints. See TrainConfig keys in the config file.";

fn cmd_train(args: &[String]) -> CliResult {
    let flags = Flags::parse(args, &["config"], TRAIN_HELP)?;
    let config_path = PathBuf::from(flags.require("config")?);
    let config = TrainConfig::load(&config_path)?;
    print_config(&[
        ("config", config_path.display().to_string()),
        ("epochs", config.epochs.to_string()),
        ("base_lr", config.base_lr.to_string()),
        ("batch_size", config.batch_size.to_string()),
        ("seed", config.seed.to_string()),
        ("dataset", config.dataset_dir.display().to_string()),
        ("out_dir", config.out_dir.display().to_string()),
        ("channels", config.net.channels.to_string()),
        ("use_msman", config.net.use_msman.to_string()),
    ]);
    let out = train(&config)?;
    let last = out.log.entries.last().expect("at least one epoch");
    println!(
        "train finished: final {} best {} loss_total {}",
        out.final_checkpoint.display(),
        out.best_checkpoint.display(),
        last.loss_total
    );
    Ok(())
}

const RIG_HELP: &str = "\
rigkit rig --checkpoint CKPT --mesh MESH.obj --camera CAMERA.txt \
--joints2d J2D.txt --out RIG.txt

Full inference on one mesh: coarse estimation, network forward pass, and a
complete rig file (refined joints + skinning weights).";

fn cmd_rig(args: &[String]) -> CliResult {
    let flags = Flags::parse(args, &["checkpoint", "mesh", "camera", "joints2d", "out"], RIG_HELP)?;
    let checkpoint = PathBuf::from(flags.require("checkpoint")?);
    let mesh_path = PathBuf::from(flags.require("mesh")?);
    let camera_path = PathBuf::from(flags.require("camera")?);
    let joints_path = PathBuf::from(flags.require("joints2d")?);
    let out = PathBuf::from(flags.require("out")?);
    print_config(&[
        ("checkpoint", checkpoint.display().to_string()),
        ("mesh", mesh_path.display().to_string()),
        ("camera", camera_path.display().to_string()),
        ("joints2d", joints_path.display().to_string()),
        ("out", out.display().to_string()),
    ]);

    let mesh = load_obj(&mesh_path)?;
    check_normalized(&mesh)?;
    let camera = CameraModel::load(&camera_path)?;
    let joints2d = Joints2D::load(&joints_path)?;
    let (rig, coarse) = rig_single(&checkpoint, &mesh, &camera, &joints2d)?;
    save_rig(&rig, &out)?;
    println!(
        "rig wrote {} ({} vertices skinned, {} fallback joints)",
        out.display(),
        rig.skinning.rows(),
        coarse.fallback_count()
    );
    Ok(())
}

const EVAL_HELP: &str = "\
rigkit eval (--checkpoint CKPT | --oracle) --dataset DIR --split train|val|test \
--out REPORT.csv

Evaluates every sample of the split (chamfer skeleton metrics, skinning
precision and L1, deformation error) and writes one CSV row per sample plus
a mean row. --oracle scores the ground-truth rig against itself.";

fn cmd_eval(args: &[String]) -> CliResult {
    let flags = Flags::parse(args, &["checkpoint", "dataset", "split", "out", "oracle"], EVAL_HELP)?;
    let dataset = PathBuf::from(flags.require("dataset")?);
    let split = flags.require("split")?.to_string();
    let out = PathBuf::from(flags.require("out")?);
    let oracle = flags.is_set("oracle");
    let checkpoint = flags.get("checkpoint").map(PathBuf::from);
    if !oracle && checkpoint.is_none() {
        return Err(CliError::Usage(
            "eval needs --checkpoint (or --oracle)".into(),
        ));
    }
    print_config(&[
        (
            "checkpoint",
            checkpoint
                .as_ref()
                .map(|p| p.display().to_string())
                .unwrap_or_else(|| "-".into()),
        ),
        ("oracle", oracle.to_string()),
        ("dataset", dataset.display().to_string()),
        ("split", split.clone()),
        ("out", out.display().to_string()),
    ]);

    let outcome = if oracle {
        evaluate_oracle(&dataset, &split)?
    } else {
        evaluate_checkpoint(&checkpoint.unwrap(), &dataset, &split)?
    };
    outcome.save_csv(&out)?;
    print!("{}", outcome.mean.to_kv());
    println!(
        "eval wrote {} ({} samples + mean row)",
        out.display(),
        outcome.rows.len()
    );
    Ok(())
}

const DEFORM_HELP: &str = "\
rigkit deform --mesh MESH.obj --rig RIG.txt --pose POSE.txt --out OUT.obj

Deforms the mesh with linear blend skinning under the pose (22 axis-angle
`rotation x y z` lines in topology order; all zeros is the identity) and
writes the result as OBJ.";

fn cmd_deform(args: &[String]) -> CliResult {
    let flags = Flags::parse(args, &["mesh", "rig", "pose", "out"], DEFORM_HELP)?;
    let mesh_path = PathBuf::from(flags.require("mesh")?);
    let rig_path = PathBuf::from(flags.require("rig")?);
    let pose_path = PathBuf::from(flags.require("pose")?);
    let out = PathBuf::from(flags.require("out")?);
    print_config(&[
        ("mesh", mesh_path.display().to_string()),
        ("rig", rig_path.display().to_string()),
        ("pose", pose_path.display().to_string()),
        ("out", out.display().to_string()),
    ]);

    let mesh = load_obj(&mesh_path)?;
    let rig = load_rig(&rig_path)?;
    let pose = Pose::load(&pose_path)?;
    let deformed = linear_blend_skinning(&mesh, &rig, &rig.skinning, &pose)?;
    let out_mesh = mesh.with_vertices(deformed)?;
    save_obj(&out_mesh, &out)?;
    println!("deform wrote {} ({} vertices)", out.display(), out_mesh.vertex_count());
    Ok(())
}

