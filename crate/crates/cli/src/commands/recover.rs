//! Direct depth/pose recovery on a synthetic scene, with ground-truth
//! evaluation and artifact emission.

use anyhow::Result;
use clap::Args as ClapArgs;
use serde::Serialize;
use std::path::PathBuf;
use std::process::ExitCode;

use depthcast::diff::{optimize_depth_pose, write_loss_csv, AdamConfig, RecoveryConfig};
use depthcast::eval::{depth_metrics, DepthMetrics, EvalConfig};
use depthcast::geometry::{axis_angle_from_rotation, disparity_to_depth, invert, compose, DepthRange, Pose};
use depthcast::image::{write_pfm_scalar, ScalarMap};
use depthcast::loss::LossConfig;
use depthcast::synth::write_pose_csv;

use crate::report::{timestamp_unix, write_report, Report};

#[derive(ClapArgs, Serialize, Clone)]
pub struct Args {
    /// Scene JSON file.
    #[arg(long)]
    pub scene: Option<PathBuf>,
    /// Built-in scene preset name.
    #[arg(long)]
    pub preset: Option<String>,
    #[arg(long, default_value = "out/recover")]
    pub out: PathBuf,
    /// Seed for preset generation.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Adam steps.
    #[arg(long, default_value_t = 3000)]
    pub steps: usize,
    /// Pyramid levels.
    #[arg(long, default_value_t = 4)]
    pub scales: usize,
    /// Disable auto-masking.
    #[arg(long, default_value_t = false)]
    pub no_automask: bool,
    /// Aggregate context frames by per-pixel minimum instead of the mean.
    #[arg(long, default_value_t = false)]
    pub min_reprojection: bool,
    #[arg(long, default_value_t = 1e-4)]
    pub lr: f64,
    /// Step at which the learning rate decays to --decay-lr; defaults to 85%
    /// of the run, echoing the late-training decay of the reference recipe.
    #[arg(long)]
    pub decay_at: Option<u64>,
    #[arg(long, default_value_t = 1e-5)]
    pub decay_lr: f64,
}

#[derive(Serialize)]
pub struct PoseError {
    pub frame: usize,
    pub translation_direction_deg: Option<f64>,
    pub rotation_error_deg: f64,
    pub translation_est: [f64; 3],
    pub translation_gt: [f64; 3],
}

#[derive(Serialize)]
pub struct RecoverResult {
    pub depth_metrics: DepthMetrics,
    pub pose_errors: Vec<PoseError>,
    pub masked_fraction: f64,
    pub initial_loss: f64,
    pub final_loss: f64,
    pub final_photometric: f64,
    pub final_smoothness: f64,
    pub artifacts: Vec<String>,
}

fn pose_error(frame: usize, est: &Pose, gt: &Pose) -> PoseError {
    let te = est.translation;
    let tg = gt.translation;
    let translation_direction_deg = if tg.norm() > 1e-9 && te.norm() > 1e-12 {
        let cos = (te.dot(&tg) / (te.norm() * tg.norm())).clamp(-1.0, 1.0);
        Some(cos.acos().to_degrees())
    } else {
        None
    };
    let rel = compose(&invert(est), gt);
    let rotation_error_deg = axis_angle_from_rotation(&rel.rotation).norm().to_degrees();
    PoseError {
        frame,
        translation_direction_deg,
        rotation_error_deg,
        translation_est: [te.x, te.y, te.z],
        translation_gt: [tg.x, tg.y, tg.z],
    }
}

pub fn run(args: Args) -> Result<ExitCode> {
    crate::ensure_out_dir(&args.out)?;
    let scene = super::resolve_scene(&args.scene, &args.preset, args.seed)?;
    let seq = scene.render_sequence()?;
    let k = scene.camera.intrinsics()?;
    let context: Vec<_> = seq.context_frames().iter().map(|f| f.image.clone()).collect();
    let target = seq.target().image.clone();

    let cfg = RecoveryConfig {
        steps: args.steps,
        loss: LossConfig {
            scales: args.scales,
            automask_enabled: !args.no_automask,
            min_reprojection: args.min_reprojection,
            ..Default::default()
        },
        depth_range: DepthRange::default(),
        adam: AdamConfig {
            lr: args.lr,
            decay_at_step: Some(args.decay_at.unwrap_or(args.steps as u64 * 85 / 100)),
            decay_lr: args.decay_lr,
            ..Default::default()
        },
    };
    let result = optimize_depth_pose(context, target, k, &cfg)?;

    // Recovered depth from the finest (full-resolution) disparity.
    let depth = disparity_to_depth(&result.disparities[0], &cfg.depth_range)?;
    let gt_depth = &seq.target().depth;
    let valid = ScalarMap::constant(gt_depth.height(), gt_depth.width(), 1.0);
    // Scene units are small; evaluate uncapped but median-scaled.
    let eval_cfg = EvalConfig { depth_cap: 1e6, ..Default::default() };
    let metrics = depth_metrics(&depth, gt_depth, &valid, &eval_cfg)?;

    let pose_errors: Vec<PoseError> = result
        .poses
        .iter()
        .zip(seq.rel_to_last.iter())
        .enumerate()
        .map(|(i, (est, gt))| pose_error(i, est, gt))
        .collect();

    let masked_fraction = 1.0 - result.final_breakdown.mask.mean();

    let depth_path = args.out.join("depth.pfm");
    write_pfm_scalar(&depth_path, &depth)?;
    let gt_depth_path = args.out.join("depth_gt.pfm");
    write_pfm_scalar(&gt_depth_path, gt_depth)?;
    let pose_path = args.out.join("poses.csv");
    write_pose_csv(&pose_path, &result.poses)?;
    let gt_pose_path = args.out.join("poses_gt.csv");
    write_pose_csv(&gt_pose_path, &seq.rel_to_last[..seq.rel_to_last.len() - 1])?;
    let loss_path = args.out.join("loss.csv");
    write_loss_csv(&loss_path, &result.history)?;

    let report = Report {
        command: "recover".to_string(),
        timestamp_unix: timestamp_unix(),
        config: args.clone(),
        result: RecoverResult {
            depth_metrics: metrics,
            pose_errors,
            masked_fraction,
            initial_loss: result.history.first().map(|r| r.total).unwrap_or(f64::NAN),
            final_loss: result.final_breakdown.total,
            final_photometric: result.final_breakdown.photometric,
            final_smoothness: result.final_breakdown.smoothness,
            artifacts: vec![
                depth_path.display().to_string(),
                gt_depth_path.display().to_string(),
                pose_path.display().to_string(),
                gt_pose_path.display().to_string(),
                loss_path.display().to_string(),
            ],
        },
    };
    write_report(args.out.join("report.json"), &report)?;
    println!(
        "recover: abs_rel {:.5}, masked fraction {:.3}, loss {:.6} -> {:.6}",
        report.result.depth_metrics.abs_rel,
        report.result.masked_fraction,
        report.result.initial_loss,
        report.result.final_loss
    );
    Ok(ExitCode::SUCCESS)
}
