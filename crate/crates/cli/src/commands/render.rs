//! Renders a scene to PPM frames, PFM depth maps, and pose CSVs.

use anyhow::Result;
use clap::Args as ClapArgs;
use serde::Serialize;
use std::path::PathBuf;
use std::process::ExitCode;

use depthcast::image::{write_pfm_scalar, write_ppm};
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
    #[arg(long, default_value = "out/render")]
    pub out: PathBuf,
    /// Seed for preset generation.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Also write the resolved scene description as JSON.
    #[arg(long)]
    pub scene_out: Option<PathBuf>,
}

#[derive(Serialize)]
pub struct RenderResult {
    pub frames: Vec<String>,
    pub depths: Vec<String>,
    pub poses_csv: String,
    pub rel_poses_csv: String,
}

pub fn run(args: Args) -> Result<ExitCode> {
    crate::ensure_out_dir(&args.out)?;
    let scene = super::resolve_scene(&args.scene, &args.preset, args.seed)?;
    if let Some(path) = &args.scene_out {
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        scene.save(path)?;
    }
    let seq = scene.render_sequence()?;
    let mut frames = Vec::new();
    let mut depths = Vec::new();
    for (i, frame) in seq.frames.iter().enumerate() {
        let fp = args.out.join(format!("frame_{i:03}.ppm"));
        write_ppm(&fp, &frame.image)?;
        frames.push(fp.display().to_string());
        let dp = args.out.join(format!("depth_{i:03}.pfm"));
        write_pfm_scalar(&dp, &frame.depth)?;
        depths.push(dp.display().to_string());
    }
    let poses_csv = args.out.join("poses_c2w.csv");
    let c2w: Vec<_> = seq.frames.iter().map(|f| f.pose_c2w).collect();
    write_pose_csv(&poses_csv, &c2w)?;
    let rel_csv = args.out.join("poses_rel_to_target.csv");
    write_pose_csv(&rel_csv, &seq.rel_to_last)?;

    let report = Report {
        command: "render".to_string(),
        timestamp_unix: timestamp_unix(),
        config: args.clone(),
        result: RenderResult {
            frames,
            depths,
            poses_csv: poses_csv.display().to_string(),
            rel_poses_csv: rel_csv.display().to_string(),
        },
    };
    write_report(args.out.join("report.json"), &report)?;
    println!("render: {} frames written to {}", seq.frames.len(), args.out.display());
    Ok(ExitCode::SUCCESS)
}
