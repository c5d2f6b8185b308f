//! Offline evaluation of predicted depth maps (PFM) or trajectories (CSV).

use anyhow::Result;
use clap::{Args as ClapArgs, ValueEnum};
use serde::Serialize;
use std::io::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use depthcast::eval::{ate, depth_metrics, range_filtered_metrics, DepthMetrics, EvalConfig, RangeBinMetrics};
use depthcast::image::{read_pfm_scalar, ScalarMap};
use depthcast::synth::{read_pose_csv, Trajectory};

use crate::report::{timestamp_unix, write_report, Report};

#[derive(Clone, Copy, Serialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Depth,
    Pose,
}

#[derive(ClapArgs, Serialize, Clone)]
pub struct Args {
    /// Predicted depth PFM (depth mode) or trajectory CSV (pose mode).
    #[arg(long)]
    pub pred: PathBuf,
    /// Ground-truth counterpart.
    #[arg(long)]
    pub gt: PathBuf,
    #[arg(long, value_enum, default_value_t = Mode::Depth)]
    pub mode: Mode,
    #[arg(long, default_value = "out/eval")]
    pub out: PathBuf,
    /// Disable median scaling (depth mode).
    #[arg(long, default_value_t = false)]
    pub no_median_scaling: bool,
    /// Depth cap (depth mode).
    #[arg(long, default_value_t = 80.0)]
    pub cap: f64,
    /// Align a similarity (scale + rigid) transform instead of rigid only
    /// (pose mode).
    #[arg(long, default_value_t = false)]
    pub align_scale: bool,
}

#[derive(Serialize)]
#[serde(untagged)]
pub enum EvalResult {
    Depth {
        metrics: DepthMetrics,
        range_bins: Vec<RangeBinMetrics>,
        metrics_csv: String,
    },
    Pose {
        ate_mean: f64,
        ate_std: f64,
        metrics_csv: String,
    },
}

fn run_depth(args: &Args) -> Result<EvalResult> {
    let pred = read_pfm_scalar(&args.pred)?;
    let gt = read_pfm_scalar(&args.gt)?;
    let valid = ScalarMap::constant(gt.height(), gt.width(), 1.0);
    let cfg = EvalConfig {
        depth_cap: args.cap,
        median_scaling: !args.no_median_scaling,
        ..Default::default()
    };
    let metrics = depth_metrics(&pred, &gt, &valid, &cfg)?;
    let bins = range_filtered_metrics(&pred, &gt, &valid, &cfg)?;

    let csv_path = args.out.join("metrics.csv");
    let mut f = std::io::BufWriter::new(std::fs::File::create(&csv_path)?);
    writeln!(f, "{}", DepthMetrics::CSV_HEADER)?;
    writeln!(f, "{}", metrics.csv_row())?;
    drop(f);
    Ok(EvalResult::Depth { metrics, range_bins: bins, metrics_csv: csv_path.display().to_string() })
}

fn run_pose(args: &Args) -> Result<EvalResult> {
    let pred = Trajectory { poses: read_pose_csv(&args.pred)? };
    let gt = Trajectory { poses: read_pose_csv(&args.gt)? };
    let (ate_mean, ate_std) = ate(&pred, &gt, args.align_scale)?;
    let csv_path = args.out.join("metrics.csv");
    let mut f = std::io::BufWriter::new(std::fs::File::create(&csv_path)?);
    writeln!(f, "ate_mean,ate_std")?;
    writeln!(f, "{ate_mean},{ate_std}")?;
    drop(f);
    Ok(EvalResult::Pose { ate_mean, ate_std, metrics_csv: csv_path.display().to_string() })
}

pub fn run(args: Args) -> Result<ExitCode> {
    crate::ensure_out_dir(&args.out)?;
    let result = match args.mode {
        Mode::Depth => run_depth(&args)?,
        Mode::Pose => run_pose(&args)?,
    };
    match &result {
        EvalResult::Depth { metrics, .. } => {
            println!("eval depth: abs_rel {:.6}, rmse {:.6}, d1 {:.4}", metrics.abs_rel, metrics.rmse, metrics.delta1)
        }
        EvalResult::Pose { ate_mean, ate_std, .. } => {
            println!("eval pose: ate {ate_mean:.6} ± {ate_std:.6}")
        }
    }
    let report = Report {
        command: "eval".to_string(),
        timestamp_unix: timestamp_unix(),
        config: args.clone(),
        result,
    };
    write_report(args.out.join("metrics.json"), &report)?;
    Ok(ExitCode::SUCCESS)
}
