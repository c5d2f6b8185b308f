//! Finite-difference verification of every differentiable kernel.

use anyhow::Result;
use clap::Args as ClapArgs;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::path::PathBuf;
use std::process::ExitCode;

use depthcast::diff::{finite_diff_check, FdCheckConfig, ParamVector, SynthesisProblem};
use depthcast::geometry::{DepthRange, Intrinsics, Pixel};
use depthcast::image::{bilinear_sample, ImageBuffer, ScalarMap};
use depthcast::loss::{
    photometric, photometric_backward, smoothness, smoothness_backward, ssim_backward,
    ssim_dissim_with, LossConfig,
};
use depthcast::tam::{init_weights, tam_backward, tam_forward, tam_forward_with_cache, Mat, TamConfig};
use depthcast::warp::{warp_jacobians, WarpResult};

use crate::report::{timestamp_unix, write_report, Report};

#[derive(ClapArgs, Serialize, Clone)]
pub struct Args {
    /// Output directory for report.json.
    #[arg(long, default_value = "out/gradcheck")]
    pub out: PathBuf,
    /// Seed for the random instances.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Test hook: corrupt one analytic gradient to verify failure reporting.
    #[arg(long, default_value_t = false)]
    pub planted_bug: bool,
    /// Finite-difference step.
    #[arg(long, default_value_t = 1e-5)]
    pub step: f64,
    /// Relative tolerance.
    #[arg(long, default_value_t = 1e-4)]
    pub rel_tol: f64,
}

#[derive(Serialize)]
pub struct KernelReport {
    pub kernel: String,
    pub checked: usize,
    pub max_rel_err: f64,
    pub passed: bool,
}

#[derive(Serialize)]
pub struct GradcheckResult {
    pub kernels: Vec<KernelReport>,
    pub all_pass: bool,
}

fn smooth_image(h: usize, w: usize, c: usize, seed: u64) -> ImageBuffer {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let comps: Vec<(f64, f64, f64)> = (0..2 * c)
        .map(|_| (rng.gen_range(0.02..0.1), rng.gen_range(0.02..0.1), rng.gen_range(0.0..6.28)))
        .collect();
    ImageBuffer::from_fn(h, w, c, |i, j, ch| {
        let mut v = 0.5;
        for (q, &(fu, fv, p0)) in comps.iter().enumerate() {
            if q % c == ch {
                v += 0.2 * (2.0 * std::f64::consts::PI * (fu * j as f64 + fv * i as f64) + p0).sin();
            }
        }
        v
    })
    .expect("valid image")
}

fn random_image(h: usize, w: usize, c: usize, seed: u64) -> ImageBuffer {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    ImageBuffer::from_fn(h, w, c, |_, _, _| rng.gen_range(0.0..1.0)).expect("valid image")
}

fn full_warp(img: &ImageBuffer) -> WarpResult {
    let (h, w) = (img.height(), img.width());
    WarpResult {
        image: img.clone(),
        valid_mask: ScalarMap::constant(h, w, 1.0),
        coord_u: ScalarMap::from_fn(h, w, |_, j| j as f64),
        coord_v: ScalarMap::from_fn(h, w, |i, _| i as f64),
    }
}

fn run_check(
    name: &str,
    f: impl Fn(&ParamVector) -> depthcast::Result<f64>,
    analytic: &ParamVector,
    point: &ParamVector,
    fd: &FdCheckConfig,
) -> Result<KernelReport> {
    let report = finite_diff_check(f, analytic, point, fd)?;
    Ok(KernelReport {
        kernel: name.to_string(),
        checked: report.checked,
        max_rel_err: report.max_rel_err,
        passed: report.passed(),
    })
}

fn check_bilinear_sampler(seed: u64, fd: &FdCheckConfig) -> Result<KernelReport> {
    let img = random_image(6, 7, 3, seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xb11);
    let w: Vec<f64> = (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let mut point = ParamVector::new();
    point.push_segment("uv", &[2], vec![2.3, 3.7])?;
    let s = bilinear_sample(&img, Pixel::new(2.3, 3.7));
    let mut analytic = point.zeros_like();
    analytic.segment_mut("uv").unwrap()[0] = (0..3).map(|c| w[c] * s.d_value_du[c]).sum();
    analytic.segment_mut("uv").unwrap()[1] = (0..3).map(|c| w[c] * s.d_value_dv[c]).sum();
    run_check(
        "bilinear_sampler",
        |p| {
            let uv = p.segment("uv").unwrap();
            let s = bilinear_sample(&img, Pixel::new(uv[0], uv[1]));
            Ok((0..3).map(|c| w[c] * s.value[c]).sum())
        },
        &analytic,
        &point,
        fd,
    )
}

fn check_warp_jacobians(seed: u64, fd: &FdCheckConfig) -> Result<KernelReport> {
    let k = Intrinsics::new(20.0, 20.0, 7.5, 7.5)?;
    let img = smooth_image(16, 16, 3, seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x3a);
    let depth: Vec<f64> = (0..256).map(|_| 5.0 + rng.gen_range(-0.2..0.2)).collect();
    let pose = [0.004, -0.003, 0.002, 0.11, 0.13, 0.04];
    let weights: Vec<f64> = (0..256 * 3).map(|_| rng.gen_range(-1.0..1.0)).collect();

    let mut point = ParamVector::new();
    point.push_segment("depth", &[16, 16], depth.clone())?;
    point.push_segment("pose", &[6], pose.to_vec())?;

    let depth_map = ScalarMap::new(16, 16, depth)?;
    let (_, jac) = warp_jacobians(&img, &depth_map, &pose, &k)?;
    let mut analytic = point.zeros_like();
    {
        let d = analytic.segment_mut("depth").unwrap();
        for idx in 0..256 {
            for c in 0..3 {
                d[idx] += weights[idx * 3 + c] * jac.d_depth[idx][c];
            }
        }
    }
    {
        let p = analytic.segment_mut("pose").unwrap();
        for idx in 0..256 {
            for c in 0..3 {
                for q in 0..6 {
                    p[q] += weights[idx * 3 + c] * jac.d_pose[idx][c][q];
                }
            }
        }
    }
    run_check(
        "warp_jacobians",
        |p| {
            let depth = ScalarMap::new(16, 16, p.segment("depth").unwrap().to_vec())?;
            let seg = p.segment("pose").unwrap();
            let pose = [seg[0], seg[1], seg[2], seg[3], seg[4], seg[5]];
            let (warp, _) = warp_jacobians(&img, &depth, &pose, &k)?;
            Ok(warp.image.data().iter().zip(&weights).map(|(a, b)| a * b).sum())
        },
        &analytic,
        &point,
        fd,
    )
}

fn check_ssim(seed: u64, fd: &FdCheckConfig) -> Result<KernelReport> {
    let target = random_image(5, 5, 3, seed);
    let recon = random_image(5, 5, 3, seed ^ 0x55);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x77);
    let upstream = ScalarMap::from_fn(5, 5, |_, _| rng.gen_range(-1.0..1.0));
    let (c1, c2) = (0.01 * 0.01, 0.03 * 0.03);
    let grad = ssim_backward(&target, &recon, &upstream, c1, c2)?;
    let mut point = ParamVector::new();
    point.push_segment("recon", &[5, 5, 3], recon.data().to_vec())?;
    let mut analytic = point.zeros_like();
    analytic.segment_mut("recon").unwrap().copy_from_slice(&grad);
    run_check(
        "ssim",
        |p| {
            let img = ImageBuffer::new(5, 5, 3, p.segment("recon").unwrap().to_vec())?;
            let map = ssim_dissim_with(&target, &img, c1, c2)?;
            Ok(map.data().iter().zip(upstream.data()).map(|(a, b)| a * b).sum())
        },
        &analytic,
        &point,
        fd,
    )
}

fn check_photometric(seed: u64, fd: &FdCheckConfig, planted_bug: bool) -> Result<KernelReport> {
    let target = random_image(5, 5, 3, seed ^ 0x1);
    let base = random_image(5, 5, 3, seed ^ 0x2);
    let mut warp = full_warp(&base);
    warp.valid_mask.set(0, 0, 0.0);
    let cfg = LossConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x3);
    let upstream = ScalarMap::from_fn(5, 5, |_, _| rng.gen_range(0.0..1.0));
    let grad = photometric_backward(&target, &warp, &cfg, &upstream)?;
    let mut point = ParamVector::new();
    point.push_segment("recon", &[5, 5, 3], base.data().to_vec())?;
    let mut analytic = point.zeros_like();
    analytic.segment_mut("recon").unwrap().copy_from_slice(&grad);
    if planted_bug {
        for v in analytic.data_mut() {
            *v *= 2.0;
        }
    }
    run_check(
        "photometric",
        |p| {
            let mut w2 = warp.clone();
            w2.image = ImageBuffer::new(5, 5, 3, p.segment("recon").unwrap().to_vec())?;
            let pe = photometric(&target, &w2, &cfg)?;
            Ok(pe.data().iter().zip(upstream.data()).map(|(a, b)| a * b).sum())
        },
        &analytic,
        &point,
        fd,
    )
}

fn check_smoothness(seed: u64, fd: &FdCheckConfig) -> Result<KernelReport> {
    let img = random_image(6, 6, 3, seed ^ 0x9);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xa);
    let disparity: Vec<f64> = (0..36).map(|_| rng.gen_range(0.2..0.8)).collect();
    let d_map = ScalarMap::new(6, 6, disparity.clone())?;
    let grad = smoothness_backward(&d_map, &img)?;
    let mut point = ParamVector::new();
    point.push_segment("disparity", &[6, 6], disparity)?;
    let mut analytic = point.zeros_like();
    analytic.segment_mut("disparity").unwrap().copy_from_slice(grad.data());
    run_check(
        "smoothness",
        |p| {
            let d = ScalarMap::new(6, 6, p.segment("disparity").unwrap().to_vec())?;
            smoothness(&d, &img)
        },
        &analytic,
        &point,
        fd,
    )
}

/// One TAM configuration checked end to end; sub-operations are isolated by
/// the layer count (0 = embedding only, 1 = attention + feed-forward, ...).
fn check_tam(name: &str, cfg: TamConfig, seed: u64, fd: &FdCheckConfig, zero_ff: bool) -> Result<KernelReport> {
    let mut params = init_weights(&cfg)?;
    if zero_ff {
        for l in 0..cfg.layers {
            for seg in [format!("layer{l}.ff.w1"), format!("layer{l}.ff.w2")] {
                for v in params.segment_mut(&seg).unwrap() {
                    *v = 0.0;
                }
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xf00d);
    let features = Mat::from_vec(
        cfg.context,
        cfg.feature_dim,
        (0..cfg.context * cfg.feature_dim).map(|_| rng.gen_range(-1.0..1.0)).collect(),
    );
    let wout: Vec<f64> = (0..cfg.d_model).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let (_, cache) = tam_forward_with_cache(&features, &params, &cfg)?;
    let mut analytic = params.zeros_like();
    tam_backward(&wout, &cache, &params, &cfg, &mut analytic)?;
    run_check(
        name,
        |p| {
            let out = tam_forward(&features, p, &cfg)?;
            Ok(out.iter().zip(&wout).map(|(a, b)| a * b).sum())
        },
        &analytic,
        &params,
        fd,
    )
}

fn check_total_loss(seed: u64, fd: &FdCheckConfig) -> Result<KernelReport> {
    let k = Intrinsics::new(10.0, 10.0, 4.0, 4.0)?;
    let context = vec![smooth_image(8, 8, 3, seed ^ 0x31), smooth_image(8, 8, 3, seed ^ 0x32)];
    let target = smooth_image(8, 8, 3, seed ^ 0x33);
    let problem = SynthesisProblem::new(
        context,
        target,
        k,
        DepthRange::default(),
        LossConfig { scales: 2, ..Default::default() },
    )?;
    // Probe around depth ≈ 2 (logits ≈ −3) with small poses: the objective is
    // piecewise smooth, and this keeps the finite-difference bracket narrow
    // relative to the interpolation knots and L1 kinks.
    let mut point = problem.init_params();
    for (i, v) in point.data_mut().iter_mut().enumerate() {
        *v = ((i * 13 % 7) as f64 - 3.0) * 0.05;
    }
    for i in 0..2 {
        let name = format!("disparity_logits_s{i}");
        for v in point.segment_mut(&name).unwrap() {
            *v -= 3.0;
        }
    }
    for i in 0..2 {
        let name = format!("pose_{i}");
        for v in point.segment_mut(&name).unwrap() {
            *v *= 0.4;
        }
    }
    let (_, analytic) = problem.breakdown_and_grad(&point)?;
    run_check("total_loss", |p| problem.loss(p), &analytic, &point, fd)
}

pub fn run(args: Args) -> Result<ExitCode> {
    crate::ensure_out_dir(&args.out)?;
    let fd = FdCheckConfig { step: args.step, rel_tol: args.rel_tol, ..Default::default() };
    let seed = args.seed;

    let tam_small = TamConfig {
        context: 3,
        d_model: 8,
        heads: 2,
        d_ff: 16,
        feature_dim: 5,
        seed,
        ..Default::default()
    };
    let kernels = vec![
        check_bilinear_sampler(seed, &fd)?,
        check_warp_jacobians(seed, &fd)?,
        check_ssim(seed, &fd)?,
        check_photometric(seed, &fd, args.planted_bug)?,
        check_smoothness(seed, &fd)?,
        check_tam("tam_embed_project", TamConfig { layers: 0, ..tam_small.clone() }, seed, &fd, false)?,
        check_tam(
            "tam_multi_head_attention",
            TamConfig { layers: 1, ..tam_small.clone() },
            seed,
            &fd,
            true,
        )?,
        check_tam("tam_encoder_layer", TamConfig { layers: 1, ..tam_small.clone() }, seed, &fd, false)?,
        check_tam("tam_forward", TamConfig { layers: 2, ..tam_small.clone() }, seed, &fd, false)?,
        check_total_loss(seed, &fd)?,
    ];

    let all_pass = kernels.iter().all(|k| k.passed);
    for k in &kernels {
        println!(
            "{:26} checked {:5} coords, max rel err {:.3e} ... {}",
            k.kernel,
            k.checked,
            k.max_rel_err,
            if k.passed { "PASS" } else { "FAIL" }
        );
    }
    let report = Report {
        command: "gradcheck".to_string(),
        timestamp_unix: timestamp_unix(),
        config: args.clone(),
        result: GradcheckResult { kernels, all_pass },
    };
    write_report(args.out.join("report.json"), &report)?;
    Ok(if all_pass { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}
