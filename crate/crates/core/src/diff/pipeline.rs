//! Direct optimization of per-pixel disparity logits and per-frame poses
//! against the multi-scale photometric objective.

use std::io::Write as _;
use std::path::Path;

use nalgebra::Vector3;

use crate::diff::{adam_step, AdamConfig, AdamState, ParamVector};
use crate::error::{Error, Result};
use crate::geometry::{pose_from_axis_angle, DepthRange, Intrinsics, Pose};
use crate::image::{ImageBuffer, ScalarMap};
use crate::loss::{total_loss, total_loss_with_grad, LossBreakdown, LossConfig};

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Sigmoid output kept strictly inside (0,1) so the disparity-to-depth map
/// stays in its domain even for saturated logits.
fn sigmoid_clamped(x: f64) -> f64 {
    sigmoid(x).clamp(1e-12, 1.0 - 1e-12)
}

/// A view-synthesis optimization instance: context frames, the target frame,
/// and everything needed to evaluate the objective on a parameter vector.
pub struct SynthesisProblem {
    pub context: Vec<ImageBuffer>,
    pub target: ImageBuffer,
    pub k: Intrinsics,
    pub range: DepthRange,
    pub loss_cfg: LossConfig,
}

impl SynthesisProblem {
    pub fn new(
        context: Vec<ImageBuffer>,
        target: ImageBuffer,
        k: Intrinsics,
        range: DepthRange,
        loss_cfg: LossConfig,
    ) -> Result<Self> {
        loss_cfg.validate()?;
        if context.is_empty() {
            return Err(Error::domain("at least one context frame is required"));
        }
        for frame in &context {
            if !frame.same_shape(&target) {
                return Err(Error::shape("context frame shape differs from target".to_string()));
            }
        }
        Ok(SynthesisProblem { context, target, k, range, loss_cfg })
    }

    fn scale_dims(&self, s: usize) -> (usize, usize) {
        (self.target.height() >> s, self.target.width() >> s)
    }

    /// Zero-initialized parameters: disparity logits 0 (σ = 0.5 everywhere)
    /// and identity poses.
    pub fn init_params(&self) -> ParamVector {
        let mut params = ParamVector::new();
        for s in 0..self.loss_cfg.scales {
            let (h, w) = self.scale_dims(s);
            params
                .push_segment(&format!("disparity_logits_s{s}"), &[h, w], vec![0.0; h * w])
                .expect("fresh layout");
        }
        for i in 0..self.context.len() {
            params
                .push_segment(&format!("pose_{i}"), &[6], vec![0.0; 6])
                .expect("fresh layout");
        }
        params
    }

    fn unpack(&self, params: &ParamVector) -> Result<(Vec<ScalarMap>, Vec<[f64; 6]>)> {
        let mut sigmas = Vec::with_capacity(self.loss_cfg.scales);
        for s in 0..self.loss_cfg.scales {
            let (h, w) = self.scale_dims(s);
            let logits = params
                .segment(&format!("disparity_logits_s{s}"))
                .ok_or_else(|| Error::domain(format!("missing segment disparity_logits_s{s}")))?;
            let mut sigma = ScalarMap::zeros(h, w);
            for (o, &l) in sigma.data_mut().iter_mut().zip(logits) {
                *o = sigmoid_clamped(l);
            }
            sigmas.push(sigma);
        }
        let mut poses = Vec::with_capacity(self.context.len());
        for i in 0..self.context.len() {
            let seg = params
                .segment(&format!("pose_{i}"))
                .ok_or_else(|| Error::domain(format!("missing segment pose_{i}")))?;
            poses.push([seg[0], seg[1], seg[2], seg[3], seg[4], seg[5]]);
        }
        Ok((sigmas, poses))
    }

    pub fn poses_of(params: &[[f64; 6]]) -> Result<Vec<Pose>> {
        params
            .iter()
            .map(|p| {
                pose_from_axis_angle(
                    Vector3::new(p[0], p[1], p[2]),
                    Vector3::new(p[3], p[4], p[5]),
                )
            })
            .collect()
    }

    /// Objective value at a parameter vector.
    pub fn loss(&self, params: &ParamVector) -> Result<f64> {
        self.breakdown(params).map(|b| b.total)
    }

    pub fn breakdown(&self, params: &ParamVector) -> Result<LossBreakdown> {
        let (sigmas, pose_params) = self.unpack(params)?;
        let poses = Self::poses_of(&pose_params)?;
        total_loss(
            &self.context,
            &self.target,
            &sigmas,
            &poses,
            &self.k,
            &self.range,
            &self.loss_cfg,
        )
    }

    /// Objective plus its gradient in the parameter layout of
    /// [`SynthesisProblem::init_params`].
    pub fn breakdown_and_grad(&self, params: &ParamVector) -> Result<(LossBreakdown, ParamVector)> {
        let (sigmas, pose_params) = self.unpack(params)?;
        let (breakdown, grad) = total_loss_with_grad(
            &self.context,
            &self.target,
            &sigmas,
            &pose_params,
            &self.k,
            &self.range,
            &self.loss_cfg,
        )?;
        let mut out = params.zeros_like();
        for s in 0..self.loss_cfg.scales {
            let name = format!("disparity_logits_s{s}");
            let logits = params.segment(&name).unwrap().to_vec();
            let seg = out.segment_mut(&name).unwrap();
            for ((g, &dsigma), &l) in
                seg.iter_mut().zip(grad.d_disparities[s].data()).zip(&logits)
            {
                let sig = sigmoid_clamped(l);
                *g = dsigma * sig * (1.0 - sig);
            }
        }
        for (i, dp) in grad.d_poses.iter().enumerate() {
            out.segment_mut(&format!("pose_{i}")).unwrap().copy_from_slice(dp);
        }
        Ok((breakdown, out))
    }

    /// Full-resolution σ map (finest scale) for a parameter vector.
    pub fn finest_sigma(&self, params: &ParamVector) -> Result<ScalarMap> {
        let (sigmas, _) = self.unpack(params)?;
        Ok(sigmas.into_iter().next().expect("at least one scale"))
    }
}

/// Settings of the direct-optimization loop.
#[derive(Debug, Clone)]
pub struct RecoveryConfig {
    pub steps: usize,
    pub loss: LossConfig,
    pub depth_range: DepthRange,
    pub adam: AdamConfig,
}

impl Default for RecoveryConfig {
    fn default() -> Self {
        RecoveryConfig {
            steps: 4000,
            loss: LossConfig::default(),
            depth_range: DepthRange::default(),
            adam: AdamConfig::default(),
        }
    }
}

/// One objective evaluation along the optimization trajectory.
#[derive(Debug, Clone, Copy)]
pub struct LossRecord {
    pub step: usize,
    pub total: f64,
    pub photometric: f64,
    pub smoothness: f64,
    pub lr: f64,
}

/// Outcome of [`optimize_depth_pose`].
#[derive(Debug, Clone)]
pub struct RecoveryResult {
    /// Final per-scale disparity (σ) maps, finest first.
    pub disparities: Vec<ScalarMap>,
    pub poses: Vec<Pose>,
    pub pose_params: Vec<[f64; 6]>,
    pub history: Vec<LossRecord>,
    pub final_breakdown: LossBreakdown,
}

/// Minimizes the multi-scale objective over per-pixel disparity logits (one
/// map per scale) and one 6-parameter pose per context frame.
pub fn optimize_depth_pose(
    context: Vec<ImageBuffer>,
    target: ImageBuffer,
    k: Intrinsics,
    cfg: &RecoveryConfig,
) -> Result<RecoveryResult> {
    let problem = SynthesisProblem::new(context, target, k, cfg.depth_range, cfg.loss.clone())?;
    let mut params = problem.init_params();
    let mut state = AdamState::new(params.len(), cfg.adam);
    let mut history = Vec::with_capacity(cfg.steps + 1);
    for step in 0..cfg.steps {
        let (breakdown, grads) = problem.breakdown_and_grad(&params)?;
        if !breakdown.total.is_finite() {
            return Err(Error::Diverged { step, what: format!("loss = {}", breakdown.total) });
        }
        history.push(LossRecord {
            step,
            total: breakdown.total,
            photometric: breakdown.photometric,
            smoothness: breakdown.smoothness,
            lr: state.lr_at(state.step + 1),
        });
        let (next, st) = adam_step(&params, &grads, &state)?;
        if !next.data().iter().all(|v| v.is_finite()) {
            return Err(Error::Diverged { step, what: "non-finite parameters".to_string() });
        }
        params = next;
        state = st;
    }
    let final_breakdown = problem.breakdown(&params)?;
    history.push(LossRecord {
        step: cfg.steps,
        total: final_breakdown.total,
        photometric: final_breakdown.photometric,
        smoothness: final_breakdown.smoothness,
        lr: state.lr_at(state.step + 1),
    });
    let (disparities, pose_params) = problem.unpack(&params)?;
    let poses = SynthesisProblem::poses_of(&pose_params)?;
    Ok(RecoveryResult { disparities, poses, pose_params, history, final_breakdown })
}

/// Writes a loss history as CSV with a header row.
pub fn write_loss_csv(path: impl AsRef<Path>, history: &[LossRecord]) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "step,total,photometric,smoothness,lr")?;
    for r in history {
        writeln!(out, "{},{},{},{},{}", r.step, r.total, r.photometric, r.smoothness, r.lr)?;
    }
    Ok(())
}
