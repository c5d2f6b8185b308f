//! Toy forecasting task: from the features of k context frames, regress the
//! next-step relative pose of a constant-velocity camera. Trains the
//! temporal aggregator plus a linear head with Adam on mean squared error.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::diff::{adam_step, AdamConfig, AdamState, ParamVector};
use crate::error::{Error, Result};
use crate::geometry::axis_angle_from_rotation;
use crate::synth::{
    make_sequence, relative_pose, CameraSpec, Scene, Texture, TrajectoryKind, TrajectorySpec,
};
use crate::tam::{featurize, init_weights, tam_backward, tam_forward_with_cache, Mat, TamConfig};

/// One supervised sample: context features and the next-step pose target
/// (axis-angle + translation of the last-context→next relative transform).
#[derive(Debug, Clone)]
pub struct ForecastSample {
    pub features: Mat,
    pub target: [f64; 6],
}

/// Train/held-out split plus the held-out target variance used as the
/// trivial-predictor baseline.
#[derive(Debug, Clone)]
pub struct ForecastDataset {
    pub train: Vec<ForecastSample>,
    pub held_out: Vec<ForecastSample>,
}

impl ForecastDataset {
    /// Mean per-dimension variance of the held-out targets: the MSE of
    /// always predicting the held-out mean.
    pub fn held_out_target_variance(&self) -> f64 {
        let n = self.held_out.len() as f64;
        let mut mean = [0.0; 6];
        for s in &self.held_out {
            for d in 0..6 {
                mean[d] += s.target[d] / n;
            }
        }
        let mut acc = 0.0;
        for s in &self.held_out {
            for d in 0..6 {
                let e = s.target[d] - mean[d];
                acc += e * e;
            }
        }
        acc / (n * 6.0)
    }
}

/// Dataset and optimization settings for the toy forecasting task.
#[derive(Debug, Clone)]
pub struct TamTrainConfig {
    pub tam: TamConfig,
    pub train_samples: usize,
    pub held_out_samples: usize,
    /// Rendered frame size and featurizer grid.
    pub frame_height: usize,
    pub frame_width: usize,
    pub grid_h: usize,
    pub grid_w: usize,
    pub steps: usize,
    pub batch: usize,
    pub adam: AdamConfig,
    pub seed: u64,
    /// Control: permute training targets to destroy the signal.
    pub shuffle_labels: bool,
}

impl Default for TamTrainConfig {
    fn default() -> Self {
        TamTrainConfig {
            tam: TamConfig::default(),
            train_samples: 192,
            held_out_samples: 64,
            frame_height: 24,
            frame_width: 72,
            grid_h: 4,
            grid_w: 12,
            steps: 1500,
            batch: 16,
            adam: AdamConfig { lr: 1e-3, ..Default::default() },
            seed: 0,
            shuffle_labels: false,
        }
    }
}

impl TamTrainConfig {
    fn camera(&self) -> CameraSpec {
        CameraSpec {
            fx: self.frame_width as f64 / 2.0,
            fy: self.frame_width as f64 / 2.0,
            cx: self.frame_width as f64 / 2.0,
            cy: self.frame_height as f64 / 2.0,
            height: self.frame_height,
            width: self.frame_width,
        }
    }
}

/// Renders constant-velocity sequences over freshly textured planes; the
/// plane depth is fixed so velocity is identifiable from feature motion.
pub fn generate_forecast_dataset(cfg: &TamTrainConfig) -> Result<ForecastDataset> {
    if cfg.grid_h * cfg.grid_w != cfg.tam.feature_dim {
        return Err(Error::shape(format!(
            "featurizer grid {}x{} does not match feature_dim {}",
            cfg.grid_h, cfg.grid_w, cfg.tam.feature_dim
        )));
    }
    let camera = cfg.camera();
    let k = camera.intrinsics()?;
    let depth = 10.0;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let total = cfg.train_samples + cfg.held_out_samples;
    let mut samples = Vec::with_capacity(total);
    for _ in 0..total {
        let texture = Texture::random(&mut rng, camera.fx, depth);
        let scene = Scene {
            primitives: vec![crate::synth::Primitive::Rect {
                center: [0.0, 0.0, depth],
                u_axis: [1.0, 0.0, 0.0],
                v_axis: [0.0, 1.0, 0.0],
                half_u: 100.0 * depth,
                half_v: 100.0 * depth,
                texture,
            }],
            background_depth: 50.0 * depth,
            background: Texture::constant(0.5),
        };
        let velocity = [
            rng.gen_range(-0.55..0.55),
            rng.gen_range(-0.30..0.30),
            rng.gen_range(-0.20..0.20),
        ];
        let spec = TrajectorySpec {
            kind: TrajectoryKind::ConstantVelocity { velocity },
            steps: cfg.tam.context + 1,
        };
        let traj = spec.generate()?;
        let seq = make_sequence(&scene, &traj, &k, camera.height, camera.width)?;
        // Context features: all frames except the final (future) one.
        let mut features = Mat::zeros(cfg.tam.context, cfg.tam.feature_dim);
        for (row, frame) in seq.frames[..cfg.tam.context].iter().enumerate() {
            let f = featurize(&frame.image, cfg.grid_h, cfg.grid_w);
            features.data[row * cfg.tam.feature_dim..(row + 1) * cfg.tam.feature_dim]
                .copy_from_slice(&f);
        }
        let rel = relative_pose(
            &seq.frames[cfg.tam.context - 1].pose_c2w,
            &seq.frames[cfg.tam.context].pose_c2w,
        );
        let r = axis_angle_from_rotation(&rel.rotation);
        let target = [
            r.x,
            r.y,
            r.z,
            rel.translation.x,
            rel.translation.y,
            rel.translation.z,
        ];
        samples.push(ForecastSample { features, target });
    }
    let held_out = samples.split_off(cfg.train_samples);
    Ok(ForecastDataset { train: samples, held_out })
}

/// Trained weights plus the loss trajectory and held-out evaluation.
#[derive(Debug, Clone)]
pub struct TamTrainResult {
    pub weights: ParamVector,
    pub train_history: Vec<(usize, f64)>,
    pub held_out_mse: f64,
    pub held_out_target_variance: f64,
}

fn head_forward(fused: &[f64], weights: &ParamVector) -> [f64; 6] {
    let w = weights.segment("head.w").unwrap();
    let b = weights.segment("head.b").unwrap();
    let d = fused.len();
    let mut out = [0.0; 6];
    for o in 0..6 {
        let mut acc = b[o];
        for j in 0..d {
            acc += w[o * d + j] * fused[j];
        }
        out[o] = acc;
    }
    out
}

fn mse_of(weights: &ParamVector, cfg: &TamConfig, samples: &[ForecastSample]) -> Result<f64> {
    let mut acc = 0.0;
    for s in samples {
        let (fused, _) = tam_forward_with_cache(&s.features, weights, cfg)?;
        let pred = head_forward(&fused, weights);
        for d in 0..6 {
            let e = pred[d] - s.target[d];
            acc += e * e;
        }
    }
    Ok(acc / (samples.len() as f64 * 6.0))
}

/// Initializes TAM weights plus the linear head in one parameter vector.
pub fn init_tam_with_head(cfg: &TamConfig) -> Result<ParamVector> {
    let mut weights = init_weights(cfg)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x9e3779b97f4a7c15);
    let bound = 1.0 / (cfg.d_model as f64).sqrt();
    let head: Vec<f64> = (0..6 * cfg.d_model).map(|_| rng.gen_range(-bound..bound)).collect();
    weights.push_segment("head.w", &[6, cfg.d_model], head)?;
    weights.push_segment("head.b", &[6], vec![0.0; 6])?;
    Ok(weights)
}

/// Minibatch Adam on the MSE of the linear head over the fused feature.
/// Deterministic for a fixed config (data order, init, and shuffling all
/// derive from the seed).
pub fn train_tam_toy(dataset: &ForecastDataset, cfg: &TamTrainConfig) -> Result<TamTrainResult> {
    cfg.tam.validate()?;
    if dataset.train.is_empty() || dataset.held_out.is_empty() {
        return Err(Error::domain("dataset must have train and held-out samples"));
    }
    let mut weights = init_tam_with_head(&cfg.tam)?;
    let mut state = AdamState::new(weights.len(), cfg.adam);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(1));

    let mut targets: Vec<[f64; 6]> = dataset.train.iter().map(|s| s.target).collect();
    if cfg.shuffle_labels {
        targets.shuffle(&mut rng);
    }

    let mut order: Vec<usize> = (0..dataset.train.len()).collect();
    let mut history = Vec::new();
    let mut cursor = 0usize;
    for step in 0..cfg.steps {
        if cursor + cfg.batch > order.len() {
            order.shuffle(&mut rng);
            cursor = 0;
        }
        let batch = &order[cursor..cursor + cfg.batch];
        cursor += cfg.batch;

        let mut grads = weights.zeros_like();
        let mut batch_loss = 0.0;
        let denom = (batch.len() * 6) as f64;
        for &idx in batch {
            let sample = &dataset.train[idx];
            let (fused, cache) = tam_forward_with_cache(&sample.features, &weights, &cfg.tam)?;
            let pred = head_forward(&fused, &weights);
            let mut dfused = vec![0.0; fused.len()];
            let head_w = weights.segment("head.w").unwrap().to_vec();
            let d = fused.len();
            for o in 0..6 {
                let err = pred[o] - targets[idx][o];
                batch_loss += err * err / denom;
                let coeff = 2.0 * err / denom;
                // Head gradients.
                {
                    let hw = grads.segment_mut("head.w").unwrap();
                    for j in 0..d {
                        hw[o * d + j] += coeff * fused[j];
                    }
                }
                grads.segment_mut("head.b").unwrap()[o] += coeff;
                for j in 0..d {
                    dfused[j] += coeff * head_w[o * d + j];
                }
            }
            tam_backward(&dfused, &cache, &weights, &cfg.tam, &mut grads)?;
        }
        if !batch_loss.is_finite() {
            return Err(Error::Diverged { step, what: format!("training loss = {batch_loss}") });
        }
        history.push((step, batch_loss));
        let (next, st) = adam_step(&weights, &grads, &state)?;
        weights = next;
        state = st;
    }

    let held_out_mse = mse_of(&weights, &cfg.tam, &dataset.held_out)?;
    Ok(TamTrainResult {
        weights,
        train_history: history,
        held_out_mse,
        held_out_target_variance: dataset.held_out_target_variance(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick_cfg() -> TamTrainConfig {
        TamTrainConfig {
            train_samples: 24,
            held_out_samples: 8,
            steps: 10,
            batch: 8,
            ..Default::default()
        }
    }

    #[test]
    fn dataset_targets_encode_velocity() {
        let cfg = quick_cfg();
        let data = generate_forecast_dataset(&cfg).unwrap();
        assert_eq!(data.train.len(), 24);
        assert_eq!(data.held_out.len(), 8);
        for s in data.train.iter().chain(&data.held_out) {
            // Constant-velocity trajectories: no rotation component.
            assert!(s.target[0].abs() < 1e-12);
            assert!(s.target[1].abs() < 1e-12);
            assert!(s.target[2].abs() < 1e-12);
            // Translation bounded by the sampling ranges.
            assert!(s.target[3].abs() <= 0.55 + 1e-9);
        }
        assert!(data.held_out_target_variance() > 0.0);
    }

    #[test]
    fn training_is_deterministic() {
        let cfg = quick_cfg();
        let data = generate_forecast_dataset(&cfg).unwrap();
        let a = train_tam_toy(&data, &cfg).unwrap();
        let b = train_tam_toy(&data, &cfg).unwrap();
        assert_eq!(a.weights.data(), b.weights.data());
        assert_eq!(a.held_out_mse, b.held_out_mse);
    }

    #[test]
    fn training_loss_moves_down() {
        let cfg = TamTrainConfig { steps: 60, ..quick_cfg() };
        let data = generate_forecast_dataset(&cfg).unwrap();
        let result = train_tam_toy(&data, &cfg).unwrap();
        let first: f64 = result.train_history[..5].iter().map(|(_, l)| l).sum::<f64>() / 5.0;
        let last: f64 = result.train_history[result.train_history.len() - 5..]
            .iter()
            .map(|(_, l)| l)
            .sum::<f64>()
            / 5.0;
        assert!(last < first, "first {first} last {last}");
    }
}
