//! Differentiation plumbing: named flat parameter vectors, the Adam
//! optimizer, and a central finite-difference gradient checker.

mod pipeline;
mod tam_train;

pub use pipeline::{optimize_depth_pose, LossRecord, RecoveryConfig, RecoveryResult, SynthesisProblem};
pub use pipeline::write_loss_csv;
pub use tam_train::{
    generate_forecast_dataset, init_tam_with_head, train_tam_toy, ForecastDataset,
    ForecastSample, TamTrainConfig, TamTrainResult,
};

use std::fmt::Write as _;

use crate::error::{Error, Result};

/// Flat fp64 parameter array with named, shaped segments.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamVector {
    segments: Vec<Segment>,
    data: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
struct Segment {
    name: String,
    shape: Vec<usize>,
    offset: usize,
    len: usize,
}

impl ParamVector {
    pub fn new() -> Self {
        ParamVector { segments: Vec::new(), data: Vec::new() }
    }

    /// Appends a named segment; returns an error on duplicate names or
    /// non-finite values.
    pub fn push_segment(&mut self, name: &str, shape: &[usize], values: Vec<f64>) -> Result<()> {
        let len: usize = shape.iter().product();
        if len != values.len() {
            return Err(Error::shape(format!(
                "segment '{name}': shape {shape:?} implies {len} values, got {}",
                values.len()
            )));
        }
        if self.segments.iter().any(|s| s.name == name) {
            return Err(Error::domain(format!("duplicate segment name '{name}'")));
        }
        if !values.iter().all(|v| v.is_finite()) {
            return Err(Error::domain(format!("segment '{name}' contains non-finite values")));
        }
        self.segments.push(Segment {
            name: name.to_string(),
            shape: shape.to_vec(),
            offset: self.data.len(),
            len,
        });
        self.data.extend_from_slice(&values);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn segment(&self, name: &str) -> Option<&[f64]> {
        self.segments
            .iter()
            .find(|s| s.name == name)
            .map(|s| &self.data[s.offset..s.offset + s.len])
    }

    pub fn segment_mut(&mut self, name: &str) -> Option<&mut [f64]> {
        let seg = self.segments.iter().find(|s| s.name == name)?;
        let (offset, len) = (seg.offset, seg.len);
        Some(&mut self.data[offset..offset + len])
    }

    pub fn segment_shape(&self, name: &str) -> Option<&[usize]> {
        self.segments.iter().find(|s| s.name == name).map(|s| s.shape.as_slice())
    }

    pub fn segment_names(&self) -> impl Iterator<Item = &str> {
        self.segments.iter().map(|s| s.name.as_str())
    }

    /// Name of the segment containing flat index `idx`, with the offset
    /// inside that segment.
    pub fn locate(&self, idx: usize) -> Option<(&str, usize)> {
        self.segments
            .iter()
            .find(|s| idx >= s.offset && idx < s.offset + s.len)
            .map(|s| (s.name.as_str(), idx - s.offset))
    }

    pub fn same_layout(&self, other: &ParamVector) -> bool {
        self.segments == other.segments
    }

    pub fn zeros_like(&self) -> ParamVector {
        ParamVector { segments: self.segments.clone(), data: vec![0.0; self.data.len()] }
    }
}

impl Default for ParamVector {
    fn default() -> Self {
        Self::new()
    }
}

/// Adam hyperparameters; the single decay drops the rate to `decay_lr` once
/// `decay_at_step` is reached.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub decay_at_step: Option<u64>,
    pub decay_lr: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            lr: 1e-4,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            decay_at_step: None,
            decay_lr: 1e-5,
        }
    }
}

/// Optimizer state threaded through [`adam_step`].
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub step: u64,
    pub first_moment: Vec<f64>,
    pub second_moment: Vec<f64>,
    pub config: AdamConfig,
}

impl AdamState {
    pub fn new(param_len: usize, config: AdamConfig) -> Self {
        AdamState {
            step: 0,
            first_moment: vec![0.0; param_len],
            second_moment: vec![0.0; param_len],
            config,
        }
    }

    /// Learning rate that will be applied at step `t` (1-based).
    pub fn lr_at(&self, t: u64) -> f64 {
        match self.config.decay_at_step {
            Some(at) if t >= at => self.config.decay_lr,
            _ => self.config.lr,
        }
    }
}

/// One bias-corrected Adam update. Deterministic; errors on non-finite
/// gradients, naming the offending segment.
pub fn adam_step(
    params: &ParamVector,
    grads: &ParamVector,
    state: &AdamState,
) -> Result<(ParamVector, AdamState)> {
    if params.len() != grads.len() || params.len() != state.first_moment.len() {
        return Err(Error::shape(format!(
            "params ({}), grads ({}), and state ({}) lengths must agree",
            params.len(),
            grads.len(),
            state.first_moment.len()
        )));
    }
    if let Some(idx) = grads.data().iter().position(|g| !g.is_finite()) {
        let segment = grads
            .locate(idx)
            .map(|(name, off)| format!("{name}[{off}]"))
            .unwrap_or_else(|| format!("<index {idx}>"));
        return Err(Error::NonFiniteGradient { segment });
    }

    let mut next = params.clone();
    let mut st = state.clone();
    st.step += 1;
    let t = st.step;
    let lr = st.lr_at(t);
    let c = st.config;
    let bias1 = 1.0 - c.beta1.powi(t as i32);
    let bias2 = 1.0 - c.beta2.powi(t as i32);
    for i in 0..params.len() {
        let g = grads.data()[i];
        st.first_moment[i] = c.beta1 * st.first_moment[i] + (1.0 - c.beta1) * g;
        st.second_moment[i] = c.beta2 * st.second_moment[i] + (1.0 - c.beta2) * g * g;
        let m_hat = st.first_moment[i] / bias1;
        let v_hat = st.second_moment[i] / bias2;
        next.data_mut()[i] -= lr * m_hat / (v_hat.sqrt() + c.eps);
    }
    Ok((next, st))
}

/// Settings for [`finite_diff_check`].
#[derive(Debug, Clone, Copy)]
pub struct FdCheckConfig {
    pub step: f64,
    pub rel_tol: f64,
    /// Denominator floor: coordinates where both gradients are below this in
    /// magnitude compare against the floor instead of the tiny value.
    pub abs_floor: f64,
}

impl Default for FdCheckConfig {
    fn default() -> Self {
        FdCheckConfig { step: 1e-5, rel_tol: 1e-4, abs_floor: 1e-6 }
    }
}

/// One coordinate that exceeded the tolerance.
#[derive(Debug, Clone)]
pub struct FdFailure {
    pub segment: String,
    pub index: usize,
    pub analytic: f64,
    pub numeric: f64,
    pub rel_err: f64,
}

/// Outcome of a finite-difference comparison.
#[derive(Debug, Clone)]
pub struct FdReport {
    pub checked: usize,
    pub max_rel_err: f64,
    pub failures: Vec<FdFailure>,
}

impl FdReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn summary(&self) -> String {
        let mut s = format!(
            "checked {} coordinates, max relative error {:.3e}",
            self.checked, self.max_rel_err
        );
        if !self.failures.is_empty() {
            let _ = write!(
                s,
                "; {} failures, worst at {}[{}] (analytic {:.6e}, numeric {:.6e})",
                self.failures.len(),
                self.failures[0].segment,
                self.failures[0].index,
                self.failures[0].analytic,
                self.failures[0].numeric
            );
        }
        s
    }
}

/// Central finite differences per coordinate against an analytic gradient.
pub fn finite_diff_check(
    f: impl Fn(&ParamVector) -> Result<f64>,
    analytic: &ParamVector,
    point: &ParamVector,
    cfg: &FdCheckConfig,
) -> Result<FdReport> {
    if !analytic.same_layout(point) {
        return Err(Error::shape("analytic gradient and point layouts differ".to_string()));
    }
    let mut max_rel = 0.0f64;
    let mut failures = Vec::new();
    let mut probe = point.clone();
    for idx in 0..point.len() {
        let orig = point.data()[idx];
        probe.data_mut()[idx] = orig + cfg.step;
        let plus = f(&probe)?;
        probe.data_mut()[idx] = orig - cfg.step;
        let minus = f(&probe)?;
        probe.data_mut()[idx] = orig;
        if !(plus.is_finite() && minus.is_finite()) {
            return Err(Error::domain(format!(
                "objective is not finite at probe index {idx}"
            )));
        }
        let numeric = (plus - minus) / (2.0 * cfg.step);
        let a = analytic.data()[idx];
        let rel = (a - numeric).abs() / numeric.abs().max(cfg.abs_floor);
        max_rel = max_rel.max(rel);
        if rel > cfg.rel_tol {
            let (segment, index) = point
                .locate(idx)
                .map(|(n, o)| (n.to_string(), o))
                .unwrap_or((format!("<index {idx}>"), 0));
            failures.push(FdFailure { segment, index, analytic: a, numeric, rel_err: rel });
        }
    }
    failures.sort_by(|a, b| b.rel_err.total_cmp(&a.rel_err));
    Ok(FdReport { checked: point.len(), max_rel_err: max_rel, failures })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single(name: &str, values: Vec<f64>) -> ParamVector {
        let mut p = ParamVector::new();
        let n = values.len();
        p.push_segment(name, &[n], values).unwrap();
        p
    }

    #[test]
    fn segments_are_addressable() {
        let mut p = ParamVector::new();
        p.push_segment("a", &[2, 2], vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        p.push_segment("b", &[3], vec![5.0, 6.0, 7.0]).unwrap();
        assert_eq!(p.len(), 7);
        assert_eq!(p.segment("b").unwrap(), &[5.0, 6.0, 7.0]);
        assert_eq!(p.segment_shape("a").unwrap(), &[2, 2]);
        assert_eq!(p.locate(5).unwrap(), ("b", 1));
        assert!(p.push_segment("a", &[1], vec![0.0]).is_err());
        assert!(p.push_segment("c", &[2], vec![f64::NAN, 0.0]).is_err());
    }

    #[test]
    fn adam_zero_gradient_is_identity() {
        let params = single("x", vec![1.0, -2.0]);
        let grads = params.zeros_like();
        let state = AdamState::new(2, AdamConfig::default());
        let (next, st) = adam_step(&params, &grads, &state).unwrap();
        assert_eq!(next.data(), params.data());
        assert_eq!(st.step, 1);
    }

    #[test]
    fn adam_first_step_is_signed_lr() {
        // Bias correction makes m̂/√v̂ = sign(g) on the first step for |g| ≫ eps.
        let params = single("x", vec![0.0, 0.0]);
        let grads = single("x", vec![3.0, -0.7]);
        let cfg = AdamConfig { lr: 1e-2, ..Default::default() };
        let state = AdamState::new(2, cfg);
        let (next, _) = adam_step(&params, &grads, &state).unwrap();
        assert!((next.data()[0] - (-1e-2)).abs() < 1e-2 * 1e-6);
        assert!((next.data()[1] - 1e-2).abs() < 1e-2 * 1e-6);
    }

    #[test]
    fn adam_converges_on_quadratic() {
        // Values frozen from running the loop (cross-checked against a
        // reference Adam implementation): err 0.01934 at step 100, 5.3e-5 at
        // step 200.
        let mut params = single("x", vec![0.0]);
        let cfg = AdamConfig { lr: 0.1, ..Default::default() };
        let mut state = AdamState::new(1, cfg);
        for step in 1..=200 {
            let x = params.data()[0];
            let grads = single("x", vec![2.0 * (x - 3.0)]);
            let (p, s) = adam_step(&params, &grads, &state).unwrap();
            params = p;
            state = s;
            if step == 100 {
                let err = (params.data()[0] - 3.0).abs();
                assert!((err - 0.019344).abs() < 1e-5, "err at 100 = {err}");
            }
        }
        assert!((params.data()[0] - 3.0).abs() < 1e-3, "x = {}", params.data()[0]);
    }

    #[test]
    fn adam_is_deterministic() {
        let run = || {
            let mut params = single("x", vec![0.3, -0.4]);
            let mut state = AdamState::new(2, AdamConfig { lr: 0.05, ..Default::default() });
            for t in 0..50 {
                let g: Vec<f64> = params.data().iter().map(|x| x.sin() + t as f64 * 1e-3).collect();
                let grads = single("x", g);
                let (p, s) = adam_step(&params, &grads, &state).unwrap();
                params = p;
                state = s;
            }
            params.data().to_vec()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn adam_rejects_nonfinite_gradient_naming_segment() {
        let mut params = ParamVector::new();
        params.push_segment("pose_0", &[6], vec![0.0; 6]).unwrap();
        params.push_segment("disparity", &[4], vec![0.0; 4]).unwrap();
        let mut grads = params.zeros_like();
        grads.segment_mut("disparity").unwrap()[2] = f64::INFINITY;
        let state = AdamState::new(10, AdamConfig::default());
        let err = adam_step(&params, &grads, &state).unwrap_err();
        assert!(format!("{err}").contains("disparity[2]"), "{err}");
    }

    #[test]
    fn adam_decay_schedule_applies() {
        let cfg = AdamConfig { lr: 1e-2, decay_at_step: Some(3), decay_lr: 1e-3, ..Default::default() };
        let state = AdamState::new(1, cfg);
        assert_eq!(state.lr_at(1), 1e-2);
        assert_eq!(state.lr_at(2), 1e-2);
        assert_eq!(state.lr_at(3), 1e-3);
        assert_eq!(state.lr_at(100), 1e-3);
    }

    #[test]
    fn fd_check_passes_on_quadratic() {
        let point = single("x", vec![3.0]);
        let analytic = single("x", vec![6.0]);
        let report = finite_diff_check(
            |p| Ok(p.data()[0] * p.data()[0]),
            &analytic,
            &point,
            &FdCheckConfig::default(),
        )
        .unwrap();
        assert!(report.passed(), "{}", report.summary());
    }

    #[test]
    fn fd_check_catches_doubled_gradient() {
        let point = single("x", vec![3.0]);
        let analytic = single("x", vec![12.0]);
        let report = finite_diff_check(
            |p| Ok(p.data()[0] * p.data()[0]),
            &analytic,
            &point,
            &FdCheckConfig::default(),
        )
        .unwrap();
        assert!(!report.passed());
        assert!((report.max_rel_err - 1.0).abs() < 1e-3, "max rel {}", report.max_rel_err);
        assert_eq!(report.failures[0].segment, "x");
    }
}
