//! Depth-error metrics, median scaling, distance-range evaluation, and
//! absolute trajectory error.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::ScalarMap;
use crate::synth::Trajectory;

/// Standard monocular depth error metrics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DepthMetrics {
    pub abs_rel: f64,
    pub sq_rel: f64,
    pub rmse: f64,
    pub rmse_log: f64,
    pub delta1: f64,
    pub delta2: f64,
    pub delta3: f64,
}

impl DepthMetrics {
    /// CSV header matching the benchmark column order.
    pub const CSV_HEADER: &'static str = "abs_rel,sq_rel,rmse_log,rmse,delta1,delta2,delta3";

    /// CSV row in the same column order as [`Self::CSV_HEADER`].
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{}",
            self.abs_rel, self.sq_rel, self.rmse_log, self.rmse, self.delta1, self.delta2, self.delta3
        )
    }
}

/// Evaluation protocol parameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalConfig {
    pub depth_cap: f64,
    pub min_depth: f64,
    pub median_scaling: bool,
    /// Half-open bins `(lo, hi]` by ground-truth depth; must be ordered and
    /// non-overlapping.
    pub range_bins: Vec<(f64, f64)>,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            depth_cap: 80.0,
            min_depth: 1e-3,
            median_scaling: true,
            range_bins: vec![(0.0, 10.0), (10.0, 30.0), (30.0, 80.0)],
        }
    }
}

impl EvalConfig {
    pub fn validate(&self) -> Result<()> {
        let mut prev = f64::NEG_INFINITY;
        for &(lo, hi) in &self.range_bins {
            if lo >= hi || lo < prev {
                return Err(Error::domain("range bins must be ordered and non-overlapping"));
            }
            prev = hi;
        }
        Ok(())
    }
}

fn check_eval_shapes(pred: &ScalarMap, gt: &ScalarMap, valid: &ScalarMap) -> Result<()> {
    if !pred.same_shape(gt) || !pred.same_shape(valid) {
        return Err(Error::shape(format!(
            "pred {}x{}, gt {}x{}, valid {}x{}",
            pred.height(),
            pred.width(),
            gt.height(),
            gt.width(),
            valid.height(),
            valid.width()
        )));
    }
    Ok(())
}

/// Median with the even-count convention of the lower-middle element.
fn median(values: &mut Vec<f64>) -> f64 {
    values.sort_by(|a, b| a.total_cmp(b));
    let n = values.len();
    if n % 2 == 0 {
        values[n / 2 - 1]
    } else {
        values[n / 2]
    }
}

/// Scales `pred` by `median(gt)/median(pred)` over the valid pixels.
pub fn median_scale(pred: &ScalarMap, gt: &ScalarMap, valid: &ScalarMap) -> Result<(ScalarMap, f64)> {
    check_eval_shapes(pred, gt, valid)?;
    let mut pv = Vec::new();
    let mut gv = Vec::new();
    for idx in 0..pred.data().len() {
        if valid.data()[idx] != 0.0 {
            pv.push(pred.data()[idx]);
            gv.push(gt.data()[idx]);
        }
    }
    if pv.is_empty() {
        return Err(Error::domain("median scaling needs at least one valid pixel"));
    }
    let mp = median(&mut pv);
    if mp == 0.0 {
        return Err(Error::domain("median of predicted depth is zero"));
    }
    let s = median(&mut gv) / mp;
    let mut scaled = pred.clone();
    for v in scaled.data_mut() {
        *v *= s;
    }
    Ok((scaled, s))
}

fn metrics_over(pred: &[f64], gt: &[f64]) -> DepthMetrics {
    let n = pred.len() as f64;
    let mut abs_rel = 0.0;
    let mut sq_rel = 0.0;
    let mut sq = 0.0;
    let mut sq_log = 0.0;
    let mut d1 = 0.0;
    let mut d2 = 0.0;
    let mut d3 = 0.0;
    for (&p, &g) in pred.iter().zip(gt) {
        let diff = p - g;
        abs_rel += diff.abs() / g;
        sq_rel += diff * diff / g;
        sq += diff * diff;
        let dl = p.ln() - g.ln();
        sq_log += dl * dl;
        let ratio = (p / g).max(g / p);
        if ratio < 1.25 {
            d1 += 1.0;
        }
        if ratio < 1.25 * 1.25 {
            d2 += 1.0;
        }
        if ratio < 1.25 * 1.25 * 1.25 {
            d3 += 1.0;
        }
    }
    DepthMetrics {
        abs_rel: abs_rel / n,
        sq_rel: sq_rel / n,
        rmse: (sq / n).sqrt(),
        rmse_log: (sq_log / n).sqrt(),
        delta1: d1 / n,
        delta2: d2 / n,
        delta3: d3 / n,
    }
}

/// Gathers valid, in-cap pixel pairs with `pred` pre-scaled and both maps
/// clamped to `[min_depth, depth_cap]`.
fn gather_clamped(
    pred: &ScalarMap,
    gt: &ScalarMap,
    valid: &ScalarMap,
    cfg: &EvalConfig,
    scale: f64,
) -> (Vec<f64>, Vec<f64>) {
    let mut ps = Vec::new();
    let mut gs = Vec::new();
    for idx in 0..pred.data().len() {
        let g = gt.data()[idx];
        if valid.data()[idx] == 0.0 || g <= 0.0 || g > cfg.depth_cap {
            continue;
        }
        ps.push((pred.data()[idx] * scale).clamp(cfg.min_depth, cfg.depth_cap));
        gs.push(g.clamp(cfg.min_depth, cfg.depth_cap));
    }
    (ps, gs)
}

fn shared_scale(pred: &ScalarMap, gt: &ScalarMap, valid: &ScalarMap, cfg: &EvalConfig) -> Result<f64> {
    if !cfg.median_scaling {
        return Ok(1.0);
    }
    // Medians over the capped valid set, before clamping values.
    let mut pv = Vec::new();
    let mut gv = Vec::new();
    for idx in 0..pred.data().len() {
        let g = gt.data()[idx];
        if valid.data()[idx] != 0.0 && g > 0.0 && g <= cfg.depth_cap {
            pv.push(pred.data()[idx]);
            gv.push(g);
        }
    }
    if pv.is_empty() {
        return Err(Error::domain("no valid pixels after depth-cap masking"));
    }
    let mp = median(&mut pv);
    if mp == 0.0 {
        return Err(Error::domain("median of predicted depth is zero"));
    }
    Ok(median(&mut gv) / mp)
}

/// Depth error metrics over valid pixels with ground truth in `(0, cap]`;
/// predictions are clamped (not masked) at the bounds.
pub fn depth_metrics(
    pred: &ScalarMap,
    gt: &ScalarMap,
    valid: &ScalarMap,
    cfg: &EvalConfig,
) -> Result<DepthMetrics> {
    check_eval_shapes(pred, gt, valid)?;
    cfg.validate()?;
    let s = shared_scale(pred, gt, valid, cfg)?;
    let (ps, gs) = gather_clamped(pred, gt, valid, cfg, s);
    if ps.is_empty() {
        return Err(Error::domain("no valid pixels after depth-cap masking"));
    }
    Ok(metrics_over(&ps, &gs))
}

/// Metrics of one ground-truth distance bin.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RangeBinMetrics {
    pub lo: f64,
    pub hi: f64,
    /// Fraction of evaluated pixels whose ground truth falls in `(lo, hi]`.
    pub fraction: f64,
    /// Absent when the bin is empty.
    pub metrics: Option<DepthMetrics>,
}

/// Evaluates each ground-truth distance bin independently, with one shared
/// median scale computed over the full valid set.
pub fn range_filtered_metrics(
    pred: &ScalarMap,
    gt: &ScalarMap,
    valid: &ScalarMap,
    cfg: &EvalConfig,
) -> Result<Vec<RangeBinMetrics>> {
    check_eval_shapes(pred, gt, valid)?;
    cfg.validate()?;
    let s = shared_scale(pred, gt, valid, cfg)?;
    let (ps, gs) = gather_clamped(pred, gt, valid, cfg, 1.0);
    if ps.is_empty() {
        return Err(Error::domain("no valid pixels after depth-cap masking"));
    }
    let total = gs.len() as f64;
    let mut out = Vec::with_capacity(cfg.range_bins.len());
    for &(lo, hi) in &cfg.range_bins {
        let mut bp = Vec::new();
        let mut bg = Vec::new();
        for (&p, &g) in ps.iter().zip(&gs) {
            if g > lo && g <= hi {
                bp.push((p * s).clamp(cfg.min_depth, cfg.depth_cap));
                bg.push(g);
            }
        }
        out.push(RangeBinMetrics {
            lo,
            hi,
            fraction: bg.len() as f64 / total,
            metrics: if bg.is_empty() { None } else { Some(metrics_over(&bp, &bg)) },
        });
    }
    Ok(out)
}

/// Least-squares similarity alignment `y ≈ s·R·x + t` (Umeyama). With
/// `with_scale = false` the scale is fixed to 1.
fn umeyama(src: &[Vector3<f64>], dst: &[Vector3<f64>], with_scale: bool) -> Result<(f64, Matrix3<f64>, Vector3<f64>)> {
    let n = src.len() as f64;
    let mu_src = src.iter().sum::<Vector3<f64>>() / n;
    let mu_dst = dst.iter().sum::<Vector3<f64>>() / n;
    let mut cov = Matrix3::zeros();
    let mut var_src = 0.0;
    for (x, y) in src.iter().zip(dst) {
        let xc = x - mu_src;
        let yc = y - mu_dst;
        cov += yc * xc.transpose();
        var_src += xc.norm_squared();
    }
    cov /= n;
    var_src /= n;
    if var_src < 1e-18 {
        return Err(Error::domain("degenerate alignment: all positions identical"));
    }
    let svd = cov.svd(true, true);
    let u = svd.u.ok_or_else(|| Error::domain("SVD failed"))?;
    let vt = svd.v_t.ok_or_else(|| Error::domain("SVD failed"))?;
    let mut sign = Matrix3::identity();
    if (u * vt).determinant() < 0.0 {
        sign[(2, 2)] = -1.0;
    }
    let rotation = u * sign * vt;
    let scale = if with_scale {
        let d = Vector3::new(svd.singular_values[0], svd.singular_values[1], svd.singular_values[2]);
        let trace_ds = d.x * sign[(0, 0)] + d.y * sign[(1, 1)] + d.z * sign[(2, 2)];
        trace_ds / var_src
    } else {
        1.0
    };
    let t = mu_dst - rotation * (mu_src * scale);
    Ok((scale, rotation, t))
}

/// Absolute trajectory error: RMS translational error of Umeyama-aligned
/// positions over sliding 5-pose snippets, reported as mean ± std across
/// snippets.
pub fn ate(pred: &Trajectory, gt: &Trajectory, align_scale: bool) -> Result<(f64, f64)> {
    if pred.poses.len() != gt.poses.len() {
        return Err(Error::shape(format!(
            "trajectory lengths differ: {} vs {}",
            pred.poses.len(),
            gt.poses.len()
        )));
    }
    if pred.poses.len() < 2 {
        return Err(Error::domain("trajectories need at least 2 poses"));
    }
    let pred_pos: Vec<Vector3<f64>> = pred.poses.iter().map(|p| p.translation).collect();
    let gt_pos: Vec<Vector3<f64>> = gt.poses.iter().map(|p| p.translation).collect();

    let snippet = 5.min(pred_pos.len());
    let mut errors = Vec::new();
    for start in 0..=(pred_pos.len() - snippet) {
        let ps = &pred_pos[start..start + snippet];
        let gs = &gt_pos[start..start + snippet];
        let (s, r, t) = umeyama(ps, gs, align_scale)?;
        let mut acc = 0.0;
        for (p, g) in ps.iter().zip(gs) {
            let aligned = r * (p * s) + t;
            acc += (aligned - g).norm_squared();
        }
        errors.push((acc / snippet as f64).sqrt());
    }
    let n = errors.len() as f64;
    let mean = errors.iter().sum::<f64>() / n;
    let var = errors.iter().map(|e| (e - mean) * (e - mean)).sum::<f64>() / n;
    Ok((mean, var.sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{compose, pose_from_axis_angle, Pose};
    use crate::synth::{TrajectoryKind, TrajectorySpec};
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn full_valid(h: usize, w: usize) -> ScalarMap {
        ScalarMap::constant(h, w, 1.0)
    }

    fn no_scaling() -> EvalConfig {
        EvalConfig { median_scaling: false, ..Default::default() }
    }

    #[test]
    fn identical_maps_give_perfect_metrics() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let gt = ScalarMap::from_fn(4, 5, |_, _| rng.gen_range(1.0..60.0));
        let m = depth_metrics(&gt, &gt, &full_valid(4, 5), &EvalConfig::default()).unwrap();
        assert_eq!(m.abs_rel, 0.0);
        assert_eq!(m.sq_rel, 0.0);
        assert_eq!(m.rmse, 0.0);
        assert_eq!(m.rmse_log, 0.0);
        assert_eq!((m.delta1, m.delta2, m.delta3), (1.0, 1.0, 1.0));
    }

    #[test]
    fn delta_boundary_at_exact_ratio() {
        // pred = 1.25·gt with dyadic-friendly values keeps the ratio exact.
        let gt = ScalarMap::new(2, 2, vec![2.0, 4.0, 8.0, 16.0]).unwrap();
        let pred = ScalarMap::new(2, 2, vec![2.5, 5.0, 10.0, 20.0]).unwrap();
        let m = depth_metrics(&pred, &gt, &full_valid(2, 2), &no_scaling()).unwrap();
        assert_eq!(m.delta1, 0.0);
        assert_eq!(m.delta2, 1.0);
        assert_eq!(m.delta3, 1.0);
    }

    #[test]
    fn crafted_three_pixel_instance_matches_hand_oracle() {
        // gt = [2, 5, 10], pred = [2.5, 4, 12]:
        //   abs_rel  = (0.5/2 + 1/5 + 2/10)/3            = 0.21666...
        //   sq_rel   = (0.125 + 0.2 + 0.4)/3             = 0.2416666...
        //   rmse     = sqrt((0.25 + 1 + 4)/3)            = sqrt(1.75)
        //   rmse_log = sqrt((ln1.25² + ln0.8² + ln1.2²)/3)
        //   deltas: ratios 1.25, 1.25, 1.2 → d1 = 1/3, d2 = d3 = 1.
        let gt = ScalarMap::new(1, 3, vec![2.0, 5.0, 10.0]).unwrap();
        let pred = ScalarMap::new(1, 3, vec![2.5, 4.0, 12.0]).unwrap();
        let m = depth_metrics(&pred, &gt, &full_valid(1, 3), &no_scaling()).unwrap();
        assert!((m.abs_rel - (0.25 + 0.2 + 0.2) / 3.0).abs() < 1e-12);
        assert!((m.sq_rel - (0.125 + 0.2 + 0.4) / 3.0).abs() < 1e-12);
        assert!((m.rmse - (1.75f64).sqrt()).abs() < 1e-12);
        let want_log = (((1.25f64.ln()).powi(2) + (0.8f64.ln()).powi(2) + (1.2f64.ln()).powi(2)) / 3.0).sqrt();
        assert!((m.rmse_log - want_log).abs() < 1e-12);
        assert!((m.delta1 - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(m.delta2, 1.0);
        assert_eq!(m.delta3, 1.0);
    }

    #[test]
    fn median_scale_identity_and_exact_cancellation() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let gt = ScalarMap::from_fn(3, 4, |_, _| rng.gen_range(1.0..50.0));
        let (scaled, s) = median_scale(&gt, &gt, &full_valid(3, 4)).unwrap();
        assert_eq!(s, 1.0);
        assert_eq!(scaled.data(), gt.data());

        // pred = gt/1.3 built so division and re-multiplication are exact:
        // gt = 1.3·2^j, pred = 2^j.
        let pred = ScalarMap::new(2, 2, vec![2.0, 4.0, 8.0, 16.0]).unwrap();
        let gt = ScalarMap::new(
            2,
            2,
            vec![1.3 * 2.0, 1.3 * 4.0, 1.3 * 8.0, 1.3 * 16.0],
        )
        .unwrap();
        let (scaled, s) = median_scale(&pred, &gt, &full_valid(2, 2)).unwrap();
        assert_eq!(s, 1.3);
        assert_eq!(scaled.data(), gt.data());
    }

    #[test]
    fn median_uses_lower_middle_for_even_counts() {
        // Values [5, 1, 9, 3]: sorted [1, 3, 5, 9], lower-middle = 3.
        let pred = ScalarMap::new(2, 2, vec![5.0, 1.0, 9.0, 3.0]).unwrap();
        let gt = ScalarMap::constant(2, 2, 6.0);
        let (_, s) = median_scale(&pred, &gt, &full_valid(2, 2)).unwrap();
        assert_eq!(s, 2.0);
    }

    #[test]
    fn median_scale_rejects_empty_valid_set() {
        let pred = ScalarMap::constant(2, 2, 1.0);
        let gt = ScalarMap::constant(2, 2, 1.0);
        let valid = ScalarMap::zeros(2, 2);
        assert!(median_scale(&pred, &gt, &valid).is_err());
    }

    #[test]
    fn metrics_invariant_under_global_scale_with_median_scaling() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let gt = ScalarMap::from_fn(4, 4, |_, _| rng.gen_range(1.0..70.0));
        // Dyadic multiple keeps the cancellation exact.
        let mut pred = gt.clone();
        for v in pred.data_mut() {
            *v *= 4.0;
        }
        let m = depth_metrics(&pred, &gt, &full_valid(4, 4), &EvalConfig::default()).unwrap();
        assert_eq!(m.abs_rel, 0.0);
        assert_eq!((m.delta1, m.delta2, m.delta3), (1.0, 1.0, 1.0));
    }

    #[test]
    fn gt_outside_cap_is_masked_pred_is_clamped() {
        let gt = ScalarMap::new(1, 3, vec![5.0, 90.0, 10.0]).unwrap();
        let pred = ScalarMap::new(1, 3, vec![5.0, 90.0, 200.0]).unwrap();
        let m = depth_metrics(&pred, &gt, &full_valid(1, 3), &no_scaling()).unwrap();
        // Pixel with gt = 90 > 80 is dropped; pred 200 clamps to 80 vs gt 10.
        assert!((m.abs_rel - ((0.0 + 7.0) / 2.0)).abs() < 1e-12);
    }

    #[test]
    fn empty_valid_set_is_an_error() {
        let gt = ScalarMap::constant(2, 2, 100.0);
        let pred = ScalarMap::constant(2, 2, 50.0);
        assert!(depth_metrics(&pred, &gt, &full_valid(2, 2), &no_scaling()).is_err());
    }

    #[test]
    fn range_bins_populate_by_gt_depth() {
        let gt = ScalarMap::constant(2, 2, 5.0);
        let pred = ScalarMap::constant(2, 2, 5.0);
        let bins = range_filtered_metrics(&pred, &gt, &full_valid(2, 2), &EvalConfig::default()).unwrap();
        assert_eq!(bins.len(), 3);
        assert_eq!(bins[0].fraction, 1.0);
        assert!(bins[0].metrics.is_some());
        assert_eq!(bins[1].fraction, 0.0);
        assert!(bins[1].metrics.is_none());
        assert_eq!(bins[2].fraction, 0.0);
    }

    #[test]
    fn range_bin_fractions_match_uniform_sampling() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let n = 40 * 50;
        let gt = ScalarMap::from_fn(40, 50, |_, _| rng.gen_range(1e-6..80.0));
        let pred = gt.clone();
        let bins = range_filtered_metrics(&pred, &gt, &full_valid(40, 50), &EvalConfig::default()).unwrap();
        for b in &bins {
            let width_fraction = (b.hi - b.lo) / 80.0;
            // 3σ binomial tolerance.
            let sigma = (width_fraction * (1.0 - width_fraction) / n as f64).sqrt();
            assert!(
                (b.fraction - width_fraction).abs() < 3.0 * sigma + 1e-9,
                "bin ({}, {}]: fraction {} vs expected {width_fraction}",
                b.lo,
                b.hi,
                b.fraction
            );
            let m = b.metrics.as_ref().unwrap();
            assert_eq!(m.abs_rel, 0.0);
            assert_eq!(m.delta1, 1.0);
        }
    }

    fn curved_trajectory(n: usize) -> Trajectory {
        TrajectorySpec {
            kind: TrajectoryKind::ConstantTurn { velocity: [0.1, 0.02, 0.6], yaw_rate: 0.15 },
            steps: n,
        }
        .generate()
        .unwrap()
    }

    #[test]
    fn ate_zero_for_identical_trajectories() {
        let traj = curved_trajectory(12);
        // SVD round-off leaves ~1e-14; the contract tolerance is 1e-9.
        let (mean, std) = ate(&traj, &traj, false).unwrap();
        assert!(mean < 1e-12, "mean {mean}");
        assert!(std < 1e-12);
    }

    #[test]
    fn ate_invariant_under_rigid_transform() {
        let gt = curved_trajectory(12);
        let rigid = pose_from_axis_angle(
            Vector3::new(0.4, -0.7, 0.2),
            Vector3::new(3.0, -1.0, 2.5),
        )
        .unwrap();
        let pred = Trajectory {
            poses: gt.poses.iter().map(|p| compose(&rigid, p)).collect(),
        };
        let (mean, std) = ate(&pred, &gt, false).unwrap();
        assert!(mean < 1e-9, "mean {mean}");
        assert!(std < 1e-9);
    }

    #[test]
    fn ate_scale_alignment_semantics() {
        let gt = curved_trajectory(10);
        let pred = Trajectory {
            poses: gt
                .poses
                .iter()
                .map(|p| Pose { rotation: p.rotation, translation: p.translation * 2.0 })
                .collect(),
        };
        let (mean, _) = ate(&pred, &gt, true).unwrap();
        assert!(mean < 1e-9, "scaled alignment should cancel, got {mean}");
        let (mean, _) = ate(&pred, &gt, false).unwrap();
        assert!(mean > 1e-3, "without scale alignment the error must remain, got {mean}");
    }

    #[test]
    fn ate_rejects_degenerate_and_mismatched_input() {
        let gt = curved_trajectory(8);
        let shorter = Trajectory { poses: gt.poses[..6].to_vec() };
        assert!(ate(&shorter, &gt, false).is_err());
        let stuck = Trajectory { poses: vec![Pose::identity(); 8] };
        assert!(ate(&stuck, &gt, false).is_err());
    }

    proptest! {
        #[test]
        fn prop_metrics_permutation_invariant(seed in 0u64..200) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let n = 24usize;
            let gt_vals: Vec<f64> = (0..n).map(|_| rng.gen_range(0.5..79.0)).collect();
            let pred_vals: Vec<f64> = gt_vals.iter().map(|g| g * rng.gen_range(0.7..1.4)).collect();
            let mut perm: Vec<usize> = (0..n).collect();
            for i in (1..n).rev() {
                let j = rng.gen_range(0..=i);
                perm.swap(i, j);
            }
            let gt = ScalarMap::new(4, 6, gt_vals.clone()).unwrap();
            let pred = ScalarMap::new(4, 6, pred_vals.clone()).unwrap();
            let gt_p = ScalarMap::new(4, 6, perm.iter().map(|&i| gt_vals[i]).collect()).unwrap();
            let pred_p = ScalarMap::new(4, 6, perm.iter().map(|&i| pred_vals[i]).collect()).unwrap();
            let cfg = EvalConfig::default();
            let a = depth_metrics(&pred, &gt, &full_valid(4, 6), &cfg).unwrap();
            let b = depth_metrics(&pred_p, &gt_p, &full_valid(4, 6), &cfg).unwrap();
            prop_assert!((a.abs_rel - b.abs_rel).abs() < 1e-12);
            prop_assert!((a.rmse - b.rmse).abs() < 1e-12);
            prop_assert!((a.delta1 - b.delta1).abs() < 1e-12);
        }

        #[test]
        fn prop_deltas_are_monotone(seed in 0u64..200) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let gt = ScalarMap::from_fn(3, 5, |_, _| rng.gen_range(0.5..79.0));
            let pred = ScalarMap::from_fn(3, 5, |_, _| rng.gen_range(0.5..79.0));
            let m = depth_metrics(&pred, &gt, &full_valid(3, 5), &EvalConfig::default()).unwrap();
            prop_assert!(m.delta1 <= m.delta2 && m.delta2 <= m.delta3);
            prop_assert!(m.abs_rel >= 0.0 && m.rmse >= 0.0);
        }
    }
}
