//! Photometric (L1 + SSIM), edge-aware smoothness, auto-masking, and the
//! multi-scale total objective, each paired with its adjoint.
//!
//! All reductions over pixels run sequentially in row-major order so scalar
//! results are bit-reproducible.

use crate::error::{Error, Result};
use crate::geometry::{disparity_to_depth, DepthRange, Intrinsics, Pose};
use crate::image::{image_gradients, resize_scalar, resize_scalar_adjoint, scalar_gradients, ImageBuffer, ScalarMap};
use crate::warp::{reverse_warp, warp_jacobians, WarpResult};

/// Weights and shape of the training objective.
#[derive(Debug, Clone)]
pub struct LossConfig {
    /// L1 weight in the photometric mix `(1−α)·SSIM + α·L1`.
    pub alpha: f64,
    /// Smoothness weight.
    pub alpha_d: f64,
    /// Number of pyramid levels.
    pub scales: usize,
    /// SSIM stabilizers.
    pub ssim_c1: f64,
    pub ssim_c2: f64,
    /// Keep only pixels whose warped loss beats the unwarped source.
    pub automask_enabled: bool,
    /// Aggregate per-pixel losses across context frames by minimum instead of
    /// the default arithmetic mean.
    pub min_reprojection: bool,
}

impl Default for LossConfig {
    fn default() -> Self {
        LossConfig {
            alpha: 0.15,
            alpha_d: 0.001,
            scales: 4,
            ssim_c1: 0.01 * 0.01,
            ssim_c2: 0.03 * 0.03,
            automask_enabled: true,
            min_reprojection: false,
        }
    }
}

impl LossConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::domain(format!("alpha must be in [0,1], got {}", self.alpha)));
        }
        if self.alpha_d < 0.0 {
            return Err(Error::domain(format!("alpha_d must be >= 0, got {}", self.alpha_d)));
        }
        if self.scales < 1 {
            return Err(Error::domain("scales must be >= 1"));
        }
        Ok(())
    }
}

/// Scalar terms plus the finest-scale per-pixel maps of one evaluation.
#[derive(Debug, Clone)]
pub struct LossBreakdown {
    /// `photometric + alpha_d · smoothness`, summed over scales.
    pub total: f64,
    /// Masked, pixel-averaged photometric term summed over scales.
    pub photometric: f64,
    /// Smoothness term summed over scales.
    pub smoothness: f64,
    /// Masked per-pixel photometric error at the finest scale.
    pub per_pixel_pe: ScalarMap,
    /// Auto-mask at the finest scale (all ones when masking is disabled).
    pub mask: ScalarMap,
}

fn check_same_shape(a: &ImageBuffer, b: &ImageBuffer) -> Result<()> {
    if !a.same_shape(b) {
        return Err(Error::shape(format!(
            "{}x{}x{} vs {}x{}x{}",
            a.height(),
            a.width(),
            a.channels(),
            b.height(),
            b.width(),
            b.channels()
        )));
    }
    Ok(())
}

/// Per-pixel channel-mean absolute difference, zeroed outside the valid mask.
pub fn l1_photo(target: &ImageBuffer, recon: &WarpResult) -> Result<ScalarMap> {
    check_same_shape(target, &recon.image)?;
    let (h, w, c) = (target.height(), target.width(), target.channels());
    let mut out = ScalarMap::zeros(h, w);
    for i in 0..h {
        for j in 0..w {
            if recon.valid_mask.get(i, j) == 0.0 {
                continue;
            }
            let mut acc = 0.0;
            for ch in 0..c {
                acc += (target.get(i, j, ch) - recon.image.get(i, j, ch)).abs();
            }
            out.set(i, j, acc / c as f64);
        }
    }
    Ok(out)
}

/// Window statistics for the uniform 3×3 SSIM window, with valid-region
/// normalization at borders (no reflection).
struct WindowStats {
    mu_x: f64,
    mu_y: f64,
    var_x: f64,
    var_y: f64,
    cov: f64,
    n: f64,
}

fn window_stats(x: &ImageBuffer, y: &ImageBuffer, i: usize, j: usize, ch: usize) -> WindowStats {
    let (h, w) = (x.height(), x.width());
    let i_lo = i.saturating_sub(1);
    let i_hi = (i + 1).min(h - 1);
    let j_lo = j.saturating_sub(1);
    let j_hi = (j + 1).min(w - 1);
    let mut sx = 0.0;
    let mut sy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    let mut sxy = 0.0;
    let mut n = 0.0;
    for a in i_lo..=i_hi {
        for b in j_lo..=j_hi {
            let xv = x.get(a, b, ch);
            let yv = y.get(a, b, ch);
            sx += xv;
            sy += yv;
            sxx += xv * xv;
            syy += yv * yv;
            sxy += xv * yv;
            n += 1.0;
        }
    }
    let mu_x = sx / n;
    let mu_y = sy / n;
    WindowStats {
        mu_x,
        mu_y,
        var_x: sxx / n - mu_x * mu_x,
        var_y: syy / n - mu_y * mu_y,
        cov: sxy / n - mu_x * mu_y,
        n,
    }
}

fn ssim_value(s: &WindowStats, c1: f64, c2: f64) -> f64 {
    let n1 = 2.0 * s.mu_x * s.mu_y + c1;
    let d1 = s.mu_x * s.mu_x + s.mu_y * s.mu_y + c1;
    let n2 = 2.0 * s.cov + c2;
    let d2 = s.var_x + s.var_y + c2;
    (n1 * n2) / (d1 * d2)
}

/// Per-pixel SSIM dissimilarity `(1 − SSIM)/2`, clamped to `[0,1]`.
///
/// SSIM uses a uniform 3×3 window per channel (channel-averaged afterwards).
pub fn ssim_dissim(target: &ImageBuffer, recon: &ImageBuffer) -> Result<ScalarMap> {
    ssim_dissim_with(target, recon, 0.01 * 0.01, 0.03 * 0.03)
}

/// [`ssim_dissim`] with explicit stabilizer constants.
pub fn ssim_dissim_with(target: &ImageBuffer, recon: &ImageBuffer, c1: f64, c2: f64) -> Result<ScalarMap> {
    check_same_shape(target, recon)?;
    let (h, w, c) = (target.height(), target.width(), target.channels());
    let inv_c = 1.0 / c as f64;
    let mut out = ScalarMap::zeros(h, w);
    for i in 0..h {
        for j in 0..w {
            let mut acc = 0.0;
            for ch in 0..c {
                acc += ssim_value(&window_stats(target, recon, i, j, ch), c1, c2);
            }
            out.set(i, j, ((1.0 - acc * inv_c) * 0.5).clamp(0.0, 1.0));
        }
    }
    Ok(out)
}

/// Adjoint of [`ssim_dissim_with`] w.r.t. `recon`: given per-pixel upstream
/// weights, returns the gradient image (length `h·w·c`).
pub fn ssim_backward(
    target: &ImageBuffer,
    recon: &ImageBuffer,
    upstream: &ScalarMap,
    c1: f64,
    c2: f64,
) -> Result<Vec<f64>> {
    check_same_shape(target, recon)?;
    let (h, w, c) = (target.height(), target.width(), target.channels());
    let inv_c = 1.0 / c as f64;
    let mut grad = vec![0.0; h * w * c];
    for i in 0..h {
        for j in 0..w {
            let up = upstream.get(i, j);
            if up == 0.0 {
                continue;
            }
            // Recompute the dissimilarity to detect clamp saturation.
            let mut acc = 0.0;
            for ch in 0..c {
                acc += ssim_value(&window_stats(target, recon, i, j, ch), c1, c2);
            }
            let dissim = (1.0 - acc * inv_c) * 0.5;
            if dissim <= 0.0 || dissim >= 1.0 {
                continue;
            }
            let scale = up * (-0.5 * inv_c);
            let i_lo = i.saturating_sub(1);
            let i_hi = (i + 1).min(h - 1);
            let j_lo = j.saturating_sub(1);
            let j_hi = (j + 1).min(w - 1);
            for ch in 0..c {
                let s = window_stats(target, recon, i, j, ch);
                let n1 = 2.0 * s.mu_x * s.mu_y + c1;
                let d1 = s.mu_x * s.mu_x + s.mu_y * s.mu_y + c1;
                let n2 = 2.0 * s.cov + c2;
                let d2 = s.var_x + s.var_y + c2;
                let val = (n1 * n2) / (d1 * d2);
                let ds_dmu = (2.0 * s.mu_x * n2) / (d1 * d2) - val * 2.0 * s.mu_y / d1;
                let ds_dvar = -(n1 * n2) / (d1 * d2 * d2);
                let ds_dcov = 2.0 * n1 / (d1 * d2);
                let inv_n = 1.0 / s.n;
                for a in i_lo..=i_hi {
                    for b in j_lo..=j_hi {
                        let xv = target.get(a, b, ch);
                        let yv = recon.get(a, b, ch);
                        let d = ds_dmu * inv_n
                            + ds_dvar * 2.0 * (yv - s.mu_y) * inv_n
                            + ds_dcov * (xv - s.mu_x) * inv_n;
                        grad[(a * w + b) * c + ch] += scale * d;
                    }
                }
            }
        }
    }
    Ok(grad)
}

/// Raw `(1−α)·SSIM-dissim + α·L1` map with no mask applied.
fn combined_pe(target: &ImageBuffer, recon_img: &ImageBuffer, cfg: &LossConfig) -> Result<ScalarMap> {
    let (h, w, c) = (target.height(), target.width(), target.channels());
    let ssim = ssim_dissim_with(target, recon_img, cfg.ssim_c1, cfg.ssim_c2)?;
    let mut out = ScalarMap::zeros(h, w);
    for i in 0..h {
        for j in 0..w {
            let mut l1 = 0.0;
            for ch in 0..c {
                l1 += (target.get(i, j, ch) - recon_img.get(i, j, ch)).abs();
            }
            out.set(i, j, (1.0 - cfg.alpha) * ssim.get(i, j) + cfg.alpha * (l1 / c as f64));
        }
    }
    Ok(out)
}

/// Per-pixel photometric error `(1−α)·SSIM-dissim + α·L1`, zeroed outside the
/// valid mask.
pub fn photometric(target: &ImageBuffer, recon: &WarpResult, cfg: &LossConfig) -> Result<ScalarMap> {
    check_same_shape(target, &recon.image)?;
    let mut pe = combined_pe(target, &recon.image, cfg)?;
    for (v, &m) in pe.data_mut().iter_mut().zip(recon.valid_mask.data()) {
        if m == 0.0 {
            *v = 0.0;
        }
    }
    Ok(pe)
}

/// Adjoint of [`photometric`] w.r.t. the reconstruction image.
pub fn photometric_backward(
    target: &ImageBuffer,
    recon: &WarpResult,
    cfg: &LossConfig,
    upstream: &ScalarMap,
) -> Result<Vec<f64>> {
    check_same_shape(target, &recon.image)?;
    let (h, w, c) = (target.height(), target.width(), target.channels());
    // Fold the validity mask into the upstream weights once.
    let mut up = upstream.clone();
    for (v, &m) in up.data_mut().iter_mut().zip(recon.valid_mask.data()) {
        if m == 0.0 {
            *v = 0.0;
        }
    }
    let mut grad = ssim_backward(target, &recon.image, &up, cfg.ssim_c1, cfg.ssim_c2)?;
    for g in &mut grad {
        *g *= 1.0 - cfg.alpha;
    }
    for i in 0..h {
        for j in 0..w {
            let u = up.get(i, j);
            if u == 0.0 {
                continue;
            }
            for ch in 0..c {
                let diff = recon.image.get(i, j, ch) - target.get(i, j, ch);
                let sign = if diff > 0.0 {
                    1.0
                } else if diff < 0.0 {
                    -1.0
                } else {
                    0.0
                };
                grad[(i * w + j) * c + ch] += u * cfg.alpha * sign / c as f64;
            }
        }
    }
    Ok(grad)
}

/// Edge-aware smoothness of a mean-normalized disparity map.
///
/// `mean_p |∂x d̂|·e^{−|∂x I|} + |∂y d̂|·e^{−|∂y I|}` with `d̂ = d / mean(d)`.
pub fn smoothness(disparity: &ScalarMap, img: &ImageBuffer) -> Result<f64> {
    smoothness_forward(disparity, img).map(|(s, _)| s)
}

fn check_disparity_image(disparity: &ScalarMap, img: &ImageBuffer) -> Result<f64> {
    if disparity.height() != img.height() || disparity.width() != img.width() {
        return Err(Error::shape(format!(
            "disparity {}x{} vs image {}x{}",
            disparity.height(),
            disparity.width(),
            img.height(),
            img.width()
        )));
    }
    let m = disparity.mean();
    if m.abs() < 1e-12 {
        return Err(Error::domain("disparity mean is (near) zero; cannot normalize"));
    }
    Ok(m)
}

fn smoothness_forward(disparity: &ScalarMap, img: &ImageBuffer) -> Result<(f64, f64)> {
    let m = check_disparity_image(disparity, img)?;
    let (h, w) = (disparity.height(), disparity.width());
    let (ix, iy) = image_gradients(img);
    let (dx, dy) = scalar_gradients(disparity);
    let mut acc = 0.0;
    for i in 0..h {
        for j in 0..w {
            acc += (dx.get(i, j) / m).abs() * (-ix.get(i, j).abs()).exp()
                + (dy.get(i, j) / m).abs() * (-iy.get(i, j).abs()).exp();
        }
    }
    Ok((acc / (h * w) as f64, m))
}

/// Gradient of [`smoothness`] w.r.t. the disparity map, including the coupling
/// through the normalizing mean.
pub fn smoothness_backward(disparity: &ScalarMap, img: &ImageBuffer) -> Result<ScalarMap> {
    let (value, m) = smoothness_forward(disparity, img)?;
    let (h, w) = (disparity.height(), disparity.width());
    let n = (h * w) as f64;
    let (ix, iy) = image_gradients(img);
    let (dx, dy) = scalar_gradients(disparity);
    let mut grad = ScalarMap::zeros(h, w);
    let sign = |v: f64| {
        if v > 0.0 {
            1.0
        } else if v < 0.0 {
            -1.0
        } else {
            0.0
        }
    };
    // Direct term: d/d d(q) of Σ |Δd|·wgt / (m·N), holding m fixed. The sign
    // convention uses m > 0, guaranteed by the mean check above for disparity
    // maps (which are positive); |Δd/m| = |Δd|/m then.
    for i in 0..h {
        for j in 0..w {
            if j + 1 < w {
                let g = sign(dx.get(i, j)) * (-ix.get(i, j).abs()).exp() / (m * n);
                grad.set(i, j + 1, grad.get(i, j + 1) + g);
                grad.set(i, j, grad.get(i, j) - g);
            }
            if i + 1 < h {
                let g = sign(dy.get(i, j)) * (-iy.get(i, j).abs()).exp() / (m * n);
                grad.set(i + 1, j, grad.get(i + 1, j) + g);
                grad.set(i, j, grad.get(i, j) - g);
            }
        }
    }
    // Mean coupling: S = T/(N·m) with ∂m/∂d(q) = 1/N.
    let mean_term = -value / (m * n);
    for v in grad.data_mut() {
        *v += mean_term;
    }
    Ok(grad)
}

/// Binary auto-mask: 1 where the warped reconstruction beats the unwarped
/// source frame under the same photometric error, strict inequality.
pub fn auto_mask(
    target: &ImageBuffer,
    recon: &WarpResult,
    unwarped_source: &ImageBuffer,
    cfg: &LossConfig,
) -> Result<ScalarMap> {
    check_same_shape(target, &recon.image)?;
    check_same_shape(target, unwarped_source)?;
    let pe_warped = photometric(target, recon, cfg)?;
    let pe_unwarped = combined_pe(target, unwarped_source, cfg)?;
    let mut mask = ScalarMap::zeros(target.height(), target.width());
    for (out, (&a, &b)) in mask
        .data_mut()
        .iter_mut()
        .zip(pe_warped.data().iter().zip(pe_unwarped.data()))
    {
        *out = if a < b { 1.0 } else { 0.0 };
    }
    Ok(mask)
}

fn expected_scale_dims(full: usize, scale: usize) -> usize {
    full >> scale
}

fn validate_pyramid(disparities: &[ScalarMap], h: usize, w: usize, cfg: &LossConfig) -> Result<()> {
    if disparities.len() != cfg.scales {
        return Err(Error::shape(format!(
            "expected {} disparity scales, got {}",
            cfg.scales,
            disparities.len()
        )));
    }
    for (s, d) in disparities.iter().enumerate() {
        let (eh, ew) = (expected_scale_dims(h, s), expected_scale_dims(w, s));
        if d.height() != eh || d.width() != ew {
            return Err(Error::shape(format!(
                "scale {s} disparity is {}x{}, expected {eh}x{ew}",
                d.height(),
                d.width()
            )));
        }
        if eh < 2 || ew < 2 {
            return Err(Error::domain(format!("scale {s} is degenerate ({eh}x{ew})")));
        }
    }
    Ok(())
}

struct ScaleEval {
    photometric: f64,
    smoothness: f64,
    /// Mask-weighted per-pixel photometric error (frame-aggregated).
    masked_pe: ScalarMap,
    /// Mean of the per-frame binary masks.
    mask: ScalarMap,
    /// Per-frame upstream weight of each pixel inside this scale's
    /// photometric mean; the backward pass contracts recon gradients with it.
    frame_weight: Vec<ScalarMap>,
}

fn eval_scale(
    context: &[ImageBuffer],
    target: &ImageBuffer,
    warps: &[WarpResult],
    sigma_up: &ScalarMap,
    cfg: &LossConfig,
) -> Result<ScaleEval> {
    let (h, w) = (target.height(), target.width());
    let n = (h * w) as f64;
    let frames = context.len();
    let mut frame_pe = Vec::with_capacity(frames);
    for warp in warps {
        frame_pe.push(photometric(target, warp, cfg)?);
    }

    // Each reconstruction is auto-masked against its own unwarped source:
    // a pixel survives only where warping that frame beats not warping it.
    let frame_mu: Vec<ScalarMap> = if cfg.automask_enabled {
        let mut mus = Vec::with_capacity(frames);
        for (pe, frame) in frame_pe.iter().zip(context) {
            let pe_unwarped = combined_pe(target, frame, cfg)?;
            let mut m = ScalarMap::zeros(h, w);
            for (out, (&a, &b)) in m
                .data_mut()
                .iter_mut()
                .zip(pe.data().iter().zip(pe_unwarped.data()))
            {
                *out = if a < b { 1.0 } else { 0.0 };
            }
            mus.push(m);
        }
        mus
    } else {
        vec![ScalarMap::constant(h, w, 1.0); frames]
    };

    let mut masked_pe = ScalarMap::zeros(h, w);
    let mut frame_weight = vec![ScalarMap::zeros(h, w); frames];
    for idx in 0..h * w {
        if cfg.min_reprojection {
            // Minimum over valid, unmasked frames.
            let mut best = f64::INFINITY;
            let mut choice = usize::MAX;
            for f in 0..frames {
                if warps[f].valid_mask.data()[idx] == 0.0 || frame_mu[f].data()[idx] == 0.0 {
                    continue;
                }
                if frame_pe[f].data()[idx] < best {
                    best = frame_pe[f].data()[idx];
                    choice = f;
                }
            }
            if choice != usize::MAX {
                masked_pe.data_mut()[idx] = best;
                frame_weight[choice].data_mut()[idx] = 1.0 / n;
            }
        } else {
            let mut acc = 0.0;
            for f in 0..frames {
                let mu = frame_mu[f].data()[idx];
                acc += mu * frame_pe[f].data()[idx];
                frame_weight[f].data_mut()[idx] = mu / (n * frames as f64);
            }
            masked_pe.data_mut()[idx] = acc / frames as f64;
        }
    }

    let mut photo = 0.0;
    for idx in 0..h * w {
        photo += masked_pe.data()[idx];
    }
    photo /= n;

    let mut mask = ScalarMap::zeros(h, w);
    for mu in &frame_mu {
        for (o, &m) in mask.data_mut().iter_mut().zip(mu.data()) {
            *o += m / frames as f64;
        }
    }

    let smooth = smoothness(sigma_up, target)?;
    Ok(ScaleEval { photometric: photo, smoothness: smooth, masked_pe, mask, frame_weight })
}

/// Multi-scale objective: each scale's disparity is upsampled to full
/// resolution, converted to depth, and used to warp every context frame to
/// the target; masked photometric means and weighted smoothness are summed
/// across scales.
pub fn total_loss(
    context: &[ImageBuffer],
    target: &ImageBuffer,
    disparities: &[ScalarMap],
    poses: &[Pose],
    k: &Intrinsics,
    range: &DepthRange,
    cfg: &LossConfig,
) -> Result<LossBreakdown> {
    cfg.validate()?;
    if context.is_empty() || context.len() != poses.len() {
        return Err(Error::shape("context frames and poses must be non-empty and equal length".to_string()));
    }
    let (h, w) = (target.height(), target.width());
    validate_pyramid(disparities, h, w, cfg)?;

    let mut total_photo = 0.0;
    let mut total_smooth = 0.0;
    let mut finest: Option<(ScalarMap, ScalarMap)> = None;
    for (s, sigma) in disparities.iter().enumerate() {
        let sigma_up = resize_scalar(sigma, h, w)?;
        let depth = disparity_to_depth(&sigma_up, range)?;
        let warps: Vec<WarpResult> = context
            .iter()
            .zip(poses)
            .map(|(frame, pose)| reverse_warp(frame, &depth, pose, k))
            .collect::<Result<_>>()?;
        let eval = eval_scale(context, target, &warps, &sigma_up, cfg)?;
        total_photo += eval.photometric;
        total_smooth += eval.smoothness;
        if s == 0 {
            finest = Some((eval.masked_pe, eval.mask));
        }
    }
    let (per_pixel_pe, mask) = finest.expect("at least one scale");
    Ok(LossBreakdown {
        total: total_photo + cfg.alpha_d * total_smooth,
        photometric: total_photo,
        smoothness: total_smooth,
        per_pixel_pe,
        mask,
    })
}

/// Gradients of [`total_loss`] w.r.t. the per-scale disparity maps and the
/// per-frame pose parameters.
#[derive(Debug, Clone)]
pub struct TotalLossGrad {
    pub d_disparities: Vec<ScalarMap>,
    pub d_poses: Vec<[f64; 6]>,
}

/// [`total_loss`] plus its adjoint. Poses are given as axis-angle+translation
/// parameter vectors; the auto-mask is treated as a constant.
pub fn total_loss_with_grad(
    context: &[ImageBuffer],
    target: &ImageBuffer,
    disparities: &[ScalarMap],
    pose_params: &[[f64; 6]],
    k: &Intrinsics,
    range: &DepthRange,
    cfg: &LossConfig,
) -> Result<(LossBreakdown, TotalLossGrad)> {
    cfg.validate()?;
    if context.is_empty() || context.len() != pose_params.len() {
        return Err(Error::shape("context frames and poses must be non-empty and equal length".to_string()));
    }
    let (h, w, c) = (target.height(), target.width(), target.channels());
    validate_pyramid(disparities, h, w, cfg)?;

    let mut total_photo = 0.0;
    let mut total_smooth = 0.0;
    let mut finest: Option<(ScalarMap, ScalarMap)> = None;
    let mut d_disparities = Vec::with_capacity(cfg.scales);
    let mut d_poses = vec![[0.0; 6]; context.len()];

    for (s, sigma) in disparities.iter().enumerate() {
        let sigma_up = resize_scalar(sigma, h, w)?;
        let depth = disparity_to_depth(&sigma_up, range)?;
        let mut warps = Vec::with_capacity(context.len());
        let mut jacs = Vec::with_capacity(context.len());
        for (frame, params) in context.iter().zip(pose_params) {
            let (warp, jac) = warp_jacobians(frame, &depth, params, k)?;
            warps.push(warp);
            jacs.push(jac);
        }
        let eval = eval_scale(context, target, &warps, &sigma_up, cfg)?;
        total_photo += eval.photometric;
        total_smooth += eval.smoothness;

        let mut d_depth = ScalarMap::zeros(h, w);
        for (f, warp) in warps.iter().enumerate() {
            let grad_recon = photometric_backward(target, warp, cfg, &eval.frame_weight[f])?;
            let jac = &jacs[f];
            let dp = &mut d_poses[f];
            for idx in 0..h * w {
                let mut acc_depth = 0.0;
                for ch in 0..c {
                    let g = grad_recon[idx * c + ch];
                    if g == 0.0 {
                        continue;
                    }
                    acc_depth += g * jac.d_depth[idx][ch];
                    for p in 0..6 {
                        dp[p] += g * jac.d_pose[idx][ch][p];
                    }
                }
                d_depth.data_mut()[idx] += acc_depth;
            }
        }

        // Chain depth → upsampled disparity, add the smoothness term, then
        // push through the upsampling adjoint.
        let mut d_sigma_up = smoothness_backward(&sigma_up, target)?;
        for v in d_sigma_up.data_mut() {
            *v *= cfg.alpha_d;
        }
        for idx in 0..h * w {
            d_sigma_up.data_mut()[idx] +=
                d_depth.data()[idx] * range.d_depth_d_sigma(sigma_up.data()[idx]);
        }
        d_disparities.push(resize_scalar_adjoint(&d_sigma_up, sigma.height(), sigma.width()));

        if s == 0 {
            finest = Some((eval.masked_pe, eval.mask));
        }
    }

    let (per_pixel_pe, mask) = finest.expect("at least one scale");
    Ok((
        LossBreakdown {
            total: total_photo + cfg.alpha_d * total_smooth,
            photometric: total_photo,
            smoothness: total_smooth,
            per_pixel_pe,
            mask,
        },
        TotalLossGrad { d_disparities, d_poses },
    ))
}
