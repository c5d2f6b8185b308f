//! Reverse warping: reconstruct a target view by sampling a source frame at
//! coordinates obtained from target depth and the target→source pose.
//!
//! Every target pixel is processed independently; there are no cross-pixel
//! reductions, so the output is identical under any evaluation schedule.

use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};
use crate::geometry::{AxisAngleRotation, Intrinsics, Pixel, Pose};
use crate::image::{bilinear_sample, ImageBuffer, SampleResult, ScalarMap};

/// Transformed points with `z` at or below this value are marked invalid
/// instead of being projected; the projection is singular at `z = 0`.
pub const MIN_Z: f64 = 1e-6;

/// A reconstructed target view.
#[derive(Debug, Clone)]
pub struct WarpResult {
    /// Reconstruction; zero wherever `valid_mask` is zero.
    pub image: ImageBuffer,
    /// 1.0 where the sample was in front of the camera and in bounds, else 0.0.
    pub valid_mask: ScalarMap,
    /// Continuous source-column coordinate per target pixel (−1 where the
    /// point fell behind the camera).
    pub coord_u: ScalarMap,
    /// Continuous source-row coordinate per target pixel.
    pub coord_v: ScalarMap,
}

impl WarpResult {
    pub fn valid_fraction(&self) -> f64 {
        self.valid_mask.mean()
    }
}

/// Per-pixel gradients of the reconstruction w.r.t. the depth map and the
/// 6 pose parameters (axis-angle rotation, then translation).
///
/// Entries at invalid pixels are exactly zero. Only the first
/// `source.channels()` lanes of each per-channel array are meaningful.
#[derive(Debug, Clone)]
pub struct WarpJacobians {
    pub d_depth: Vec<[f64; 3]>,
    pub d_pose: Vec<[[f64; 6]; 3]>,
}

fn check_shapes(source: &ImageBuffer, target_depth: &ScalarMap) -> Result<()> {
    if source.height() != target_depth.height() || source.width() != target_depth.width() {
        return Err(Error::shape(format!(
            "source {}x{} vs depth {}x{}",
            source.height(),
            source.width(),
            target_depth.height(),
            target_depth.width()
        )));
    }
    if !target_depth.data().iter().all(|&d| d.is_finite() && d > 0.0) {
        return Err(Error::domain("target depth must be strictly positive and finite"));
    }
    Ok(())
}

struct PixelChain {
    sample: SampleResult,
    coord: Pixel,
    /// Rows of ∂p̂/∂P′.
    dproj_u: Vector3<f64>,
    dproj_v: Vector3<f64>,
    /// Camera ray `q = ((u−cx)/fx, (v−cy)/fy, 1)`.
    ray: Vector3<f64>,
    valid: bool,
}

#[inline]
fn warp_pixel(
    source: &ImageBuffer,
    rotation: &Matrix3<f64>,
    t: &Vector3<f64>,
    k: &Intrinsics,
    u: f64,
    v: f64,
    depth: f64,
) -> PixelChain {
    let ray = Vector3::new((u - k.cx) / k.fx, (v - k.cy) / k.fy, 1.0);
    let transformed = rotation * (ray * depth) + t;
    if transformed.z <= MIN_Z {
        return PixelChain {
            sample: SampleResult::invalid(),
            coord: Pixel::new(-1.0, -1.0),
            dproj_u: Vector3::zeros(),
            dproj_v: Vector3::zeros(),
            ray,
            valid: false,
        };
    }
    // Divide rather than multiply by a reciprocal: the identity-pose warp is
    // then exact whenever the products along the chain are.
    let inv_z = 1.0 / transformed.z;
    let coord = Pixel::new(
        k.fx * (transformed.x / transformed.z) + k.cx,
        k.fy * (transformed.y / transformed.z) + k.cy,
    );
    let sample = bilinear_sample(source, coord);
    let dproj_u = Vector3::new(k.fx * inv_z, 0.0, -k.fx * transformed.x * inv_z * inv_z);
    let dproj_v = Vector3::new(0.0, k.fy * inv_z, -k.fy * transformed.y * inv_z * inv_z);
    PixelChain { valid: sample.valid, sample, coord, dproj_u, dproj_v, ray }
}

/// Reconstructs the target view from `source` given the target depth map and
/// the target→source pose.
pub fn reverse_warp(
    source: &ImageBuffer,
    target_depth: &ScalarMap,
    pose_tar_to_src: &Pose,
    k: &Intrinsics,
) -> Result<WarpResult> {
    check_shapes(source, target_depth)?;
    let (h, w, c) = (source.height(), source.width(), source.channels());
    let mut image = vec![0.0; h * w * c];
    let mut mask = ScalarMap::zeros(h, w);
    let mut cu = ScalarMap::zeros(h, w);
    let mut cv = ScalarMap::zeros(h, w);
    for i in 0..h {
        for j in 0..w {
            let chain = warp_pixel(
                source,
                &pose_tar_to_src.rotation,
                &pose_tar_to_src.translation,
                k,
                j as f64,
                i as f64,
                target_depth.get(i, j),
            );
            cu.set(i, j, chain.coord.u);
            cv.set(i, j, chain.coord.v);
            if chain.valid {
                mask.set(i, j, 1.0);
                for ch in 0..c {
                    image[(i * w + j) * c + ch] = chain.sample.value[ch];
                }
            }
        }
    }
    Ok(WarpResult {
        image: ImageBuffer::from_computed(h, w, c, image),
        valid_mask: mask,
        coord_u: cu,
        coord_v: cv,
    })
}

/// Forward warp plus per-pixel analytic gradients w.r.t. depth and the
/// axis-angle + translation pose parameters.
pub fn warp_jacobians(
    source: &ImageBuffer,
    target_depth: &ScalarMap,
    pose_params: &[f64; 6],
    k: &Intrinsics,
) -> Result<(WarpResult, WarpJacobians)> {
    check_shapes(source, target_depth)?;
    let (h, w, c) = (source.height(), source.width(), source.channels());
    let r = Vector3::new(pose_params[0], pose_params[1], pose_params[2]);
    let t = Vector3::new(pose_params[3], pose_params[4], pose_params[5]);
    let rot = AxisAngleRotation::new(r);
    let rotation = rot.matrix();

    let mut image = vec![0.0; h * w * c];
    let mut mask = ScalarMap::zeros(h, w);
    let mut cu = ScalarMap::zeros(h, w);
    let mut cv = ScalarMap::zeros(h, w);
    let mut d_depth = vec![[0.0; 3]; h * w];
    let mut d_pose = vec![[[0.0; 6]; 3]; h * w];

    for i in 0..h {
        for j in 0..w {
            let depth = target_depth.get(i, j);
            let chain = warp_pixel(source, &rotation, &t, k, j as f64, i as f64, depth);
            cu.set(i, j, chain.coord.u);
            cv.set(i, j, chain.coord.v);
            if !chain.valid {
                continue;
            }
            mask.set(i, j, 1.0);
            let idx = i * w + j;
            // P = D·q, so ∂P′/∂D = R·q.
            let dpdd = rotation * chain.ray;
            // ∂P′/∂r at the back-projected point (translation drops out).
            let dpdr = rot.d_apply_d_r(chain.ray * depth);
            for ch in 0..c {
                image[idx * c + ch] = chain.sample.value[ch];
                // Pull the sampler gradient back through the projection:
                // g = (∂p̂/∂P′)ᵀ · (∂Î/∂p̂).
                let g = chain.dproj_u * chain.sample.d_value_du[ch]
                    + chain.dproj_v * chain.sample.d_value_dv[ch];
                d_depth[idx][ch] = g.dot(&dpdd);
                let gr = dpdr.transpose() * g;
                d_pose[idx][ch] = [gr.x, gr.y, gr.z, g.x, g.y, g.z];
            }
        }
    }
    Ok((
        WarpResult {
            image: ImageBuffer::from_computed(h, w, c, image),
            valid_mask: mask,
            coord_u: cu,
            coord_v: cv,
        },
        WarpJacobians { d_depth, d_pose },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::pose_from_axis_angle;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Intrinsics whose back-project/project round trip is exact in fp64 for
    /// depths on a dyadic grid: power-of-two focal length, integer centers.
    fn exact_k() -> Intrinsics {
        Intrinsics::new(64.0, 64.0, 8.0, 6.0).unwrap()
    }

    fn smooth_image(h: usize, w: usize, c: usize, seed: u64) -> ImageBuffer {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let phases: Vec<(f64, f64, f64)> = (0..c * 2)
            .map(|_| (rng.gen_range(0.02..0.12), rng.gen_range(0.02..0.12), rng.gen_range(0.0..6.28)))
            .collect();
        ImageBuffer::from_fn(h, w, c, |i, j, ch| {
            let mut v = 0.5;
            for (q, &(fu, fv, p0)) in phases.iter().enumerate() {
                if q % c == ch {
                    v += 0.2 * (2.0 * std::f64::consts::PI * (fu * j as f64 + fv * i as f64) + p0).sin();
                }
            }
            v
        })
        .unwrap()
    }

    #[test]
    fn identity_pose_is_bitexact_identity() {
        let k = exact_k();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let img = smooth_image(12, 17, 3, 1);
        // Depths on a 2^-8 grid keep the projective round trip exact.
        let depth = ScalarMap::from_fn(12, 17, |_, _| {
            (rng.gen_range(1.0f64..60.0) * 256.0).round() / 256.0
        });
        let out = reverse_warp(&img, &depth, &Pose::identity(), &k).unwrap();
        assert_eq!(out.image.data(), img.data());
        assert!(out.valid_mask.data().iter().all(|&m| m == 1.0));
    }

    #[test]
    fn large_translation_leaves_view() {
        let k = Intrinsics::new(60.0, 60.0, 32.0, 32.0).unwrap();
        let img = smooth_image(64, 64, 1, 2);
        let depth = ScalarMap::constant(64, 64, 10.0);
        let pose = pose_from_axis_angle(
            Vector3::zeros(),
            Vector3::new(100.0, 0.0, 0.0),
        )
        .unwrap();
        let out = reverse_warp(&img, &depth, &pose, &k).unwrap();
        assert!(out.valid_fraction() < 0.01, "fraction {}", out.valid_fraction());
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let img = smooth_image(8, 8, 1, 3);
        let depth = ScalarMap::constant(8, 9, 1.0);
        assert!(reverse_warp(&img, &depth, &Pose::identity(), &exact_k()).is_err());
    }

    #[test]
    fn nonpositive_depth_is_an_error() {
        let img = smooth_image(8, 8, 1, 3);
        let mut depth = ScalarMap::constant(8, 8, 1.0);
        depth.set(3, 3, 0.0);
        assert!(reverse_warp(&img, &depth, &Pose::identity(), &exact_k()).is_err());
    }

    #[test]
    fn behind_camera_marks_invalid() {
        let k = Intrinsics::new(30.0, 30.0, 16.0, 16.0).unwrap();
        let img = smooth_image(32, 32, 1, 4);
        let depth = ScalarMap::constant(32, 32, 1.0);
        // Move the scene behind the source camera.
        let pose = pose_from_axis_angle(
            Vector3::zeros(),
            Vector3::new(0.0, 0.0, -5.0),
        )
        .unwrap();
        let out = reverse_warp(&img, &depth, &pose, &k).unwrap();
        assert!(out.valid_mask.data().iter().all(|&m| m == 0.0));
        assert!(out.image.data().iter().all(|&v| v == 0.0));
        assert_eq!(out.coord_u.get(0, 0), -1.0);
    }

    #[test]
    fn constant_texture_has_zero_depth_gradient() {
        let k = Intrinsics::new(20.0, 20.0, 8.0, 8.0).unwrap();
        let img = ImageBuffer::constant(16, 16, 1, 0.6).unwrap();
        let depth = ScalarMap::constant(16, 16, 5.0);
        let params = [0.0, 0.0, 0.0, 0.0, 0.0, 0.02];
        let (_, jac) = warp_jacobians(&img, &depth, &params, &k).unwrap();
        for g in &jac.d_depth {
            assert_eq!(g[0], 0.0);
        }
    }

    #[test]
    fn gradients_at_masked_pixels_are_zero() {
        let k = Intrinsics::new(20.0, 20.0, 8.0, 8.0).unwrap();
        let img = smooth_image(16, 16, 3, 6);
        let depth = ScalarMap::constant(16, 16, 4.0);
        let params = [0.0, 0.0, 0.0, 3.5, 0.0, 0.0];
        let (warp, jac) = warp_jacobians(&img, &depth, &params, &k).unwrap();
        let mut masked = 0;
        for (idx, &m) in warp.valid_mask.data().iter().enumerate() {
            if m == 0.0 {
                masked += 1;
                assert_eq!(jac.d_depth[idx], [0.0; 3]);
                assert_eq!(jac.d_pose[idx], [[0.0; 6]; 3]);
            }
        }
        assert!(masked > 0, "expected some masked pixels in this instance");
    }

    #[test]
    fn jacobians_match_finite_differences_at_every_valid_pixel() {
        let k = Intrinsics::new(20.0, 20.0, 7.5, 7.5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let img = smooth_image(16, 16, 3, 7);
        let depth = ScalarMap::from_fn(16, 16, |_, _| 5.0 + rng.gen_range(-0.2..0.2));
        let params = [0.004, -0.003, 0.002, 0.11, 0.13, 0.04];
        let (warp, jac) = warp_jacobians(&img, &depth, &params, &k).unwrap();

        // The instance must only produce samples comfortably inside cell
        // interiors so central differences stay on one smooth piece.
        let step = 1e-5;
        let margin = 50.0 * step;
        for idx in 0..16 * 16 {
            if warp.valid_mask.data()[idx] == 0.0 {
                continue;
            }
            let (u, v) = (warp.coord_u.data()[idx], warp.coord_v.data()[idx]);
            assert!(u.fract() > margin && u.fract() < 1.0 - margin, "u={u} too close to a knot");
            assert!(v.fract() > margin && v.fract() < 1.0 - margin, "v={v} too close to a knot");
        }

        let rel = |a: f64, n: f64| (a - n).abs() / n.abs().max(1e-6);
        let mut checked = 0;
        // Depth gradients.
        for i in 0..16 {
            for j in 0..16 {
                let idx = i * 16 + j;
                if warp.valid_mask.get(i, j) == 0.0 {
                    continue;
                }
                let mut dp = depth.clone();
                dp.set(i, j, depth.get(i, j) + step);
                let mut dm = depth.clone();
                dm.set(i, j, depth.get(i, j) - step);
                let wp = warp_jacobians(&img, &dp, &params, &k).unwrap().0;
                let wm = warp_jacobians(&img, &dm, &params, &k).unwrap().0;
                for c in 0..3 {
                    let fd = (wp.image.get(i, j, c) - wm.image.get(i, j, c)) / (2.0 * step);
                    assert!(
                        rel(jac.d_depth[idx][c], fd) < 1e-4,
                        "depth grad at ({i},{j},{c}): {} vs fd {fd}",
                        jac.d_depth[idx][c]
                    );
                    checked += 1;
                }
            }
        }
        assert!(checked > 300, "too few valid pixels checked: {checked}");

        // Pose gradients, via a weighted scalarization to keep runtime sane.
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let weights: Vec<f64> = (0..16 * 16 * 3).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let weighted = |wr: &WarpResult| -> f64 {
            wr.image
                .data()
                .iter()
                .zip(&weights)
                .map(|(a, b)| a * b)
                .sum()
        };
        let analytic: Vec<f64> = (0..6)
            .map(|p| {
                let mut acc = 0.0;
                for idx in 0..16 * 16 {
                    for c in 0..3 {
                        acc += jac.d_pose[idx][c][p] * weights[idx * 3 + c];
                    }
                }
                acc
            })
            .collect();
        for p in 0..6 {
            let mut pp = params;
            pp[p] += step;
            let mut pm = params;
            pm[p] -= step;
            let fp = weighted(&warp_jacobians(&img, &depth, &pp, &k).unwrap().0);
            let fm = weighted(&warp_jacobians(&img, &depth, &pm, &k).unwrap().0);
            let fd = (fp - fm) / (2.0 * step);
            assert!(rel(analytic[p], fd) < 1e-4, "pose grad {p}: {} vs fd {fd}", analytic[p]);
        }
    }
}
