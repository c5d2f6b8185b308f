//! Pinhole camera model, SE(3) pose algebra, and disparity/depth conversion.
//!
//! Conventions used everywhere in this crate:
//! - `u` is the column index, `v` the row index, both zero-based, with pixel
//!   centers at integer coordinates.
//! - A [`Pose`] named `pose_tar_to_src` maps points expressed in the target
//!   camera frame into the source camera frame. There is no direction flag;
//!   callers invert explicitly.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::ScalarMap;

/// Axis-angle magnitude below which Rodrigues switches to its Taylor expansion.
pub const SMALL_ANGLE: f64 = 1e-8;

/// Pinhole intrinsic parameters in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Intrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
}

impl Intrinsics {
    pub fn new(fx: f64, fy: f64, cx: f64, cy: f64) -> Result<Self> {
        let k = Intrinsics { fx, fy, cx, cy };
        if !(fx.is_finite() && fy.is_finite() && cx.is_finite() && cy.is_finite()) {
            return Err(Error::domain("intrinsics must be finite"));
        }
        if fx <= 0.0 || fy <= 0.0 {
            return Err(Error::domain(format!(
                "focal lengths must be positive, got fx={fx}, fy={fy}"
            )));
        }
        Ok(k)
    }
}

/// Continuous pixel coordinate (u = column, v = row).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pixel {
    pub u: f64,
    pub v: f64,
}

impl Pixel {
    pub fn new(u: f64, v: f64) -> Self {
        Pixel { u, v }
    }
}

/// 3D point in camera or world coordinates (scene units).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point3 {
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Point3 { x, y, z }
    }

    pub fn to_vector(self) -> Vector3<f64> {
        Vector3::new(self.x, self.y, self.z)
    }

    pub fn from_vector(v: Vector3<f64>) -> Self {
        Point3::new(v.x, v.y, v.z)
    }
}

/// Rigid SE(3) transform: `x ↦ R x + t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub rotation: Matrix3<f64>,
    pub translation: Vector3<f64>,
}

impl Pose {
    /// Validates orthonormality (`RᵀR = I` and `det R = 1` within 1e-9).
    pub fn new(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Result<Self> {
        let gram = rotation.transpose() * rotation;
        let dev = (gram - Matrix3::identity()).abs().max();
        if dev > 1e-9 {
            return Err(Error::domain(format!(
                "rotation is not orthonormal (max deviation {dev:.3e})"
            )));
        }
        let det = rotation.determinant();
        if (det - 1.0).abs() > 1e-9 {
            return Err(Error::domain(format!("det(R) = {det}, expected 1")));
        }
        if !translation.iter().all(|t| t.is_finite()) {
            return Err(Error::domain("translation must be finite"));
        }
        Ok(Pose { rotation, translation })
    }

    pub fn identity() -> Self {
        Pose {
            rotation: Matrix3::identity(),
            translation: Vector3::zeros(),
        }
    }

    pub fn apply(&self, p: Point3) -> Point3 {
        Point3::from_vector(self.rotation * p.to_vector() + self.translation)
    }

    pub fn apply_vector(&self, p: Vector3<f64>) -> Vector3<f64> {
        self.rotation * p + self.translation
    }
}

/// Back-projects a pixel with known depth into the camera frame.
///
/// Returns `depth · ((u−cx)/fx, (v−cy)/fy, 1)`; the z component equals `depth`
/// exactly.
pub fn backproject(p: Pixel, depth: f64, k: &Intrinsics) -> Result<Point3> {
    if !depth.is_finite() || depth <= 0.0 {
        return Err(Error::domain(format!("depth must be positive and finite, got {depth}")));
    }
    Ok(Point3::new(
        depth * ((p.u - k.cx) / k.fx),
        depth * ((p.v - k.cy) / k.fy),
        depth,
    ))
}

/// Projects a camera-frame point to pixel coordinates.
pub fn project(p: Point3, k: &Intrinsics) -> Result<Pixel> {
    if p.z <= 0.0 {
        return Err(Error::BehindCamera { z: p.z });
    }
    Ok(Pixel::new(k.fx * (p.x / p.z) + k.cx, k.fy * (p.y / p.z) + k.cy))
}

/// Rotation coefficients for `R = I + A·[r]× + B·[r]×²` and the scaled
/// derivatives `A′/θ`, `B′/θ` used by the pose Jacobian.
#[derive(Debug, Clone, Copy)]
struct RodriguesCoeffs {
    a: f64,
    b: f64,
    da_over_theta: f64,
    db_over_theta: f64,
}

fn rodrigues_coeffs(theta: f64) -> RodriguesCoeffs {
    let t2 = theta * theta;
    let (a, b) = if theta < SMALL_ANGLE {
        (1.0 - t2 / 6.0, 0.5 - t2 / 24.0)
    } else {
        ((theta.sin()) / theta, (1.0 - theta.cos()) / t2)
    };
    // The closed forms for A′ and B′ cancel catastrophically near zero; the
    // series is exact to fp64 below 1e-4.
    let (da_over_theta, db_over_theta) = if theta < 1e-4 {
        (-1.0 / 3.0 + t2 / 30.0, -1.0 / 12.0 + t2 / 180.0)
    } else {
        let (s, c) = (theta.sin(), theta.cos());
        (
            (theta * c - s) / (t2 * theta),
            (theta * s - 2.0 * (1.0 - c)) / (t2 * t2),
        )
    };
    RodriguesCoeffs { a, b, da_over_theta, db_over_theta }
}

fn cross_matrix(r: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -r.z, r.y, r.z, 0.0, -r.x, -r.y, r.x, 0.0)
}

/// Rodrigues rotation for an axis-angle vector.
pub fn rotation_from_axis_angle(r: Vector3<f64>) -> Matrix3<f64> {
    let theta = r.norm();
    let c = rodrigues_coeffs(theta);
    let rx = cross_matrix(&r);
    Matrix3::identity() + rx * c.a + rx * rx * c.b
}

/// Axis-angle vector of a rotation matrix (inverse of Rodrigues).
pub fn axis_angle_from_rotation(rot: &Matrix3<f64>) -> Vector3<f64> {
    let cos_theta = ((rot.trace() - 1.0) / 2.0).clamp(-1.0, 1.0);
    let theta = cos_theta.acos();
    let skew = Vector3::new(
        rot[(2, 1)] - rot[(1, 2)],
        rot[(0, 2)] - rot[(2, 0)],
        rot[(1, 0)] - rot[(0, 1)],
    );
    if theta < SMALL_ANGLE {
        return skew * 0.5;
    }
    if (std::f64::consts::PI - theta) < 1e-6 {
        // Near π the skew part vanishes; recover the axis from the symmetric part.
        let m = (rot + Matrix3::identity().scale(1.0)) * 0.5;
        let diag = Vector3::new(m[(0, 0)], m[(1, 1)], m[(2, 2)]);
        let i = diag.imax();
        let axis_i = ((rot[(i, i)] + 1.0) / 2.0).max(0.0).sqrt();
        let mut axis = Vector3::zeros();
        axis[i] = axis_i;
        for j in 0..3 {
            if j != i && axis_i > 0.0 {
                axis[j] = (rot[(i.max(j), i.min(j))] + rot[(i.min(j), i.max(j))]) / (4.0 * axis_i);
            }
        }
        let axis = axis.normalize();
        // Fix the sign using the skew part (may be tiny but carries the sign).
        let sign = if skew.dot(&axis) < 0.0 { -1.0 } else { 1.0 };
        return axis * theta * sign;
    }
    skew * (theta / (2.0 * theta.sin()))
}

/// Builds a pose from an axis-angle rotation vector and a translation.
pub fn pose_from_axis_angle(r: Vector3<f64>, t: Vector3<f64>) -> Result<Pose> {
    if !(r.iter().all(|x| x.is_finite()) && t.iter().all(|x| x.is_finite())) {
        return Err(Error::domain("axis-angle parameters must be finite"));
    }
    Ok(Pose {
        rotation: rotation_from_axis_angle(r),
        translation: t,
    })
}

/// Rotation application with analytic derivatives w.r.t. the axis-angle vector.
///
/// Precomputes the Rodrigues coefficients for a fixed `r` so that per-point
/// evaluation in the warp inner loop stays cheap.
#[derive(Debug, Clone, Copy)]
pub struct AxisAngleRotation {
    r: Vector3<f64>,
    coeffs: RodriguesCoeffs,
}

impl AxisAngleRotation {
    pub fn new(r: Vector3<f64>) -> Self {
        AxisAngleRotation {
            r,
            coeffs: rodrigues_coeffs(r.norm()),
        }
    }

    pub fn matrix(&self) -> Matrix3<f64> {
        let rx = cross_matrix(&self.r);
        Matrix3::identity() + rx * self.coeffs.a + rx * rx * self.coeffs.b
    }

    /// `R(r) · p` via `p + A·(r×p) + B·(r×(r×p))`.
    pub fn apply(&self, p: Vector3<f64>) -> Vector3<f64> {
        let rp = self.r.cross(&p);
        let rrp = self.r.cross(&rp);
        p + rp * self.coeffs.a + rrp * self.coeffs.b
    }

    /// Columns are `∂(R(r)·p)/∂r_i`.
    pub fn d_apply_d_r(&self, p: Vector3<f64>) -> Matrix3<f64> {
        let c = self.coeffs;
        let rp = self.r.cross(&p);
        let rrp = self.r.cross(&rp);
        let mut out = Matrix3::zeros();
        for i in 0..3 {
            let mut e = Vector3::zeros();
            e[i] = 1.0;
            let ep = e.cross(&p);
            let col = rp * (c.da_over_theta * self.r[i])
                + ep * c.a
                + rrp * (c.db_over_theta * self.r[i])
                + (e.cross(&rp) + self.r.cross(&ep)) * c.b;
            out.set_column(i, &col);
        }
        out
    }
}

/// Composition `(a ∘ b)(x) = a(b(x))`.
pub fn compose(a: &Pose, b: &Pose) -> Pose {
    Pose {
        rotation: a.rotation * b.rotation,
        translation: a.rotation * b.translation + a.translation,
    }
}

/// Inverse transform: rotation `Rᵀ`, translation `−Rᵀ t`.
pub fn invert(a: &Pose) -> Pose {
    let rt = a.rotation.transpose();
    Pose {
        rotation: rt,
        translation: -(rt * a.translation),
    }
}

/// Depth interval used to re-scale sigmoid disparities.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct DepthRange {
    pub min: f64,
    pub max: f64,
}

impl Default for DepthRange {
    fn default() -> Self {
        DepthRange { min: 0.1, max: 100.0 }
    }
}

impl DepthRange {
    /// Coefficients of `D = 1/(a·σ + b)` with `D(0⁺) → max` and `D(1⁻) → min`.
    pub fn coefficients(&self) -> (f64, f64) {
        let b = 1.0 / self.max;
        let a = 1.0 / self.min - b;
        (a, b)
    }

    pub fn depth_of(&self, sigma: f64) -> f64 {
        let (a, b) = self.coefficients();
        1.0 / (a * sigma + b)
    }

    /// `dD/dσ = −a / (a·σ + b)²`.
    pub fn d_depth_d_sigma(&self, sigma: f64) -> f64 {
        let (a, b) = self.coefficients();
        let den = a * sigma + b;
        -a / (den * den)
    }
}

/// Converts a disparity map with values in (0,1) to metric depth.
pub fn disparity_to_depth(sigma: &ScalarMap, range: &DepthRange) -> Result<ScalarMap> {
    let mut out = ScalarMap::zeros(sigma.height(), sigma.width());
    for (dst, &s) in out.data_mut().iter_mut().zip(sigma.data()) {
        if !(s > 0.0 && s < 1.0) {
            return Err(Error::domain(format!("disparity {s} outside (0,1)")));
        }
        *dst = range.depth_of(s);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn test_k() -> Intrinsics {
        Intrinsics::new(100.0, 100.0, 50.0, 50.0).unwrap()
    }

    #[test]
    fn backproject_principal_point_is_optical_axis() {
        let p = backproject(Pixel::new(50.0, 50.0), 2.0, &test_k()).unwrap();
        assert_eq!((p.x, p.y, p.z), (0.0, 0.0, 2.0));
    }

    #[test]
    fn backproject_off_axis() {
        let p = backproject(Pixel::new(150.0, 50.0), 2.0, &test_k()).unwrap();
        assert_eq!((p.x, p.y, p.z), (2.0, 0.0, 2.0));
        let p = backproject(Pixel::new(50.0, 150.0), 4.0, &test_k()).unwrap();
        assert_eq!((p.x, p.y, p.z), (0.0, 4.0, 4.0));
    }

    #[test]
    fn backproject_rejects_bad_depth() {
        assert!(backproject(Pixel::new(0.0, 0.0), 0.0, &test_k()).is_err());
        assert!(backproject(Pixel::new(0.0, 0.0), -1.0, &test_k()).is_err());
        assert!(backproject(Pixel::new(0.0, 0.0), f64::NAN, &test_k()).is_err());
    }

    #[test]
    fn project_known_points() {
        let px = project(Point3::new(0.0, 0.0, 2.0), &test_k()).unwrap();
        assert_eq!((px.u, px.v), (50.0, 50.0));
        let px = project(Point3::new(2.0, 0.0, 2.0), &test_k()).unwrap();
        assert_eq!((px.u, px.v), (150.0, 50.0));
    }

    #[test]
    fn project_behind_camera_errors() {
        assert!(matches!(
            project(Point3::new(0.0, 0.0, -1.0), &test_k()),
            Err(Error::BehindCamera { .. })
        ));
        assert!(project(Point3::new(0.0, 0.0, 0.0), &test_k()).is_err());
    }

    #[test]
    fn project_backproject_roundtrip() {
        let k = Intrinsics::new(80.0, 120.0, 33.0, 21.5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let p = Pixel::new(rng.gen_range(-10.0..200.0), rng.gen_range(-10.0..200.0));
            let d = rng.gen_range(0.5..50.0);
            let back = backproject(p, d, &k).unwrap();
            let fwd = project(back, &k).unwrap();
            assert_relative_eq!(fwd.u, p.u, max_relative = 1e-9, epsilon = 1e-9);
            assert_relative_eq!(fwd.v, p.v, max_relative = 1e-9, epsilon = 1e-9);
        }
    }

    #[test]
    fn axis_angle_identity() {
        let pose = pose_from_axis_angle(Vector3::zeros(), Vector3::zeros()).unwrap();
        assert_eq!(pose.rotation, Matrix3::identity());
        assert_eq!(pose.translation, Vector3::zeros());
    }

    #[test]
    fn axis_angle_quarter_turn_about_z() {
        let pose = pose_from_axis_angle(Vector3::new(0.0, 0.0, PI / 2.0), Vector3::zeros()).unwrap();
        let p = pose.apply(Point3::new(1.0, 0.0, 0.0));
        assert!((p.x - 0.0).abs() < 1e-12);
        assert!((p.y - 1.0).abs() < 1e-12);
        assert!((p.z - 0.0).abs() < 1e-12);
    }

    #[test]
    fn taylor_branch_matches_full_rodrigues_at_tiny_angle() {
        // Oracle: evaluate the closed-form Rodrigues series directly at fp64.
        let r = Vector3::new(1e-10, 0.0, 0.0);
        let theta: f64 = 1e-10;
        let rx = cross_matrix(&r);
        let full = Matrix3::identity()
            + rx * (theta.sin() / theta)
            + rx * rx * ((1.0 - theta.cos()) / (theta * theta));
        let ours = rotation_from_axis_angle(r);
        assert!((full - ours).abs().max() < 1e-15);
    }

    #[test]
    fn rodrigues_continuous_across_branch_threshold() {
        // The piecewise definition must not jump at the seam: at inputs just
        // around the threshold, the branch the implementation takes and the
        // closed form must agree to well below fp noise.
        for &theta in &[SMALL_ANGLE - 1e-12, SMALL_ANGLE + 1e-12] {
            let r = Vector3::new(theta, 0.0, 0.0);
            let rx = cross_matrix(&r);
            let full = Matrix3::identity()
                + rx * (theta.sin() / theta)
                + rx * rx * ((1.0 - theta.cos()) / (theta * theta));
            let ours = rotation_from_axis_angle(r);
            assert!((full - ours).abs().max() < 1e-14, "seam jump at theta={theta}");
        }
    }

    #[test]
    fn compose_and_invert() {
        let t = pose_from_axis_angle(Vector3::new(0.3, -0.2, 0.9), Vector3::new(1.0, 2.0, -0.5))
            .unwrap();
        let id = Pose::identity();
        let c = compose(&id, &t);
        assert_eq!(c.rotation, t.rotation);
        assert_eq!(c.translation, t.translation);

        let should_be_id = compose(&t, &invert(&t));
        assert!((should_be_id.rotation - Matrix3::identity()).abs().max() < 1e-9);
        assert!(should_be_id.translation.norm() < 1e-9);

        let twice = invert(&invert(&t));
        assert!((twice.rotation - t.rotation).abs().max() < 1e-12);
        assert!((twice.translation - t.translation).norm() < 1e-12);
    }

    #[test]
    fn compose_matches_sequential_application() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut rand_pose = |rng: &mut ChaCha8Rng| {
            let r = Vector3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            let t = Vector3::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
            pose_from_axis_angle(r, t).unwrap()
        };
        for _ in 0..4 {
            let a = rand_pose(&mut rng);
            let b = rand_pose(&mut rng);
            let ab = compose(&a, &b);
            for _ in 0..10 {
                let p = Point3::new(rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0));
                let seq = a.apply(b.apply(p));
                let direct = ab.apply(p);
                assert!((seq.to_vector() - direct.to_vector()).norm() < 1e-9);
            }
        }
    }

    #[test]
    fn invert_applied_after_forward_returns_point() {
        let t = pose_from_axis_angle(Vector3::new(-0.4, 0.8, 0.1), Vector3::new(0.3, -1.0, 2.0))
            .unwrap();
        let inv = invert(&t);
        let p = Point3::new(1.7, -2.2, 4.0);
        let back = inv.apply(t.apply(p));
        assert!((back.to_vector() - p.to_vector()).norm() < 1e-9);
    }

    #[test]
    fn axis_angle_roundtrip() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let r = Vector3::new(
                rng.gen_range(-2.0..2.0),
                rng.gen_range(-2.0..2.0),
                rng.gen_range(-2.0..2.0),
            );
            let rot = rotation_from_axis_angle(r);
            let back = axis_angle_from_rotation(&rot);
            assert!((back - r).norm() < 1e-9, "r={r:?} back={back:?}");
        }
    }

    #[test]
    fn rotation_derivative_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for &scale in &[1e-6, 1e-3, 0.5, 2.0] {
            let r = Vector3::new(
                rng.gen_range(-1.0..1.0) * scale,
                rng.gen_range(-1.0..1.0) * scale,
                rng.gen_range(-1.0..1.0) * scale,
            );
            let p = Vector3::new(rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));
            let rot = AxisAngleRotation::new(r);
            let jac = rot.d_apply_d_r(p);
            let h = 1e-6;
            for i in 0..3 {
                let mut rp = r;
                let mut rm = r;
                rp[i] += h;
                rm[i] -= h;
                let fd = (AxisAngleRotation::new(rp).apply(p)
                    - AxisAngleRotation::new(rm).apply(p))
                    / (2.0 * h);
                let col = jac.column(i);
                assert!(
                    (fd - col).norm() <= 1e-5 * (1.0 + fd.norm()),
                    "scale {scale} col {i}: fd {fd:?} vs analytic {col:?}"
                );
            }
        }
    }

    #[test]
    fn disparity_to_depth_examples() {
        let range = DepthRange::default();
        let (a, b) = range.coefficients();
        assert_relative_eq!(b, 0.01);
        assert_relative_eq!(a, 9.99);
        assert_relative_eq!(range.depth_of(0.5), 1.0 / 5.005, max_relative = 1e-12);
        // Limits forced by the configured bounds.
        assert_relative_eq!(range.depth_of(1e-12), 100.0, max_relative = 1e-9);
        assert_relative_eq!(range.depth_of(1.0 - 1e-12), 0.1, max_relative = 1e-9);
    }

    #[test]
    fn disparity_to_depth_rejects_out_of_range() {
        let mut sigma = ScalarMap::zeros(2, 2);
        sigma.data_mut().copy_from_slice(&[0.2, 0.4, 1.0, 0.6]);
        assert!(disparity_to_depth(&sigma, &DepthRange::default()).is_err());
    }

    proptest! {
        #[test]
        fn prop_roundtrip_projection(u in -20.0..220.0f64, v in -20.0..220.0f64, d in 0.5..50.0f64) {
            let k = test_k();
            let back = backproject(Pixel::new(u, v), d, &k).unwrap();
            prop_assert!(back.z == d);
            let fwd = project(back, &k).unwrap();
            prop_assert!((fwd.u - u).abs() < 1e-9);
            prop_assert!((fwd.v - v).abs() < 1e-9);
        }

        #[test]
        fn prop_rodrigues_orthonormal(
            x in -1.0..1.0f64, y in -1.0..1.0f64, z in -1.0..1.0f64,
            scale in 0.0..(10.0 * PI)
        ) {
            let dir = Vector3::new(x, y, z);
            let r = if dir.norm() > 1e-9 { dir.normalize() * scale } else { Vector3::zeros() };
            let rot = rotation_from_axis_angle(r);
            let gram = rot.transpose() * rot;
            prop_assert!((gram - Matrix3::identity()).abs().max() < 1e-9);
            prop_assert!((rot.determinant() - 1.0).abs() < 1e-9);
        }

        #[test]
        fn prop_disparity_monotone_and_bounded(s1 in 1e-6..0.999999f64, s2 in 1e-6..0.999999f64) {
            let range = DepthRange::default();
            let (d1, d2) = (range.depth_of(s1), range.depth_of(s2));
            prop_assert!(d1 > 0.1 && d1 < 100.0);
            if s1 < s2 {
                prop_assert!(d1 > d2);
            }
        }
    }
}
