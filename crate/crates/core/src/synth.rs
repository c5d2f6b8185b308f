//! Deterministic synthetic scenes: ray-cast renderer, procedural Lambertian
//! textures, and trajectory generators. Rendered frames, depth maps, and
//! poses serve as ground-truth oracles for the warping and loss stack.

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::{compose, invert, pose_from_axis_angle, Intrinsics, Pose};
use crate::image::{ImageBuffer, ScalarMap};

/// One band-limited sinusoidal component of a surface texture.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TexComponent {
    pub amplitude: f64,
    pub freq_u: f64,
    pub freq_v: f64,
    pub phase: f64,
    /// Extra phase per channel index, giving color variation.
    pub channel_shift: f64,
}

/// Procedural texture: base intensity plus sinusoid components, clamped to
/// the unit interval. Values depend only on the surface point (Lambertian),
/// so brightness constancy holds exactly across views.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Texture {
    pub base: f64,
    pub components: Vec<TexComponent>,
}

impl Texture {
    pub fn constant(value: f64) -> Self {
        Texture { base: value, components: Vec::new() }
    }

    pub fn value(&self, u: f64, v: f64, channel: usize) -> f64 {
        let mut acc = self.base;
        for c in &self.components {
            let arg = 2.0 * std::f64::consts::PI * (c.freq_u * u + c.freq_v * v)
                + c.phase
                + c.channel_shift * channel as f64;
            acc += c.amplitude * arg.sin();
        }
        acc.clamp(0.0, 1.0)
    }

    /// Random texture whose projected spatial frequency stays below
    /// 0.25 cycles/pixel for surfaces near `typical_depth`.
    pub fn random(rng: &mut ChaCha8Rng, fx: f64, typical_depth: f64) -> Self {
        Self::random_band_limited(rng, fx, typical_depth, 0.25)
    }

    /// Random texture with an explicit projected-frequency cap
    /// (cycles/pixel at `typical_depth`). Lower caps widen the photometric
    /// basin of attraction at the cost of weaker gradients.
    pub fn random_band_limited(
        rng: &mut ChaCha8Rng,
        fx: f64,
        typical_depth: f64,
        cycles_per_px: f64,
    ) -> Self {
        let max_freq = cycles_per_px * fx / typical_depth;
        // One dominant low-frequency component keeps the photometric basin
        // unambiguous over multi-pixel misalignments; the mid-frequency
        // components sharpen the minimum.
        let mut components = vec![TexComponent {
            amplitude: rng.gen_range(0.13..0.18),
            freq_u: rng.gen_range(0.10..0.22) * max_freq,
            freq_v: rng.gen_range(0.10..0.22) * max_freq,
            phase: rng.gen_range(0.0..std::f64::consts::TAU),
            channel_shift: rng.gen_range(0.0..2.0),
        }];
        components.extend((0..3).map(|_| TexComponent {
            amplitude: rng.gen_range(0.04..0.09),
            freq_u: rng.gen_range(0.3..1.0) * max_freq,
            freq_v: rng.gen_range(0.3..1.0) * max_freq,
            phase: rng.gen_range(0.0..std::f64::consts::TAU),
            channel_shift: rng.gen_range(0.0..2.0),
        }));
        Texture { base: 0.5, components }
    }
}

/// Scene primitive. Rectangles are two-sided and carry an in-plane (u,v)
/// texture chart; boxes are axis-aligned with per-face charts.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Primitive {
    Rect {
        center: [f64; 3],
        u_axis: [f64; 3],
        v_axis: [f64; 3],
        half_u: f64,
        half_v: f64,
        texture: Texture,
    },
    Box {
        min: [f64; 3],
        max: [f64; 3],
        texture: Texture,
    },
}

/// A renderable scene. The background plane at `z = background_depth`
/// guarantees that every forward ray hits something.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Scene {
    pub primitives: Vec<Primitive>,
    pub background_depth: f64,
    pub background: Texture,
}

struct Hit {
    t: f64,
    u: f64,
    v: f64,
}

fn dot(a: &[f64; 3], b: &Vector3<f64>) -> f64 {
    a[0] * b.x + a[1] * b.y + a[2] * b.z
}

fn intersect_rect(
    center: &[f64; 3],
    u_axis: &[f64; 3],
    v_axis: &[f64; 3],
    half_u: f64,
    half_v: f64,
    origin: &Vector3<f64>,
    dir: &Vector3<f64>,
) -> Option<Hit> {
    let normal = [
        u_axis[1] * v_axis[2] - u_axis[2] * v_axis[1],
        u_axis[2] * v_axis[0] - u_axis[0] * v_axis[2],
        u_axis[0] * v_axis[1] - u_axis[1] * v_axis[0],
    ];
    let denom = dot(&normal, dir);
    if denom.abs() < 1e-12 {
        return None;
    }
    let rel = Vector3::new(center[0] - origin.x, center[1] - origin.y, center[2] - origin.z);
    let t = (normal[0] * rel.x + normal[1] * rel.y + normal[2] * rel.z) / denom;
    if t <= 1e-9 {
        return None;
    }
    let hit = origin + dir * t;
    let local = Vector3::new(hit.x - center[0], hit.y - center[1], hit.z - center[2]);
    let u = dot(u_axis, &local);
    let v = dot(v_axis, &local);
    if u.abs() > half_u || v.abs() > half_v {
        return None;
    }
    Some(Hit { t, u, v })
}

fn intersect_box(
    min: &[f64; 3],
    max: &[f64; 3],
    origin: &Vector3<f64>,
    dir: &Vector3<f64>,
) -> Option<Hit> {
    let mut t_near = f64::NEG_INFINITY;
    let mut t_far = f64::INFINITY;
    let mut near_axis = 0usize;
    for a in 0..3 {
        let (o, d) = (origin[a], dir[a]);
        if d.abs() < 1e-12 {
            if o < min[a] || o > max[a] {
                return None;
            }
            continue;
        }
        let mut t0 = (min[a] - o) / d;
        let mut t1 = (max[a] - o) / d;
        if t0 > t1 {
            std::mem::swap(&mut t0, &mut t1);
        }
        if t0 > t_near {
            t_near = t0;
            near_axis = a;
        }
        t_far = t_far.min(t1);
        if t_near > t_far {
            return None;
        }
    }
    if t_near <= 1e-9 {
        return None;
    }
    let hit = origin + dir * t_near;
    // Texture chart: the two coordinates orthogonal to the entry face.
    let (ua, va) = match near_axis {
        0 => (1, 2),
        1 => (0, 2),
        _ => (0, 1),
    };
    Some(Hit { t: t_near, u: hit[ua], v: hit[va] })
}

impl Scene {
    fn trace(&self, origin: &Vector3<f64>, dir: &Vector3<f64>) -> (f64, f64, f64, &Texture) {
        let mut best: Option<(Hit, &Texture)> = None;
        for prim in &self.primitives {
            let hit = match prim {
                Primitive::Rect { center, u_axis, v_axis, half_u, half_v, .. } => {
                    intersect_rect(center, u_axis, v_axis, *half_u, *half_v, origin, dir)
                }
                Primitive::Box { min, max, .. } => intersect_box(min, max, origin, dir),
            };
            if let Some(h) = hit {
                let tex = match prim {
                    Primitive::Rect { texture, .. } | Primitive::Box { texture, .. } => texture,
                };
                if best.as_ref().map_or(true, |(b, _)| h.t < b.t) {
                    best = Some((h, tex));
                }
            }
        }
        // Background plane z = background_depth.
        if dir.z > 1e-12 {
            let t = (self.background_depth - origin.z) / dir.z;
            if t > 1e-9 && best.as_ref().map_or(true, |(b, _)| t < b.t) {
                let hit = origin + dir * t;
                return (t, hit.x, hit.y, &self.background);
            }
        }
        match best {
            Some((h, tex)) => (h.t, h.u, h.v, tex),
            // A ray that misses everything (looking away from the scene):
            // report the background depth with a flat intensity.
            None => (self.background_depth, 0.0, 0.0, &self.background),
        }
    }
}

/// Ray-casts the scene from a camera-to-world pose. Depth is the camera-frame
/// z of the nearest intersection, strictly positive by construction.
pub fn render(
    scene: &Scene,
    camera_to_world: &Pose,
    k: &Intrinsics,
    height: usize,
    width: usize,
) -> Result<(ImageBuffer, ScalarMap)> {
    let origin = camera_to_world.translation;
    let mut image = vec![0.0; height * width * 3];
    let mut depth = ScalarMap::zeros(height, width);
    for i in 0..height {
        for j in 0..width {
            // Unnormalized ray with camera z component 1, so the ray parameter
            // equals the camera-frame depth.
            let dir_cam = Vector3::new((j as f64 - k.cx) / k.fx, (i as f64 - k.cy) / k.fy, 1.0);
            let dir = camera_to_world.rotation * dir_cam;
            let (t, u, v, tex) = scene.trace(&origin, &dir);
            depth.set(i, j, t);
            for c in 0..3 {
                image[(i * width + j) * 3 + c] = tex.value(u, v, c);
            }
        }
    }
    Ok((ImageBuffer::from_computed(height, width, 3, image), depth))
}

/// Trajectory generator kinds, all producing camera-to-world poses.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TrajectoryKind {
    Static,
    ConstantVelocity { velocity: [f64; 3] },
    ConstantTurn { velocity: [f64; 3], yaw_rate: f64 },
    /// Explicit per-frame poses (axis-angle + translation, camera-to-world).
    Explicit { poses: Vec<PoseSpec> },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PoseSpec {
    pub axis_angle: [f64; 3],
    pub translation: [f64; 3],
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrajectorySpec {
    #[serde(flatten)]
    pub kind: TrajectoryKind,
    pub steps: usize,
}

/// Ordered camera-to-world poses at uniform timesteps.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub poses: Vec<Pose>,
}

impl TrajectorySpec {
    pub fn generate(&self) -> Result<Trajectory> {
        let poses = match &self.kind {
            TrajectoryKind::Static => vec![Pose::identity(); self.steps],
            TrajectoryKind::ConstantVelocity { velocity } => {
                let v = Vector3::new(velocity[0], velocity[1], velocity[2]);
                (0..self.steps)
                    .map(|t| Pose {
                        rotation: nalgebra::Matrix3::identity(),
                        translation: v * t as f64,
                    })
                    .collect()
            }
            TrajectoryKind::ConstantTurn { velocity, yaw_rate } => {
                let v = Vector3::new(velocity[0], velocity[1], velocity[2]);
                let mut poses = Vec::with_capacity(self.steps);
                let mut position = Vector3::zeros();
                for t in 0..self.steps {
                    let yaw = yaw_rate * t as f64;
                    let pose = pose_from_axis_angle(Vector3::new(0.0, yaw, 0.0), position)?;
                    poses.push(pose);
                    position += pose.rotation * v;
                }
                poses
            }
            TrajectoryKind::Explicit { poses } => poses
                .iter()
                .map(|p| {
                    pose_from_axis_angle(
                        Vector3::new(p.axis_angle[0], p.axis_angle[1], p.axis_angle[2]),
                        Vector3::new(p.translation[0], p.translation[1], p.translation[2]),
                    )
                })
                .collect::<Result<_>>()?,
        };
        if poses.is_empty() {
            return Err(Error::domain("trajectory must have at least one pose"));
        }
        Ok(Trajectory { poses })
    }
}

/// One rendered frame with its ground truth.
#[derive(Debug, Clone)]
pub struct FrameData {
    pub image: ImageBuffer,
    pub depth: ScalarMap,
    pub pose_c2w: Pose,
}

/// A rendered trajectory; the last frame is the warp target.
#[derive(Debug, Clone)]
pub struct SequenceData {
    pub frames: Vec<FrameData>,
    /// `rel_to_last[i]` maps points in the last (target) camera frame into
    /// frame i's camera frame.
    pub rel_to_last: Vec<Pose>,
}

impl SequenceData {
    pub fn target(&self) -> &FrameData {
        self.frames.last().expect("non-empty sequence")
    }

    pub fn context_frames(&self) -> &[FrameData] {
        &self.frames[..self.frames.len() - 1]
    }
}

/// Relative pose mapping points in `target`'s camera frame into `source`'s.
pub fn relative_pose(source_c2w: &Pose, target_c2w: &Pose) -> Pose {
    compose(&invert(source_c2w), target_c2w)
}

/// Renders every pose of the trajectory and computes relative poses to the
/// final (target) frame.
pub fn make_sequence(
    scene: &Scene,
    trajectory: &Trajectory,
    k: &Intrinsics,
    height: usize,
    width: usize,
) -> Result<SequenceData> {
    if trajectory.poses.len() < 2 {
        return Err(Error::domain("sequence needs at least one context frame plus a target"));
    }
    let mut frames = Vec::with_capacity(trajectory.poses.len());
    for pose in &trajectory.poses {
        let (image, depth) = render(scene, pose, k, height, width)?;
        frames.push(FrameData { image, depth, pose_c2w: *pose });
    }
    let target_pose = frames.last().unwrap().pose_c2w;
    let rel_to_last = frames
        .iter()
        .map(|f| relative_pose(&f.pose_c2w, &target_pose))
        .collect();
    Ok(SequenceData { frames, rel_to_last })
}

/// Camera block of a scene file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CameraSpec {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub height: usize,
    pub width: usize,
}

impl CameraSpec {
    pub fn intrinsics(&self) -> Result<Intrinsics> {
        Intrinsics::new(self.fx, self.fy, self.cx, self.cy)
    }
}

/// Complete scene description as stored on disk.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SceneFile {
    pub seed: u64,
    pub camera: CameraSpec,
    pub scene: Scene,
    pub trajectory: TrajectorySpec,
}

impl SceneFile {
    pub fn load(path: impl AsRef<Path>) -> Result<SceneFile> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| Error::Parse {
            path: path.display().to_string(),
            what: e.to_string(),
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let json = serde_json::to_string_pretty(self)?;
        std::fs::write(path, json + "\n")?;
        Ok(())
    }

    pub fn render_sequence(&self) -> Result<SequenceData> {
        let k = self.camera.intrinsics()?;
        let trajectory = self.trajectory.generate()?;
        make_sequence(&self.scene, &trajectory, &k, self.camera.height, self.camera.width)
    }
}

/// Writes poses as CSV, one flattened 3×4 row-major `[R|t]` matrix per line.
pub fn write_pose_csv(path: impl AsRef<Path>, poses: &[Pose]) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    for p in poses {
        let r = &p.rotation;
        let t = &p.translation;
        let row: Vec<String> = (0..3)
            .flat_map(|i| {
                [
                    format!("{}", r[(i, 0)]),
                    format!("{}", r[(i, 1)]),
                    format!("{}", r[(i, 2)]),
                    format!("{}", t[i]),
                ]
            })
            .collect();
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}

/// Reads poses written by [`write_pose_csv`], validating orthonormality.
pub fn read_pose_csv(path: impl AsRef<Path>) -> Result<Vec<Pose>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path)?;
    let mut poses = Vec::new();
    for (lineno, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let vals: Vec<f64> = line
            .split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Parse {
                path: path.display().to_string(),
                what: format!("line {}: {e}", lineno + 1),
            })?;
        if vals.len() != 12 {
            return Err(Error::Parse {
                path: path.display().to_string(),
                what: format!("line {}: expected 12 values, got {}", lineno + 1, vals.len()),
            });
        }
        let rotation = nalgebra::Matrix3::new(
            vals[0], vals[1], vals[2], vals[4], vals[5], vals[6], vals[8], vals[9], vals[10],
        );
        let translation = Vector3::new(vals[3], vals[7], vals[11]);
        poses.push(Pose::new(rotation, translation)?);
    }
    Ok(poses)
}

/// Builders for the bundled benchmark scenes.
pub mod presets {
    use super::*;

    /// Desk-scale camera mirroring a wide automotive aspect ratio.
    fn desk_camera(height: usize, width: usize) -> CameraSpec {
        CameraSpec {
            fx: width as f64 / 2.0,
            fy: width as f64 / 2.0,
            cx: width as f64 / 2.0,
            cy: height as f64 / 2.0,
            height,
            width,
        }
    }

    fn wall(z: f64, texture: Texture) -> Primitive {
        Primitive::Rect {
            center: [0.0, 0.0, z],
            u_axis: [1.0, 0.0, 0.0],
            v_axis: [0.0, 1.0, 0.0],
            half_u: 50.0 * z,
            half_v: 50.0 * z,
            texture,
        }
    }

    /// Fronto-parallel textured plane, laterally translating camera.
    pub fn plane(seed: u64) -> SceneFile {
        let camera = desk_camera(64, 192);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let tex = Texture::random_band_limited(&mut rng, camera.fx, 0.24, 0.12);
        SceneFile {
            seed,
            camera,
            scene: Scene {
                primitives: vec![wall(0.225, tex)],
                background_depth: 500.0,
                background: Texture::constant(0.5),
            },
            trajectory: TrajectorySpec {
                kind: TrajectoryKind::ConstantVelocity { velocity: [0.0035, 0.0009, 0.001] },
                steps: 3,
            },
        }
    }

    /// Plane tilted about both in-plane axes.
    pub fn tilted(seed: u64) -> SceneFile {
        let camera = desk_camera(64, 192);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let tex = Texture::random(&mut rng, camera.fx, 0.3);
        let tilt = crate::geometry::rotation_from_axis_angle(Vector3::new(0.25, 0.35, 0.0));
        let u = tilt * Vector3::new(1.0, 0.0, 0.0);
        let v = tilt * Vector3::new(0.0, 1.0, 0.0);
        SceneFile {
            seed,
            camera,
            scene: Scene {
                primitives: vec![Primitive::Rect {
                    center: [0.0, 0.0, 0.26],
                    u_axis: [u.x, u.y, u.z],
                    v_axis: [v.x, v.y, v.z],
                    half_u: 12.0,
                    half_v: 12.0,
                    texture: tex,
                }],
                background_depth: 500.0,
                background: Texture::constant(0.5),
            },
            trajectory: TrajectorySpec {
                kind: TrajectoryKind::ConstantVelocity { velocity: [0.003, 0.0012, 0.0008] },
                steps: 3,
            },
        }
    }

    /// Plane with a box occluder in front; the bundled recovery benchmark.
    pub fn plane_box(seed: u64) -> SceneFile {
        let camera = desk_camera(64, 192);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let wall_tex = Texture::random_band_limited(&mut rng, camera.fx, 0.24, 0.11);
        let box_a = Texture::random_band_limited(&mut rng, camera.fx, 0.18, 0.11);
        let box_b = Texture::random_band_limited(&mut rng, camera.fx, 0.19, 0.11);
        let box_c = Texture::random_band_limited(&mut rng, camera.fx, 0.19, 0.11);
        // Several boxes at distinct depths: the 1/depth variation separates
        // translational flow from the rotational flow it otherwise mimics.
        SceneFile {
            seed,
            camera,
            scene: Scene {
                primitives: vec![
                    wall(0.225, wall_tex),
                    Primitive::Box {
                        min: [-0.045, -0.020, 0.175],
                        max: [0.012, 0.028, 0.215],
                        texture: box_a,
                    },
                    Primitive::Box {
                        min: [0.040, -0.030, 0.185],
                        max: [0.082, 0.006, 0.207],
                        texture: box_b,
                    },
                    Primitive::Box {
                        min: [-0.088, 0.002, 0.190],
                        max: [-0.050, 0.030, 0.212],
                        texture: box_c,
                    },
                ],
                background_depth: 500.0,
                background: Texture::constant(0.5),
            },
            trajectory: TrajectorySpec {
                kind: TrajectoryKind::ConstantVelocity { velocity: [0.0042, 0.0018, 0.0012] },
                steps: 3,
            },
        }
    }

    /// Plane textured everywhere except a horizontal constant band; exposes
    /// the gradient-locality weakness of single-scale supervision.
    pub fn textureless_band(seed: u64) -> SceneFile {
        let camera = desk_camera(32, 96);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let tex = Texture::random_band_limited(&mut rng, camera.fx, 0.24, 0.12);
        let z = 0.225;
        // Band covering roughly the middle third of the image rows.
        let band_half = (camera.height as f64 / 6.0) * z / camera.fy;
        SceneFile {
            seed,
            camera,
            scene: Scene {
                primitives: vec![
                    wall(z, tex),
                    Primitive::Rect {
                        center: [0.0, 0.0, z - 1e-4],
                        u_axis: [1.0, 0.0, 0.0],
                        v_axis: [0.0, 1.0, 0.0],
                        half_u: 50.0 * z,
                        half_v: band_half,
                        texture: Texture::constant(0.5),
                    },
                ],
                background_depth: 500.0,
                background: Texture::constant(0.5),
            },
            trajectory: TrajectorySpec {
                kind: TrajectoryKind::ConstantVelocity { velocity: [0.0035, 0.0009, 0.0008] },
                steps: 3,
            },
        }
    }

    /// Camera parked for the later context frames: the first frame carries the
    /// parallax, the nearest one is almost static relative to the target.
    pub fn static_segment(seed: u64) -> SceneFile {
        let camera = desk_camera(32, 96);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let wall_tex = Texture::random_band_limited(&mut rng, camera.fx, 0.24, 0.12);
        let box_tex = Texture::random_band_limited(&mut rng, camera.fx, 0.17, 0.12);
        SceneFile {
            seed,
            camera,
            scene: Scene {
                primitives: vec![
                    wall(0.225, wall_tex),
                    Primitive::Box {
                        min: [-0.030, -0.016, 0.160],
                        max: [0.006, 0.020, 0.200],
                        texture: box_tex,
                    },
                ],
                background_depth: 500.0,
                background: Texture::constant(0.5),
            },
            trajectory: TrajectorySpec {
                kind: TrajectoryKind::Explicit {
                    poses: vec![
                        PoseSpec { axis_angle: [0.0; 3], translation: [-0.0068, -0.0014, -0.0010] },
                        PoseSpec { axis_angle: [0.0; 3], translation: [-0.0004, -0.0001, 0.0] },
                        PoseSpec { axis_angle: [0.0; 3], translation: [0.0; 3] },
                    ],
                },
                steps: 3,
            },
        }
    }

    /// Entirely static trajectory over the plane+box scene.
    pub fn static_scene(seed: u64) -> SceneFile {
        let mut file = plane_box(seed);
        file.trajectory = TrajectorySpec { kind: TrajectoryKind::Static, steps: 3 };
        file
    }

    /// Preset lookup by name.
    pub fn by_name(name: &str, seed: u64) -> Option<SceneFile> {
        match name {
            "plane" => Some(plane(seed)),
            "tilted" => Some(tilted(seed)),
            "plane_box" => Some(plane_box(seed)),
            "textureless_band" => Some(textureless_band(seed)),
            "static_segment" => Some(static_segment(seed)),
            "static" => Some(static_scene(seed)),
            _ => None,
        }
    }

    pub const NAMES: &[&str] = &[
        "plane",
        "tilted",
        "plane_box",
        "textureless_band",
        "static_segment",
        "static",
    ];
}
