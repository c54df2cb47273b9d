//! Camera sharing its center with the LiDAR, and the closed-form mapping
//! from a laser ray to an image pixel.
//!
//! Conventions: camera axes `x_c` forward, `y_c` right, `z_c` up; pixel
//! coordinates are real-valued with `i` growing to the right from the left
//! image edge and `j` growing downward from the top edge, so pixel `(k, l)`
//! covers `[k, k+1) × [l, l+1)` and its center sits at `(k + ½, l + ½)`.
//! Zenith is positive downward and azimuth positive to the left, as in
//! [`crate::lidar`]. Under these conventions the boresight lands on the
//! image center and the calibration below agrees exactly with perspective
//! projection of the near-plane point.

use alloc::string::String;
use alloc::vec::Vec;

use thiserror::Error;

use crate::geom::{Pose, Ray, Vec3};
use crate::lidar::{LidarConfig, PointCloud};
use crate::math::{self, FRAC_PI_2};
use crate::scene::{ClassId, Rgb, Scene, Weather};

/// Fog blend distance (m).
pub const FOG_DISTANCE: f64 = 60.0;
pub const RAIN_DARKENING: f64 = 0.7;
/// Primary rays stop here (m).
pub const RENDER_RANGE: f64 = 2000.0;
const AMBIENT: f64 = 0.2;
const FOG_GRAY: Rgb = Rgb::new(0.6, 0.6, 0.62);

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CameraError {
    #[error("camera axes are not orthonormal (error {0:e})")]
    NonOrthonormal(f64),
    #[error("half vertical FOV must be in (0, 90°), got {0} rad")]
    InvalidFov(f64),
    #[error("near-plane distance must be positive, got {0}")]
    InvalidNear(f64),
    #[error("image resolution must be non-zero")]
    InvalidResolution,
    #[error("angles out of range: |zenith| and |azimuth| must be < 90°")]
    AngleOutOfRange,
    #[error("far-point coefficient k must be at least {min}, got {k}")]
    FarCoefficientTooSmall { k: f64, min: f64 },
    #[error("image and cloud come from different scenes ({image:?} vs {cloud:?})")]
    ProvenanceMismatch { image: String, cloud: String },
    #[error("image is {got:?} pixels but the camera renders {expected:?}")]
    ResolutionMismatch { got: (u32, u32), expected: (u32, u32) },
}

/// Pose-independent camera parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraIntrinsics {
    /// Half vertical field of view `γ`, radians.
    pub half_vfov: f64,
    /// Near-plane distance `f`, m.
    pub near: f64,
    /// `R_m`
    pub width: u32,
    /// `R_n`
    pub height: u32,
}

impl Default for CameraIntrinsics {
    fn default() -> Self {
        Self {
            half_vfov: math::to_radians(28.0),
            near: 0.15,
            width: 1024,
            height: 512,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraConfig {
    /// `F_c`, shared with the LiDAR center.
    pub position: Vec3,
    /// `x_c`
    pub forward: Vec3,
    /// `y_c`
    pub right: Vec3,
    /// `z_c`
    pub up: Vec3,
    pub half_vfov: f64,
    pub near: f64,
    pub width: u32,
    pub height: u32,
}

impl CameraConfig {
    pub fn at_pose(intrinsics: CameraIntrinsics, pose: Pose) -> Self {
        Self {
            position: pose.origin,
            forward: pose.forward,
            right: pose.right,
            up: pose.up,
            half_vfov: intrinsics.half_vfov,
            near: intrinsics.near,
            width: intrinsics.width,
            height: intrinsics.height,
        }
    }

    pub fn pose(&self) -> Pose {
        Pose {
            origin: self.position,
            forward: self.forward,
            right: self.right,
            up: self.up,
        }
    }

    pub fn intrinsics(&self) -> CameraIntrinsics {
        CameraIntrinsics {
            half_vfov: self.half_vfov,
            near: self.near,
            width: self.width,
            height: self.height,
        }
    }

    pub fn validate(&self) -> Result<(), CameraError> {
        let err = self.pose().orthonormality_error();
        if !(err <= 1e-9) {
            return Err(CameraError::NonOrthonormal(err));
        }
        if !(self.half_vfov > 0.0 && self.half_vfov < FRAC_PI_2) {
            return Err(CameraError::InvalidFov(self.half_vfov));
        }
        if !(self.near > 0.0) || !self.near.is_finite() {
            return Err(CameraError::InvalidNear(self.near));
        }
        if self.width == 0 || self.height == 0 {
            return Err(CameraError::InvalidResolution);
        }
        Ok(())
    }

    /// Near-plane height `n = 2 f tan γ`.
    pub fn near_height(&self) -> f64 {
        2.0 * self.near * math::tan(self.half_vfov)
    }

    /// Near-plane width `m = n R_m / R_n`.
    pub fn near_width(&self) -> f64 {
        self.near_height() * f64::from(self.width) / f64::from(self.height)
    }

    /// `F_o = F_c + f x_c`.
    pub fn near_center(&self) -> Vec3 {
        self.position + self.forward * self.near
    }

    /// Half horizontal field of view, radians.
    pub fn half_hfov(&self) -> f64 {
        math::atan(math::tan(self.half_vfov) * f64::from(self.width) / f64::from(self.height))
    }

    /// Whether every ray of `lidar` lands inside the image.
    ///
    /// Requires `γ ≥ α/2` and a horizontal half-FOV of at least `β/2`, and
    /// additionally checks the corner rays, whose horizontal image offset
    /// grows with `1 / cos θ`.
    pub fn contains_lidar_fov(&self, lidar: &LidarConfig) -> bool {
        if self.half_vfov < lidar.half_vertical_fov() || self.half_hfov() < math::to_radians(lidar.horizontal_fov / 2.0) {
            return false;
        }
        let (rows, cols) = (lidar.rows(), lidar.cols());
        [(0, 0), (0, cols - 1), (rows - 1, 0), (rows - 1, cols - 1)].iter().all(|&(r, c)| {
            let (i, j) = calibrate_pixel(lidar.zenith(r), lidar.azimuth(c), self);
            (0.0..=f64::from(self.width)).contains(&i) && (0.0..=f64::from(self.height)).contains(&j)
        })
    }

    /// Integer pixel containing real coordinate `(i, j)`, if inside the image.
    pub fn pixel_index(&self, i: f64, j: f64) -> Option<(u32, u32)> {
        let (pi, pj) = (math::floor(i), math::floor(j));
        if pi >= 0.0 && pj >= 0.0 && pi < f64::from(self.width) && pj < f64::from(self.height) {
            Some((pi as u32, pj as u32))
        } else {
            None
        }
    }
}

/// Pixel coordinates of the laser ray `(θ, φ)`:
///
/// `i = (R_m/m)·(f·tanγ·(m/n) − (f/cosθ)·tanφ)`,
/// `j = (R_n/n)·(f·tanγ + f·tanθ)`.
///
/// The result does not depend on `f`. Rays outside the frustum give
/// coordinates outside `[0, R_m] × [0, R_n]`.
///
/// The constant terms reduce to `R_m/2` and `R_n/2` exactly, and are
/// evaluated that way so the boresight lands on the exact image center.
pub fn calibrate_pixel(zenith: f64, azimuth: f64, cam: &CameraConfig) -> (f64, f64) {
    let f = cam.near;
    let n = cam.near_height();
    let m = cam.near_width();
    let (rm, rn) = (f64::from(cam.width), f64::from(cam.height));
    let i = rm / 2.0 - rm / m * (f / math::cos(zenith) * math::tan(azimuth));
    let j = rn / 2.0 + rn / n * (f * math::tan(zenith));
    (i, j)
}

/// Near-plane point `P′` and far point `P_far` of the laser ray `(θ, φ)`:
///
/// `P′ = F_c + f·x_c − (f/cosθ)·tanφ·y_c − f·tanθ·z_c`,
/// `P_far = F_c + k·(P′ − F_c)`.
pub fn laser_endpoints(zenith: f64, azimuth: f64, cam: &CameraConfig, k: f64) -> Result<(Vec3, Vec3), CameraError> {
    if !(math::abs(zenith) < FRAC_PI_2) || !(math::abs(azimuth) < FRAC_PI_2) {
        return Err(CameraError::AngleOutOfRange);
    }
    let f = cam.near;
    let p_prime = cam.position + cam.forward * f - cam.right * (f / math::cos(zenith) * math::tan(azimuth))
        - cam.up * (f * math::tan(zenith));
    let p_far = cam.position + (p_prime - cam.position) * k;
    Ok((p_prime, p_far))
}

/// Default far-point coefficient: ten times what reaching `max_range` needs.
pub fn default_far_coefficient(max_range: f64, near: f64) -> f64 {
    10.0 * max_range / near
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrationResult {
    /// Real-valued `(i, j)`.
    pub pixel: (f64, f64),
    pub p_prime: Vec3,
    pub p_far: Vec3,
    pub k: f64,
}

/// Full calibration of one ray. `k` must be at least `max_range / f` so the
/// far point lies beyond the LiDAR range.
pub fn calibrate(zenith: f64, azimuth: f64, cam: &CameraConfig, k: f64, max_range: f64) -> Result<CalibrationResult, CameraError> {
    let min = max_range / cam.near;
    if !(k >= min) {
        return Err(CameraError::FarCoefficientTooSmall { k, min });
    }
    let (p_prime, p_far) = laser_endpoints(zenith, azimuth, cam, k)?;
    Ok(CalibrationResult {
        pixel: calibrate_pixel(zenith, azimuth, cam),
        p_prime,
        p_far,
        k,
    })
}

/// Perspective projection of a world point; `None` behind the camera.
pub fn project_point(p: Vec3, cam: &CameraConfig) -> Option<(f64, f64)> {
    let d = p - cam.position;
    let u = d.dot(cam.forward);
    if !(u > 0.0) {
        return None;
    }
    let v = d.dot(cam.right);
    let w = d.dot(cam.up);
    let f = cam.near;
    let (n, m) = (cam.near_height(), cam.near_width());
    let i = f64::from(cam.width) / m * (m / 2.0 + f * v / u);
    let j = f64::from(cam.height) / n * (n / 2.0 - f * w / u);
    Some((i, j))
}

/// World-space direction of the primary ray through real pixel `(i, j)`.
pub fn pixel_ray_direction(i: f64, j: f64, cam: &CameraConfig) -> Vec3 {
    let (n, m) = (cam.near_height(), cam.near_width());
    let v = i * m / f64::from(cam.width) - m / 2.0;
    let w = n / 2.0 - j * n / f64::from(cam.height);
    let d = cam.forward * cam.near + cam.right * v + cam.up * w;
    d / d.norm()
}

#[derive(Debug, Clone, PartialEq)]
pub struct RenderedImage {
    pub width: u32,
    pub height: u32,
    /// Row-major RGB.
    pub color: Vec<[u8; 3]>,
    pub semantic: Vec<ClassId>,
    pub instance: Vec<u16>,
    pub scene_id: String,
    pub camera: Pose,
}

impl RenderedImage {
    #[inline]
    fn offset(&self, px: u32, py: u32) -> usize {
        py as usize * self.width as usize + px as usize
    }

    pub fn semantic_at(&self, px: u32, py: u32) -> ClassId {
        self.semantic[self.offset(px, py)]
    }

    pub fn color_at(&self, px: u32, py: u32) -> [u8; 3] {
        self.color[self.offset(px, py)]
    }
}

/// Directional light for a time of day: the sun rises at 6h, peaks at 12h
/// and sets at 18h. Returns (direction toward the light, strength).
pub fn sun(time_of_day: f64) -> (Vec3, f64) {
    let height = math::sin(math::TAU * (time_of_day - 6.0) / 24.0);
    let azimuth = math::PI * time_of_day / 12.0;
    let elevation = FRAC_PI_2 * height.max(0.05);
    let dir = Vec3::new(
        math::cos(elevation) * math::cos(azimuth),
        math::cos(elevation) * math::sin(azimuth),
        math::sin(elevation),
    );
    let strength = if height > 0.0 { 0.15 + 0.85 * height } else { 0.08 };
    (dir, strength)
}

fn sky(strength: f64) -> Rgb {
    Rgb::new(0.03, 0.03, 0.1).lerp(Rgb::new(0.55, 0.7, 0.9), strength.min(1.0))
}

fn to_u8(c: f64) -> u8 {
    math::round(c.clamp(0.0, 1.0) * 255.0) as u8
}

/// Color of one primary ray.
pub fn shade_ray(scene: &Scene, ray: &Ray) -> (Rgb, ClassId, u16) {
    let (light, strength) = sun(scene.time_of_day);
    let (mut color, class, instance, distance) = match scene.cast(ray) {
        Some(h) => {
            let tri = &scene.triangles()[h.hit.triangle_index as usize];
            // Two-sided Lambert: orientation of the normal is irrelevant.
            let lambert = tri.normal().map_or(0.0, |n| math::abs(n.dot(light)));
            let shade = AMBIENT + (1.0 - AMBIENT) * strength * lambert;
            (h.color.scale(shade), h.class_id, h.instance_id, h.hit.distance)
        }
        None => (sky(strength), ClassId::BACKGROUND, 0, f64::INFINITY),
    };
    match scene.weather {
        Weather::Clear => {}
        Weather::Fog => {
            let t = 1.0 - math::exp(-distance / FOG_DISTANCE);
            color = color.lerp(FOG_GRAY.scale(0.4 + 0.6 * strength), t);
        }
        Weather::Rain => color = color.scale(RAIN_DARKENING),
    }
    (color, class, instance)
}

/// Render one row of pixels (`py`).
pub fn render_row(scene: &Scene, cam: &CameraConfig, py: u32) -> Vec<([u8; 3], ClassId, u16)> {
    (0..cam.width)
        .map(|px| {
            let dir = pixel_ray_direction(f64::from(px) + 0.5, f64::from(py) + 0.5, cam);
            let ray = Ray {
                origin: cam.position,
                direction: dir,
                max_range: RENDER_RANGE,
            };
            let (c, class, instance) = shade_ray(scene, &ray);
            ([to_u8(c.r), to_u8(c.g), to_u8(c.b)], class, instance)
        })
        .collect()
}

/// Assemble rows produced by [`render_row`] (in row order) into an image.
pub fn assemble_image(scene: &Scene, cam: &CameraConfig, rows: impl IntoIterator<Item = Vec<([u8; 3], ClassId, u16)>>) -> RenderedImage {
    let n = cam.width as usize * cam.height as usize;
    let mut img = RenderedImage {
        width: cam.width,
        height: cam.height,
        color: Vec::with_capacity(n),
        semantic: Vec::with_capacity(n),
        instance: Vec::with_capacity(n),
        scene_id: scene.name.clone(),
        camera: cam.pose(),
    };
    for row in rows {
        for (c, s, i) in row {
            img.color.push(c);
            img.semantic.push(s);
            img.instance.push(i);
        }
    }
    img
}

/// Ray-cast image with semantic and instance buffers; one ray per pixel center.
pub fn render(scene: &Scene, cam: &CameraConfig) -> Result<RenderedImage, CameraError> {
    cam.validate()?;
    Ok(assemble_image(scene, cam, (0..cam.height).map(|py| render_row(scene, cam, py))))
}

/// Overlay marker color.
pub const OVERLAY_MARK: [u8; 3] = [0, 0, 255];

/// Marks the calibrated pixel of every cloud point whose class is in
/// `classes` and scores how many land on image pixels of the same class.
///
/// The score is 1 when no point is selected. Points whose pixel falls
/// outside the image count as misses.
pub fn overlay_points(
    image: &RenderedImage,
    cloud: &PointCloud,
    classes: &[ClassId],
    cam: &CameraConfig,
) -> Result<(RenderedImage, f64), CameraError> {
    if image.scene_id != cloud.provenance.scene_id {
        return Err(CameraError::ProvenanceMismatch {
            image: image.scene_id.clone(),
            cloud: cloud.provenance.scene_id.clone(),
        });
    }
    if (image.width, image.height) != (cam.width, cam.height) {
        return Err(CameraError::ResolutionMismatch {
            got: (image.width, image.height),
            expected: (cam.width, cam.height),
        });
    }
    let mut out = image.clone();
    let mut selected = 0usize;
    let mut matched = 0usize;
    for (k, p) in cloud.points.iter().enumerate() {
        if !classes.contains(&p.class_id) {
            continue;
        }
        selected += 1;
        let a = cloud.ray_angles(k);
        let (i, j) = calibrate_pixel(a.zenith, a.azimuth, cam);
        if let Some((px, py)) = cam.pixel_index(i, j) {
            let off = out.offset(px, py);
            if image.semantic[off] == p.class_id {
                matched += 1;
            }
            out.color[off] = OVERLAY_MARK;
        }
    }
    let score = if selected == 0 {
        1.0
    } else {
        matched as f64 / selected as f64
    };
    Ok((out, score))
}

/// Palette rendering of the semantic buffer.
pub fn semantic_palette_image(image: &RenderedImage) -> Vec<[u8; 3]> {
    image.semantic.iter().map(|c| c.palette()).collect()
}
