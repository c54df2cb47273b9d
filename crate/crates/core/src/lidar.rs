//! The virtual LiDAR.
//!
//! Angle conventions, shared with [`crate::camera`]:
//! * zenith `θ` is positive below the sensor's horizontal plane,
//! * azimuth `φ` is positive toward the sensor's left,
//! * a ray's sensor-frame direction is `normalize(1, -tan φ / cos θ, -tan θ)`
//!   in (forward, right, up) coordinates, i.e. the direction through the
//!   near-plane point the calibration formulas assign to `(θ, φ)`.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use thiserror::Error;

use crate::geom::{Pose, Ray, Vec3};
use crate::math::{self, FRAC_PI_2};
use crate::scene::{ClassId, GridCell, Scene};

/// Slack used when counting rows/columns so `FOV / res` landing a hair
/// below an integer does not lose the last ray.
const GRID_SLACK: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LidarError {
    #[error("invalid lidar config: {0}")]
    InvalidConfig(&'static str),
    #[error("ray angles out of range (zenith {zenith} rad, azimuth {azimuth} rad): |angle| must be < 90°")]
    AngleOutOfRange { zenith: f64, azimuth: f64 },
    #[error("range image config does not match the cloud's config")]
    ConfigMismatch,
    #[error("point at row {row}, col {col} is outside the {rows}x{cols} grid")]
    IndexOutOfGrid { row: u32, col: u32, rows: u32, cols: u32 },
}

/// Scan pattern. Angles in degrees as they appear on sensor spec sheets.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LidarConfig {
    pub vertical_fov: f64,
    pub vertical_res: f64,
    pub horizontal_fov: f64,
    pub horizontal_res: f64,
    /// Positive tilts the fan downward.
    pub pitch: f64,
    /// m
    pub max_range: f64,
    /// Hz; only used to space poses along an ego path.
    pub frequency: f64,
    /// Standard deviation of zero-mean Gaussian range noise (m). 0 disables it.
    pub range_noise: f64,
    pub noise_seed: u64,
}

impl Default for LidarConfig {
    /// 64 × 512 front-facing pattern over a 26° × 90° field of view.
    fn default() -> Self {
        Self {
            vertical_fov: 26.0,
            vertical_res: 26.0 / 63.0,
            horizontal_fov: 90.0,
            horizontal_res: 90.0 / 511.0,
            pitch: 0.0,
            max_range: 80.0,
            frequency: 10.0,
            range_noise: 0.0,
            noise_seed: 0,
        }
    }
}

impl LidarConfig {
    pub fn validate(&self) -> Result<(), LidarError> {
        let finite = [
            self.vertical_fov,
            self.vertical_res,
            self.horizontal_fov,
            self.horizontal_res,
            self.pitch,
            self.max_range,
            self.frequency,
            self.range_noise,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !finite {
            return Err(LidarError::InvalidConfig("all parameters must be finite"));
        }
        if !(self.vertical_res > 0.0 && self.vertical_res <= self.vertical_fov) {
            return Err(LidarError::InvalidConfig("need 0 < vertical_res <= vertical_fov"));
        }
        if !(self.horizontal_res > 0.0 && self.horizontal_res <= self.horizontal_fov) {
            return Err(LidarError::InvalidConfig("need 0 < horizontal_res <= horizontal_fov"));
        }
        if self.horizontal_fov > 360.0 {
            return Err(LidarError::InvalidConfig("horizontal_fov must be <= 360"));
        }
        // The tangent-plane direction model is singular at ±90°.
        if self.horizontal_fov >= 180.0 {
            return Err(LidarError::InvalidConfig("horizontal_fov must be < 180 for the tangent-plane ray model"));
        }
        if math::abs(self.pitch) + self.vertical_fov / 2.0 >= 90.0 {
            return Err(LidarError::InvalidConfig("|pitch| + vertical_fov/2 must be < 90"));
        }
        if !(self.max_range > 0.0) {
            return Err(LidarError::InvalidConfig("max_range must be positive"));
        }
        if !(self.frequency > 0.0) {
            return Err(LidarError::InvalidConfig("frequency must be positive"));
        }
        if self.range_noise < 0.0 {
            return Err(LidarError::InvalidConfig("range_noise must be >= 0"));
        }
        Ok(())
    }

    pub fn rows(&self) -> u32 {
        math::floor(self.vertical_fov / self.vertical_res + GRID_SLACK) as u32 + 1
    }

    pub fn cols(&self) -> u32 {
        math::floor(self.horizontal_fov / self.horizontal_res + GRID_SLACK) as u32 + 1
    }

    pub fn ray_count(&self) -> usize {
        self.rows() as usize * self.cols() as usize
    }

    /// Half the vertical field of view, radians.
    pub fn half_vertical_fov(&self) -> f64 {
        math::to_radians(self.vertical_fov / 2.0)
    }

    /// Zenith of row `r`, radians.
    pub fn zenith(&self, row: u32) -> f64 {
        math::to_radians(self.pitch - self.vertical_fov / 2.0 + f64::from(row) * self.vertical_res)
    }

    /// Azimuth of column `c`, radians.
    pub fn azimuth(&self, col: u32) -> f64 {
        math::to_radians(-self.horizontal_fov / 2.0 + f64::from(col) * self.horizontal_res)
    }

    pub fn angles(&self, row: u32, col: u32) -> RayAngles {
        RayAngles {
            zenith: self.zenith(row),
            azimuth: self.azimuth(col),
            row,
            col,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RayAngles {
    /// Radians, positive below the horizontal plane.
    pub zenith: f64,
    /// Radians, positive toward the left.
    pub azimuth: f64,
    pub row: u32,
    pub col: u32,
}

/// Row-major ray grid, endpoints inclusive:
/// `θ_r = σ - α/2 + r·θ_res`, `φ_c = -β/2 + c·φ_res`.
pub fn generate_ray_grid(config: &LidarConfig) -> Vec<RayAngles> {
    let (rows, cols) = (config.rows(), config.cols());
    let mut out = Vec::with_capacity(rows as usize * cols as usize);
    for row in 0..rows {
        for col in 0..cols {
            out.push(config.angles(row, col));
        }
    }
    out
}

/// Sensor-frame direction for `(θ, φ)` rotated into the world by `pose`.
pub fn angles_to_direction(zenith: f64, azimuth: f64, pose: &Pose) -> Result<Vec3, LidarError> {
    if !(math::abs(zenith) < FRAC_PI_2) || !(math::abs(azimuth) < FRAC_PI_2) {
        return Err(LidarError::AngleOutOfRange { zenith, azimuth });
    }
    let local = Vec3::new(1.0, -math::tan(azimuth) / math::cos(zenith), -math::tan(zenith));
    // Non-zero: the forward component is 1.
    let local = local / local.norm();
    Ok(pose.dir_to_world(local))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LabeledPoint {
    /// Sensor frame (forward, right, up), meters.
    pub xyz: Vec3,
    pub range: f64,
    pub row: u32,
    pub col: u32,
    pub class_id: ClassId,
    pub instance_id: u16,
}

/// Where a cloud came from.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Provenance {
    pub scene_id: String,
    pub cell: Option<GridCell>,
    pub background_id: Option<u32>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    /// Row-major by (row, col); at most one point per ray.
    pub points: Vec<LabeledPoint>,
    pub config: LidarConfig,
    pub pose: Pose,
    pub provenance: Provenance,
}

impl PointCloud {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn labels(&self) -> Vec<ClassId> {
        self.points.iter().map(|p| p.class_id).collect()
    }

    /// Angles of the ray that produced point `k`.
    pub fn ray_angles(&self, k: usize) -> RayAngles {
        let p = &self.points[k];
        self.config.angles(p.row, p.col)
    }
}

/// Casts rays of one scan against a scene.
pub struct Scanner<'a> {
    scene: &'a Scene,
    config: LidarConfig,
    pose: Pose,
}

impl<'a> Scanner<'a> {
    pub fn new(scene: &'a Scene, config: &LidarConfig, pose: Pose) -> Result<Self, LidarError> {
        config.validate()?;
        if !(pose.orthonormality_error() < 1e-9) {
            return Err(LidarError::InvalidConfig("sensor pose axes are not orthonormal"));
        }
        Ok(Self {
            scene,
            config: *config,
            pose,
        })
    }

    pub fn config(&self) -> &LidarConfig {
        &self.config
    }

    pub fn pose(&self) -> Pose {
        self.pose
    }

    /// The point produced by one ray, if it returns.
    pub fn cast(&self, ray: &RayAngles) -> Option<LabeledPoint> {
        // Grid angles are validated through the config.
        let dir = angles_to_direction(ray.zenith, ray.azimuth, &self.pose).ok()?;
        let world_ray = Ray {
            origin: self.pose.origin,
            direction: dir,
            max_range: self.config.max_range,
        };
        let hit = self.scene.cast(&world_ray)?;
        let mut range = hit.hit.distance;
        let mut xyz = self.pose.point_to_local(hit.hit.point);
        if self.config.range_noise > 0.0 {
            range += self.noise(ray);
            if !(range > 0.0 && range <= self.config.max_range) {
                return None;
            }
            xyz = self.pose.dir_to_local(dir) * range;
        }
        Some(LabeledPoint {
            xyz,
            range,
            row: ray.row,
            col: ray.col,
            class_id: hit.class_id,
            instance_id: hit.instance_id,
        })
    }

    /// Noise sample for one ray; seeded by ray index so it does not depend
    /// on the order rays are cast in.
    fn noise(&self, ray: &RayAngles) -> f64 {
        let index = u64::from(ray.row) * u64::from(self.config.cols()) + u64::from(ray.col);
        let mut rng = ChaCha8Rng::seed_from_u64(self.config.noise_seed);
        rng.set_stream(index);
        match Normal::new(0.0, self.config.range_noise) {
            Ok(n) => n.sample(&mut rng),
            Err(_) => 0.0,
        }
    }

    /// Casts `rays` in order.
    pub fn cast_all(&self, rays: &[RayAngles]) -> Vec<LabeledPoint> {
        rays.iter().filter_map(|r| self.cast(r)).collect()
    }

    pub fn into_cloud(&self, points: Vec<LabeledPoint>) -> PointCloud {
        PointCloud {
            points,
            config: self.config,
            pose: self.pose,
            provenance: Provenance {
                scene_id: self.scene.name.clone(),
                ..Provenance::default()
            },
        }
    }
}

/// Sequential scan: one first-hit query per grid ray, misses dropped.
pub fn scan(scene: &Scene, config: &LidarConfig, pose: Pose) -> Result<PointCloud, LidarError> {
    let scanner = Scanner::new(scene, config, pose)?;
    let rays = generate_ray_grid(config);
    let points = scanner.cast_all(&rays);
    Ok(scanner.into_cloud(points))
}

/// Dense front-view raster of a cloud. Misses are range 0, class 0.
#[derive(Debug, Clone, PartialEq)]
pub struct RangeImage {
    pub rows: u32,
    pub cols: u32,
    pub range: Vec<f64>,
    pub class_id: Vec<ClassId>,
}

impl RangeImage {
    pub fn at(&self, row: u32, col: u32) -> (f64, ClassId) {
        let k = row as usize * self.cols as usize + col as usize;
        (self.range[k], self.class_id[k])
    }
}

pub fn range_image(cloud: &PointCloud, config: &LidarConfig) -> Result<RangeImage, LidarError> {
    if cloud.config != *config {
        return Err(LidarError::ConfigMismatch);
    }
    let (rows, cols) = (config.rows(), config.cols());
    let n = rows as usize * cols as usize;
    let mut img = RangeImage {
        rows,
        cols,
        range: vec![0.0; n],
        class_id: vec![ClassId::BACKGROUND; n],
    };
    for p in &cloud.points {
        if p.row >= rows || p.col >= cols {
            return Err(LidarError::IndexOutOfGrid {
                row: p.row,
                col: p.col,
                rows,
                cols,
            });
        }
        let k = p.row as usize * cols as usize + p.col as usize;
        img.range[k] = p.range;
        img.class_id[k] = p.class_id;
    }
    Ok(img)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Triangle;
    use crate::scene::{Background, BackgroundElement, ElementKind, Extent, Rgb};

    fn cfg(vfov: f64, vres: f64, hfov: f64, hres: f64, pitch: f64) -> LidarConfig {
        LidarConfig {
            vertical_fov: vfov,
            vertical_res: vres,
            horizontal_fov: hfov,
            horizontal_res: hres,
            pitch,
            ..LidarConfig::default()
        }
    }

    #[test]
    fn grid_counts_and_endpoints() {
        let c = cfg(26.0, 2.0, 90.0, 0.5, 6.0);
        let grid = generate_ray_grid(&c);
        assert_eq!((c.rows(), c.cols()), (14, 181));
        assert_eq!(grid.len(), 2534);
        let (lo, hi) = (grid[0].zenith, grid[grid.len() - 1].zenith);
        assert!((math::to_degrees(lo) + 7.0).abs() < 1e-12);
        assert!((math::to_degrees(hi) - 19.0).abs() < 1e-12);
        assert!((math::to_degrees(grid[180].azimuth) - 45.0).abs() < 1e-12);
        // Row-major.
        assert_eq!((grid[181].row, grid[181].col), (1, 0));
    }

    #[test]
    fn fov_equal_to_resolution_gives_two_rows() {
        assert_eq!(cfg(2.0, 2.0, 90.0, 1.0, 0.0).rows(), 2);
    }

    #[test]
    fn default_pattern_is_64_by_512() {
        let c = LidarConfig::default();
        assert_eq!((c.rows(), c.cols()), (64, 512));
        c.validate().unwrap();
    }

    #[test]
    fn level_fan_is_symmetric() {
        let c = cfg(26.0, 2.0, 90.0, 3.0, 0.0);
        let rows = c.rows();
        for r in 0..rows {
            let a = c.zenith(r);
            let b = c.zenith(rows - 1 - r);
            assert!((a + b).abs() < 1e-12);
        }
    }

    #[test]
    fn config_validation() {
        assert!(cfg(26.0, 30.0, 90.0, 1.0, 0.0).validate().is_err());
        assert!(cfg(26.0, 1.0, 90.0, 0.0, 0.0).validate().is_err());
        assert!(cfg(26.0, 1.0, 200.0, 1.0, 0.0).validate().is_err());
        assert!(cfg(26.0, 1.0, 90.0, 1.0, 80.0).validate().is_err());
        let mut c = LidarConfig::default();
        c.max_range = 0.0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn direction_examples() {
        let id = Pose::identity();
        assert_eq!(angles_to_direction(0.0, 0.0, &id).unwrap(), Vec3::X);
        let d = angles_to_direction(math::to_radians(45.0), 0.0, &id).unwrap();
        let h = core::f64::consts::FRAC_1_SQRT_2;
        assert!((d - Vec3::new(h, 0.0, -h)).norm() < 1e-15);
        // Independently evaluated with Python's math module.
        let d = angles_to_direction(math::to_radians(10.0), math::to_radians(5.0), &id).unwrap();
        let expected = Vec3::new(0.981060262190407, -0.08715574274765818, -0.17298739392508947);
        assert!((d - expected).norm() < 1e-12, "{d:?}");
        assert!(angles_to_direction(FRAC_PI_2, 0.0, &id).is_err());
        assert!(angles_to_direction(0.0, -FRAC_PI_2, &id).is_err());
    }

    fn wall_scene(x: f64) -> Scene {
        let a = Vec3::new(x, -100.0, -100.0);
        let b = Vec3::new(x, 100.0, -100.0);
        let c = Vec3::new(x, 100.0, 100.0);
        let d = Vec3::new(x, -100.0, 100.0);
        let wall = BackgroundElement {
            kind: ElementKind::Wall,
            color: Rgb::new(0.5, 0.5, 0.5),
            triangles: Vec::from([Triangle::new(a, b, c, 0), Triangle::new(a, c, d, 0)]),
        };
        let extent = Extent {
            x: (-1e3, 1e3),
            y: (-1e3, 1e3),
        };
        Scene::new(Background::custom(1, "wall", Vec::from([wall]), extent))
    }

    #[test]
    fn boresight_hits_wall() {
        let c = cfg(2.0, 2.0, 2.0, 1.0, 0.0);
        let cloud = scan(&wall_scene(10.0), &c, Pose::identity()).unwrap();
        assert_eq!(cloud.len(), c.ray_count());
        let p = cloud.points.iter().find(|p| p.row == 0 && p.col == 1).unwrap();
        // Row 0 is θ = -1°; row/col chosen so φ = 0.
        assert!((p.range * math::cos(math::to_radians(1.0)) - 10.0).abs() < 1e-9);
        let c0 = cfg(0.5, 0.5, 2.0, 1.0, 0.25);
        let cloud = scan(&wall_scene(10.0), &c0, Pose::identity()).unwrap();
        let p = cloud.points.iter().find(|p| p.row == 0 && p.col == 1).unwrap();
        assert!((p.xyz - Vec3::new(10.0, 0.0, 0.0)).norm() < 1e-12);
        assert_eq!(p.range, 10.0);
        assert_eq!(p.class_id, ClassId::BACKGROUND);
    }

    #[test]
    fn empty_scene_gives_empty_cloud() {
        let cloud = scan(&Scene::empty(), &LidarConfig::default(), Pose::identity()).unwrap();
        assert!(cloud.is_empty());
        let img = range_image(&cloud, &cloud.config).unwrap();
        assert_eq!((img.rows, img.cols), (64, 512));
        assert!(img.range.iter().all(|&r| r == 0.0));
    }

    #[test]
    fn range_image_rejects_other_config() {
        let cloud = scan(&Scene::empty(), &LidarConfig::default(), Pose::identity()).unwrap();
        let mut other = LidarConfig::default();
        other.max_range = 50.0;
        assert_eq!(range_image(&cloud, &other).unwrap_err(), LidarError::ConfigMismatch);
    }

    #[test]
    fn noise_is_seeded_and_order_independent() {
        let mut c = cfg(4.0, 1.0, 10.0, 1.0, 0.0);
        c.range_noise = 0.05;
        c.noise_seed = 7;
        let scene = wall_scene(20.0);
        let a = scan(&scene, &c, Pose::identity()).unwrap();
        let scanner = Scanner::new(&scene, &c, Pose::identity()).unwrap();
        let mut rays = generate_ray_grid(&c);
        rays.reverse();
        let mut b = scanner.cast_all(&rays);
        b.reverse();
        assert_eq!(a.points, b);
        let noiseless = scan(&scene, &cfg(4.0, 1.0, 10.0, 1.0, 0.0), Pose::identity()).unwrap();
        assert!(a.points.iter().zip(&noiseless.points).any(|(p, q)| p.range != q.range));
        for p in &a.points {
            assert!((p.xyz.norm() - p.range).abs() < 1e-9);
        }
    }
}
