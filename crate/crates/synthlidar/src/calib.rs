//! Calibration self-check: the closed-form pixel of each laser against the
//! projection of its near-plane point, and the overlay of a canonical
//! one-car scan on its own rendering.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use synthlidar_core::camera::{calibrate_pixel, default_far_coefficient, laser_endpoints, overlay_points, project_point, CameraConfig};
use synthlidar_core::lidar::LidarConfig;
use synthlidar_core::scene::{builtin_asset, Background, ClassId, Rgb, Scene};

use crate::config::RunConfig;
use crate::generate::{parallel_render, parallel_scan};

pub const PIXEL_TOLERANCE: f64 = 1e-9;
pub const F_INVARIANCE_TOLERANCE: f64 = 1e-12;
pub const OVERLAY_MIN_SCORE: f64 = 0.98;
pub const OVERLAY_SCENE: &str = "calib-overlay";

#[derive(Debug, Clone, Serialize)]
pub struct CalibReport {
    pub samples: usize,
    pub max_pixel_error: f64,
    pub max_f_variation: f64,
    pub boresight: [f64; 2],
    pub image_center: [f64; 2],
    pub overlay_score: f64,
    pub overlay_car_points: usize,
}

impl CalibReport {
    /// Human-readable descriptions of every violated tolerance.
    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        if !(self.max_pixel_error < PIXEL_TOLERANCE) {
            v.push(format!("max pixel error {:e} >= {PIXEL_TOLERANCE:e}", self.max_pixel_error));
        }
        if !(self.max_f_variation < F_INVARIANCE_TOLERANCE) {
            v.push(format!("pixel varies with f by {:e}", self.max_f_variation));
        }
        if self.boresight != self.image_center {
            v.push(format!("boresight maps to {:?}, not {:?}", self.boresight, self.image_center));
        }
        if !(self.overlay_score >= OVERLAY_MIN_SCORE) {
            v.push(format!("overlay score {} < {OVERLAY_MIN_SCORE}", self.overlay_score));
        }
        if self.overlay_car_points == 0 {
            v.push("canonical scan hit no car points".into());
        }
        v
    }
}

/// Largest `|calibrate_pixel − project_point(P′)|` and largest change of
/// `calibrate_pixel` under a random near-plane distance, over `samples`
/// uniform angles inside the LiDAR field of view.
pub fn consistency(cam: &CameraConfig, lidar: &LidarConfig, samples: usize, seed: u64) -> anyhow::Result<(f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (z0, z1) = (lidar.zenith(0), lidar.zenith(lidar.rows() - 1));
    let (a0, a1) = (lidar.azimuth(0), lidar.azimuth(lidar.cols() - 1));
    let k = default_far_coefficient(lidar.max_range, cam.near);
    let (mut max_err, mut max_var) = (0.0f64, 0.0f64);
    for _ in 0..samples {
        let theta = rng.random_range(z0..=z1);
        let phi = rng.random_range(a0..=a1);
        let (i, j) = calibrate_pixel(theta, phi, cam);
        let (p_near, _) = laser_endpoints(theta, phi, cam, k)?;
        let (pi, pj) = project_point(p_near, cam).ok_or_else(|| anyhow::anyhow!("P' behind camera at θ={theta}, φ={phi}"))?;
        max_err = max_err.max((i - pi).abs()).max((j - pj).abs());
        let mut other = *cam;
        other.near = rng.random_range(0.01..2.0);
        let (oi, oj) = calibrate_pixel(theta, phi, &other);
        max_var = max_var.max((i - oi).abs()).max((j - oj).abs());
    }
    Ok((max_err, max_var))
}

/// An unoccluded sedan 10 m ahead on flat ground.
pub fn overlay_scene() -> anyhow::Result<Scene> {
    let sedan = builtin_asset("sedan").expect("built-in asset");
    Ok(Scene::new(Background::flat_ground(0))
        .named(OVERLAY_SCENE)
        .place_car(&sedan, 0.0, 10.0, 0.0, Rgb::new(0.15, 0.25, 0.7))?)
}

pub fn calib_check(run: &RunConfig, samples: usize) -> anyhow::Result<CalibReport> {
    let scene = overlay_scene()?;
    let pose = scene.sensor_pose();
    let cam = run.camera.at_sensor(pose)?;
    let lidar = run.lidar.to_config(run.seed)?;
    let (max_pixel_error, max_f_variation) = consistency(&cam, &lidar, samples, run.seed)?;
    let (bi, bj) = calibrate_pixel(0.0, 0.0, &cam);

    let mut cloud = parallel_scan(&scene, &lidar, pose)?;
    cloud.provenance.scene_id = scene.name.clone();
    let image = parallel_render(&scene, &cam)?;
    let (_, overlay_score) = overlay_points(&image, &cloud, &[ClassId::CAR], &cam)?;
    Ok(CalibReport {
        samples,
        max_pixel_error,
        max_f_variation,
        boresight: [bi, bj],
        image_center: [f64::from(cam.width) / 2.0, f64::from(cam.height) / 2.0],
        overlay_score,
        overlay_car_points: cloud.points.iter().filter(|p| p.class_id == ClassId::CAR).count(),
    })
}
