//! Run configuration: file format, defaults, flag overrides and hashing.

use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use synthlidar_core::camera::{CameraConfig, CameraIntrinsics};
use synthlidar_core::geom::{Pose, Vec3};
use synthlidar_core::lidar::LidarConfig;

/// Environment variable naming the default output root.
pub const OUT_ENV: &str = "SYNTHLIDAR_OUT";
pub const DEFAULT_OUT: &str = "synthlidar-out";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LidarSettings {
    pub vertical_fov_deg: f64,
    pub vertical_res_deg: f64,
    pub horizontal_fov_deg: f64,
    pub horizontal_res_deg: f64,
    pub pitch_deg: f64,
    pub max_range: f64,
    pub frequency_hz: f64,
    pub range_noise: f64,
}

impl Default for LidarSettings {
    fn default() -> Self {
        let d = LidarConfig::default();
        Self {
            vertical_fov_deg: d.vertical_fov,
            vertical_res_deg: d.vertical_res,
            horizontal_fov_deg: d.horizontal_fov,
            horizontal_res_deg: d.horizontal_res,
            pitch_deg: d.pitch,
            max_range: d.max_range,
            frequency_hz: d.frequency,
            range_noise: d.range_noise,
        }
    }
}

impl LidarSettings {
    pub fn to_config(&self, noise_seed: u64) -> anyhow::Result<LidarConfig> {
        let c = LidarConfig {
            vertical_fov: self.vertical_fov_deg,
            vertical_res: self.vertical_res_deg,
            horizontal_fov: self.horizontal_fov_deg,
            horizontal_res: self.horizontal_res_deg,
            pitch: self.pitch_deg,
            max_range: self.max_range,
            frequency: self.frequency_hz,
            range_noise: self.range_noise,
            noise_seed,
        };
        c.validate().context("invalid lidar settings")?;
        Ok(c)
    }

    /// Sets `rows × cols` rays over the current fields of view.
    pub fn with_grid(mut self, rows: u32, cols: u32) -> Self {
        self.vertical_res_deg = self.vertical_fov_deg / f64::from(rows.max(2) - 1);
        self.horizontal_res_deg = self.horizontal_fov_deg / f64::from(cols.max(2) - 1);
        self
    }
}

/// Camera axes in the sensor frame; the identity when absent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CameraAxes {
    pub forward: [f64; 3],
    pub right: [f64; 3],
    pub up: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CameraSettings {
    pub half_vfov_deg: f64,
    pub near: f64,
    pub width: u32,
    pub height: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub axes: Option<CameraAxes>,
}

impl Default for CameraSettings {
    fn default() -> Self {
        let d = CameraIntrinsics::default();
        Self {
            half_vfov_deg: d.half_vfov.to_degrees(),
            near: d.near,
            width: d.width,
            height: d.height,
            axes: None,
        }
    }
}

impl CameraSettings {
    pub fn intrinsics(&self) -> CameraIntrinsics {
        CameraIntrinsics {
            half_vfov: self.half_vfov_deg.to_radians(),
            near: self.near,
            width: self.width,
            height: self.height,
        }
    }

    /// Camera sharing the sensor's center.
    pub fn at_sensor(&self, sensor: Pose) -> anyhow::Result<CameraConfig> {
        let mut cam = CameraConfig::at_pose(self.intrinsics(), sensor);
        if let Some(a) = &self.axes {
            cam.forward = sensor.dir_to_world(Vec3::from(a.forward));
            cam.right = sensor.dir_to_world(Vec3::from(a.right));
            cam.up = sensor.dir_to_world(Vec3::from(a.up));
        }
        cam.validate().context("invalid camera settings")?;
        Ok(cam)
    }
}

/// Which artifacts a scan writes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Formats {
    pub kitti: bool,
    pub labels: bool,
    pub ply: bool,
    pub csv: bool,
    pub images: bool,
}

impl Default for Formats {
    fn default() -> Self {
        Self {
            kitti: true,
            labels: true,
            ply: false,
            csv: false,
            images: true,
        }
    }
}

impl Formats {
    /// Parses a comma-separated list such as `kitti,labels,ply`.
    pub fn parse_list(s: &str) -> anyhow::Result<Self> {
        let mut f = Formats {
            kitti: false,
            labels: false,
            ply: false,
            csv: false,
            images: false,
        };
        for item in s.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            match item {
                "kitti" => f.kitti = true,
                "labels" => f.labels = true,
                "ply" => f.ply = true,
                "csv" => f.csv = true,
                "images" => f.images = true,
                other => anyhow::bail!("unknown format {other:?} (expected kitti, labels, ply, csv, images)"),
            }
        }
        Ok(f)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub lidar: LidarSettings,
    pub camera: CameraSettings,
    pub seed: u64,
    /// Worker threads; 0 uses every core.
    pub workers: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    pub formats: Formats,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            lidar: LidarSettings::default(),
            camera: CameraSettings::default(),
            seed: 0,
            workers: 0,
            out: None,
            formats: Formats::default(),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    /// Output root: explicit setting, then the environment, then a default.
    pub fn out_dir(&self) -> PathBuf {
        self.out
            .clone()
            .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT))
    }

    /// Settings that change generated bytes; worker count and output
    /// location are excluded.
    pub fn generation_view(&self) -> serde_json::Value {
        serde_json::json!({
            "lidar": self.lidar,
            "camera": self.camera,
            "seed": self.seed,
            "formats": self.formats,
        })
    }
}

/// Hex SHA-256 of the generation settings plus a scene description.
pub fn config_hash(run: &RunConfig, scene: &serde_json::Value) -> String {
    let doc = serde_json::json!({ "run": run.generation_view(), "scene": scene });
    // serde_json maps keep keys sorted, so the text is canonical.
    let text = serde_json::to_string(&doc).expect("serializable");
    let digest = Sha256::digest(text.as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_documented_pattern() {
        let c = LidarSettings::default().to_config(0).unwrap();
        assert_eq!((c.rows(), c.cols()), (64, 512));
        let cam = CameraSettings::default();
        assert_eq!((cam.width, cam.height), (1024, 512));
        assert!((cam.half_vfov_deg - 28.0).abs() < 1e-12);
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(serde_json::from_str::<RunConfig>(r#"{"lidar": {"fov": 3}}"#).is_err());
        let partial: RunConfig = serde_json::from_str(r#"{"seed": 9, "lidar": {"max_range": 50}}"#).unwrap();
        assert_eq!(partial.seed, 9);
        assert_eq!(partial.lidar.max_range, 50.0);
        assert_eq!(partial.lidar.horizontal_fov_deg, 90.0);
    }

    #[test]
    fn hash_tracks_generation_settings_only() {
        let scene = serde_json::json!({"x": 1});
        let a = RunConfig::default();
        let mut b = a.clone();
        b.workers = 8;
        b.out = Some(PathBuf::from("/elsewhere"));
        assert_eq!(config_hash(&a, &scene), config_hash(&b, &scene));
        let mut c = a.clone();
        c.lidar.max_range = 79.0;
        assert_ne!(config_hash(&a, &scene), config_hash(&c, &scene));
        let mut d = a.clone();
        d.seed = 1;
        assert_ne!(config_hash(&a, &scene), config_hash(&d, &scene));
        assert_ne!(config_hash(&a, &scene), config_hash(&a, &serde_json::json!({"x": 2})));
    }

    #[test]
    fn formats_list() {
        let f = Formats::parse_list("kitti, ply").unwrap();
        assert!(f.kitti && f.ply && !f.labels && !f.images);
        assert!(Formats::parse_list("jpeg").is_err());
    }

    #[test]
    fn skewed_camera_axes_rejected() {
        let mut cam = CameraSettings::default();
        cam.axes = Some(CameraAxes {
            forward: [1.0, 0.0, 0.0],
            right: [0.1, 1.0, 0.0],
            up: [0.0, 0.0, 1.0],
        });
        assert!(cam.at_sensor(Pose::identity()).is_err());
    }
}
