//! Core of a synthetic LiDAR toolkit.
//!
//! Everything here is pure computation over owned data: triangle-soup
//! geometry with a bounding-volume hierarchy, procedural driving scenes,
//! a configurable scanning LiDAR, the shared-center camera model with its
//! closed-form LiDAR-to-pixel calibration, and the segmentation metrics used
//! to map a model's blind spots over a sweep of scene variations.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, the batch
//! pipeline and the command-line tool live in the `synthlidar` crate.
#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod camera;
pub mod eval;
pub mod geom;
pub mod lidar;
pub mod math;
pub mod scene;

pub use camera::{CalibrationResult, CameraConfig, CameraIntrinsics, RenderedImage};
pub use eval::{ClassMetrics, GridCell, MIoUMap};
pub use geom::{AccelIndex, Hit, Pose, Ray, Triangle, Vec3};
pub use lidar::{LabeledPoint, LidarConfig, PointCloud, RayAngles};
pub use scene::{Asset, ClassId, Rgb, Scene, SceneObject, SweepSpec, Weather};
