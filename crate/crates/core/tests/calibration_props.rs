//! The closed-form laser pixel against explicit projection of its near-plane
//! point.

use proptest::prelude::*;
use synthlidar_core::camera::{calibrate, calibrate_pixel, default_far_coefficient, laser_endpoints, project_point};
use synthlidar_core::geom::{Pose, Vec3};
use synthlidar_core::lidar::LidarConfig;
use synthlidar_core::{CameraConfig, CameraIntrinsics};

fn camera(half_vfov_deg: f64, near: f64, width: u32, height: u32, pose: Pose) -> CameraConfig {
    CameraConfig::at_pose(
        CameraIntrinsics {
            half_vfov: half_vfov_deg.to_radians(),
            near,
            width,
            height,
        },
        pose,
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn pixel_equals_projection_of_near_point(
        theta in -13.0f64..13.0,
        phi in -45.0f64..45.0,
        near in 0.01f64..2.0,
        yaw in -3.1f64..3.1,
        x in -50.0f64..50.0,
    ) {
        let cam = camera(28.0, near, 1024, 512, Pose::from_yaw(Vec3::new(x, -x, 1.73), yaw));
        let (t, p) = (theta.to_radians(), phi.to_radians());
        let (i, j) = calibrate_pixel(t, p, &cam);
        let (near_pt, _) = laser_endpoints(t, p, &cam, default_far_coefficient(80.0, near)).unwrap();
        let (pi, pj) = project_point(near_pt, &cam).unwrap();
        prop_assert!((i - pi).abs() < 1e-9 && (j - pj).abs() < 1e-9, "({i}, {j}) vs ({pi}, {pj})");
    }

    #[test]
    fn pixel_does_not_depend_on_near_distance(
        theta in -13.0f64..13.0,
        phi in -45.0f64..45.0,
        f1 in 0.01f64..5.0,
        f2 in 0.01f64..5.0,
    ) {
        let (t, p) = (theta.to_radians(), phi.to_radians());
        let a = calibrate_pixel(t, p, &camera(28.0, f1, 1024, 512, Pose::identity()));
        let b = calibrate_pixel(t, p, &camera(28.0, f2, 1024, 512, Pose::identity()));
        prop_assert!((a.0 - b.0).abs() < 1e-12 && (a.1 - b.1).abs() < 1e-12);
    }

    #[test]
    fn far_point_lies_on_the_same_pixel(theta in -13.0f64..13.0, phi in -45.0f64..45.0, max_range in 1.0f64..200.0) {
        let cam = camera(28.0, 0.15, 1024, 512, Pose::identity());
        let (t, p) = (theta.to_radians(), phi.to_radians());
        let r = calibrate(t, p, &cam, default_far_coefficient(max_range, cam.near), max_range).unwrap();
        let (fi, fj) = project_point(r.p_far, &cam).unwrap();
        prop_assert!((fi - r.pixel.0).abs() < 1e-6 && (fj - r.pixel.1).abs() < 1e-6);
        // The far point is at least max_range from the center.
        prop_assert!((r.p_far - cam.position).norm() >= max_range);
    }

    #[test]
    fn pixel_moves_monotonically(theta in -12.0f64..12.0, phi in -44.0f64..44.0) {
        let cam = camera(28.0, 0.15, 1024, 512, Pose::identity());
        let (t, p) = (theta.to_radians(), phi.to_radians());
        let (i, j) = calibrate_pixel(t, p, &cam);
        // Lower beams go down the image; leftward beams go left.
        let (_, j2) = calibrate_pixel(t + 0.01, p, &cam);
        let (i2, _) = calibrate_pixel(t, p + 0.01, &cam);
        prop_assert!(j2 > j);
        prop_assert!(i2 < i);
    }
}

#[test]
fn boresight_is_exact_center() {
    for (w, h) in [(1024, 512), (800, 600), (1, 1), (1023, 511)] {
        for near in [0.01, 0.15, 3.0] {
            let cam = camera(28.0, near, w, h, Pose::from_yaw(Vec3::new(1.0, 2.0, 1.73), 0.7));
            assert_eq!(calibrate_pixel(0.0, 0.0, &cam), (f64::from(w) / 2.0, f64::from(h) / 2.0));
        }
    }
}

#[test]
fn default_lidar_field_lands_inside_default_image() {
    let cam = camera(28.0, 0.15, 1024, 512, Pose::identity());
    let cfg = LidarConfig::default();
    for row in [0, cfg.rows() - 1] {
        for col in [0, cfg.cols() - 1] {
            let a = cfg.angles(row, col);
            let (i, j) = calibrate_pixel(a.zenith, a.azimuth, &cam);
            assert!(cam.pixel_index(i, j).is_some(), "corner ({row}, {col}) -> ({i}, {j})");
        }
    }
}
