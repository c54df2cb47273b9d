//! Sensor poses along a driven path.

use alloc::vec::Vec;

use crate::geom::{Pose, Vec3};
use crate::math;

use super::SceneError;

/// A polyline driven at constant speed. Waypoints are sensor positions.
#[derive(Debug, Clone, PartialEq)]
pub struct EgoPath {
    pub waypoints: Vec<Vec3>,
    /// m/s
    pub speed: f64,
}

impl EgoPath {
    pub fn new(waypoints: Vec<Vec3>, speed: f64) -> Result<Self, SceneError> {
        if !(speed > 0.0) || !speed.is_finite() {
            return Err(SceneError::InvalidPath("speed must be positive"));
        }
        if waypoints.len() < 2 {
            return Err(SceneError::InvalidPath("need at least two waypoints"));
        }
        if waypoints.windows(2).any(|w| w[0] == w[1]) {
            return Err(SceneError::InvalidPath("consecutive waypoints must be distinct"));
        }
        Ok(Self { waypoints, speed })
    }

    pub fn length(&self) -> f64 {
        self.waypoints.windows(2).map(|w| (w[1] - w[0]).norm()).sum()
    }
}

/// Scan poses at `frequency` Hz: one every `speed / frequency` meters along
/// the path starting at the first waypoint, `floor(length·frequency/speed) + 1`
/// in total. Each pose is level and heads along its segment.
pub fn ego_scan_poses(path: &EgoPath, frequency: f64) -> Result<Vec<Pose>, SceneError> {
    if !(frequency > 0.0) || !frequency.is_finite() {
        return Err(SceneError::InvalidFrequency(frequency));
    }
    let total = path.length();
    if !(total > 0.0) {
        return Err(SceneError::InvalidPath("zero-length path"));
    }
    let spacing = path.speed / frequency;
    let count = math::floor(total * frequency / path.speed) as usize + 1;
    let mut poses = Vec::with_capacity(count);
    let mut seg = 0;
    let mut seg_start = 0.0;
    for k in 0..count {
        let s = k as f64 * spacing;
        // Advance to the segment containing arc length s; a pose exactly on
        // a corner takes the heading of the outgoing segment.
        while seg + 2 < path.waypoints.len() {
            let len = (path.waypoints[seg + 1] - path.waypoints[seg]).norm();
            if s < seg_start + len {
                break;
            }
            seg_start += len;
            seg += 1;
        }
        let a = path.waypoints[seg];
        let b = path.waypoints[seg + 1];
        let d = b - a;
        let len = d.norm();
        let along = ((s - seg_start) / len).min(1.0);
        let yaw = math::atan2(d.y, d.x);
        poses.push(Pose::from_yaw(a + d * along, yaw));
    }
    Ok(poses)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn straight_path_pose_count_and_spacing() {
        let path = EgoPath::new(Vec::from([Vec3::ZERO, Vec3::new(100.0, 0.0, 0.0)]), 10.0).unwrap();
        let poses = ego_scan_poses(&path, 10.0).unwrap();
        assert_eq!(poses.len(), 101);
        for (k, p) in poses.iter().enumerate() {
            assert!((p.origin.x - k as f64).abs() < 1e-9);
        }
    }

    #[test]
    fn spacing_longer_than_path_gives_start_only() {
        let path = EgoPath::new(Vec::from([Vec3::ZERO, Vec3::new(5.0, 0.0, 0.0)]), 10.0).unwrap();
        let poses = ego_scan_poses(&path, 1.0).unwrap();
        assert_eq!(poses.len(), 1);
        assert_eq!(poses[0].origin, Vec3::ZERO);
    }

    #[test]
    fn l_shaped_path_turns_ninety_degrees() {
        let path = EgoPath::new(
            Vec::from([Vec3::ZERO, Vec3::new(10.0, 0.0, 0.0), Vec3::new(10.0, 10.0, 0.0)]),
            5.0,
        )
        .unwrap();
        let poses = ego_scan_poses(&path, 1.0).unwrap();
        assert_eq!(poses.len(), 5);
        assert!((poses[1].forward - Vec3::X).norm() < 1e-12);
        // Pose 2 sits on the corner and takes the outgoing heading.
        assert!((poses[2].origin - Vec3::new(10.0, 0.0, 0.0)).norm() < 1e-12);
        assert!((poses[2].forward - Vec3::Y).norm() < 1e-12);
        assert!((poses[4].origin - Vec3::new(10.0, 10.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn invalid_paths() {
        assert!(EgoPath::new(Vec::from([Vec3::ZERO, Vec3::ZERO]), 1.0).is_err());
        assert!(EgoPath::new(Vec::from([Vec3::ZERO, Vec3::X]), 0.0).is_err());
        let path = EgoPath::new(Vec::from([Vec3::ZERO, Vec3::X]), 1.0).unwrap();
        assert!(ego_scan_poses(&path, 0.0).is_err());
    }
}
