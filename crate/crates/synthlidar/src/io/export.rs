//! Point-cloud file formats.
//!
//! * KITTI velodyne `.bin`: little-endian `f32` quadruples `(x, y, z, intensity)`
//!   with x forward, y left, z up. The internal frame has y pointing right,
//!   so y is negated. Intensity is always 0.
//! * Label `.bin`: one little-endian `u32` per point, class id in the low
//!   16 bits and instance id in the high 16 bits.
//! * ASCII PLY with properties `x y z range class instance`, and CSV with a
//!   header row; both in the internal sensor frame.

use std::fmt::Write as _;

use anyhow::ensure;
use synthlidar_core::geom::{Pose, Vec3};
use synthlidar_core::lidar::{LabeledPoint, LidarConfig, PointCloud, Provenance};
use synthlidar_core::scene::ClassId;

pub fn kitti_bytes(cloud: &PointCloud) -> Vec<u8> {
    let mut out = Vec::with_capacity(cloud.len() * 16);
    for p in &cloud.points {
        for v in [p.xyz.x as f32, -(p.xyz.y as f32), p.xyz.z as f32, 0.0f32] {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

pub fn label_word(class: ClassId, instance: u16) -> u32 {
    u32::from(class.0) | (u32::from(instance) << 16)
}

pub fn label_bytes(cloud: &PointCloud) -> Vec<u8> {
    let mut out = Vec::with_capacity(cloud.len() * 4);
    for p in &cloud.points {
        out.extend_from_slice(&label_word(p.class_id, p.instance_id).to_le_bytes());
    }
    out
}

pub fn ply_text(cloud: &PointCloud) -> String {
    let mut s = String::new();
    let _ = write!(
        s,
        "ply\nformat ascii 1.0\nelement vertex {}\nproperty float x\nproperty float y\nproperty float z\n\
         property float range\nproperty uchar class\nproperty ushort instance\nend_header\n",
        cloud.len()
    );
    for p in &cloud.points {
        let _ = writeln!(s, "{} {} {} {} {} {}", p.xyz.x, p.xyz.y, p.xyz.z, p.range, p.class_id.0, p.instance_id);
    }
    s
}

pub fn csv_text(cloud: &PointCloud) -> String {
    let mut s = String::from("x,y,z,range,row,col,class,instance\n");
    for p in &cloud.points {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{}",
            p.xyz.x, p.xyz.y, p.xyz.z, p.range, p.row, p.col, p.class_id.0, p.instance_id
        );
    }
    s
}

/// `(x, y, z, intensity)` in the KITTI frame.
pub fn read_kitti(bytes: &[u8]) -> anyhow::Result<Vec<[f32; 4]>> {
    ensure!(bytes.len() % 16 == 0, "KITTI file length {} is not a multiple of 16", bytes.len());
    Ok(bytes
        .chunks_exact(16)
        .map(|c| {
            let f = |k: usize| f32::from_le_bytes([c[4 * k], c[4 * k + 1], c[4 * k + 2], c[4 * k + 3]]);
            [f(0), f(1), f(2), f(3)]
        })
        .collect())
}

pub fn read_labels(bytes: &[u8]) -> anyhow::Result<Vec<(ClassId, u16)>> {
    ensure!(bytes.len() % 4 == 0, "label file length {} is not a multiple of 4", bytes.len());
    Ok(bytes
        .chunks_exact(4)
        .map(|c| {
            let w = u32::from_le_bytes([c[0], c[1], c[2], c[3]]);
            (ClassId((w & 0xFFFF) as u8), (w >> 16) as u16)
        })
        .collect())
}

/// Rebuilds a cloud (internal frame, `f32` precision) from exported files.
/// Ray indices are not stored in these formats and come back as 0.
pub fn cloud_from_exports(kitti: &[u8], labels: &[u8], config: LidarConfig, pose: Pose, scene_id: &str) -> anyhow::Result<PointCloud> {
    let xyz = read_kitti(kitti)?;
    let lab = read_labels(labels)?;
    ensure!(
        xyz.len() == lab.len(),
        "{scene_id}: {} points but {} labels",
        xyz.len(),
        lab.len()
    );
    let points = xyz
        .iter()
        .zip(&lab)
        .map(|(p, &(class_id, instance_id))| {
            let v = Vec3::new(f64::from(p[0]), -f64::from(p[1]), f64::from(p[2]));
            LabeledPoint {
                xyz: v,
                range: v.norm(),
                row: 0,
                col: 0,
                class_id,
                instance_id,
            }
        })
        .collect();
    Ok(PointCloud {
        points,
        config,
        pose,
        provenance: Provenance {
            scene_id: scene_id.to_string(),
            ..Provenance::default()
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cloud(points: Vec<LabeledPoint>) -> PointCloud {
        PointCloud {
            points,
            config: LidarConfig::default(),
            pose: Pose::identity(),
            provenance: Provenance::default(),
        }
    }

    fn point(x: f64, y: f64, z: f64, class: u8, instance: u16) -> LabeledPoint {
        LabeledPoint {
            xyz: Vec3::new(x, y, z),
            range: Vec3::new(x, y, z).norm(),
            row: 3,
            col: 7,
            class_id: ClassId(class),
            instance_id: instance,
        }
    }

    #[test]
    fn kitti_byte_layout() {
        let bytes = kitti_bytes(&cloud(vec![point(1.0, 2.0, 3.0, 1, 3)]));
        assert_eq!(bytes.len(), 16);
        let mut expected = Vec::new();
        for v in [1.0f32, -2.0, 3.0, 0.0] {
            expected.extend_from_slice(&v.to_le_bytes());
        }
        assert_eq!(bytes, expected);
    }

    #[test]
    fn label_word_layout() {
        assert_eq!(label_word(ClassId(1), 3), 0x0003_0001);
        let bytes = label_bytes(&cloud(vec![point(0.0, 0.0, 0.0, 1, 3)]));
        assert_eq!(bytes, 0x0003_0001u32.to_le_bytes());
    }

    #[test]
    fn empty_cloud_gives_empty_files() {
        let c = cloud(vec![]);
        assert!(kitti_bytes(&c).is_empty());
        assert!(label_bytes(&c).is_empty());
    }

    #[test]
    fn round_trip_is_exact_at_f32() {
        let pts = vec![point(10.123456789, -3.5, -1.73, 1, 2), point(0.1, 0.2, 0.3, 0, 0)];
        let c = cloud(pts.clone());
        let back = cloud_from_exports(&kitti_bytes(&c), &label_bytes(&c), c.config, c.pose, "t").unwrap();
        for (a, b) in pts.iter().zip(&back.points) {
            assert_eq!(b.xyz.x, f64::from(a.xyz.x as f32));
            assert_eq!(b.xyz.y, f64::from(a.xyz.y as f32));
            assert_eq!(b.xyz.z, f64::from(a.xyz.z as f32));
            assert_eq!((b.class_id, b.instance_id), (a.class_id, a.instance_id));
        }
        assert!(read_kitti(&[0; 15]).is_err());
        assert!(cloud_from_exports(&kitti_bytes(&c), &[], c.config, c.pose, "t").is_err());
    }

    #[test]
    fn ascii_formats() {
        let c = cloud(vec![point(1.0, 2.0, 3.0, 1, 3)]);
        let ply = ply_text(&c);
        assert!(ply.starts_with("ply\nformat ascii 1.0\nelement vertex 1\n"));
        assert!(ply.ends_with("end_header\n1 2 3 3.7416573867739413 1 3\n"));
        let csv = csv_text(&c);
        assert_eq!(csv.lines().next().unwrap(), "x,y,z,range,row,col,class,instance");
        assert_eq!(csv.lines().nth(1).unwrap(), "1,2,3,3.7416573867739413,3,7,1,3");
    }
}
