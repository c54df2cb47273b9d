use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::geom::{Aabb, Triangle, Vec3};

use super::{ClassId, Rgb};

/// A placeable mesh in its local frame: x forward (length), y right (width),
/// z up, origin at the ground-level center of the footprint.
#[derive(Debug, Clone, PartialEq)]
pub struct Asset {
    pub name: String,
    pub triangles: Vec<Triangle>,
    pub class_id: ClassId,
    pub base_color: Rgb,
    /// (length, width, height) of the local bounding box, meters.
    pub footprint: [f64; 3],
}

impl Asset {
    /// Builds an asset, deriving the footprint from the triangles.
    pub fn new(name: &str, triangles: Vec<Triangle>, class_id: ClassId, base_color: Rgb) -> Self {
        let b = local_bounds(&triangles);
        let e = b.extent();
        Self {
            name: name.to_string(),
            triangles,
            class_id,
            base_color,
            footprint: [e.x, e.y, e.z],
        }
    }

    pub fn length(&self) -> f64 {
        self.footprint[0]
    }

    pub fn bounds(&self) -> Aabb {
        local_bounds(&self.triangles)
    }
}

fn local_bounds(triangles: &[Triangle]) -> Aabb {
    let mut b = Aabb::EMPTY;
    for t in triangles {
        b.grow(&t.bounds());
    }
    b
}

/// The 12 triangles of an axis-aligned box.
pub fn box_mesh(min: Vec3, max: Vec3, object_index: u32) -> [Triangle; 12] {
    let c = |x: bool, y: bool, z: bool| {
        Vec3::new(
            if x { max.x } else { min.x },
            if y { max.y } else { min.y },
            if z { max.z } else { min.z },
        )
    };
    let quad = |a: Vec3, b: Vec3, cc: Vec3, d: Vec3| {
        [
            Triangle::new(a, b, cc, object_index),
            Triangle::new(a, cc, d, object_index),
        ]
    };
    let faces = [
        quad(c(false, false, false), c(true, false, false), c(true, true, false), c(false, true, false)),
        quad(c(false, false, true), c(true, false, true), c(true, true, true), c(false, true, true)),
        quad(c(false, false, false), c(true, false, false), c(true, false, true), c(false, false, true)),
        quad(c(false, true, false), c(true, true, false), c(true, true, true), c(false, true, true)),
        quad(c(false, false, false), c(false, true, false), c(false, true, true), c(false, false, true)),
        quad(c(true, false, false), c(true, true, false), c(true, true, true), c(true, false, true)),
    ];
    let mut out = [faces[0][0]; 12];
    for (k, face) in faces.iter().enumerate() {
        out[2 * k] = face[0];
        out[2 * k + 1] = face[1];
    }
    out
}

/// A box with its footprint centered on the origin, standing on z = 0,
/// rotated by `yaw` and translated to `at`.
pub fn placed_box(at: Vec3, size: [f64; 3], yaw: f64, object_index: u32) -> [Triangle; 12] {
    let [l, w, h] = size;
    let local = box_mesh(Vec3::new(-l / 2.0, -w / 2.0, 0.0), Vec3::new(l / 2.0, w / 2.0, h), object_index);
    let pose = crate::geom::Pose::from_yaw(at, yaw);
    local.map(|t| t.map(|v| pose.point_to_world(v)))
}

/// Compound-box passenger car: chassis, set-back cabin and four wheel blocks.
///
/// The chassis spans the full length and width and the cabin reaches the
/// full height; wheels touch the ground. The bounding box is therefore
/// exactly `length × width × height`.
pub fn car_mesh(length: f64, width: f64, height: f64) -> Vec<Triangle> {
    let (l2, w2) = (length / 2.0, width / 2.0);
    let clearance = 0.18 * height;
    let belt = 0.6 * height;
    let mut tris = Vec::with_capacity(84);
    tris.extend(box_mesh(Vec3::new(-l2, -w2, clearance), Vec3::new(l2, w2, belt), 0));
    tris.extend(box_mesh(
        Vec3::new(-l2 + 0.25 * length, -0.45 * width, belt),
        Vec3::new(l2 - 0.28 * length, 0.45 * width, height),
        0,
    ));
    let wheel_len = 0.15 * length;
    let wheel_w = 0.14 * width;
    for sx in [-1.0, 1.0] {
        for sy in [-1.0, 1.0] {
            let cx = sx * 0.32 * length;
            let cy = sy * (w2 - wheel_w / 2.0 - 0.02);
            tris.extend(box_mesh(
                Vec3::new(cx - wheel_len / 2.0, cy - wheel_w / 2.0, 0.0),
                Vec3::new(cx + wheel_len / 2.0, cy + wheel_w / 2.0, clearance + 0.1 * height),
                0,
            ));
        }
    }
    tris
}

/// Built-in car models and placeholders. Car footprints are all distinct.
pub fn builtin_assets() -> Vec<Asset> {
    Vec::from([
        Asset::new("compact", car_mesh(3.9, 1.7, 1.45), ClassId::CAR, Rgb::new(0.75, 0.12, 0.1)),
        Asset::new("sedan", car_mesh(4.5, 1.8, 1.5), ClassId::CAR, Rgb::new(0.15, 0.25, 0.7)),
        Asset::new("suv", car_mesh(4.8, 1.95, 1.8), ClassId::CAR, Rgb::new(0.2, 0.2, 0.22)),
        Asset::new("van", car_mesh(5.2, 2.0, 2.1), ClassId::CAR, Rgb::new(0.85, 0.85, 0.82)),
        Asset::new(
            "pedestrian",
            box_mesh(Vec3::new(-0.2, -0.25, 0.0), Vec3::new(0.2, 0.25, 1.75), 0).to_vec(),
            ClassId::PEDESTRIAN,
            Rgb::new(0.8, 0.6, 0.3),
        ),
    ])
}

/// Looks a built-in asset up by name.
pub fn builtin_asset(name: &str) -> Option<Asset> {
    builtin_assets().into_iter().find(|a| a.name == name)
}
