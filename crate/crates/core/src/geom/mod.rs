//! 3D geometry: vectors, rigid poses, rays, triangles and first-hit queries.
//!
//! World frame is X forward, Y right, Z up. Nothing in this crate relies on
//! the handedness of that triple; surface normals are only ever used through
//! absolute dot products.

mod bvh;

use core::ops::{Add, AddAssign, Div, Index, Mul, Neg, Sub};

use thiserror::Error;

use crate::math;

pub use bvh::{AccelIndex, Aabb};

/// Self-intersection guard: hits closer than this to the ray origin are ignored.
pub const RAY_EPSILON: f64 = 1e-6;

/// Two hits whose distances differ by less than this are considered tied.
pub const TIE_EPSILON: f64 = 1e-9;

/// Tolerance on `|direction| = 1` for rays.
pub const UNIT_TOLERANCE: f64 = 1e-9;

/// Smallest triangle area treated as a real surface (m²).
pub const MIN_TRIANGLE_AREA: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeomError {
    #[error("ray direction is not unit length (|d| = {0})")]
    NonUnitDirection(f64),
    #[error("ray max_range must be positive and finite, got {0}")]
    InvalidRange(f64),
    #[error("cannot normalize a zero-length vector")]
    ZeroVector,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3::new(0.0, 0.0, 0.0);
    pub const X: Vec3 = Vec3::new(1.0, 0.0, 0.0);
    pub const Y: Vec3 = Vec3::new(0.0, 1.0, 0.0);
    pub const Z: Vec3 = Vec3::new(0.0, 0.0, 1.0);

    #[inline]
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    #[inline]
    pub fn splat(v: f64) -> Self {
        Self::new(v, v, v)
    }

    #[inline]
    pub fn dot(self, o: Vec3) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    #[inline]
    pub fn cross(self, o: Vec3) -> Vec3 {
        Vec3::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    #[inline]
    pub fn norm_squared(self) -> f64 {
        self.dot(self)
    }

    #[inline]
    pub fn norm(self) -> f64 {
        math::sqrt(self.norm_squared())
    }

    pub fn normalize(self) -> Result<Vec3, GeomError> {
        let n = self.norm();
        if n == 0.0 || !n.is_finite() {
            return Err(GeomError::ZeroVector);
        }
        Ok(self / n)
    }

    #[inline]
    pub fn min(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x.min(o.x), self.y.min(o.y), self.z.min(o.z))
    }

    #[inline]
    pub fn max(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x.max(o.x), self.y.max(o.y), self.z.max(o.z))
    }

    #[inline]
    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }
}

impl From<[f64; 3]> for Vec3 {
    fn from(a: [f64; 3]) -> Self {
        Vec3::new(a[0], a[1], a[2])
    }
}

impl Index<usize> for Vec3 {
    type Output = f64;

    #[inline]
    fn index(&self, axis: usize) -> &f64 {
        match axis {
            0 => &self.x,
            1 => &self.y,
            2 => &self.z,
            _ => panic!("Vec3 axis out of range: {axis}"),
        }
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    #[inline]
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl AddAssign for Vec3 {
    #[inline]
    fn add_assign(&mut self, o: Vec3) {
        *self = *self + o;
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    #[inline]
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    #[inline]
    fn mul(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }
}

impl Mul<Vec3> for f64 {
    type Output = Vec3;
    #[inline]
    fn mul(self, v: Vec3) -> Vec3 {
        v * self
    }
}

impl Div<f64> for Vec3 {
    type Output = Vec3;
    #[inline]
    fn div(self, s: f64) -> Vec3 {
        Vec3::new(self.x / s, self.y / s, self.z / s)
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    #[inline]
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

/// A rigid sensor or object pose: an origin and three orthonormal axes
/// (forward, right, up) expressed in the world frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub origin: Vec3,
    pub forward: Vec3,
    pub right: Vec3,
    pub up: Vec3,
}

impl Default for Pose {
    fn default() -> Self {
        Self::identity()
    }
}

impl Pose {
    pub const fn identity() -> Self {
        Self {
            origin: Vec3::ZERO,
            forward: Vec3::X,
            right: Vec3::Y,
            up: Vec3::Z,
        }
    }

    /// Level pose at `origin` with heading `yaw` about +Z. Positive yaw turns
    /// the forward axis from +X toward +Y.
    pub fn from_yaw(origin: Vec3, yaw: f64) -> Self {
        let (s, c) = (math::sin(yaw), math::cos(yaw));
        Self {
            origin,
            forward: Vec3::new(c, s, 0.0),
            right: Vec3::new(-s, c, 0.0),
            up: Vec3::Z,
        }
    }

    pub fn translated(mut self, offset: Vec3) -> Self {
        self.origin += offset;
        self
    }

    /// Largest deviation of the axes from an orthonormal set.
    pub fn orthonormality_error(&self) -> f64 {
        let axes = [self.forward, self.right, self.up];
        let mut worst: f64 = 0.0;
        for (a, u) in axes.iter().enumerate() {
            worst = worst.max(math::abs(u.norm_squared() - 1.0));
            for v in &axes[a + 1..] {
                worst = worst.max(math::abs(u.dot(*v)));
            }
        }
        worst
    }

    #[inline]
    pub fn dir_to_world(&self, local: Vec3) -> Vec3 {
        self.forward * local.x + self.right * local.y + self.up * local.z
    }

    #[inline]
    pub fn point_to_world(&self, local: Vec3) -> Vec3 {
        self.origin + self.dir_to_world(local)
    }

    #[inline]
    pub fn dir_to_local(&self, world: Vec3) -> Vec3 {
        Vec3::new(world.dot(self.forward), world.dot(self.right), world.dot(self.up))
    }

    #[inline]
    pub fn point_to_local(&self, world: Vec3) -> Vec3 {
        self.dir_to_local(world - self.origin)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ray {
    pub origin: Vec3,
    pub direction: Vec3,
    pub max_range: f64,
}

impl Ray {
    pub fn new(origin: Vec3, direction: Vec3, max_range: f64) -> Result<Self, GeomError> {
        let n = direction.norm();
        if !(math::abs(n - 1.0) <= UNIT_TOLERANCE) {
            return Err(GeomError::NonUnitDirection(n));
        }
        if !(max_range > 0.0) || !max_range.is_finite() {
            return Err(GeomError::InvalidRange(max_range));
        }
        Ok(Self {
            origin,
            direction,
            max_range,
        })
    }

    /// Builds a ray toward `target`-direction `direction`, normalizing it first.
    pub fn towards(origin: Vec3, direction: Vec3, max_range: f64) -> Result<Self, GeomError> {
        Self::new(origin, direction.normalize()?, max_range)
    }

    #[inline]
    pub fn at(&self, t: f64) -> Vec3 {
        self.origin + self.direction * t
    }

    pub fn with_max_range(mut self, max_range: f64) -> Self {
        self.max_range = max_range;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Triangle {
    pub v0: Vec3,
    pub v1: Vec3,
    pub v2: Vec3,
    /// Handle into the owning scene's object table.
    pub object_index: u32,
}

impl Triangle {
    pub const fn new(v0: Vec3, v1: Vec3, v2: Vec3, object_index: u32) -> Self {
        Self {
            v0,
            v1,
            v2,
            object_index,
        }
    }

    pub fn area(&self) -> f64 {
        0.5 * (self.v1 - self.v0).cross(self.v2 - self.v0).norm()
    }

    pub fn is_degenerate(&self) -> bool {
        !(self.area() > MIN_TRIANGLE_AREA) || !self.v0.is_finite() || !self.v1.is_finite() || !self.v2.is_finite()
    }

    pub fn centroid(&self) -> Vec3 {
        (self.v0 + self.v1 + self.v2) / 3.0
    }

    pub fn bounds(&self) -> Aabb {
        Aabb {
            min: self.v0.min(self.v1).min(self.v2),
            max: self.v0.max(self.v1).max(self.v2),
        }
    }

    /// Unit normal with arbitrary orientation.
    pub fn normal(&self) -> Option<Vec3> {
        (self.v1 - self.v0).cross(self.v2 - self.v0).normalize().ok()
    }

    pub fn map(&self, f: impl Fn(Vec3) -> Vec3) -> Triangle {
        Triangle::new(f(self.v0), f(self.v1), f(self.v2), self.object_index)
    }
}

/// The nearest surface a ray reaches.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hit {
    pub point: Vec3,
    pub distance: f64,
    pub object_index: u32,
    /// Position of the hit triangle in the list the index was built from.
    pub triangle_index: u32,
}

/// Möller–Trumbore test, both faces, edges inclusive.
///
/// Returns the hit distance and point when the intersection lies in
/// `(RAY_EPSILON, ray.max_range]`. Degenerate triangles never hit.
#[inline]
pub fn ray_triangle_intersect(ray: &Ray, tri: &Triangle) -> Option<(f64, Vec3)> {
    let e1 = tri.v1 - tri.v0;
    let e2 = tri.v2 - tri.v0;
    if !(0.5 * e1.cross(e2).norm() > MIN_TRIANGLE_AREA) {
        return None;
    }
    let t = intersect_edges(ray, tri.v0, e1, e2)?;
    Some((t, ray.at(t)))
}

#[inline]
pub(crate) fn intersect_edges(ray: &Ray, v0: Vec3, e1: Vec3, e2: Vec3) -> Option<f64> {
    let p = ray.direction.cross(e2);
    let det = e1.dot(p);
    if det == 0.0 || !det.is_finite() {
        return None;
    }
    let inv = 1.0 / det;
    let s = ray.origin - v0;
    let u = s.dot(p) * inv;
    if !(0.0..=1.0).contains(&u) {
        return None;
    }
    let q = s.cross(e1);
    let v = ray.direction.dot(q) * inv;
    if v < 0.0 || u + v > 1.0 {
        return None;
    }
    let t = e2.dot(q) * inv;
    if t > RAY_EPSILON && t <= ray.max_range {
        Some(t)
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ray_x(max: f64) -> Ray {
        Ray::new(Vec3::ZERO, Vec3::X, max).unwrap()
    }

    fn tri(v0: [f64; 3], v1: [f64; 3], v2: [f64; 3]) -> Triangle {
        Triangle::new(v0.into(), v1.into(), v2.into(), 0)
    }

    #[test]
    fn axis_aligned_plane_hit() {
        let t = tri([10.0, -1.0, -1.0], [10.0, 1.0, -1.0], [10.0, 0.0, 1.0]);
        let (d, p) = ray_triangle_intersect(&ray_x(100.0), &t).unwrap();
        assert_eq!(d, 10.0);
        assert_eq!(p, Vec3::new(10.0, 0.0, 0.0));
    }

    #[test]
    fn displaced_triangle_misses() {
        let t = tri([10.0, 5.0, -1.0], [10.0, 7.0, -1.0], [10.0, 6.0, 1.0]);
        assert!(ray_triangle_intersect(&ray_x(100.0), &t).is_none());
    }

    #[test]
    fn beyond_range_misses() {
        let t = tri([200.0, -1.0, -1.0], [200.0, 1.0, -1.0], [200.0, 0.0, 1.0]);
        assert!(ray_triangle_intersect(&ray_x(100.0), &t).is_none());
        assert!(ray_triangle_intersect(&ray_x(200.0), &t).is_some());
    }

    #[test]
    fn edges_and_vertices_are_inclusive() {
        // Ray passes exactly through the shared edge y = 0 of two triangles.
        let a = tri([5.0, 0.0, -1.0], [5.0, 0.0, 1.0], [5.0, -1.0, 0.0]);
        let b = tri([5.0, 0.0, -1.0], [5.0, 0.0, 1.0], [5.0, 1.0, 0.0]);
        assert!(ray_triangle_intersect(&ray_x(10.0), &a).is_some());
        assert!(ray_triangle_intersect(&ray_x(10.0), &b).is_some());
        let corner = tri([5.0, 0.0, 0.0], [5.0, 1.0, 0.0], [5.0, 0.0, 1.0]);
        assert!(ray_triangle_intersect(&ray_x(10.0), &corner).is_some());
    }

    #[test]
    fn back_faces_hit() {
        let front = tri([10.0, -1.0, -1.0], [10.0, 1.0, -1.0], [10.0, 0.0, 1.0]);
        let back = tri([10.0, 1.0, -1.0], [10.0, -1.0, -1.0], [10.0, 0.0, 1.0]);
        assert_eq!(
            ray_triangle_intersect(&ray_x(100.0), &front).map(|h| h.0),
            ray_triangle_intersect(&ray_x(100.0), &back).map(|h| h.0)
        );
    }

    #[test]
    fn degenerate_and_self_hits_ignored() {
        let sliver = tri([10.0, 0.0, 0.0], [10.0, 1.0, 0.0], [10.0, 2.0, 0.0]);
        assert!(sliver.is_degenerate());
        assert!(ray_triangle_intersect(&ray_x(100.0), &sliver).is_none());
        let at_origin = tri([0.0, -1.0, -1.0], [0.0, 1.0, -1.0], [0.0, 0.0, 1.0]);
        assert!(ray_triangle_intersect(&ray_x(100.0), &at_origin).is_none());
    }

    #[test]
    fn ray_validation() {
        assert!(Ray::new(Vec3::ZERO, Vec3::new(1.0, 1.0, 0.0), 1.0).is_err());
        assert!(Ray::new(Vec3::ZERO, Vec3::X, 0.0).is_err());
        assert!(Ray::new(Vec3::ZERO, Vec3::X, f64::NAN).is_err());
        assert!(Ray::towards(Vec3::ZERO, Vec3::new(3.0, 4.0, 0.0), 1.0).is_ok());
    }

    #[test]
    fn pose_round_trip() {
        let pose = Pose::from_yaw(Vec3::new(1.0, 2.0, 3.0), 0.7);
        assert!(pose.orthonormality_error() < 1e-15);
        let p = Vec3::new(-4.0, 0.5, 9.0);
        let back = pose.point_to_local(pose.point_to_world(p));
        assert!((back - p).norm() < 1e-12);
        let quarter = Pose::from_yaw(Vec3::ZERO, math::FRAC_PI_2);
        assert!((quarter.forward - Vec3::Y).norm() < 1e-15);
        assert!((quarter.right + Vec3::X).norm() < 1e-15);
    }
}
