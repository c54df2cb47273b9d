//! Labeled driving scenes.
//!
//! A [`Scene`] is an immutable triangle soup plus an object table that maps
//! every triangle to a class and instance label. Background geometry has
//! instance 0; placed objects get unique positive instance ids.

pub mod assets;
pub mod backgrounds;
mod ego;
mod sweep;

use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec::Vec;

use thiserror::Error;

use crate::geom::{AccelIndex, Aabb, Hit, Pose, Ray, Triangle, Vec3};

pub use assets::{builtin_asset, builtin_assets, Asset};
pub use backgrounds::{builtin_backgrounds, preset, Background, BackgroundElement, ElementKind, Extent};
pub use ego::{ego_scan_poses, EgoPath};
pub use sweep::{instantiate_sweep, sweep_points, GridCell, SweepMode, SweepPoint, SweepScene, SweepSpec};

/// Height of the sensor above the ground plane in the default pose (m).
pub const SENSOR_HEIGHT: f64 = 1.73;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct ClassId(pub u8);

impl ClassId {
    pub const BACKGROUND: ClassId = ClassId(0);
    pub const CAR: ClassId = ClassId(1);
    pub const PEDESTRIAN: ClassId = ClassId(2);

    /// Every class id the toolkit emits.
    pub const KNOWN: [ClassId; 3] = [Self::BACKGROUND, Self::CAR, Self::PEDESTRIAN];

    pub fn name(self) -> &'static str {
        match self.0 {
            0 => "background",
            1 => "car",
            2 => "pedestrian",
            _ => "unknown",
        }
    }

    pub fn is_known(self) -> bool {
        Self::KNOWN.contains(&self)
    }

    /// Palette color used for semantic visualisations.
    pub fn palette(self) -> [u8; 3] {
        match self.0 {
            0 => [0, 0, 0],
            1 => [0, 0, 255],
            2 => [255, 64, 0],
            _ => [255, 255, 255],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Rgb {
    pub r: f64,
    pub g: f64,
    pub b: f64,
}

impl Rgb {
    pub const fn new(r: f64, g: f64, b: f64) -> Self {
        Self { r, g, b }
    }

    pub fn is_valid(&self) -> bool {
        [self.r, self.g, self.b].iter().all(|c| (0.0..=1.0).contains(c))
    }

    pub fn scale(self, s: f64) -> Rgb {
        Rgb::new(self.r * s, self.g * s, self.b * s)
    }

    pub fn lerp(self, other: Rgb, t: f64) -> Rgb {
        Rgb::new(
            self.r + (other.r - self.r) * t,
            self.g + (other.g - self.g) * t,
            self.b + (other.b - self.b) * t,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Weather {
    #[default]
    Clear,
    Rain,
    Fog,
}

impl Weather {
    pub fn name(self) -> &'static str {
        match self {
            Weather::Clear => "clear",
            Weather::Rain => "rain",
            Weather::Fog => "fog",
        }
    }

    pub fn parse(s: &str) -> Option<Weather> {
        match s {
            "clear" => Some(Weather::Clear),
            "rain" => Some(Weather::Rain),
            "fog" => Some(Weather::Fog),
            _ => None,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SceneError {
    #[error("placement at offset (x={x}, y={y}) is outside the background extent")]
    OutsideExtent { x: f64, y: f64 },
    #[error("duplicate instance_id {0}")]
    DuplicateInstance(u16),
    #[error("instance_id 0 is reserved for background geometry")]
    ReservedInstance,
    #[error("instance ids exhausted")]
    InstanceOverflow,
    #[error("unknown asset \"{0}\"")]
    UnknownAsset(String),
    #[error("unknown background {0}")]
    UnknownBackground(u32),
    #[error("time_of_day must be in [0, 24), got {0}")]
    InvalidTime(f64),
    #[error("color components must be in [0, 1]")]
    InvalidColor,
    #[error("sample list `{0}` is empty")]
    EmptySampleList(&'static str),
    #[error("ego path: {0}")]
    InvalidPath(&'static str),
    #[error("scan frequency must be positive, got {0}")]
    InvalidFrequency(f64),
}

/// Per-object label record; `Triangle::object_index` points into this table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectLabel {
    pub class_id: ClassId,
    pub instance_id: u16,
    pub color: Rgb,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SceneObject {
    pub asset: Arc<Asset>,
    /// World position of the footprint's ground-level center.
    pub position: Vec3,
    /// Heading about +Z, radians, relative to world +X.
    pub yaw: f64,
    pub color: Rgb,
    pub instance_id: u16,
}

impl SceneObject {
    pub fn pose(&self) -> Pose {
        Pose::from_yaw(self.position, self.yaw)
    }

    pub fn world_triangles(&self, object_index: u32) -> impl Iterator<Item = Triangle> + '_ {
        let pose = self.pose();
        self.asset.triangles.iter().map(move |t| {
            let mut w = t.map(|v| pose.point_to_world(v));
            w.object_index = object_index;
            w
        })
    }
}

/// Non-fatal findings recorded while building a scene.
#[derive(Debug, Clone, PartialEq)]
pub enum SceneWarning {
    /// A placed object's bounding box overlaps background geometry.
    Overlap { instance_id: u16 },
}

/// Result of a first-hit query against a scene.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SceneHit {
    pub hit: Hit,
    pub class_id: ClassId,
    pub instance_id: u16,
    pub color: Rgb,
}

#[derive(Debug, Clone)]
pub struct Scene {
    pub name: String,
    background: Arc<Background>,
    objects: Vec<SceneObject>,
    pub weather: Weather,
    pub time_of_day: f64,
    sensor: Pose,
    triangles: Arc<Vec<Triangle>>,
    labels: Arc<Vec<ObjectLabel>>,
    index: Arc<AccelIndex>,
    warnings: Vec<SceneWarning>,
}

impl PartialEq for Scene {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name
            && self.background == other.background
            && self.objects == other.objects
            && self.weather == other.weather
            && self.time_of_day == other.time_of_day
            && self.sensor == other.sensor
    }
}

impl Scene {
    /// A scene with only background geometry and the sensor at
    /// `(0, 0, SENSOR_HEIGHT)` looking down +X.
    pub fn new(background: Background) -> Self {
        Self::with_objects(
            String::from("scene"),
            Arc::new(background),
            Vec::new(),
            Weather::Clear,
            12.0,
            default_sensor_pose(),
        )
    }

    /// No geometry at all.
    pub fn empty() -> Self {
        Self::new(Background::empty())
    }

    fn with_objects(
        name: String,
        background: Arc<Background>,
        objects: Vec<SceneObject>,
        weather: Weather,
        time_of_day: f64,
        sensor: Pose,
    ) -> Self {
        let mut labels = Vec::with_capacity(background.elements.len() + objects.len());
        let mut triangles = Vec::new();
        for el in &background.elements {
            let idx = labels.len() as u32;
            labels.push(ObjectLabel {
                class_id: ClassId::BACKGROUND,
                instance_id: 0,
                color: el.color,
            });
            triangles.extend(el.triangles.iter().map(|t| Triangle { object_index: idx, ..*t }));
        }
        let background_triangles = triangles.len();
        for obj in &objects {
            let idx = labels.len() as u32;
            labels.push(ObjectLabel {
                class_id: obj.asset.class_id,
                instance_id: obj.instance_id,
                color: obj.color,
            });
            triangles.extend(obj.world_triangles(idx));
        }
        let warnings = overlap_warnings(&triangles[..background_triangles], &objects);
        let index = AccelIndex::build(&triangles);
        Self {
            name,
            background,
            objects,
            weather,
            time_of_day,
            sensor,
            triangles: Arc::new(triangles),
            labels: Arc::new(labels),
            index: Arc::new(index),
            warnings,
        }
    }

    fn rebuilt(&self, objects: Vec<SceneObject>, background: Arc<Background>) -> Self {
        Self::with_objects(
            self.name.clone(),
            background,
            objects,
            self.weather,
            self.time_of_day,
            self.sensor,
        )
    }

    pub fn named(mut self, name: &str) -> Self {
        self.name = name.to_string();
        self
    }

    pub fn with_weather(mut self, weather: Weather) -> Self {
        self.weather = weather;
        self
    }

    pub fn with_time_of_day(mut self, hours: f64) -> Result<Self, SceneError> {
        if !(0.0..24.0).contains(&hours) {
            return Err(SceneError::InvalidTime(hours));
        }
        self.time_of_day = hours;
        Ok(self)
    }

    /// Moves the sensor. Placement offsets are measured from this pose.
    pub fn with_sensor_pose(mut self, sensor: Pose) -> Self {
        self.sensor = sensor;
        self
    }

    /// Same objects and settings on a different background.
    pub fn with_background(&self, background: Background) -> Self {
        self.rebuilt(self.objects.clone(), Arc::new(background))
    }

    pub fn background(&self) -> &Background {
        &self.background
    }

    pub fn objects(&self) -> &[SceneObject] {
        &self.objects
    }

    pub fn sensor_pose(&self) -> Pose {
        self.sensor
    }

    pub fn triangles(&self) -> &[Triangle] {
        &self.triangles
    }

    pub fn labels(&self) -> &[ObjectLabel] {
        &self.labels
    }

    pub fn index(&self) -> &AccelIndex {
        &self.index
    }

    pub fn warnings(&self) -> &[SceneWarning] {
        &self.warnings
    }

    /// World ground position for a sensor-relative offset: `x` to the right,
    /// `y` forward.
    pub fn offset_to_world(&self, x: f64, y: f64) -> Vec3 {
        let fwd = Vec3::new(self.sensor.forward.x, self.sensor.forward.y, 0.0);
        let right = Vec3::new(self.sensor.right.x, self.sensor.right.y, 0.0);
        let base = Vec3::new(self.sensor.origin.x, self.sensor.origin.y, 0.0);
        base + fwd * y + right * x
    }

    fn sensor_yaw(&self) -> f64 {
        crate::math::atan2(self.sensor.forward.y, self.sensor.forward.x)
    }

    pub fn next_instance_id(&self) -> Result<u16, SceneError> {
        let max = self.objects.iter().map(|o| o.instance_id).max().unwrap_or(0);
        max.checked_add(1).ok_or(SceneError::InstanceOverflow)
    }

    /// Places `model` at sensor-relative offset `(x right, y forward)` with
    /// heading `yaw` relative to the sensor. Returns a new scene; `self` is
    /// untouched. The new object gets `max existing instance id + 1`.
    pub fn place_car(&self, model: &Asset, x: f64, y: f64, yaw: f64, color: Rgb) -> Result<Scene, SceneError> {
        let id = self.next_instance_id()?;
        self.place_with_id(Arc::new(model.clone()), x, y, yaw, color, id)
    }

    /// Like [`Scene::place_car`] but with an explicit instance id.
    pub fn place_with_id(
        &self,
        model: Arc<Asset>,
        x: f64,
        y: f64,
        yaw: f64,
        color: Rgb,
        instance_id: u16,
    ) -> Result<Scene, SceneError> {
        if instance_id == 0 {
            return Err(SceneError::ReservedInstance);
        }
        if self.objects.iter().any(|o| o.instance_id == instance_id) {
            return Err(SceneError::DuplicateInstance(instance_id));
        }
        if !color.is_valid() {
            return Err(SceneError::InvalidColor);
        }
        let position = self.offset_to_world(x, y);
        if !self.background.extent.contains(position.x, position.y) {
            return Err(SceneError::OutsideExtent { x, y });
        }
        let mut objects = self.objects.clone();
        objects.push(SceneObject {
            asset: model,
            position,
            yaw: self.sensor_yaw() + yaw,
            color,
            instance_id,
        });
        Ok(self.rebuilt(objects, self.background.clone()))
    }

    /// Nearest labeled surface along `ray`.
    pub fn cast(&self, ray: &Ray) -> Option<SceneHit> {
        let hit = self.index.first_hit(ray)?;
        let label = self.labels[hit.object_index as usize];
        Some(SceneHit {
            hit,
            class_id: label.class_id,
            instance_id: label.instance_id,
            color: label.color,
        })
    }
}

pub fn default_sensor_pose() -> Pose {
    Pose::identity().translated(Vec3::new(0.0, 0.0, SENSOR_HEIGHT))
}

fn overlap_warnings(background: &[Triangle], objects: &[SceneObject]) -> Vec<SceneWarning> {
    let mut out = Vec::new();
    for obj in objects {
        let mut b = Aabb::EMPTY;
        for t in obj.world_triangles(0) {
            b.grow(&t.bounds());
        }
        // Lift the box off the ground plane so resting on it is not an overlap.
        b.min.z += 1e-3;
        let overlaps = background.iter().any(|t| {
            let tb = t.bounds();
            tb.max.z > b.min.z && tb.intersects(&b)
        });
        if overlaps {
            out.push(SceneWarning::Overlap {
                instance_id: obj.instance_id,
            });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::PI;

    fn sedan() -> Asset {
        builtin_asset("sedan").unwrap()
    }

    fn bounds(scene: &Scene, instance: u16) -> Aabb {
        let idx = scene.labels().iter().position(|l| l.instance_id == instance).unwrap() as u32;
        let mut b = Aabb::EMPTY;
        for t in scene.triangles().iter().filter(|t| t.object_index == idx) {
            b.grow(&t.bounds());
        }
        b
    }

    #[test]
    fn placement_maps_offsets_to_world_axes() {
        let base = Scene::new(Background::flat_ground(0));
        let s = base.place_car(&sedan(), 0.0, 10.0, 0.0, Rgb::new(1.0, 0.0, 0.0)).unwrap();
        assert_eq!(s.objects().len(), 1);
        assert_eq!(s.objects()[0].instance_id, 1);
        let c = bounds(&s, 1).center();
        assert!((c - Vec3::new(10.0, 0.0, 0.75)).norm() < 1e-9, "{c:?}");
        let s2 = base.place_car(&sedan(), -3.0, 7.0, 0.0, Rgb::default()).unwrap();
        let c2 = bounds(&s2, 1).center();
        assert!((c2.x - 7.0).abs() < 1e-9 && (c2.y + 3.0).abs() < 1e-9);
        assert!(base.objects().is_empty(), "input scene unchanged");
    }

    #[test]
    fn yaw_pi_mirrors_vertices() {
        let base = Scene::new(Background::flat_ground(0));
        let a = base.place_car(&sedan(), 0.0, 10.0, 0.0, Rgb::default()).unwrap();
        let b = base.place_car(&sedan(), 0.0, 10.0, PI, Rgb::default()).unwrap();
        let (ba, bb) = (bounds(&a, 1), bounds(&b, 1));
        assert!((ba.extent() - bb.extent()).norm() < 1e-9);
        let center = Vec3::new(10.0, 0.0, 0.0);
        let n = a.triangles().len();
        let nb = a.background().triangle_count();
        for (ta, tb) in a.triangles()[nb..n].iter().zip(&b.triangles()[nb..]) {
            for (va, vb) in [(ta.v0, tb.v0), (ta.v1, tb.v1), (ta.v2, tb.v2)] {
                let ma = va - center;
                let mb = vb - center;
                assert!((ma.x + mb.x).abs() < 1e-9 && (ma.y + mb.y).abs() < 1e-9 && (ma.z - mb.z).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn successive_placements_get_fresh_ids_and_disjoint_triangles() {
        let base = Scene::new(Background::flat_ground(0));
        let s = base
            .place_car(&sedan(), -2.0, 8.0, 0.0, Rgb::default())
            .unwrap()
            .place_car(&sedan(), 2.0, 15.0, 0.0, Rgb::default())
            .unwrap();
        let ids: Vec<_> = s.objects().iter().map(|o| o.instance_id).collect();
        assert_eq!(ids, [1, 2]);
        let idx: Vec<u32> = s
            .labels()
            .iter()
            .enumerate()
            .filter(|(_, l)| l.instance_id > 0)
            .map(|(k, _)| k as u32)
            .collect();
        let first: Vec<usize> = idx
            .iter()
            .map(|&o| s.triangles().iter().position(|t| t.object_index == o).unwrap())
            .collect();
        let count = |o: u32| s.triangles().iter().filter(|t| t.object_index == o).count();
        assert!(first[0] + count(idx[0]) <= first[1]);
    }

    #[test]
    fn placement_errors() {
        let base = Scene::new(Background::flat_ground(0));
        assert_eq!(
            base.place_car(&sedan(), 0.0, 500.0, 0.0, Rgb::default()).unwrap_err(),
            SceneError::OutsideExtent { x: 0.0, y: 500.0 }
        );
        let s = base.place_car(&sedan(), 0.0, 10.0, 0.0, Rgb::default()).unwrap();
        let dup = s.place_with_id(Arc::new(sedan()), 2.0, 12.0, 0.0, Rgb::default(), 1);
        assert_eq!(dup.unwrap_err(), SceneError::DuplicateInstance(1));
        let zero = s.place_with_id(Arc::new(sedan()), 2.0, 12.0, 0.0, Rgb::default(), 0);
        assert_eq!(zero.unwrap_err(), SceneError::ReservedInstance);
    }

    #[test]
    fn every_triangle_resolves_to_one_label() {
        let s = Scene::new(preset(3))
            .place_car(&sedan(), 1.0, 9.0, 0.3, Rgb::default())
            .unwrap();
        for t in s.triangles() {
            let l = s.labels()[t.object_index as usize];
            if l.instance_id == 0 {
                assert_eq!(l.class_id, ClassId::BACKGROUND);
            } else {
                assert_eq!(l.class_id, ClassId::CAR);
            }
        }
    }

    #[test]
    fn overlap_is_a_warning_not_an_error() {
        let wall = backgrounds::box_element(
            ElementKind::Wall,
            Rgb::new(0.5, 0.5, 0.5),
            Vec3::new(10.0, 0.0, 0.0),
            [0.3, 10.0, 2.0],
            0.0,
        );
        let bg = Background::custom(
            99,
            "wall",
            Vec::from([backgrounds::ground_element(), wall]),
            backgrounds::default_extent(),
        );
        let s = Scene::new(bg).place_car(&sedan(), 0.0, 10.0, 0.0, Rgb::default()).unwrap();
        assert_eq!(s.warnings(), &[SceneWarning::Overlap { instance_id: 1 }]);
        let clear = Scene::new(Background::flat_ground(0))
            .place_car(&sedan(), 0.0, 10.0, 0.0, Rgb::default())
            .unwrap();
        assert!(clear.warnings().is_empty());
    }
}
