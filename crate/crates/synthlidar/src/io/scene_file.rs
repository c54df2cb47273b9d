//! JSON scene files.
//!
//! ```json
//! {
//!   "name": "one-car",
//!   "background": 3,
//!   "objects": [{"asset": "sedan", "x": 0, "y": 10, "yaw": 0, "color": [0.8, 0.1, 0.1]}],
//!   "weather": "clear",
//!   "time_of_day": 12
//! }
//! ```
//!
//! `background` is a preset id or an inline object
//! `{"ground": true, "boxes": [{"x", "y", "size": [l, w, h], "yaw", "color"}]}`
//! with box positions in world meters. Object offsets are sensor-relative
//! (`x` right, `y` forward); all angles are degrees.

use std::path::Path;
use std::sync::Arc;

use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};
use synthlidar_core::geom::{Pose, Vec3};
use synthlidar_core::scene::backgrounds::{box_element, default_extent, ground_element};
use synthlidar_core::scene::{builtin_asset, preset, Background, ElementKind, Rgb, Scene, Weather};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub background: BackgroundSpec,
    #[serde(default)]
    pub objects: Vec<ObjectSpec>,
    #[serde(default = "default_weather")]
    pub weather: String,
    #[serde(default = "default_time")]
    pub time_of_day: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sensor: Option<SensorSpec>,
}

fn default_weather() -> String {
    "clear".into()
}

fn default_time() -> f64 {
    12.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BackgroundSpec {
    Preset(u32),
    Inline(InlineBackground),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InlineBackground {
    #[serde(default = "yes")]
    pub ground: bool,
    #[serde(default)]
    pub boxes: Vec<BoxSpec>,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxSpec {
    pub x: f64,
    pub y: f64,
    /// Length, width, height in meters.
    pub size: [f64; 3],
    #[serde(default)]
    pub yaw: f64,
    #[serde(default = "gray")]
    pub color: [f64; 3],
}

fn gray() -> [f64; 3] {
    [0.6, 0.6, 0.6]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectSpec {
    pub asset: String,
    pub x: f64,
    pub y: f64,
    #[serde(default)]
    pub yaw: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub color: Option<[f64; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub instance_id: Option<u16>,
}

/// Sensor placement in world coordinates; defaults to 1.73 m above the origin
/// looking down +X.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensorSpec {
    pub position: [f64; 3],
    #[serde(default)]
    pub yaw: f64,
}

fn rgb(c: [f64; 3]) -> Rgb {
    Rgb::new(c[0], c[1], c[2])
}

impl SceneFile {
    pub fn parse(text: &str) -> anyhow::Result<Self> {
        let file: SceneFile = serde_json::from_str(text)?;
        Ok(file)
    }

    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading scene file {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("parsing scene file {}", path.display()))
    }

    pub fn background(&self) -> anyhow::Result<Background> {
        Ok(match &self.background {
            BackgroundSpec::Preset(id) => preset(*id),
            BackgroundSpec::Inline(inline) => {
                let mut elements = Vec::new();
                if inline.ground {
                    elements.push(ground_element());
                }
                for b in &inline.boxes {
                    if b.size.iter().any(|s| !(*s > 0.0)) {
                        bail!("box sizes must be positive, got {:?}", b.size);
                    }
                    elements.push(box_element(
                        ElementKind::Building,
                        rgb(b.color),
                        Vec3::new(b.x, b.y, 0.0),
                        b.size,
                        b.yaw.to_radians(),
                    ));
                }
                Background::custom(u32::MAX, "inline", elements, default_extent())
            }
        })
    }

    /// Materializes the scene. `fallback_name` is used when the file has none.
    pub fn build(&self, fallback_name: &str) -> anyhow::Result<Scene> {
        let weather = Weather::parse(&self.weather)
            .with_context(|| format!("unknown weather {:?} (expected clear, rain or fog)", self.weather))?;
        let mut scene = Scene::new(self.background()?)
            .named(self.name.as_deref().unwrap_or(fallback_name))
            .with_weather(weather)
            .with_time_of_day(self.time_of_day)?;
        if let Some(s) = &self.sensor {
            scene = scene.with_sensor_pose(Pose::from_yaw(Vec3::from(s.position), s.yaw.to_radians()));
        }
        for (k, o) in self.objects.iter().enumerate() {
            let asset = builtin_asset(&o.asset).with_context(|| format!("objects[{k}]: unknown asset {:?}", o.asset))?;
            let color = o.color.map(rgb).unwrap_or(asset.base_color);
            let id = match o.instance_id {
                Some(id) => id,
                None => scene.next_instance_id()?,
            };
            scene = scene
                .place_with_id(Arc::new(asset), o.x, o.y, o.yaw.to_radians(), color, id)
                .with_context(|| format!("objects[{k}]"))?;
        }
        Ok(scene)
    }
}

/// Reads and materializes a scene file; the file stem names unnamed scenes.
pub fn load_scene(path: &Path) -> anyhow::Result<Scene> {
    let file = SceneFile::load(path)?;
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("scene");
    file.build(stem).with_context(|| format!("building scene from {}", path.display()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use synthlidar_core::scene::ClassId;

    #[test]
    fn minimal_file_has_only_background() {
        let s = SceneFile::parse(r#"{"background": 0}"#).unwrap().build("m").unwrap();
        assert!(s.objects().is_empty());
        assert!(s.labels().iter().all(|l| l.instance_id == 0));
    }

    #[test]
    fn one_sedan_gets_instance_one() {
        let s = SceneFile::parse(r#"{"background": 2, "objects": [{"asset": "sedan", "x": 0, "y": 10, "yaw": 0}]}"#)
            .unwrap()
            .build("m")
            .unwrap();
        assert_eq!(s.objects().len(), 1);
        assert_eq!(s.objects()[0].instance_id, 1);
        assert!(s.labels().iter().any(|l| l.class_id == ClassId::CAR && l.instance_id == 1));
    }

    #[test]
    fn duplicate_instance_rejected() {
        let text = r#"{"background": 0, "objects": [
            {"asset": "sedan", "x": 0, "y": 10, "instance_id": 4},
            {"asset": "suv", "x": 3, "y": 15, "instance_id": 4}]}"#;
        let err = SceneFile::parse(text).unwrap().build("m").unwrap_err();
        assert!(format!("{err:#}").contains("duplicate instance_id"), "{err:#}");
    }

    #[test]
    fn unknown_keys_and_names_rejected() {
        let err = SceneFile::parse(r#"{"background": 0, "colour": 1}"#).unwrap_err();
        assert!(format!("{err:#}").contains("colour"), "{err:#}");
        let bad_asset = SceneFile::parse(r#"{"background": 0, "objects": [{"asset": "tank", "x": 0, "y": 9}]}"#).unwrap();
        assert!(format!("{:#}", bad_asset.build("m").unwrap_err()).contains("tank"));
        let bad_weather = SceneFile::parse(r#"{"background": 0, "weather": "snow"}"#).unwrap();
        assert!(bad_weather.build("m").is_err());
    }

    #[test]
    fn inline_background() {
        let text = r#"{"background": {"ground": false, "boxes": [{"x": 20, "y": 0, "size": [1, 10, 3]}]}}"#;
        let s = SceneFile::parse(text).unwrap().build("m").unwrap();
        assert_eq!(s.triangles().len(), 12);
    }

    #[test]
    fn parse_errors_report_position() {
        let err = SceneFile::parse("{\n  \"background\": 0,\n  \"objects\": [{\"asset\": 5}]\n}").unwrap_err();
        assert!(format!("{err:#}").contains("line 3"), "{err:#}");
    }
}
