//! JSON sweep files: one sample list per modification dimension.
//!
//! Every numeric list may be written as an array or as an inclusive range
//! `{"from": -5, "to": 4, "step": 1}`. Omitted dimensions take the values of
//! the documented X–Y grid: one sedan, `x ∈ {-5..4}`, `y ∈ {5..19}`, yaw 0,
//! one car, backgrounds 0..14, clear weather at noon.
//!
//! With `"mode": "list"` the `scenes` array enumerates the sweep points
//! explicitly and the per-dimension lists are ignored.

use std::path::Path;

use anyhow::{bail, ensure, Context};
use serde::{Deserialize, Serialize};
use synthlidar_core::scene::{Rgb, SweepMode, SweepPoint, SweepSpec, Weather};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Samples {
    List(Vec<f64>),
    Range { from: f64, to: f64, step: f64 },
}

impl Samples {
    pub fn values(&self) -> anyhow::Result<Vec<f64>> {
        match self {
            Samples::List(v) => Ok(v.clone()),
            Samples::Range { from, to, step } => {
                ensure!(*step > 0.0 && step.is_finite(), "range step must be positive, got {step}");
                ensure!(to >= from, "range is empty: from {from} > to {to}");
                // Tolerate accumulated rounding at the upper end.
                let n = ((to - from) / step + 1e-9).floor() as usize + 1;
                Ok((0..n).map(|k| from + k as f64 * step).collect())
            }
        }
    }

    fn ids(&self, what: &str) -> anyhow::Result<Vec<u32>> {
        self.values()?
            .into_iter()
            .map(|v| {
                if v >= 0.0 && v.fract() == 0.0 && v <= f64::from(u32::MAX) {
                    Ok(v as u32)
                } else {
                    bail!("{what} must be non-negative integers, got {v}")
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeName {
    #[default]
    Cartesian,
    List,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ListEntry {
    #[serde(default = "sedan")]
    pub model: String,
    pub x: f64,
    pub y: f64,
    #[serde(default)]
    pub yaw: f64,
    #[serde(default = "one")]
    pub count: u32,
    pub background: u32,
    #[serde(default = "sedan_blue")]
    pub color: [f64; 3],
    #[serde(default = "clear")]
    pub weather: String,
    #[serde(default = "noon")]
    pub time: f64,
}

fn sedan() -> String {
    "sedan".into()
}
fn one() -> u32 {
    1
}
fn sedan_blue() -> [f64; 3] {
    [0.15, 0.25, 0.7]
}
fn clear() -> String {
    "clear".into()
}
fn noon() -> f64 {
    12.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepFile {
    pub models: Vec<String>,
    pub x: Samples,
    pub y: Samples,
    pub yaw: Samples,
    pub count: Vec<u32>,
    pub backgrounds: Samples,
    pub colors: Vec<[f64; 3]>,
    pub weather: Vec<String>,
    pub time: Samples,
    pub mode: ModeName,
    pub scenes: Vec<ListEntry>,
}

impl Default for SweepFile {
    fn default() -> Self {
        Self {
            models: vec![sedan()],
            x: Samples::Range {
                from: -5.0,
                to: 4.0,
                step: 1.0,
            },
            y: Samples::Range {
                from: 5.0,
                to: 19.0,
                step: 1.0,
            },
            yaw: Samples::List(vec![0.0]),
            count: vec![1],
            backgrounds: Samples::Range {
                from: 0.0,
                to: 14.0,
                step: 1.0,
            },
            colors: vec![sedan_blue()],
            weather: vec![clear()],
            time: Samples::List(vec![noon()]),
            mode: ModeName::Cartesian,
            scenes: Vec::new(),
        }
    }
}

fn weather(name: &str) -> anyhow::Result<Weather> {
    Weather::parse(name).with_context(|| format!("unknown weather {name:?} (expected clear, rain or fog)"))
}

fn color(c: [f64; 3]) -> anyhow::Result<Rgb> {
    let rgb = Rgb::new(c[0], c[1], c[2]);
    ensure!(rgb.is_valid(), "color components must be in [0, 1], got {c:?}");
    Ok(rgb)
}

impl SweepFile {
    pub fn parse(text: &str) -> anyhow::Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading sweep file {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("parsing sweep file {}", path.display()))
    }

    pub fn to_spec(&self) -> anyhow::Result<SweepSpec> {
        let mut spec = SweepSpec {
            car_models: self.models.clone(),
            xs: self.x.values()?,
            ys: self.y.values()?,
            yaws: self.yaw.values()?.into_iter().map(f64::to_radians).collect(),
            counts: self.count.clone(),
            background_ids: self.backgrounds.ids("backgrounds")?,
            colors: self.colors.iter().map(|&c| color(c)).collect::<anyhow::Result<_>>()?,
            weathers: self.weather.iter().map(|w| weather(w)).collect::<anyhow::Result<_>>()?,
            times: self.time.values()?,
            mode: SweepMode::Cartesian,
        };
        if self.mode == ModeName::List {
            ensure!(!self.scenes.is_empty(), "list mode needs a non-empty `scenes` array");
            let points = self
                .scenes
                .iter()
                .enumerate()
                .map(|(k, e)| {
                    Ok(SweepPoint {
                        model: e.model.clone(),
                        x: e.x,
                        y: e.y,
                        yaw: e.yaw.to_radians(),
                        count: e.count,
                        background_id: e.background,
                        color: color(e.color).with_context(|| format!("scenes[{k}]"))?,
                        weather: weather(&e.weather).with_context(|| format!("scenes[{k}]"))?,
                        time: e.time,
                        cell: Default::default(),
                    })
                })
                .collect::<anyhow::Result<Vec<_>>>()?;
            spec.mode = SweepMode::Explicit(points);
        }
        Ok(spec)
    }
}
