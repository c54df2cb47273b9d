//! Grid sweeps over the scene modification space.

use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;

use super::{builtin_asset, preset, Rgb, Scene, SceneError, Weather};

/// Gap between consecutive cars when a sweep point asks for several (m).
pub const CONVOY_GAP: f64 = 2.0;

/// Position of a sweep point in the X–Y grid: `ix` indexes the left-right
/// offsets, `iy` the forward offsets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct GridCell {
    pub ix: u32,
    pub iy: u32,
}

impl GridCell {
    pub const fn new(ix: u32, iy: u32) -> Self {
        Self { ix, iy }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub enum SweepMode {
    /// Full Cartesian product of every sample list.
    #[default]
    Cartesian,
    /// Only the listed points. Their cells are derived from the ranks of
    /// their x and y offsets among the distinct values in the list.
    Explicit(Vec<SweepPoint>),
}

/// Per-dimension sample lists. Offsets in meters, yaws in radians,
/// times in hours.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub car_models: Vec<String>,
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    pub yaws: Vec<f64>,
    pub counts: Vec<u32>,
    pub background_ids: Vec<u32>,
    pub colors: Vec<Rgb>,
    pub weathers: Vec<Weather>,
    pub times: Vec<f64>,
    pub mode: SweepMode,
}

impl SweepSpec {
    /// One sedan at every integer offset `x ∈ {-5..4}`, `y ∈ {5..19}`,
    /// facing the sensor's heading, on each of `background_ids`.
    pub fn xy_grid(background_ids: Vec<u32>) -> Self {
        Self {
            car_models: Vec::from([String::from("sedan")]),
            xs: (-5..=4).map(f64::from).collect(),
            ys: (5..=19).map(f64::from).collect(),
            yaws: Vec::from([0.0]),
            counts: Vec::from([1]),
            background_ids,
            colors: Vec::from([Rgb::new(0.15, 0.25, 0.7)]),
            weathers: Vec::from([Weather::Clear]),
            times: Vec::from([12.0]),
            mode: SweepMode::Cartesian,
        }
    }

    fn check_lists(&self) -> Result<(), SceneError> {
        let lists: [(&'static str, usize); 9] = [
            ("car_models", self.car_models.len()),
            ("xs", self.xs.len()),
            ("ys", self.ys.len()),
            ("yaws", self.yaws.len()),
            ("counts", self.counts.len()),
            ("backgrounds", self.background_ids.len()),
            ("colors", self.colors.len()),
            ("weathers", self.weathers.len()),
            ("times", self.times.len()),
        ];
        for (name, len) in lists {
            if len == 0 {
                return Err(SceneError::EmptySampleList(name));
            }
        }
        Ok(())
    }

    /// Number of scenes the spec instantiates.
    pub fn len(&self) -> usize {
        match &self.mode {
            SweepMode::Cartesian => {
                self.car_models.len()
                    * self.xs.len()
                    * self.ys.len()
                    * self.yaws.len()
                    * self.counts.len()
                    * self.background_ids.len()
                    * self.colors.len()
                    * self.weathers.len()
                    * self.times.len()
            }
            SweepMode::Explicit(points) => points.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// One combination of dimension values.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub model: String,
    pub x: f64,
    pub y: f64,
    pub yaw: f64,
    pub count: u32,
    pub background_id: u32,
    pub color: Rgb,
    pub weather: Weather,
    pub time: f64,
    pub cell: GridCell,
}

#[derive(Debug, Clone)]
pub struct SweepScene {
    /// Position in the sweep's deterministic order.
    pub index: usize,
    pub point: SweepPoint,
    pub scene: Scene,
}

/// Enumerates sweep points. Cartesian order is lexicographic with
/// backgrounds outermost, then models, yaws, counts, colors, weathers,
/// times, forward offsets and finally left-right offsets.
pub fn sweep_points(spec: &SweepSpec) -> Result<Vec<SweepPoint>, SceneError> {
    match &spec.mode {
        SweepMode::Explicit(points) => {
            if points.is_empty() {
                return Err(SceneError::EmptySampleList("scenes"));
            }
            let xs = distinct_sorted(points.iter().map(|p| p.x));
            let ys = distinct_sorted(points.iter().map(|p| p.y));
            Ok(points
                .iter()
                .map(|p| SweepPoint {
                    cell: GridCell::new(rank(&xs, p.x), rank(&ys, p.y)),
                    ..p.clone()
                })
                .collect())
        }
        SweepMode::Cartesian => {
            spec.check_lists()?;
            let mut out = Vec::with_capacity(spec.len());
            for &background_id in &spec.background_ids {
                for model in &spec.car_models {
                    for &yaw in &spec.yaws {
                        for &count in &spec.counts {
                            for &color in &spec.colors {
                                for &weather in &spec.weathers {
                                    for &time in &spec.times {
                                        for (iy, &y) in spec.ys.iter().enumerate() {
                                            for (ix, &x) in spec.xs.iter().enumerate() {
                                                out.push(SweepPoint {
                                                    model: model.clone(),
                                                    x,
                                                    y,
                                                    yaw,
                                                    count,
                                                    background_id,
                                                    color,
                                                    weather,
                                                    time,
                                                    cell: GridCell::new(ix as u32, iy as u32),
                                                });
                                            }
                                        }
                                    }
                                }
                            }
                        }
                    }
                }
            }
            Ok(out)
        }
    }
}

fn distinct_sorted(values: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut v: Vec<f64> = values.collect();
    v.sort_by(f64::total_cmp);
    v.dedup();
    v
}

fn rank(sorted: &[f64], value: f64) -> u32 {
    sorted.partition_point(|&v| v < value) as u32
}

impl SweepPoint {
    /// Builds the scene for this point on top of `base`: the background is
    /// replaced by the point's preset and `count` cars are appended, the
    /// first at `(x, y)` and the rest queued behind it along +y.
    pub fn materialize(&self, base: &Scene, index: usize) -> Result<Scene, SceneError> {
        let asset = Arc::new(builtin_asset(&self.model).ok_or_else(|| SceneError::UnknownAsset(self.model.clone()))?);
        let mut scene = base
            .with_background(preset(self.background_id))
            .named(&format!("sweep-{index:05}"))
            .with_weather(self.weather)
            .with_time_of_day(self.time)?;
        for k in 0..self.count {
            let y = self.y + f64::from(k) * (asset.length() + CONVOY_GAP);
            let id = scene.next_instance_id()?;
            scene = scene.place_with_id(asset.clone(), self.x, y, self.yaw, self.color, id)?;
        }
        Ok(scene)
    }
}

/// Materializes every sweep point, in sweep order.
pub fn instantiate_sweep(spec: &SweepSpec, base: &Scene) -> Result<Vec<SweepScene>, SceneError> {
    sweep_points(spec)?
        .into_iter()
        .enumerate()
        .map(|(index, point)| {
            let scene = point.materialize(base, index)?;
            Ok(SweepScene { index, point, scene })
        })
        .collect()
}
