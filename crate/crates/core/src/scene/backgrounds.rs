//! Procedurally generated scene backgrounds.
//!
//! Every preset is a pure function of its id: the generator is a ChaCha8
//! stream seeded with `PRESET_SEED_BASE + id`. Presets keep a clear corridor
//! of half-width `CORRIDOR_HALF_WIDTH` in front of the sensor (x in
//! `[-10, CORRIDOR_END]`) so sweep cars never intersect background geometry.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::geom::{Triangle, Vec3};

use super::assets::placed_box;
use super::Rgb;

pub const PRESET_SEED_BASE: u64 = 0x5EED_0000;
/// Number of generated presets. Ids `0..BUILTIN_BACKGROUND_COUNT`.
pub const BUILTIN_BACKGROUND_COUNT: u32 = 20;
pub const CORRIDOR_HALF_WIDTH: f64 = 6.6;
pub const CORRIDOR_END: f64 = 26.0;

const GROUND_X: (f64, f64) = (-40.0, 140.0);
const GROUND_Y: (f64, f64) = (-70.0, 70.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ElementKind {
    Ground,
    Building,
    Wall,
    Pole,
    Tree,
    Barrier,
    Container,
    Truck,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BackgroundElement {
    pub kind: ElementKind,
    pub color: Rgb,
    /// World-frame triangles. `object_index` is ignored here; scenes assign it.
    pub triangles: Vec<Triangle>,
}

/// Rectangular region of the ground plane where objects may be placed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Extent {
    pub x: (f64, f64),
    pub y: (f64, f64),
}

impl Extent {
    pub fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.x.0 && x <= self.x.1 && y >= self.y.0 && y <= self.y.1
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Background {
    pub id: u32,
    pub name: String,
    pub elements: Vec<BackgroundElement>,
    pub extent: Extent,
}

impl Background {
    /// No geometry at all; every ray misses.
    pub fn empty() -> Self {
        Self {
            id: u32::MAX,
            name: String::from("empty"),
            elements: Vec::new(),
            extent: Extent {
                x: (f64::NEG_INFINITY, f64::INFINITY),
                y: (f64::NEG_INFINITY, f64::INFINITY),
            },
        }
    }

    /// Flat ground at z = 0 and nothing else.
    pub fn flat_ground(id: u32) -> Self {
        Self {
            id,
            name: format!("flat-{id}"),
            elements: Vec::from([ground_element()]),
            extent: default_extent(),
        }
    }

    /// A background made of caller-supplied elements.
    pub fn custom(id: u32, name: &str, elements: Vec<BackgroundElement>, extent: Extent) -> Self {
        Self {
            id,
            name: String::from(name),
            elements,
            extent,
        }
    }

    pub fn triangle_count(&self) -> usize {
        self.elements.iter().map(|e| e.triangles.len()).sum()
    }
}

pub fn default_extent() -> Extent {
    Extent {
        x: GROUND_X,
        y: GROUND_Y,
    }
}

pub fn ground_element() -> BackgroundElement {
    let (x0, x1) = GROUND_X;
    let (y0, y1) = GROUND_Y;
    let a = Vec3::new(x0, y0, 0.0);
    let b = Vec3::new(x1, y0, 0.0);
    let c = Vec3::new(x1, y1, 0.0);
    let d = Vec3::new(x0, y1, 0.0);
    BackgroundElement {
        kind: ElementKind::Ground,
        color: Rgb::new(0.35, 0.35, 0.37),
        triangles: Vec::from([Triangle::new(a, b, c, 0), Triangle::new(a, c, d, 0)]),
    }
}

/// Element built from one placed box.
pub fn box_element(kind: ElementKind, color: Rgb, at: Vec3, size: [f64; 3], yaw: f64) -> BackgroundElement {
    BackgroundElement {
        kind,
        color,
        triangles: placed_box(at, size, yaw, 0).to_vec(),
    }
}

const STYLES: [&str; 5] = ["urban", "suburban", "open-lot", "industrial", "mixed"];

/// Generates preset `id`. Any `u32` is a valid id; the documented set is
/// `0..BUILTIN_BACKGROUND_COUNT`.
pub fn preset(id: u32) -> Background {
    let mut rng = ChaCha8Rng::seed_from_u64(PRESET_SEED_BASE + u64::from(id));
    let style = (id % STYLES.len() as u32) as usize;
    let mut g = Generator {
        rng: &mut rng,
        elements: Vec::from([ground_element()]),
    };
    match style {
        0 => {
            g.building_row(-1.0);
            g.building_row(1.0);
            g.poles(-1.0, 3);
            g.poles(1.0, 3);
            g.truck();
        }
        1 => {
            g.wall(-1.0);
            g.trees(1.0, 6);
            g.trees(-1.0, 3);
            g.building_row(1.0);
        }
        2 => {
            g.poles(-1.0, 6);
            g.poles(1.0, 6);
            g.barriers(1.0, 2);
        }
        3 => {
            g.containers(-1.0, 4);
            g.containers(1.0, 3);
            g.barriers(-1.0, 3);
            g.truck();
        }
        _ => {
            g.building_row(-1.0);
            g.barriers(1.0, 3);
            g.trees(1.0, 4);
            g.poles(-1.0, 2);
        }
    }
    Background {
        id,
        name: format!("{}-{id:02}", STYLES[style]),
        elements: g.elements,
        extent: default_extent(),
    }
}

/// All documented presets, in id order.
pub fn builtin_backgrounds() -> Vec<Background> {
    (0..BUILTIN_BACKGROUND_COUNT).map(preset).collect()
}

struct Generator<'a> {
    rng: &'a mut ChaCha8Rng,
    elements: Vec<BackgroundElement>,
}

impl Generator<'_> {
    fn gray(&mut self, lo: f64, hi: f64) -> Rgb {
        let v = self.rng.random_range(lo..hi);
        Rgb::new(v, v * 0.97, v * 0.93)
    }

    fn push_box(&mut self, kind: ElementKind, color: Rgb, at: Vec3, size: [f64; 3]) {
        self.elements.push(box_element(kind, color, at, size, 0.0));
    }

    /// Side offset: at least the corridor half-width plus `margin`.
    fn side_y(&mut self, side: f64, margin: f64, spread: f64) -> f64 {
        side * (CORRIDOR_HALF_WIDTH + margin + self.rng.random_range(0.0..spread))
    }

    fn building_row(&mut self, side: f64) {
        let setback = self.rng.random_range(9.0..14.0);
        let mut x = self.rng.random_range(-20.0..-5.0);
        while x < 110.0 {
            let len = self.rng.random_range(8.0..25.0);
            let depth = self.rng.random_range(6.0..15.0);
            let height = self.rng.random_range(4.0..20.0);
            let color = self.gray(0.4, 0.8);
            let y = side * (setback + depth / 2.0);
            self.push_box(ElementKind::Building, color, Vec3::new(x + len / 2.0, y, 0.0), [len, depth, height]);
            x += len + self.rng.random_range(1.0..6.0);
        }
    }

    fn wall(&mut self, side: f64) {
        let y = self.side_y(side, 1.0, 2.0);
        let height = self.rng.random_range(1.0..3.0);
        let color = Rgb::new(0.6, 0.45, 0.35);
        let mut x = -15.0;
        while x < 100.0 {
            let len = self.rng.random_range(10.0..20.0);
            self.push_box(ElementKind::Wall, color, Vec3::new(x + len / 2.0, y, 0.0), [len, 0.3, height]);
            x += len;
        }
    }

    fn poles(&mut self, side: f64, count: usize) {
        for _ in 0..count {
            let x = self.rng.random_range(-5.0..60.0);
            let y = self.side_y(side, 0.2, 1.8);
            let h = self.rng.random_range(4.0..8.0);
            self.push_box(ElementKind::Pole, Rgb::new(0.5, 0.5, 0.5), Vec3::new(x, y, 0.0), [0.3, 0.3, h]);
        }
    }

    fn trees(&mut self, side: f64, count: usize) {
        for _ in 0..count {
            let x = self.rng.random_range(-5.0..70.0);
            let crown = self.rng.random_range(2.0..4.0);
            let y = self.side_y(side, crown / 2.0 + 0.2, 3.0);
            let trunk = self.rng.random_range(2.0..3.5);
            let green = self.rng.random_range(0.35..0.6);
            let mut tris = placed_box(Vec3::new(x, y, 0.0), [0.35, 0.35, trunk], 0.0, 0).to_vec();
            tris.extend(placed_box(Vec3::new(x, y, trunk), [crown, crown, crown], 0.0, 0));
            self.elements.push(BackgroundElement {
                kind: ElementKind::Tree,
                color: Rgb::new(0.15, green, 0.12),
                triangles: tris,
            });
        }
    }

    /// Low roadside barriers; some are car-sized, which a size-based
    /// segmenter cannot tell apart from a car.
    fn barriers(&mut self, side: f64, count: usize) {
        for _ in 0..count {
            let x = self.rng.random_range(0.0..50.0);
            let len = self.rng.random_range(2.0..5.0);
            let width = self.rng.random_range(0.4..1.6);
            let height = self.rng.random_range(0.8..1.4);
            let y = self.side_y(side, width / 2.0 + 0.3, 2.0);
            let color = Rgb::new(0.8, 0.75, 0.2);
            self.push_box(ElementKind::Barrier, color, Vec3::new(x, y, 0.0), [len, width, height]);
        }
    }

    fn containers(&mut self, side: f64, count: usize) {
        let mut x = self.rng.random_range(-10.0..5.0);
        for _ in 0..count {
            let len = if self.rng.random_bool(0.5) { 6.1 } else { 12.2 };
            let y = self.side_y(side, 1.5, 3.0);
            let color = Rgb::new(self.rng.random_range(0.2..0.8), 0.3, self.rng.random_range(0.2..0.6));
            self.push_box(ElementKind::Container, color, Vec3::new(x + len / 2.0, y, 0.0), [len, 2.44, 2.6]);
            x += len + self.rng.random_range(2.0..10.0);
        }
    }

    /// Large parked vehicle beyond the corridor, roughly straight ahead.
    fn truck(&mut self) {
        let x = self.rng.random_range(CORRIDOR_END + 8.0..CORRIDOR_END + 30.0);
        let y = self.rng.random_range(-3.0..3.0);
        let color = self.gray(0.5, 0.9);
        self.push_box(ElementKind::Truck, color, Vec3::new(x, y, 0.0), [9.0, 2.6, 3.6]);
    }
}
