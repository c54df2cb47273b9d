//! Heuristic car segmenter: ground cut, single-linkage clustering, size window.
//!
//! Clustering hashes points into cubic cells of edge `r/√3`. Any two points
//! sharing a cell are within `r`, so cells are joined whole; two cells are
//! joined when some pair of their points is within `r`, which can only
//! happen for cells at most two steps apart on every axis. The result is
//! exact single linkage at radius `r`.

use alloc::vec;
use alloc::vec::Vec;

use crate::geom::Vec3;
use crate::lidar::PointCloud;
use crate::math;
use crate::scene::ClassId;

use super::{class_metrics, Prediction};

/// Accepted cluster sizes: `(length, width, height)`, where length is the
/// larger horizontal extent of the cluster's axis-aligned box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SizeWindow {
    pub min: [f64; 3],
    pub max: [f64; 3],
}

impl SizeWindow {
    pub fn accepts(&self, size: [f64; 3]) -> bool {
        (0..3).all(|k| size[k] >= self.min[k] && size[k] <= self.max[k])
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaselineParams {
    /// Points at or below this sensor-frame height are ground (m).
    pub ground: f64,
    /// Linkage radius (m).
    pub radius: f64,
    pub window: SizeWindow,
}

impl Default for BaselineParams {
    fn default() -> Self {
        Self {
            ground: -1.5,
            radius: 0.12,
            window: SizeWindow {
                min: [0.5, 0.0, 0.4],
                max: [6.0, 3.0, 2.2],
            },
        }
    }
}

impl BaselineParams {
    /// Flattened for lexicographic comparison.
    pub fn key(&self) -> [f64; 8] {
        let w = &self.window;
        [
            self.ground, self.radius, w.min[0], w.min[1], w.min[2], w.max[0], w.max[1], w.max[2],
        ]
    }
}

/// Cluster assignment of every point.
#[derive(Debug, Clone, PartialEq)]
pub struct Clustering {
    /// Cluster per point; `None` for ground points.
    pub cluster: Vec<Option<u32>>,
    /// `(length, width, height)` per cluster, ids in order of first point.
    pub sizes: Vec<[f64; 3]>,
}

const NEIGHBOR_REACH: i64 = 2;

struct UnionFind {
    parent: Vec<u32>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n as u32).collect(),
        }
    }

    fn find(&mut self, mut a: u32) -> u32 {
        while self.parent[a as usize] != a {
            let up = self.parent[self.parent[a as usize] as usize];
            self.parent[a as usize] = up;
            a = up;
        }
        a
    }

    fn union(&mut self, a: u32, b: u32) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            // Smaller root wins so the structure does not depend on call order.
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi as usize] = lo;
        }
    }
}

type Key = (i64, i64, i64);

/// Single-linkage clusters of the points above `ground`.
pub fn cluster_points(points: &[Vec3], ground: f64, radius: f64) -> Clustering {
    let above: Vec<u32> = (0..points.len() as u32).filter(|&k| points[k as usize].z > ground).collect();
    let mut cluster = vec![None; points.len()];
    if above.is_empty() {
        return Clustering {
            cluster,
            sizes: Vec::new(),
        };
    }
    let r2 = radius * radius;
    let cell = radius / math::sqrt(3.0);
    let key_of = |p: Vec3| -> Key {
        if cell > 0.0 && cell.is_finite() {
            (
                math::floor(p.x / cell) as i64,
                math::floor(p.y / cell) as i64,
                math::floor(p.z / cell) as i64,
            )
        } else {
            (0, 0, 0)
        }
    };
    let mut keyed: Vec<(Key, u32)> = above.iter().map(|&k| (key_of(points[k as usize]), k)).collect();
    keyed.sort_unstable();

    // Cell table: key and range into `keyed`.
    let mut cells: Vec<(Key, usize, usize)> = Vec::new();
    for (pos, &(key, _)) in keyed.iter().enumerate() {
        match cells.last_mut() {
            Some(last) if last.0 == key => last.2 = pos + 1,
            _ => cells.push((key, pos, pos + 1)),
        }
    }
    let degenerate = !(cell > 0.0 && cell.is_finite());
    let mut uf = UnionFind::new(if degenerate { keyed.len() } else { cells.len() });
    if degenerate {
        // Non-positive radius: every point is its own cluster unless
        // points coincide, so fall back to exact pairwise linkage.
        for a in 0..keyed.len() {
            for b in a + 1..keyed.len() {
                let (pa, pb) = (points[keyed[a].1 as usize], points[keyed[b].1 as usize]);
                if (pa - pb).norm_squared() <= r2 {
                    uf.union(a as u32, b as u32);
                }
            }
        }
    } else {
        // Only neighbors after `a` in key order are visited, so each pair of
        // cells is tested once. Cells sharing (x, y) are contiguous in the
        // sorted table, so every neighbor column costs one search.
        for a in 0..cells.len() {
            let (ka, sa, ea) = cells[a];
            for dx in 0..=NEIGHBOR_REACH {
                for dy in -NEIGHBOR_REACH..=NEIGHBOR_REACH {
                    if (dx, dy) < (0, 0) {
                        continue;
                    }
                    let lo = if (dx, dy) == (0, 0) { 1 } else { -NEIGHBOR_REACH };
                    let first = (ka.0 + dx, ka.1 + dy, ka.2 + lo);
                    let last = (ka.0 + dx, ka.1 + dy, ka.2 + NEIGHBOR_REACH);
                    let start = if (dx, dy) == (0, 0) {
                        a + 1
                    } else {
                        cells.partition_point(|c| c.0 < first)
                    };
                    for b in start..cells.len() {
                        let (kb, sb, eb) = cells[b];
                        if kb > last {
                            break;
                        }
                        if uf.find(a as u32) == uf.find(b as u32) {
                            continue;
                        }
                        let linked = keyed[sa..ea].iter().any(|&(_, i)| {
                            let pi = points[i as usize];
                            keyed[sb..eb].iter().any(|&(_, j)| (pi - points[j as usize]).norm_squared() <= r2)
                        });
                        if linked {
                            uf.union(a as u32, b as u32);
                        }
                    }
                }
            }
        }
    }

    // Point -> cell slot.
    let mut slot_of = vec![0u32; points.len()];
    if degenerate {
        for (pos, &(_, k)) in keyed.iter().enumerate() {
            slot_of[k as usize] = pos as u32;
        }
    } else {
        for (c, &(_, s, e)) in cells.iter().enumerate() {
            for &(_, k) in &keyed[s..e] {
                slot_of[k as usize] = c as u32;
            }
        }
    }

    let slots = if degenerate { keyed.len() } else { cells.len() };
    let mut id_of_root = vec![u32::MAX; slots];
    let mut lo: Vec<Vec3> = Vec::new();
    let mut hi: Vec<Vec3> = Vec::new();
    for &k in &above {
        let root = uf.find(slot_of[k as usize]) as usize;
        if id_of_root[root] == u32::MAX {
            id_of_root[root] = lo.len() as u32;
            lo.push(points[k as usize]);
            hi.push(points[k as usize]);
        }
        let id = id_of_root[root];
        let p = points[k as usize];
        lo[id as usize] = lo[id as usize].min(p);
        hi[id as usize] = hi[id as usize].max(p);
        cluster[k as usize] = Some(id);
    }
    let sizes = lo
        .iter()
        .zip(&hi)
        .map(|(a, b)| {
            let e = *b - *a;
            [e.x.max(e.y), e.x.min(e.y), e.z]
        })
        .collect();
    Clustering { cluster, sizes }
}

/// Labels points of window-fitting clusters as cars.
pub fn label_clusters(c: &Clustering, window: &SizeWindow) -> Prediction {
    let car: Vec<bool> = c.sizes.iter().map(|&s| window.accepts(s)).collect();
    Prediction::new(
        c.cluster
            .iter()
            .map(|id| match id {
                Some(id) if car[*id as usize] => ClassId::CAR,
                _ => ClassId::BACKGROUND,
            })
            .collect(),
    )
}

fn sensor_points(cloud: &PointCloud) -> Vec<Vec3> {
    cloud.points.iter().map(|p| p.xyz).collect()
}

pub fn baseline_segment(cloud: &PointCloud, params: &BaselineParams) -> Prediction {
    let c = cluster_points(&sensor_points(cloud), params.ground, params.radius);
    label_clusters(&c, &params.window)
}

/// Car IoU of `cloud` for each window, clustering once.
pub fn window_ious(cloud: &PointCloud, ground: f64, radius: f64, windows: &[SizeWindow]) -> Vec<f64> {
    let c = cluster_points(&sensor_points(cloud), ground, radius);
    let truth = cloud.labels();
    windows
        .iter()
        .map(|w| {
            let pred = label_clusters(&c, w);
            class_metrics(&pred, &truth, ClassId::CAR).map_or(0.0, |m| m.iou)
        })
        .collect()
}
