//! Bounding-volume hierarchy over a triangle soup.
//!
//! Built top-down with a binned surface-area heuristic. The node array is
//! flat, children of an interior node are adjacent, and leaves reference a
//! contiguous run of the reordered triangle array. Construction only depends
//! on the input order, so the same triangle list always gives the same tree.

use alloc::vec::Vec;

use super::{intersect_edges, Hit, Ray, Triangle, Vec3, TIE_EPSILON};

const BINS: usize = 12;
const MAX_LEAF: usize = 4;
const TRAVERSAL_COST: f64 = 1.0;
const INTERSECT_COST: f64 = 1.0;
/// Boxes are padded so axis-aligned, zero-thickness geometry never falls
/// through the slab test because of rounding.
const BOX_PAD: f64 = 1e-7;
/// Beyond this depth splits fall back to the object median, which bounds the
/// tree depth well below the traversal stack size.
const MEDIAN_DEPTH: usize = 64;
const STACK_SIZE: usize = 128;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb {
    pub min: Vec3,
    pub max: Vec3,
}

impl Aabb {
    pub const EMPTY: Aabb = Aabb {
        min: Vec3::new(f64::INFINITY, f64::INFINITY, f64::INFINITY),
        max: Vec3::new(f64::NEG_INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY),
    };

    #[inline]
    pub fn grow(&mut self, other: &Aabb) {
        self.min = self.min.min(other.min);
        self.max = self.max.max(other.max);
    }

    #[inline]
    pub fn grow_point(&mut self, p: Vec3) {
        self.min = self.min.min(p);
        self.max = self.max.max(p);
    }

    pub fn is_empty(&self) -> bool {
        self.min.x > self.max.x || self.min.y > self.max.y || self.min.z > self.max.z
    }

    pub fn extent(&self) -> Vec3 {
        self.max - self.min
    }

    pub fn center(&self) -> Vec3 {
        (self.min + self.max) * 0.5
    }

    pub fn surface_area(&self) -> f64 {
        if self.is_empty() {
            return 0.0;
        }
        let e = self.extent();
        2.0 * (e.x * e.y + e.y * e.z + e.z * e.x)
    }

    pub fn intersects(&self, other: &Aabb) -> bool {
        self.min.x <= other.max.x
            && self.max.x >= other.min.x
            && self.min.y <= other.max.y
            && self.max.y >= other.min.y
            && self.min.z <= other.max.z
            && self.max.z >= other.min.z
    }

    fn padded(mut self) -> Aabb {
        self.min = self.min - Vec3::splat(BOX_PAD);
        self.max = self.max + Vec3::splat(BOX_PAD);
        self
    }

    /// Entry distance of `ray` into the box, or `None` when the ray misses
    /// it or enters beyond `limit`.
    #[inline]
    fn entry(&self, origin: Vec3, inv_dir: Vec3, limit: f64) -> Option<f64> {
        let mut t0: f64 = 0.0;
        let mut t1 = limit;
        for axis in 0..3 {
            let o = origin[axis];
            let inv = inv_dir[axis];
            if inv.is_infinite() {
                // Direction parallel to this slab.
                if o < self.min[axis] || o > self.max[axis] {
                    return None;
                }
                continue;
            }
            let mut near = (self.min[axis] - o) * inv;
            let mut far = (self.max[axis] - o) * inv;
            if near > far {
                core::mem::swap(&mut near, &mut far);
            }
            t0 = t0.max(near);
            t1 = t1.min(far);
            if t0 > t1 {
                return None;
            }
        }
        Some(t0)
    }
}

#[derive(Debug, Clone, Copy)]
struct Node {
    bounds: Aabb,
    /// First child for interior nodes, first triangle for leaves.
    start: u32,
    /// Triangle count; zero marks an interior node.
    count: u32,
}

/// Triangle stored in traversal order with precomputed edges.
#[derive(Debug, Clone, Copy)]
struct PackedTriangle {
    v0: Vec3,
    e1: Vec3,
    e2: Vec3,
    object_index: u32,
    source_index: u32,
}

/// Spatial index answering nearest-hit queries over an immutable triangle list.
#[derive(Debug, Clone, Default)]
pub struct AccelIndex {
    nodes: Vec<Node>,
    triangles: Vec<PackedTriangle>,
}

struct BuildItem {
    bounds: Aabb,
    centroid: Vec3,
    source: u32,
}

impl AccelIndex {
    /// Indexes every non-degenerate triangle. `Hit::triangle_index` refers
    /// to positions in `triangles`.
    pub fn build(triangles: &[Triangle]) -> Self {
        let mut items: Vec<BuildItem> = triangles
            .iter()
            .enumerate()
            .filter(|(_, t)| !t.is_degenerate())
            .map(|(i, t)| BuildItem {
                bounds: t.bounds().padded(),
                centroid: t.centroid(),
                source: i as u32,
            })
            .collect();
        if items.is_empty() {
            return Self::default();
        }

        let mut nodes = Vec::with_capacity(2 * items.len() / MAX_LEAF + 1);
        nodes.push(Node {
            bounds: Aabb::EMPTY,
            start: 0,
            count: 0,
        });
        // (node index, item range, depth)
        let mut stack = Vec::new();
        stack.push((0usize, 0usize, items.len(), 0usize));
        while let Some((node, lo, hi, depth)) = stack.pop() {
            let mut bounds = Aabb::EMPTY;
            let mut centroid_bounds = Aabb::EMPTY;
            for it in &items[lo..hi] {
                bounds.grow(&it.bounds);
                centroid_bounds.grow_point(it.centroid);
            }
            nodes[node].bounds = bounds;
            let count = hi - lo;
            let split = if count <= MAX_LEAF {
                None
            } else if depth >= MEDIAN_DEPTH {
                Some(median_split(&mut items[lo..hi], &centroid_bounds))
            } else {
                choose_split(&items[lo..hi], &bounds, &centroid_bounds)
                    .map(|(axis, plane)| partition(&mut items[lo..hi], |it| it.centroid[axis] < plane))
            };
            match split {
                Some(offset) => {
                    let mid = lo + offset;
                    let left = nodes.len();
                    for _ in 0..2 {
                        nodes.push(Node {
                            bounds: Aabb::EMPTY,
                            start: 0,
                            count: 0,
                        });
                    }
                    nodes[node].start = left as u32;
                    nodes[node].count = 0;
                    // Right pushed first so the left subtree is laid out first.
                    stack.push((left + 1, mid, hi, depth + 1));
                    stack.push((left, lo, mid, depth + 1));
                }
                None => {
                    nodes[node].start = lo as u32;
                    nodes[node].count = count as u32;
                }
            }
        }

        let packed = items
            .iter()
            .map(|it| {
                let t = &triangles[it.source as usize];
                PackedTriangle {
                    v0: t.v0,
                    e1: t.v1 - t.v0,
                    e2: t.v2 - t.v0,
                    object_index: t.object_index,
                    source_index: it.source,
                }
            })
            .collect();
        Self {
            nodes,
            triangles: packed,
        }
    }

    pub fn len(&self) -> usize {
        self.triangles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triangles.is_empty()
    }

    pub fn bounds(&self) -> Aabb {
        self.nodes.first().map_or(Aabb::EMPTY, |n| n.bounds)
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// Nearest hit along `ray`.
    ///
    /// Hits within `TIE_EPSILON` of the nearest distance are tied; the one
    /// with the lowest `(object_index, triangle_index)` wins, so the answer
    /// never depends on traversal order.
    pub fn first_hit(&self, ray: &Ray) -> Option<Hit> {
        if self.nodes.is_empty() {
            return None;
        }
        let inv_dir = Vec3::new(1.0 / ray.direction.x, 1.0 / ray.direction.y, 1.0 / ray.direction.z);
        let mut ties = TieSet::new();
        let mut stack = [0u32; STACK_SIZE];
        let mut sp = 0usize;
        if self.nodes[0].bounds.entry(ray.origin, inv_dir, ray.max_range).is_none() {
            return None;
        }
        stack[sp] = 0;
        sp += 1;
        while sp > 0 {
            sp -= 1;
            let node = &self.nodes[stack[sp] as usize];
            let limit = ties.limit(ray.max_range);
            if node.count > 0 {
                let first = node.start as usize;
                for tri in &self.triangles[first..first + node.count as usize] {
                    if let Some(t) = intersect_edges(ray, tri.v0, tri.e1, tri.e2) {
                        if t <= limit {
                            ties.offer(t, tri.object_index, tri.source_index);
                        }
                    }
                }
                continue;
            }
            let (a, b) = (node.start, node.start + 1);
            let ta = self.nodes[a as usize].bounds.entry(ray.origin, inv_dir, limit);
            let tb = self.nodes[b as usize].bounds.entry(ray.origin, inv_dir, limit);
            // Push the farther child first so the nearer one is visited next.
            match (ta, tb) {
                (Some(ta), Some(tb)) => {
                    let (near, far) = if tb < ta { (b, a) } else { (a, b) };
                    stack[sp] = far;
                    stack[sp + 1] = near;
                    sp += 2;
                }
                (Some(_), None) => {
                    stack[sp] = a;
                    sp += 1;
                }
                (None, Some(_)) => {
                    stack[sp] = b;
                    sp += 1;
                }
                (None, None) => {}
            }
        }
        ties.winner().map(|(t, object_index, triangle_index)| Hit {
            point: ray.at(t),
            distance: t,
            object_index,
            triangle_index,
        })
    }
}

/// Hits within the tie window of the current nearest distance.
struct TieSet {
    nearest: f64,
    len: usize,
    items: [(f64, u32, u32); 8],
    spill: Vec<(f64, u32, u32)>,
}

impl TieSet {
    fn new() -> Self {
        Self {
            nearest: f64::INFINITY,
            len: 0,
            items: [(0.0, 0, 0); 8],
            spill: Vec::new(),
        }
    }

    /// Farthest distance that can still matter.
    #[inline]
    fn limit(&self, max_range: f64) -> f64 {
        max_range.min(self.nearest + TIE_EPSILON)
    }

    #[inline]
    fn offer(&mut self, t: f64, object: u32, tri: u32) {
        if t < self.nearest {
            self.nearest = t;
            let cutoff = t + TIE_EPSILON;
            let mut kept = 0;
            for k in 0..self.len {
                if self.items[k].0 < cutoff {
                    self.items[kept] = self.items[k];
                    kept += 1;
                }
            }
            self.len = kept;
            self.spill.retain(|c| c.0 < cutoff);
        } else if !(t < self.nearest + TIE_EPSILON) {
            return;
        }
        if self.len < self.items.len() {
            self.items[self.len] = (t, object, tri);
            self.len += 1;
        } else {
            self.spill.push((t, object, tri));
        }
    }

    fn winner(&self) -> Option<(f64, u32, u32)> {
        self.items[..self.len]
            .iter()
            .chain(self.spill.iter())
            .copied()
            .min_by_key(|&(_, o, t)| (o, t))
    }
}

/// Binned SAH split. Returns `None` when a leaf is cheaper.
fn choose_split(items: &[BuildItem], bounds: &Aabb, centroids: &Aabb) -> Option<(usize, f64)> {
    let mut best: Option<(f64, usize, f64)> = None;
    let extent = centroids.extent();
    for axis in 0..3 {
        let lo = centroids.min[axis];
        let span = extent[axis];
        if !(span > 0.0) {
            continue;
        }
        let scale = BINS as f64 / span;
        let mut bin_bounds = [Aabb::EMPTY; BINS];
        let mut bin_counts = [0usize; BINS];
        for it in items {
            let b = (((it.centroid[axis] - lo) * scale) as usize).min(BINS - 1);
            bin_counts[b] += 1;
            bin_bounds[b].grow(&it.bounds);
        }
        // Sweep from the right to get suffix areas/counts.
        let mut right_area = [0.0; BINS];
        let mut right_count = [0usize; BINS];
        let mut acc = Aabb::EMPTY;
        let mut cnt = 0;
        for b in (1..BINS).rev() {
            acc.grow(&bin_bounds[b]);
            cnt += bin_counts[b];
            right_area[b] = acc.surface_area();
            right_count[b] = cnt;
        }
        let mut acc = Aabb::EMPTY;
        let mut cnt = 0;
        for b in 0..BINS - 1 {
            acc.grow(&bin_bounds[b]);
            cnt += bin_counts[b];
            if cnt == 0 || right_count[b + 1] == 0 {
                continue;
            }
            let cost = acc.surface_area() * cnt as f64 + right_area[b + 1] * right_count[b + 1] as f64;
            if best.map_or(true, |(c, _, _)| cost < c) {
                best = Some((cost, axis, lo + (b + 1) as f64 / scale));
            }
        }
    }
    let (cost, axis, plane) = best?;
    let area = bounds.surface_area();
    let split_cost = TRAVERSAL_COST + INTERSECT_COST * cost / area.max(f64::MIN_POSITIVE);
    let leaf_cost = INTERSECT_COST * items.len() as f64;
    if split_cost < leaf_cost || items.len() > 4 * MAX_LEAF {
        Some((axis, plane))
    } else {
        None
    }
}

fn median_split(items: &mut [BuildItem], centroids: &Aabb) -> usize {
    let e = centroids.extent();
    let axis = if e.x >= e.y && e.x >= e.z {
        0
    } else if e.y >= e.z {
        1
    } else {
        2
    };
    items.sort_by(|a, b| {
        a.centroid[axis]
            .total_cmp(&b.centroid[axis])
            .then(a.source.cmp(&b.source))
    });
    items.len() / 2
}

/// Stable-order partition: items satisfying `pred` first. Returns the split.
fn partition<T>(items: &mut [T], pred: impl Fn(&T) -> bool) -> usize {
    let mut mid = 0;
    for k in 0..items.len() {
        if pred(&items[k]) {
            items.swap(mid, k);
            mid += 1;
        }
    }
    // A plane taken from a bin boundary always splits a non-degenerate
    // centroid range, but guard against rounding anyway.
    if mid == 0 || mid == items.len() {
        mid = items.len() / 2;
    }
    mid
}
