//! Exhaustive parameter search for the baseline segmenter.

use alloc::vec::Vec;

use crate::lidar::PointCloud;

use super::{window_ious, BaselineParams, EvalError, SizeWindow};

/// Search space; every combination is a candidate.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamGrid {
    pub ground: Vec<f64>,
    pub radius: Vec<f64>,
    pub windows: Vec<SizeWindow>,
}

impl ParamGrid {
    pub fn single(p: BaselineParams) -> Self {
        Self {
            ground: Vec::from([p.ground]),
            radius: Vec::from([p.radius]),
            windows: Vec::from([p.window]),
        }
    }

    pub fn len(&self) -> usize {
        self.ground.len() * self.radius.len() * self.windows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// All candidates, `(ground, radius)`-major.
    pub fn candidates(&self) -> Vec<BaselineParams> {
        let mut out = Vec::with_capacity(self.len());
        for &ground in &self.ground {
            for &radius in &self.radius {
                for &window in &self.windows {
                    out.push(BaselineParams { ground, radius, window });
                }
            }
        }
        out
    }
}

/// Car IoU of one cloud under every candidate of `grid`, in
/// [`ParamGrid::candidates`] order. Clusters once per `(ground, radius)`.
pub fn cloud_scores(grid: &ParamGrid, cloud: &PointCloud) -> Vec<f64> {
    let mut out = Vec::with_capacity(grid.len());
    for &g in &grid.ground {
        for &r in &grid.radius {
            out.extend(window_ious(cloud, g, r, &grid.windows));
        }
    }
    out
}

/// Pairs candidates with the mean of per-cloud scores. Sums run in the
/// order given, so callers computing `per_cloud` in parallel get the same
/// result as a sequential run.
pub fn mean_scores(grid: &ParamGrid, per_cloud: &[Vec<f64>]) -> Vec<(BaselineParams, f64)> {
    let mut sums = alloc::vec![0.0; grid.len()];
    for scores in per_cloud {
        for (s, v) in sums.iter_mut().zip(scores) {
            *s += v;
        }
    }
    let n = per_cloud.len().max(1) as f64;
    grid.candidates().into_iter().zip(sums).map(|(p, s)| (p, s / n)).collect()
}

/// Mean car IoU over `clouds` for every candidate of `grid`.
pub fn candidate_scores(grid: &ParamGrid, clouds: &[PointCloud]) -> Vec<(BaselineParams, f64)> {
    let per_cloud: Vec<Vec<f64>> = clouds.iter().map(|c| cloud_scores(grid, c)).collect();
    mean_scores(grid, &per_cloud)
}

/// Highest score wins; equal scores go to the lexicographically smallest
/// parameter tuple `(ground, radius, window min, window max)`.
pub fn pick_best(scores: &[(BaselineParams, f64)]) -> Option<(BaselineParams, f64)> {
    let lex = |a: &BaselineParams, b: &BaselineParams| {
        a.key().iter().zip(b.key().iter()).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(core::cmp::Ordering::Equal)
    };
    scores.iter().copied().reduce(|best, cand| {
        if cand.1 > best.1 || (cand.1 == best.1 && lex(&cand.0, &best.0).is_lt()) {
            cand
        } else {
            best
        }
    })
}

/// The "retraining" step: the grid candidate with the best mean car IoU on
/// the retraining clouds.
pub fn fit_baseline(grid: &ParamGrid, clouds: &[PointCloud]) -> Result<(BaselineParams, f64), EvalError> {
    if clouds.is_empty() {
        return Err(EvalError::EmptyRetrainSet);
    }
    if grid.is_empty() {
        return Err(EvalError::EmptySearchGrid);
    }
    Ok(pick_best(&candidate_scores(grid, clouds)).expect("non-empty grid"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{Pose, Vec3};
    use crate::lidar::{LabeledPoint, LidarConfig, Provenance};
    use crate::scene::ClassId;

    fn cloud(points: Vec<(Vec3, ClassId)>) -> PointCloud {
        PointCloud {
            points: points
                .into_iter()
                .map(|(xyz, class_id)| LabeledPoint {
                    xyz,
                    range: xyz.norm(),
                    row: 0,
                    col: 0,
                    class_id,
                    instance_id: 0,
                })
                .collect(),
            config: LidarConfig::default(),
            pose: Pose::identity(),
            provenance: Provenance::default(),
        }
    }

    /// A car sampled as horizontal lines 0.3 m apart: only r ≥ 0.3 joins them.
    fn striped_car() -> PointCloud {
        let mut pts = Vec::new();
        for row in 0..5 {
            for k in 0..40 {
                pts.push((Vec3::new(15.0, -2.0 + k as f64 * 0.1, -1.4 + row as f64 * 0.3), ClassId::CAR));
            }
        }
        cloud(pts)
    }

    #[test]
    fn single_candidate_is_returned() {
        let p = BaselineParams::default();
        let (best, _) = fit_baseline(&ParamGrid::single(p), &[striped_car()]).unwrap();
        assert_eq!(best, p);
    }

    #[test]
    fn larger_radius_wins_when_it_helps() {
        let mut grid = ParamGrid::single(BaselineParams::default());
        grid.radius = Vec::from([0.1, 0.2, 0.35]);
        let (best, score) = fit_baseline(&grid, &[striped_car()]).unwrap();
        assert_eq!(best.radius, 0.35);
        assert_eq!(score, 1.0);
    }

    #[test]
    fn ties_go_to_smaller_params() {
        let base = BaselineParams::default();
        let a = BaselineParams { radius: 0.4, ..base };
        let b = BaselineParams { radius: 0.3, ..base };
        assert_eq!(pick_best(&[(a, 0.5), (b, 0.5)]).unwrap().0, b);
        assert_eq!(pick_best(&[(a, 0.6), (b, 0.5)]).unwrap().0, a);
    }

    #[test]
    fn empty_inputs_are_errors() {
        let grid = ParamGrid::single(BaselineParams::default());
        assert_eq!(fit_baseline(&grid, &[]), Err(EvalError::EmptyRetrainSet));
        let mut empty = grid.clone();
        empty.radius.clear();
        assert_eq!(fit_baseline(&empty, &[striped_car()]), Err(EvalError::EmptySearchGrid));
    }
}
