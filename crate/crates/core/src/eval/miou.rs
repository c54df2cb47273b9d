use alloc::vec;
use alloc::vec::Vec;

use super::{EvalError, GridCell};

/// IoU of one scan, tagged with its sweep cell and background.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IoUSample {
    pub cell: GridCell,
    pub background_id: u32,
    pub iou: f64,
}

/// Per-cell mean IoU over a common set of backgrounds.
#[derive(Debug, Clone, PartialEq)]
pub struct MIoUMap {
    pub nx: u32,
    pub ny: u32,
    /// Backgrounds averaged in every cell, ascending.
    pub background_ids: Vec<u32>,
    /// Row-major: row `iy`, column `ix`.
    pub values: Vec<f64>,
    pub counts: Vec<u32>,
}

impl MIoUMap {
    /// Builds a map directly from row-major values (one background each).
    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let ny = rows.len() as u32;
        let nx = rows.first().map_or(0, |r| r.len()) as u32;
        Self {
            nx,
            ny,
            background_ids: vec![0],
            values: rows.iter().flatten().copied().collect(),
            counts: vec![1; (nx * ny) as usize],
        }
    }

    pub fn n(&self) -> usize {
        self.background_ids.len()
    }

    pub fn get(&self, cell: GridCell) -> f64 {
        self.values[(cell.iy * self.nx + cell.ix) as usize]
    }

    /// Cells in row-major order.
    pub fn cells(&self) -> impl Iterator<Item = GridCell> + '_ {
        (0..self.ny).flat_map(move |iy| (0..self.nx).map(move |ix| GridCell::new(ix, iy)))
    }

    /// Mean of each row `iy`.
    pub fn row_means(&self) -> Vec<f64> {
        if self.nx == 0 {
            return Vec::new();
        }
        self.values
            .chunks(self.nx as usize)
            .map(|r| r.iter().sum::<f64>() / r.len() as f64)
            .collect()
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// Mean over a subset of cells.
    pub fn mean_over(&self, cells: &[GridCell]) -> Option<f64> {
        if cells.is_empty() {
            return None;
        }
        Some(cells.iter().map(|&c| self.get(c)).sum::<f64>() / cells.len() as f64)
    }
}

/// Averages per-scan IoUs into a grid. The grid spans `0..=max ix` by
/// `0..=max iy`, and every cell must have exactly one sample for each
/// background that appears anywhere in the input.
pub fn miou_map(samples: &[IoUSample]) -> Result<MIoUMap, EvalError> {
    if samples.is_empty() {
        return Err(EvalError::NoSamples);
    }
    let mut backgrounds: Vec<u32> = samples.iter().map(|s| s.background_id).collect();
    backgrounds.sort_unstable();
    backgrounds.dedup();
    let nx = samples.iter().map(|s| s.cell.ix).max().unwrap_or(0) + 1;
    let ny = samples.iter().map(|s| s.cell.iy).max().unwrap_or(0) + 1;

    let mut sorted: Vec<&IoUSample> = samples.iter().collect();
    sorted.sort_by_key(|s| (s.cell.iy, s.cell.ix, s.background_id));

    let n = backgrounds.len();
    let mut values = Vec::with_capacity((nx * ny) as usize);
    let mut it = sorted.into_iter().peekable();
    for iy in 0..ny {
        for ix in 0..nx {
            let mut sum = 0.0;
            for &bg in &backgrounds {
                match it.peek() {
                    Some(s) if s.cell == GridCell::new(ix, iy) && s.background_id == bg => {
                        if !(0.0..=1.0).contains(&s.iou) {
                            return Err(EvalError::InvalidIoU(s.iou));
                        }
                        sum += s.iou;
                        it.next();
                    }
                    _ => return Err(EvalError::MissingSample { ix, iy, background: bg }),
                }
            }
            if let Some(s) = it.peek() {
                if s.cell == GridCell::new(ix, iy) {
                    return Err(EvalError::DuplicateSample {
                        ix,
                        iy,
                        background: s.background_id,
                    });
                }
            }
            values.push(sum / n as f64);
        }
    }
    Ok(MIoUMap {
        nx,
        ny,
        background_ids: backgrounds,
        values,
        counts: vec![n as u32; (nx * ny) as usize],
    })
}

/// Cells whose mIoU is strictly below `tau`, sorted by `(iy, ix)`.
pub fn select_blind_spots(map: &MIoUMap, tau: f64) -> Result<Vec<GridCell>, EvalError> {
    if !(0.0..=1.0).contains(&tau) {
        return Err(EvalError::InvalidThreshold(tau));
    }
    Ok(map.cells().filter(|&c| map.get(c) < tau).collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Improvement {
    pub cell: GridCell,
    pub before: f64,
    pub after: f64,
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImprovementReport {
    /// Ascending by delta; equal deltas keep `(iy, ix)` order.
    pub deltas: Vec<Improvement>,
    pub improved: usize,
    pub degraded: usize,
    pub unchanged: usize,
}

pub fn improvement_report(before: &MIoUMap, after: &MIoUMap) -> Result<ImprovementReport, EvalError> {
    if before.nx != after.nx || before.ny != after.ny || before.n() != after.n() {
        return Err(EvalError::GridMismatch);
    }
    let mut deltas: Vec<Improvement> = before
        .cells()
        .map(|cell| {
            let (b, a) = (before.get(cell), after.get(cell));
            Improvement {
                cell,
                before: b,
                after: a,
                delta: a - b,
            }
        })
        .collect();
    deltas.sort_by(|x, y| x.delta.total_cmp(&y.delta));
    let improved = deltas.iter().filter(|d| d.delta > 0.0).count();
    let degraded = deltas.iter().filter(|d| d.delta < 0.0).count();
    Ok(ImprovementReport {
        unchanged: deltas.len() - improved - degraded,
        deltas,
        improved,
        degraded,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(ix: u32, iy: u32, bg: u32, iou: f64) -> IoUSample {
        IoUSample {
            cell: GridCell::new(ix, iy),
            background_id: bg,
            iou,
        }
    }

    #[test]
    fn two_background_mean() {
        let m = miou_map(&[s(0, 0, 3, 0.5), s(0, 0, 9, 0.7)]).unwrap();
        assert!((m.values[0] - 0.6).abs() < 1e-15);
        assert_eq!(m.n(), 2);
        assert_eq!(m.counts, [2]);
    }

    #[test]
    fn single_background_is_identity() {
        let samples: Vec<_> = (0..6).map(|k| s(k % 3, k / 3, 0, k as f64 / 10.0)).collect();
        let m = miou_map(&samples).unwrap();
        assert_eq!(m.values, [0.0, 0.1, 0.2, 0.3, 0.4, 0.5]);
    }

    #[test]
    fn ragged_coverage_is_an_error() {
        let r = miou_map(&[s(0, 0, 0, 0.5), s(0, 0, 1, 0.5), s(1, 0, 0, 0.5)]);
        assert_eq!(r, Err(EvalError::MissingSample { ix: 1, iy: 0, background: 1 }));
        let r = miou_map(&[s(0, 0, 0, 0.5), s(0, 0, 0, 0.6)]);
        assert!(matches!(r, Err(EvalError::DuplicateSample { .. })));
        assert_eq!(miou_map(&[]), Err(EvalError::NoSamples));
    }

    #[test]
    fn threshold_selection() {
        let m = MIoUMap::from_rows(&[vec![0.7, 0.6], vec![0.64, 0.66]]);
        assert_eq!(select_blind_spots(&m, 0.65).unwrap(), [GridCell::new(1, 0), GridCell::new(0, 1)]);
        assert!(select_blind_spots(&m, 0.0).unwrap().is_empty());
        assert_eq!(select_blind_spots(&m, 1.0).unwrap().len(), 4);
        assert!(select_blind_spots(&m, 1.01).is_err());
    }

    #[test]
    fn improvement_ordering() {
        let before = MIoUMap::from_rows(&[vec![0.5, 0.5, 0.5]]);
        let same = improvement_report(&before, &before).unwrap();
        assert!(same.deltas.iter().all(|d| d.delta == 0.0));
        assert_eq!(same.unchanged, 3);

        let after = MIoUMap::from_rows(&[vec![0.5, 0.7, 0.5]]);
        let r = improvement_report(&before, &after).unwrap();
        let last = r.deltas.last().unwrap();
        assert_eq!(last.cell, GridCell::new(1, 0));
        assert!((last.delta - 0.2).abs() < 1e-12);
        assert_eq!((r.improved, r.degraded, r.unchanged), (1, 0, 2));

        let other = MIoUMap::from_rows(&[vec![0.5, 0.5]]);
        assert_eq!(improvement_report(&before, &other), Err(EvalError::GridMismatch));
    }
}
