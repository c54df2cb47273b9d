use alloc::vec::Vec;

use super::{EvalError, GridCell};

/// Background-wise split into validation and retraining backgrounds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Split {
    pub validation: Vec<u32>,
    pub retrain: Vec<u32>,
}

impl Split {
    pub fn new(validation: Vec<u32>, retrain: Vec<u32>) -> Result<Self, EvalError> {
        if let Some(&bg) = validation.iter().find(|v| retrain.contains(v)) {
            return Err(EvalError::OverlappingSplit(bg));
        }
        Ok(Self { validation, retrain })
    }

    /// The first `n_validation` ids validate, the rest are for retraining.
    pub fn leading(background_ids: &[u32], n_validation: usize) -> Result<Self, EvalError> {
        let k = n_validation.min(background_ids.len());
        Self::new(background_ids[..k].to_vec(), background_ids[k..].to_vec())
    }
}

/// A scan available for retraining, as listed in a sweep manifest.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RecordRef {
    /// Position of the record in the manifest.
    pub index: usize,
    pub cell: GridCell,
    pub background_id: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RetrainSet {
    pub cells: Vec<GridCell>,
    /// Ordered by cell (as given), then by retraining background.
    pub records: Vec<RecordRef>,
    pub split: Split,
}

impl RetrainSet {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

/// Picks the scan for every `(cell, retraining background)` pair. Each pair
/// must exist; when a manifest lists a pair twice the first listing wins.
pub fn build_retrain_set(cells: &[GridCell], records: &[RecordRef], split: &Split) -> Result<RetrainSet, EvalError> {
    if let Some(&bg) = split.validation.iter().find(|v| split.retrain.contains(v)) {
        return Err(EvalError::OverlappingSplit(bg));
    }
    let mut out = Vec::with_capacity(cells.len() * split.retrain.len());
    for &cell in cells {
        for &bg in &split.retrain {
            let r = records
                .iter()
                .find(|r| r.cell == cell && r.background_id == bg)
                .ok_or(EvalError::MissingRecord {
                    ix: cell.ix,
                    iy: cell.iy,
                    background: bg,
                })?;
            out.push(*r);
        }
    }
    Ok(RetrainSet {
        cells: cells.to_vec(),
        records: out,
        split: split.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn grid_records(nx: u32, ny: u32, bgs: u32) -> Vec<RecordRef> {
        let mut v = Vec::new();
        for bg in 0..bgs {
            for iy in 0..ny {
                for ix in 0..nx {
                    v.push(RecordRef {
                        index: v.len(),
                        cell: GridCell::new(ix, iy),
                        background_id: bg,
                    });
                }
            }
        }
        v
    }

    #[test]
    fn cardinality_is_cells_times_backgrounds() {
        let records = grid_records(10, 15, 15);
        let ids: Vec<u32> = (0..15).collect();
        let split = Split::leading(&ids, 7).unwrap();
        assert_eq!(split.retrain.len(), 8);
        let cells: Vec<_> = (0..20).map(|k| GridCell::new(k % 10, k / 10)).collect();
        let set = build_retrain_set(&cells, &records, &split).unwrap();
        assert_eq!(set.len(), 160);
        assert!(set.records.iter().all(|r| r.background_id >= 7));
        assert!(build_retrain_set(&[], &records, &split).unwrap().is_empty());
    }

    #[test]
    fn overlapping_split_rejected() {
        assert_eq!(Split::new(vec![0, 1], vec![1, 2]), Err(EvalError::OverlappingSplit(1)));
        let bad = Split {
            validation: vec![3],
            retrain: vec![3],
        };
        assert!(build_retrain_set(&[], &[], &bad).is_err());
    }

    #[test]
    fn missing_record_reported() {
        let records = grid_records(2, 2, 2);
        let split = Split::new(vec![0], vec![1, 5]).unwrap();
        assert_eq!(
            build_retrain_set(&[GridCell::new(1, 1)], &records, &split),
            Err(EvalError::MissingRecord { ix: 1, iy: 1, background: 5 })
        );
    }
}
