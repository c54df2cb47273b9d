//! Segmentation metrics and the blind-spot loop.

use alloc::string::String;
use alloc::vec::Vec;

use thiserror::Error;

use crate::scene::ClassId;

mod fit;
mod metrics;
mod miou;
mod retrain;
mod segment;

pub use crate::scene::GridCell;
pub use fit::{candidate_scores, cloud_scores, fit_baseline, mean_scores, pick_best, ParamGrid};
pub use metrics::{class_metrics, mean_class_iou, spearman, ClassMetrics};
pub use miou::{improvement_report, miou_map, select_blind_spots, Improvement, ImprovementReport, IoUSample, MIoUMap};
pub use retrain::{build_retrain_set, RecordRef, RetrainSet, Split};
pub use segment::{baseline_segment, cluster_points, label_clusters, window_ious, BaselineParams, Clustering, SizeWindow};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("prediction has {pred} entries but the ground truth has {truth}")]
    LengthMismatch { pred: usize, truth: usize },
    #[error("cloud {cloud}: expected {expected} predictions, found {got}")]
    CountMismatch { cloud: String, expected: usize, got: usize },
    #[error("cloud {cloud}: unknown class id {class} at point {index}")]
    UnknownClass { cloud: String, index: usize, class: u8 },
    #[error("cell ({ix}, {iy}) is not covered by background {background}")]
    MissingSample { ix: u32, iy: u32, background: u32 },
    #[error("cell ({ix}, {iy}) has two results for background {background}")]
    DuplicateSample { ix: u32, iy: u32, background: u32 },
    #[error("no samples to aggregate")]
    NoSamples,
    #[error("IoU {0} is outside [0, 1]")]
    InvalidIoU(f64),
    #[error("threshold {0} is outside [0, 1]")]
    InvalidThreshold(f64),
    #[error("maps have different grids or background counts")]
    GridMismatch,
    #[error("background {0} is in both the validation and retraining splits")]
    OverlappingSplit(u32),
    #[error("no scan for cell ({ix}, {iy}) on retraining background {background}")]
    MissingRecord { ix: u32, iy: u32, background: u32 },
    #[error("retraining set is empty")]
    EmptyRetrainSet,
    #[error("parameter search grid is empty")]
    EmptySearchGrid,
}

/// Per-point predicted classes, index-aligned with a point cloud.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Prediction {
    pub classes: Vec<ClassId>,
}

impl Prediction {
    pub fn new(classes: Vec<ClassId>) -> Self {
        Self { classes }
    }

    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    /// Parses one class byte per point, checking the count and that every
    /// id is a known class.
    pub fn from_bytes(bytes: &[u8], expected: usize, cloud: &str) -> Result<Self, EvalError> {
        if bytes.len() != expected {
            return Err(EvalError::CountMismatch {
                cloud: String::from(cloud),
                expected,
                got: bytes.len(),
            });
        }
        let mut classes = Vec::with_capacity(bytes.len());
        for (index, &b) in bytes.iter().enumerate() {
            let c = ClassId(b);
            if !c.is_known() {
                return Err(EvalError::UnknownClass {
                    cloud: String::from(cloud),
                    index,
                    class: b,
                });
            }
            classes.push(c);
        }
        Ok(Self { classes })
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        self.classes.iter().map(|c| c.0).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prediction_bytes_round_trip() {
        let p = Prediction::new(Vec::from([ClassId::CAR, ClassId::BACKGROUND, ClassId::PEDESTRIAN]));
        assert_eq!(Prediction::from_bytes(&p.to_bytes(), 3, "c").unwrap(), p);
    }

    #[test]
    fn prediction_count_and_class_checks() {
        assert!(matches!(
            Prediction::from_bytes(&[0, 1], 3, "scan-7"),
            Err(EvalError::CountMismatch { ref cloud, expected: 3, got: 2 }) if cloud == "scan-7"
        ));
        assert!(matches!(
            Prediction::from_bytes(&[0, 9], 2, "x"),
            Err(EvalError::UnknownClass { index: 1, class: 9, .. })
        ));
    }
}
