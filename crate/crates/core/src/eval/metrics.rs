use alloc::vec::Vec;

use crate::scene::ClassId;

use super::{EvalError, Prediction};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassMetrics {
    pub class_id: ClassId,
    pub iou: f64,
    pub precision: f64,
    pub recall: f64,
    pub true_pos: u64,
    pub false_pos: u64,
    pub false_neg: u64,
}

/// `num / den`, or the empty-set policy when `den` is zero: 1 if both the
/// predicted and the true set are empty, 0 otherwise.
fn ratio(num: u64, den: u64, both_empty: bool) -> f64 {
    if den == 0 {
        if both_empty {
            1.0
        } else {
            0.0
        }
    } else {
        num as f64 / den as f64
    }
}

pub fn class_metrics(pred: &Prediction, truth: &[ClassId], class_id: ClassId) -> Result<ClassMetrics, EvalError> {
    if pred.len() != truth.len() {
        return Err(EvalError::LengthMismatch {
            pred: pred.len(),
            truth: truth.len(),
        });
    }
    let (mut tp, mut fp, mut fneg) = (0u64, 0u64, 0u64);
    for (&p, &t) in pred.classes.iter().zip(truth) {
        match (p == class_id, t == class_id) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fneg += 1,
            (false, false) => {}
        }
    }
    let both_empty = tp + fp == 0 && tp + fneg == 0;
    Ok(ClassMetrics {
        class_id,
        iou: ratio(tp, tp + fp + fneg, both_empty),
        precision: ratio(tp, tp + fp, both_empty),
        recall: ratio(tp, tp + fneg, both_empty),
        true_pos: tp,
        false_pos: fp,
        false_neg: fneg,
    })
}

/// Mean IoU of `class_id` over `(prediction, truth)` pairs.
pub fn mean_class_iou<'a>(
    pairs: impl IntoIterator<Item = (&'a Prediction, &'a [ClassId])>,
    class_id: ClassId,
) -> Result<f64, EvalError> {
    let mut sum = 0.0;
    let mut n = 0usize;
    for (p, t) in pairs {
        sum += class_metrics(p, t, class_id)?.iou;
        n += 1;
    }
    if n == 0 {
        return Err(EvalError::NoSamples);
    }
    Ok(sum / n as f64)
}

/// Ranks with ties sharing their average rank (1-based).
fn average_ranks(v: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..v.len()).collect();
    order.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut ranks = alloc::vec![0.0; v.len()];
    let mut k = 0;
    while k < order.len() {
        let mut end = k + 1;
        while end < order.len() && v[order[end]] == v[order[k]] {
            end += 1;
        }
        let avg = (k + end + 1) as f64 / 2.0;
        for &idx in &order[k..end] {
            ranks[idx] = avg;
        }
        k = end;
    }
    ranks
}

/// Spearman rank correlation (Pearson correlation of average ranks).
/// `None` for fewer than two samples or when either side is constant.
pub fn spearman(a: &[f64], b: &[f64]) -> Option<f64> {
    if a.len() != b.len() || a.len() < 2 {
        return None;
    }
    let (ra, rb) = (average_ranks(a), average_ranks(b));
    let n = a.len() as f64;
    let (ma, mb) = (ra.iter().sum::<f64>() / n, rb.iter().sum::<f64>() / n);
    let (mut cov, mut va, mut vb) = (0.0, 0.0, 0.0);
    for (x, y) in ra.iter().zip(&rb) {
        cov += (x - ma) * (y - mb);
        va += (x - ma) * (x - ma);
        vb += (y - mb) * (y - mb);
    }
    if va == 0.0 || vb == 0.0 {
        return None;
    }
    Some(cov / crate::math::sqrt(va * vb))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn sets(n: usize, pred: &[usize], truth: &[usize]) -> (Prediction, Vec<ClassId>) {
        let mut p = vec![ClassId::BACKGROUND; n];
        let mut t = vec![ClassId::BACKGROUND; n];
        for &k in pred {
            p[k] = ClassId::CAR;
        }
        for &k in truth {
            t[k] = ClassId::CAR;
        }
        (Prediction::new(p), t)
    }

    #[test]
    fn hand_counted_overlap() {
        let (p, t) = sets(6, &[1, 2, 3], &[2, 3, 4]);
        let m = class_metrics(&p, &t, ClassId::CAR).unwrap();
        assert_eq!((m.true_pos, m.false_pos, m.false_neg), (2, 1, 1));
        assert_eq!(m.iou, 0.5);
        assert!((m.precision - 2.0 / 3.0).abs() < 1e-15);
        assert!((m.recall - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn perfect_and_empty_cases() {
        let (p, t) = sets(5, &[0, 4], &[0, 4]);
        let m = class_metrics(&p, &t, ClassId::CAR).unwrap();
        assert_eq!((m.iou, m.precision, m.recall), (1.0, 1.0, 1.0));

        let (p, t) = sets(5, &[], &[1]);
        let m = class_metrics(&p, &t, ClassId::CAR).unwrap();
        assert_eq!((m.iou, m.precision, m.recall), (0.0, 0.0, 0.0));

        let (p, t) = sets(5, &[], &[]);
        let m = class_metrics(&p, &t, ClassId::CAR).unwrap();
        assert_eq!((m.iou, m.precision, m.recall), (1.0, 1.0, 1.0));
    }

    #[test]
    fn length_mismatch_is_an_error() {
        let (p, _) = sets(3, &[], &[]);
        assert!(class_metrics(&p, &[ClassId::CAR], ClassId::CAR).is_err());
    }

    #[test]
    fn spearman_known_values() {
        assert_eq!(spearman(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]), Some(-1.0));
        assert_eq!(spearman(&[1.0, 2.0, 3.0], &[10.0, 20.0, 30.0]), Some(1.0));
        assert_eq!(spearman(&[1.0, 1.0], &[1.0, 2.0]), None);
        // Ties: ranks (1.5, 1.5, 3) vs (1, 2, 3).
        let r = spearman(&[5.0, 5.0, 7.0], &[1.0, 2.0, 3.0]).unwrap();
        assert!((r - 0.8660254037844386).abs() < 1e-12);
    }
}
