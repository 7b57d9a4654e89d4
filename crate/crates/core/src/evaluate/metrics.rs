use serde::Serialize;

use crate::error::{Error, Result};

/// Per-timestep agreement between binary label sequences.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SegmentationMetrics {
    pub accuracy: f64,
    pub iou: f64,
    pub f1: f64,
}

/// Accuracy, intersection-over-union and F1. IoU and F1 are 1 when both
/// sequences are all zero.
pub fn segmentation_metrics(pred: &[u8], truth: &[u8]) -> Result<SegmentationMetrics> {
    if pred.len() != truth.len() {
        return Err(Error::LengthMismatch(pred.len(), truth.len()));
    }
    let (mut tp, mut fp, mut fn_, mut tn) = (0usize, 0usize, 0usize, 0usize);
    for (&p, &t) in pred.iter().zip(truth) {
        match (p != 0, t != 0) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
            (false, false) => tn += 1,
        }
    }
    let n = pred.len();
    let accuracy = if n == 0 { 1.0 } else { (tp + tn) as f64 / n as f64 };
    let union = tp + fp + fn_;
    let iou = if union == 0 { 1.0 } else { tp as f64 / union as f64 };
    let f1 = if union == 0 { 1.0 } else { 2.0 * tp as f64 / (2 * tp + fp + fn_) as f64 };
    Ok(SegmentationMetrics { accuracy, iou, f1 })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        let t = [1, 0, 1, 0];
        let m = segmentation_metrics(&t, &t).unwrap();
        assert_eq!((m.accuracy, m.iou, m.f1), (1.0, 1.0, 1.0));

        let not_t = [0, 1, 0, 1];
        assert_eq!(segmentation_metrics(&not_t, &t).unwrap().accuracy, 0.0);

        let m = segmentation_metrics(&[1, 1, 0, 0], &[0, 1, 1, 0]).unwrap();
        assert_eq!(m.accuracy, 0.5);
        assert!((m.iou - 1.0 / 3.0).abs() < 1e-15);
        assert!((m.f1 - 0.5).abs() < 1e-15);

        let m = segmentation_metrics(&[0, 0], &[0, 0]).unwrap();
        assert_eq!((m.iou, m.f1), (1.0, 1.0));
        assert_eq!(segmentation_metrics(&[0], &[0, 1]), Err(Error::LengthMismatch(1, 2)));
    }
}
