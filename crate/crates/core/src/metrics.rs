//! Tracking accuracy: per-frame overlap, success curve and its AUC.

use serde::{Deserialize, Serialize};

use crate::bbox::BoundingBox;
use crate::error::{Error, Result};

/// Number of overlap thresholds on the success curve (`0.00, 0.01, .., 1.00`).
pub const CURVE_POINTS: usize = 101;

/// Intersection over union of a tracked and a ground-truth box.
pub fn overlap(tracked: &BoundingBox, truth: &BoundingBox) -> f64 {
    tracked.overlap(truth)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuccessCurve {
    pub thresholds: Vec<f64>,
    pub success_rate: Vec<f64>,
}

fn threshold_at(i: usize) -> f64 {
    i as f64 / (CURVE_POINTS - 1) as f64
}

/// Fraction of frames whose overlap reaches each threshold (`S >= t`).
pub fn success_curve(overlaps: &[f64]) -> Result<SuccessCurve> {
    if overlaps.is_empty() {
        return Err(Error::EmptyInput("overlaps"));
    }
    if let Some(bad) = overlaps.iter().find(|s| !(0.0..=1.0).contains(*s)) {
        return Err(Error::InvalidConfig(format!("overlap {bad} outside [0, 1]")));
    }
    let n = overlaps.len() as f64;
    let thresholds: Vec<f64> = (0..CURVE_POINTS).map(threshold_at).collect();
    let success_rate = thresholds
        .iter()
        .map(|&t| overlaps.iter().filter(|&&s| s >= t).count() as f64 / n)
        .collect();
    Ok(SuccessCurve {
        thresholds,
        success_rate,
    })
}

/// Trapezoidal area under the success curve.
pub fn auc(curve: &SuccessCurve) -> f64 {
    let r = &curve.success_rate;
    if r.len() < 2 {
        return 0.0;
    }
    let pair_sum: f64 = r.windows(2).map(|w| w[0] + w[1]).sum();
    // uniform spacing, so dividing once keeps the perfect curve at exactly 1
    pair_sum / (2.0 * (r.len() - 1) as f64)
}

/// Per-frame overlaps of two equally long box sequences.
pub fn overlaps(tracked: &[BoundingBox], truth: &[BoundingBox]) -> Result<Vec<f64>> {
    if tracked.len() != truth.len() {
        return Err(Error::InvalidConfig(format!(
            "{} tracked boxes but {} ground-truth boxes",
            tracked.len(),
            truth.len()
        )));
    }
    Ok(tracked.iter().zip(truth).map(|(t, a)| overlap(t, a)).collect())
}
