//! Per-frame tracking loop.
//!
//! On the CeNN: DoG features and pooling, then THRES, LOGAND with the
//! location mask, RECALL of the touched objects, SHADOWL/SHADOWD for the
//! extents and DILATION of the object for the next location mask. On the
//! host: the weighted sum, the centroid, and the two Kalman filters.

use serde::{Deserialize, Serialize};

use crate::bbox::BoundingBox;
use crate::error::{Error, Result};
use crate::image::Image;
use crate::kalman::{KalmanFilter, KalmanNoise};
use crate::library::ShadowDirection;
use crate::ops;
use crate::solver::SolverConfig;
use crate::trainer::{self, TrainedModel};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrackerConfig {
    /// Cells the object may move between frames.
    pub dilation_radius: usize,
    /// Weak filter on the centroid.
    pub motion_noise: KalmanNoise,
    /// Strong filter on the box size.
    pub size_noise: KalmanNoise,
    /// Lower bound on the resized box side, cells.
    pub min_size: f64,
}

impl Default for TrackerConfig {
    fn default() -> Self {
        Self {
            dilation_radius: 3,
            motion_noise: KalmanNoise::WEAK,
            size_noise: KalmanNoise::STRONG,
            min_size: 4.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrackState {
    pub model: TrainedModel,
    pub bbox: BoundingBox,
    pub location_mask: Image,
    pub motion_kf: KalmanFilter,
    pub size_kf: KalmanFilter,
    pub frame_index: usize,
}

/// Tracking output for one frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameResult {
    pub frame_index: usize,
    pub bbox: BoundingBox,
    pub lost: bool,
    /// Cells in the accepted object mask.
    pub area: usize,
}

fn check_dims(image: &Image, width: usize, height: usize) -> Result<()> {
    if image.width() != width || image.height() != height {
        return Err(Error::DimensionMismatch {
            left_w: image.width(),
            left_h: image.height(),
            right_w: width,
            right_h: height,
        });
    }
    Ok(())
}

pub fn init(
    model: &TrainedModel,
    first_frame: &Image,
    bbox: &BoundingBox,
    cfg: &TrackerConfig,
    solver: &SolverConfig,
) -> Result<TrackState> {
    model.validate()?;
    let (w, h) = (first_frame.width(), first_frame.height());
    bbox.require_within(w, h)?;
    let location_mask = ops::dilate(&bbox.mask(w, h), cfg.dilation_radius, solver)?;
    let (cx, cy) = bbox.center();
    Ok(TrackState {
        model: model.clone(),
        bbox: *bbox,
        location_mask,
        motion_kf: KalmanFilter::new([cx, cy], cfg.motion_noise)?,
        size_kf: KalmanFilter::new([bbox.w, bbox.h], cfg.size_noise)?,
        frame_index: 0,
    })
}

/// Normalized weighted sum of the model's pooled DoG responses.
pub fn featured_image(frame: &Image, model: &TrainedModel, solver: &SolverConfig) -> Result<Image> {
    if model.kernels.is_empty() {
        return Err(Error::EmptyInput("model kernels"));
    }
    let pooled = trainer::pooled_responses(frame, &model.kernels, model.target_sparsity, solver)?;
    let responses: Vec<&Image> = pooled.iter().map(|(img, _)| img).collect();
    Ok(trainer::normalize(&trainer::weighted_sum(&model.weights, &responses)?))
}

/// Measurement box read from the shadow projections, and the object mask.
#[derive(Debug, Clone, PartialEq)]
pub struct Localization {
    pub measurement: BoundingBox,
    pub object_mask: Image,
}

fn occupied_span(flags: impl Iterator<Item = bool>) -> Option<(usize, usize)> {
    let mut span = None;
    for (i, on) in flags.enumerate() {
        if on {
            span = Some(span.map_or((i, i), |(lo, _): (usize, usize)| (lo, i)));
        }
    }
    span
}

/// THRES, LOGAND with the location mask, RECALL and the two shadows.
/// `None` means the target was not found.
pub fn localize(state: &TrackState, featured: &Image, solver: &SolverConfig) -> Result<Option<Localization>> {
    let mask = &state.location_mask;
    featured.same_shape(mask)?;
    let binary = ops::threshold(featured, state.model.final_threshold, solver)?;
    let markers = ops::logic_and(&binary, mask, solver)?;
    let object = ops::recall(&markers, &binary, solver)?;
    if object.count_black() == 0 {
        return Ok(None);
    }
    let left = ops::shadow(&object, ShadowDirection::Left, solver)?;
    let down = ops::shadow(&object, ShadowDirection::Down, solver)?;
    let rows = occupied_span((0..object.height()).map(|r| left.get(r, 0) > 0.0));
    let cols = occupied_span((0..object.width()).map(|c| down.get(object.height() - 1, c) > 0.0));
    let (Some((r0, r1)), Some((c0, c1))) = (rows, cols) else {
        return Ok(None);
    };
    let measurement = BoundingBox::new(c0 as f64, r0 as f64, (c1 - c0 + 1) as f64, (r1 - r0 + 1) as f64)?;
    Ok(Some(Localization {
        measurement,
        object_mask: object,
    }))
}

/// Box size scaled by the square root of the object area relative to the
/// first frame, clamped to `[min_size, frame dimension]`. An empty object
/// keeps the current size estimate.
pub fn resize_rule(state: &TrackState, object_mask: &Image, cfg: &TrackerConfig) -> (f64, f64) {
    let area = object_mask.count_black() as f64;
    if area == 0.0 {
        let [w, h] = state.size_kf.position();
        return (w, h);
    }
    let scale = (area / state.model.reference_response_area).sqrt();
    let init = &state.model.ground_truth_box;
    let (fw, fh) = (object_mask.width() as f64, object_mask.height() as f64);
    (
        (init.w * scale).clamp(cfg.min_size.min(fw), fw),
        (init.h * scale).clamp(cfg.min_size.min(fh), fh),
    )
}

/// Centroid of the black cells, using cell centers.
pub fn centroid(mask: &Image) -> Option<(f64, f64)> {
    let (mut sx, mut sy, mut n) = (0.0, 0.0, 0usize);
    for (row, col) in mask.black_cells() {
        sx += col as f64 + 0.5;
        sy += row as f64 + 0.5;
        n += 1;
    }
    (n > 0).then(|| (sx / n as f64, sy / n as f64))
}

pub fn process_frame(
    state: &TrackState,
    frame: &Image,
    cfg: &TrackerConfig,
    solver: &SolverConfig,
) -> Result<(TrackState, FrameResult)> {
    let (w, h) = (state.location_mask.width(), state.location_mask.height());
    check_dims(frame, w, h)?;
    let featured = featured_image(frame, &state.model, solver)?;
    let found = localize(state, &featured, solver)?;

    let mut next = state.clone();
    let area = found.as_ref().map_or(0, |l| l.object_mask.count_black());
    match &found {
        Some(loc) => {
            let (cx, cy) = centroid(&loc.object_mask).ok_or(Error::EmptyInput("object mask"))?;
            let (sw, sh) = resize_rule(state, &loc.object_mask, cfg);
            next.motion_kf = state.motion_kf.step(Some([cx, cy]))?;
            next.size_kf = state.size_kf.step(Some([sw, sh]))?;
        }
        None => {
            next.motion_kf = state.motion_kf.step(None)?;
            next.size_kf = state.size_kf.step(None)?;
        }
    }
    let [cx, cy] = next.motion_kf.position();
    let [sw, sh] = next.size_kf.position();
    let (sw, sh) = (sw.clamp(1.0, w as f64), sh.clamp(1.0, h as f64));
    next.bbox = BoundingBox::from_center(cx, cy, sw, sh)?.fit_into(w, h);
    next.location_mask = match found {
        Some(loc) => ops::dilate(&loc.object_mask, cfg.dilation_radius, solver)?,
        None => ops::dilate(&next.bbox.mask(w, h), cfg.dilation_radius, solver)?,
    };
    next.frame_index += 1;
    let result = FrameResult {
        frame_index: next.frame_index,
        bbox: next.bbox,
        lost: area == 0,
        area,
    };
    Ok((next, result))
}

/// Initializes on `frames[0]` with `bbox` and tracks the remaining frames.
/// The first result is the initial box.
pub fn track_sequence(
    model: &TrainedModel,
    frames: &[Image],
    bbox: &BoundingBox,
    cfg: &TrackerConfig,
    solver: &SolverConfig,
) -> Result<Vec<FrameResult>> {
    let first = frames.first().ok_or(Error::EmptyInput("frames"))?;
    let mut state = init(model, first, bbox, cfg, solver)?;
    let mut results = vec![FrameResult {
        frame_index: 0,
        bbox: *bbox,
        lost: false,
        area: bbox.mask(first.width(), first.height()).count_black(),
    }];
    for frame in &frames[1..] {
        let (next, result) = process_frame(&state, frame, cfg, solver)?;
        state = next;
        results.push(result);
    }
    Ok(results)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn occupied_span_examples() {
        assert_eq!(occupied_span([false, true, false, true].into_iter()), Some((1, 3)));
        assert_eq!(occupied_span([false, false].into_iter()), None);
    }

    #[test]
    fn centroid_uses_cell_centers() {
        let mut m = Image::filled(4, 4, -1.0);
        m.set(1, 2, 1.0);
        assert_eq!(centroid(&m), Some((2.5, 1.5)));
        assert_eq!(centroid(&Image::filled(2, 2, -1.0)), None);
    }
}
