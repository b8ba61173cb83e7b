//! wasm-bindgen front for the browser demo. Each export is a thin wrapper
//! over a plain function returning `Result<_, String>`, so the logic is
//! tested natively.

use cenn::cost::{self, CostParams, PipelineStep, DEFAULT_SEQUENCE_FRAMES};
use cenn::image::value_to_gray;
use cenn::library::{DiffusionKind, DogKernel, ShadowDirection};
use cenn::synth::{self, SynthConfig};
use cenn::{ops, Image, SolverConfig};
use wasm_bindgen::prelude::*;

/// Keeps a single call well under a second in the browser.
pub const MAX_CELLS: usize = 256 * 256;

fn load(gray: &[u8], width: usize, height: usize) -> Result<Image, String> {
    if width * height > MAX_CELLS {
        return Err(format!("image has {} cells; the demo accepts at most {MAX_CELLS}", width * height));
    }
    Image::from_gray(width, height, gray).map_err(|e| e.to_string())
}

fn to_gray(img: &Image) -> Vec<u8> {
    img.data().iter().map(|&v| value_to_gray(v)).collect()
}

/// Runs one library operation on an 8-bit gray image. `param` is the
/// threshold level for `threshold` and the shadows, the duration in ns for
/// `diffusion`, and the radius for `dilation`.
pub fn apply_template_gray(gray: &[u8], width: usize, height: usize, op: &str, param: f64) -> Result<Vec<u8>, String> {
    let img = load(gray, width, height)?;
    let cfg = SolverConfig::default();
    let binarize = |level: f64| ops::threshold(&img, level, &cfg);
    let out = match op {
        "threshold" => binarize(param),
        "diffusion" => {
            if !(0.0..=200.0).contains(&param) {
                return Err("diffusion duration must lie in [0, 200] ns".into());
            }
            ops::diffuse(&img, DiffusionKind::Isotropic, param, &cfg)
        }
        "dilation" => {
            if !(1.0..=8.0).contains(&param) {
                return Err("dilation radius must lie in [1, 8]".into());
            }
            binarize(0.0).and_then(|b| ops::dilate(&b, param.round() as usize, &cfg))
        }
        "shadow_left" => binarize(param).and_then(|b| ops::shadow(&b, ShadowDirection::Left, &cfg)),
        "shadow_down" => binarize(param).and_then(|b| ops::shadow(&b, ShadowDirection::Down, &cfg)),
        other => return Err(format!("unknown operation {other:?}")),
    };
    out.map(|o| to_gray(&o)).map_err(|e| e.to_string())
}

/// DoG response scaled by its peak magnitude for display. `kind` is `iso`,
/// `dir0`, `dir45`, `dir90` or `dir135`.
pub fn dog_gray(gray: &[u8], width: usize, height: usize, kind: &str, steps1: u32, steps2: u32) -> Result<Vec<u8>, String> {
    let img = load(gray, width, height)?;
    let kind = DiffusionKind::ALL
        .into_iter()
        .find(|k| k.to_string() == kind)
        .ok_or_else(|| format!("unknown diffusion kind {kind:?}"))?;
    let kernel = DogKernel::new(kind, steps1, steps2).map_err(|e| e.to_string())?;
    let resp = ops::apply_dog(&img, &kernel, &SolverConfig::default()).map_err(|e| e.to_string())?;
    let peak = resp.max_abs();
    let scaled = if peak > 0.0 { resp.map(|v| v / peak) } else { resp };
    Ok(to_gray(&scaled))
}

/// Text cost table for a pipeline JSON array; an empty string selects the
/// built-in tracking pipeline.
pub fn cost_text(pipeline_json: &str, n_cells: u64) -> Result<String, String> {
    let pipeline: Vec<PipelineStep> = if pipeline_json.trim().is_empty() {
        cost::tracking_pipeline()
    } else {
        serde_json::from_str(pipeline_json).map_err(|e| e.to_string())?
    };
    let params = CostParams {
        n_cells,
        ..CostParams::default()
    };
    params.validate().map_err(|e| e.to_string())?;
    let report = cost::frame_report(&pipeline, &params).map_err(|e| e.to_string())?;
    Ok(cost::render_text(&report, Some(&report.sequence(DEFAULT_SEQUENCE_FRAMES))))
}

/// First frame of the default synthetic sequence, with some texture.
pub fn demo_gray(width: usize, height: usize) -> Result<Vec<u8>, String> {
    let cfg = SynthConfig {
        width,
        height,
        frames: 1,
        start: [width as f64 / 3.0, height as f64 / 4.0],
        size: (width.min(height) / 3).max(2),
        noise: 30.0,
        ..SynthConfig::default()
    };
    let seq = synth::generate(&cfg).map_err(|e| e.to_string())?;
    Ok(seq.frames.into_iter().next().unwrap_or_default())
}

#[wasm_bindgen]
pub fn apply_template(gray: &[u8], width: usize, height: usize, op: &str, param: f64) -> Result<Vec<u8>, JsError> {
    apply_template_gray(gray, width, height, op, param).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn dog_response(gray: &[u8], width: usize, height: usize, kind: &str, steps1: u32, steps2: u32) -> Result<Vec<u8>, JsError> {
    dog_gray(gray, width, height, kind, steps1, steps2).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn cost_report(pipeline_json: &str, n_cells: u32) -> Result<String, JsError> {
    cost_text(pipeline_json, u64::from(n_cells)).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn default_pipeline() -> String {
    serde_json::to_string_pretty(&cost::tracking_pipeline()).unwrap_or_default()
}

#[wasm_bindgen]
pub fn demo_frame(width: usize, height: usize) -> Result<Vec<u8>, JsError> {
    demo_gray(width, height).map_err(|e| JsError::new(&e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square(w: usize, h: usize) -> Vec<u8> {
        (0..w * h)
            .map(|i| if (4..8).contains(&(i % w)) && (3..6).contains(&(i / w)) { 0 } else { 255 })
            .collect()
    }

    #[test]
    fn threshold_keeps_a_binary_square() {
        let g = square(12, 10);
        assert_eq!(apply_template_gray(&g, 12, 10, "threshold", 0.0).unwrap(), g);
    }

    #[test]
    fn shadows_reach_the_edges() {
        let out = apply_template_gray(&square(12, 10), 12, 10, "shadow_left", 0.0).unwrap();
        assert_eq!(out[3 * 12], 0);
        assert_eq!(out[3 * 12 + 9], 255);
        let out = apply_template_gray(&square(12, 10), 12, 10, "shadow_down", 0.0).unwrap();
        assert_eq!(out[9 * 12 + 5], 0);
    }

    #[test]
    fn dilation_grows_by_the_radius() {
        let out = apply_template_gray(&square(12, 10), 12, 10, "dilation", 1.0).unwrap();
        assert_eq!(out.iter().filter(|&&g| g == 0).count(), 6 * 5);
    }

    #[test]
    fn bad_requests_are_errors() {
        let g = square(12, 10);
        assert!(apply_template_gray(&g, 12, 10, "sharpen", 0.0).is_err());
        assert!(apply_template_gray(&g, 12, 11, "threshold", 0.0).is_err());
        assert!(apply_template_gray(&g, 12, 10, "dilation", 0.0).is_err());
        assert!(dog_gray(&g, 12, 10, "dir30", 10, 20).is_err());
        assert!(cost_text("[]", 100).is_err());
        assert!(cost_text("{", 100).is_err());
        let big = vec![0; 300 * 300];
        assert!(apply_template_gray(&big, 300, 300, "threshold", 0.0).is_err());
    }

    #[test]
    fn dog_peak_is_full_scale() {
        let out = dog_gray(&square(24, 20), 24, 20, "iso", 10, 30).unwrap();
        assert!(out.iter().any(|&g| g == 0 || g == 255));
    }

    #[test]
    fn default_cost_report_matches_the_library() {
        let text = cost_text("", cost::DEFAULT_CELLS).unwrap();
        assert!(text.lines().any(|l| l.starts_with("Total/frame") && l.contains("159.7")));
        let json = default_pipeline();
        assert_eq!(cost_text(&json, cost::DEFAULT_CELLS).unwrap(), text);
    }

    #[test]
    fn demo_frame_has_the_requested_size() {
        assert_eq!(demo_gray(96, 64).unwrap().len(), 96 * 64);
    }
}
