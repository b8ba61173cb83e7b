//! Synthetic 8-bit sequences of a dark square or disc moving over a light
//! background, with exact ground-truth boxes.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bbox::BoundingBox;
use crate::error::{Error, Result};
use crate::image::Image;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Shape {
    #[default]
    Square,
    Disc,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub width: usize,
    pub height: usize,
    pub frames: usize,
    pub shape: Shape,
    /// Side of the square or diameter of the disc, cells.
    pub size: usize,
    /// Top-left corner of the object in frame 0.
    pub start: [f64; 2],
    /// Cells per frame, `(dx, dy)`.
    pub velocity: [f64; 2],
    /// 1 draws a black object on white; 0 makes it invisible.
    pub contrast: f64,
    /// Peak amplitude of uniform background noise, in gray levels.
    pub noise: f64,
    /// Object disappears from this frame on; ground truth keeps moving.
    pub vanish_at: Option<usize>,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            width: 240,
            height: 40,
            frames: 100,
            shape: Shape::Square,
            size: 20,
            start: [10.0, 10.0],
            velocity: [2.0, 0.0],
            contrast: 1.0,
            noise: 0.0,
            vanish_at: None,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sequence {
    pub width: usize,
    pub height: usize,
    /// Row-major gray levels, 0 = black.
    pub frames: Vec<Vec<u8>>,
    pub boxes: Vec<BoundingBox>,
}

impl Sequence {
    pub fn image(&self, index: usize) -> Result<Image> {
        Image::from_gray(self.width, self.height, &self.frames[index])
    }
}

pub fn generate(cfg: &SynthConfig) -> Result<Sequence> {
    if cfg.width == 0 || cfg.height == 0 || cfg.frames == 0 || cfg.size == 0 {
        return Err(Error::InvalidConfig("synthetic sequence dimensions must be positive".into()));
    }
    if !(0.0..=1.0).contains(&cfg.contrast) || !(cfg.noise >= 0.0 && cfg.noise.is_finite()) {
        return Err(Error::InvalidConfig("contrast must be in [0, 1] and noise non-negative".into()));
    }
    let side = cfg.size as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let object_gray = 255.0 * (1.0 - cfg.contrast);
    let mut frames = Vec::with_capacity(cfg.frames);
    let mut boxes = Vec::with_capacity(cfg.frames);
    for t in 0..cfg.frames {
        let x = cfg.start[0] + cfg.velocity[0] * t as f64;
        let y = cfg.start[1] + cfg.velocity[1] * t as f64;
        let bbox = BoundingBox::new(x, y, side, side)?;
        if !bbox.within(cfg.width, cfg.height) {
            return Err(Error::BoxOutsideFrame(format!("synthetic object at frame {t}"), cfg.width, cfg.height));
        }
        let visible = cfg.vanish_at.is_none_or(|k| t < k);
        let (cx, cy) = bbox.center();
        let mut gray = Vec::with_capacity(cfg.width * cfg.height);
        for row in 0..cfg.height {
            for col in 0..cfg.width {
                let inside = match cfg.shape {
                    Shape::Square => bbox.contains_cell(row, col),
                    Shape::Disc => {
                        let (dx, dy) = (col as f64 + 0.5 - cx, row as f64 + 0.5 - cy);
                        dx * dx + dy * dy <= side * side / 4.0
                    }
                };
                let base = if visible && inside { object_gray } else { 255.0 };
                let jitter = if cfg.noise > 0.0 {
                    rng.random_range(-cfg.noise..=cfg.noise)
                } else {
                    0.0
                };
                gray.push((base + jitter).round().clamp(0.0, 255.0) as u8);
            }
        }
        frames.push(gray);
        boxes.push(bbox);
    }
    Ok(Sequence {
        width: cfg.width,
        height: cfg.height,
        frames,
        boxes,
    })
}
