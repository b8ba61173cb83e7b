use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::{Image, BLACK, WHITE};

/// Axis-aligned box in cell coordinates; `(x, y)` is the top-left corner,
/// `x` along columns and `y` along rows.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

impl BoundingBox {
    pub fn new(x: f64, y: f64, w: f64, h: f64) -> Result<Self> {
        if ![x, y, w, h].iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidConfig(format!("non-finite box ({x}, {y}, {w}, {h})")));
        }
        if w <= 0.0 || h <= 0.0 {
            return Err(Error::EmptyBox);
        }
        Ok(Self { x, y, w, h })
    }

    pub fn from_center(cx: f64, cy: f64, w: f64, h: f64) -> Result<Self> {
        Self::new(cx - w / 2.0, cy - h / 2.0, w, h)
    }

    pub fn area(&self) -> f64 {
        self.w * self.h
    }

    pub fn center(&self) -> (f64, f64) {
        (self.x + self.w / 2.0, self.y + self.h / 2.0)
    }

    pub fn right(&self) -> f64 {
        self.x + self.w
    }

    pub fn bottom(&self) -> f64 {
        self.y + self.h
    }

    pub fn intersection_area(&self, other: &Self) -> f64 {
        let iw = (self.right().min(other.right()) - self.x.max(other.x)).max(0.0);
        let ih = (self.bottom().min(other.bottom()) - self.y.max(other.y)).max(0.0);
        iw * ih
    }

    /// Intersection over union.
    pub fn overlap(&self, other: &Self) -> f64 {
        // areas from the same edge arithmetic as the intersection, so a box
        // overlaps itself exactly
        let edge_area = |b: &Self| (b.right() - b.x) * (b.bottom() - b.y);
        let inter = self.intersection_area(other);
        let union = edge_area(self) + edge_area(other) - inter;
        if union <= 0.0 {
            return 0.0;
        }
        (inter / union).clamp(0.0, 1.0)
    }

    pub fn within(&self, width: usize, height: usize) -> bool {
        self.x >= 0.0 && self.y >= 0.0 && self.right() <= width as f64 && self.bottom() <= height as f64
    }

    pub fn require_within(&self, width: usize, height: usize) -> Result<()> {
        if self.within(width, height) {
            Ok(())
        } else {
            Err(Error::BoxOutsideFrame(format!("{self:?}"), width, height))
        }
    }

    /// Moves the box inside the frame, shrinking it first if it is larger
    /// than the frame.
    pub fn fit_into(&self, width: usize, height: usize) -> Self {
        let (fw, fh) = (width as f64, height as f64);
        let w = self.w.min(fw);
        let h = self.h.min(fh);
        Self {
            x: self.x.clamp(0.0, fw - w),
            y: self.y.clamp(0.0, fh - h),
            w,
            h,
        }
    }

    /// Binary mask with black cells whose centers fall inside the box.
    pub fn mask(&self, width: usize, height: usize) -> Image {
        Image::from_fn(width, height, |row, col| {
            if self.contains_cell(row, col) {
                BLACK
            } else {
                WHITE
            }
        })
    }

    pub fn contains_cell(&self, row: usize, col: usize) -> bool {
        let (cx, cy) = (col as f64 + 0.5, row as f64 + 0.5);
        cx >= self.x && cx < self.right() && cy >= self.y && cy < self.bottom()
    }

    /// Tight box around the black cells of `mask`, or `None` when empty.
    pub fn of_mask(mask: &Image) -> Option<Self> {
        let mut extent: Option<(usize, usize, usize, usize)> = None;
        for (row, col) in mask.black_cells() {
            extent = Some(match extent {
                None => (row, row, col, col),
                Some((r0, r1, c0, c1)) => (r0.min(row), r1.max(row), c0.min(col), c1.max(col)),
            });
        }
        extent.map(|(r0, r1, c0, c1)| Self {
            x: c0 as f64,
            y: r0 as f64,
            w: (c1 - c0 + 1) as f64,
            h: (r1 - r0 + 1) as f64,
        })
    }
}
