//! Dense row-major images in the normalized CeNN value range.
//!
//! Pixel convention: `+1` is black (foreground), `-1` is white (background).
//! An 8-bit gray value `g` maps to `1 - 2g/255`, so black gray 0 becomes `+1`.

use crate::error::{Error, Result};

/// Value used for foreground pixels of binary images.
pub const BLACK: f64 = 1.0;
/// Value used for background pixels of binary images.
pub const WHITE: f64 = -1.0;

/// Maps an 8-bit gray level to the normalized cell range.
pub fn gray_to_value(g: u8) -> f64 {
    1.0 - 2.0 * f64::from(g) / 255.0
}

/// Inverse of [`gray_to_value`], rounding and clamping to `0..=255`.
pub fn value_to_gray(v: f64) -> u8 {
    let g = ((1.0 - v) * 0.5 * 255.0).round();
    g.clamp(0.0, 255.0) as u8
}

#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl Image {
    pub fn filled(width: usize, height: usize, value: f64) -> Self {
        Self {
            width,
            height,
            data: vec![value; width * height],
        }
    }

    pub fn from_vec(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::InvalidConfig(format!(
                "image buffer has {} values, expected {}x{}",
                data.len(),
                width,
                height
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for row in 0..height {
            for col in 0..width {
                data.push(f(row, col));
            }
        }
        Self {
            width,
            height,
            data,
        }
    }

    pub fn from_gray(width: usize, height: usize, gray: &[u8]) -> Result<Self> {
        Self::from_vec(width, height, gray.iter().map(|&g| gray_to_value(g)).collect())
    }

    pub fn to_gray(&self) -> Vec<u8> {
        self.data.iter().map(|&v| value_to_gray(v)).collect()
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.width + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        self.data[row * self.width + col] = value;
    }

    pub fn same_shape(&self, other: &Image) -> Result<()> {
        if self.width != other.width || self.height != other.height {
            return Err(Error::DimensionMismatch {
                left_w: self.width,
                left_h: self.height,
                right_w: other.width,
                right_h: other.height,
            });
        }
        Ok(())
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Image {
        Image {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn mean(&self) -> f64 {
        if self.data.is_empty() {
            return 0.0;
        }
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }

    /// True when every pixel is exactly `+1` or `-1`.
    pub fn is_binary(&self) -> bool {
        self.data.iter().all(|&v| v == BLACK || v == WHITE)
    }

    /// Errors on the first pixel further than `tol` from `±1`.
    pub fn require_binary(&self, tol: f64) -> Result<()> {
        for (i, &v) in self.data.iter().enumerate() {
            if (v.abs() - 1.0).abs() > tol || !v.is_finite() {
                return Err(Error::NonBinary {
                    row: i / self.width.max(1),
                    col: i % self.width.max(1),
                    value: v,
                });
            }
        }
        Ok(())
    }

    /// Number of foreground (`> 0`) pixels.
    pub fn count_black(&self) -> usize {
        self.data.iter().filter(|&&v| v > 0.0).count()
    }

    /// Iterator over `(row, col)` of foreground pixels.
    pub fn black_cells(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let w = self.width;
        self.data
            .iter()
            .enumerate()
            .filter(|(_, &v)| v > 0.0)
            .map(move |(i, _)| (i / w, i % w))
    }
}
