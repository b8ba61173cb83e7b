use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::Image;

/// How neighbors outside the array are resolved.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case", tag = "kind", content = "value")]
pub enum Boundary {
    /// Virtual cells copy the nearest edge cell (Neumann condition).
    #[default]
    ZeroFlux,
    /// Virtual cells hold a constant output and input.
    Fixed(f64),
}

/// State and input voltages of an `M x N` cell array.
#[derive(Debug, Clone, PartialEq)]
pub struct CellGrid {
    state: Image,
    input: Image,
    boundary: Boundary,
}

impl CellGrid {
    /// Builds a grid, validating that inputs are finite and within `[-1, 1]`
    /// and that states are finite.
    pub fn new(state: Image, input: Image, boundary: Boundary) -> Result<Self> {
        state.same_shape(&input)?;
        let w = state.width().max(1);
        for (i, &v) in state.data().iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFinite {
                    row: i / w,
                    col: i % w,
                });
            }
        }
        for (i, &v) in input.data().iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFinite {
                    row: i / w,
                    col: i % w,
                });
            }
            if !(-1.0..=1.0).contains(&v) {
                return Err(Error::InputOutOfRange {
                    row: i / w,
                    col: i % w,
                    value: v,
                });
            }
        }
        if let Boundary::Fixed(v) = boundary {
            if !(-1.0..=1.0).contains(&v) {
                return Err(Error::InvalidConfig(format!(
                    "fixed boundary value {v} outside [-1, 1]"
                )));
            }
        }
        Ok(Self {
            state,
            input,
            boundary,
        })
    }

    /// Grid whose state and input both hold `image`.
    pub fn loaded(image: &Image) -> Result<Self> {
        Self::new(image.clone(), image.clone(), Boundary::ZeroFlux)
    }

    /// Grid with `state` as initial state and a zero input plane.
    pub fn with_state(state: Image) -> Result<Self> {
        let input = Image::filled(state.width(), state.height(), 0.0);
        Self::new(state, input, Boundary::ZeroFlux)
    }

    pub fn with_boundary(mut self, boundary: Boundary) -> Self {
        self.boundary = boundary;
        self
    }

    pub fn width(&self) -> usize {
        self.state.width()
    }

    pub fn height(&self) -> usize {
        self.state.height()
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn state(&self) -> &Image {
        &self.state
    }

    pub fn input(&self) -> &Image {
        &self.input
    }

    pub(crate) fn state_mut(&mut self) -> &mut Image {
        &mut self.state
    }

    pub fn into_state(self) -> Image {
        self.state
    }

    /// Output image `y = f(x)` through the cell nonlinearity.
    pub fn output(&self) -> Image {
        self.state.map(crate::solver::output)
    }
}
