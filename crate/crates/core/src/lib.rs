//! Template-level simulator of a cellular neural network (CeNN)
//! co-processor, a CeNN-friendly single-target tracker built on it, and an
//! energy/delay model of the accelerator.
//!
//! Module map:
//! - [`solver`], [`grid`], [`template`]: the cell array and its state equation
//! - [`library`], [`ops`]: named templates and the image operations they realize
//! - [`trainer`]: DoG feature pool, feature selection, genetic weighting
//! - [`tracker`], [`kalman`]: per-frame localization and box filtering
//! - [`metrics`]: overlap, success curve, AUC
//! - [`cost`]: per-operation power, energy, delay, EDP
//! - [`synth`]: synthetic sequences with known ground truth

pub mod bbox;
pub mod cost;
pub mod error;
pub mod grid;
pub mod image;
pub mod kalman;
pub mod library;
pub mod metrics;
pub mod ops;
pub mod solver;
pub mod synth;
pub mod template;
pub mod tracker;
pub mod trainer;

pub use bbox::BoundingBox;
pub use error::{Error, Result};
pub use grid::{Boundary, CellGrid};
pub use image::Image;
pub use solver::SolverConfig;
pub use template::Template;
