//! Image-level operations, each realized as one or more simulated template
//! runs on the CeNN array.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::grid::{Boundary, CellGrid};
use crate::image::Image;
use crate::library::{self, DiffusionKind, DogKernel, ShadowDirection};
use crate::solver::{self, SolverConfig};

const INPUT_SLACK: f64 = 1e-9;

/// Clamps rounding overshoot so `image` can drive cell inputs; anything
/// further than a few ulps outside `[-1, 1]` is rejected.
fn as_input(image: &Image) -> Result<Image> {
    let w = image.width().max(1);
    for (i, &v) in image.data().iter().enumerate() {
        if !v.is_finite() {
            return Err(Error::NonFinite {
                row: i / w,
                col: i % w,
            });
        }
        if v.abs() > 1.0 + INPUT_SLACK {
            return Err(Error::InputOutOfRange {
                row: i / w,
                col: i % w,
                value: v,
            });
        }
    }
    Ok(image.map(|v| v.clamp(-1.0, 1.0)))
}

fn settle(grid: CellGrid, template: &crate::Template, cfg: &SolverConfig, budget_ns: f64) -> Result<Image> {
    let settled = solver::run_until_settled(&grid, template, cfg, budget_ns)?;
    Ok(settled.grid.output())
}

/// Diffuses `image` with the given kind for `duration_ns`.
pub fn diffuse(image: &Image, kind: DiffusionKind, duration_ns: f64, cfg: &SolverConfig) -> Result<Image> {
    let grid = CellGrid::with_state(image.clone())?;
    let out = solver::run_for(&grid, &library::diffusion(kind), cfg, duration_ns)?;
    Ok(out.output())
}

/// Clamped difference `minuend - subtrahend`.
pub fn subtract(minuend: &Image, subtrahend: &Image, cfg: &SolverConfig) -> Result<Image> {
    minuend.same_shape(subtrahend)?;
    let grid = CellGrid::new(minuend.clone(), as_input(subtrahend)?, Boundary::ZeroFlux)?;
    let out = solver::run(&grid, &library::subtraction(), cfg)?;
    Ok(out.output())
}

/// `+1` where the pixel exceeds `level`, `-1` elsewhere (ties included).
pub fn threshold(image: &Image, level: f64, cfg: &SolverConfig) -> Result<Image> {
    let grid = CellGrid::with_state(image.clone())?;
    let t = library::threshold(level);
    let budget = 2.0 * t.duration_ns;
    settle(grid, &t, cfg, budget)
}

/// Elementwise AND of two binary images.
pub fn logic_and(a: &Image, b: &Image, cfg: &SolverConfig) -> Result<Image> {
    a.same_shape(b)?;
    a.require_binary(1e-6)?;
    b.require_binary(1e-6)?;
    let grid = CellGrid::new(a.clone(), as_input(b)?, Boundary::ZeroFlux)?;
    let t = library::logic_and();
    let budget = 2.0 * t.duration_ns;
    settle(grid, &t, cfg, budget)
}

/// Shadow projection of a binary image. After [`ShadowDirection::Left`],
/// column 0 flags occupied rows; after [`ShadowDirection::Down`], the bottom
/// row flags occupied columns.
pub fn shadow(image: &Image, direction: ShadowDirection, cfg: &SolverConfig) -> Result<Image> {
    let grid = CellGrid::with_state(image.clone())?;
    let extent = match direction {
        ShadowDirection::Left => image.width(),
        ShadowDirection::Down => image.height(),
    };
    let budget = cfg.settle_ns_per_cell * (extent + 2) as f64;
    settle(grid, &library::shadow(direction), cfg, budget)
}

/// Binary dilation by the 3x3 square, repeated `radius` times.
pub fn dilate(image: &Image, radius: usize, cfg: &SolverConfig) -> Result<Image> {
    let t = library::dilation();
    let mut current = image.clone();
    for _ in 0..radius {
        let grid = CellGrid::loaded(&as_input(&current)?)?;
        current = settle(grid, &t, cfg, 2.0 * t.duration_ns)?;
    }
    Ok(current)
}

/// Union of the 8-connected components of `reference` that contain a marker.
///
/// Runs LOGAND to drop markers outside the reference, then RECALL.
pub fn recall(markers: &Image, reference: &Image, cfg: &SolverConfig) -> Result<Image> {
    markers.same_shape(reference)?;
    markers.require_binary(1e-6)?;
    reference.require_binary(1e-6)?;
    let seeds = logic_and(markers, reference, cfg)?;
    let grid = CellGrid::new(seeds, reference.clone(), Boundary::ZeroFlux)?;
    let budget = cfg.settle_ns_per_cell * (reference.len() + 2) as f64;
    settle(grid, &library::recall(), cfg, budget)
}

/// Band-pass response of one DoG kernel.
pub fn apply_dog(image: &Image, kernel: &DogKernel, cfg: &SolverConfig) -> Result<Image> {
    Ok(apply_dog_bank(image, std::slice::from_ref(kernel), cfg)?.remove(0))
}

/// Responses of several DoG kernels on one image. Kernels sharing a
/// diffusion kind reuse one simulated trajectory, snapshotted at each
/// requested step count; the results equal independent runs exactly.
pub fn apply_dog_bank(image: &Image, kernels: &[DogKernel], cfg: &SolverConfig) -> Result<Vec<Image>> {
    for k in kernels {
        k.validate()?;
    }
    let grid = CellGrid::with_state(image.clone())?;
    let mut by_kind: BTreeMap<DiffusionKind, Vec<u32>> = BTreeMap::new();
    for k in kernels {
        let steps = by_kind.entry(k.kind).or_default();
        steps.push(k.steps1);
        steps.push(k.steps2);
    }
    let mut diffused: BTreeMap<(DiffusionKind, u32), Image> = BTreeMap::new();
    for (kind, mut steps) in by_kind {
        steps.sort_unstable();
        steps.dedup();
        let durations: Vec<f64> = steps.iter().map(|&s| f64::from(s)).collect();
        let snaps = solver::run_snapshots(&grid, &library::diffusion(kind), cfg, &durations)?;
        for (s, snap) in steps.into_iter().zip(snaps) {
            diffused.insert((kind, s), snap.map(solver::output));
        }
    }
    kernels
        .iter()
        .map(|k| subtract(&diffused[&(k.kind, k.steps1)], &diffused[&(k.kind, k.steps2)], cfg))
        .collect()
}
