//! Explicit-Euler integration of the cell state equation
//!
//! ```text
//! tau * dx/dt = -x + Σ a·y(neighbor) + Σ b·u(neighbor) + z
//! ```
//!
//! Each cell update evaluates, in this order: the feedback sum over the
//! neighborhood in row-major order, the feedforward sum in row-major order,
//! then `x + (dt/tau) * (((-x + feedback) + feedforward) + z)`. Keeping the
//! order fixed makes results reproducible bit-for-bit.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Boundary, CellGrid};
use crate::image::Image;
use crate::template::Template;

/// Piecewise-linear saturation `0.5 * (|x + 1| - |x - 1|)`, evaluated as a
/// clamp so saturated cells read exactly `±1`.
#[inline]
pub fn output(x: f64) -> f64 {
    x.clamp(-1.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    /// Euler step in ns.
    pub dt_ns: f64,
    /// Cell time constant `RC` in ns.
    pub tau_ns: f64,
    /// Settling budget for propagating templates, in ns per cell of the
    /// distance the wave may have to travel.
    pub settle_ns_per_cell: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            dt_ns: 0.1,
            tau_ns: 1.0,
            settle_ns_per_cell: 2.0,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt_ns > 0.0 && self.tau_ns > 0.0) {
            return Err(Error::InvalidConfig(
                "dt_ns and tau_ns must be positive".into(),
            ));
        }
        if self.dt_ns > self.tau_ns / 2.0 {
            return Err(Error::InvalidConfig(format!(
                "dt_ns {} exceeds tau_ns/2 = {}",
                self.dt_ns,
                self.tau_ns / 2.0
            )));
        }
        if !(self.settle_ns_per_cell > 0.0) {
            return Err(Error::InvalidConfig(
                "settle_ns_per_cell must be positive".into(),
            ));
        }
        Ok(())
    }

    /// Number of Euler steps covering `duration_ns`.
    pub fn steps_for(&self, duration_ns: f64) -> usize {
        if duration_ns <= 0.0 {
            return 0;
        }
        (duration_ns / self.dt_ns - 1e-9).ceil().max(0.0) as usize
    }
}

/// Neighborhood-weighted sum around `(row, col)` with out-of-grid values
/// resolved by `boundary`.
#[inline]
#[allow(clippy::too_many_arguments)]
fn weighted_sum(
    weights: &[f64],
    side: usize,
    values: &[f64],
    width: usize,
    height: usize,
    row: usize,
    col: usize,
    boundary: Boundary,
) -> f64 {
    let r = side / 2;
    let mut acc = 0.0;
    if row >= r && col >= r && row + r < height && col + r < width {
        for i in 0..side {
            let base = (row + i - r) * width + col - r;
            let wrow = &weights[i * side..(i + 1) * side];
            let vrow = &values[base..base + side];
            for j in 0..side {
                acc += wrow[j] * vrow[j];
            }
        }
    } else {
        for i in 0..side {
            let rr = row as isize + i as isize - r as isize;
            for j in 0..side {
                let cc = col as isize + j as isize - r as isize;
                let inside = rr >= 0 && cc >= 0 && (rr as usize) < height && (cc as usize) < width;
                let v = if inside {
                    values[rr as usize * width + cc as usize]
                } else {
                    match boundary {
                        Boundary::ZeroFlux => {
                            let rc = rr.clamp(0, height as isize - 1) as usize;
                            let cc = cc.clamp(0, width as isize - 1) as usize;
                            values[rc * width + cc]
                        }
                        Boundary::Fixed(b) => b,
                    }
                };
                acc += weights[i * side + j] * v;
            }
        }
    }
    acc
}

/// Reusable integration state for one template run over one grid.
///
/// The feedforward term is constant during a run (inputs never change), so
/// it is evaluated once up front.
struct Integrator<'a> {
    template: &'a Template,
    width: usize,
    height: usize,
    boundary: Boundary,
    ratio: f64,
    feedforward: Vec<f64>,
    outputs: Vec<f64>,
    next: Vec<f64>,
    row_buf: Vec<f64>,
}

impl<'a> Integrator<'a> {
    fn new(grid: &CellGrid, template: &'a Template, cfg: &SolverConfig) -> Result<Self> {
        cfg.validate()?;
        let (width, height) = (grid.width(), grid.height());
        let boundary = grid.boundary();
        let side = template.side();
        let u = grid.input().data();
        let mut feedforward = Vec::with_capacity(width * height);
        for row in 0..height {
            for col in 0..width {
                feedforward.push(weighted_sum(
                    template.b(),
                    side,
                    u,
                    width,
                    height,
                    row,
                    col,
                    boundary,
                ));
            }
        }
        Ok(Self {
            template,
            width,
            height,
            boundary,
            ratio: cfg.dt_ns / cfg.tau_ns,
            feedforward,
            outputs: vec![0.0; width * height],
            next: vec![0.0; width * height],
            row_buf: Vec::new(),
        })
    }

    fn refresh_outputs(&mut self, state: &[f64]) {
        for (y, &x) in self.outputs.iter_mut().zip(state) {
            *y = output(x);
        }
    }

    /// Feedback sums `Σ a * y` for every cell of `row`.
    fn feedback_row(&self, row: usize, fb: &mut [f64]) {
        let (w, h) = (self.width, self.height);
        let side = self.template.side();
        let a = self.template.a();
        if side == 3 && row >= 1 && row + 1 < h && w >= 3 {
            // interior fast path; same summation order as `weighted_sum`
            let k: [f64; 9] = a.try_into().expect("3x3 template");
            let up = &self.outputs[(row - 1) * w..row * w];
            let mid = &self.outputs[row * w..(row + 1) * w];
            let down = &self.outputs[(row + 1) * w..(row + 2) * w];
            for col in 1..w - 1 {
                let mut acc = 0.0;
                acc += k[0] * up[col - 1];
                acc += k[1] * up[col];
                acc += k[2] * up[col + 1];
                acc += k[3] * mid[col - 1];
                acc += k[4] * mid[col];
                acc += k[5] * mid[col + 1];
                acc += k[6] * down[col - 1];
                acc += k[7] * down[col];
                acc += k[8] * down[col + 1];
                fb[col] = acc;
            }
            for col in [0, w - 1] {
                fb[col] = weighted_sum(a, side, &self.outputs, w, h, row, col, self.boundary);
            }
        } else {
            for (col, v) in fb.iter_mut().enumerate() {
                *v = weighted_sum(a, side, &self.outputs, w, h, row, col, self.boundary);
            }
        }
    }

    /// Advances `state` by one Euler step in place.
    fn advance(&mut self, state: &mut Vec<f64>) -> Result<()> {
        self.refresh_outputs(state);
        let z = self.template.z;
        let w = self.width;
        let mut fb = std::mem::take(&mut self.row_buf);
        fb.resize(w, 0.0);
        let mut bad = None;
        for row in 0..self.height {
            self.feedback_row(row, &mut fb);
            let base = row * w;
            for col in 0..w {
                let i = base + col;
                let x = state[i];
                let nx = x + self.ratio * (((-x + fb[col]) + self.feedforward[i]) + z);
                if !nx.is_finite() && bad.is_none() {
                    bad = Some((row, col));
                }
                self.next[i] = nx;
            }
        }
        self.row_buf = fb;
        if let Some((row, col)) = bad {
            return Err(Error::NonFinite { row, col });
        }
        std::mem::swap(state, &mut self.next);
        Ok(())
    }

    /// True when every cell sits in a saturated region whose drive keeps it
    /// there, so no output can change any more.
    fn locked(&mut self, state: &[f64]) -> bool {
        self.refresh_outputs(state);
        let w = self.width;
        let mut fb = std::mem::take(&mut self.row_buf);
        fb.resize(w, 0.0);
        let mut locked = true;
        'rows: for row in 0..self.height {
            let base = row * w;
            if state[base..base + w].iter().any(|x| x.abs() < 1.0) {
                locked = false;
                break;
            }
            self.feedback_row(row, &mut fb);
            for col in 0..w {
                let x = state[base + col];
                let drive = fb[col] + self.feedforward[base + col] + self.template.z;
                if (x >= 1.0 && drive < 1.0) || (x <= -1.0 && drive > -1.0) {
                    locked = false;
                    break 'rows;
                }
            }
        }
        self.row_buf = fb;
        locked
    }
}

fn check_state(state: &Image) -> Result<()> {
    let w = state.width().max(1);
    match state.data().iter().position(|v| !v.is_finite()) {
        Some(i) => Err(Error::NonFinite {
            row: i / w,
            col: i % w,
        }),
        None => Ok(()),
    }
}

/// One explicit-Euler update of every cell.
pub fn step(grid: &CellGrid, template: &Template, cfg: &SolverConfig) -> Result<CellGrid> {
    check_state(grid.state())?;
    let mut integrator = Integrator::new(grid, template, cfg)?;
    let mut state = grid.state().data().to_vec();
    integrator.advance(&mut state)?;
    let mut out = grid.clone();
    out.state_mut().data_mut().copy_from_slice(&state);
    Ok(out)
}

/// Runs `template` for its `duration_ns`.
pub fn run(grid: &CellGrid, template: &Template, cfg: &SolverConfig) -> Result<CellGrid> {
    run_for(grid, template, cfg, template.duration_ns)
}

/// Runs `template` for an explicit duration, overriding the nominal one.
pub fn run_for(
    grid: &CellGrid,
    template: &Template,
    cfg: &SolverConfig,
    duration_ns: f64,
) -> Result<CellGrid> {
    cfg.validate()?;
    let steps = cfg.steps_for(duration_ns);
    if steps == 0 {
        return Ok(grid.clone());
    }
    check_state(grid.state())?;
    let mut integrator = Integrator::new(grid, template, cfg)?;
    let mut state = grid.state().data().to_vec();
    for _ in 0..steps {
        integrator.advance(&mut state)?;
    }
    let mut out = grid.clone();
    out.state_mut().data_mut().copy_from_slice(&state);
    Ok(out)
}

/// Runs a template for several durations measured from the same start,
/// returning one state snapshot per requested duration (in input order).
///
/// Equivalent to separate [`run_for`] calls but integrates the shared prefix
/// only once.
pub fn run_snapshots(
    grid: &CellGrid,
    template: &Template,
    cfg: &SolverConfig,
    durations_ns: &[f64],
) -> Result<Vec<Image>> {
    cfg.validate()?;
    check_state(grid.state())?;
    let mut order: Vec<(usize, usize)> = durations_ns
        .iter()
        .enumerate()
        .map(|(i, &d)| (cfg.steps_for(d), i))
        .collect();
    order.sort();
    let mut integrator = Integrator::new(grid, template, cfg)?;
    let mut state = grid.state().data().to_vec();
    let mut done = 0;
    let mut out = vec![None; durations_ns.len()];
    for (steps, idx) in order {
        while done < steps {
            integrator.advance(&mut state)?;
            done += 1;
        }
        out[idx] = Some(Image::from_vec(grid.width(), grid.height(), state.clone())?);
    }
    Ok(out.into_iter().map(|s| s.expect("filled")).collect())
}

/// Result of [`run_until_settled`].
#[derive(Debug, Clone)]
pub struct Settled {
    pub grid: CellGrid,
    /// Simulated time actually spent.
    pub elapsed_ns: f64,
}

/// Integrates until every cell is locked in saturation (see the module
/// docs of the template library) or `budget_ns` elapses.
///
/// Settlement is checked every `check_ns`. Errors with
/// [`Error::NotSettled`] if the budget runs out first.
pub fn run_until_settled(
    grid: &CellGrid,
    template: &Template,
    cfg: &SolverConfig,
    budget_ns: f64,
) -> Result<Settled> {
    cfg.validate()?;
    check_state(grid.state())?;
    let check_steps = cfg.steps_for(1.0).max(1);
    let max_steps = cfg.steps_for(budget_ns);
    let mut integrator = Integrator::new(grid, template, cfg)?;
    let mut state = grid.state().data().to_vec();
    let mut done = 0;
    loop {
        if integrator.locked(&state) {
            let mut out = grid.clone();
            out.state_mut().data_mut().copy_from_slice(&state);
            return Ok(Settled {
                grid: out,
                elapsed_ns: done as f64 * cfg.dt_ns,
            });
        }
        if done >= max_steps {
            return Err(Error::NotSettled {
                name: template.name.clone(),
                budget_ns,
            });
        }
        for _ in 0..check_steps.min(max_steps - done) {
            integrator.advance(&mut state)?;
            done += 1;
        }
    }
}

/// Snaps every state to the nearest of `2^bits` uniform levels spanning
/// `[-1, 1]`, modelling the ADC, register and DAC round trip.
pub fn quantize(grid: &CellGrid, bits: u32) -> Result<CellGrid> {
    if !(1..=16).contains(&bits) {
        return Err(Error::InvalidConfig(format!(
            "quantization bits {bits} outside 1..=16"
        )));
    }
    let top = ((1u32 << bits) - 1) as f64;
    let mut out = grid.clone();
    for x in out.state_mut().data_mut() {
        let level = ((x.clamp(-1.0, 1.0) + 1.0) * 0.5 * top).round();
        *x = -1.0 + 2.0 * level / top;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn zero_template() -> Template {
        Template::from_3x3("zero", [[0.0; 3]; 3], [[0.0; 3]; 3], 0.0, 0.0)
    }

    #[test]
    fn output_examples() {
        assert_eq!(output(0.0), 0.0);
        assert_eq!(output(3.7), 1.0);
        assert_eq!(output(-0.5), -0.5);
        assert_eq!(output(-12.0), -1.0);
        assert_eq!(output(1.0), 1.0);
    }

    #[test]
    fn pure_decay_step() {
        let grid = CellGrid::with_state(Image::filled(3, 3, 1.0)).unwrap();
        let next = step(&grid, &zero_template(), &SolverConfig::default()).unwrap();
        for &x in next.state().data() {
            assert_abs_diff_eq!(x, 0.9, epsilon = 1e-15);
        }
    }

    #[test]
    fn identity_center_is_equilibrium() {
        let mut a = [[0.0; 3]; 3];
        a[1][1] = 1.0;
        let t = Template::from_3x3("hold", a, [[0.0; 3]; 3], 0.0, 5.0);
        let grid = CellGrid::with_state(Image::filled(4, 4, 0.5)).unwrap();
        let out = run(&grid, &t, &SolverConfig::default()).unwrap();
        assert_eq!(out.state(), grid.state());
    }

    #[test]
    fn zero_duration_is_identity() {
        let grid = CellGrid::with_state(Image::from_fn(5, 4, |r, c| (r * 5 + c) as f64 / 40.0))
            .unwrap();
        let out = run(&grid, &zero_template().with_duration(0.0), &SolverConfig::default()).unwrap();
        assert_eq!(out, grid);
    }

    #[test]
    fn step_count_rounds_up() {
        let cfg = SolverConfig::default();
        assert_eq!(cfg.steps_for(0.0), 0);
        assert_eq!(cfg.steps_for(1.0), 10);
        assert_eq!(cfg.steps_for(0.05), 1);
        assert_eq!(cfg.steps_for(0.15), 2);
        assert_eq!(cfg.steps_for(75.0), 750);
    }

    #[test]
    fn rejects_unstable_dt() {
        let cfg = SolverConfig {
            dt_ns: 0.6,
            ..SolverConfig::default()
        };
        let grid = CellGrid::with_state(Image::filled(2, 2, 0.0)).unwrap();
        assert!(matches!(
            step(&grid, &zero_template(), &cfg),
            Err(Error::InvalidConfig(_))
        ));
    }

    #[test]
    fn rejects_blowup() {
        let mut a = [[0.0; 3]; 3];
        a[1][1] = 1e308;
        let t = Template::from_3x3("blow", a, [[0.0; 3]; 3], 1e308, 100.0);
        let grid = CellGrid::with_state(Image::filled(2, 2, 1.0)).unwrap();
        assert!(matches!(
            run(&grid, &t, &SolverConfig::default()),
            Err(Error::NonFinite { .. })
        ));
    }

    #[test]
    fn grid_rejects_bad_inputs() {
        let s = Image::filled(2, 2, 0.0);
        assert!(CellGrid::new(s.clone(), Image::filled(2, 2, 1.5), Boundary::ZeroFlux).is_err());
        assert!(CellGrid::new(
            Image::filled(2, 2, f64::NAN),
            Image::filled(2, 2, 0.0),
            Boundary::ZeroFlux
        )
        .is_err());
        assert!(CellGrid::new(s, Image::filled(3, 2, 0.0), Boundary::ZeroFlux).is_err());
    }

    #[test]
    fn quantize_examples() {
        let g = CellGrid::with_state(Image::from_vec(3, 1, vec![0.0, 1.0, -0.2]).unwrap()).unwrap();
        let q8 = quantize(&g, 8).unwrap();
        assert!(q8.state().get(0, 0).abs() <= 2.0 / 255.0 / 2.0 + 1e-15);
        let q1 = quantize(&g, 1).unwrap();
        assert_eq!(q1.state().get(0, 1), 1.0);
        assert_eq!(q1.state().get(0, 2), -1.0);
        assert!(quantize(&g, 0).is_err());
        assert!(quantize(&g, 17).is_err());
    }

    #[test]
    fn quantize_error_bound_matches_level_scan() {
        // Exhaustive level scan: the worst error is half the level spacing.
        let levels: Vec<f64> = (0..256).map(|k| -1.0 + 2.0 * k as f64 / 255.0).collect();
        let values: Vec<f64> = (0..=4000).map(|i| -1.0 + 2.0 * i as f64 / 4000.0).collect();
        let g = CellGrid::with_state(Image::from_vec(values.len(), 1, values.clone()).unwrap())
            .unwrap();
        let q = quantize(&g, 8).unwrap();
        let mut worst: f64 = 0.0;
        for (v, qv) in values.iter().zip(q.state().data()) {
            let nearest = levels
                .iter()
                .copied()
                .min_by(|a, b| (a - v).abs().total_cmp(&(b - v).abs()))
                .unwrap();
            assert!((v - qv).abs() <= (v - nearest).abs() + 1e-12);
            assert!(levels.iter().any(|l| (l - qv).abs() < 1e-12));
            worst = worst.max((v - qv).abs());
        }
        assert!(worst <= 1.0 / 255.0 + 1e-15);
    }

    #[test]
    fn snapshots_match_separate_runs() {
        let img = Image::from_fn(7, 6, |r, c| ((r * 7 + c) % 5) as f64 / 5.0 - 0.4);
        let grid = CellGrid::with_state(img).unwrap();
        let mut a = [[0.1, 0.15, 0.1], [0.15, 0.0, 0.15], [0.1, 0.15, 0.1]];
        a[0][2] = 0.12;
        let t = Template::from_3x3("d", a, [[0.0; 3]; 3], 0.0, 0.0);
        let cfg = SolverConfig::default();
        let snaps = run_snapshots(&grid, &t, &cfg, &[3.0, 1.0, 2.5]).unwrap();
        for (d, snap) in [3.0, 1.0, 2.5].iter().zip(&snaps) {
            let direct = run_for(&grid, &t, &cfg, *d).unwrap();
            assert_eq!(direct.state(), snap);
        }
    }
}
