//! Reference implementations written independently of the `cenn` crate.
//!
//! Everything here works on plain row-major slices so that no code path is
//! shared with the implementation under test.

use std::collections::VecDeque;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Edge {
    /// Out-of-grid neighbors copy the nearest in-grid cell.
    Replicate,
    Constant(f64),
}

fn sat(x: f64) -> f64 {
    0.5 * ((x + 1.0).abs() - (x - 1.0).abs())
}

fn fetch(values: &[f64], w: usize, h: usize, r: isize, c: isize, edge: Edge) -> f64 {
    if r >= 0 && c >= 0 && (r as usize) < h && (c as usize) < w {
        return values[r as usize * w + c as usize];
    }
    match edge {
        Edge::Constant(v) => v,
        Edge::Replicate => {
            let rr = r.max(0).min(h as isize - 1) as usize;
            let cc = c.max(0).min(w as isize - 1) as usize;
            values[rr * w + cc]
        }
    }
}

/// One explicit Euler step of the cell equation, evaluated cell by cell with
/// a plain quadruple loop.
#[allow(clippy::too_many_arguments)]
pub fn euler_step(
    w: usize,
    h: usize,
    side: usize,
    a: &[f64],
    b: &[f64],
    z: f64,
    state: &[f64],
    input: &[f64],
    dt: f64,
    tau: f64,
    edge: Edge,
) -> Vec<f64> {
    let r = (side / 2) as isize;
    let y: Vec<f64> = state.iter().map(|&x| sat(x)).collect();
    let mut next = vec![0.0; w * h];
    for row in 0..h {
        for col in 0..w {
            let mut fb = 0.0;
            for i in 0..side {
                for j in 0..side {
                    let rr = row as isize + i as isize - r;
                    let cc = col as isize + j as isize - r;
                    fb += a[i * side + j] * fetch(&y, w, h, rr, cc, edge);
                }
            }
            let mut ff = 0.0;
            for i in 0..side {
                for j in 0..side {
                    let rr = row as isize + i as isize - r;
                    let cc = col as isize + j as isize - r;
                    ff += b[i * side + j] * fetch(input, w, h, rr, cc, edge);
                }
            }
            let x = state[row * w + col];
            next[row * w + col] = x + (dt / tau) * (((-x + fb) + ff) + z);
        }
    }
    next
}

/// Exact solution of the semi-discrete heat equation
/// `du/dt = Σ w_k (u(i+k) - u(i))` for a unit impulse at the center of an
/// `n x n` periodic lattice, computed spectrally.
pub fn heat_kernel(n: usize, weights: [[f64; 3]; 3], t: f64) -> Vec<f64> {
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(n);
    let inv = planner.plan_fft_inverse(n);
    let c = n / 2;
    let mut field = vec![Complex::new(0.0, 0.0); n * n];
    field[c * n + c] = Complex::new(1.0, 0.0);
    fft2(&mut field, n, &*fwd);
    let tau = std::f64::consts::TAU;
    for kr in 0..n {
        for kc in 0..n {
            let mut lambda = 0.0;
            for (i, row) in weights.iter().enumerate() {
                for (j, &wgt) in row.iter().enumerate() {
                    let dr = i as f64 - 1.0;
                    let dc = j as f64 - 1.0;
                    let phase = tau * (kr as f64 * dr + kc as f64 * dc) / n as f64;
                    lambda += wgt * (phase.cos() - 1.0);
                }
            }
            field[kr * n + kc] *= (t * lambda).exp();
        }
    }
    fft2(&mut field, n, &*inv);
    let scale = 1.0 / (n * n) as f64;
    field.iter().map(|v| v.re * scale).collect()
}

fn fft2(field: &mut [Complex<f64>], n: usize, plan: &dyn rustfft::Fft<f64>) {
    for row in field.chunks_mut(n) {
        plan.process(row);
    }
    let mut col = vec![Complex::new(0.0, 0.0); n];
    for c in 0..n {
        for r in 0..n {
            col[r] = field[r * n + c];
        }
        plan.process(&mut col);
        for r in 0..n {
            field[r * n + c] = col[r];
        }
    }
}

/// Second moments `(var_rows, var_cols)` of a non-negative mass distribution
/// about its centroid.
pub fn second_moments(values: &[f64], w: usize) -> (f64, f64) {
    let mut mass = 0.0;
    let (mut mr, mut mc) = (0.0, 0.0);
    for (i, &v) in values.iter().enumerate() {
        mass += v;
        mr += v * (i / w) as f64;
        mc += v * (i % w) as f64;
    }
    let (cr, cc) = (mr / mass, mc / mass);
    let (mut vr, mut vc) = (0.0, 0.0);
    for (i, &v) in values.iter().enumerate() {
        vr += v * ((i / w) as f64 - cr).powi(2);
        vc += v * ((i % w) as f64 - cc).powi(2);
    }
    (vr / mass, vc / mass)
}

pub fn threshold(values: &[f64], level: f64) -> Vec<bool> {
    values.iter().map(|&v| v > level).collect()
}

pub fn and(a: &[bool], b: &[bool]) -> Vec<bool> {
    a.iter().zip(b).map(|(&x, &y)| x && y).collect()
}

/// Each pixel becomes black if any pixel at or to its right in the row is.
pub fn shadow_left(img: &[bool], w: usize, h: usize) -> Vec<bool> {
    let mut out = vec![false; w * h];
    for r in 0..h {
        let mut seen = false;
        for c in (0..w).rev() {
            seen |= img[r * w + c];
            out[r * w + c] = seen;
        }
    }
    out
}

/// Each pixel becomes black if any pixel at or above it in the column is.
pub fn shadow_down(img: &[bool], w: usize, h: usize) -> Vec<bool> {
    let mut out = vec![false; w * h];
    for c in 0..w {
        let mut seen = false;
        for r in 0..h {
            seen |= img[r * w + c];
            out[r * w + c] = seen;
        }
    }
    out
}

/// 3x3 max filter applied `radius` times, neighborhoods clipped at the edge.
pub fn dilate(img: &[bool], w: usize, h: usize, radius: usize) -> Vec<bool> {
    let mut cur = img.to_vec();
    for _ in 0..radius {
        let mut next = vec![false; w * h];
        for r in 0..h {
            for c in 0..w {
                let mut any = false;
                for dr in -1isize..=1 {
                    for dc in -1isize..=1 {
                        let rr = r as isize + dr;
                        let cc = c as isize + dc;
                        if rr >= 0 && cc >= 0 && (rr as usize) < h && (cc as usize) < w {
                            any |= cur[rr as usize * w + cc as usize];
                        }
                    }
                }
                next[r * w + c] = any;
            }
        }
        cur = next;
    }
    cur
}

/// 8-connected component labels of the black pixels (`0` = background).
pub fn components(img: &[bool], w: usize, h: usize) -> Vec<usize> {
    let mut label = vec![0usize; w * h];
    let mut next = 0;
    let mut queue = VecDeque::new();
    for start in 0..w * h {
        if !img[start] || label[start] != 0 {
            continue;
        }
        next += 1;
        label[start] = next;
        queue.push_back(start);
        while let Some(i) = queue.pop_front() {
            let (r, c) = ((i / w) as isize, (i % w) as isize);
            for dr in -1..=1 {
                for dc in -1..=1 {
                    let (rr, cc) = (r + dr, c + dc);
                    if rr < 0 || cc < 0 || rr as usize >= h || cc as usize >= w {
                        continue;
                    }
                    let j = rr as usize * w + cc as usize;
                    if img[j] && label[j] == 0 {
                        label[j] = next;
                        queue.push_back(j);
                    }
                }
            }
        }
    }
    label
}

/// Flood fill: components of `reference` containing at least one marker.
pub fn reconstruct(markers: &[bool], reference: &[bool], w: usize, h: usize) -> Vec<bool> {
    let labels = components(reference, w, h);
    let mut keep = std::collections::HashSet::new();
    for i in 0..w * h {
        if markers[i] && reference[i] {
            keep.insert(labels[i]);
        }
    }
    labels.iter().map(|l| *l != 0 && keep.contains(l)).collect()
}

/// Tight bounding box `(col0, row0, width, height)` of black pixels.
pub fn bbox(img: &[bool], w: usize) -> Option<(usize, usize, usize, usize)> {
    let mut extent: Option<(usize, usize, usize, usize)> = None;
    for (i, _) in img.iter().enumerate().filter(|(_, &v)| v) {
        let (r, c) = (i / w, i % w);
        extent = Some(match extent {
            None => (c, r, c, r),
            Some((c0, r0, c1, r1)) => (c0.min(c), r0.min(r), c1.max(c), r1.max(r)),
        });
    }
    extent.map(|(c0, r0, c1, r1)| (c0, r0, c1 - c0 + 1, r1 - r0 + 1))
}

/// Least-squares weights minimizing `Σ (Σ_i w_i d_i - g)^2`, by the normal
/// equations and Gaussian elimination.
pub fn least_squares(descriptors: &[Vec<f64>], target: &[f64]) -> Vec<f64> {
    let n = descriptors.len();
    let mut m = vec![vec![0.0; n + 1]; n];
    for i in 0..n {
        for j in 0..n {
            m[i][j] = descriptors[i].iter().zip(&descriptors[j]).map(|(a, b)| a * b).sum();
        }
        m[i][n] = descriptors[i].iter().zip(target).map(|(a, b)| a * b).sum();
    }
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs()))
            .unwrap();
        m.swap(col, pivot);
        for row in 0..n {
            if row != col {
                let f = m[row][col] / m[col][col];
                for k in col..=n {
                    m[row][k] -= f * m[col][k];
                }
            }
        }
    }
    (0..n).map(|i| m[i][n] / m[i][i]).collect()
}

/// Mean squared error between the clamped weighted sum and the target.
pub fn weighted_mse(weights: &[f64], descriptors: &[Vec<f64>], target: &[f64]) -> f64 {
    let mut total = 0.0;
    for (p, &g) in target.iter().enumerate() {
        let s: f64 = weights.iter().zip(descriptors).map(|(w, d)| w * d[p]).sum();
        total += (s.clamp(-1.0, 1.0) - g).powi(2);
    }
    total / target.len() as f64
}

/// Scalar constant-velocity Kalman filter on one axis, written out with
/// explicit 2x2 algebra. Returns the filtered positions.
pub fn kalman_1d(measurements: &[f64], x0: f64, q: f64, r: f64) -> Vec<f64> {
    let (mut p, mut v) = (x0, 0.0);
    // covariance [[a, b], [b, d]], initialized to the process noise
    let (mut a, mut b, mut d) = (q, 0.0, q);
    let mut out = Vec::new();
    for &m in measurements {
        // predict
        p += v;
        let na = a + 2.0 * b + d + q;
        let nb = b + d;
        let nd = d + q;
        a = na;
        b = nb;
        d = nd;
        // update
        let s = a + r;
        let (k0, k1) = (a / s, b / s);
        let innov = m - p;
        p += k0 * innov;
        v += k1 * innov;
        let (oa, ob, od) = (a, b, d);
        a = (1.0 - k0) * oa;
        b = (1.0 - k0) * ob;
        d = od - k1 * ob;
        out.push(p);
    }
    out
}
