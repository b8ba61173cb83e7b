//! Offline training on the first frame: DoG feature pool, pooling, feature
//! selection, genetic weighting and the final threshold.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::bbox::BoundingBox;
use crate::error::{Error, Result};
use crate::image::Image;
use crate::library::{self, DiffusionKind, DogKernel, MAX_DOG_STEPS, MIN_DOG_STEPS, POOL_DIFFUSION_NS};
use crate::ops;
use crate::solver::SolverConfig;

/// Step counts offered to the kernel enumeration.
pub const DOG_STEP_GRID: u32 = 5;

/// Every kernel the pool can draw from, in a fixed order shuffled by `seed`.
///
/// Base order: diffusion kind (isotropic, then 0°, 45°, 90°, 135°), then
/// `steps1 < steps2` over `10, 15, .., 75` in lexicographic order.
pub fn kernel_enumeration(seed: u64) -> Vec<DogKernel> {
    let steps: Vec<u32> = (MIN_DOG_STEPS..=MAX_DOG_STEPS).step_by(DOG_STEP_GRID as usize).collect();
    let mut all = Vec::new();
    for kind in DiffusionKind::ALL {
        for (i, &s1) in steps.iter().enumerate() {
            for &s2 in &steps[i + 1..] {
                all.push(DogKernel {
                    kind,
                    steps1: s1,
                    steps2: s2,
                });
            }
        }
    }
    all.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    all
}

/// Threshold levels tried when pooling: `-0.8, -0.6, .., 0.8`.
pub fn pool_threshold_candidates() -> Vec<f64> {
    (0..9).map(|k| f64::from(2 * k - 8) / 10.0).collect()
}

fn foreground_fraction(image: &Image, level: f64) -> f64 {
    let n = image.data().iter().filter(|&&v| library::exceeds_threshold(v, level)).count();
    n as f64 / image.len() as f64
}

/// Picks the most descriptive pooling threshold: among candidates whose
/// binary image is neither empty nor full, the one whose foreground fraction
/// is nearest `target_sparsity`. Ties go to the smallest `|z|`, then the
/// smallest `z`; if every candidate is degenerate, the smallest `|z|` wins.
pub fn choose_pool_threshold(response: &Image, target_sparsity: f64) -> f64 {
    let mut best: Option<(f64, f64)> = None;
    let mut fallback = f64::INFINITY;
    for z in pool_threshold_candidates() {
        if better_tiebreak(z, fallback) {
            fallback = z;
        }
        let p = foreground_fraction(response, z);
        if p == 0.0 || p == 1.0 {
            continue;
        }
        let dist = (p - target_sparsity).abs();
        best = match best {
            Some((bz, bd)) if bd < dist || (bd == dist && !better_tiebreak(z, bz)) => Some((bz, bd)),
            _ => Some((z, dist)),
        };
    }
    best.map_or(fallback, |(z, _)| z)
}

fn better_tiebreak(z: f64, incumbent: f64) -> bool {
    z.abs() < incumbent.abs() || (z.abs() == incumbent.abs() && z < incumbent)
}

/// Thresholds a DoG response at its most descriptive level and diffuses
/// the binary result into soft blobs. Returns the pooled image and the level.
pub fn pool_response(response: &Image, target_sparsity: f64, cfg: &SolverConfig) -> Result<(Image, f64)> {
    let z = choose_pool_threshold(response, target_sparsity);
    let binary = ops::threshold(response, z, cfg)?;
    let pooled = ops::diffuse(&binary, DiffusionKind::Isotropic, POOL_DIFFUSION_NS, cfg)?;
    Ok((pooled, z))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Descriptor {
    pub kernel: DogKernel,
    /// Position in the pool's kernel enumeration; used for stable ordering.
    pub index: usize,
    pub pool_threshold: f64,
    pub response: Image,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeaturePool {
    pub descriptors: Vec<Descriptor>,
    pub frame_id: usize,
}

impl FeaturePool {
    pub fn responses(&self) -> Vec<&Image> {
        self.descriptors.iter().map(|d| &d.response).collect()
    }
}

/// Pooled responses of the given kernels on one frame.
pub fn pooled_responses(
    frame: &Image,
    kernels: &[DogKernel],
    target_sparsity: f64,
    cfg: &SolverConfig,
) -> Result<Vec<(Image, f64)>> {
    ops::apply_dog_bank(frame, kernels, cfg)?
        .iter()
        .map(|r| pool_response(r, target_sparsity, cfg))
        .collect()
}

/// Runs the first `n_kernels` kernels of the seeded enumeration on `frame`.
pub fn generate_pool(
    frame: &Image,
    frame_id: usize,
    n_kernels: usize,
    kernel_seed: u64,
    target_sparsity: f64,
    cfg: &SolverConfig,
) -> Result<FeaturePool> {
    let all = kernel_enumeration(kernel_seed);
    if n_kernels == 0 || n_kernels > all.len() {
        return Err(Error::InvalidConfig(format!(
            "kernel count must be in 1..={}, got {n_kernels}",
            all.len()
        )));
    }
    let kernels = &all[..n_kernels];
    let pooled = pooled_responses(frame, kernels, target_sparsity, cfg)?;
    let descriptors = kernels
        .iter()
        .zip(pooled)
        .enumerate()
        .map(|(index, (&kernel, (response, pool_threshold)))| Descriptor {
            kernel,
            index,
            pool_threshold,
            response,
        })
        .collect();
    Ok(FeaturePool {
        descriptors,
        frame_id,
    })
}

/// Mean response inside `bbox` minus mean response outside it.
pub fn feature_score(response: &Image, bbox: &BoundingBox) -> Result<f64> {
    let (mut inside, mut n_in, mut outside, mut n_out) = (0.0, 0usize, 0.0, 0usize);
    for row in 0..response.height() {
        for col in 0..response.width() {
            let v = response.get(row, col);
            if bbox.contains_cell(row, col) {
                inside += v;
                n_in += 1;
            } else {
                outside += v;
                n_out += 1;
            }
        }
    }
    if n_in == 0 {
        return Err(Error::EmptyBox);
    }
    let outside_mean = if n_out == 0 { 0.0 } else { outside / n_out as f64 };
    Ok(inside / n_in as f64 - outside_mean)
}

/// Keeps the `n_keep` descriptors with the highest [`feature_score`],
/// highest first; equal scores keep enumeration order.
pub fn select_features(pool: &FeaturePool, bbox: &BoundingBox, n_keep: usize) -> Result<FeaturePool> {
    if n_keep == 0 || n_keep > pool.descriptors.len() {
        return Err(Error::InvalidConfig(format!(
            "n_keep must be in 1..={}, got {n_keep}",
            pool.descriptors.len()
        )));
    }
    let mut scored = pool
        .descriptors
        .iter()
        .map(|d| Ok((feature_score(&d.response, bbox)?, d)))
        .collect::<Result<Vec<_>>>()?;
    scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.index.cmp(&b.1.index)));
    Ok(FeaturePool {
        descriptors: scored.into_iter().take(n_keep).map(|(_, d)| d.clone()).collect(),
        frame_id: pool.frame_id,
    })
}

/// `Σ w_i * d_i`, summed in descriptor order.
pub fn weighted_sum(weights: &[f64], descriptors: &[&Image]) -> Result<Image> {
    let first = descriptors.first().ok_or(Error::EmptyInput("descriptors"))?;
    if weights.len() != descriptors.len() {
        return Err(Error::InvalidConfig(format!(
            "{} weights for {} descriptors",
            weights.len(),
            descriptors.len()
        )));
    }
    let mut out = Image::filled(first.width(), first.height(), 0.0);
    for (w, d) in weights.iter().zip(descriptors) {
        out.same_shape(d)?;
        for (o, v) in out.data_mut().iter_mut().zip(d.data()) {
            *o += w * v;
        }
    }
    Ok(out)
}

/// Scales an image into `[-1, 1]` by `max(1, max|v|)`.
pub fn normalize(image: &Image) -> Image {
    let scale = image.max_abs().max(1.0);
    image.map(|v| v / scale)
}

/// Mean squared error between the clamped weighted sum and the mask.
pub fn fitness(weights: &[f64], descriptors: &[&Image], gt_mask: &Image) -> Result<f64> {
    let sum = weighted_sum(weights, descriptors)?;
    sum.same_shape(gt_mask)?;
    let sse: f64 = sum
        .data()
        .iter()
        .zip(gt_mask.data())
        .map(|(s, g)| (s.clamp(-1.0, 1.0) - g).powi(2))
        .sum();
    Ok(sse / sum.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GaConfig {
    pub population: usize,
    pub generations: usize,
    pub crossover_rate: f64,
    pub mutation_rate: f64,
    pub mutation_sigma: f64,
    pub weight_range: [f64; 2],
    pub rng_seed: u64,
}

impl Default for GaConfig {
    fn default() -> Self {
        Self {
            population: 20,
            generations: 100,
            crossover_rate: 0.8,
            mutation_rate: 0.1,
            mutation_sigma: 0.1,
            weight_range: [-2.0, 2.0],
            rng_seed: 1,
        }
    }
}

impl GaConfig {
    pub fn validate(&self) -> Result<()> {
        let [lo, hi] = self.weight_range;
        let rates_ok = [self.crossover_rate, self.mutation_rate]
            .iter()
            .all(|r| (0.0..=1.0).contains(r));
        if self.population < 2
            || !rates_ok
            || !(self.mutation_sigma >= 0.0 && self.mutation_sigma.is_finite())
            || !(lo.is_finite() && hi.is_finite() && lo < hi)
        {
            return Err(Error::InvalidConfig(format!("invalid GA configuration {self:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaResult {
    pub weights: Vec<f64>,
    pub fitness: f64,
    /// Best-so-far fitness after the initial population and each generation.
    pub history: Vec<f64>,
}

fn tournament(fit: &[f64], rng: &mut ChaCha8Rng) -> usize {
    let a = rng.random_range(0..fit.len());
    let b = rng.random_range(0..fit.len());
    if fit[b] < fit[a] || (fit[b] == fit[a] && b < a) {
        b
    } else {
        a
    }
}

fn argmin(fit: &[f64]) -> usize {
    let mut best = 0;
    for (i, &f) in fit.iter().enumerate() {
        if f < fit[best] {
            best = i;
        }
    }
    best
}

/// Generational GA: size-2 tournaments, uniform crossover, Gaussian
/// mutation, one elite. Deterministic for a given seed.
pub fn ga_optimize(descriptors: &[&Image], gt_mask: &Image, cfg: &GaConfig) -> Result<GaResult> {
    cfg.validate()?;
    if descriptors.is_empty() {
        return Err(Error::EmptyInput("descriptors"));
    }
    let n = descriptors.len();
    let [lo, hi] = cfg.weight_range;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    let noise = Normal::new(0.0, cfg.mutation_sigma).map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let evaluate = |pop: &[Vec<f64>]| -> Result<Vec<f64>> {
        pop.iter().map(|w| fitness(w, descriptors, gt_mask)).collect()
    };

    let mut pop: Vec<Vec<f64>> = (0..cfg.population)
        .map(|_| (0..n).map(|_| rng.random_range(lo..=hi)).collect())
        .collect();
    let mut fit = evaluate(&pop)?;
    let i = argmin(&fit);
    let (mut best_w, mut best_f) = (pop[i].clone(), fit[i]);
    let mut history = vec![best_f];

    for _ in 0..cfg.generations {
        let mut next = Vec::with_capacity(cfg.population);
        next.push(pop[argmin(&fit)].clone());
        while next.len() < cfg.population {
            let p1 = &pop[tournament(&fit, &mut rng)];
            let p2 = &pop[tournament(&fit, &mut rng)];
            let mut child = if rng.random_bool(cfg.crossover_rate) {
                p1.iter()
                    .zip(p2)
                    .map(|(&a, &b)| if rng.random_bool(0.5) { a } else { b })
                    .collect()
            } else {
                p1.clone()
            };
            for g in &mut child {
                if rng.random_bool(cfg.mutation_rate) {
                    *g = (*g + noise.sample(&mut rng)).clamp(lo, hi);
                }
            }
            next.push(child);
        }
        pop = next;
        fit = evaluate(&pop)?;
        let i = argmin(&fit);
        if fit[i] < best_f {
            best_f = fit[i];
            best_w = pop[i].clone();
        }
        history.push(best_f);
    }
    Ok(GaResult {
        weights: best_w,
        fitness: best_f,
        history,
    })
}

/// Levels scanned for the final threshold: `-1.00, -0.98, .., 1.00`.
pub fn final_threshold_candidates() -> Vec<f64> {
    (0..=100).map(|k| f64::from(2 * k - 100) / 100.0).collect()
}

/// Level minimizing the MSE between the thresholded sum and the mask;
/// the smallest level wins ties.
pub fn select_final_threshold(weighted: &Image, gt_mask: &Image) -> Result<f64> {
    weighted.same_shape(gt_mask)?;
    let mut best = (f64::INFINITY, 0.0);
    for z in final_threshold_candidates() {
        let sse: f64 = weighted
            .data()
            .iter()
            .zip(gt_mask.data())
            .map(|(&v, &g)| {
                let b = if library::exceeds_threshold(v, z) { 1.0 } else { -1.0 };
                (b - g).powi(2)
            })
            .sum();
        let mse = sse / weighted.len() as f64;
        if mse < best.0 {
            best = (mse, z);
        }
    }
    Ok(best.1)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainerConfig {
    pub n_kernels: usize,
    pub n_keep: usize,
    pub kernel_seed: u64,
    /// Foreground fraction sought when pooling a DoG response.
    pub target_sparsity: f64,
    pub ga: GaConfig,
}

impl Default for TrainerConfig {
    fn default() -> Self {
        Self {
            n_kernels: 25,
            n_keep: 6,
            kernel_seed: 7,
            target_sparsity: 0.05,
            ga: GaConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub kernels: Vec<DogKernel>,
    pub weights: Vec<f64>,
    pub final_threshold: f64,
    pub target_sparsity: f64,
    /// Area of the first-frame object response, cells.
    pub reference_response_area: f64,
    pub ground_truth_box: BoundingBox,
}

impl TrainedModel {
    pub fn validate(&self) -> Result<()> {
        if self.kernels.is_empty() || self.kernels.len() != self.weights.len() {
            return Err(Error::InvalidConfig(format!(
                "model has {} kernels and {} weights",
                self.kernels.len(),
                self.weights.len()
            )));
        }
        for k in &self.kernels {
            k.validate()?;
        }
        if !self.weights.iter().all(|w| w.is_finite()) {
            return Err(Error::InvalidConfig("model weights must be finite".into()));
        }
        if !(-1.0..=1.0).contains(&self.final_threshold) {
            return Err(Error::InvalidConfig(format!(
                "final threshold {} outside [-1, 1]",
                self.final_threshold
            )));
        }
        if !(self.reference_response_area > 0.0 && self.reference_response_area.is_finite()) {
            return Err(Error::InvalidConfig("reference response area must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Training {
    pub model: TrainedModel,
    pub ga: GaResult,
}

/// Trains a model on one frame with the target at `bbox`.
pub fn train(frame: &Image, bbox: &BoundingBox, cfg: &TrainerConfig, solver: &SolverConfig) -> Result<Training> {
    bbox.require_within(frame.width(), frame.height())?;
    let pool = generate_pool(frame, 0, cfg.n_kernels, cfg.kernel_seed, cfg.target_sparsity, solver)?;
    let selected = select_features(&pool, bbox, cfg.n_keep.min(cfg.n_kernels))?;
    let gt = bbox.mask(frame.width(), frame.height());
    let responses = selected.responses();
    let ga = ga_optimize(&responses, &gt, &cfg.ga)?;
    let featured = normalize(&weighted_sum(&ga.weights, &responses)?);
    let final_threshold = select_final_threshold(&featured, &gt)?;

    let binary = ops::threshold(&featured, final_threshold, solver)?;
    let object = ops::recall(&gt, &binary, solver)?;
    let area = object.count_black();
    if area == 0 {
        return Err(Error::InvalidConfig(
            "trained features give no response inside the ground-truth box".into(),
        ));
    }
    let model = TrainedModel {
        kernels: selected.descriptors.iter().map(|d| d.kernel).collect(),
        weights: ga.weights.clone(),
        final_threshold,
        target_sparsity: cfg.target_sparsity,
        reference_response_area: area as f64,
        ground_truth_box: *bbox,
    };
    model.validate()?;
    Ok(Training { model, ga })
}
