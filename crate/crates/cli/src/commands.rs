//! Subcommand bodies. Each returns the text meant for stdout so the binary
//! and the tests drive the same code.

use std::fmt::Write as _;
use std::path::Path;

use cenn::cost::{self, CpuFigures, PipelineStep};
use cenn::image::value_to_gray;
use cenn::tracker::{self, FrameResult};
use cenn::{metrics, synth, trainer, BoundingBox, Image};

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::io::{self, FrameRange};

fn frame_name(index: usize, total: usize, ext: &str) -> String {
    let digits = total.saturating_sub(1).to_string().len().max(4);
    format!("{index:0digits$}.{ext}")
}

fn create_dir(dir: &Path) -> CliResult<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::write(dir, e))
}

/// Writes a synthetic sequence as numbered PGM frames plus
/// `groundtruth.txt`.
pub fn synth(cfg: &RunConfig, out_dir: &Path) -> CliResult<String> {
    let seq = synth::generate(&cfg.synth).map_err(|e| CliError::Input(format!("config: {e}")))?;
    create_dir(out_dir)?;
    let n = seq.frames.len();
    for (i, gray) in seq.frames.iter().enumerate() {
        io::write_gray(&out_dir.join(frame_name(i, n, "pgm")), seq.width, seq.height, gray)?;
    }
    io::write_atomic(
        &out_dir.join("groundtruth.txt"),
        io::format_ground_truth(&seq.boxes).as_bytes(),
    )?;
    Ok(format!(
        "wrote {n} frames ({}x{}) and groundtruth.txt to {}\n",
        seq.width,
        seq.height,
        out_dir.display()
    ))
}

fn box_for_frame(gt: &[BoundingBox], gt_path: &Path, frame: usize, needed: usize) -> CliResult<BoundingBox> {
    if gt.len() < needed {
        return Err(CliError::input(
            gt_path,
            format!("{} boxes for {needed} frames", gt.len()),
        ));
    }
    Ok(gt[frame])
}

fn check_box(b: &BoundingBox, frame: &Image) -> CliResult<()> {
    b.require_within(frame.width(), frame.height())
        .map_err(|e| CliError::Input(format!("initial box: {e}")))
}

/// Trains on the first frame of `range` with its ground-truth box and writes
/// the model JSON.
pub fn train(
    cfg: &RunConfig,
    frames_dir: &Path,
    gt_path: &Path,
    range: FrameRange,
    out: &Path,
) -> CliResult<String> {
    let gt = io::load_ground_truth(gt_path)?;
    let frames = io::load_frames(frames_dir, FrameRange { count: Some(1), ..range })?;
    let bbox = box_for_frame(&gt, gt_path, range.first, range.first + 1)?;
    check_box(&bbox, &frames[0])?;

    let training = trainer::train(&frames[0], &bbox, &cfg.trainer, &cfg.solver)?;
    io::write_atomic(out, io::model_json(&training.model).as_bytes())?;

    let mut s = String::from("generation,best_fitness\n");
    for (g, f) in training.ga.history.iter().enumerate() {
        let _ = writeln!(s, "{g},{f:.6}");
    }
    let m = &training.model;
    let _ = writeln!(
        s,
        "fitness {:.6}; {} kernels; final threshold {}; reference area {}",
        training.ga.fitness,
        m.kernels.len(),
        m.final_threshold,
        m.reference_response_area
    );
    Ok(s)
}

/// Tracks the frames of `range` and writes the results CSV. The initial box
/// comes from the ground truth when given, otherwise from the model.
/// With `masks_dir`, each frame's location mask is written there as PGM.
pub fn track(
    cfg: &RunConfig,
    frames_dir: &Path,
    model_path: &Path,
    gt_path: Option<&Path>,
    range: FrameRange,
    out: &Path,
    masks_dir: Option<&Path>,
) -> CliResult<String> {
    let model = io::load_model(model_path)?;
    let frames = io::load_frames(frames_dir, range)?;
    let bbox = match gt_path {
        Some(p) => box_for_frame(&io::load_ground_truth(p)?, p, range.first, range.first + frames.len())?,
        None => model.ground_truth_box,
    };
    check_box(&bbox, &frames[0])?;
    if let Some(dir) = masks_dir {
        create_dir(dir)?;
    }
    let total = range.first + frames.len();
    let write_mask = |frame: usize, mask: &Image| -> CliResult<()> {
        match masks_dir {
            Some(dir) => {
                let gray: Vec<u8> = mask.data().iter().map(|&v| value_to_gray(v)).collect();
                io::write_gray(&dir.join(frame_name(frame, total, "pgm")), mask.width(), mask.height(), &gray)
            }
            None => Ok(()),
        }
    };

    let first = &frames[0];
    let mut state = tracker::init(&model, first, &bbox, &cfg.tracker, &cfg.solver)?;
    write_mask(range.first, &state.location_mask)?;
    let mut results = vec![FrameResult {
        frame_index: 0,
        bbox,
        lost: false,
        area: bbox.mask(first.width(), first.height()).count_black(),
    }];
    for frame in &frames[1..] {
        let (next, result) = tracker::process_frame(&state, frame, &cfg.tracker, &cfg.solver)?;
        state = next;
        write_mask(range.first + result.frame_index, &state.location_mask)?;
        results.push(result);
    }
    io::write_atomic(out, io::format_results(range.first, &results).as_bytes())?;
    let lost = results.iter().filter(|r| r.lost).count();
    Ok(format!("tracked {} frames ({lost} without a measurement)\n", results.len()))
}

/// Scores a results CSV against ground truth; prints the AUC and optionally
/// writes the 101-point success curve.
pub fn score(results_path: &Path, gt_path: &Path, curve_out: Option<&Path>) -> CliResult<String> {
    let rows = io::load_results(results_path)?;
    let gt = io::load_ground_truth(gt_path)?;
    if rows.is_empty() {
        return Err(CliError::input(results_path, "no result rows"));
    }
    let mut tracked = Vec::with_capacity(rows.len());
    let mut truth = Vec::with_capacity(rows.len());
    for (frame, b) in rows {
        let t = gt.get(frame).ok_or_else(|| {
            CliError::input(gt_path, format!("no box for frame {frame} ({} lines)", gt.len()))
        })?;
        tracked.push(b);
        truth.push(*t);
    }
    let overlaps = metrics::overlaps(&tracked, &truth)?;
    let curve = metrics::success_curve(&overlaps)?;
    if let Some(p) = curve_out {
        io::write_atomic(p, io::format_curve(&curve).as_bytes())?;
    }
    Ok(format!("AUC {:.4}\n", metrics::auc(&curve)))
}

/// Per-operation cost table for a pipeline JSON (or the built-in one), with
/// sequence totals and, given CPU figures, the energy-delay ratio.
pub fn cost(
    cfg: &RunConfig,
    pipeline_path: Option<&Path>,
    csv_out: Option<&Path>,
    cpu: Option<CpuFigures>,
) -> CliResult<String> {
    let pipeline: Vec<PipelineStep> = match pipeline_path {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| CliError::input(p, e))?;
            serde_json::from_str(&text).map_err(|e| CliError::input(p, e))?
        }
        None => cost::tracking_pipeline(),
    };
    let report = cost::frame_report(&pipeline, &cfg.cost).map_err(|e| CliError::Input(format!("pipeline: {e}")))?;
    let seq = report.sequence(cfg.sequence_frames);
    let mut text = cost::render_text(&report, Some(&seq));
    if let Some(p) = csv_out {
        io::write_atomic(p, cost::render_csv(&report).as_bytes())?;
    }
    if let Some(cpu) = cpu {
        let ratio = cost::edp_compare(&seq, &cpu).map_err(|e| CliError::Input(format!("--cpu: {e}")))?;
        let _ = writeln!(text, "EDP ratio (CPU / CeNN): {ratio:.2}");
    }
    Ok(text)
}

/// Parses `energy_j,delay_s`.
pub fn parse_cpu(s: &str) -> Result<CpuFigures, String> {
    let (e, t) = s.split_once(',').ok_or("expected ENERGY_J,DELAY_S")?;
    let num = |v: &str| {
        v.trim()
            .parse::<f64>()
            .ok()
            .filter(|x| x.is_finite() && *x > 0.0)
            .ok_or(format!("not a positive number: {v:?}"))
    };
    Ok(CpuFigures { energy_j: num(e)?, delay_s: num(t)? })
}

pub fn defaults() -> String {
    let mut s = serde_json::to_string_pretty(&RunConfig::default()).expect("config serializes");
    s.push('\n');
    s
}

pub fn default_pipeline() -> String {
    let mut s = serde_json::to_string_pretty(&cost::tracking_pipeline()).expect("pipeline serializes");
    s.push('\n');
    s
}
