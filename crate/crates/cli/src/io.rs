//! File formats: frame directories, ground-truth boxes, models, results and
//! curve CSVs. All writes go through a temp file in the target directory and
//! a rename, so readers never see a half-written file.

use std::io::{Cursor, Write};
use std::path::{Path, PathBuf};

use cenn::metrics::SuccessCurve;
use cenn::tracker::FrameResult;
use cenn::trainer::TrainedModel;
use cenn::{BoundingBox, Image};
use image::codecs::pnm::{PnmEncoder, PnmSubtype, SampleEncoding};
use image::{ExtendedColorType, ImageEncoder, ImageFormat};
use tempfile::NamedTempFile;

use crate::error::{CliError, CliResult};

pub const RESULTS_HEADER: &str = "frame,x,y,w,h,lost,area";
pub const CURVE_HEADER: &str = "threshold,success_rate";

pub fn write_atomic(path: &Path, bytes: &[u8]) -> CliResult<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = NamedTempFile::new_in(dir).map_err(|e| CliError::write(path, e))?;
    tmp.write_all(bytes).map_err(|e| CliError::write(path, e))?;
    tmp.persist(path).map_err(|e| CliError::write(path, e.error))?;
    Ok(())
}

fn read_text(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::input(path, e))
}

/// Parses `x,y,w,h` lines (comma or tab separated, 1-based) into 0-based
/// boxes. Blank lines are skipped; line numbers in errors count them.
pub fn parse_ground_truth(text: &str) -> cenn::Result<Vec<BoundingBox>> {
    let mut boxes = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let parse = |message: String| cenn::Error::Parse { line: i + 1, message };
        let fields: Vec<&str> = line.split([',', '\t']).map(str::trim).collect();
        if fields.len() != 4 {
            return Err(parse(format!("expected 4 fields, found {}", fields.len())));
        }
        let mut v = [0.0; 4];
        for (slot, f) in v.iter_mut().zip(&fields) {
            *slot = f
                .parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| parse(format!("not a number: {f:?}")))?;
        }
        if v[2] <= 0.0 || v[3] <= 0.0 {
            return Err(parse(format!("width and height must be positive, got {} x {}", v[2], v[3])));
        }
        boxes.push(BoundingBox::new(v[0] - 1.0, v[1] - 1.0, v[2], v[3]).map_err(|e| parse(e.to_string()))?);
    }
    Ok(boxes)
}

pub fn load_ground_truth(path: &Path) -> CliResult<Vec<BoundingBox>> {
    parse_ground_truth(&read_text(path)?).map_err(|e| CliError::input(path, e))
}

/// Inverse of [`parse_ground_truth`]: 1-based, comma separated.
pub fn format_ground_truth(boxes: &[BoundingBox]) -> String {
    boxes
        .iter()
        .map(|b| format!("{},{},{},{}\n", b.x + 1.0, b.y + 1.0, b.w, b.h))
        .collect()
}

/// Frame files in `dir`: `.pgm` or `.png` with purely numeric stems, in
/// numeric order.
pub fn frame_paths(dir: &Path) -> CliResult<Vec<PathBuf>> {
    let entries = std::fs::read_dir(dir).map_err(|e| CliError::input(dir, e))?;
    let mut frames = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| CliError::input(dir, e))?.path();
        let ext = path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase);
        if !matches!(ext.as_deref(), Some("pgm" | "png")) {
            continue;
        }
        let number = path
            .file_stem()
            .and_then(|s| s.to_str())
            .and_then(|s| s.parse::<u64>().ok())
            .ok_or_else(|| CliError::input(&path, "frame names must be numeric"))?;
        frames.push((number, path));
    }
    frames.sort();
    if let Some(w) = frames.windows(2).find(|w| w[0].0 == w[1].0) {
        return Err(CliError::input(&w[1].1, "duplicate frame number"));
    }
    Ok(frames.into_iter().map(|(_, p)| p).collect())
}

/// Which frames of a sequence to use.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct FrameRange {
    pub first: usize,
    pub count: Option<usize>,
}

pub fn read_frame(path: &Path) -> CliResult<Image> {
    let img = image::open(path).map_err(|e| CliError::input(path, e))?.to_luma8();
    let (w, h) = img.dimensions();
    Image::from_gray(w as usize, h as usize, img.as_raw()).map_err(|e| CliError::input(path, e))
}

/// Loads the frames selected by `range`; all must share one size.
pub fn load_frames(dir: &Path, range: FrameRange) -> CliResult<Vec<Image>> {
    let paths = frame_paths(dir)?;
    let end = range.count.map_or(paths.len(), |n| (range.first + n).min(paths.len()));
    if range.first >= end {
        return Err(CliError::input(dir, format!("no frames in range (found {})", paths.len())));
    }
    let mut frames: Vec<Image> = Vec::with_capacity(end - range.first);
    for path in &paths[range.first..end] {
        let img = read_frame(path)?;
        if let Some(first) = frames.first() {
            if (img.width(), img.height()) != (first.width(), first.height()) {
                return Err(CliError::input(
                    path,
                    format!(
                        "frame is {}x{}, expected {}x{}",
                        img.width(),
                        img.height(),
                        first.width(),
                        first.height()
                    ),
                ));
            }
        }
        frames.push(img);
    }
    Ok(frames)
}

/// Writes 8-bit gray pixels as binary PGM, or PNG when the extension says so.
pub fn write_gray(path: &Path, width: usize, height: usize, gray: &[u8]) -> CliResult<()> {
    let mut buf = Vec::new();
    let (w, h) = (width as u32, height as u32);
    let is_png = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("png"));
    let written = if is_png {
        image::GrayImage::from_raw(w, h, gray.to_vec())
            .ok_or_else(|| CliError::write(path, "pixel count does not match size"))?
            .write_to(&mut Cursor::new(&mut buf), ImageFormat::Png)
    } else {
        PnmEncoder::new(&mut buf)
            .with_subtype(PnmSubtype::Graymap(SampleEncoding::Binary))
            .write_image(gray, w, h, ExtendedColorType::L8)
    };
    written.map_err(|e| CliError::write(path, e))?;
    write_atomic(path, &buf)
}

pub fn load_model(path: &Path) -> CliResult<TrainedModel> {
    let model: TrainedModel = serde_json::from_str(&read_text(path)?).map_err(|e| CliError::input(path, e))?;
    model.validate().map_err(|e| CliError::input(path, e))?;
    Ok(model)
}

pub fn model_json(model: &TrainedModel) -> String {
    let mut s = serde_json::to_string_pretty(model).expect("model serializes");
    s.push('\n');
    s
}

/// `frame` is the absolute frame number within the sequence.
pub fn format_results(first_frame: usize, results: &[FrameResult]) -> String {
    let mut out = String::from(RESULTS_HEADER);
    out.push('\n');
    for r in results {
        let b = &r.bbox;
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            first_frame + r.frame_index,
            b.x,
            b.y,
            b.w,
            b.h,
            u8::from(r.lost),
            r.area
        ));
    }
    out
}

/// Frame numbers and boxes from a results CSV.
pub fn parse_results(text: &str) -> cenn::Result<Vec<(usize, BoundingBox)>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == RESULTS_HEADER => {}
        _ => {
            return Err(cenn::Error::Parse {
                line: 1,
                message: format!("expected header {RESULTS_HEADER:?}"),
            })
        }
    }
    let mut rows = Vec::new();
    for (i, raw) in lines {
        if raw.trim().is_empty() {
            continue;
        }
        let parse = |message: String| cenn::Error::Parse { line: i + 1, message };
        let fields: Vec<&str> = raw.split(',').map(str::trim).collect();
        if fields.len() != 7 {
            return Err(parse(format!("expected 7 fields, found {}", fields.len())));
        }
        let frame = fields[0]
            .parse::<usize>()
            .map_err(|_| parse(format!("bad frame number {:?}", fields[0])))?;
        let mut v = [0.0; 4];
        for (slot, f) in v.iter_mut().zip(&fields[1..5]) {
            *slot = f.parse().map_err(|_| parse(format!("not a number: {f:?}")))?;
        }
        let b = BoundingBox::new(v[0], v[1], v[2], v[3]).map_err(|e| parse(e.to_string()))?;
        rows.push((frame, b));
    }
    Ok(rows)
}

pub fn load_results(path: &Path) -> CliResult<Vec<(usize, BoundingBox)>> {
    parse_results(&read_text(path)?).map_err(|e| CliError::input(path, e))
}

pub fn format_curve(curve: &SuccessCurve) -> String {
    let mut out = String::from(CURVE_HEADER);
    out.push('\n');
    for (t, r) in curve.thresholds.iter().zip(&curve.success_rate) {
        out.push_str(&format!("{t:.2},{r}\n"));
    }
    out
}
