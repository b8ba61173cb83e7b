//! Energy and delay of the CeNN co-processor, per operation and per frame.
//!
//! Units: time in µs, power per cell in µW, energy in µJ (µW·µs = pJ, and
//! the per-frame sums are converted to µJ).

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::library::{self, DiffusionKind};
use crate::template::Template;

/// 352 x 240 frame.
pub const DEFAULT_CELLS: u64 = 84_480;
/// Region-of-interest cell count for the pre-processing rows.
pub const ROI_CELLS: u64 = 684;
/// Frames in a sequence whose analog runtime is 0.306 s at 160 µs per frame.
pub const DEFAULT_SEQUENCE_FRAMES: u64 = 1913;

/// How per-cell OTA power is derived for a step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PowerMode {
    /// Per-operation values pinned by name; falls back to magnitude.
    #[default]
    Lookup,
    /// Proportional to the template magnitude `Σ|a| + Σ|b|`.
    Magnitude,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CostParams {
    /// µW per unit template magnitude; the isotropic diffusion has magnitude 1.
    pub p_ota_unit: f64,
    /// Fixed per-cell overhead (register, multiplexer), µW.
    pub p_overhead_cell: f64,
    pub adc_bits: u32,
    /// Energy of one conversion in one cell, pJ. Calibration, not contract.
    pub e_adc_conv_pj: f64,
    pub n_cells: u64,
    pub power_mode: PowerMode,
}

impl Default for CostParams {
    fn default() -> Self {
        Self {
            p_ota_unit: 1.5,
            p_overhead_cell: 0.08,
            adc_bits: 8,
            e_adc_conv_pj: 2.0,
            n_cells: DEFAULT_CELLS,
            power_mode: PowerMode::Lookup,
        }
    }
}

impl CostParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [self.p_ota_unit, self.p_overhead_cell, self.e_adc_conv_pj];
        if !positive.iter().all(|v| v.is_finite() && *v > 0.0) || self.adc_bits == 0 || self.n_cells == 0 {
            return Err(Error::InvalidConfig(format!("cost parameters must be positive: {self:?}")));
        }
        Ok(())
    }
}

/// Reference OTA power per cell, keyed by operation name with any trailing
/// index stripped (`DIFFUS3` -> `DIFFUS`). Case-insensitive.
pub fn ota_power_by_name(name: &str) -> Option<f64> {
    let base = name.trim_end_matches(|c: char| c.is_ascii_digit()).to_ascii_uppercase();
    Some(match base.as_str() {
        "INIT" | "DIFFUS" => 1.5,
        "SUB" | "THRES" => 3.0,
        "LOGAND" => 6.0,
        "RECALL" => 21.8,
        "SHADOWL" | "SHADOWD" => 9.0,
        "DILATION" => 13.5,
        _ => return None,
    })
}

/// OTA power of a template from its magnitude, normalized so the isotropic
/// diffusion template costs exactly `p_ota_unit`.
pub fn ota_power_from_template(t: &Template, params: &CostParams) -> f64 {
    let unit = library::diffusion(DiffusionKind::Isotropic).magnitude();
    params.p_ota_unit * t.magnitude() / unit
}

/// OTA plus fixed overhead, per cell.
pub fn op_power_per_cell(t: &Template, params: &CostParams) -> f64 {
    ota_power_from_template(t, params) + params.p_overhead_cell
}

/// `power_per_cell_uw * n_cells * duration_us`, in µJ.
pub fn op_energy(duration_us: f64, power_per_cell_uw: f64, n_cells: u64) -> f64 {
    power_per_cell_uw * n_cells as f64 * duration_us * 1e-6
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineStep {
    pub name: String,
    pub duration_us: f64,
    /// Explicit OTA power, overriding both power modes.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ota_power_uw: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub template: Option<Template>,
    /// Active cells for this step; defaults to `CostParams::n_cells`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cells: Option<u64>,
    /// Whether the array is read through the ADCs after this step.
    #[serde(default)]
    pub readout: bool,
}

impl PipelineStep {
    pub fn named(name: &str, duration_us: f64) -> Self {
        Self {
            name: name.to_string(),
            duration_us,
            ota_power_uw: None,
            template: None,
            cells: None,
            readout: false,
        }
    }

    pub fn with_cells(mut self, cells: u64) -> Self {
        self.cells = Some(cells);
        self
    }

    pub fn with_readout(mut self) -> Self {
        self.readout = true;
        self
    }

    fn ota_power(&self, params: &CostParams) -> Result<f64> {
        if let Some(p) = self.ota_power_uw {
            return Ok(p);
        }
        let by_template = self.template.as_ref().map(|t| ota_power_from_template(t, params));
        let by_name = ota_power_by_name(&self.name);
        let found = match params.power_mode {
            PowerMode::Lookup => by_name.or(by_template),
            PowerMode::Magnitude => by_template.or(by_name),
        };
        found.ok_or_else(|| Error::InvalidConfig(format!("no power figure for step '{}'", self.name)))
    }
}

/// The per-frame tracking pipeline with its reference step durations.
///
/// The DoG and pooling rows run on a small region of interest; the
/// localization rows run on the full frame.
pub fn tracking_pipeline() -> Vec<PipelineStep> {
    vec![
        PipelineStep::named("Init", 7.5).with_cells(ROI_CELLS),
        PipelineStep::named("DIFFUS1", 7.5).with_cells(ROI_CELLS),
        PipelineStep::named("Init", 7.5).with_cells(ROI_CELLS),
        PipelineStep::named("DIFFUS2", 7.5).with_cells(ROI_CELLS),
        PipelineStep::named("SUB", 7.5).with_cells(ROI_CELLS),
        PipelineStep::named("DIFFUS3", 25.0).with_cells(ROI_CELLS).with_readout(),
        PipelineStep::named("Init", 0.3),
        PipelineStep::named("THRES", 0.3),
        PipelineStep::named("LOGAND", 0.3),
        PipelineStep::named("RECALL", 35.2),
        PipelineStep::named("SHADOWL", 35.2).with_readout(),
        PipelineStep::named("Init", 0.3),
        PipelineStep::named("SHADOWD", 24.0).with_readout(),
        PipelineStep::named("DILATION", 1.6),
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostRow {
    pub name: String,
    pub duration_us: f64,
    pub ota_power_uw: f64,
    pub total_power_uw: f64,
    pub cells: u64,
    pub energy_uj: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdcSchedule {
    pub accesses: u32,
    /// ADC (and register) clock, Hz.
    pub frequency_hz: f64,
    /// Conversion energy of one cell per frame, pJ.
    pub energy_per_cell_pj: f64,
}

/// ADC clock and energy for `accesses` readouts over `runtime_us` of analog
/// computation.
pub fn adc_schedule(accesses: u32, runtime_us: f64, params: &CostParams) -> Result<AdcSchedule> {
    if !(runtime_us > 0.0) {
        return Err(Error::ZeroDenominator("analog runtime"));
    }
    Ok(AdcSchedule {
        accesses,
        frequency_hz: f64::from(accesses) / (runtime_us * 1e-6),
        energy_per_cell_pj: f64::from(accesses) * params.e_adc_conv_pj,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostReport {
    pub rows: Vec<CostRow>,
    pub total_time_us: f64,
    /// Sum of the per-cell total power column.
    pub total_power_uw: f64,
    pub total_energy_uj: f64,
    /// Reported separately; not part of `total_energy_uj`.
    pub adc: AdcSchedule,
    /// Energy-delay product, µJ·µs.
    pub edp: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SequenceTotals {
    pub frames: u64,
    pub time_s: f64,
    pub energy_j: f64,
}

impl CostReport {
    pub fn sequence(&self, frames: u64) -> SequenceTotals {
        SequenceTotals {
            frames,
            time_s: self.total_time_us * 1e-6 * frames as f64,
            energy_j: self.total_energy_uj * 1e-6 * frames as f64,
        }
    }
}

pub fn frame_report(pipeline: &[PipelineStep], params: &CostParams) -> Result<CostReport> {
    params.validate()?;
    if pipeline.is_empty() {
        return Err(Error::EmptyInput("pipeline"));
    }
    let mut rows = Vec::with_capacity(pipeline.len());
    let mut readouts = 0;
    for step in pipeline {
        if step.name.is_empty() || step.name.contains([',', '"', '\n']) {
            return Err(Error::InvalidConfig(format!("bad step name {:?}", step.name)));
        }
        if !(step.duration_us >= 0.0 && step.duration_us.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "step '{}' has duration {}",
                step.name, step.duration_us
            )));
        }
        let ota = step.ota_power(params)?;
        if !(ota >= 0.0 && ota.is_finite()) {
            return Err(Error::InvalidConfig(format!("step '{}' has OTA power {ota}", step.name)));
        }
        let total = ota + params.p_overhead_cell;
        let cells = step.cells.unwrap_or(params.n_cells);
        rows.push(CostRow {
            name: step.name.clone(),
            duration_us: step.duration_us,
            ota_power_uw: ota,
            total_power_uw: total,
            cells,
            energy_uj: op_energy(step.duration_us, total, cells),
        });
        readouts += u32::from(step.readout);
    }
    let total_time_us: f64 = rows.iter().map(|r| r.duration_us).sum();
    let total_power_uw = rows.iter().map(|r| r.total_power_uw).sum();
    let total_energy_uj: f64 = rows.iter().map(|r| r.energy_uj).sum();
    let adc = if total_time_us > 0.0 {
        adc_schedule(readouts, total_time_us, params)?
    } else {
        AdcSchedule {
            accesses: readouts,
            frequency_hz: 0.0,
            energy_per_cell_pj: f64::from(readouts) * params.e_adc_conv_pj,
        }
    };
    Ok(CostReport {
        rows,
        total_time_us,
        total_power_uw,
        total_energy_uj,
        adc,
        edp: total_energy_uj * total_time_us,
    })
}

/// Externally measured CPU figures for one sequence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CpuFigures {
    pub energy_j: f64,
    pub delay_s: f64,
}

/// `(E_cpu * T_cpu) / (E_cenn * T_cenn)`.
pub fn edp_compare(cenn: &SequenceTotals, cpu: &CpuFigures) -> Result<f64> {
    let denom = cenn.energy_j * cenn.time_s;
    if denom == 0.0 {
        return Err(Error::ZeroDenominator("CeNN energy-delay product"));
    }
    let num = cpu.energy_j * cpu.delay_s;
    if num == 0.0 {
        return Err(Error::ZeroDenominator("CPU energy-delay product"));
    }
    Ok(num / denom)
}

/// Aligned text table: time, OTA power, total power, cells, energy.
pub fn render_text(report: &CostReport, sequence: Option<&SequenceTotals>) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<12} {:>12} {:>11} {:>12} {:>8} {:>14}",
        "Operation", "Time (us)", "OTA (uW)", "Total (uW)", "Cells", "Energy (uJ)"
    );
    for r in &report.rows {
        let _ = writeln!(
            out,
            "{:<12} {:>12.1} {:>11.2} {:>12.2} {:>8} {:>14.4}",
            r.name, r.duration_us, r.ota_power_uw, r.total_power_uw, r.cells, r.energy_uj
        );
    }
    let _ = writeln!(
        out,
        "{:<12} {:>12.1} {:>11} {:>12.2} {:>8} {:>14.4}",
        "Total/frame", report.total_time_us, "", report.total_power_uw, "", report.total_energy_uj
    );
    if let Some(s) = sequence {
        let _ = writeln!(
            out,
            "{:<12} {:>11.4}s {:>11} {:>12} {:>8} {:>13.4}J",
            format!("x{} frames", s.frames),
            s.time_s,
            "",
            "",
            "",
            s.energy_j
        );
    }
    let _ = writeln!(
        out,
        "ADC: {} accesses/frame, {:.2} kHz, {:.2} pJ/cell/frame (not in totals)",
        report.adc.accesses,
        report.adc.frequency_hz / 1e3,
        report.adc.energy_per_cell_pj
    );
    out
}

/// CSV with one line per row plus a `Total/frame` line.
pub fn render_csv(report: &CostReport) -> String {
    let mut out = String::from("operation,time_us,ota_power_uw,total_power_uw,cells,energy_uj\n");
    for r in &report.rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            r.name, r.duration_us, r.ota_power_uw, r.total_power_uw, r.cells, r.energy_uj
        );
    }
    let _ = writeln!(
        out,
        "Total/frame,{},,{},,{}",
        report.total_time_us, report.total_power_uw, report.total_energy_uj
    );
    out
}
