//! Canonical templates for every operation of the tracking pipeline.
//!
//! The numeric entries are this crate's own choices. Each one is pinned by an
//! image-processing oracle in the tests.
//! Binary templates are bistable: with the piecewise-linear output every cell
//! ends in a saturated region whose drive keeps it there, which is what
//! [`run_until_settled`](crate::solver::run_until_settled) detects.
//!
//! | name       | A                          | B            | z     |
//! |------------|----------------------------|--------------|-------|
//! | diffusion  | isotropic or directional   | 0            | 0     |
//! | SUB        | center 1                   | center -1    | 0     |
//! | THRES      | center 2                   | 0            | -(t+ε)|
//! | LOGAND     | center 2                   | center 2     | -2    |
//! | SHADOWL/D  | center 2, source side 2    | 0            | 2     |
//! | DILATION   | center 2                   | all ones     | 9     |
//! | RECALL     | center 2, neighbors 1      | center 9     | -1    |

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::template::Template;

/// Bias offset that resolves an exact tie `x0 == t` in THRES to background.
pub const THRESHOLD_TIE_BIAS: f64 = 1e-9;

pub const SUB_DURATION_NS: f64 = 1.0;
pub const THRESHOLD_DURATION_NS: f64 = 60.0;
pub const LOGAND_DURATION_NS: f64 = 20.0;
pub const DILATION_DURATION_NS: f64 = 20.0;
pub const POOL_DIFFUSION_NS: f64 = 25.0;

pub const MIN_DOG_STEPS: u32 = 10;
pub const MAX_DOG_STEPS: u32 = 75;

/// Orientation of a directional diffusion, in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u16", into = "u16")]
pub enum Orientation {
    Deg0,
    Deg45,
    Deg90,
    Deg135,
}

impl Orientation {
    pub const ALL: [Orientation; 4] = [
        Orientation::Deg0,
        Orientation::Deg45,
        Orientation::Deg90,
        Orientation::Deg135,
    ];

    pub fn degrees(self) -> u16 {
        match self {
            Orientation::Deg0 => 0,
            Orientation::Deg45 => 45,
            Orientation::Deg90 => 90,
            Orientation::Deg135 => 135,
        }
    }

    /// The two neighbor offsets `(dr, dc)` lying along this axis.
    /// Rows grow downward, so 45° points up and to the right.
    fn axis(self) -> [(isize, isize); 2] {
        match self {
            Orientation::Deg0 => [(0, -1), (0, 1)],
            Orientation::Deg45 => [(-1, 1), (1, -1)],
            Orientation::Deg90 => [(-1, 0), (1, 0)],
            Orientation::Deg135 => [(-1, -1), (1, 1)],
        }
    }
}

impl TryFrom<u16> for Orientation {
    type Error = String;

    fn try_from(value: u16) -> std::result::Result<Self, Self::Error> {
        match value {
            0 => Ok(Orientation::Deg0),
            45 => Ok(Orientation::Deg45),
            90 => Ok(Orientation::Deg90),
            135 => Ok(Orientation::Deg135),
            other => Err(format!("unsupported orientation {other}°")),
        }
    }
}

impl From<Orientation> for u16 {
    fn from(o: Orientation) -> u16 {
        o.degrees()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "angle_deg")]
pub enum DiffusionKind {
    Isotropic,
    Directional(Orientation),
}

impl DiffusionKind {
    /// The five kinds in kernel-enumeration order.
    pub const ALL: [DiffusionKind; 5] = [
        DiffusionKind::Isotropic,
        DiffusionKind::Directional(Orientation::Deg0),
        DiffusionKind::Directional(Orientation::Deg45),
        DiffusionKind::Directional(Orientation::Deg90),
        DiffusionKind::Directional(Orientation::Deg135),
    ];
}

impl fmt::Display for DiffusionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DiffusionKind::Isotropic => write!(f, "iso"),
            DiffusionKind::Directional(o) => write!(f, "dir{}", o.degrees()),
        }
    }
}

/// Difference-of-Gaussians kernel: two diffusions of the same image for
/// different step counts (1 step = 1 ns), followed by a subtraction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DogKernel {
    pub kind: DiffusionKind,
    pub steps1: u32,
    pub steps2: u32,
}

impl DogKernel {
    pub fn new(kind: DiffusionKind, steps1: u32, steps2: u32) -> Result<Self> {
        let k = Self {
            kind,
            steps1,
            steps2,
        };
        k.validate()?;
        Ok(k)
    }

    pub fn validate(&self) -> Result<()> {
        for s in [self.steps1, self.steps2] {
            if !(MIN_DOG_STEPS..=MAX_DOG_STEPS).contains(&s) {
                return Err(Error::InvalidConfig(format!(
                    "DoG step count {s} outside [{MIN_DOG_STEPS}, {MAX_DOG_STEPS}]"
                )));
            }
        }
        if self.steps1 == self.steps2 {
            return Err(Error::InvalidConfig(
                "DoG diffusions are identical; the response would be zero".into(),
            ));
        }
        Ok(())
    }

    pub fn diffuse1(&self) -> Template {
        diffusion(self.kind).with_duration(f64::from(self.steps1))
    }

    pub fn diffuse2(&self) -> Template {
        diffusion(self.kind).with_duration(f64::from(self.steps2))
    }
}

impl fmt::Display for DogKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}-{}", self.kind, self.steps1, self.steps2)
    }
}

const ISOTROPIC: [[f64; 3]; 3] = [[0.1, 0.15, 0.1], [0.15, 0.0, 0.15], [0.1, 0.15, 0.1]];
const AXIS_WEIGHT: f64 = 0.35;
const OFF_AXIS_WEIGHT: f64 = 0.05;
const ZERO: [[f64; 3]; 3] = [[0.0; 3]; 3];

/// Mass-conserving 3x3 diffusion. In the linear region the dynamics reduce
/// to `dx/dt = Σ w_k (x_k - x)` with `Σ w_k = 1`, so the center feedback
/// weight is `1 - Σ w_k = 0`.
pub fn diffusion(kind: DiffusionKind) -> Template {
    let a = match kind {
        DiffusionKind::Isotropic => ISOTROPIC,
        DiffusionKind::Directional(o) => {
            let mut a = [[OFF_AXIS_WEIGHT; 3]; 3];
            a[1][1] = 0.0;
            for (dr, dc) in o.axis() {
                a[(dr + 1) as usize][(dc + 1) as usize] = AXIS_WEIGHT;
            }
            a
        }
    };
    let name = match kind {
        DiffusionKind::Isotropic => "DIFFUS".to_string(),
        DiffusionKind::Directional(o) => format!("DIFFUS{}", o.degrees()),
    };
    Template::from_3x3(name, a, ZERO, 0.0, 0.0)
}

/// State holds the minuend, input holds the subtrahend. In the linear region
/// `dx/dt = -u`, so after exactly one time constant `x = x0 - u`; once the
/// state leaves `[-1, 1]` the drive keeps it outside, so the output is the
/// clamped difference.
pub fn subtraction() -> Template {
    let mut a = ZERO;
    a[1][1] = 1.0;
    let mut b = ZERO;
    b[1][1] = -1.0;
    Template::from_3x3("SUB", a, b, 0.0, SUB_DURATION_NS)
}

/// Bistable threshold at `level`: `+1` where `x0 > level`, else `-1`.
pub fn threshold(level: f64) -> Template {
    let mut a = ZERO;
    a[1][1] = 2.0;
    Template::from_3x3(
        "THRES",
        a,
        ZERO,
        -(level + THRESHOLD_TIE_BIAS),
        THRESHOLD_DURATION_NS,
    )
}

/// Host-side evaluation of the settled THRES decision for one pixel.
pub fn exceeds_threshold(value: f64, level: f64) -> bool {
    value > level + THRESHOLD_TIE_BIAS
}

/// Binary AND of state and input.
pub fn logic_and() -> Template {
    let mut a = ZERO;
    a[1][1] = 2.0;
    let mut b = ZERO;
    b[1][1] = 2.0;
    Template::from_3x3("LOGAND", a, b, -2.0, LOGAND_DURATION_NS)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShadowDirection {
    /// Objects cast shadows toward column 0.
    Left,
    /// Objects cast shadows toward the bottom row.
    Down,
}

/// Propagating shadow: a white cell turns black when its neighbor on the
/// source side is black. Duration is sized by the caller from the grid
/// extent.
pub fn shadow(direction: ShadowDirection) -> Template {
    let mut a = ZERO;
    a[1][1] = 2.0;
    let name = match direction {
        ShadowDirection::Left => {
            a[1][2] = 2.0;
            "SHADOWL"
        }
        ShadowDirection::Down => {
            a[0][1] = 2.0;
            "SHADOWD"
        }
    };
    Template::from_3x3(name, a, ZERO, 2.0, 0.0)
}

/// One step of 3x3 binary dilation: any black cell in the input
/// neighborhood turns the cell black.
pub fn dilation() -> Template {
    let mut a = ZERO;
    a[1][1] = 2.0;
    Template::from_3x3("DILATION", a, [[1.0; 3]; 3], 9.0, DILATION_DURATION_NS)
}

/// Morphological reconstruction: black markers in the state spread through
/// 8-connected black cells of the input. Markers outside the input must be
/// removed first (see [`crate::ops::recall`]).
pub fn recall() -> Template {
    let mut a = [[1.0; 3]; 3];
    a[1][1] = 2.0;
    let mut b = ZERO;
    b[1][1] = 9.0;
    Template::from_3x3("RECALL", a, b, -1.0, 0.0)
}

/// Every named template of the pipeline, thresholds at level 0.
pub fn standard_templates() -> Vec<Template> {
    let mut out: Vec<Template> = DiffusionKind::ALL.iter().map(|&k| diffusion(k)).collect();
    out.extend([
        subtraction(),
        threshold(0.0),
        logic_and(),
        shadow(ShadowDirection::Left),
        shadow(ShadowDirection::Down),
        dilation(),
        recall(),
    ]);
    out
}

/// Serializes 3x3 templates as whitespace-separated lines:
/// `name a11..a33 b11..b33 z duration_ns`.
pub fn templates_to_text(templates: &[Template]) -> Result<String> {
    let mut out = String::from("# name a11 a12 a13 a21 a22 a23 a31 a32 a33 b11 .. b33 z duration_ns\n");
    for t in templates {
        if t.side() != 3 {
            return Err(Error::InvalidTemplate(format!(
                "{}: only 3x3 templates have a text form",
                t.name
            )));
        }
        if t.name.is_empty() || t.name.chars().any(char::is_whitespace) || t.name.starts_with('#') {
            return Err(Error::InvalidTemplate(format!(
                "`{}` is not a valid template name",
                t.name
            )));
        }
        out.push_str(&t.name);
        for v in t.a().iter().chain(t.b()).chain([&t.z, &t.duration_ns]) {
            out.push(' ');
            out.push_str(&v.to_string());
        }
        out.push('\n');
    }
    Ok(out)
}

/// Parses the format written by [`templates_to_text`]. Blank lines and lines
/// starting with `#` are ignored.
pub fn templates_from_text(text: &str) -> Result<Vec<Template>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 21 {
            return Err(Error::Parse {
                line: line_no,
                message: format!("expected 21 fields, found {}", fields.len()),
            });
        }
        let nums = fields[1..]
            .iter()
            .map(|f| {
                f.parse::<f64>().map_err(|e| Error::Parse {
                    line: line_no,
                    message: format!("`{f}`: {e}"),
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        let t = Template::new(
            fields[0],
            nums[0..9].to_vec(),
            nums[9..18].to_vec(),
            nums[18],
            nums[19],
        )
        .map_err(|e| Error::Parse {
            line: line_no,
            message: e.to_string(),
        })?;
        out.push(t);
    }
    Ok(out)
}
