use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One CeNN instruction: feedback weights `A`, feedforward weights `B`,
/// bias `z`, and a nominal run duration.
///
/// Weights are stored row-major over a `(2r+1) x (2r+1)` neighborhood with
/// the cell itself at the center.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Template {
    pub name: String,
    a: Vec<f64>,
    b: Vec<f64>,
    pub z: f64,
    pub duration_ns: f64,
}

pub const MAX_RADIUS: usize = 2;

impl Template {
    pub fn new(
        name: impl Into<String>,
        a: Vec<f64>,
        b: Vec<f64>,
        z: f64,
        duration_ns: f64,
    ) -> Result<Self> {
        let name = name.into();
        if a.len() != b.len() {
            return Err(Error::InvalidTemplate(format!(
                "{name}: A has {} entries but B has {}",
                a.len(),
                b.len()
            )));
        }
        let side = (a.len() as f64).sqrt().round() as usize;
        if side * side != a.len() || side % 2 == 0 || side < 3 {
            return Err(Error::InvalidTemplate(format!(
                "{name}: {} entries is not an odd square of side >= 3",
                a.len()
            )));
        }
        if (side - 1) / 2 > MAX_RADIUS {
            return Err(Error::InvalidTemplate(format!(
                "{name}: neighborhood radius {} exceeds {MAX_RADIUS}",
                (side - 1) / 2
            )));
        }
        if a.iter().chain(&b).any(|v| !v.is_finite()) || !z.is_finite() {
            return Err(Error::InvalidTemplate(format!("{name}: non-finite weight")));
        }
        if !(duration_ns >= 0.0) || !duration_ns.is_finite() {
            return Err(Error::InvalidTemplate(format!(
                "{name}: duration {duration_ns} ns must be finite and >= 0"
            )));
        }
        Ok(Self {
            name,
            a,
            b,
            z,
            duration_ns,
        })
    }

    /// Convenience constructor for the common 3x3 case.
    pub fn from_3x3(
        name: impl Into<String>,
        a: [[f64; 3]; 3],
        b: [[f64; 3]; 3],
        z: f64,
        duration_ns: f64,
    ) -> Self {
        let flat = |m: [[f64; 3]; 3]| m.iter().flatten().copied().collect::<Vec<_>>();
        Self::new(name, flat(a), flat(b), z, duration_ns).expect("3x3 template is well formed")
    }

    /// Side length `2r + 1`.
    pub fn side(&self) -> usize {
        (self.a.len() as f64).sqrt().round() as usize
    }

    pub fn radius(&self) -> usize {
        (self.side() - 1) / 2
    }

    pub fn a(&self) -> &[f64] {
        &self.a
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    /// Feedback weight at neighbor offset `(dr, dc)`.
    pub fn a_at(&self, dr: isize, dc: isize) -> f64 {
        self.a[self.offset_index(dr, dc)]
    }

    /// Feedforward weight at neighbor offset `(dr, dc)`.
    pub fn b_at(&self, dr: isize, dc: isize) -> f64 {
        self.b[self.offset_index(dr, dc)]
    }

    fn offset_index(&self, dr: isize, dc: isize) -> usize {
        let r = self.radius() as isize;
        assert!(dr.abs() <= r && dc.abs() <= r, "offset outside neighborhood");
        ((dr + r) as usize) * self.side() + (dc + r) as usize
    }

    pub fn with_duration(mut self, duration_ns: f64) -> Self {
        self.duration_ns = duration_ns.max(0.0);
        self
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    /// Sum of absolute template weights `Σ|a| + Σ|b|`; the bias is excluded.
    pub fn magnitude(&self) -> f64 {
        self.a.iter().chain(&self.b).map(|v| v.abs()).sum()
    }

    /// True when `B` is identically zero.
    pub fn feedforward_is_zero(&self) -> bool {
        self.b.iter().all(|&v| v == 0.0)
    }
}
