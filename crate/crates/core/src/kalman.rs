//! Constant-velocity Kalman filter on a 2-D quantity.
//!
//! The tracker runs two of these: a weak one (large process noise) on the box
//! centroid and a strong one (small process noise) on the box size.

use nalgebra::{Matrix2, Matrix2x4, Matrix4, Vector2, Vector4};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Diagonal process and measurement noise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KalmanNoise {
    pub process: f64,
    pub measurement: f64,
}

impl KalmanNoise {
    pub const WEAK: Self = Self {
        process: 1.0,
        measurement: 4.0,
    };
    pub const STRONG: Self = Self {
        process: 0.01,
        measurement: 25.0,
    };

    pub fn validate(&self) -> Result<()> {
        if !(self.process > 0.0 && self.process.is_finite() && self.measurement > 0.0 && self.measurement.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "Kalman noise must be positive, got Q={} R={}",
                self.process, self.measurement
            )));
        }
        Ok(())
    }
}

/// State `(p1, p2, v1, v2)`; measurements observe `(p1, p2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct KalmanFilter {
    x: Vector4<f64>,
    p: Matrix4<f64>,
    q: Matrix4<f64>,
    r: Matrix2<f64>,
}

fn transition() -> Matrix4<f64> {
    let mut f = Matrix4::identity();
    f[(0, 2)] = 1.0;
    f[(1, 3)] = 1.0;
    f
}

fn observation() -> Matrix2x4<f64> {
    let mut h = Matrix2x4::zeros();
    h[(0, 0)] = 1.0;
    h[(1, 1)] = 1.0;
    h
}

impl KalmanFilter {
    /// Starts at `position` with zero velocity and covariance equal to the
    /// process noise.
    pub fn new(position: [f64; 2], noise: KalmanNoise) -> Result<Self> {
        noise.validate()?;
        let q = Matrix4::identity() * noise.process;
        Ok(Self {
            x: Vector4::new(position[0], position[1], 0.0, 0.0),
            p: q,
            q,
            r: Matrix2::identity() * noise.measurement,
        })
    }

    pub fn position(&self) -> [f64; 2] {
        [self.x[0], self.x[1]]
    }

    pub fn velocity(&self) -> [f64; 2] {
        [self.x[2], self.x[3]]
    }

    pub fn covariance(&self) -> &Matrix4<f64> {
        &self.p
    }

    /// Position the next predict step would produce.
    pub fn predicted_position(&self) -> [f64; 2] {
        let x = transition() * self.x;
        [x[0], x[1]]
    }

    /// One predict step, followed by an update when a measurement exists.
    pub fn step(&self, measurement: Option<[f64; 2]>) -> Result<Self> {
        let f = transition();
        let mut next = self.clone();
        next.x = f * self.x;
        next.p = f * self.p * f.transpose() + self.q;
        if let Some(m) = measurement {
            let h = observation();
            let z = Vector2::new(m[0], m[1]);
            let s = h * next.p * h.transpose() + self.r;
            let s_inv = s.try_inverse().ok_or(Error::NotPositiveSemidefinite)?;
            let k = next.p * h.transpose() * s_inv;
            next.x += k * (z - h * next.x);
            next.p = (Matrix4::identity() - k * h) * next.p;
        }
        next.p = (next.p + next.p.transpose()) * 0.5;
        if !next.x.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidConfig("Kalman state diverged".into()));
        }
        if next.p.symmetric_eigenvalues().iter().any(|&e| !(e >= -1e-9)) {
            return Err(Error::NotPositiveSemidefinite);
        }
        Ok(next)
    }
}
