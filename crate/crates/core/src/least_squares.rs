//! Model-based acceleration estimate: per-axis linear least squares over a
//! velocity window.
//!
//! For each body axis independently, the velocity samples are fit against
//! elapsed time as v(Δ) ≈ v₀ + a·Δ with Δ_i = t_i − t₀, and the slope a is
//! returned as the acceleration estimate. The fit solves the 2×2 normal
//! system
//!
//! ```text
//! [ n    ΣΔ  ] [v₀]   [ Σv   ]
//! [ ΣΔ   ΣΔ² ] [a ] = [ ΣvΔ  ]
//! ```
//!
//! in closed form; the matrix is positive definite whenever the window
//! contains at least two distinct timestamps. There is no cross-axis
//! coupling and no higher-order term.

use thiserror::Error;

use crate::types::{AccelerationVector, VelocityWindow};

/// Determinants below `RELATIVE_SINGULARITY_FLOOR * n * ΣΔ²` are treated as
/// singular.
const RELATIVE_SINGULARITY_FLOOR: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum LsError {
    #[error("normal system is singular (determinant {det:e}, threshold {threshold:e})")]
    SingularSystem { det: f64, threshold: f64 },
    #[error("acceleration estimate is non-finite on axis {axis}")]
    NonFiniteEstimate { axis: usize },
}

/// The 2×2 normal system of the per-window affine fit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalSystem {
    /// `[[n, ΣΔ], [ΣΔ, ΣΔ²]]`.
    pub b_matrix: [[f64; 2]; 2],
    /// Per-axis right-hand side `[Σv, ΣvΔ]`.
    pub rhs: [[f64; 2]; 3],
}

impl NormalSystem {
    pub fn from_window(window: &VelocityWindow) -> Self {
        let deltas = time_deltas(window);
        let n = window.len() as f64;
        let sum_d: f64 = deltas.iter().sum();
        let sum_d2: f64 = deltas.iter().map(|d| d * d).sum();
        let mut rhs = [[0.0; 2]; 3];
        for (sample, d) in window.samples().iter().zip(&deltas) {
            for axis in 0..3 {
                rhs[axis][0] += sample.v[axis];
                rhs[axis][1] += sample.v[axis] * d;
            }
        }
        Self {
            b_matrix: [[n, sum_d], [sum_d, sum_d2]],
            rhs,
        }
    }

    pub fn determinant(&self) -> f64 {
        self.b_matrix[0][0] * self.b_matrix[1][1] - self.b_matrix[0][1] * self.b_matrix[1][0]
    }

    fn singularity_threshold(&self) -> f64 {
        RELATIVE_SINGULARITY_FLOOR * self.b_matrix[0][0] * self.b_matrix[1][1]
    }

    /// Solves the system per axis and returns the slope component.
    pub fn solve_slope(&self) -> Result<[f64; 3], LsError> {
        let det = self.determinant();
        let threshold = self.singularity_threshold();
        if !(det > threshold) {
            return Err(LsError::SingularSystem { det, threshold });
        }
        let [[n, sum_d], _] = self.b_matrix;
        let mut slope = [0.0; 3];
        for axis in 0..3 {
            let [sum_v, sum_vd] = self.rhs[axis];
            slope[axis] = (n * sum_vd - sum_d * sum_v) / det;
            if !slope[axis].is_finite() {
                return Err(LsError::NonFiniteEstimate { axis });
            }
        }
        Ok(slope)
    }
}

/// Elapsed time of each sample from the first: Δ_i = t_i − t₀.
///
/// Δ₀ is exactly 0 and the sequence is strictly increasing.
pub fn time_deltas(window: &VelocityWindow) -> Vec<f64> {
    let t0 = window.first().t;
    window.samples().iter().map(|s| s.t - t0).collect()
}

/// Least-squares acceleration estimate: the per-axis slope of the affine
/// velocity-vs-time fit over the window.
pub fn estimate_acceleration(window: &VelocityWindow) -> Result<AccelerationVector, LsError> {
    let system = NormalSystem::from_window(window);
    Ok(AccelerationVector::new(system.solve_slope()?))
}
