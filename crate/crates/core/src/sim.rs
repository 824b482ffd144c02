//! Synthetic AUV trajectory segments with analytic ground truth and a
//! DVL-style measurement error model.
//!
//! Each maneuver profile has closed-form velocity and acceleration, so the
//! ground-truth labels are exact rather than numerically differentiated.
//! The measurement model corrupts the true velocity per axis as
//! `measured = scale_factor * true + bias + noise`, with independent
//! zero-mean Gaussian noise per sample and axis.

use thiserror::Error;

use crate::rng::SeededRng;
use crate::types::{DomainError, SegmentRecord, Vec3};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("duration {duration} s at {rate} Hz does not give a positive integer sample count")]
    BadSampleCount { duration: f64, rate: f64 },
    #[error("noise_std must be finite and non-negative, got {0}")]
    BadNoiseStd(f64),
    #[error("scale_factor components must be finite and positive")]
    BadScaleFactor,
    #[error("bias components must be finite")]
    BadBias,
    #[error("non-finite parameter in maneuver profile")]
    NonFiniteProfile,
    #[error("piecewise profile must start at t = 0 with strictly increasing switch times")]
    BadPiecewiseStarts,
    #[error("piecewise switch at {start} s is not on a sample boundary at {rate} Hz")]
    SwitchOffBoundary { start: f64, rate: f64 },
    #[error(transparent)]
    Domain(#[from] DomainError),
}

/// A motion primitive with closed-form velocity and acceleration.
#[derive(Debug, Clone, PartialEq)]
pub enum BasicMotion {
    /// v(t) = v0, a(t) = 0.
    ConstantVelocity { v0: Vec3 },
    /// v(t) = v0 + accel·t, a(t) = accel.
    ConstantAcceleration { v0: Vec3, accel: Vec3 },
    /// Per axis: v(t) = v0 + A·sin(ωt + φ), a(t) = A·ω·cos(ωt + φ).
    Sinusoidal {
        v0: Vec3,
        amplitude: Vec3,
        omega: Vec3,
        phase: Vec3,
    },
}

impl BasicMotion {
    pub fn velocity(&self, t: f64) -> Vec3 {
        match self {
            Self::ConstantVelocity { v0 } => *v0,
            Self::ConstantAcceleration { v0, accel } => {
                [0, 1, 2].map(|i| v0[i] + accel[i] * t)
            }
            Self::Sinusoidal {
                v0,
                amplitude,
                omega,
                phase,
            } => [0, 1, 2].map(|i| v0[i] + amplitude[i] * (omega[i] * t + phase[i]).sin()),
        }
    }

    pub fn acceleration(&self, t: f64) -> Vec3 {
        match self {
            Self::ConstantVelocity { .. } => [0.0; 3],
            Self::ConstantAcceleration { accel, .. } => *accel,
            Self::Sinusoidal {
                amplitude,
                omega,
                phase,
                ..
            } => [0, 1, 2].map(|i| amplitude[i] * omega[i] * (omega[i] * t + phase[i]).cos()),
        }
    }

    fn params_finite(&self) -> bool {
        let all = |v: &Vec3| v.iter().all(|c| c.is_finite());
        match self {
            Self::ConstantVelocity { v0 } => all(v0),
            Self::ConstantAcceleration { v0, accel } => all(v0) && all(accel),
            Self::Sinusoidal {
                v0,
                amplitude,
                omega,
                phase,
            } => all(v0) && all(amplitude) && all(omega) && all(phase),
        }
    }
}

/// One piece of a piecewise profile, active from `start` seconds onward and
/// evaluated at local time t − start.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfilePiece {
    pub start: f64,
    pub motion: BasicMotion,
}

/// A maneuver profile over a whole segment.
///
/// For `Piecewise`, the piece active at time t is the last one with
/// start ≤ t, so at a switch sample the acceleration takes the right-limit
/// value. Switch times must fall on sample boundaries (checked against the
/// rate in [`simulate_segment`]).
#[derive(Debug, Clone, PartialEq)]
pub enum ManeuverProfile {
    Basic(BasicMotion),
    Piecewise(Vec<ProfilePiece>),
}

impl ManeuverProfile {
    pub fn constant_velocity(v0: Vec3) -> Self {
        Self::Basic(BasicMotion::ConstantVelocity { v0 })
    }

    pub fn constant_acceleration(v0: Vec3, accel: Vec3) -> Self {
        Self::Basic(BasicMotion::ConstantAcceleration { v0, accel })
    }

    pub fn sinusoidal(v0: Vec3, amplitude: Vec3, omega: Vec3, phase: Vec3) -> Self {
        Self::Basic(BasicMotion::Sinusoidal {
            v0,
            amplitude,
            omega,
            phase,
        })
    }

    pub fn piecewise(pieces: Vec<ProfilePiece>) -> Self {
        Self::Piecewise(pieces)
    }

    fn active_piece(pieces: &[ProfilePiece], t: f64) -> (&BasicMotion, f64) {
        let piece = pieces
            .iter()
            .rev()
            .find(|p| p.start <= t)
            .unwrap_or(&pieces[0]);
        (&piece.motion, t - piece.start)
    }

    pub fn velocity(&self, t: f64) -> Vec3 {
        match self {
            Self::Basic(m) => m.velocity(t),
            Self::Piecewise(pieces) => {
                let (motion, local) = Self::active_piece(pieces, t);
                motion.velocity(local)
            }
        }
    }

    pub fn acceleration(&self, t: f64) -> Vec3 {
        match self {
            Self::Basic(m) => m.acceleration(t),
            Self::Piecewise(pieces) => {
                let (motion, local) = Self::active_piece(pieces, t);
                motion.acceleration(local)
            }
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        match self {
            Self::Basic(m) => {
                if !m.params_finite() {
                    return Err(SimError::NonFiniteProfile);
                }
            }
            Self::Piecewise(pieces) => {
                if pieces.is_empty() || pieces[0].start != 0.0 {
                    return Err(SimError::BadPiecewiseStarts);
                }
                for (i, piece) in pieces.iter().enumerate() {
                    if !piece.start.is_finite() || !piece.motion.params_finite() {
                        return Err(SimError::NonFiniteProfile);
                    }
                    if i > 0 && piece.start <= pieces[i - 1].start {
                        return Err(SimError::BadPiecewiseStarts);
                    }
                }
            }
        }
        Ok(())
    }
}

/// Per-axis multiplicative, additive, and Gaussian corruption of the true
/// velocity: `measured = scale_factor ⊙ true + bias + η`,
/// η ~ N(0, noise_std²) independent per axis and per sample.
#[derive(Debug, Clone, PartialEq)]
pub struct DvlErrorModel {
    /// Noise standard deviation per axis, m/s.
    pub noise_std: f64,
    /// Additive bias, m/s.
    pub bias: Vec3,
    /// Multiplicative scale factor, unitless.
    pub scale_factor: Vec3,
}

impl Default for DvlErrorModel {
    /// The DVL's nominal behavior: unbiased, unit scale, 0.02 m/s noise.
    fn default() -> Self {
        Self::noise_only(0.02)
    }
}

impl DvlErrorModel {
    /// No corruption: measured equals true.
    pub fn none() -> Self {
        Self {
            noise_std: 0.0,
            bias: [0.0; 3],
            scale_factor: [1.0; 3],
        }
    }

    /// Gaussian noise only.
    pub fn noise_only(noise_std: f64) -> Self {
        Self {
            noise_std,
            ..Self::none()
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if !self.noise_std.is_finite() || self.noise_std < 0.0 {
            return Err(SimError::BadNoiseStd(self.noise_std));
        }
        if self.scale_factor.iter().any(|s| !s.is_finite() || *s <= 0.0) {
            return Err(SimError::BadScaleFactor);
        }
        if self.bias.iter().any(|b| !b.is_finite()) {
            return Err(SimError::BadBias);
        }
        Ok(())
    }
}

/// Generates one segment: timestamps k/rate, closed-form true velocity and
/// acceleration, and measured velocity per the error model. Identical
/// inputs (including the seed) produce a bit-identical record.
pub fn simulate_segment(
    profile: &ManeuverProfile,
    errors: &DvlErrorModel,
    duration: f64,
    rate: f64,
    seed: u64,
) -> Result<SegmentRecord, SimError> {
    profile.validate()?;
    errors.validate()?;
    if !duration.is_finite() || !rate.is_finite() || duration <= 0.0 || rate <= 0.0 {
        return Err(SimError::BadSampleCount { duration, rate });
    }
    let count_f = duration * rate;
    let count = count_f.round();
    if count < 1.0 || (count_f - count).abs() > 1e-9 * count.max(1.0) {
        return Err(SimError::BadSampleCount { duration, rate });
    }
    let count = count as usize;

    if let ManeuverProfile::Piecewise(pieces) = profile {
        for piece in pieces {
            let k = piece.start * rate;
            if (k - k.round()).abs() > 1e-9 || piece.start >= duration {
                return Err(SimError::SwitchOffBoundary {
                    start: piece.start,
                    rate,
                });
            }
        }
    }

    let mut rng = SeededRng::new(seed);
    let mut timestamps = Vec::with_capacity(count);
    let mut true_velocity = Vec::with_capacity(count);
    let mut measured_velocity = Vec::with_capacity(count);
    let mut gt_acceleration = Vec::with_capacity(count);
    for k in 0..count {
        let t = k as f64 / rate;
        let tv = profile.velocity(t);
        let mut mv = [0.0; 3];
        for axis in 0..3 {
            let eta = rng.gaussian() * errors.noise_std;
            mv[axis] = errors.scale_factor[axis] * tv[axis] + errors.bias[axis] + eta;
        }
        timestamps.push(t);
        true_velocity.push(tv);
        measured_velocity.push(mv);
        gt_acceleration.push(profile.acceleration(t));
    }

    let record = SegmentRecord {
        rate,
        duration,
        timestamps,
        true_velocity,
        measured_velocity,
        gt_acceleration,
    };
    record.validate()?;
    Ok(record)
}
