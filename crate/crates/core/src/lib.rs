//! Estimation of an AUV's body-frame acceleration vector from windows of
//! past DVL velocity measurements.
//!
//! Two estimators share the same input windows:
//!
//! * [`least_squares`] — per-axis affine fit of velocity against elapsed
//!   time; the slope is the acceleration estimate.
//! * [`nn`] — a small CNN-LSTM regressor (1D conv → LeakyReLU → max pool →
//!   two stacked LSTM layers → two fully connected layers) trained with
//!   mini-batch MSE, with forward and exact reverse-mode gradients written
//!   out by hand.
//!
//! Since real sea-trial data is not available, [`sim`] generates synthetic
//! trajectory segments with analytic ground-truth acceleration and a
//! DVL-style measurement error model, and [`dataset`] turns segments into
//! labeled sliding-window examples, applies the scale/bias/noise
//! augmentation scheme, and persists segments as CSV.
//!
//! Everything stochastic draws from [`rng::SeededRng`], so a given seed
//! reproduces a run bit for bit.

pub mod dataset;
pub mod least_squares;
pub mod nn;
pub mod rng;
pub mod sim;
pub mod training;
pub mod types;

pub use types::{
    window_at, AccelerationVector, BodyVelocitySample, LabeledExample, SegmentRecord,
    VelocityWindow,
};
