//! Shared domain types and unit conventions.
//!
//! Units are seconds, m/s, and m/s². Body-frame axes are ordered
//! x = surge, y = sway, z = heave; every operation treats the axes
//! symmetrically, so only consistency of the ordering matters. Time is
//! stored relative to segment start — the estimators only ever consume
//! timestamp differences.

use thiserror::Error;

/// A 3-vector over the body axes (surge, sway, heave).
pub type Vec3 = [f64; 3];

#[derive(Debug, Error, PartialEq)]
pub enum DomainError {
    #[error("non-finite value in {context}")]
    NonFinite { context: String },
    #[error("velocity window needs at least 2 samples, got {got}")]
    WindowTooShort { got: usize },
    #[error("timestamps must be strictly increasing (violated at sample {index})")]
    NonIncreasingTimestamps { index: usize },
    #[error("window length must be at least 2, got {n}")]
    WindowLenTooSmall { n: usize },
    #[error("insufficient history: window of length {n} cannot end at index {end_index}")]
    InsufficientHistory { end_index: usize, n: usize },
    #[error("end index {end_index} out of range for segment of length {len}")]
    EndIndexOutOfRange { end_index: usize, len: usize },
    #[error("label time {label_time} does not equal the window's last timestamp {window_end}")]
    LabelTimeMismatch { label_time: f64, window_end: f64 },
    #[error("segment series lengths differ: {detail}")]
    SeriesLengthMismatch { detail: String },
    #[error("segment length {len} does not equal duration x rate = {expected}")]
    BadSampleCount { len: usize, expected: f64 },
    #[error("segment timestamps are not spaced 1/rate apart (sample {index})")]
    BadTimestampSpacing { index: usize },
}

/// One timestamped 3-axis DVL velocity reading.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BodyVelocitySample {
    /// Time in seconds, relative to segment start.
    pub t: f64,
    /// Body-frame velocity in m/s.
    pub v: Vec3,
}

impl BodyVelocitySample {
    pub fn new(t: f64, v: Vec3) -> Result<Self, DomainError> {
        if !t.is_finite() {
            return Err(DomainError::NonFinite {
                context: "sample timestamp".into(),
            });
        }
        if v.iter().any(|c| !c.is_finite()) {
            return Err(DomainError::NonFinite {
                context: format!("velocity at t = {t}"),
            });
        }
        Ok(Self { t, v })
    }
}

/// An ordered window of N velocity samples with strictly increasing
/// timestamps; the common input of both estimators.
///
/// The window houses the 3×N network input matrix: [`Self::stacked_series`]
/// lays the three axis series out row-major (the full x series, then y,
/// then z).
#[derive(Debug, Clone, PartialEq)]
pub struct VelocityWindow {
    samples: Vec<BodyVelocitySample>,
}

impl VelocityWindow {
    pub fn new(samples: Vec<BodyVelocitySample>) -> Result<Self, DomainError> {
        if samples.len() < 2 {
            return Err(DomainError::WindowTooShort { got: samples.len() });
        }
        for i in 1..samples.len() {
            if !(samples[i].t > samples[i - 1].t) {
                return Err(DomainError::NonIncreasingTimestamps { index: i });
            }
        }
        Ok(Self { samples })
    }

    pub fn samples(&self) -> &[BodyVelocitySample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        false // invariant: at least 2 samples
    }

    pub fn first(&self) -> &BodyVelocitySample {
        &self.samples[0]
    }

    pub fn last(&self) -> &BodyVelocitySample {
        &self.samples[self.samples.len() - 1]
    }

    /// The 3×N input matrix, row-major: x series, then y, then z.
    pub fn stacked_series(&self) -> Vec<f64> {
        let n = self.samples.len();
        let mut out = Vec::with_capacity(3 * n);
        for axis in 0..3 {
            out.extend(self.samples.iter().map(|s| s.v[axis]));
        }
        out
    }
}

/// Body-frame acceleration in m/s².
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AccelerationVector {
    pub a: Vec3,
}

impl AccelerationVector {
    pub fn new(a: Vec3) -> Self {
        Self { a }
    }

    pub fn zero() -> Self {
        Self { a: [0.0; 3] }
    }
}

/// A training/evaluation pair: an input window and the ground-truth
/// acceleration at the window's final timestamp.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledExample {
    pub window: VelocityWindow,
    pub target: AccelerationVector,
    /// Equals the timestamp of the last sample in `window`.
    pub label_time: f64,
}

impl LabeledExample {
    pub fn new(
        window: VelocityWindow,
        target: AccelerationVector,
        label_time: f64,
    ) -> Result<Self, DomainError> {
        let window_end = window.last().t;
        if label_time != window_end {
            return Err(DomainError::LabelTimeMismatch {
                label_time,
                window_end,
            });
        }
        Ok(Self {
            window,
            target,
            label_time,
        })
    }
}

/// One fixed-rate trajectory segment: true velocity, DVL-corrupted measured
/// velocity, and ground-truth acceleration, all sampled at `rate` Hz for
/// `duration` seconds.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentRecord {
    /// Sample rate in Hz.
    pub rate: f64,
    /// Segment duration in seconds; `duration * rate` is the sample count.
    pub duration: f64,
    /// Timestamps k/rate for k = 0..len-1, seconds.
    pub timestamps: Vec<f64>,
    /// Uncorrupted velocity, m/s.
    pub true_velocity: Vec<Vec3>,
    /// Velocity after the measurement error model, m/s.
    pub measured_velocity: Vec<Vec3>,
    /// Analytic acceleration labels, m/s².
    pub gt_acceleration: Vec<Vec3>,
}

impl SegmentRecord {
    pub fn len(&self) -> usize {
        self.timestamps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.timestamps.is_empty()
    }

    /// Checks the structural invariants: equal series lengths, a sample
    /// count of exactly `duration * rate`, timestamps at k/rate, and finite
    /// values throughout.
    pub fn validate(&self) -> Result<(), DomainError> {
        let len = self.timestamps.len();
        if self.true_velocity.len() != len
            || self.measured_velocity.len() != len
            || self.gt_acceleration.len() != len
        {
            return Err(DomainError::SeriesLengthMismatch {
                detail: format!(
                    "timestamps {}, true_velocity {}, measured_velocity {}, gt_acceleration {}",
                    len,
                    self.true_velocity.len(),
                    self.measured_velocity.len(),
                    self.gt_acceleration.len()
                ),
            });
        }
        if !self.rate.is_finite() || !self.duration.is_finite() || self.rate <= 0.0 {
            return Err(DomainError::NonFinite {
                context: "segment rate/duration".into(),
            });
        }
        let expected = self.duration * self.rate;
        if len == 0 || (expected - len as f64).abs() > 1e-9 * expected.max(1.0) {
            return Err(DomainError::BadSampleCount { len, expected });
        }
        for (k, &t) in self.timestamps.iter().enumerate() {
            if t != k as f64 / self.rate {
                return Err(DomainError::BadTimestampSpacing { index: k });
            }
        }
        for (name, series) in [
            ("true_velocity", &self.true_velocity),
            ("measured_velocity", &self.measured_velocity),
            ("gt_acceleration", &self.gt_acceleration),
        ] {
            for (k, v) in series.iter().enumerate() {
                if v.iter().any(|c| !c.is_finite()) {
                    return Err(DomainError::NonFinite {
                        context: format!("{name} at sample {k}"),
                    });
                }
            }
        }
        Ok(())
    }
}

/// The `n` measured-velocity samples of `segment` ending at `end_index`
/// (inclusive), with their timestamps.
pub fn window_at(
    segment: &SegmentRecord,
    end_index: usize,
    n: usize,
) -> Result<VelocityWindow, DomainError> {
    if n < 2 {
        return Err(DomainError::WindowLenTooSmall { n });
    }
    if end_index >= segment.len() {
        return Err(DomainError::EndIndexOutOfRange {
            end_index,
            len: segment.len(),
        });
    }
    if end_index + 1 < n {
        return Err(DomainError::InsufficientHistory { end_index, n });
    }
    let start = end_index + 1 - n;
    let samples = (start..=end_index)
        .map(|k| BodyVelocitySample::new(segment.timestamps[k], segment.measured_velocity[k]))
        .collect::<Result<Vec<_>, _>>()?;
    VelocityWindow::new(samples)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn segment(len: usize) -> SegmentRecord {
        SegmentRecord {
            rate: 1.0,
            duration: len as f64,
            timestamps: (0..len).map(|k| k as f64).collect(),
            true_velocity: vec![[1.0, 0.0, 0.0]; len],
            measured_velocity: (0..len).map(|k| [k as f64 * 0.1, 0.0, 0.0]).collect(),
            gt_acceleration: vec![[0.0; 3]; len],
        }
    }

    #[test]
    fn window_at_first_full_window() {
        let seg = segment(400);
        let w = window_at(&seg, 11, 12).unwrap();
        assert_eq!(w.len(), 12);
        assert_eq!(w.first().t, 0.0);
        assert_eq!(w.last().t, 11.0);
        // samples 0..11 inclusive, in order
        for (i, s) in w.samples().iter().enumerate() {
            assert_eq!(s.v[0], i as f64 * 0.1);
        }
    }

    #[test]
    fn window_at_insufficient_history() {
        let seg = segment(400);
        assert_eq!(
            window_at(&seg, 10, 12),
            Err(DomainError::InsufficientHistory {
                end_index: 10,
                n: 12
            })
        );
    }

    #[test]
    fn window_at_last_window_timestamps() {
        let seg = segment(400);
        let w = window_at(&seg, 399, 12).unwrap();
        let ts: Vec<f64> = w.samples().iter().map(|s| s.t).collect();
        let expected: Vec<f64> = (388..=399).map(|k| k as f64).collect();
        assert_eq!(ts, expected);
    }

    #[test]
    fn window_at_rejects_bad_args() {
        let seg = segment(20);
        assert!(matches!(
            window_at(&seg, 5, 1),
            Err(DomainError::WindowLenTooSmall { n: 1 })
        ));
        assert!(matches!(
            window_at(&seg, 20, 12),
            Err(DomainError::EndIndexOutOfRange { .. })
        ));
    }

    #[test]
    fn window_at_is_pure() {
        let seg = segment(50);
        assert_eq!(window_at(&seg, 30, 12), window_at(&seg, 30, 12));
    }

    #[test]
    fn window_rejects_non_increasing_timestamps() {
        let s0 = BodyVelocitySample::new(0.0, [0.0; 3]).unwrap();
        let s1 = BodyVelocitySample::new(0.0, [0.0; 3]).unwrap();
        assert_eq!(
            VelocityWindow::new(vec![s0, s1]),
            Err(DomainError::NonIncreasingTimestamps { index: 1 })
        );
    }

    #[test]
    fn window_rejects_single_sample() {
        let s0 = BodyVelocitySample::new(0.0, [0.0; 3]).unwrap();
        assert_eq!(
            VelocityWindow::new(vec![s0]),
            Err(DomainError::WindowTooShort { got: 1 })
        );
    }

    #[test]
    fn sample_rejects_non_finite() {
        assert!(BodyVelocitySample::new(f64::NAN, [0.0; 3]).is_err());
        assert!(BodyVelocitySample::new(0.0, [0.0, f64::INFINITY, 0.0]).is_err());
    }

    #[test]
    fn stacked_series_is_axis_major() {
        let samples = vec![
            BodyVelocitySample::new(0.0, [1.0, 10.0, 100.0]).unwrap(),
            BodyVelocitySample::new(1.0, [2.0, 20.0, 200.0]).unwrap(),
            BodyVelocitySample::new(2.0, [3.0, 30.0, 300.0]).unwrap(),
        ];
        let w = VelocityWindow::new(samples).unwrap();
        assert_eq!(
            w.stacked_series(),
            vec![1.0, 2.0, 3.0, 10.0, 20.0, 30.0, 100.0, 200.0, 300.0]
        );
    }

    #[test]
    fn label_time_must_match_window_end() {
        let seg = segment(20);
        let w = window_at(&seg, 11, 12).unwrap();
        assert!(LabeledExample::new(w.clone(), AccelerationVector::zero(), 11.0).is_ok());
        assert!(matches!(
            LabeledExample::new(w, AccelerationVector::zero(), 10.0),
            Err(DomainError::LabelTimeMismatch { .. })
        ));
    }

    #[test]
    fn segment_validate_catches_spacing() {
        let mut seg = segment(10);
        assert!(seg.validate().is_ok());
        seg.timestamps[3] = 3.5;
        assert_eq!(
            seg.validate(),
            Err(DomainError::BadTimestampSpacing { index: 3 })
        );
    }

    #[test]
    fn segment_validate_catches_length_mismatch() {
        let mut seg = segment(10);
        seg.gt_acceleration.pop();
        assert!(matches!(
            seg.validate(),
            Err(DomainError::SeriesLengthMismatch { .. })
        ));
    }
}
