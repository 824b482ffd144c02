//! Windowing of segments into labeled examples, training-set augmentation,
//! train/validation/test assembly, and segment CSV persistence.
//!
//! Augmentation corrupts only the measured velocity; the ground-truth
//! acceleration labels are never touched. The validation set is carved out
//! of the training examples by a seeded shuffle, while test examples come
//! exclusively from test segments — segment identifiers are checked so no
//! test segment can leak into training.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::rng::SeededRng;
use crate::types::{
    window_at, AccelerationVector, DomainError, LabeledExample, SegmentRecord, Vec3,
};

/// Column order of the segment CSV schema.
pub const SEGMENT_CSV_COLUMNS: [&str; 10] = [
    "t", "vx_meas", "vy_meas", "vz_meas", "vx_true", "vy_true", "vz_true", "ax_gt", "ay_gt",
    "az_gt",
];

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("segment of length {len} is shorter than the window length {n}")]
    SegmentTooShort { len: usize, n: usize },
    #[error("invalid augmentation params: {0}")]
    BadAugmentation(String),
    #[error("segment id '{id}' appears in both train and test")]
    SplitLeakage { id: String },
    #[error("duplicate segment id '{id}'")]
    DuplicateSegmentId { id: String },
    #[error("train and test segment lists must be non-empty")]
    EmptySegments,
    #[error("validation fraction {0} must lie in [0, 1)")]
    BadValidationFraction(f64),
    #[error("{path}: {kind}")]
    Csv { path: PathBuf, kind: CsvErrorKind },
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Domain(#[from] DomainError),
}

#[derive(Debug, Error, PartialEq)]
pub enum CsvErrorKind {
    #[error("missing column '{0}' in header")]
    MissingColumn(String),
    #[error("bad header: expected '{expected}', got '{got}'")]
    BadHeader { expected: String, got: String },
    #[error("missing header row")]
    MissingHeader,
    #[error("line {line}: expected {expected} fields, got {got}")]
    RaggedRow {
        line: usize,
        expected: usize,
        got: usize,
    },
    #[error("line {line}, column '{column}': invalid number '{text}'")]
    BadNumber {
        line: usize,
        column: String,
        text: String,
    },
    #[error("line {line}, column '{column}': non-finite value")]
    NonFiniteField { line: usize, column: String },
    #[error("no data rows")]
    Empty,
}

/// Per-segment augmentation draws: a scale factor and bias per axis (drawn
/// once per segment from the given intervals) plus per-sample Gaussian
/// noise. Applied to the measured velocity only.
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentationParams {
    /// Per-axis [lo, hi] scale factor interval, unitless.
    pub scale_range: [[f64; 2]; 3],
    /// Per-axis [lo, hi] bias interval, m/s.
    pub bias_range: [[f64; 2]; 3],
    /// Extra Gaussian noise standard deviation, m/s.
    pub noise_std: f64,
}

impl AugmentationParams {
    /// The same interval on every axis.
    pub fn uniform(scale: [f64; 2], bias: [f64; 2], noise_std: f64) -> Self {
        Self {
            scale_range: [scale; 3],
            bias_range: [bias; 3],
            noise_std,
        }
    }

    pub fn validate(&self) -> Result<(), DatasetError> {
        for axis in 0..3 {
            let [slo, shi] = self.scale_range[axis];
            if !slo.is_finite() || !shi.is_finite() || slo <= 0.0 || shi < slo {
                return Err(DatasetError::BadAugmentation(format!(
                    "scale_range axis {axis} must be a finite positive interval"
                )));
            }
            let [blo, bhi] = self.bias_range[axis];
            if !blo.is_finite() || !bhi.is_finite() || bhi < blo {
                return Err(DatasetError::BadAugmentation(format!(
                    "bias_range axis {axis} must be a finite interval"
                )));
            }
        }
        if !self.noise_std.is_finite() || self.noise_std < 0.0 {
            return Err(DatasetError::BadAugmentation(format!(
                "noise_std must be non-negative, got {}",
                self.noise_std
            )));
        }
        Ok(())
    }
}

impl Default for AugmentationParams {
    fn default() -> Self {
        Self::uniform([0.98, 1.02], [-0.02, 0.02], 0.01)
    }
}

/// Train / validation / test example sets. No example derived from a test
/// segment ever appears in train or validation.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetSplit {
    pub train: Vec<LabeledExample>,
    pub validation: Vec<LabeledExample>,
    pub test: Vec<LabeledExample>,
}

/// One labeled example per end index from n-1 to segment length - 1: the
/// window is taken from the measured velocity, the target is the
/// ground-truth acceleration at the window's last timestamp.
pub fn build_examples(
    segment: &SegmentRecord,
    n: usize,
) -> Result<Vec<LabeledExample>, DatasetError> {
    segment.validate()?;
    if segment.len() < n {
        return Err(DatasetError::SegmentTooShort {
            len: segment.len(),
            n,
        });
    }
    let mut examples = Vec::with_capacity(segment.len() - n + 1);
    for end in (n - 1)..segment.len() {
        let window = window_at(segment, end, n)?;
        let target = AccelerationVector::new(segment.gt_acceleration[end]);
        examples.push(LabeledExample::new(window, target, segment.timestamps[end])?);
    }
    Ok(examples)
}

/// Applies `measured' = s ⊙ measured + b + η` with s and b drawn once per
/// segment (per axis) and η per sample. True velocity, labels, and
/// timestamps are copied through unchanged. Deterministic given the seed.
///
/// Draw order: scale x, y, z; bias x, y, z; then noise sample-major with
/// the axis innermost.
pub fn augment_segment(
    segment: &SegmentRecord,
    params: &AugmentationParams,
    seed: u64,
) -> Result<SegmentRecord, DatasetError> {
    params.validate()?;
    segment.validate()?;
    let mut rng = SeededRng::new(seed);
    let scale: Vec3 = [0, 1, 2].map(|i| {
        let [lo, hi] = params.scale_range[i];
        rng.uniform_in(lo, hi)
    });
    let bias: Vec3 = [0, 1, 2].map(|i| {
        let [lo, hi] = params.bias_range[i];
        rng.uniform_in(lo, hi)
    });
    let measured = segment
        .measured_velocity
        .iter()
        .map(|v| {
            let mut out = [0.0; 3];
            for axis in 0..3 {
                let eta = rng.gaussian() * params.noise_std;
                out[axis] = scale[axis] * v[axis] + bias[axis] + eta;
            }
            out
        })
        .collect();
    let out = SegmentRecord {
        measured_velocity: measured,
        ..segment.clone()
    };
    out.validate()?;
    Ok(out)
}

/// Doubles a segment corpus: for each `(id, segment)` an augmented copy
/// with id `<id>_aug` is appended, seeded per segment as `base_seed + index`.
pub fn augment_corpus(
    segments: &[(String, SegmentRecord)],
    params: &AugmentationParams,
    base_seed: u64,
) -> Result<Vec<(String, SegmentRecord)>, DatasetError> {
    let mut out = Vec::with_capacity(segments.len() * 2);
    out.extend(segments.iter().cloned());
    for (i, (id, segment)) in segments.iter().enumerate() {
        let augmented = augment_segment(segment, params, base_seed + i as u64)?;
        out.push((format!("{id}_aug"), augmented));
    }
    Ok(out)
}

/// Builds windows for every segment and assembles the split. Validation
/// examples are selected from the training examples by a seeded shuffle
/// (count = round(validation_fraction * total)); test examples come only
/// from the test segments. Overlapping segment ids are rejected.
pub fn assemble_split(
    train_segments: &[(String, SegmentRecord)],
    test_segments: &[(String, SegmentRecord)],
    n: usize,
    validation_fraction: f64,
    seed: u64,
) -> Result<DatasetSplit, DatasetError> {
    if train_segments.is_empty() || test_segments.is_empty() {
        return Err(DatasetError::EmptySegments);
    }
    if !(0.0..1.0).contains(&validation_fraction) {
        return Err(DatasetError::BadValidationFraction(validation_fraction));
    }
    let mut seen = HashSet::new();
    for (id, _) in train_segments.iter().chain(test_segments) {
        if !seen.insert(id.as_str()) {
            if train_segments.iter().any(|(t, _)| t == id)
                && test_segments.iter().any(|(t, _)| t == id)
            {
                return Err(DatasetError::SplitLeakage { id: id.clone() });
            }
            return Err(DatasetError::DuplicateSegmentId { id: id.clone() });
        }
    }

    let mut pool = Vec::new();
    for (_, segment) in train_segments {
        pool.extend(build_examples(segment, n)?);
    }
    let mut test = Vec::new();
    for (_, segment) in test_segments {
        test.extend(build_examples(segment, n)?);
    }

    let val_count = (validation_fraction * pool.len() as f64).round() as usize;
    let mut indices: Vec<usize> = (0..pool.len()).collect();
    SeededRng::new(seed).shuffle(&mut indices);
    let selected: HashSet<usize> = indices[..val_count].iter().copied().collect();

    let mut train = Vec::with_capacity(pool.len() - val_count);
    let mut validation = Vec::with_capacity(val_count);
    for (i, example) in pool.into_iter().enumerate() {
        if selected.contains(&i) {
            validation.push(example);
        } else {
            train.push(example);
        }
    }
    Ok(DatasetSplit {
        train,
        validation,
        test,
    })
}

fn fmt_f64(value: f64) -> String {
    format!("{value}")
}

/// Serializes a segment to the CSV schema, with structural `#` comments
/// (format version, rate, duration) and optional free-form provenance
/// comment lines. Floats are written in shortest round-trip form, so a
/// reload reproduces every bit.
pub fn write_segment_csv_with_provenance(
    segment: &SegmentRecord,
    path: &Path,
    provenance: &[String],
) -> Result<(), DatasetError> {
    segment.validate()?;
    let mut out = String::new();
    out.push_str("# dvlaccel segment v1\n");
    let _ = writeln!(out, "# rate_hz {}", fmt_f64(segment.rate));
    let _ = writeln!(out, "# duration_s {}", fmt_f64(segment.duration));
    for line in provenance {
        let _ = writeln!(out, "# {line}");
    }
    out.push_str(&SEGMENT_CSV_COLUMNS.join(","));
    out.push('\n');
    for k in 0..segment.len() {
        let t = segment.timestamps[k];
        let m = segment.measured_velocity[k];
        let v = segment.true_velocity[k];
        let a = segment.gt_acceleration[k];
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            fmt_f64(t),
            fmt_f64(m[0]),
            fmt_f64(m[1]),
            fmt_f64(m[2]),
            fmt_f64(v[0]),
            fmt_f64(v[1]),
            fmt_f64(v[2]),
            fmt_f64(a[0]),
            fmt_f64(a[1]),
            fmt_f64(a[2])
        );
    }
    std::fs::write(path, out).map_err(|source| DatasetError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn write_segment_csv(segment: &SegmentRecord, path: &Path) -> Result<(), DatasetError> {
    write_segment_csv_with_provenance(segment, path, &[])
}

/// Parses a segment CSV. Accepts LF or CRLF line endings; `#` comment lines
/// may appear anywhere and are skipped, except that `# rate_hz` and
/// `# duration_s` are honored when present (the writer always emits them;
/// without them the rate is derived from the first two timestamps).
pub fn read_segment_csv(path: &Path) -> Result<SegmentRecord, DatasetError> {
    let text = std::fs::read_to_string(path).map_err(|source| DatasetError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_segment_csv(&text).map_err(|kind| DatasetError::Csv {
        path: path.to_path_buf(),
        kind,
    })
}

fn parse_segment_csv(text: &str) -> Result<SegmentRecord, CsvErrorKind> {
    let mut rate: Option<f64> = None;
    let mut duration: Option<f64> = None;
    let mut header_seen = false;
    let mut timestamps = Vec::new();
    let mut measured = Vec::new();
    let mut true_v = Vec::new();
    let mut gt_a = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.strip_suffix('\r').unwrap_or(raw);
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            let mut parts = comment.split_whitespace();
            match parts.next() {
                Some("rate_hz") => {
                    if let Some(v) = parts.next().and_then(|s| s.parse().ok()) {
                        rate = Some(v);
                    }
                }
                Some("duration_s") => {
                    if let Some(v) = parts.next().and_then(|s| s.parse().ok()) {
                        duration = Some(v);
                    }
                }
                _ => {}
            }
            continue;
        }
        if !header_seen {
            check_header(line)?;
            header_seen = true;
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != SEGMENT_CSV_COLUMNS.len() {
            return Err(CsvErrorKind::RaggedRow {
                line: line_no,
                expected: SEGMENT_CSV_COLUMNS.len(),
                got: fields.len(),
            });
        }
        let mut values = [0.0f64; 10];
        for (col, (field, name)) in fields.iter().zip(SEGMENT_CSV_COLUMNS).enumerate() {
            let parsed: f64 = field
                .trim()
                .parse()
                .map_err(|_| CsvErrorKind::BadNumber {
                    line: line_no,
                    column: name.to_string(),
                    text: field.to_string(),
                })?;
            if !parsed.is_finite() {
                return Err(CsvErrorKind::NonFiniteField {
                    line: line_no,
                    column: name.to_string(),
                });
            }
            values[col] = parsed;
        }
        timestamps.push(values[0]);
        measured.push([values[1], values[2], values[3]]);
        true_v.push([values[4], values[5], values[6]]);
        gt_a.push([values[7], values[8], values[9]]);
    }

    if !header_seen {
        return Err(CsvErrorKind::MissingHeader);
    }
    if timestamps.is_empty() {
        return Err(CsvErrorKind::Empty);
    }
    let rate = match rate {
        Some(r) => r,
        None => {
            if timestamps.len() < 2 {
                return Err(CsvErrorKind::Empty);
            }
            1.0 / (timestamps[1] - timestamps[0])
        }
    };
    let duration = duration.unwrap_or(timestamps.len() as f64 / rate);
    Ok(SegmentRecord {
        rate,
        duration,
        timestamps,
        true_velocity: true_v,
        measured_velocity: measured,
        gt_acceleration: gt_a,
    })
}

fn check_header(line: &str) -> Result<(), CsvErrorKind> {
    let got: Vec<&str> = line.split(',').map(str::trim).collect();
    for expected in SEGMENT_CSV_COLUMNS {
        if !got.contains(&expected) {
            return Err(CsvErrorKind::MissingColumn(expected.to_string()));
        }
    }
    if got != SEGMENT_CSV_COLUMNS {
        return Err(CsvErrorKind::BadHeader {
            expected: SEGMENT_CSV_COLUMNS.join(","),
            got: line.to_string(),
        });
    }
    Ok(())
}
