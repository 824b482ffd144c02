//! Side-by-side evaluation of the network and the least-squares baseline
//! on identical windows, and the resulting comparison report.

use std::collections::hash_map::DefaultHasher;
use std::hash::Hasher;
use std::path::Path;

use dvlaccel::least_squares::estimate_acceleration;
use dvlaccel::nn::{model_forward, ModelCheckpoint};
use dvlaccel::types::{LabeledExample, VelocityWindow};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Stage};

/// Test-set RMSE of both estimators, per axis and over the 3-axis residual
/// norm, plus the relative improvement of the network over the baseline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    /// Network RMSE, m/s².
    pub dl_rmse: f64,
    /// Least-squares baseline RMSE, m/s².
    pub ls_rmse: f64,
    /// 100 · (ls_rmse − dl_rmse) / ls_rmse.
    pub improvement_pct: f64,
    pub dl_axis_rmse: [f64; 3],
    pub ls_axis_rmse: [f64; 3],
    pub test_set: String,
}

pub fn improvement_pct(ls_rmse: f64, dl_rmse: f64) -> f64 {
    100.0 * (ls_rmse - dl_rmse) / ls_rmse
}

fn hash_window(hasher: &mut DefaultHasher, window: &VelocityWindow) {
    for sample in window.samples() {
        hasher.write_u64(sample.t.to_bits());
        for axis in 0..3 {
            hasher.write_u64(sample.v[axis].to_bits());
        }
    }
}

/// Runs both estimators over every test example. Each consumer hashes the
/// window stream it actually saw; the hashes must agree, guaranteeing the
/// comparison fed byte-identical windows to both.
pub fn compare(
    test: &[LabeledExample],
    checkpoint: &ModelCheckpoint,
) -> Result<ComparisonReport, CliError> {
    if test.is_empty() {
        return Err(CliError::data(Stage::Compare, "empty test set"));
    }
    let mut dl_hasher = DefaultHasher::new();
    let mut ls_hasher = DefaultHasher::new();
    let mut dl_axis_sq = [0.0f64; 3];
    let mut ls_axis_sq = [0.0f64; 3];
    for example in test {
        hash_window(&mut dl_hasher, &example.window);
        let dl = model_forward(&example.window, checkpoint)
            .map_err(|e| CliError::from_nn(Stage::Compare, e))?;

        hash_window(&mut ls_hasher, &example.window);
        let ls = estimate_acceleration(&example.window)
            .map_err(|e| CliError::from_ls(Stage::Compare, e))?;

        for axis in 0..3 {
            dl_axis_sq[axis] += (dl.a[axis] - example.target.a[axis]).powi(2);
            ls_axis_sq[axis] += (ls.a[axis] - example.target.a[axis]).powi(2);
        }
    }
    assert_eq!(
        dl_hasher.finish(),
        ls_hasher.finish(),
        "estimators saw different window streams"
    );

    let n = test.len() as f64;
    let dl_axis_rmse = [0, 1, 2].map(|k| (dl_axis_sq[k] / n).sqrt());
    let ls_axis_rmse = [0, 1, 2].map(|k| (ls_axis_sq[k] / n).sqrt());
    let dl_rmse = (dl_axis_sq.iter().sum::<f64>() / n).sqrt();
    let ls_rmse = (ls_axis_sq.iter().sum::<f64>() / n).sqrt();
    let report = ComparisonReport {
        dl_rmse,
        ls_rmse,
        improvement_pct: improvement_pct(ls_rmse, dl_rmse),
        dl_axis_rmse,
        ls_axis_rmse,
        test_set: format!(
            "{} windows of length {}",
            test.len(),
            checkpoint.window_len
        ),
    };
    if !report.dl_rmse.is_finite() || !report.ls_rmse.is_finite() {
        return Err(CliError::numerical(Stage::Compare, "non-finite RMSE"));
    }
    Ok(report)
}

impl ComparisonReport {
    /// Key/value text form.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("dl_rmse_ms2 {}\n", self.dl_rmse));
        out.push_str(&format!("ls_rmse_ms2 {}\n", self.ls_rmse));
        out.push_str(&format!("improvement_pct {}\n", self.improvement_pct));
        for (axis, name) in ["x", "y", "z"].iter().enumerate() {
            out.push_str(&format!("dl_axis_rmse_{name} {}\n", self.dl_axis_rmse[axis]));
        }
        for (axis, name) in ["x", "y", "z"].iter().enumerate() {
            out.push_str(&format!("ls_axis_rmse_{name} {}\n", self.ls_axis_rmse[axis]));
        }
        out.push_str(&format!("test_set {}\n", self.test_set));
        out
    }

    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("report serializes");
        text.push('\n');
        text
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "dl_rmse,ls_rmse,improvement_pct,\
             dl_axis_rmse_x,dl_axis_rmse_y,dl_axis_rmse_z,\
             ls_axis_rmse_x,ls_axis_rmse_y,ls_axis_rmse_z,test_set\n",
        );
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},\"{}\"\n",
            self.dl_rmse,
            self.ls_rmse,
            self.improvement_pct,
            self.dl_axis_rmse[0],
            self.dl_axis_rmse[1],
            self.dl_axis_rmse[2],
            self.ls_axis_rmse[0],
            self.ls_axis_rmse[1],
            self.ls_axis_rmse[2],
            self.test_set
        ));
        out
    }

    pub fn load_json(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::io(Stage::Compare, path, e))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::data(Stage::Compare, format!("{}: {e}", path.display())))
    }
}
