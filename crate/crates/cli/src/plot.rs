//! Static SVG plots: the loss curve over epochs and per-axis
//! predicted-vs-ground-truth acceleration traces for one test segment.
//! Output is plain generated markup with fixed formatting, so identical
//! inputs produce identical bytes.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use dvlaccel::training::LossHistory;

use crate::error::{CliError, Stage};
use crate::report::ComparisonReport;

const WIDTH: f64 = 640.0;
const MARGIN_LEFT: f64 = 64.0;
const MARGIN_RIGHT: f64 = 16.0;
const MARGIN_TOP: f64 = 28.0;
const MARGIN_BOTTOM: f64 = 42.0;

/// Per-axis series for the trace plot, aligned on `t`.
#[derive(Debug, Clone)]
pub struct TraceData {
    pub t: Vec<f64>,
    pub gt: [Vec<f64>; 3],
    pub dl: [Vec<f64>; 3],
    pub ls: [Vec<f64>; 3],
}

fn px(v: f64) -> String {
    format!("{v:.2}")
}

struct Axis {
    lo: f64,
    hi: f64,
    log: bool,
}

impl Axis {
    fn linear(values: impl Iterator<Item = f64>) -> Axis {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for v in values {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        if !lo.is_finite() || !hi.is_finite() {
            lo = 0.0;
            hi = 1.0;
        }
        if hi - lo < 1e-300 {
            hi = lo + 1.0;
        }
        Axis { lo, hi, log: false }
    }

    fn log_if_positive(values: impl Iterator<Item = f64> + Clone) -> Axis {
        if values.clone().all(|v| v > 0.0) {
            let mut axis = Axis::linear(values.map(|v| v.log10()));
            axis.log = true;
            axis
        } else {
            Axis::linear(values)
        }
    }

    fn project(&self, v: f64, out_lo: f64, out_hi: f64) -> f64 {
        let v = if self.log { v.log10() } else { v };
        out_lo + (v - self.lo) / (self.hi - self.lo) * (out_hi - out_lo)
    }

    fn label(&self, v: f64) -> String {
        let v = if self.log { 10f64.powf(v) } else { v };
        format!("{v:.3e}")
    }
}

fn polyline(out: &mut String, class: &str, points: &[(f64, f64)]) {
    let _ = write!(out, "<polyline class=\"{class}\" fill=\"none\" points=\"");
    for (i, (x, y)) in points.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        let _ = write!(out, "{},{}", px(*x), px(*y));
    }
    out.push_str("\"/>\n");
}

fn markers(out: &mut String, class: &str, points: &[(f64, f64)]) {
    for (x, y) in points {
        let _ = writeln!(
            out,
            "<circle class=\"{class}\" cx=\"{}\" cy=\"{}\" r=\"2.5\"/>",
            px(*x),
            px(*y)
        );
    }
}

/// Loss-vs-epoch curves, one plotted point per epoch. The validation curve
/// is omitted when the history has no validation entries. The y axis is
/// log-scaled whenever every loss is positive.
pub fn loss_svg(history: &LossHistory) -> Result<String, CliError> {
    if history.train.is_empty() {
        return Err(CliError::data(Stage::Plot, "empty loss history"));
    }
    let height = 400.0;
    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = height - MARGIN_TOP - MARGIN_BOTTOM;
    let epochs = history.train.len();

    let all = history.train.iter().chain(&history.validation).copied();
    let y_axis = Axis::log_if_positive(all);
    let x_of = |epoch: usize| {
        MARGIN_LEFT
            + if epochs == 1 {
                plot_w / 2.0
            } else {
                (epoch as f64) / (epochs as f64 - 1.0) * plot_w
            }
    };
    let y_of = |v: f64| y_axis.project(v, MARGIN_TOP + plot_h, MARGIN_TOP);

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {WIDTH} {height}\" \
         font-family=\"sans-serif\" font-size=\"11\">"
    );
    svg.push_str(
        "<style>.curve-train{stroke:#1f77b4;stroke-width:1.5}\
         .pt-train{fill:#1f77b4}\
         .curve-val{stroke:#d62728;stroke-width:1.5}\
         .pt-val{fill:#d62728}</style>\n",
    );
    let _ = writeln!(
        svg,
        "<text x=\"{}\" y=\"16\" text-anchor=\"middle\">MSE loss per epoch</text>",
        px(WIDTH / 2.0)
    );
    // frame
    let _ = writeln!(
        svg,
        "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#000\"/>",
        px(MARGIN_LEFT),
        px(MARGIN_TOP),
        px(plot_w),
        px(plot_h)
    );

    let train_points: Vec<(f64, f64)> = history
        .train
        .iter()
        .enumerate()
        .map(|(i, &v)| (x_of(i), y_of(v)))
        .collect();
    polyline(&mut svg, "curve-train", &train_points);
    markers(&mut svg, "pt-train", &train_points);
    if !history.validation.is_empty() {
        let val_points: Vec<(f64, f64)> = history
            .validation
            .iter()
            .enumerate()
            .map(|(i, &v)| (x_of(i), y_of(v)))
            .collect();
        polyline(&mut svg, "curve-val", &val_points);
        markers(&mut svg, "pt-val", &val_points);
    }

    // axis labels: first/last epoch, loss range, legend
    let _ = writeln!(
        svg,
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">1</text>",
        px(x_of(0)),
        px(MARGIN_TOP + plot_h + 16.0)
    );
    let _ = writeln!(
        svg,
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{epochs}</text>",
        px(x_of(epochs - 1)),
        px(MARGIN_TOP + plot_h + 16.0)
    );
    let _ = writeln!(
        svg,
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">epoch</text>",
        px(MARGIN_LEFT + plot_w / 2.0),
        px(MARGIN_TOP + plot_h + 32.0)
    );
    let _ = writeln!(
        svg,
        "<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{}</text>",
        px(MARGIN_LEFT - 6.0),
        px(MARGIN_TOP + 10.0),
        y_axis.label(y_axis.hi)
    );
    let _ = writeln!(
        svg,
        "<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{}</text>",
        px(MARGIN_LEFT - 6.0),
        px(MARGIN_TOP + plot_h),
        y_axis.label(y_axis.lo)
    );
    let _ = writeln!(
        svg,
        "<text x=\"{}\" y=\"{}\" fill=\"#1f77b4\">train</text>",
        px(MARGIN_LEFT + 8.0),
        px(MARGIN_TOP + 14.0)
    );
    if !history.validation.is_empty() {
        let _ = writeln!(
            svg,
            "<text x=\"{}\" y=\"{}\" fill=\"#d62728\">validation</text>",
            px(MARGIN_LEFT + 48.0),
            px(MARGIN_TOP + 14.0)
        );
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

/// Three stacked panels (surge, sway, heave): ground truth, network, and
/// least-squares acceleration over time for one test segment.
pub fn traces_svg(traces: &TraceData, report: &ComparisonReport) -> Result<String, CliError> {
    if traces.t.is_empty() {
        return Err(CliError::data(Stage::Plot, "empty trace data"));
    }
    let panel_h = 150.0;
    let gap = 30.0;
    let height = MARGIN_TOP + 3.0 * panel_h + 2.0 * gap + MARGIN_BOTTOM;
    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let x_axis = Axis::linear(traces.t.iter().copied());

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {WIDTH} {height}\" \
         font-family=\"sans-serif\" font-size=\"11\">"
    );
    svg.push_str(
        "<style>.curve-gt{stroke:#2ca02c;stroke-width:1.5}\
         .curve-dl{stroke:#1f77b4;stroke-width:1.2}\
         .curve-ls{stroke:#d62728;stroke-width:1.0;stroke-dasharray:4 3}</style>\n",
    );
    let _ = writeln!(
        svg,
        "<text x=\"{}\" y=\"16\" text-anchor=\"middle\">acceleration: ground truth vs estimators \
         (RMSE improvement {:.1}%)</text>",
        px(WIDTH / 2.0),
        report.improvement_pct
    );

    for axis in 0..3 {
        let top = MARGIN_TOP + axis as f64 * (panel_h + gap);
        let y_axis = Axis::linear(
            traces.gt[axis]
                .iter()
                .chain(&traces.dl[axis])
                .chain(&traces.ls[axis])
                .copied(),
        );
        let y_of = |v: f64| y_axis.project(v, top + panel_h, top);
        let x_of = |t: f64| x_axis.project(t, MARGIN_LEFT, MARGIN_LEFT + plot_w);
        let _ = writeln!(
            svg,
            "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#000\"/>",
            px(MARGIN_LEFT),
            px(top),
            px(plot_w),
            px(panel_h)
        );
        let _ = writeln!(
            svg,
            "<text x=\"{}\" y=\"{}\">a_{} [m/s^2]</text>",
            px(MARGIN_LEFT + 6.0),
            px(top + 14.0),
            ["x", "y", "z"][axis]
        );
        for (series, class) in [
            (&traces.gt[axis], "curve-gt"),
            (&traces.dl[axis], "curve-dl"),
            (&traces.ls[axis], "curve-ls"),
        ] {
            let points: Vec<(f64, f64)> = traces
                .t
                .iter()
                .zip(series.iter())
                .map(|(&t, &v)| (x_of(t), y_of(v)))
                .collect();
            polyline(&mut svg, class, &points);
        }
        let _ = writeln!(
            svg,
            "<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{}</text>",
            px(MARGIN_LEFT - 6.0),
            px(top + 10.0),
            y_axis.label(y_axis.hi)
        );
        let _ = writeln!(
            svg,
            "<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{}</text>",
            px(MARGIN_LEFT - 6.0),
            px(top + panel_h),
            y_axis.label(y_axis.lo)
        );
    }
    let _ = writeln!(
        svg,
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">time [s]</text>",
        px(MARGIN_LEFT + plot_w / 2.0),
        px(height - 12.0)
    );
    let legend_y = height - 12.0;
    let _ = writeln!(
        svg,
        "<text x=\"{}\" y=\"{}\" fill=\"#2ca02c\">truth</text>",
        px(MARGIN_LEFT),
        px(legend_y)
    );
    let _ = writeln!(
        svg,
        "<text x=\"{}\" y=\"{}\" fill=\"#1f77b4\">network</text>",
        px(MARGIN_LEFT + 50.0),
        px(legend_y)
    );
    let _ = writeln!(
        svg,
        "<text x=\"{}\" y=\"{}\" fill=\"#d62728\">least squares</text>",
        px(MARGIN_LEFT + 116.0),
        px(legend_y)
    );
    svg.push_str("</svg>\n");
    Ok(svg)
}

/// Writes `loss.svg` and `traces.svg` under `out_dir` and returns the
/// paths.
pub fn emit_plots(
    history: &LossHistory,
    report: &ComparisonReport,
    traces: &TraceData,
    out_dir: &Path,
) -> Result<Vec<PathBuf>, CliError> {
    std::fs::create_dir_all(out_dir).map_err(|e| CliError::io(Stage::Plot, out_dir, e))?;
    let loss_path = out_dir.join("loss.svg");
    let traces_path = out_dir.join("traces.svg");
    crate::pipeline::write_artifact(&loss_path, loss_svg(history)?.as_bytes(), Stage::Plot)?;
    crate::pipeline::write_artifact(
        &traces_path,
        traces_svg(traces, report)?.as_bytes(),
        Stage::Plot,
    )?;
    Ok(vec![loss_path, traces_path])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_report() -> ComparisonReport {
        ComparisonReport {
            dl_rmse: 0.01,
            ls_rmse: 0.02,
            improvement_pct: 50.0,
            dl_axis_rmse: [0.01; 3],
            ls_axis_rmse: [0.02; 3],
            test_set: "test".into(),
        }
    }

    #[test]
    fn loss_svg_has_one_marker_per_epoch() {
        let history = LossHistory {
            train: (0..30).map(|i| 1.0 / (1.0 + i as f64)).collect(),
            validation: (0..30).map(|i| 1.1 / (1.0 + i as f64)).collect(),
        };
        let svg = loss_svg(&history).unwrap();
        assert_eq!(svg.matches("class=\"pt-train\"").count(), 30);
        assert_eq!(svg.matches("class=\"pt-val\"").count(), 30);
    }

    #[test]
    fn empty_validation_omits_val_curve() {
        let history = LossHistory {
            train: vec![0.5, 0.4, 0.3],
            validation: vec![],
        };
        let svg = loss_svg(&history).unwrap();
        assert_eq!(svg.matches("class=\"pt-train\"").count(), 3);
        assert_eq!(svg.matches("class=\"pt-val\"").count(), 0);
        assert_eq!(svg.matches("class=\"curve-val\"").count(), 0);
    }

    #[test]
    fn svg_bytes_are_deterministic() {
        let history = LossHistory {
            train: vec![0.5, 0.25, 0.125, 0.06],
            validation: vec![0.6, 0.3, 0.2, 0.1],
        };
        assert_eq!(loss_svg(&history).unwrap(), loss_svg(&history).unwrap());
        let traces = TraceData {
            t: (0..50).map(|k| k as f64).collect(),
            gt: [0, 1, 2].map(|a| (0..50).map(|k| (k as f64 * 0.1 + a as f64).sin()).collect()),
            dl: [0, 1, 2].map(|a| (0..50).map(|k| (k as f64 * 0.1 + a as f64).cos()).collect()),
            ls: [0, 1, 2].map(|a| (0..50).map(|k| (k as f64 * 0.05 + a as f64).sin()).collect()),
        };
        let report = sample_report();
        assert_eq!(
            traces_svg(&traces, &report).unwrap(),
            traces_svg(&traces, &report).unwrap()
        );
    }

    #[test]
    fn empty_history_rejected() {
        let history = LossHistory {
            train: vec![],
            validation: vec![],
        };
        assert!(loss_svg(&history).is_err());
    }

    #[test]
    fn zero_loss_falls_back_to_linear_scale() {
        let history = LossHistory {
            train: vec![0.5, 0.0],
            validation: vec![],
        };
        let svg = loss_svg(&history).unwrap();
        assert_eq!(svg.matches("class=\"pt-train\"").count(), 2);
    }
}
