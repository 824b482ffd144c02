//! Pipeline stages and artifact layout.
//!
//! Every stage reads the prior stage's files, so the subcommands compose:
//! `simulate` writes segment CSVs, `augment` adds the augmented copies,
//! `split` writes the split manifest, `train` writes the checkpoint and the
//! loss CSV, `eval`/`compare` write the evaluation artifacts, and `plot`
//! renders the SVGs. `pipeline` chains all of it in memory and writes the
//! same files. Artifacts are written to a `.partial` path and renamed on
//! completion, so an aborted stage leaves only `.partial` leftovers. A
//! rerun with the same config is bit-identical except file timestamps.

use std::path::{Path, PathBuf};

use dvlaccel::dataset::{
    assemble_split, augment_corpus, build_examples, read_segment_csv,
    write_segment_csv_with_provenance, DatasetSplit,
};
use dvlaccel::least_squares::estimate_acceleration;
use dvlaccel::nn::{model_forward, ModelCheckpoint};
use dvlaccel::sim::simulate_segment;
use dvlaccel::training::{train, LossHistory};
use dvlaccel::types::{window_at, LabeledExample, SegmentRecord};
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::{CliError, Stage};
use crate::plot::{emit_plots, TraceData};
use crate::report::{compare, ComparisonReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum ReportFormat {
    Json,
    Csv,
}

/// File layout under the output directory.
pub struct Paths {
    out: PathBuf,
}

impl Paths {
    pub fn new(out: &Path) -> Self {
        Self { out: out.to_path_buf() }
    }

    pub fn out_dir(&self) -> &Path {
        &self.out
    }

    pub fn segments_dir(&self) -> PathBuf {
        self.out.join("segments")
    }

    pub fn segment(&self, id: &str) -> PathBuf {
        self.segments_dir().join(format!("{id}.csv"))
    }

    pub fn split_manifest(&self) -> PathBuf {
        self.out.join("split.toml")
    }

    pub fn checkpoint(&self) -> PathBuf {
        self.out.join("checkpoint.txt")
    }

    pub fn loss_csv(&self) -> PathBuf {
        self.out.join("loss.csv")
    }

    pub fn eval_txt(&self) -> PathBuf {
        self.out.join("eval.txt")
    }

    pub fn report_txt(&self) -> PathBuf {
        self.out.join("report.txt")
    }

    pub fn report_machine(&self, format: ReportFormat) -> PathBuf {
        match format {
            ReportFormat::Json => self.out.join("report.json"),
            ReportFormat::Csv => self.out.join("report.csv"),
        }
    }

    pub fn plots_dir(&self) -> PathBuf {
        self.out.join("plots")
    }
}

/// Writes to `<path>.partial`, then renames onto `path`.
pub fn write_artifact(path: &Path, bytes: &[u8], stage: Stage) -> Result<(), CliError> {
    let partial = partial_path(path);
    std::fs::write(&partial, bytes).map_err(|e| CliError::io(stage, &partial, e))?;
    std::fs::rename(&partial, path).map_err(|e| CliError::io(stage, path, e))
}

fn partial_path(path: &Path) -> PathBuf {
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(".partial");
    path.with_file_name(name)
}

fn write_segment_artifact(
    segment: &SegmentRecord,
    path: &Path,
    provenance: &[String],
    stage: Stage,
) -> Result<(), CliError> {
    let partial = partial_path(path);
    write_segment_csv_with_provenance(segment, &partial, provenance)
        .map_err(|e| CliError::from_dataset(stage, e))?;
    std::fs::rename(&partial, path).map_err(|e| CliError::io(stage, path, e))
}

fn profile_kind(profile: &dvlaccel::sim::ManeuverProfile) -> &'static str {
    use dvlaccel::sim::{BasicMotion, ManeuverProfile};
    match profile {
        ManeuverProfile::Basic(BasicMotion::ConstantVelocity { .. }) => "constant_velocity",
        ManeuverProfile::Basic(BasicMotion::ConstantAcceleration { .. }) => {
            "constant_acceleration"
        }
        ManeuverProfile::Basic(BasicMotion::Sinusoidal { .. }) => "sinusoidal",
        ManeuverProfile::Piecewise(_) => "piecewise",
    }
}

/// Simulates the configured fleet in memory: `(train, test)` segment lists.
pub fn simulate_fleet(
    config: &RunConfig,
) -> Result<(Vec<(String, SegmentRecord)>, Vec<(String, SegmentRecord)>), CliError> {
    let sim = &config.simulator;
    let errors = sim.error_model();
    let run = |specs: Vec<(String, dvlaccel::sim::ManeuverProfile, u64)>| {
        specs
            .into_iter()
            .map(|(id, profile, seed)| {
                let segment =
                    simulate_segment(&profile, &errors, sim.duration_s, sim.rate_hz, seed)
                        .map_err(|e| CliError::from_sim(Stage::Simulate, e))?;
                Ok((id, segment))
            })
            .collect::<Result<Vec<_>, CliError>>()
    };
    Ok((run(sim.train_specs()?)?, run(sim.test_specs()?)?))
}

fn segment_provenance(config: &RunConfig, id: &str, kind: &str, seed: u64) -> Vec<String> {
    let sim = &config.simulator;
    vec![
        format!("segment {id}"),
        format!("profile_kind {kind}"),
        format!("seed {seed}"),
        format!(
            "errors noise_std {} bias {} {} {} scale {} {} {}",
            sim.noise_std,
            sim.bias[0],
            sim.bias[1],
            sim.bias[2],
            sim.scale_factor[0],
            sim.scale_factor[1],
            sim.scale_factor[2]
        ),
    ]
}

/// `simulate`: writes one CSV per configured train and test segment.
pub fn cmd_simulate(config: &RunConfig) -> Result<Vec<PathBuf>, CliError> {
    let paths = Paths::new(&config.out_dir.0);
    std::fs::create_dir_all(paths.segments_dir())
        .map_err(|e| CliError::io(Stage::Simulate, &paths.segments_dir(), e))?;
    let (train, test) = simulate_fleet(config)?;
    let specs = config
        .simulator
        .train_specs()?
        .into_iter()
        .chain(config.simulator.test_specs()?);
    let mut written = Vec::new();
    for ((id, segment), (_, profile, seed)) in train.iter().chain(&test).zip(specs) {
        let path = paths.segment(id);
        write_segment_artifact(
            segment,
            &path,
            &segment_provenance(config, id, profile_kind(&profile), seed),
            Stage::Simulate,
        )?;
        written.push(path);
    }
    Ok(written)
}

fn load_segments(
    paths: &Paths,
    ids: impl IntoIterator<Item = String>,
    stage: Stage,
) -> Result<Vec<(String, SegmentRecord)>, CliError> {
    ids.into_iter()
        .map(|id| {
            let path = paths.segment(&id);
            let segment =
                read_segment_csv(&path).map_err(|e| CliError::from_dataset(stage, e))?;
            Ok((id, segment))
        })
        .collect()
}

fn base_train_ids(config: &RunConfig) -> Result<Vec<String>, CliError> {
    Ok(config
        .simulator
        .train_specs()?
        .into_iter()
        .map(|(id, _, _)| id)
        .collect())
}

fn test_ids(config: &RunConfig) -> Result<Vec<String>, CliError> {
    Ok(config
        .simulator
        .test_specs()?
        .into_iter()
        .map(|(id, _, _)| id)
        .collect())
}

/// `augment`: reads the base training segments and writes one `_aug` copy
/// per segment, doubling the training corpus.
pub fn cmd_augment(config: &RunConfig) -> Result<Vec<PathBuf>, CliError> {
    let paths = Paths::new(&config.out_dir.0);
    let base = load_segments(&paths, base_train_ids(config)?, Stage::Augment)?;
    let corpus = augment_corpus(
        &base,
        &config.dataset.augmentation.to_params(),
        config.dataset.augmentation.seed,
    )
    .map_err(|e| CliError::from_dataset(Stage::Augment, e))?;
    let mut written = Vec::new();
    for (id, segment) in corpus.iter().skip(base.len()) {
        let path = paths.segment(id);
        write_segment_artifact(
            segment,
            &path,
            &[format!("segment {id}"), "augmented copy".to_string()],
            Stage::Augment,
        )?;
        written.push(path);
    }
    Ok(written)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitManifest {
    pub window_len: usize,
    pub validation_fraction: f64,
    pub split_seed: u64,
    pub train_segments: Vec<String>,
    pub test_segments: Vec<String>,
    pub train_example_count: usize,
    pub validation_example_count: usize,
    pub test_example_count: usize,
}

fn full_train_ids(config: &RunConfig) -> Result<Vec<String>, CliError> {
    let mut ids = base_train_ids(config)?;
    let augmented: Vec<String> = ids.iter().map(|id| format!("{id}_aug")).collect();
    ids.extend(augmented);
    Ok(ids)
}

fn assemble_from(
    config: &RunConfig,
    train: &[(String, SegmentRecord)],
    test: &[(String, SegmentRecord)],
    stage: Stage,
) -> Result<DatasetSplit, CliError> {
    assemble_split(
        train,
        test,
        config.dataset.window_len,
        config.dataset.validation_fraction,
        config.dataset.split_seed,
    )
    .map_err(|e| CliError::from_dataset(stage, e))
}

/// `split`: reads the full corpus, assembles the split, and writes the
/// manifest.
pub fn cmd_split(config: &RunConfig) -> Result<SplitManifest, CliError> {
    let paths = Paths::new(&config.out_dir.0);
    let train = load_segments(&paths, full_train_ids(config)?, Stage::Split)?;
    let test = load_segments(&paths, test_ids(config)?, Stage::Split)?;
    let split = assemble_from(config, &train, &test, Stage::Split)?;
    let manifest = SplitManifest {
        window_len: config.dataset.window_len,
        validation_fraction: config.dataset.validation_fraction,
        split_seed: config.dataset.split_seed,
        train_segments: train.iter().map(|(id, _)| format!("segments/{id}.csv")).collect(),
        test_segments: test.iter().map(|(id, _)| format!("segments/{id}.csv")).collect(),
        train_example_count: split.train.len(),
        validation_example_count: split.validation.len(),
        test_example_count: split.test.len(),
    };
    let text = toml::to_string_pretty(&manifest)
        .map_err(|e| CliError::data(Stage::Split, format!("manifest serialization: {e}")))?;
    write_artifact(&paths.split_manifest(), text.as_bytes(), Stage::Split)?;
    Ok(manifest)
}

fn train_from_split(
    config: &RunConfig,
    split: &DatasetSplit,
) -> Result<(ModelCheckpoint, LossHistory), CliError> {
    let arch = config.architecture.to_architecture();
    let train_cfg = config.training.to_train_config()?;
    train(split, &arch, &train_cfg).map_err(|e| CliError::from_training(Stage::Train, e))
}

fn write_training_artifacts(
    paths: &Paths,
    checkpoint: &ModelCheckpoint,
    history: &LossHistory,
) -> Result<(), CliError> {
    write_artifact(
        &paths.checkpoint(),
        checkpoint.to_text().as_bytes(),
        Stage::Train,
    )?;
    write_artifact(
        &paths.loss_csv(),
        history.to_csv_string().as_bytes(),
        Stage::Train,
    )
}

/// `train`: rebuilds the split from the manifest's segment files (the
/// seeded split is deterministic), trains, and writes the checkpoint and
/// loss CSV.
pub fn cmd_train(config: &RunConfig) -> Result<(ModelCheckpoint, LossHistory), CliError> {
    let paths = Paths::new(&config.out_dir.0);
    let manifest_path = paths.split_manifest();
    let text = std::fs::read_to_string(&manifest_path)
        .map_err(|e| CliError::io(Stage::Train, &manifest_path, e))?;
    let manifest: SplitManifest = toml::from_str(&text)
        .map_err(|e| CliError::data(Stage::Train, format!("{}: {e}", manifest_path.display())))?;
    let strip = |entry: &String| {
        Path::new(entry)
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| entry.clone())
    };
    let train_segments = load_segments(
        &paths,
        manifest.train_segments.iter().map(strip),
        Stage::Train,
    )?;
    let test_segments =
        load_segments(&paths, manifest.test_segments.iter().map(strip), Stage::Train)?;
    let split = assemble_from(config, &train_segments, &test_segments, Stage::Train)?;
    let (checkpoint, history) = train_from_split(config, &split)?;
    write_training_artifacts(&paths, &checkpoint, &history)?;
    Ok((checkpoint, history))
}

fn load_checkpoint(paths: &Paths, stage: Stage) -> Result<ModelCheckpoint, CliError> {
    ModelCheckpoint::load(&paths.checkpoint()).map_err(|e| CliError::from_nn(stage, e))
}

fn test_examples(
    config: &RunConfig,
    paths: &Paths,
    stage: Stage,
) -> Result<(Vec<(String, SegmentRecord)>, Vec<LabeledExample>), CliError> {
    let segments = load_segments(paths, test_ids(config)?, stage)?;
    let mut examples = Vec::new();
    for (_, segment) in &segments {
        examples.extend(
            build_examples(segment, config.dataset.window_len)
                .map_err(|e| CliError::from_dataset(stage, e))?,
        );
    }
    Ok((segments, examples))
}

/// `eval`: network RMSE on the test set, written as key/value text.
pub fn cmd_eval(config: &RunConfig) -> Result<f64, CliError> {
    let paths = Paths::new(&config.out_dir.0);
    let checkpoint = load_checkpoint(&paths, Stage::Eval)?;
    let (_, examples) = test_examples(config, &paths, Stage::Eval)?;
    if examples.is_empty() {
        return Err(CliError::data(Stage::Eval, "empty test set"));
    }
    let mut axis_sq = [0.0f64; 3];
    for example in &examples {
        let pred = model_forward(&example.window, &checkpoint)
            .map_err(|e| CliError::from_nn(Stage::Eval, e))?;
        for axis in 0..3 {
            axis_sq[axis] += (pred.a[axis] - example.target.a[axis]).powi(2);
        }
    }
    let n = examples.len() as f64;
    let overall = (axis_sq.iter().sum::<f64>() / n).sqrt();
    let mut text = format!("dl_rmse_ms2 {overall}\n");
    for (axis, name) in ["x", "y", "z"].iter().enumerate() {
        text.push_str(&format!(
            "dl_axis_rmse_{name} {}\n",
            (axis_sq[axis] / n).sqrt()
        ));
    }
    text.push_str(&format!("examples {}\n", examples.len()));
    write_artifact(&paths.eval_txt(), text.as_bytes(), Stage::Eval)?;
    Ok(overall)
}

fn write_report(
    paths: &Paths,
    report: &ComparisonReport,
    format: ReportFormat,
) -> Result<(), CliError> {
    write_artifact(&paths.report_txt(), report.to_text().as_bytes(), Stage::Compare)?;
    let machine = match format {
        ReportFormat::Json => report.to_json(),
        ReportFormat::Csv => report.to_csv(),
    };
    write_artifact(
        &paths.report_machine(format),
        machine.as_bytes(),
        Stage::Compare,
    )
}

fn describe_test_set(config: &RunConfig, segments: usize, examples: usize) -> String {
    format!(
        "{segments} segments x {} s at {} Hz, {examples} windows of length {}",
        config.simulator.duration_s, config.simulator.rate_hz, config.dataset.window_len
    )
}

/// `compare`: both estimators on identical test windows; writes the
/// key/value report and the machine-readable variant.
pub fn cmd_compare(config: &RunConfig, format: ReportFormat) -> Result<ComparisonReport, CliError> {
    let paths = Paths::new(&config.out_dir.0);
    let checkpoint = load_checkpoint(&paths, Stage::Compare)?;
    let (segments, examples) = test_examples(config, &paths, Stage::Compare)?;
    let mut report = compare(&examples, &checkpoint)?;
    report.test_set = describe_test_set(config, segments.len(), examples.len());
    write_report(&paths, &report, format)?;
    Ok(report)
}

fn build_traces(
    config: &RunConfig,
    checkpoint: &ModelCheckpoint,
    segment: &SegmentRecord,
) -> Result<TraceData, CliError> {
    let n = config.dataset.window_len;
    let len = segment.len();
    let mut traces = TraceData {
        t: Vec::with_capacity(len - n + 1),
        gt: [vec![], vec![], vec![]],
        dl: [vec![], vec![], vec![]],
        ls: [vec![], vec![], vec![]],
    };
    for end in (n - 1)..len {
        let window = window_at(segment, end, n).map_err(|e| CliError::data(Stage::Plot, e))?;
        let dl = model_forward(&window, checkpoint).map_err(|e| CliError::from_nn(Stage::Plot, e))?;
        let ls = estimate_acceleration(&window).map_err(|e| CliError::from_ls(Stage::Plot, e))?;
        traces.t.push(segment.timestamps[end]);
        for axis in 0..3 {
            traces.gt[axis].push(segment.gt_acceleration[end][axis]);
            traces.dl[axis].push(dl.a[axis]);
            traces.ls[axis].push(ls.a[axis]);
        }
    }
    Ok(traces)
}

/// `plot`: loss curves from `loss.csv` plus prediction traces over the
/// first test segment.
pub fn cmd_plot(config: &RunConfig) -> Result<Vec<PathBuf>, CliError> {
    let paths = Paths::new(&config.out_dir.0);
    let checkpoint = load_checkpoint(&paths, Stage::Plot)?;
    let loss_path = paths.loss_csv();
    let text =
        std::fs::read_to_string(&loss_path).map_err(|e| CliError::io(Stage::Plot, &loss_path, e))?;
    let history = LossHistory::from_csv_str(&text).ok_or_else(|| {
        CliError::data(Stage::Plot, format!("{}: malformed loss CSV", loss_path.display()))
    })?;
    let (segments, examples) = test_examples(config, &paths, Stage::Plot)?;
    let mut report = compare(&examples, &checkpoint)?;
    report.test_set = describe_test_set(config, segments.len(), examples.len());
    let traces = build_traces(config, &checkpoint, &segments[0].1)?;
    emit_plots(&history, &report, &traces, &paths.plots_dir())
}

/// Everything `pipeline` produced, with the in-memory results alongside the
/// artifact paths.
pub struct PipelineOutputs {
    pub report: ComparisonReport,
    pub history: LossHistory,
    pub checkpoint: ModelCheckpoint,
    pub checkpoint_path: PathBuf,
    pub loss_csv_path: PathBuf,
    pub report_txt_path: PathBuf,
    pub report_machine_path: PathBuf,
    pub plot_paths: Vec<PathBuf>,
}

/// Full run: simulate → augment → split → train → compare → plot, sharing
/// data in memory but writing every stage artifact.
pub fn run_pipeline(config: &RunConfig, format: ReportFormat) -> Result<PipelineOutputs, CliError> {
    let paths = Paths::new(&config.out_dir.0);
    std::fs::create_dir_all(paths.segments_dir())
        .map_err(|e| CliError::io(Stage::Simulate, &paths.segments_dir(), e))?;

    // simulate
    let (base_train, test_segments) = simulate_fleet(config)?;
    let specs = config
        .simulator
        .train_specs()?
        .into_iter()
        .chain(config.simulator.test_specs()?);
    for ((id, segment), (_, profile, seed)) in
        base_train.iter().chain(&test_segments).zip(specs)
    {
        write_segment_artifact(
            segment,
            &paths.segment(id),
            &segment_provenance(config, id, profile_kind(&profile), seed),
            Stage::Simulate,
        )?;
    }

    // augment
    let corpus = augment_corpus(
        &base_train,
        &config.dataset.augmentation.to_params(),
        config.dataset.augmentation.seed,
    )
    .map_err(|e| CliError::from_dataset(Stage::Augment, e))?;
    for (id, segment) in corpus.iter().skip(base_train.len()) {
        write_segment_artifact(
            segment,
            &paths.segment(id),
            &[format!("segment {id}"), "augmented copy".to_string()],
            Stage::Augment,
        )?;
    }

    // split
    let split = assemble_from(config, &corpus, &test_segments, Stage::Split)?;
    let manifest = SplitManifest {
        window_len: config.dataset.window_len,
        validation_fraction: config.dataset.validation_fraction,
        split_seed: config.dataset.split_seed,
        train_segments: corpus.iter().map(|(id, _)| format!("segments/{id}.csv")).collect(),
        test_segments: test_segments
            .iter()
            .map(|(id, _)| format!("segments/{id}.csv"))
            .collect(),
        train_example_count: split.train.len(),
        validation_example_count: split.validation.len(),
        test_example_count: split.test.len(),
    };
    let manifest_text = toml::to_string_pretty(&manifest)
        .map_err(|e| CliError::data(Stage::Split, format!("manifest serialization: {e}")))?;
    write_artifact(&paths.split_manifest(), manifest_text.as_bytes(), Stage::Split)?;

    // train
    let (checkpoint, history) = train_from_split(config, &split)?;
    write_training_artifacts(&paths, &checkpoint, &history)?;

    // compare
    let mut report = compare(&split.test, &checkpoint)?;
    report.test_set = describe_test_set(config, test_segments.len(), split.test.len());
    write_report(&paths, &report, format)?;

    // plot
    let traces = build_traces(config, &checkpoint, &test_segments[0].1)?;
    let plot_paths = emit_plots(&history, &report, &traces, &paths.plots_dir())?;

    Ok(PipelineOutputs {
        report,
        history,
        checkpoint,
        checkpoint_path: paths.checkpoint(),
        loss_csv_path: paths.loss_csv(),
        report_txt_path: paths.report_txt(),
        report_machine_path: paths.report_machine(format),
        plot_paths,
    })
}
