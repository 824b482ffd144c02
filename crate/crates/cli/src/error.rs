//! Error taxonomy and exit codes: 0 success, 2 config error, 3 data error,
//! 4 numerical failure (divergence or singularity). Stage tags identify
//! where a pipeline aborted.

use std::fmt;

use dvlaccel::dataset::DatasetError;
use dvlaccel::least_squares::LsError;
use dvlaccel::nn::NnError;
use dvlaccel::sim::SimError;
use dvlaccel::training::TrainingError;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Simulate,
    Augment,
    Split,
    Train,
    Eval,
    Compare,
    Plot,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Stage::Simulate => "simulate",
            Stage::Augment => "augment",
            Stage::Split => "split",
            Stage::Train => "train",
            Stage::Eval => "eval",
            Stage::Compare => "compare",
            Stage::Plot => "plot",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("stage {stage}: {message}")]
    Data { stage: Stage, message: String },
    #[error("stage {stage}: numerical failure: {message}")]
    Numerical { stage: Stage, message: String },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Data { .. } => 3,
            CliError::Numerical { .. } => 4,
        }
    }

    pub fn data(stage: Stage, err: impl fmt::Display) -> Self {
        CliError::Data {
            stage,
            message: err.to_string(),
        }
    }

    pub fn numerical(stage: Stage, err: impl fmt::Display) -> Self {
        CliError::Numerical {
            stage,
            message: err.to_string(),
        }
    }

    pub fn from_sim(stage: Stage, err: SimError) -> Self {
        Self::data(stage, err)
    }

    pub fn from_dataset(stage: Stage, err: DatasetError) -> Self {
        Self::data(stage, err)
    }

    pub fn from_ls(stage: Stage, err: LsError) -> Self {
        Self::numerical(stage, err)
    }

    pub fn from_nn(stage: Stage, err: NnError) -> Self {
        match err {
            NnError::BadArchitecture(msg) => CliError::Config(msg),
            other => Self::data(stage, other),
        }
    }

    pub fn from_training(stage: Stage, err: TrainingError) -> Self {
        match err {
            TrainingError::Diverged { .. } | TrainingError::DivergedValidation { .. } => {
                Self::numerical(stage, err)
            }
            other => Self::data(stage, other),
        }
    }

    pub fn io(stage: Stage, path: &std::path::Path, err: std::io::Error) -> Self {
        Self::data(stage, format!("{}: {err}", path.display()))
    }
}
