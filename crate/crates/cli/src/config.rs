//! Declarative run configuration (TOML): maneuver profiles, error model,
//! windowing, architecture knobs, training hyperparameters, seeds, and the
//! output directory. Every field has a default, so a config file only needs
//! the entries it overrides; `--seed` reseeds every stage from one value.

use std::path::{Path, PathBuf};

use dvlaccel::dataset::AugmentationParams;
use dvlaccel::nn::ArchitectureConfig;
use dvlaccel::sim::{BasicMotion, DvlErrorModel, ManeuverProfile, ProfilePiece};
use dvlaccel::training::{Optimizer, TrainConfig};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub out_dir: OutDir,
    pub simulator: SimulatorConfig,
    pub dataset: DatasetConfig,
    pub architecture: ArchConfig,
    pub training: TrainingConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct OutDir(pub PathBuf);

impl Default for OutDir {
    fn default() -> Self {
        Self(PathBuf::from("runs/default"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulatorConfig {
    pub duration_s: f64,
    pub rate_hz: f64,
    /// Base seed; segment i draws from seed + i (train) or
    /// seed + 500 + i (test).
    pub seed: u64,
    pub noise_std: f64,
    pub bias: [f64; 3],
    pub scale_factor: [f64; 3],
    pub train_profiles: Vec<ProfileConfig>,
    pub test_profiles: Vec<ProfileConfig>,
}

impl Default for SimulatorConfig {
    fn default() -> Self {
        Self {
            duration_s: 400.0,
            rate_hz: 1.0,
            seed: 101,
            noise_std: 0.02,
            bias: [0.0; 3],
            scale_factor: [1.0; 3],
            train_profiles: default_train_profiles(),
            test_profiles: default_test_profiles(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DatasetConfig {
    pub window_len: usize,
    pub validation_fraction: f64,
    pub split_seed: u64,
    pub augmentation: AugmentConfig,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        Self {
            window_len: 12,
            validation_fraction: 0.2,
            split_seed: 202,
            augmentation: AugmentConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AugmentConfig {
    pub scale_range: [f64; 2],
    pub bias_range: [f64; 2],
    pub noise_std: f64,
    pub seed: u64,
}

impl Default for AugmentConfig {
    fn default() -> Self {
        Self {
            scale_range: [0.98, 1.02],
            bias_range: [-0.02, 0.02],
            noise_std: 0.01,
            seed: 303,
        }
    }
}

impl AugmentConfig {
    pub fn to_params(&self) -> AugmentationParams {
        AugmentationParams::uniform(self.scale_range, self.bias_range, self.noise_std)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ArchConfig {
    pub conv_filters: usize,
    pub fc_hidden: usize,
}

impl Default for ArchConfig {
    fn default() -> Self {
        Self {
            conv_filters: 32,
            fc_hidden: 16,
        }
    }
}

impl ArchConfig {
    pub fn to_architecture(&self) -> ArchitectureConfig {
        ArchitectureConfig {
            conv_filters: self.conv_filters,
            fc_hidden: self.fc_hidden,
            ..ArchitectureConfig::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainingConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    /// "adam" or "sgd".
    pub optimizer: String,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_epsilon: f64,
    pub shuffle_seed: u64,
    pub init_seed: u64,
    pub normalize_input: bool,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        Self {
            epochs: 30,
            batch_size: 16,
            learning_rate: 0.001,
            optimizer: "adam".to_string(),
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_epsilon: 1e-8,
            shuffle_seed: 404,
            init_seed: 505,
            normalize_input: false,
        }
    }
}

impl TrainingConfig {
    pub fn to_train_config(&self) -> Result<TrainConfig, CliError> {
        let optimizer = match self.optimizer.as_str() {
            "adam" => Optimizer::Adam {
                beta1: self.adam_beta1,
                beta2: self.adam_beta2,
                epsilon: self.adam_epsilon,
            },
            "sgd" => Optimizer::Sgd,
            other => {
                return Err(CliError::Config(format!(
                    "unknown optimizer '{other}' (expected 'adam' or 'sgd')"
                )))
            }
        };
        Ok(TrainConfig {
            epochs: self.epochs,
            batch_size: self.batch_size,
            learning_rate: self.learning_rate,
            optimizer,
            shuffle_seed: self.shuffle_seed,
            init_seed: self.init_seed,
            normalize_input: self.normalize_input,
        })
    }
}

/// One maneuver profile. `kind` selects which of the optional parameter
/// fields are required; `piecewise` profiles list their pieces instead.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileConfig {
    pub name: String,
    pub kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub v0: Option<[f64; 3]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub accel: Option<[f64; 3]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub amplitude: Option<[f64; 3]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub omega: Option<[f64; 3]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phase: Option<[f64; 3]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pieces: Option<Vec<PieceConfig>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PieceConfig {
    pub start_s: f64,
    pub kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub v0: Option<[f64; 3]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub accel: Option<[f64; 3]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub amplitude: Option<[f64; 3]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub omega: Option<[f64; 3]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phase: Option<[f64; 3]>,
}

fn basic_motion(
    context: &str,
    kind: &str,
    v0: Option<[f64; 3]>,
    accel: Option<[f64; 3]>,
    amplitude: Option<[f64; 3]>,
    omega: Option<[f64; 3]>,
    phase: Option<[f64; 3]>,
) -> Result<BasicMotion, CliError> {
    let require = |field: Option<[f64; 3]>, name: &str| {
        field.ok_or_else(|| {
            CliError::Config(format!("profile '{context}': kind '{kind}' requires '{name}'"))
        })
    };
    match kind {
        "constant_velocity" => Ok(BasicMotion::ConstantVelocity {
            v0: require(v0, "v0")?,
        }),
        "constant_acceleration" => Ok(BasicMotion::ConstantAcceleration {
            v0: require(v0, "v0")?,
            accel: require(accel, "accel")?,
        }),
        "sinusoidal" => Ok(BasicMotion::Sinusoidal {
            v0: require(v0, "v0")?,
            amplitude: require(amplitude, "amplitude")?,
            omega: require(omega, "omega")?,
            phase: phase.unwrap_or([0.0; 3]),
        }),
        other => Err(CliError::Config(format!(
            "profile '{context}': unknown kind '{other}'"
        ))),
    }
}

impl ProfileConfig {
    pub fn to_profile(&self) -> Result<ManeuverProfile, CliError> {
        if self.kind == "piecewise" {
            let pieces = self.pieces.as_ref().ok_or_else(|| {
                CliError::Config(format!("profile '{}': piecewise requires 'pieces'", self.name))
            })?;
            if pieces.is_empty() {
                return Err(CliError::Config(format!(
                    "profile '{}': piecewise needs at least one piece",
                    self.name
                )));
            }
            let mapped = pieces
                .iter()
                .map(|p| {
                    Ok(ProfilePiece {
                        start: p.start_s,
                        motion: basic_motion(
                            &self.name,
                            &p.kind,
                            p.v0,
                            p.accel,
                            p.amplitude,
                            p.omega,
                            p.phase,
                        )?,
                    })
                })
                .collect::<Result<Vec<_>, CliError>>()?;
            Ok(ManeuverProfile::piecewise(mapped))
        } else {
            Ok(ManeuverProfile::Basic(basic_motion(
                &self.name,
                &self.kind,
                self.v0,
                self.accel,
                self.amplitude,
                self.omega,
                self.phase,
            )?))
        }
    }
}

impl SimulatorConfig {
    pub fn error_model(&self) -> DvlErrorModel {
        DvlErrorModel {
            noise_std: self.noise_std,
            bias: self.bias,
            scale_factor: self.scale_factor,
        }
    }

    /// `(id, profile, seed)` for every training segment.
    pub fn train_specs(&self) -> Result<Vec<(String, ManeuverProfile, u64)>, CliError> {
        self.train_profiles
            .iter()
            .enumerate()
            .map(|(i, p)| {
                Ok((
                    format!("train_{i:02}_{}", p.name),
                    p.to_profile()?,
                    self.seed + i as u64,
                ))
            })
            .collect()
    }

    /// `(id, profile, seed)` for every test segment.
    pub fn test_specs(&self) -> Result<Vec<(String, ManeuverProfile, u64)>, CliError> {
        self.test_profiles
            .iter()
            .enumerate()
            .map(|(i, p)| {
                Ok((
                    format!("test_{i:02}_{}", p.name),
                    p.to_profile()?,
                    self.seed + 500 + i as u64,
                ))
            })
            .collect()
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let config: RunConfig = toml::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load_or_default(path: Option<&Path>) -> Result<Self, CliError> {
        match path {
            Some(p) => Self::load(p),
            None => {
                let config = Self::default();
                config.validate()?;
                Ok(config)
            }
        }
    }

    /// Reseeds every stage from one master seed and/or redirects the output
    /// directory.
    pub fn apply_overrides(&mut self, seed: Option<u64>, out: Option<&Path>) {
        if let Some(s) = seed {
            self.simulator.seed = s;
            self.dataset.augmentation.seed = s + 1000;
            self.dataset.split_seed = s + 2000;
            self.training.init_seed = s + 3000;
            self.training.shuffle_seed = s + 4000;
        }
        if let Some(dir) = out {
            self.out_dir = OutDir(dir.to_path_buf());
        }
    }

    /// Eagerly checks everything a run needs, so bad configs fail with exit
    /// code 2 before any stage starts.
    pub fn validate(&self) -> Result<(), CliError> {
        if self.simulator.train_profiles.is_empty() || self.simulator.test_profiles.is_empty() {
            return Err(CliError::Config(
                "simulator needs at least one train profile and one test profile".into(),
            ));
        }
        for profile in self
            .simulator
            .train_profiles
            .iter()
            .chain(&self.simulator.test_profiles)
        {
            let mapped = profile.to_profile()?;
            mapped
                .validate()
                .map_err(|e| CliError::Config(format!("profile '{}': {e}", profile.name)))?;
            if let ManeuverProfile::Piecewise(pieces) = &mapped {
                for piece in pieces {
                    let k = piece.start * self.simulator.rate_hz;
                    if (k - k.round()).abs() > 1e-9 || piece.start >= self.simulator.duration_s {
                        return Err(CliError::Config(format!(
                            "profile '{}': switch at {} s is not a sample boundary within the segment",
                            profile.name, piece.start
                        )));
                    }
                }
            }
        }
        self.simulator
            .error_model()
            .validate()
            .map_err(|e| CliError::Config(e.to_string()))?;
        self.dataset
            .augmentation
            .to_params()
            .validate()
            .map_err(|e| CliError::Config(e.to_string()))?;
        if !(0.0..1.0).contains(&self.dataset.validation_fraction) {
            return Err(CliError::Config(format!(
                "validation_fraction {} must lie in [0, 1)",
                self.dataset.validation_fraction
            )));
        }
        let arch = self.architecture.to_architecture();
        arch.validate(self.dataset.window_len)
            .map_err(|e| CliError::Config(e.to_string()))?;
        self.training.to_train_config()?;
        if self.training.batch_size == 0 || self.training.epochs == 0 {
            return Err(CliError::Config(
                "training epochs and batch_size must be positive".into(),
            ));
        }
        Ok(())
    }
}

fn basic(name: &str, kind: &str) -> ProfileConfig {
    ProfileConfig {
        name: name.to_string(),
        kind: kind.to_string(),
        v0: None,
        accel: None,
        amplitude: None,
        omega: None,
        phase: None,
        pieces: None,
    }
}

fn piece(start_s: f64, kind: &str) -> PieceConfig {
    PieceConfig {
        start_s,
        kind: kind.to_string(),
        v0: None,
        accel: None,
        amplitude: None,
        omega: None,
        phase: None,
    }
}

/// Ten 400 s training maneuvers: eight steady multi-axis oscillations plus
/// two piecewise speed-change runs, all velocity-continuous. The per-axis
/// (mean speed, amplitude, frequency) combinations are spread to cover the
/// vehicle's operating envelope densely — surge means 0.9–1.8 m/s with
/// oscillation frequencies 0.04–0.145 rad/s — so held-out maneuvers with
/// interior parameters are in-distribution.
pub fn default_train_profiles() -> Vec<ProfileConfig> {
    let osc = |name: &str,
               v0: [f64; 3],
               amplitude: [f64; 3],
               omega: [f64; 3],
               phase: [f64; 3]| {
        let mut p = basic(name, "sinusoidal");
        p.v0 = Some(v0);
        p.amplitude = Some(amplitude);
        p.omega = Some(omega);
        p.phase = Some(phase);
        p
    };

    let mut profiles = vec![
        osc(
            "osc_slow",
            [1.0, 0.05, 0.0],
            [0.3, 0.2, 0.1],
            [0.04, 0.09, 0.14],
            [0.0, 2.1, 4.2],
        ),
        osc(
            "osc_wide",
            [1.2, -0.1, 0.02],
            [0.4, 0.3, 0.2],
            [0.055, 0.12, 0.06],
            [1.0, 3.1, 5.2],
        ),
        osc(
            "osc_deep",
            [1.4, 0.1, -0.03],
            [0.5, 0.25, 0.08],
            [0.07, 0.05, 0.1],
            [2.0, 4.1, 0.3],
        ),
        osc(
            "osc_brisk",
            [1.6, 0.0, 0.05],
            [0.35, 0.15, 0.25],
            [0.085, 0.14, 0.08],
            [3.0, 5.1, 1.4],
        ),
        osc(
            "osc_fast_cruise",
            [1.8, -0.05, 0.0],
            [0.3, 0.35, 0.12],
            [0.1, 0.07, 0.12],
            [4.0, 0.1, 2.5],
        ),
        osc(
            "osc_slow_cruise",
            [0.9, 0.1, -0.05],
            [0.25, 0.1, 0.3],
            [0.115, 0.1, 0.15],
            [5.0, 1.1, 3.6],
        ),
        osc(
            "osc_surge_heavy",
            [1.3, -0.15, 0.03],
            [0.45, 0.2, 0.15],
            [0.13, 0.035, 0.045],
            [0.5, 2.6, 4.7],
        ),
        osc(
            "osc_quick",
            [1.7, 0.15, -0.02],
            [0.2, 0.3, 0.1],
            [0.145, 0.08, 0.09],
            [1.5, 3.6, 5.8],
        ),
    ];

    let mut step_accel = basic("step_accel", "piecewise");
    let mut s0 = piece(0.0, "constant_velocity");
    s0.v0 = Some([1.5, 0.0, 0.0]);
    let mut s1 = piece(150.0, "constant_acceleration");
    s1.v0 = Some([1.5, 0.0, 0.0]);
    s1.accel = Some([0.004, 0.0, 0.0]);
    let mut s2 = piece(275.0, "constant_velocity");
    s2.v0 = Some([2.0, 0.0, 0.0]);
    step_accel.pieces = Some(vec![s0, s1, s2]);
    profiles.push(step_accel);

    let mut brake_weave = basic("brake_weave", "piecewise");
    let mut b0 = piece(0.0, "constant_acceleration");
    b0.v0 = Some([1.9, 0.0, 0.0]);
    b0.accel = Some([-0.005, 0.0, 0.0]);
    let mut b1 = piece(140.0, "sinusoidal");
    b1.v0 = Some([1.2, 0.0, 0.0]);
    b1.amplitude = Some([0.35, 0.25, 0.12]);
    b1.omega = Some([0.095, 0.06, 0.13]);
    brake_weave.pieces = Some(vec![b0, b1]);
    profiles.push(brake_weave);

    profiles
}

/// Three held-out 400 s test maneuvers in the same families as training
/// but with different parameters.
pub fn default_test_profiles() -> Vec<ProfileConfig> {
    let mut test_weave = basic("test_weave", "sinusoidal");
    test_weave.v0 = Some([1.3, 0.05, 0.0]);
    test_weave.amplitude = Some([0.45, 0.3, 0.15]);
    test_weave.omega = Some([0.07, 0.09, 0.11]);
    test_weave.phase = Some([0.6, 0.45, 1.05]);

    let mut test_mixed = basic("test_mixed", "piecewise");
    let mut m0 = piece(0.0, "constant_velocity");
    m0.v0 = Some([1.1, 0.0, 0.0]);
    let mut m1 = piece(100.0, "constant_acceleration");
    m1.v0 = Some([1.1, 0.0, 0.0]);
    m1.accel = Some([0.006, 0.002, 0.0]);
    let mut m2 = piece(220.0, "sinusoidal");
    m2.v0 = Some([1.82, 0.24, 0.0]);
    m2.amplitude = Some([0.3, 0.2, 0.1]);
    m2.omega = Some([0.083775804, 0.104719755, 0.13962634]);
    test_mixed.pieces = Some(vec![m0, m1, m2]);

    let mut test_sway = basic("test_sway", "sinusoidal");
    test_sway.v0 = Some([0.9, -0.1, 0.05]);
    test_sway.amplitude = Some([0.25, 0.2, 0.1]);
    test_sway.omega = Some([0.12, 0.04, 0.08]);
    test_sway.phase = Some([0.0, 1.6, 3.2]);

    vec![test_weave, test_mixed, test_sway]
}
