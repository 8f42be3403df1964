//! Experiment configuration files.
//!
//! A config is a TOML document with a `schema` version and one
//! `[experiment]` table whose `kind` selects the experiment. Each run seed
//! `s` expands into independent streams for the dataset, the split, the model
//! and the corruption, see [`RunSeeds`].

use std::path::{Path, PathBuf};

use dibom::datagen::{InputKind, IntrinsicSpec};
use dibom::expressivity::{Architecture, FbeConfig};
use dibom::network::{build_conditional_dibom, build_model, ModelKind};
use dibom::training::{LossKind, Method, TrainingConfig};
use dibom::RngSeed;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema: u32,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
    pub experiment: Experiment,
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Experiment {
    Train(TrainSettings),
    Compare(CompareSettings),
    Fbe(FbeSettings),
    Landscape(LandscapeSettings),
    Teleport(TeleportSettings),
    CorruptionSweep(CorruptionSettings),
    ParamsTable(ParamsSettings),
    Barren(BarrenSettings),
}

impl Experiment {
    pub fn kind(&self) -> &'static str {
        match self {
            Experiment::Train(_) => "train",
            Experiment::Compare(_) => "compare",
            Experiment::Fbe(_) => "fbe",
            Experiment::Landscape(_) => "landscape",
            Experiment::Teleport(_) => "teleport",
            Experiment::CorruptionSweep(_) => "corruption-sweep",
            Experiment::ParamsTable(_) => "params-table",
            Experiment::Barren(_) => "barren",
        }
    }
}

fn default_count() -> usize {
    20
}

fn default_fraction() -> f64 {
    0.5
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSettings {
    pub intrinsic: IntrinsicSpec,
    pub n: usize,
    #[serde(default = "default_count")]
    pub count: usize,
    #[serde(default = "default_fraction")]
    pub train_fraction: f64,
    #[serde(default)]
    pub input_kind: InputKind,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSettings {
    pub kind: ModelKind,
    #[serde(default)]
    pub depth: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainSettings {
    pub seeds: Vec<u64>,
    pub data: DataSettings,
    pub model: ModelSettings,
    #[serde(default)]
    pub training: TrainingConfig,
    /// Methods run on every seed; empty means `training.method` only.
    #[serde(default)]
    pub methods: Vec<Method>,
}

impl TrainSettings {
    pub fn methods(&self) -> Vec<Method> {
        if self.methods.is_empty() {
            vec![self.training.method]
        } else {
            self.methods.clone()
        }
    }
}

fn default_table_ns() -> Vec<usize> {
    (2..=6).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompareSettings {
    pub seeds: Vec<u64>,
    pub data: DataSettings,
    pub models: Vec<ModelSettings>,
    #[serde(default)]
    pub training: TrainingConfig,
    /// Qubit counts of the parameter-count table.
    #[serde(default = "default_table_ns")]
    pub table_n: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FbeSettings {
    pub n: usize,
    pub architectures: Vec<Architecture>,
    pub depths: Vec<usize>,
    #[serde(default)]
    pub fbe: FbeConfig,
    /// Replace `k` and `m` by the reduced profile.
    #[serde(default)]
    pub fast: bool,
    /// Fill the `seconds` column; off keeps reruns byte-identical.
    #[serde(default)]
    pub record_timing: bool,
}

impl FbeSettings {
    pub fn effective(&self) -> FbeConfig {
        if self.fast {
            let fast = FbeConfig::fast(self.fbe.seed);
            FbeConfig {
                k: fast.k,
                m: fast.m,
                ..self.fbe.clone()
            }
        } else {
            self.fbe.clone()
        }
    }
}

fn default_steps() -> usize {
    21
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LandscapeSettings {
    pub seed: u64,
    pub data: DataSettings,
    pub model: ModelSettings,
    /// Training applied before the scan; `max_iters = 0` scans the initial model.
    #[serde(default)]
    pub training: TrainingConfig,
    /// Flat parameter indices of the two scanned coordinates.
    pub coordinates: [usize; 2],
    pub ranges: [[f64; 2]; 2],
    #[serde(default = "default_steps")]
    pub steps: usize,
    /// Ranges are offsets from the trained values.
    #[serde(default)]
    pub relative: bool,
}

fn default_pre_depth() -> usize {
    3
}

fn default_branch_depth() -> usize {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TeleportSettings {
    pub seeds: Vec<u64>,
    #[serde(default = "default_count")]
    pub count: usize,
    #[serde(default = "default_fraction")]
    pub train_fraction: f64,
    #[serde(default = "default_pre_depth")]
    pub pre_depth: usize,
    #[serde(default = "default_branch_depth")]
    pub branch_depth: usize,
    #[serde(default)]
    pub training: TrainingConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayerSweep {
    pub ratio: f64,
    pub depths: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorruptionSettings {
    pub seeds: Vec<u64>,
    pub data: DataSettings,
    pub model: ModelSettings,
    #[serde(default)]
    pub training: TrainingConfig,
    pub ratios: Vec<f64>,
    #[serde(default)]
    pub layer_sweep: Option<LayerSweep>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsSettings {
    pub kinds: Vec<ModelKind>,
    pub ns: Vec<usize>,
    pub depths: Vec<usize>,
}

fn default_losses() -> Vec<LossKind> {
    vec![LossKind::Local, LossKind::Global]
}

fn default_threshold() -> f64 {
    1e-2
}

fn default_barren_spec() -> IntrinsicSpec {
    IntrinsicSpec::ProductThenGcz
}

fn default_barren_depth() -> usize {
    2
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BarrenSettings {
    pub seeds: Vec<u64>,
    pub ns: Vec<usize>,
    #[serde(default = "default_barren_spec")]
    pub intrinsic: IntrinsicSpec,
    #[serde(default = "default_count")]
    pub count: usize,
    #[serde(default = "default_fraction")]
    pub train_fraction: f64,
    #[serde(default = "default_barren_depth")]
    pub depth: usize,
    #[serde(default = "default_losses")]
    pub losses: Vec<LossKind>,
    #[serde(default = "default_threshold")]
    pub threshold: f64,
    #[serde(default)]
    pub training: TrainingConfig,
}

/// Independent streams derived from one run seed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct RunSeeds {
    pub run: RngSeed,
    pub data: RngSeed,
    pub split: RngSeed,
    pub model: RngSeed,
    pub corruption: RngSeed,
    pub training: RngSeed,
}

impl RunSeeds {
    pub fn new(seed: u64) -> Self {
        let run = RngSeed(seed);
        RunSeeds {
            run,
            data: run.derive(0),
            split: run.derive(1),
            model: run.derive(2),
            corruption: run.derive(3),
            training: run.derive(4),
        }
    }
}

fn config_error(message: impl Into<String>) -> CliError {
    CliError::Config(message.into())
}

fn check_seeds(seeds: &[u64]) -> Result<(), CliError> {
    if seeds.is_empty() {
        return Err(config_error("at least one seed is required"));
    }
    Ok(())
}

fn check_training(training: &TrainingConfig) -> Result<(), CliError> {
    training
        .validate()
        .map_err(|e| config_error(format!("training: {e}")))
}

fn check_split(count: usize, fraction: f64) -> Result<(), CliError> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(config_error(format!(
            "train_fraction must lie in (0, 1), got {fraction}"
        )));
    }
    let train = (fraction * count as f64).round() as usize;
    if train == 0 || train >= count {
        return Err(config_error(format!(
            "{count} samples leave an empty side at fraction {fraction}"
        )));
    }
    Ok(())
}

fn check_data(data: &DataSettings) -> Result<(), CliError> {
    if data.n == 0 {
        return Err(config_error("data.n must be at least 1"));
    }
    check_split(data.count, data.train_fraction)?;
    if data.intrinsic == IntrinsicSpec::TeleportationTask {
        return Err(config_error(
            "the teleportation task is run by the teleport experiment",
        ));
    }
    dibom::datagen::intrinsic_unitary(data.intrinsic, data.n, RngSeed(0))
        .map(|_| ())
        .map_err(|e| config_error(format!("data.intrinsic: {e}")))
}

fn check_model(model: &ModelSettings, n: usize) -> Result<(), CliError> {
    if let ModelKind::Dissipative { input, output, .. } = model.kind {
        if input != n || output != n {
            return Err(config_error(format!(
                "dissipative registers {input} -> {output} do not match data.n = {n}"
            )));
        }
    }
    build_model(model.kind, n, model.depth, RngSeed(0))
        .map(|_| ())
        .map_err(|e| config_error(format!("model {:?}: {e}", model.kind)))
}

fn check_nonempty<T>(items: &[T], name: &str) -> Result<(), CliError> {
    if items.is_empty() {
        return Err(config_error(format!("{name} must not be empty")));
    }
    Ok(())
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let config: ExperimentConfig =
            toml::from_str(text).map_err(|e| config_error(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| config_error(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    /// Checks everything a run needs before any compute starts.
    pub fn validate(&self) -> Result<(), CliError> {
        if self.schema != SCHEMA_VERSION {
            return Err(config_error(format!(
                "unsupported schema {}, expected {SCHEMA_VERSION}",
                self.schema
            )));
        }
        match &self.experiment {
            Experiment::Train(s) => {
                check_seeds(&s.seeds)?;
                check_data(&s.data)?;
                check_model(&s.model, s.data.n)?;
                check_training(&s.training)
            }
            Experiment::Compare(s) => {
                check_seeds(&s.seeds)?;
                check_data(&s.data)?;
                check_nonempty(&s.models, "models")?;
                for m in &s.models {
                    check_model(m, s.data.n)?;
                }
                check_training(&s.training)
            }
            Experiment::Fbe(s) => {
                check_nonempty(&s.architectures, "architectures")?;
                check_nonempty(&s.depths, "depths")?;
                if s.n == 0 {
                    return Err(config_error("n must be at least 1"));
                }
                for &arch in &s.architectures {
                    for &depth in &s.depths {
                        arch.build(s.n, depth, RngSeed(0))
                            .map_err(|e| config_error(format!("{arch:?} depth {depth}: {e}")))?;
                    }
                }
                s.effective()
                    .validate()
                    .map_err(|e| config_error(format!("fbe: {e}")))
            }
            Experiment::Landscape(s) => {
                check_data(&s.data)?;
                check_model(&s.model, s.data.n)?;
                if s.training.max_iters > 0 {
                    check_training(&s.training)?;
                }
                let params = build_model(s.model.kind, s.data.n, s.model.depth, RngSeed(0))
                    .map_err(|e| config_error(e.to_string()))?
                    .network
                    .num_params();
                for &c in &s.coordinates {
                    if c >= params {
                        return Err(config_error(format!(
                            "coordinate {c} out of range for {params} parameters"
                        )));
                    }
                }
                if s.coordinates[0] == s.coordinates[1] {
                    return Err(config_error("the two coordinates must differ"));
                }
                if s.steps < 2 {
                    return Err(config_error("steps must be at least 2"));
                }
                for r in &s.ranges {
                    if !(r[0] < r[1]) {
                        return Err(config_error(format!("empty range {r:?}")));
                    }
                }
                Ok(())
            }
            Experiment::Teleport(s) => {
                check_seeds(&s.seeds)?;
                check_split(s.count, s.train_fraction)?;
                build_conditional_dibom(3, 0, 2, s.pre_depth, s.branch_depth, RngSeed(0))
                    .map_err(|e| config_error(e.to_string()))?;
                check_training(&s.training)
            }
            Experiment::CorruptionSweep(s) => {
                check_seeds(&s.seeds)?;
                check_data(&s.data)?;
                check_model(&s.model, s.data.n)?;
                check_training(&s.training)?;
                check_nonempty(&s.ratios, "ratios")?;
                let sweep_ratio = s.layer_sweep.as_ref().map(|l| l.ratio);
                for &r in s.ratios.iter().chain(sweep_ratio.iter()) {
                    if !(0.0..=1.0).contains(&r) {
                        return Err(config_error(format!("ratio {r} outside [0, 1]")));
                    }
                }
                if let Some(sweep) = &s.layer_sweep {
                    check_nonempty(&sweep.depths, "layer_sweep.depths")?;
                    for &depth in &sweep.depths {
                        check_model(
                            &ModelSettings {
                                kind: s.model.kind,
                                depth,
                            },
                            s.data.n,
                        )?;
                    }
                }
                Ok(())
            }
            Experiment::ParamsTable(s) => {
                check_nonempty(&s.kinds, "kinds")?;
                check_nonempty(&s.ns, "ns")?;
                check_nonempty(&s.depths, "depths")
            }
            Experiment::Barren(s) => {
                check_seeds(&s.seeds)?;
                check_nonempty(&s.ns, "ns")?;
                check_nonempty(&s.losses, "losses")?;
                check_split(s.count, s.train_fraction)?;
                check_training(&s.training)?;
                for &n in &s.ns {
                    check_data(&DataSettings {
                        intrinsic: s.intrinsic,
                        n,
                        count: s.count,
                        train_fraction: s.train_fraction,
                        input_kind: InputKind::ProductForm,
                    })?;
                    check_model(
                        &ModelSettings {
                            kind: ModelKind::Dibom,
                            depth: s.depth,
                        },
                        n,
                    )?;
                }
                Ok(())
            }
        }
    }
}
