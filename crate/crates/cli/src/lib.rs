//! Command-line experiment runner for deep Ising Born machines.

pub mod config;
pub mod error;
pub mod experiments;
pub mod output;

pub use config::{Experiment, ExperimentConfig, RunSeeds, SCHEMA_VERSION};
pub use error::CliError;
pub use experiments::{run, Outcome};

/// Command-line overrides applied on top of a loaded config.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    /// Replaces the seed list with this single seed.
    pub seed: Option<u64>,
    pub max_iters: Option<usize>,
    pub fast: bool,
}

impl Overrides {
    pub fn apply(&self, config: &mut ExperimentConfig) {
        let single = self.seed.map(|s| vec![s]);
        let training = match &mut config.experiment {
            Experiment::Train(s) => {
                if let Some(v) = &single {
                    s.seeds = v.clone();
                }
                Some(&mut s.training)
            }
            Experiment::Compare(s) => {
                if let Some(v) = &single {
                    s.seeds = v.clone();
                }
                Some(&mut s.training)
            }
            Experiment::Teleport(s) => {
                if let Some(v) = &single {
                    s.seeds = v.clone();
                }
                Some(&mut s.training)
            }
            Experiment::CorruptionSweep(s) => {
                if let Some(v) = &single {
                    s.seeds = v.clone();
                }
                Some(&mut s.training)
            }
            Experiment::Barren(s) => {
                if let Some(v) = &single {
                    s.seeds = v.clone();
                }
                Some(&mut s.training)
            }
            Experiment::Landscape(s) => {
                if let Some(seed) = self.seed {
                    s.seed = seed;
                }
                Some(&mut s.training)
            }
            Experiment::Fbe(s) => {
                if let Some(seed) = self.seed {
                    s.fbe.seed = dibom::RngSeed(seed);
                }
                s.fast |= self.fast;
                None
            }
            Experiment::ParamsTable(_) => None,
        };
        if let (Some(t), Some(iters)) = (training, self.max_iters) {
            t.max_iters = iters;
        }
    }
}
