//! Synthetic data under the additive-and-phase noise model and the
//! replication harness comparing estimators.

pub mod experiment;
pub mod noise;
pub mod signals;

pub use experiment::{
    replication_seed, rmse, run_experiment, ExperimentConfig, ExperimentReport, Replication,
};
pub use noise::{generate, random_warping, NoiseModel, Scenario};
pub use signals::{scenario_signal, ScenarioId};
