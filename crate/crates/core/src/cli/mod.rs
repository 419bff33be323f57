//! Batch runner behind the `stratorder` binary: exact reproduction of the
//! two-stratum counterexample, randomized theorem sweeps, and simulations.

pub mod generator;
mod reproduce;
mod simulate;
mod verify;

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ExactNoise;

pub use generator::{random_instance, GeneratorParams, Instance, InstanceDump, RefinementShape};
pub use reproduce::{example_function, generalized_example, reproduce_example, GeneralizedReport, LawReport, ReproduceReport};
pub use simulate::{simulate, RunSummary, SimulationSpec, SimulationSummary};
pub use verify::{verify, Outcome, Theorem, TrialRecord, VerifyOptions, VerifyReport};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Reproduce,
    Verify,
    Simulate,
}

/// JSON experiment description shared by all three modes.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub mode: Mode,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub theorem: Option<Theorem>,
    #[serde(default)]
    pub trials: Option<usize>,
    #[serde(default)]
    pub generator: Option<GeneratorParams>,
    #[serde(default)]
    pub noise: Option<ExactNoise>,
    #[serde(default)]
    pub inject_counterexample: bool,
    /// Sample size of the generalized counterexample in `reproduce` mode.
    #[serde(default)]
    pub n: Option<usize>,
    #[serde(default)]
    pub simulation: Option<SimulationSpec>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let config: Self = serde_json::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        if matches!(self.mode, Mode::Verify | Mode::Simulate) && self.seed.is_none() {
            return Err(Error::Config("a seed is required in verify and simulate modes".into()));
        }
        if self.trials == Some(0) {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        match self.mode {
            Mode::Verify if self.theorem.is_none() => Err(Error::Config("verify mode needs a theorem".into())),
            Mode::Simulate if self.simulation.is_none() => Err(Error::Config("simulate mode needs a simulation block".into())),
            _ => Ok(()),
        }
    }

    pub fn verify_options(&self) -> Result<VerifyOptions> {
        let theorem = self.theorem.ok_or_else(|| Error::Config("verify mode needs a theorem".into()))?;
        let mut options = VerifyOptions::new(theorem, self.trials.unwrap_or(200), self.seed.unwrap_or_default());
        if let Some(g) = &self.generator {
            options.generator = g.clone();
        }
        options.noise = self.noise.clone();
        options.inject_counterexample = self.inject_counterexample;
        Ok(options)
    }
}
