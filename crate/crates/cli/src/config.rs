use std::path::Path;

use cenn::cost::{CostParams, DEFAULT_SEQUENCE_FRAMES};
use cenn::synth::SynthConfig;
use cenn::tracker::TrackerConfig;
use cenn::trainer::TrainerConfig;
use cenn::SolverConfig;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

/// Everything a run needs besides file paths. Every field has a default, so
/// `{}` is a valid configuration and partial files override only what they
/// name.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub solver: SolverConfig,
    pub trainer: TrainerConfig,
    pub tracker: TrackerConfig,
    pub cost: CostParams,
    pub synth: SynthConfig,
    /// Frames per sequence for the cost report's sequence totals.
    pub sequence_frames: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            solver: SolverConfig::default(),
            trainer: TrainerConfig::default(),
            tracker: TrackerConfig::default(),
            cost: CostParams::default(),
            synth: SynthConfig::default(),
            sequence_frames: DEFAULT_SEQUENCE_FRAMES,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> cenn::Result<()> {
        self.solver.validate()?;
        self.trainer.ga.validate()?;
        self.tracker.motion_noise.validate()?;
        self.tracker.size_noise.validate()?;
        self.cost.validate()?;
        let bad = |m: &str| Err(cenn::Error::InvalidConfig(m.into()));
        if self.trainer.n_kernels == 0 || self.trainer.n_keep == 0 {
            return bad("trainer.n_kernels and trainer.n_keep must be positive");
        }
        if !(self.trainer.target_sparsity > 0.0 && self.trainer.target_sparsity < 1.0) {
            return bad("trainer.target_sparsity must lie in (0, 1)");
        }
        if !(self.tracker.min_size >= 1.0) {
            return bad("tracker.min_size must be at least 1");
        }
        if self.sequence_frames == 0 {
            return bad("sequence_frames must be positive");
        }
        Ok(())
    }

    /// Reads and validates a config file; `None` gives the defaults.
    pub fn load(path: Option<&Path>) -> CliResult<Self> {
        let cfg = match path {
            None => Self::default(),
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| CliError::input(p, e))?;
                serde_json::from_str(&text).map_err(|e| CliError::input(p, e))?
            }
        };
        cfg.validate().map_err(|e| CliError::Input(format!("config: {e}")))?;
        Ok(cfg)
    }
}
