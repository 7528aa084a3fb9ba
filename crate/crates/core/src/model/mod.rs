//! The stochastic two-timescale network: leaky-integrator context layers driven
//! by per-step Gaussian latents, proprioceptive and exteroceptive readouts, a
//! KL-weighted prediction-error loss, exact BPTT gradients and training.

mod bptt;
mod checkpoint;
mod config;
mod forward;
mod loss;
mod optim;
mod params;
mod posterior;
mod sequence;
mod train;

use thiserror::Error;

pub use bptt::{bptt_gradients, window_gradients, Gradients};
pub use checkpoint::{Checkpoint, CHECKPOINT_FORMAT_VERSION};
pub use config::{LayerConfig, ModelConfig};
pub use forward::{
    forward_step, sample_latent, unroll, LayerState, NetState, StepOutput, Trace,
};
pub use loss::{kl_unit_gaussian, sequence_loss, window_loss, LossBreakdown, Objective, StreamMask};
pub use optim::{Adam, AdamConfig};
pub use params::{init_parameters, ParamRole, Parameters};
pub use posterior::{LatentNoise, LatentPosterior, LayerPosterior, LOG_SIGMA_MAX, LOG_SIGMA_MIN};
pub use sequence::Sequence;
pub use train::{train, TrainOutcome, TrainSchedule};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("invalid model config: {0}")]
    Config(String),
    #[error("dimension mismatch in {what}: expected {expected}, got {got}")]
    Dimension {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("posterior horizon {posterior} does not match target length {target}")]
    Horizon { posterior: usize, target: usize },
    #[error("training diverged at epoch {epoch} (learning rate {learning_rate}): total loss {total}")]
    Diverged {
        epoch: usize,
        learning_rate: f64,
        total: f64,
    },
    #[error("empty training corpus")]
    EmptyCorpus,
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub(crate) fn check_len(what: &'static str, expected: usize, got: usize) -> Result<(), ModelError> {
    if expected == got {
        Ok(())
    } else {
        Err(ModelError::Dimension {
            what,
            expected,
            got,
        })
    }
}
