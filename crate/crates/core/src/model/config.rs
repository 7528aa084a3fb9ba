use serde::{Deserialize, Serialize};

use super::ModelError;

/// One context layer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LayerConfig {
    pub n_units: usize,
    /// Integration timescale in steps; 1 gives an ordinary recurrent layer.
    pub tau: f64,
    pub n_latent: usize,
    /// Meta-prior weight on this layer's KL term.
    pub w: f64,
}

/// Two context layers: `high` (slow) above `low` (fast). Outputs are read from
/// `low` through a tanh readout, `dof` channels per stream.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub high: LayerConfig,
    pub low: LayerConfig,
    pub dof: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            high: LayerConfig {
                n_units: 10,
                tau: 10.0,
                n_latent: 2,
                w: 0.0,
            },
            low: LayerConfig {
                n_units: 30,
                tau: 2.0,
                n_latent: 4,
                w: 0.0,
            },
            dof: 6,
        }
    }
}

impl ModelConfig {
    pub fn with_weights(mut self, w_high: f64, w_low: f64) -> Self {
        self.high.w = w_high;
        self.low.w = w_low;
        self
    }

    /// Width of the concatenated readout (proprio then extero).
    pub fn n_outputs(&self) -> usize {
        2 * self.dof
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |m: String| Err(ModelError::Config(m));
        for (name, l) in [("high", &self.high), ("low", &self.low)] {
            if l.n_units == 0 {
                return bad(format!("{name}.n_units must be positive"));
            }
            if !(l.tau >= 1.0 && l.tau.is_finite()) {
                return bad(format!("{name}.tau must be >= 1, got {}", l.tau));
            }
            if !(l.w >= 0.0 && l.w.is_finite()) {
                return bad(format!("{name}.w must be >= 0, got {}", l.w));
            }
        }
        if self.high.tau <= self.low.tau {
            return bad(format!(
                "high.tau ({}) must exceed low.tau ({})",
                self.high.tau, self.low.tau
            ));
        }
        if self.dof == 0 {
            return bad("dof must be positive".into());
        }
        Ok(())
    }
}
