use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{LatentPosterior, ModelConfig, ModelError, Parameters};
use crate::scalar::Real;

pub const CHECKPOINT_FORMAT_VERSION: u32 = 1;

/// Trained network plus its per-sequence posteriors, stored as a single JSON
/// document. Floats are written in shortest round-trip form, so save → load is
/// bit-exact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct Checkpoint<T> {
    pub format_version: u32,
    pub scalar: String,
    pub config: ModelConfig,
    /// Free-form provenance (condition id, seed, epochs...).
    pub meta: BTreeMap<String, String>,
    pub params: Parameters<T>,
    pub posteriors: Vec<LatentPosterior<T>>,
}

impl<T: Real> Checkpoint<T> {
    pub fn new(params: Parameters<T>, posteriors: Vec<LatentPosterior<T>>) -> Self {
        Self {
            format_version: CHECKPOINT_FORMAT_VERSION,
            scalar: T::NAME.to_string(),
            config: *params.config(),
            meta: BTreeMap::new(),
            params,
            posteriors,
        }
    }

    pub fn with_meta(mut self, key: &str, value: impl ToString) -> Self {
        self.meta.insert(key.to_string(), value.to_string());
        self
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("checkpoint serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, ModelError> {
        let ck: Self =
            serde_json::from_str(text).map_err(|e| ModelError::Checkpoint(e.to_string()))?;
        if ck.format_version != CHECKPOINT_FORMAT_VERSION {
            return Err(ModelError::Checkpoint(format!(
                "unsupported format version {} (expected {})",
                ck.format_version, CHECKPOINT_FORMAT_VERSION
            )));
        }
        if ck.scalar != T::NAME {
            return Err(ModelError::Checkpoint(format!(
                "checkpoint holds {} values, requested {}",
                ck.scalar,
                T::NAME
            )));
        }
        if &ck.config != ck.params.config() {
            return Err(ModelError::Checkpoint("config does not match parameters".into()));
        }
        ck.params.audit()?;
        for q in &ck.posteriors {
            super::check_len("posterior high width", ck.config.high.n_latent, q.high.n_latent)?;
            super::check_len("posterior low width", ck.config.low.n_latent, q.low.n_latent)?;
        }
        Ok(ck)
    }

    pub fn save(&self, path: &Path) -> Result<(), ModelError> {
        fs::write(path, self.to_json())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, ModelError> {
        let text = fs::read_to_string(path)?;
        Self::from_json(&text)
            .map_err(|e| ModelError::Checkpoint(format!("{}: {e}", path.display())))
    }
}
