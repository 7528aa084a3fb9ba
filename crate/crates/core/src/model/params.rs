use std::collections::hash_map::DefaultHasher;
use std::hash::Hasher;

use serde::{Deserialize, Serialize};

use super::{check_len, ModelConfig, ModelError};
use crate::linalg::Matrix;
use crate::numerics::RngStream;
use crate::scalar::Real;

/// Role of a learnable tensor, named by its (from, to) connection.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamRole {
    LowRecurrent,
    HighToLow,
    LatentToLow,
    LowBias,
    HighRecurrent,
    LowToHigh,
    LatentToHigh,
    HighBias,
    Readout,
    ReadoutBias,
}

impl ParamRole {
    pub const ALL: [ParamRole; 10] = [
        ParamRole::LowRecurrent,
        ParamRole::HighToLow,
        ParamRole::LatentToLow,
        ParamRole::LowBias,
        ParamRole::HighRecurrent,
        ParamRole::LowToHigh,
        ParamRole::LatentToHigh,
        ParamRole::HighBias,
        ParamRole::Readout,
        ParamRole::ReadoutBias,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ParamRole::LowRecurrent => "low->low",
            ParamRole::HighToLow => "high->low",
            ParamRole::LatentToLow => "z_low->low",
            ParamRole::LowBias => "bias->low",
            ParamRole::HighRecurrent => "high->high",
            ParamRole::LowToHigh => "low->high",
            ParamRole::LatentToHigh => "z_high->high",
            ParamRole::HighBias => "bias->high",
            ParamRole::Readout => "low->out",
            ParamRole::ReadoutBias => "bias->out",
        }
    }

    /// (rows, cols) implied by the config; biases are `(n, 1)`.
    pub fn shape(self, c: &ModelConfig) -> (usize, usize) {
        let (nl, nh) = (c.low.n_units, c.high.n_units);
        match self {
            ParamRole::LowRecurrent => (nl, nl),
            ParamRole::HighToLow => (nl, nh),
            ParamRole::LatentToLow => (nl, c.low.n_latent),
            ParamRole::LowBias => (nl, 1),
            ParamRole::HighRecurrent => (nh, nh),
            ParamRole::LowToHigh => (nh, nl),
            ParamRole::LatentToHigh => (nh, c.high.n_latent),
            ParamRole::HighBias => (nh, 1),
            ParamRole::Readout => (c.n_outputs(), nl),
            ParamRole::ReadoutBias => (c.n_outputs(), 1),
        }
    }

    fn is_bias(self) -> bool {
        matches!(
            self,
            ParamRole::LowBias | ParamRole::HighBias | ParamRole::ReadoutBias
        )
    }
}

/// All learnable weights of one network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct Parameters<T> {
    config: ModelConfig,
    pub low_rec: Matrix<T>,
    pub high_to_low: Matrix<T>,
    pub latent_to_low: Matrix<T>,
    pub low_bias: Vec<T>,
    pub high_rec: Matrix<T>,
    pub low_to_high: Matrix<T>,
    pub latent_to_high: Matrix<T>,
    pub high_bias: Vec<T>,
    pub readout: Matrix<T>,
    pub readout_bias: Vec<T>,
}

impl<T: Real> Parameters<T> {
    pub fn zeros(config: ModelConfig) -> Self {
        let m = |r: ParamRole| {
            let (a, b) = r.shape(&config);
            Matrix::zeros(a, b)
        };
        let v = |r: ParamRole| vec![T::zero(); r.shape(&config).0];
        Self {
            config,
            low_rec: m(ParamRole::LowRecurrent),
            high_to_low: m(ParamRole::HighToLow),
            latent_to_low: m(ParamRole::LatentToLow),
            low_bias: v(ParamRole::LowBias),
            high_rec: m(ParamRole::HighRecurrent),
            low_to_high: m(ParamRole::LowToHigh),
            latent_to_high: m(ParamRole::LatentToHigh),
            high_bias: v(ParamRole::HighBias),
            readout: m(ParamRole::Readout),
            readout_bias: v(ParamRole::ReadoutBias),
        }
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    /// Updates the meta-prior weights. They scale the loss only, so shapes are unaffected.
    pub fn set_meta_prior(&mut self, w_high: f64, w_low: f64) {
        self.config.high.w = w_high;
        self.config.low.w = w_low;
    }

    fn matrix(&self, role: ParamRole) -> Option<&Matrix<T>> {
        Some(match role {
            ParamRole::LowRecurrent => &self.low_rec,
            ParamRole::HighToLow => &self.high_to_low,
            ParamRole::LatentToLow => &self.latent_to_low,
            ParamRole::HighRecurrent => &self.high_rec,
            ParamRole::LowToHigh => &self.low_to_high,
            ParamRole::LatentToHigh => &self.latent_to_high,
            ParamRole::Readout => &self.readout,
            _ => return None,
        })
    }

    pub fn tensor(&self, role: ParamRole) -> &[T] {
        match role {
            ParamRole::LowBias => &self.low_bias,
            ParamRole::HighBias => &self.high_bias,
            ParamRole::ReadoutBias => &self.readout_bias,
            r => self.matrix(r).expect("matrix role").as_slice(),
        }
    }

    /// Every tensor as a flat slice, in `ParamRole::ALL` order.
    pub fn slices(&self) -> Vec<&[T]> {
        ParamRole::ALL.iter().map(|&r| self.tensor(r)).collect()
    }

    pub fn slices_mut(&mut self) -> Vec<&mut [T]> {
        vec![
            self.low_rec.as_mut_slice(),
            self.high_to_low.as_mut_slice(),
            self.latent_to_low.as_mut_slice(),
            &mut self.low_bias,
            self.high_rec.as_mut_slice(),
            self.low_to_high.as_mut_slice(),
            self.latent_to_high.as_mut_slice(),
            &mut self.high_bias,
            self.readout.as_mut_slice(),
            &mut self.readout_bias,
        ]
    }

    pub fn len(&self) -> usize {
        self.slices().iter().map(|s| s.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn flatten(&self) -> Vec<T> {
        self.slices().concat()
    }

    pub fn assign_flat(&mut self, flat: &[T]) {
        assert_eq!(flat.len(), self.len());
        let mut off = 0;
        for s in self.slices_mut() {
            s.copy_from_slice(&flat[off..off + s.len()]);
            off += s.len();
        }
    }

    /// Checks every tensor against the shape implied by the config and that all entries are finite.
    pub fn audit(&self) -> Result<(), ModelError> {
        self.config.validate()?;
        for role in ParamRole::ALL {
            let (r, c) = role.shape(&self.config);
            match self.matrix(role) {
                Some(m) => {
                    check_len(role.name(), r, m.rows())?;
                    check_len(role.name(), c, m.cols())?;
                }
                None => check_len(role.name(), r, self.tensor(role).len())?,
            }
            if self.tensor(role).iter().any(|v| !v.is_finite()) {
                return Err(ModelError::Config(format!(
                    "non-finite entry in {}",
                    role.name()
                )));
            }
        }
        Ok(())
    }

    /// Hash over the exact bit patterns of every weight.
    pub fn fingerprint(&self) -> u64 {
        let mut h = DefaultHasher::new();
        for s in self.slices() {
            for v in s {
                h.write_u64(v.as_f64().to_bits());
            }
        }
        h.finish()
    }

    pub fn sq_norm(&self) -> T {
        self.slices()
            .iter()
            .flat_map(|s| s.iter())
            .map(|&v| v * v)
            .sum()
    }
}

/// Weights uniform in `[-1/sqrt(fan_in), 1/sqrt(fan_in)]` with `fan_in` the
/// matrix column count; biases zero.
pub fn init_parameters<T: Real>(
    config: &ModelConfig,
    rng: &mut RngStream,
) -> Result<Parameters<T>, ModelError> {
    config.validate()?;
    let mut p = Parameters::zeros(*config);
    for (role, slice) in ParamRole::ALL.iter().zip(p.slices_mut()) {
        if role.is_bias() {
            continue;
        }
        let fan_in = role.shape(config).1;
        if fan_in == 0 {
            continue;
        }
        let bound = T::one() / T::of_usize(fan_in).sqrt();
        for v in slice.iter_mut() {
            *v = rng.uniform(-bound, bound);
        }
    }
    p.audit()?;
    Ok(p)
}
