use serde::{Deserialize, Serialize};

use super::ModelConfig;
use crate::numerics::RngStream;
use crate::scalar::Real;

pub const LOG_SIGMA_MIN: f64 = -10.0;
pub const LOG_SIGMA_MAX: f64 = 5.0;

/// Per-step Gaussian posterior of one layer's latents, stored step-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct LayerPosterior<T> {
    pub n_latent: usize,
    pub mu: Vec<T>,
    pub log_sigma: Vec<T>,
}

impl<T: Real> LayerPosterior<T> {
    pub fn prior(n_latent: usize, horizon: usize) -> Self {
        Self {
            n_latent,
            mu: vec![T::zero(); n_latent * horizon],
            log_sigma: vec![T::zero(); n_latent * horizon],
        }
    }

    pub fn horizon(&self) -> usize {
        if self.n_latent == 0 {
            0
        } else {
            self.mu.len() / self.n_latent
        }
    }

    pub fn mu_at(&self, t: usize) -> &[T] {
        &self.mu[t * self.n_latent..(t + 1) * self.n_latent]
    }

    pub fn log_sigma_at(&self, t: usize) -> &[T] {
        &self.log_sigma[t * self.n_latent..(t + 1) * self.n_latent]
    }

    pub fn clamp(&mut self) {
        let (lo, hi) = (T::of(LOG_SIGMA_MIN), T::of(LOG_SIGMA_MAX));
        for v in &mut self.log_sigma {
            *v = v.max(lo).min(hi);
        }
    }
}

/// Adaptive posterior over both layers' latents for steps `1..=horizon`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct LatentPosterior<T> {
    pub high: LayerPosterior<T>,
    pub low: LayerPosterior<T>,
    horizon: usize,
}

impl<T: Real> LatentPosterior<T> {
    /// Posterior initialized at the prior: mu = 0, log_sigma = 0.
    pub fn prior(config: &ModelConfig, horizon: usize) -> Self {
        Self {
            high: LayerPosterior::prior(config.high.n_latent, horizon),
            low: LayerPosterior::prior(config.low.n_latent, horizon),
            horizon,
        }
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn clamp(&mut self) {
        self.high.clamp();
        self.low.clamp();
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            high: LayerPosterior::prior(self.high.n_latent, self.horizon),
            low: LayerPosterior::prior(self.low.n_latent, self.horizon),
            horizon: self.horizon,
        }
    }

    /// Appends one step with the given means and log_sigma = 0.
    pub fn push_step(&mut self, mu_high: &[T], mu_low: &[T]) {
        assert_eq!(mu_high.len(), self.high.n_latent);
        assert_eq!(mu_low.len(), self.low.n_latent);
        self.high.mu.extend_from_slice(mu_high);
        self.high
            .log_sigma
            .extend(std::iter::repeat_n(T::zero(), mu_high.len()));
        self.low.mu.extend_from_slice(mu_low);
        self.low
            .log_sigma
            .extend(std::iter::repeat_n(T::zero(), mu_low.len()));
        self.horizon += 1;
    }

    /// Removes the oldest step, returning its (mu_high, mu_low).
    pub fn pop_front(&mut self) -> (Vec<T>, Vec<T>) {
        assert!(self.horizon > 0, "pop_front on empty posterior");
        let (nh, nl) = (self.high.n_latent, self.low.n_latent);
        let mh: Vec<T> = self.high.mu.drain(..nh).collect();
        self.high.log_sigma.drain(..nh);
        let ml: Vec<T> = self.low.mu.drain(..nl).collect();
        self.low.log_sigma.drain(..nl);
        self.horizon -= 1;
        (mh, ml)
    }

    pub fn slices(&self) -> [&[T]; 4] {
        [
            &self.high.mu,
            &self.high.log_sigma,
            &self.low.mu,
            &self.low.log_sigma,
        ]
    }

    pub fn slices_mut(&mut self) -> [&mut [T]; 4] {
        [
            &mut self.high.mu,
            &mut self.high.log_sigma,
            &mut self.low.mu,
            &mut self.low.log_sigma,
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

    pub fn max_abs_diff(&self, other: &Self) -> T {
        self.flatten()
            .iter()
            .zip(other.flatten())
            .map(|(&a, b)| (a - b).abs())
            .fold(T::zero(), T::max)
    }
}

/// Fixed reparameterization noise for one unroll, shaped like a posterior.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentNoise<T> {
    pub high: Vec<T>,
    pub low: Vec<T>,
}

impl<T: Real> LatentNoise<T> {
    pub fn zeros(config: &ModelConfig, horizon: usize) -> Self {
        Self {
            high: vec![T::zero(); config.high.n_latent * horizon],
            low: vec![T::zero(); config.low.n_latent * horizon],
        }
    }

    pub fn draw(config: &ModelConfig, horizon: usize, rng: &mut RngStream) -> Self {
        Self {
            high: rng.standard_normal(config.high.n_latent * horizon),
            low: rng.standard_normal(config.low.n_latent * horizon),
        }
    }
}
