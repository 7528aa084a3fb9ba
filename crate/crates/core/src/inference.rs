//! Test-time prediction-error minimization over a sliding window of latent
//! posteriors, with the weights frozen, plus the no-inference generation modes.
//!
//! An agent keeps the posteriors of its last `window` observed steps and the
//! network state at the window's left edge. Each [`AgentState::pem_update`]
//! runs gradient descent on those posteriors only; [`AgentState::generate_next`]
//! replays the window from the entry state with posterior means and predicts
//! one step further.

use std::io::{self, Write};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{
    forward_step, unroll, window_gradients, window_loss, LatentPosterior, LossBreakdown,
    ModelError, NetState, Objective, Parameters, Sequence, StepOutput, StreamMask,
};
use crate::numerics::RngStream;
use crate::scalar::Real;

#[derive(Debug, Error)]
pub enum InferenceError {
    #[error("invalid PEM config: {0}")]
    Config(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PemConfig {
    /// Number of most recent steps whose posteriors are re-optimized.
    pub window: usize,
    /// Gradient iterations per environment step; 0 freezes the posterior.
    pub iterations: usize,
    pub step_size: f64,
    /// Streams whose prediction error drives the update.
    pub streams: StreamMask,
    /// Step-size halvings tried before an iteration is abandoned.
    pub max_halvings: usize,
}

impl Default for PemConfig {
    fn default() -> Self {
        Self {
            window: 10,
            iterations: 30,
            step_size: 30.0,
            streams: StreamMask::BOTH,
            max_halvings: 5,
        }
    }
}

impl PemConfig {
    pub fn validate(&self) -> Result<(), InferenceError> {
        if self.window == 0 {
            return Err(InferenceError::Config("window must be >= 1".into()));
        }
        if !(self.step_size > 0.0 && self.step_size.is_finite()) {
            return Err(InferenceError::Config(format!(
                "step_size must be positive, got {}",
                self.step_size
            )));
        }
        Ok(())
    }
}

/// Outcome of one PEM call.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PemRecord {
    /// Number of observed steps when the update ran.
    pub step: usize,
    /// Windowed prediction error before the first iteration.
    pub pe_initial: f64,
    /// Windowed prediction error after the last accepted iteration.
    pub pe_windowed: f64,
    /// Weighted KL part of the windowed objective after the update.
    pub kl_windowed: f64,
    pub iterations_used: usize,
}

/// One agent in closed loop: frozen weights, window posteriors, entry state and history.
#[derive(Debug, Clone)]
pub struct AgentState<T: Real> {
    params: Arc<Parameters<T>>,
    pem: PemConfig,
    window: LatentPosterior<T>,
    observations: Sequence<T>,
    entry: NetState<T>,
    next_latent: (Vec<T>, Vec<T>),
    retired: LatentPosterior<T>,
    history: Sequence<T>,
    trace: Vec<PemRecord>,
    clock: usize,
}

impl<T: Real> AgentState<T> {
    pub fn new(params: Arc<Parameters<T>>, pem: PemConfig) -> Result<Self, InferenceError> {
        pem.validate()?;
        params.audit()?;
        let c = *params.config();
        Ok(Self {
            window: LatentPosterior::prior(&c, 0),
            observations: Sequence::new(c.dof),
            entry: NetState::zeros(&*params),
            next_latent: (vec![T::zero(); c.high.n_latent], vec![T::zero(); c.low.n_latent]),
            retired: LatentPosterior::prior(&c, 0),
            history: Sequence::new(c.dof),
            trace: Vec::new(),
            clock: 0,
            pem,
            params,
        })
    }

    pub fn params(&self) -> &Parameters<T> {
        &self.params
    }

    pub fn pem_config(&self) -> &PemConfig {
        &self.pem
    }

    /// Number of observed steps.
    pub fn clock(&self) -> usize {
        self.clock
    }

    pub fn window_posterior(&self) -> &LatentPosterior<T> {
        &self.window
    }

    pub fn window_observations(&self) -> &Sequence<T> {
        &self.observations
    }

    /// Network state at step `clock - window_len`.
    pub fn entry_state(&self) -> &NetState<T> {
        &self.entry
    }

    /// Posteriors that have slid out of the window, oldest first.
    pub fn retired_posterior(&self) -> &LatentPosterior<T> {
        &self.retired
    }

    /// Everything observed so far: own executed actions (proprio) and partner (extero).
    pub fn history(&self) -> &Sequence<T> {
        &self.history
    }

    pub fn pe_trace(&self) -> &[PemRecord] {
        &self.trace
    }

    /// Latent used for the next, not yet observed, step; the prior mean unless set.
    pub fn set_next_latent(&mut self, z_high: Vec<T>, z_low: Vec<T>) {
        let c = self.params.config();
        assert_eq!(z_high.len(), c.high.n_latent);
        assert_eq!(z_low.len(), c.low.n_latent);
        self.next_latent = (z_high, z_low);
    }

    fn objective(&self) -> Objective<'_, T> {
        Objective {
            init: &self.entry,
            noise: None,
            mask: self.pem.streams,
        }
    }

    /// Windowed loss of the current posteriors against the window's observations.
    pub fn window_loss(&self) -> LossBreakdown<T> {
        window_loss(&self.params, &self.window, &self.observations, &self.objective())
            .expect("window shapes are consistent by construction")
    }

    /// Re-optimizes the window posteriors by gradient descent with step halving.
    pub fn pem_update(&mut self) -> PemRecord {
        let c = *self.params.config();
        let (w_high, w_low) = (T::of(c.high.w), T::of(c.low.w));
        let kl_part = |l: &LossBreakdown<T>| (w_high * l.kl_high + w_low * l.kl_low).as_f64();

        let start = self.window_loss();
        let mut current = start;
        let mut used = 0;
        if self.clock > 0 {
            for _ in 0..self.pem.iterations {
                let (_, grad, _) = window_gradients(
                    &self.params,
                    &self.window,
                    &self.observations,
                    &self.objective(),
                    false,
                )
                .expect("window shapes are consistent by construction");
                let mut step = T::of(self.pem.step_size);
                let mut accepted = None;
                for _ in 0..=self.pem.max_halvings {
                    let mut candidate = self.window.clone();
                    for (p, g) in candidate.slices_mut().into_iter().zip(grad.slices()) {
                        for (v, &d) in p.iter_mut().zip(g) {
                            *v -= step * d;
                        }
                    }
                    candidate.clamp();
                    let loss = window_loss(
                        &self.params,
                        &candidate,
                        &self.observations,
                        &self.objective(),
                    )
                    .expect("window shapes are consistent by construction");
                    if loss.total <= current.total {
                        accepted = Some((candidate, loss));
                        break;
                    }
                    step = step * T::of(0.5);
                }
                match accepted {
                    Some((candidate, loss)) => {
                        self.window = candidate;
                        current = loss;
                        used += 1;
                    }
                    None => break,
                }
            }
        }
        let record = PemRecord {
            step: self.clock,
            pe_initial: start.pe().as_f64(),
            pe_windowed: current.pe().as_f64(),
            kl_windowed: kl_part(&current),
            iterations_used: used,
        };
        self.trace.push(record);
        record
    }

    /// Replays the window with posterior means and predicts the next step.
    pub fn generate_next(&self) -> StepOutput<T> {
        let n = self.window.horizon();
        let mut zh = self.window.high.mu.clone();
        let mut zl = self.window.low.mu.clone();
        zh.extend_from_slice(&self.next_latent.0);
        zl.extend_from_slice(&self.next_latent.1);
        let trace = unroll(&self.params, &self.entry, n + 1, &zh, &zl)
            .expect("window shapes are consistent by construction");
        trace.output_at(n)
    }

    /// Records the observation of the step just generated and slides the window.
    pub fn observe(&mut self, proprio: &[T], extero: &[T]) {
        self.observations.push(proprio, extero);
        self.history.push(proprio, extero);
        let c = *self.params.config();
        let (zh, zl) = std::mem::replace(
            &mut self.next_latent,
            (vec![T::zero(); c.high.n_latent], vec![T::zero(); c.low.n_latent]),
        );
        self.window.push_step(&zh, &zl);
        self.clock += 1;
        if self.window.horizon() > self.pem.window {
            let leaving_ls_high = self.window.high.log_sigma_at(0).to_vec();
            let leaving_ls_low = self.window.low.log_sigma_at(0).to_vec();
            let (mh, ml) = self.window.pop_front();
            let (high, low, _) = forward_step(&self.params, &self.entry.high, &self.entry.low, &mh, &ml)
                .expect("window shapes are consistent by construction");
            self.entry = NetState { high, low };
            self.retired.push_step(&mh, &ml);
            let r = self.retired.horizon() - 1;
            let (nh, nl) = (c.high.n_latent, c.low.n_latent);
            self.retired.high.log_sigma[r * nh..].copy_from_slice(&leaving_ls_high);
            self.retired.low.log_sigma[r * nl..].copy_from_slice(&leaving_ls_low);
            self.observations.pop_front();
        }
    }
}

/// Generates `steps` outputs with no observations, latents drawn from the unit
/// Gaussian prior (`stochastic`) or fixed at its mean.
pub fn prior_rollout<T: Real>(
    params: &Parameters<T>,
    steps: usize,
    rng: &mut RngStream,
    stochastic: bool,
) -> Vec<StepOutput<T>> {
    let c = params.config();
    let (zh, zl) = if stochastic {
        (
            rng.standard_normal(c.high.n_latent * steps),
            rng.standard_normal(c.low.n_latent * steps),
        )
    } else {
        (
            vec![T::zero(); c.high.n_latent * steps],
            vec![T::zero(); c.low.n_latent * steps],
        )
    };
    let trace = unroll(params, &NetState::zeros(params), steps, &zh, &zl)
        .expect("latent shapes follow the config");
    (0..steps).map(|t| trace.output_at(t)).collect()
}

/// Writes a PEM trace as CSV: `step,pe_windowed,kl_windowed,iterations_used`.
pub fn write_pem_trace<W: Write>(mut out: W, records: &[PemRecord]) -> io::Result<()> {
    writeln!(out, "step,pe_windowed,kl_windowed,iterations_used")?;
    for r in records {
        writeln!(
            out,
            "{},{:e},{:e},{}",
            r.step, r.pe_windowed, r.kl_windowed, r.iterations_used
        )?;
    }
    Ok(())
}
