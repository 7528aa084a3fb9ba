use super::{check_len, ModelError, Parameters};
use crate::scalar::Real;

/// Membrane potential and activation of one context layer; `h = tanh(u)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerState<T> {
    pub u: Vec<T>,
    pub h: Vec<T>,
}

impl<T: Real> LayerState<T> {
    pub fn zeros(n: usize) -> Self {
        Self {
            u: vec![T::zero(); n],
            h: vec![T::zero(); n],
        }
    }

    pub fn from_potential(u: Vec<T>) -> Self {
        let h = u.iter().map(|v| v.tanh()).collect();
        Self { u, h }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetState<T> {
    pub high: LayerState<T>,
    pub low: LayerState<T>,
}

impl<T: Real> NetState<T> {
    pub fn zeros<P>(params: &Parameters<P>) -> Self
    where
        P: Real,
    {
        let c = params.config();
        Self {
            high: LayerState::zeros(c.high.n_units),
            low: LayerState::zeros(c.low.n_units),
        }
    }
}

/// One step of predictions, both streams bounded to [-1, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutput<T> {
    pub proprio: Vec<T>,
    pub extero: Vec<T>,
}

/// Reparameterized draw `z = mu + exp(log_sigma) * eps`.
pub fn sample_latent<T: Real>(mu: &[T], log_sigma: &[T], eps: &[T]) -> Vec<T> {
    assert_eq!(mu.len(), log_sigma.len());
    assert_eq!(mu.len(), eps.len());
    mu.iter()
        .zip(log_sigma)
        .zip(eps)
        .map(|((&m, &s), &e)| m + s.exp() * e)
        .collect()
}

struct StepIo<'a, T> {
    prev_u_high: &'a [T],
    prev_h_high: &'a [T],
    prev_u_low: &'a [T],
    prev_h_low: &'a [T],
    z_high: &'a [T],
    z_low: &'a [T],
}

struct StepOut<'a, T> {
    u_high: &'a mut [T],
    h_high: &'a mut [T],
    u_low: &'a mut [T],
    h_low: &'a mut [T],
    y: &'a mut [T],
}

fn leaky_update<T: Real>(tau: f64, prev_u: &[T], drive: &[T], u: &mut [T], h: &mut [T]) {
    let inv_tau = T::one() / T::of(tau);
    let leak = T::one() - inv_tau;
    for i in 0..u.len() {
        u[i] = leak * prev_u[i] + inv_tau * drive[i];
        h[i] = u[i].tanh();
    }
}

fn step_core<T: Real>(p: &Parameters<T>, io: StepIo<'_, T>, out: StepOut<'_, T>) {
    let c = p.config();
    let mut drive_low = p.low_bias.clone();
    p.low_rec.gemv_acc(io.prev_h_low, &mut drive_low);
    p.high_to_low.gemv_acc(io.prev_h_high, &mut drive_low);
    p.latent_to_low.gemv_acc(io.z_low, &mut drive_low);

    let mut drive_high = p.high_bias.clone();
    p.high_rec.gemv_acc(io.prev_h_high, &mut drive_high);
    p.low_to_high.gemv_acc(io.prev_h_low, &mut drive_high);
    p.latent_to_high.gemv_acc(io.z_high, &mut drive_high);

    leaky_update(c.low.tau, io.prev_u_low, &drive_low, out.u_low, out.h_low);
    leaky_update(c.high.tau, io.prev_u_high, &drive_high, out.u_high, out.h_high);

    out.y.copy_from_slice(&p.readout_bias);
    p.readout.gemv_acc(out.h_low, out.y);
    for v in out.y.iter_mut() {
        *v = v.tanh();
    }
}

/// One leaky-integrator step of both layers followed by the readout.
///
/// ```text
/// u_t = (1 - 1/tau) u_{t-1} + (1/tau) (W_rec h_{t-1} + W_adj h'_{t-1} + W_z z_t + b)
/// h_t = tanh(u_t)
/// y_t = tanh(W_out h_t^low + b_out)
/// ```
pub fn forward_step<T: Real>(
    params: &Parameters<T>,
    prev_high: &LayerState<T>,
    prev_low: &LayerState<T>,
    z_high: &[T],
    z_low: &[T],
) -> Result<(LayerState<T>, LayerState<T>, StepOutput<T>), ModelError> {
    let c = params.config();
    check_len("high state", c.high.n_units, prev_high.u.len())?;
    check_len("high state", c.high.n_units, prev_high.h.len())?;
    check_len("low state", c.low.n_units, prev_low.u.len())?;
    check_len("low state", c.low.n_units, prev_low.h.len())?;
    check_len("high latent", c.high.n_latent, z_high.len())?;
    check_len("low latent", c.low.n_latent, z_low.len())?;

    let mut high = LayerState::zeros(c.high.n_units);
    let mut low = LayerState::zeros(c.low.n_units);
    let mut y = vec![T::zero(); c.n_outputs()];
    step_core(
        params,
        StepIo {
            prev_u_high: &prev_high.u,
            prev_h_high: &prev_high.h,
            prev_u_low: &prev_low.u,
            prev_h_low: &prev_low.h,
            z_high,
            z_low,
        },
        StepOut {
            u_high: &mut high.u,
            h_high: &mut high.h,
            u_low: &mut low.u,
            h_low: &mut low.h,
            y: &mut y,
        },
    );
    let extero = y.split_off(c.dof);
    Ok((high, low, StepOutput { proprio: y, extero }))
}

/// Recorded activity of an unroll: states at indices `0..=steps` (index 0 is
/// the initial state), latents and outputs at `0..steps`.
#[derive(Debug, Clone)]
pub struct Trace<T> {
    pub steps: usize,
    pub n_high: usize,
    pub n_low: usize,
    pub n_out: usize,
    pub u_high: Vec<T>,
    pub h_high: Vec<T>,
    pub u_low: Vec<T>,
    pub h_low: Vec<T>,
    pub z_high: Vec<T>,
    pub z_low: Vec<T>,
    pub y: Vec<T>,
}

impl<T: Real> Trace<T> {
    pub fn h_high_at(&self, i: usize) -> &[T] {
        &self.h_high[i * self.n_high..(i + 1) * self.n_high]
    }

    pub fn h_low_at(&self, i: usize) -> &[T] {
        &self.h_low[i * self.n_low..(i + 1) * self.n_low]
    }

    pub fn y_at(&self, t: usize) -> &[T] {
        &self.y[t * self.n_out..(t + 1) * self.n_out]
    }

    pub fn output_at(&self, t: usize) -> StepOutput<T> {
        let y = self.y_at(t);
        let d = self.n_out / 2;
        StepOutput {
            proprio: y[..d].to_vec(),
            extero: y[d..].to_vec(),
        }
    }

    /// Network state after `i` steps.
    pub fn state_at(&self, i: usize) -> NetState<T> {
        let (nh, nl) = (self.n_high, self.n_low);
        NetState {
            high: LayerState {
                u: self.u_high[i * nh..(i + 1) * nh].to_vec(),
                h: self.h_high[i * nh..(i + 1) * nh].to_vec(),
            },
            low: LayerState {
                u: self.u_low[i * nl..(i + 1) * nl].to_vec(),
                h: self.h_low[i * nl..(i + 1) * nl].to_vec(),
            },
        }
    }

    pub fn final_state(&self) -> NetState<T> {
        self.state_at(self.steps)
    }
}

/// Runs `steps` forward steps from `init` with the given step-major latents.
pub fn unroll<T: Real>(
    params: &Parameters<T>,
    init: &NetState<T>,
    steps: usize,
    z_high: &[T],
    z_low: &[T],
) -> Result<Trace<T>, ModelError> {
    let c = params.config();
    let (nh, nl, no) = (c.high.n_units, c.low.n_units, c.n_outputs());
    let (zh, zl) = (c.high.n_latent, c.low.n_latent);
    check_len("initial high state", nh, init.high.u.len())?;
    check_len("initial low state", nl, init.low.u.len())?;
    check_len("high latents", zh * steps, z_high.len())?;
    check_len("low latents", zl * steps, z_low.len())?;

    let mut tr = Trace {
        steps,
        n_high: nh,
        n_low: nl,
        n_out: no,
        u_high: vec![T::zero(); (steps + 1) * nh],
        h_high: vec![T::zero(); (steps + 1) * nh],
        u_low: vec![T::zero(); (steps + 1) * nl],
        h_low: vec![T::zero(); (steps + 1) * nl],
        z_high: z_high.to_vec(),
        z_low: z_low.to_vec(),
        y: vec![T::zero(); steps * no],
    };
    tr.u_high[..nh].copy_from_slice(&init.high.u);
    tr.h_high[..nh].copy_from_slice(&init.high.h);
    tr.u_low[..nl].copy_from_slice(&init.low.u);
    tr.h_low[..nl].copy_from_slice(&init.low.h);

    for t in 0..steps {
        let (uh_prev, uh_next) = tr.u_high.split_at_mut((t + 1) * nh);
        let (hh_prev, hh_next) = tr.h_high.split_at_mut((t + 1) * nh);
        let (ul_prev, ul_next) = tr.u_low.split_at_mut((t + 1) * nl);
        let (hl_prev, hl_next) = tr.h_low.split_at_mut((t + 1) * nl);
        step_core(
            params,
            StepIo {
                prev_u_high: &uh_prev[t * nh..],
                prev_h_high: &hh_prev[t * nh..],
                prev_u_low: &ul_prev[t * nl..],
                prev_h_low: &hl_prev[t * nl..],
                z_high: &z_high[t * zh..(t + 1) * zh],
                z_low: &z_low[t * zl..(t + 1) * zl],
            },
            StepOut {
                u_high: &mut uh_next[..nh],
                h_high: &mut hh_next[..nh],
                u_low: &mut ul_next[..nl],
                h_low: &mut hl_next[..nl],
                y: &mut tr.y[t * no..(t + 1) * no],
            },
        );
    }
    Ok(tr)
}
