use super::forward::{NetState, Trace};
use super::loss::{evaluate, norm, Objective, StreamMask};
use super::{LatentNoise, LatentPosterior, LossBreakdown, ModelError, Parameters, Sequence};
use crate::scalar::Real;

/// Exact gradients of `LossBreakdown::total`.
#[derive(Debug, Clone)]
pub struct Gradients<T> {
    pub params: Parameters<T>,
    pub posterior: LatentPosterior<T>,
    pub loss: LossBreakdown<T>,
}

/// Reverse-mode gradients through the unroll and the reparameterization, with
/// the noise draws held fixed.
pub fn bptt_gradients<T: Real>(
    params: &Parameters<T>,
    posterior: &LatentPosterior<T>,
    target: &Sequence<T>,
    eps: &LatentNoise<T>,
) -> Result<Gradients<T>, ModelError> {
    let init = NetState::zeros(params);
    let obj = Objective {
        init: &init,
        noise: Some(eps),
        mask: StreamMask::BOTH,
    };
    let (trace, loss) = evaluate(params, posterior, target, &obj)?;
    let (gp, gq) = backward(params, posterior, target, &obj, &trace, true);
    Ok(Gradients {
        params: gp.expect("parameter gradients requested"),
        posterior: gq,
        loss,
    })
}

/// Posterior gradients (and optionally weight gradients) for a segment starting
/// at `obj.init`.
pub fn window_gradients<T: Real>(
    params: &Parameters<T>,
    posterior: &LatentPosterior<T>,
    target: &Sequence<T>,
    obj: &Objective<'_, T>,
    with_params: bool,
) -> Result<(Option<Parameters<T>>, LatentPosterior<T>, LossBreakdown<T>), ModelError> {
    let (trace, loss) = evaluate(params, posterior, target, obj)?;
    let (gp, gq) = backward(params, posterior, target, obj, &trace, with_params);
    Ok((gp, gq, loss))
}

fn backward<T: Real>(
    p: &Parameters<T>,
    posterior: &LatentPosterior<T>,
    target: &Sequence<T>,
    obj: &Objective<'_, T>,
    tr: &Trace<T>,
    with_params: bool,
) -> (Option<Parameters<T>>, LatentPosterior<T>) {
    let c = p.config();
    let steps = target.len();
    let (nh, nl, dof) = (c.high.n_units, c.low.n_units, c.dof);
    let (zh, zl) = (c.high.n_latent, c.low.n_latent);
    let one = T::one();

    let mut gp = with_params.then(|| Parameters::zeros(*c));
    let mut gq = posterior.zeros_like();

    let pe_scale: T = norm(steps, dof);
    let scale_p = if obj.mask.proprio { pe_scale } else { T::zero() };
    let scale_x = if obj.mask.extero { pe_scale } else { T::zero() };
    let kl_h: T = T::of(c.high.w) * norm(steps, zh);
    let kl_l: T = T::of(c.low.w) * norm(steps, zl);
    let inv_tau_l = one / T::of(c.low.tau);
    let inv_tau_h = one / T::of(c.high.tau);
    let leak_l = one - inv_tau_l;
    let leak_h = one - inv_tau_h;

    // Gradient reaching h_{t+1} through step t+2's synaptic input, and the
    // leak-carried gradient of u_{t+1}.
    let mut dh_low_next = vec![T::zero(); nl];
    let mut dh_high_next = vec![T::zero(); nh];
    let mut du_low_next = vec![T::zero(); nl];
    let mut du_high_next = vec![T::zero(); nh];

    let mut dpre = vec![T::zero(); 2 * dof];
    let mut du_low = vec![T::zero(); nl];
    let mut du_high = vec![T::zero(); nh];
    let mut da_low = vec![T::zero(); nl];
    let mut da_high = vec![T::zero(); nh];
    let mut dz_low = vec![T::zero(); zl];
    let mut dz_high = vec![T::zero(); zh];

    for t in (0..steps).rev() {
        let y = tr.y_at(t);
        let (tp, tx) = (target.proprio_at(t), target.extero_at(t));
        for k in 0..2 * dof {
            let (obs, s) = if k < dof {
                (tp[k], scale_p)
            } else {
                (tx[k - dof], scale_x)
            };
            dpre[k] = (y[k] - obs) * s * (one - y[k] * y[k]);
        }

        let h_low = tr.h_low_at(t + 1);
        let h_high = tr.h_high_at(t + 1);
        let h_low_prev = tr.h_low_at(t);
        let h_high_prev = tr.h_high_at(t);

        let mut dh_low = dh_low_next.clone();
        p.readout.gemv_t_acc(&dpre, &mut dh_low);
        for i in 0..nl {
            du_low[i] = dh_low[i] * (one - h_low[i] * h_low[i]) + leak_l * du_low_next[i];
            da_low[i] = du_low[i] * inv_tau_l;
        }
        for i in 0..nh {
            du_high[i] =
                dh_high_next[i] * (one - h_high[i] * h_high[i]) + leak_h * du_high_next[i];
            da_high[i] = du_high[i] * inv_tau_h;
        }

        let z_low_t = &tr.z_low[t * zl..(t + 1) * zl];
        let z_high_t = &tr.z_high[t * zh..(t + 1) * zh];
        if let Some(g) = gp.as_mut() {
            g.readout.outer_acc(&dpre, h_low);
            for (b, &d) in g.readout_bias.iter_mut().zip(&dpre) {
                *b += d;
            }
            g.low_rec.outer_acc(&da_low, h_low_prev);
            g.high_to_low.outer_acc(&da_low, h_high_prev);
            g.latent_to_low.outer_acc(&da_low, z_low_t);
            for (b, &d) in g.low_bias.iter_mut().zip(&da_low) {
                *b += d;
            }
            g.high_rec.outer_acc(&da_high, h_high_prev);
            g.low_to_high.outer_acc(&da_high, h_low_prev);
            g.latent_to_high.outer_acc(&da_high, z_high_t);
            for (b, &d) in g.high_bias.iter_mut().zip(&da_high) {
                *b += d;
            }
        }

        dz_low.iter_mut().for_each(|v| *v = T::zero());
        dz_high.iter_mut().for_each(|v| *v = T::zero());
        p.latent_to_low.gemv_t_acc(&da_low, &mut dz_low);
        p.latent_to_high.gemv_t_acc(&da_high, &mut dz_high);
        reparam_grads(
            &mut gq.low,
            &posterior.low,
            obj.noise.map(|e| &e.low[t * zl..(t + 1) * zl]),
            t,
            &dz_low,
            kl_l,
        );
        reparam_grads(
            &mut gq.high,
            &posterior.high,
            obj.noise.map(|e| &e.high[t * zh..(t + 1) * zh]),
            t,
            &dz_high,
            kl_h,
        );

        dh_low_next.iter_mut().for_each(|v| *v = T::zero());
        dh_high_next.iter_mut().for_each(|v| *v = T::zero());
        p.low_rec.gemv_t_acc(&da_low, &mut dh_low_next);
        p.low_to_high.gemv_t_acc(&da_high, &mut dh_low_next);
        p.high_to_low.gemv_t_acc(&da_low, &mut dh_high_next);
        p.high_rec.gemv_t_acc(&da_high, &mut dh_high_next);
        du_low_next.copy_from_slice(&du_low);
        du_high_next.copy_from_slice(&du_high);
    }
    (gp, gq)
}

/// Chain rule through `z = mu + exp(log_sigma) * eps` plus the weighted KL term.
fn reparam_grads<T: Real>(
    grad: &mut super::LayerPosterior<T>,
    post: &super::LayerPosterior<T>,
    eps: Option<&[T]>,
    t: usize,
    dz: &[T],
    kl_weight: T,
) {
    let n = post.n_latent;
    let two = T::of(2.0);
    for i in 0..n {
        let k = t * n + i;
        let (mu, ls) = (post.mu[k], post.log_sigma[k]);
        grad.mu[k] = dz[i] + kl_weight * mu;
        let through_noise = match eps {
            Some(e) => dz[i] * ls.exp() * e[i],
            None => T::zero(),
        };
        grad.log_sigma[k] = through_noise + kl_weight * ((two * ls).exp() - T::one());
    }
}
