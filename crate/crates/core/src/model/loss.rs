use serde::{Deserialize, Serialize};

use super::forward::{sample_latent, unroll, NetState, Trace};
use super::{check_len, LatentNoise, LatentPosterior, ModelError, Parameters, Sequence};
use crate::scalar::Real;

/// Which output streams contribute prediction error.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StreamMask {
    pub proprio: bool,
    pub extero: bool,
}

impl StreamMask {
    pub const BOTH: StreamMask = StreamMask {
        proprio: true,
        extero: true,
    };
    pub const EXTERO: StreamMask = StreamMask {
        proprio: false,
        extero: true,
    };
    pub const PROPRIO: StreamMask = StreamMask {
        proprio: true,
        extero: false,
    };
}

impl Default for StreamMask {
    fn default() -> Self {
        Self::BOTH
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct LossBreakdown<T> {
    pub pe_proprio: T,
    pub pe_extero: T,
    pub kl_high: T,
    pub kl_low: T,
    pub total: T,
}

impl<T: Real> LossBreakdown<T> {
    /// Assembles the breakdown; `total = pe_proprio + pe_extero + w_high*kl_high + w_low*kl_low`.
    pub fn compose(pe_proprio: T, pe_extero: T, kl_high: T, kl_low: T, w_high: T, w_low: T) -> Self {
        let total = pe_proprio + pe_extero + w_high * kl_high + w_low * kl_low;
        let out = Self {
            pe_proprio,
            pe_extero,
            kl_high,
            kl_low,
            total,
        };
        debug_assert!(
            !total.is_finite() || out.identity_residual(w_high, w_low) <= T::of(1e-12),
            "loss identity violated"
        );
        out
    }

    pub fn zero() -> Self {
        Self::compose(T::zero(), T::zero(), T::zero(), T::zero(), T::zero(), T::zero())
    }

    pub fn pe(&self) -> T {
        self.pe_proprio + self.pe_extero
    }

    /// `|total - (pe + w·kl)|`, zero up to rounding for every well-formed breakdown.
    pub fn identity_residual(&self, w_high: T, w_low: T) -> T {
        (self.total - (self.pe_proprio + self.pe_extero + w_high * self.kl_high + w_low * self.kl_low))
            .abs()
    }

    /// Mean over breakdowns; the identity is re-established from the averaged parts.
    pub fn mean(items: &[Self], w_high: T, w_low: T) -> Self {
        if items.is_empty() {
            return Self::zero();
        }
        let n = T::of_usize(items.len());
        let avg = |f: fn(&Self) -> T| items.iter().map(f).sum::<T>() / n;
        Self::compose(
            avg(|l| l.pe_proprio),
            avg(|l| l.pe_extero),
            avg(|l| l.kl_high),
            avg(|l| l.kl_low),
            w_high,
            w_low,
        )
    }
}

/// Closed-form `KL(N(mu, sigma^2) || N(0, 1))` summed over coordinates.
pub fn kl_unit_gaussian<T: Real>(mu: &[T], log_sigma: &[T]) -> T {
    assert_eq!(mu.len(), log_sigma.len());
    let half = T::of(0.5);
    let two = T::of(2.0);
    mu.iter()
        .zip(log_sigma)
        .map(|(&m, &s)| half * (m * m + (two * s).exp() - T::one() - two * s))
        .sum()
}

/// Setting for evaluating the loss of a posterior against a target.
#[derive(Debug, Clone, Copy)]
pub struct Objective<'a, T> {
    /// State before the first step.
    pub init: &'a NetState<T>,
    /// Reparameterization noise; `None` propagates posterior means.
    pub noise: Option<&'a LatentNoise<T>>,
    pub mask: StreamMask,
}

pub(crate) fn latents<T: Real>(
    posterior: &LatentPosterior<T>,
    noise: Option<&LatentNoise<T>>,
) -> Result<(Vec<T>, Vec<T>), ModelError> {
    match noise {
        None => Ok((posterior.high.mu.clone(), posterior.low.mu.clone())),
        Some(eps) => {
            check_len("high noise", posterior.high.mu.len(), eps.high.len())?;
            check_len("low noise", posterior.low.mu.len(), eps.low.len())?;
            Ok((
                sample_latent(&posterior.high.mu, &posterior.high.log_sigma, &eps.high),
                sample_latent(&posterior.low.mu, &posterior.low.log_sigma, &eps.low),
            ))
        }
    }
}

pub(crate) fn check_target<T: Real>(
    params: &Parameters<T>,
    posterior: &LatentPosterior<T>,
    target: &Sequence<T>,
) -> Result<(), ModelError> {
    let c = params.config();
    check_len("target dof", c.dof, target.dof)?;
    check_len("high posterior width", c.high.n_latent, posterior.high.n_latent)?;
    check_len("low posterior width", c.low.n_latent, posterior.low.n_latent)?;
    if posterior.horizon() != target.len() {
        return Err(ModelError::Horizon {
            posterior: posterior.horizon(),
            target: target.len(),
        });
    }
    Ok(())
}

/// `1 / (steps * width)`, or zero when the product is zero.
pub(crate) fn norm<T: Real>(steps: usize, width: usize) -> T {
    if steps * width == 0 {
        T::zero()
    } else {
        T::one() / T::of_usize(steps * width)
    }
}

pub(crate) fn breakdown_from_trace<T: Real>(
    params: &Parameters<T>,
    posterior: &LatentPosterior<T>,
    target: &Sequence<T>,
    trace: &Trace<T>,
    mask: StreamMask,
) -> LossBreakdown<T> {
    let c = params.config();
    let steps = target.len();
    let half = T::of(0.5);
    let mut sse_p = T::zero();
    let mut sse_x = T::zero();
    for t in 0..steps {
        let y = trace.y_at(t);
        for (&pred, &obs) in y[..c.dof].iter().zip(target.proprio_at(t)) {
            sse_p += (pred - obs) * (pred - obs);
        }
        for (&pred, &obs) in y[c.dof..].iter().zip(target.extero_at(t)) {
            sse_x += (pred - obs) * (pred - obs);
        }
    }
    let pe_norm = norm::<T>(steps, c.dof);
    let pe_p = if mask.proprio { half * sse_p * pe_norm } else { T::zero() };
    let pe_x = if mask.extero { half * sse_x * pe_norm } else { T::zero() };
    let kl_h = kl_unit_gaussian(&posterior.high.mu, &posterior.high.log_sigma)
        * norm(steps, c.high.n_latent);
    let kl_l = kl_unit_gaussian(&posterior.low.mu, &posterior.low.log_sigma)
        * norm(steps, c.low.n_latent);
    LossBreakdown::compose(pe_p, pe_x, kl_h, kl_l, T::of(c.high.w), T::of(c.low.w))
}

pub(crate) fn evaluate<T: Real>(
    params: &Parameters<T>,
    posterior: &LatentPosterior<T>,
    target: &Sequence<T>,
    obj: &Objective<'_, T>,
) -> Result<(Trace<T>, LossBreakdown<T>), ModelError> {
    check_target(params, posterior, target)?;
    let (zh, zl) = latents(posterior, obj.noise)?;
    let trace = unroll(params, obj.init, target.len(), &zh, &zl)?;
    let loss = breakdown_from_trace(params, posterior, target, &trace, obj.mask);
    Ok((trace, loss))
}

/// Loss of a whole sequence from the zero initial state with fixed noise draws.
///
/// Prediction errors are `0.5 * squared error` averaged over steps and channels;
/// KL terms are averaged over steps and latent units.
pub fn sequence_loss<T: Real>(
    params: &Parameters<T>,
    posterior: &LatentPosterior<T>,
    target: &Sequence<T>,
    eps: &LatentNoise<T>,
) -> Result<LossBreakdown<T>, ModelError> {
    let init = NetState::zeros(params);
    let obj = Objective {
        init: &init,
        noise: Some(eps),
        mask: StreamMask::BOTH,
    };
    evaluate(params, posterior, target, &obj).map(|(_, l)| l)
}

/// Loss of a posterior segment starting from an arbitrary state.
pub fn window_loss<T: Real>(
    params: &Parameters<T>,
    posterior: &LatentPosterior<T>,
    target: &Sequence<T>,
    obj: &Objective<'_, T>,
) -> Result<LossBreakdown<T>, ModelError> {
    evaluate(params, posterior, target, obj).map(|(_, l)| l)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{init_parameters, LayerConfig, ModelConfig};
    use crate::numerics::derive_stream;

    #[test]
    fn kl_examples() {
        assert_eq!(kl_unit_gaussian(&[0.0], &[0.0]), 0.0);
        assert_eq!(kl_unit_gaussian(&[1.0], &[0.0]), 0.5);
        let v = kl_unit_gaussian(&[0.0], &[2.0_f64.ln()]);
        assert!((v - 0.5 * (4.0 - 1.0 - 4.0_f64.ln())).abs() < 1e-15);
        assert!((v - 0.80685).abs() < 1e-5);
    }

    #[test]
    fn kl_nonnegative_and_zero_only_at_prior() {
        let mut rng = derive_stream(2, 0);
        for _ in 0..1000 {
            let m: f64 = rng.uniform(-3.0, 3.0);
            let s: f64 = rng.uniform(-10.0, 5.0);
            assert!(kl_unit_gaussian(&[m], &[s]) > 0.0);
        }
    }

    fn one_dof_config() -> ModelConfig {
        let l = LayerConfig {
            n_units: 1,
            tau: 1.0,
            n_latent: 1,
            w: 0.0,
        };
        ModelConfig {
            high: LayerConfig { tau: 2.0, ..l },
            low: l,
            dof: 1,
        }
    }

    #[test]
    fn single_step_arithmetic() {
        let c = one_dof_config();
        let p: Parameters<f64> = Parameters::zeros(c);
        let post = LatentPosterior::prior(&c, 1);
        let target = Sequence::from_streams(1, vec![0.5], vec![0.0]);
        let l = sequence_loss(&p, &post, &target, &LatentNoise::zeros(&c, 1)).unwrap();
        assert_eq!(l.total, 0.125);
        assert_eq!(l.pe_proprio, 0.125);
        assert_eq!(l.pe_extero, 0.0);
    }

    #[test]
    fn perfect_model_zero_loss() {
        let c = one_dof_config();
        let mut p: Parameters<f64> = Parameters::zeros(c);
        p.readout_bias = vec![0.3, -0.2];
        let post = LatentPosterior::prior(&c, 4);
        let target = Sequence::from_streams(1, vec![0.3_f64.tanh(); 4], vec![(-0.2_f64).tanh(); 4]);
        let l = sequence_loss(&p, &post, &target, &LatentNoise::zeros(&c, 4)).unwrap();
        assert_eq!(l.total, 0.0);
    }

    #[test]
    fn horizon_mismatch() {
        let c = one_dof_config();
        let p: Parameters<f64> = Parameters::zeros(c);
        let post = LatentPosterior::prior(&c, 3);
        let target = Sequence::from_streams(1, vec![0.0; 2], vec![0.0; 2]);
        let err = sequence_loss(&p, &post, &target, &LatentNoise::zeros(&c, 3)).unwrap_err();
        assert!(matches!(err, ModelError::Horizon { posterior: 3, target: 2 }));
    }

    #[test]
    fn zero_weight_zero_noise_ignores_seed() {
        let c = ModelConfig::default();
        let p: Parameters<f64> = init_parameters(&c, &mut derive_stream(4, 0)).unwrap();
        let mut post = LatentPosterior::prior(&c, 5);
        for v in post.low.mu.iter_mut() {
            *v = 0.3;
        }
        let target = Sequence::from_streams(6, vec![0.1; 30], vec![-0.1; 30]);
        let zero = LatentNoise::zeros(&c, 5);
        let a = sequence_loss(&p, &post, &target, &zero).unwrap();
        let b = sequence_loss(&p, &post, &target, &zero).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn mean_keeps_identity() {
        let items = [
            LossBreakdown::<f64>::compose(0.1, 0.2, 1.0, 2.0, 0.01, 0.001),
            LossBreakdown::compose(0.3, 0.1, 0.5, 0.7, 0.01, 0.001),
        ];
        let m = LossBreakdown::mean(&items, 0.01, 0.001);
        assert!(m.identity_residual(0.01, 0.001) <= 1e-12);
        assert!((m.pe_proprio - 0.2).abs() < 1e-15);
    }
}
