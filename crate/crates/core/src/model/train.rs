use serde::{Deserialize, Serialize};

use super::bptt::bptt_gradients;
use super::optim::{Adam, AdamConfig};
use super::{
    init_parameters, LatentNoise, LatentPosterior, LossBreakdown, ModelConfig, ModelError,
    Parameters, Sequence,
};
use crate::numerics::RngStream;
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainSchedule {
    pub epochs: usize,
    pub adam: AdamConfig,
    /// Global gradient-norm clip over weights and posteriors; `<= 0` disables.
    pub clip_norm: f64,
    /// Starting log standard deviation of every training posterior.
    pub init_log_sigma: f64,
}

impl Default for TrainSchedule {
    fn default() -> Self {
        Self {
            epochs: 2000,
            adam: AdamConfig::default(),
            clip_norm: 1.0,
            init_log_sigma: 0.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome<T> {
    pub params: Parameters<T>,
    /// One posterior per training sequence, in corpus order.
    pub posteriors: Vec<LatentPosterior<T>>,
    /// Corpus-mean loss per epoch, evaluated before that epoch's update.
    pub curve: Vec<LossBreakdown<T>>,
}

/// Jointly fits the weights and one latent posterior per sequence.
///
/// Each epoch draws fresh reparameterization noise for every sequence, takes the
/// corpus-mean loss, clips the global gradient norm and applies one Adam step.
pub fn train<T: Real>(
    corpus: &[Sequence<T>],
    config: &ModelConfig,
    schedule: &TrainSchedule,
    rng: &mut RngStream,
) -> Result<TrainOutcome<T>, ModelError> {
    if corpus.is_empty() {
        return Err(ModelError::EmptyCorpus);
    }
    config.validate()?;
    for s in corpus {
        super::check_len("sequence dof", config.dof, s.dof)?;
    }
    let mut init_rng = rng.child(&[0]);
    let mut noise_rng = rng.child(&[1]);

    let mut params: Parameters<T> = init_parameters(config, &mut init_rng)?;
    let mut posteriors: Vec<LatentPosterior<T>> = corpus
        .iter()
        .map(|s| {
            let mut q = LatentPosterior::prior(config, s.len());
            let ls = T::of(schedule.init_log_sigma);
            q.high.log_sigma.iter_mut().for_each(|v| *v = ls);
            q.low.log_sigma.iter_mut().for_each(|v| *v = ls);
            q.clamp();
            q
        })
        .collect();

    let mut sizes: Vec<usize> = params.slices().iter().map(|s| s.len()).collect();
    for q in &posteriors {
        sizes.extend(q.slices().iter().map(|s| s.len()));
    }
    let mut adam = Adam::new(schedule.adam, &sizes);
    let n = T::of_usize(corpus.len());
    let (w_high, w_low) = (T::of(config.high.w), T::of(config.low.w));
    let mut curve = Vec::with_capacity(schedule.epochs);

    for epoch in 0..schedule.epochs {
        let mut grad_params = Parameters::zeros(*config);
        let mut grad_post = Vec::with_capacity(corpus.len());
        let mut losses = Vec::with_capacity(corpus.len());
        for (seq, post) in corpus.iter().zip(&posteriors) {
            let eps = LatentNoise::draw(config, seq.len(), &mut noise_rng);
            let g = bptt_gradients(&params, post, seq, &eps)?;
            for (acc, gi) in grad_params.slices_mut().into_iter().zip(g.params.slices()) {
                for (a, &v) in acc.iter_mut().zip(gi) {
                    *a += v / n;
                }
            }
            let mut gq = g.posterior;
            for s in gq.slices_mut() {
                s.iter_mut().for_each(|v| *v /= n);
            }
            grad_post.push(gq);
            losses.push(g.loss);
        }
        let mean = LossBreakdown::mean(&losses, w_high, w_low);
        if !mean.total.is_finite() {
            return Err(ModelError::Diverged {
                epoch: epoch + 1,
                learning_rate: schedule.adam.learning_rate,
                total: mean.total.as_f64(),
            });
        }
        curve.push(mean);

        let sq: T = grad_params.sq_norm()
            + grad_post
                .iter()
                .flat_map(|q| q.slices())
                .flat_map(|s| s.iter())
                .map(|&v| v * v)
                .sum::<T>();
        let norm = sq.sqrt();
        if !norm.is_finite() {
            return Err(ModelError::Diverged {
                epoch: epoch + 1,
                learning_rate: schedule.adam.learning_rate,
                total: f64::NAN,
            });
        }
        let clip = T::of(schedule.clip_norm);
        if schedule.clip_norm > 0.0 && norm > clip {
            let s = clip / norm;
            for b in grad_params.slices_mut() {
                b.iter_mut().for_each(|v| *v *= s);
            }
            for q in grad_post.iter_mut() {
                for b in q.slices_mut() {
                    b.iter_mut().for_each(|v| *v *= s);
                }
            }
        }

        let mut targets: Vec<&mut [T]> = params.slices_mut();
        for q in posteriors.iter_mut() {
            targets.extend(q.slices_mut());
        }
        let mut grads: Vec<&[T]> = grad_params.slices();
        for q in &grad_post {
            grads.extend(q.slices());
        }
        adam.step(&mut targets, &grads);
        for q in posteriors.iter_mut() {
            q.clamp();
        }
    }
    Ok(TrainOutcome {
        params,
        posteriors,
        curve,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::derive_stream;

    fn small_config() -> ModelConfig {
        let mut c = ModelConfig::default();
        c.low.n_units = 8;
        c.high.n_units = 4;
        c
    }

    #[test]
    fn fits_constant_zero_sequence() {
        let c = ModelConfig::default();
        let seq = Sequence::from_streams(6, vec![0.0; 60], vec![0.0; 60]);
        let out = train(&[seq], &c, &TrainSchedule { epochs: 200, ..Default::default() }, &mut derive_stream(1, 0)).unwrap();
        assert_eq!(out.curve.len(), 200);
        assert!(out.curve.last().unwrap().total <= 1e-3, "{:?}", out.curve.last());
    }

    #[test]
    fn deterministic_and_decreasing() {
        let c = small_config().with_weights(0.01, 0.01);
        let seq = Sequence::from_streams(
            6,
            (0..120).map(|i| 0.5 * (i as f64 * 0.3).sin()).collect(),
            (0..120).map(|i| 0.5 * (i as f64 * 0.3).cos()).collect(),
        );
        let sched = TrainSchedule { epochs: 60, ..Default::default() };
        let a = train(&[seq.clone()], &c, &sched, &mut derive_stream(2, 0)).unwrap();
        let b = train(&[seq], &c, &sched, &mut derive_stream(2, 0)).unwrap();
        assert_eq!(a.params, b.params);
        assert!(a.curve.last().unwrap().total < a.curve[0].total);
    }

    #[test]
    fn divergence_is_reported() {
        let c = small_config();
        let seq = Sequence::from_streams(6, vec![f64::NAN; 12], vec![0.0; 12]);
        let err = train(&[seq], &c, &TrainSchedule { epochs: 3, ..Default::default() }, &mut derive_stream(1, 0)).unwrap_err();
        match err {
            ModelError::Diverged { epoch, learning_rate, .. } => {
                assert_eq!(epoch, 1);
                assert_eq!(learning_rate, AdamConfig::default().learning_rate);
            }
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn empty_corpus() {
        let r = train::<f64>(&[], &ModelConfig::default(), &TrainSchedule::default(), &mut derive_stream(1, 0));
        assert!(matches!(r, Err(ModelError::EmptyCorpus)));
    }
}
