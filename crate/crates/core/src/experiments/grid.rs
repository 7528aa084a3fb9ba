use std::collections::BTreeMap;

use rayon::prelude::*;

use super::ExperimentError;
use crate::model::{train, Checkpoint, LossBreakdown, ModelConfig, Sequence, TrainSchedule};
use crate::numerics::{derive_stream, stream_label};

const TRAIN_STREAM: u64 = 0x5452_4149;

/// One meta-prior setting: KL weights of the high and low layer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Condition {
    pub id: usize,
    pub w_high: f64,
    pub w_low: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConditionGrid {
    pub conditions: Vec<Condition>,
}

impl Default for ConditionGrid {
    fn default() -> Self {
        let c = |id, w_high, w_low| Condition { id, w_high, w_low };
        Self {
            conditions: vec![
                c(1, 0.0, 0.0),
                c(2, 1e-4, 1e-4),
                c(3, 1e-2, 1e-2),
                c(4, 1e-2, 1e-4),
                c(5, 1e-4, 1e-2),
            ],
        }
    }
}

impl ConditionGrid {
    pub fn get(&self, id: usize) -> Option<&Condition> {
        self.conditions.iter().find(|c| c.id == id)
    }

    pub fn ids(&self) -> Vec<usize> {
        self.conditions.iter().map(|c| c.id).collect()
    }
}

/// (condition id, seed)
pub type ModelKey = (usize, u64);

/// Trains one model for `condition` on the whole corpus.
pub fn train_condition(
    corpus: &[Sequence<f64>],
    base: &ModelConfig,
    condition: &Condition,
    schedule: &TrainSchedule,
    seed: u64,
) -> Result<Checkpoint<f64>, ExperimentError> {
    train_condition_with_curve(corpus, base, condition, schedule, seed).map(|(ck, _)| ck)
}

/// [`train_condition`] that also returns the per-epoch loss curve.
pub fn train_condition_with_curve(
    corpus: &[Sequence<f64>],
    base: &ModelConfig,
    condition: &Condition,
    schedule: &TrainSchedule,
    seed: u64,
) -> Result<(Checkpoint<f64>, Vec<LossBreakdown<f64>>), ExperimentError> {
    let cfg = base.with_weights(condition.w_high, condition.w_low);
    let mut rng = derive_stream(seed, stream_label(&[TRAIN_STREAM, condition.id as u64]));
    let out = train(corpus, &cfg, schedule, &mut rng)?;
    let last = out.curve.last().map(|l| l.total).unwrap_or(f64::NAN);
    let first = out.curve.first().map(|l| l.total).unwrap_or(f64::NAN);
    let ck = Checkpoint::new(out.params, out.posteriors)
        .with_meta("condition_id", condition.id)
        .with_meta("seed", seed)
        .with_meta("epochs", schedule.epochs)
        .with_meta("learning_rate", schedule.adam.learning_rate)
        .with_meta("first_total", first)
        .with_meta("final_total", last);
    Ok((ck, out.curve))
}

/// Trains every (condition, seed) cell; cells run in parallel on the current rayon pool.
pub fn train_grid(
    corpus: &[Sequence<f64>],
    base: &ModelConfig,
    grid: &ConditionGrid,
    seeds: &[u64],
    schedule: &TrainSchedule,
) -> Result<BTreeMap<ModelKey, Checkpoint<f64>>, ExperimentError> {
    let cells: Vec<(Condition, u64)> = grid
        .conditions
        .iter()
        .flat_map(|c| seeds.iter().map(move |&s| (*c, s)))
        .collect();
    cells
        .par_iter()
        .map(|(c, s)| Ok(((c.id, *s), train_condition(corpus, base, c, schedule, *s)?)))
        .collect()
}
