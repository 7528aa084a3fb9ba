use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::sync::Arc;

use rayon::prelude::*;

use super::grid::{ConditionGrid, ModelKey};
use super::ExperimentError;
use crate::gestures::{recording_stream, synth_gesture, Corpus, Gesture, Role};
use crate::inference::{AgentState, PemConfig, PemRecord};
use crate::model::{Parameters, Sequence};
use crate::numerics::pearson;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DataLength {
    Short,
    Long,
}

impl DataLength {
    pub fn name(self) -> &'static str {
        match self {
            DataLength::Short => "short",
            DataLength::Long => "long",
        }
    }
}

/// Whether inference runs throughout, or only over the first `window` steps
/// after which the agent rolls out from the prior mean.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PemMode {
    Full,
    CalibrationOnly,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImitationSetup {
    pub pem: PemConfig,
    pub short_len: usize,
    pub long_len: usize,
}

impl Default for ImitationSetup {
    fn default() -> Self {
        Self {
            pem: PemConfig::default(),
            short_len: 100,
            long_len: 300,
        }
    }
}

impl ImitationSetup {
    pub fn validate(&self) -> Result<(), ExperimentError> {
        self.pem.validate()?;
        if !(self.pem.window + 2 <= self.short_len && self.short_len <= self.long_len) {
            return Err(ExperimentError::Config(format!(
                "need window + 2 <= short_len <= long_len, got {} / {} / {}",
                self.pem.window, self.short_len, self.long_len
            )));
        }
        Ok(())
    }

    pub fn len(&self, length: DataLength) -> usize {
        match length {
            DataLength::Short => self.short_len,
            DataLength::Long => self.long_len,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImitationRun {
    pub dof: usize,
    /// Executed actions, step-major.
    pub actions: Vec<f64>,
    /// The partner signal that was fed in.
    pub observed: Vec<f64>,
    pub pe_trace: Vec<PemRecord>,
}

/// Closed-loop imitation: at every step the agent acts on what it has seen so far,
/// then observes its own action as proprioception and `other[t]` as exteroception.
pub fn imitate(
    params: Arc<Parameters<f64>>,
    other: &[f64],
    pem: PemConfig,
    mode: PemMode,
) -> Result<ImitationRun, ExperimentError> {
    let dof = params.config().dof;
    let mut agent = AgentState::new(params, pem)?;
    let steps = other.len() / dof;
    let mut actions = Vec::with_capacity(steps * dof);
    for t in 0..steps {
        let infer = match mode {
            PemMode::Full => t > 0,
            PemMode::CalibrationOnly => t > 0 && t <= pem.window,
        };
        if infer {
            agent.pem_update();
        }
        let y = agent.generate_next();
        agent.observe(&y.proprio, &other[t * dof..(t + 1) * dof]);
        actions.extend(y.proprio);
    }
    Ok(ImitationRun {
        dof,
        actions,
        observed: other[..steps * dof].to_vec(),
        pe_trace: agent.pe_trace().to_vec(),
    })
}

fn channel(x: &[f64], dof: usize, j: usize, from: usize, to: usize) -> Vec<f64> {
    (from..to).map(|t| x[t * dof + j]).collect()
}

/// Mean over DoFs of the zero-lag correlation over steps `from..to`.
/// A constant channel scores 0.
pub fn imitation_score(observed: &[f64], actions: &[f64], dof: usize, from: usize, to: usize) -> f64 {
    (0..dof)
        .map(|j| {
            pearson(&channel(observed, dof, j, from, to), &channel(actions, dof, j, from, to))
                .unwrap_or(0.0)
        })
        .sum::<f64>()
        / dof as f64
}

/// Fresh-noise renditions of every corpus spec, seen from the follower's side,
/// so the leader's gesture is the exteroceptive stream.
pub fn test_gestures(corpus: &Corpus, seed: u64, length: usize) -> Vec<Gesture> {
    corpus
        .specs
        .iter()
        .map(|s| {
            let mut rng = recording_stream(corpus.master_seed, s.id, Role::Follower, seed.wrapping_add(1));
            synth_gesture(&s.with_length(length), Role::Follower, &mut rng)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImitationResult {
    pub condition_id: usize,
    pub pem: bool,
    pub length: DataLength,
    pub seed: u64,
    pub score: f64,
    pub per_gesture: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImitationTable {
    /// Sorted by (condition, pem, length, seed).
    pub results: Vec<ImitationResult>,
}

impl ImitationTable {
    pub fn cell(&self, condition: usize, pem: bool, length: DataLength, seed: u64) -> Option<&ImitationResult> {
        self.results
            .iter()
            .find(|r| r.condition_id == condition && r.pem == pem && r.length == length && r.seed == seed)
    }

    pub fn seeds(&self) -> Vec<u64> {
        let mut s: Vec<u64> = self.results.iter().map(|r| r.seed).collect();
        s.sort_unstable();
        s.dedup();
        s
    }

    /// Mean score across seeds.
    pub fn mean(&self, condition: usize, pem: bool, length: DataLength) -> f64 {
        let xs: Vec<f64> = self
            .results
            .iter()
            .filter(|r| r.condition_id == condition && r.pem == pem && r.length == length)
            .map(|r| r.score)
            .collect();
        xs.iter().sum::<f64>() / xs.len() as f64
    }

    /// `condition_id,pem,length,seed,score`
    pub fn to_csv(&self) -> String {
        let mut s = String::from("condition_id,pem,length,seed,score\n");
        for r in &self.results {
            let _ = writeln!(s, "{},{},{},{},{:.6}", r.condition_id, r.pem, r.length.name(), r.seed, r.score);
        }
        s
    }

    /// Text table with W and ID header rows and short/long by NO PEM/PEM rows;
    /// `seed = None` renders the cross-seed mean.
    pub fn render(&self, grid: &ConditionGrid, seed: Option<u64>) -> String {
        let mut s = String::new();
        let title = match seed {
            Some(k) => format!("seed {k}"),
            None => format!("mean over {} seeds", self.seeds().len()),
        };
        let _ = writeln!(s, "Imitation score ({title})");
        let _ = write!(s, "{:<18}", "W");
        for c in &grid.conditions {
            let _ = write!(s, "{:>22}", format!("(H) {} (L) {}", c.w_high, c.w_low));
        }
        let _ = write!(s, "\n{:<18}", "ID");
        for c in &grid.conditions {
            let _ = write!(s, "{:>22}", c.id);
        }
        s.push('\n');
        for length in [DataLength::Short, DataLength::Long] {
            for pem in [false, true] {
                let label = format!(
                    "{:<11}{}",
                    if pem { "" } else { if length == DataLength::Short { "Short Data" } else { "Long Data" } },
                    if pem { "PEM" } else { "NO PEM" }
                );
                let _ = write!(s, "{label:<18}");
                for c in &grid.conditions {
                    let v = match seed {
                        Some(k) => self.cell(c.id, pem, length, k).map(|r| r.score).unwrap_or(f64::NAN),
                        None => self.mean(c.id, pem, length),
                    };
                    let _ = write!(s, "{v:>22.3}");
                }
                s.push('\n');
            }
        }
        s
    }
}

/// Scores every (condition, PEM on/off, short/long, seed) cell. Short scores are
/// read off the first `short_len` steps of the long run, which is causal.
pub fn run_imitation_benchmark(
    corpus: &Corpus,
    grid: &ConditionGrid,
    seeds: &[u64],
    models: &BTreeMap<ModelKey, Arc<Parameters<f64>>>,
    setup: &ImitationSetup,
) -> Result<ImitationTable, ExperimentError> {
    setup.validate()?;
    for c in &grid.conditions {
        for &seed in seeds {
            if !models.contains_key(&(c.id, seed)) {
                return Err(ExperimentError::MissingCheckpoint { condition: c.id, seed });
            }
        }
    }
    let gestures: BTreeMap<u64, Vec<Gesture>> = seeds
        .iter()
        .map(|&s| (s, test_gestures(corpus, s, setup.long_len)))
        .collect();
    let tasks: Vec<(usize, u64, bool, usize)> = grid
        .conditions
        .iter()
        .flat_map(|c| {
            seeds.iter().flat_map(move |&s| {
                [false, true]
                    .into_iter()
                    .flat_map(move |pem| (0..corpus.specs.len()).map(move |g| (c.id, s, pem, g)))
            })
        })
        .collect();
    let w = setup.pem.window;
    let scored: Vec<((usize, u64, bool, usize), [f64; 2])> = tasks
        .par_iter()
        .map(|&(cid, seed, pem, g)| {
            let params = models[&(cid, seed)].clone();
            let mode = if pem { PemMode::Full } else { PemMode::CalibrationOnly };
            let run = imitate(params, &gestures[&seed][g].extero, setup.pem, mode)?;
            let short = imitation_score(&run.observed, &run.actions, run.dof, w, setup.short_len);
            let long = imitation_score(&run.observed, &run.actions, run.dof, w, setup.long_len);
            Ok(((cid, seed, pem, g), [short, long]))
        })
        .collect::<Result<_, ExperimentError>>()?;
    let scored: BTreeMap<_, _> = scored.into_iter().collect();

    let mut results = Vec::new();
    for c in &grid.conditions {
        for pem in [false, true] {
            for (li, length) in [DataLength::Short, DataLength::Long].into_iter().enumerate() {
                for &seed in seeds {
                    let per_gesture: Vec<f64> = (0..corpus.specs.len())
                        .map(|g| scored[&(c.id, seed, pem, g)][li])
                        .collect();
                    let score = per_gesture.iter().sum::<f64>() / per_gesture.len().max(1) as f64;
                    results.push(ImitationResult {
                        condition_id: c.id,
                        pem,
                        length,
                        seed,
                        score,
                        per_gesture,
                    });
                }
            }
        }
    }
    Ok(ImitationTable { results })
}

/// Feeds both recorded streams of `seq` to an inferring agent and returns the mean
/// correlation, over both streams and all DoFs, between its one-step-ahead
/// predictions and the recording, after the first window.
pub fn pem_reconstruction(
    params: Arc<Parameters<f64>>,
    seq: &Sequence<f64>,
    pem: PemConfig,
) -> Result<f64, ExperimentError> {
    let dof = seq.dof;
    let mut agent = AgentState::new(params, pem)?;
    let mut pred = Sequence::new(dof);
    for t in 0..seq.len() {
        if t > 0 {
            agent.pem_update();
        }
        let y = agent.generate_next();
        pred.push(&y.proprio, &y.extero);
        agent.observe(seq.proprio_at(t), seq.extero_at(t));
    }
    let from = pem.window.min(seq.len().saturating_sub(2));
    let mut total = 0.0;
    for extero in [false, true] {
        for j in 0..dof {
            let a = seq.channel(extero, j);
            let b = pred.channel(extero, j);
            total += pearson(&a[from..], &b[from..]).unwrap_or(0.0);
        }
    }
    Ok(total / (2 * dof) as f64)
}
