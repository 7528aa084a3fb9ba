use std::io::{self, Write};
use std::sync::Arc;

use rayon::prelude::*;

use super::classify::ClassifierConfig;
use super::ExperimentError;
use crate::inference::{AgentState, PemConfig, PemRecord};
use crate::model::Parameters;
use crate::numerics::{derive_stream, stream_label, RngStream};

const RRI_STREAM: u64 = 0x5252_4920;

/// One interacting agent: frozen model, PEM settings (`None` for no inference)
/// and the label keying its random stream.
#[derive(Debug, Clone)]
pub struct AgentSetup {
    pub params: Arc<Parameters<f64>>,
    pub pem: Option<PemConfig>,
    pub stream: u64,
}

#[derive(Debug, Clone)]
pub struct RriConfig {
    pub steps: usize,
    pub trials: usize,
    pub agent_a: AgentSetup,
    pub agent_b: AgentSetup,
    /// Gaussian noise added to every executed action.
    pub motor_noise_sigma: f64,
    pub classifier: ClassifierConfig,
}

impl RriConfig {
    pub fn new(agent_a: AgentSetup, agent_b: AgentSetup) -> Self {
        Self {
            steps: 1000,
            trials: 10,
            agent_a,
            agent_b,
            motor_noise_sigma: 0.0,
            classifier: ClassifierConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        if self.trials == 0 {
            return Err(ExperimentError::Config("trials must be >= 1".into()));
        }
        if self.steps < 2 * self.classifier.window {
            return Err(ExperimentError::Config(format!(
                "steps ({}) must be at least twice the classifier window ({})",
                self.steps, self.classifier.window
            )));
        }
        if !(self.motor_noise_sigma >= 0.0) {
            return Err(ExperimentError::Config("motor_noise_sigma must be >= 0".into()));
        }
        let (a, b) = (self.agent_a.params.config(), self.agent_b.params.config());
        if a.dof != b.dof {
            return Err(ExperimentError::Config(format!(
                "agents disagree on dof: {} vs {}",
                a.dof, b.dof
            )));
        }
        for pem in [&self.agent_a.pem, &self.agent_b.pem].into_iter().flatten() {
            pem.validate()?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgentRun {
    /// Executed actions, step-major `steps x dof`.
    pub actions: Vec<f64>,
    pub pe_trace: Vec<PemRecord>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RriTrial {
    pub trial: usize,
    pub dof: usize,
    pub agents: [AgentRun; 2],
}

impl RriTrial {
    pub fn file_name(trial: usize, agent: usize) -> String {
        format!("rri_trial{trial}_agent{}.csv", ["A", "B"][agent])
    }

    /// Writes `step,p0..p<dof-1>` with shortest round-trip number formatting.
    pub fn write_trajectory<W: Write>(&self, agent: usize, mut out: W) -> io::Result<()> {
        let mut header = String::from("step");
        for j in 0..self.dof {
            header.push_str(&format!(",p{j}"));
        }
        writeln!(out, "{header}")?;
        for (t, row) in self.agents[agent].actions.chunks(self.dof).enumerate() {
            write!(out, "{t}")?;
            for v in row {
                write!(out, ",{v}")?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

struct Player {
    state: AgentState<f64>,
    pem: bool,
    rng: RngStream,
}

impl Player {
    fn new(setup: &AgentSetup, master_seed: u64, trial: usize) -> Result<Self, ExperimentError> {
        let mut rng = derive_stream(
            master_seed,
            stream_label(&[RRI_STREAM, trial as u64, setup.stream]),
        );
        let mut state = AgentState::new(setup.params.clone(), setup.pem.unwrap_or_default())?;
        let c = setup.params.config();
        let zh = rng.standard_normal(c.high.n_latent);
        let zl = rng.standard_normal(c.low.n_latent);
        state.set_next_latent(zh, zl);
        Ok(Self {
            state,
            pem: setup.pem.is_some(),
            rng,
        })
    }

    fn act(&mut self, sigma: f64) -> Vec<f64> {
        if self.pem && self.state.clock() > 0 {
            self.state.pem_update();
        }
        let y = self.state.generate_next();
        if sigma > 0.0 {
            y.proprio
                .iter()
                .map(|&v| (v + sigma * self.rng.normal::<f64>()).clamp(-1.0, 1.0))
                .collect()
        } else {
            y.proprio
        }
    }
}

/// Runs one lockstep trial. Each agent's first latent is a draw from the prior on
/// its own stream, so trials differ from one another; every later step starts
/// from the prior mean.
pub fn run_trial(config: &RriConfig, master_seed: u64, trial: usize) -> Result<RriTrial, ExperimentError> {
    let mut a = Player::new(&config.agent_a, master_seed, trial)?;
    let mut b = Player::new(&config.agent_b, master_seed, trial)?;
    let dof = config.agent_a.params.config().dof;
    let mut acts = [
        Vec::with_capacity(config.steps * dof),
        Vec::with_capacity(config.steps * dof),
    ];
    for _ in 0..config.steps {
        let xa = a.act(config.motor_noise_sigma);
        let xb = b.act(config.motor_noise_sigma);
        a.state.observe(&xa, &xb);
        b.state.observe(&xb, &xa);
        acts[0].extend_from_slice(&xa);
        acts[1].extend_from_slice(&xb);
    }
    let [aa, ab] = acts;
    Ok(RriTrial {
        trial,
        dof,
        agents: [
            AgentRun {
                actions: aa,
                pe_trace: a.state.pe_trace().to_vec(),
            },
            AgentRun {
                actions: ab,
                pe_trace: b.state.pe_trace().to_vec(),
            },
        ],
    })
}

/// All trials, numbered from 1, in parallel on the current rayon pool.
pub fn run_rri(config: &RriConfig, master_seed: u64) -> Result<Vec<RriTrial>, ExperimentError> {
    config.validate()?;
    (1..=config.trials)
        .into_par_iter()
        .map(|k| run_trial(config, master_seed, k))
        .collect()
}
