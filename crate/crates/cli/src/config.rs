//! Flat `key = value` run configuration.
//!
//! Every key has a typed default; unknown keys and unparsable values are errors.
//! Precedence, lowest first: defaults, config file, `PEMNET_OUT` (for `out_dir`),
//! `--seed`, `--set` overrides.

use std::collections::BTreeMap;
use std::path::PathBuf;

use pemnet_core::experiments::{ClassifierConfig, Condition, ConditionGrid, ImitationSetup};
use pemnet_core::gestures::CorpusOptions;
use pemnet_core::inference::PemConfig;
use pemnet_core::model::{AdamConfig, LayerConfig, ModelConfig, StreamMask, TrainSchedule};

use crate::CliError;

pub const OUT_ENV: &str = "PEMNET_OUT";

#[derive(Debug, Clone, Copy, PartialEq)]
enum Kind {
    Int,
    Real,
    Flag,
    IntList,
    RealList,
    Streams,
    Text,
}

const KEYS: &[(&str, Kind, &str)] = &[
    ("seed", Kind::Int, "42"),
    ("out_dir", Kind::Text, "runs"),
    ("corpus.n_specs", Kind::Int, "31"),
    ("corpus.length", Kind::Int, "300"),
    ("corpus.noise_sigma", Kind::Real, "0.05"),
    ("corpus.follower_lag", Kind::Int, "5"),
    ("corpus.period_min", Kind::Int, "24"),
    ("corpus.period_max", Kind::Int, "60"),
    ("model.dof", Kind::Int, "6"),
    ("model.high.units", Kind::Int, "10"),
    ("model.high.tau", Kind::Real, "10"),
    ("model.high.latent", Kind::Int, "2"),
    ("model.low.units", Kind::Int, "30"),
    ("model.low.tau", Kind::Real, "2"),
    ("model.low.latent", Kind::Int, "4"),
    ("grid.w_high", Kind::RealList, "0,0.0001,0.01,0.01,0.0001"),
    ("grid.w_low", Kind::RealList, "0,0.0001,0.01,0.0001,0.01"),
    ("train.seeds", Kind::IntList, "1,2,3,4,5"),
    ("train.epochs", Kind::Int, "2000"),
    ("train.learning_rate", Kind::Real, "0.004"),
    ("train.beta1", Kind::Real, "0.9"),
    ("train.beta2", Kind::Real, "0.999"),
    ("train.epsilon", Kind::Real, "1e-8"),
    ("train.clip_norm", Kind::Real, "1"),
    ("train.init_log_sigma", Kind::Real, "0"),
    ("pem.window", Kind::Int, "10"),
    ("pem.iterations", Kind::Int, "30"),
    ("pem.step_size", Kind::Real, "30"),
    ("pem.max_halvings", Kind::Int, "5"),
    ("pem.streams", Kind::Streams, "both"),
    ("imitation.short_length", Kind::Int, "100"),
    ("imitation.long_length", Kind::Int, "300"),
    ("rri.steps", Kind::Int, "1000"),
    ("rri.trials", Kind::Int, "10"),
    ("rri.condition", Kind::Int, "3"),
    ("rri.train_seed", Kind::Int, "1"),
    ("rri.agent_a.pem", Kind::Flag, "true"),
    ("rri.agent_b.pem", Kind::Flag, "true"),
    ("rri.motor_noise_sigma", Kind::Real, "0"),
    ("classifier.window", Kind::Int, "500"),
    ("classifier.fixed_point_std", Kind::Real, "0.01"),
    ("classifier.peak", Kind::Real, "0.9"),
    ("classifier.min_lag", Kind::Int, "4"),
    ("classifier.tolerance", Kind::Int, "2"),
];

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    values: BTreeMap<&'static str, String>,
}

fn kind_of(key: &str) -> Option<(&'static str, Kind)> {
    KEYS.iter().find(|(k, _, _)| *k == key).map(|(k, kind, _)| (*k, *kind))
}

fn check(kind: Kind, value: &str) -> Result<(), String> {
    let list = |v: &str| v.split(',').map(str::trim).filter(|s| !s.is_empty()).map(String::from).collect::<Vec<_>>();
    let ok = match kind {
        Kind::Int => value.parse::<u64>().is_ok(),
        Kind::Real => value.parse::<f64>().map(f64::is_finite).unwrap_or(false),
        Kind::Flag => matches!(value, "true" | "false"),
        Kind::IntList => !list(value).is_empty() && list(value).iter().all(|s| s.parse::<u64>().is_ok()),
        Kind::RealList => !list(value).is_empty() && list(value).iter().all(|s| s.parse::<f64>().is_ok()),
        Kind::Streams => matches!(value, "both" | "proprio" | "extero"),
        Kind::Text => !value.is_empty(),
    };
    if ok {
        Ok(())
    } else {
        let expected = match kind {
            Kind::Int => "a non-negative integer",
            Kind::Real => "a finite number",
            Kind::Flag => "true or false",
            Kind::IntList => "a comma-separated list of integers",
            Kind::RealList => "a comma-separated list of numbers",
            Kind::Streams => "both, proprio or extero",
            Kind::Text => "a non-empty string",
        };
        Err(format!("expected {expected}, got {value:?}"))
    }
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            values: KEYS.iter().map(|(k, _, d)| (*k, d.to_string())).collect(),
        }
    }
}

impl RunConfig {
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        let (key, kind) = kind_of(key).ok_or_else(|| CliError::Config(format!("unknown config key {key:?}")))?;
        let value = value.trim();
        check(kind, value).map_err(|e| CliError::Config(format!("{key}: {e}")))?;
        self.values.insert(key, value.to_string());
        Ok(())
    }

    /// Applies a config file; `origin` names it in error messages.
    pub fn apply_text(&mut self, text: &str, origin: &str) -> Result<(), CliError> {
        let mut seen = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(CliError::Config(format!("{origin}:{}: expected `key = value`", i + 1)));
            };
            let k = k.trim();
            if let Some(prev) = seen.insert(k.to_string(), i + 1) {
                return Err(CliError::Config(format!(
                    "{origin}:{}: key {k:?} already set on line {prev}",
                    i + 1
                )));
            }
            self.set(k, v)
                .map_err(|e| CliError::Config(format!("{origin}:{}: {}", i + 1, e.message())))?;
        }
        Ok(())
    }

    /// Applies a `key=value` override.
    pub fn apply_override(&mut self, spec: &str) -> Result<(), CliError> {
        let (k, v) = spec
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("--set expects key=value, got {spec:?}")))?;
        self.set(k.trim(), v)
    }

    /// Fully resolved config in declaration order.
    pub fn render(&self) -> String {
        KEYS.iter()
            .map(|(k, _, _)| format!("{k} = {}\n", self.values[k]))
            .collect()
    }

    fn raw(&self, key: &str) -> &str {
        &self.values[key]
    }

    pub fn int(&self, key: &str) -> u64 {
        self.raw(key).parse().expect("validated on set")
    }

    pub fn count(&self, key: &str) -> usize {
        self.int(key) as usize
    }

    pub fn real(&self, key: &str) -> f64 {
        self.raw(key).parse().expect("validated on set")
    }

    pub fn flag(&self, key: &str) -> bool {
        self.raw(key) == "true"
    }

    fn list<T: std::str::FromStr>(&self, key: &str) -> Vec<T> {
        self.raw(key)
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| s.parse().ok().expect("validated on set"))
            .collect()
    }

    pub fn out_dir(&self) -> PathBuf {
        PathBuf::from(self.raw("out_dir"))
    }

    pub fn seed(&self) -> u64 {
        self.int("seed")
    }

    pub fn corpus_options(&self) -> Result<CorpusOptions, CliError> {
        let o = CorpusOptions {
            n_specs: self.count("corpus.n_specs"),
            length: self.count("corpus.length"),
            noise_sigma: self.real("corpus.noise_sigma"),
            follower_lag: self.count("corpus.follower_lag"),
            period_range: (self.count("corpus.period_min"), self.count("corpus.period_max")),
        };
        if o.n_specs == 0 || o.length == 0 {
            return Err(CliError::Config("corpus.n_specs and corpus.length must be positive".into()));
        }
        if o.noise_sigma < 0.0 {
            return Err(CliError::Config("corpus.noise_sigma must be >= 0".into()));
        }
        if o.period_range.0 < 24 || o.period_range.0 > o.period_range.1 {
            return Err(CliError::Config(
                "need 24 <= corpus.period_min <= corpus.period_max (harmonics stay at periods >= 8)".into(),
            ));
        }
        Ok(o)
    }

    pub fn model_config(&self) -> Result<ModelConfig, CliError> {
        let layer = |p: &str| LayerConfig {
            n_units: self.count(&format!("model.{p}.units")),
            tau: self.real(&format!("model.{p}.tau")),
            n_latent: self.count(&format!("model.{p}.latent")),
            w: 0.0,
        };
        let c = ModelConfig {
            high: layer("high"),
            low: layer("low"),
            dof: self.count("model.dof"),
        };
        c.validate().map_err(|e| CliError::Config(e.to_string()))?;
        Ok(c)
    }

    pub fn grid(&self) -> Result<ConditionGrid, CliError> {
        let hi: Vec<f64> = self.list("grid.w_high");
        let lo: Vec<f64> = self.list("grid.w_low");
        if hi.len() != lo.len() {
            return Err(CliError::Config(format!(
                "grid.w_high has {} entries but grid.w_low has {}",
                hi.len(),
                lo.len()
            )));
        }
        if hi.iter().chain(&lo).any(|w| *w < 0.0) {
            return Err(CliError::Config("grid weights must be >= 0".into()));
        }
        Ok(ConditionGrid {
            conditions: hi
                .into_iter()
                .zip(lo)
                .enumerate()
                .map(|(i, (w_high, w_low))| Condition { id: i + 1, w_high, w_low })
                .collect(),
        })
    }

    pub fn train_seeds(&self) -> Vec<u64> {
        let mut s: Vec<u64> = self.list("train.seeds");
        s.sort_unstable();
        s.dedup();
        s
    }

    pub fn schedule(&self) -> Result<TrainSchedule, CliError> {
        let s = TrainSchedule {
            epochs: self.count("train.epochs"),
            adam: AdamConfig {
                learning_rate: self.real("train.learning_rate"),
                beta1: self.real("train.beta1"),
                beta2: self.real("train.beta2"),
                epsilon: self.real("train.epsilon"),
            },
            clip_norm: self.real("train.clip_norm"),
            init_log_sigma: self.real("train.init_log_sigma"),
        };
        if s.epochs == 0 || s.adam.learning_rate <= 0.0 {
            return Err(CliError::Config("train.epochs and train.learning_rate must be positive".into()));
        }
        Ok(s)
    }

    pub fn pem(&self) -> Result<PemConfig, CliError> {
        let p = PemConfig {
            window: self.count("pem.window"),
            iterations: self.count("pem.iterations"),
            step_size: self.real("pem.step_size"),
            streams: match self.raw("pem.streams") {
                "proprio" => StreamMask::PROPRIO,
                "extero" => StreamMask::EXTERO,
                _ => StreamMask::BOTH,
            },
            max_halvings: self.count("pem.max_halvings"),
        };
        p.validate().map_err(|e| CliError::Config(e.to_string()))?;
        Ok(p)
    }

    pub fn imitation(&self) -> Result<ImitationSetup, CliError> {
        let s = ImitationSetup {
            pem: self.pem()?,
            short_len: self.count("imitation.short_length"),
            long_len: self.count("imitation.long_length"),
        };
        s.validate().map_err(|e| CliError::Config(e.to_string()))?;
        Ok(s)
    }

    pub fn classifier(&self) -> ClassifierConfig {
        ClassifierConfig {
            window: self.count("classifier.window"),
            fixed_point_std: self.real("classifier.fixed_point_std"),
            peak: self.real("classifier.peak"),
            min_lag: self.count("classifier.min_lag"),
            tolerance: self.count("classifier.tolerance"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_resolve() {
        let c = RunConfig::default();
        assert_eq!(c.model_config().unwrap(), ModelConfig::default());
        assert_eq!(c.grid().unwrap(), ConditionGrid::default());
        assert_eq!(c.pem().unwrap(), PemConfig::default());
        assert_eq!(c.classifier(), ClassifierConfig::default());
        assert_eq!(c.corpus_options().unwrap(), CorpusOptions::default());
        assert_eq!(c.schedule().unwrap(), TrainSchedule::default());
        assert_eq!(c.imitation().unwrap(), ImitationSetup::default());
        assert_eq!(c.render().lines().count(), KEYS.len());
    }

    #[test]
    fn render_round_trips() {
        let mut c = RunConfig::default();
        c.apply_override("pem.step_size=2.5").unwrap();
        let mut d = RunConfig::default();
        d.apply_text(&c.render(), "resolved").unwrap();
        assert_eq!(c, d);
    }

    #[test]
    fn unknown_and_bad_values_are_errors() {
        let mut c = RunConfig::default();
        let e = c.apply_text("seed = 1\npem.windw = 3\n", "run.cfg").unwrap_err();
        assert!(e.message().contains("run.cfg:2") && e.message().contains("pem.windw"), "{}", e.message());
        assert!(c.apply_override("seed=-1").is_err());
        assert!(c.apply_override("pem.streams=left").is_err());
        assert!(c.apply_override("seed").is_err());
        assert!(c.apply_text("seed = 1\nseed = 2\n", "x").is_err());
        c.apply_override("grid.w_low=0,0").unwrap();
        assert!(c.grid().is_err());
    }

    #[test]
    fn comments_and_blanks_are_ignored() {
        let mut c = RunConfig::default();
        c.apply_text("# desk run\n\ncorpus.n_specs = 8  # small\n", "x").unwrap();
        assert_eq!(c.count("corpus.n_specs"), 8);
    }
}
