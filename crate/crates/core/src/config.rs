//! Run configuration.
//!
//! Every struct here deserializes from TOML with keys matching the field
//! names. Files only need to list the keys they change: user tables are laid
//! over the serialized defaults before deserializing, so partially specified
//! sections keep the remaining defaults (including the per-style training
//! budgets).

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::ExperimentConfig;
use crate::model::{Style, NUM_FEATURES};

/// Interaction score thresholds for healthy nodes, per action style.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StyleThresholds {
    pub cooperative: f64,
    pub egocentric: f64,
    pub ignorant: f64,
}

impl StyleThresholds {
    pub fn uniform(value: f64) -> Self {
        StyleThresholds {
            cooperative: value,
            egocentric: value,
            ignorant: value,
        }
    }

    pub fn for_style(&self, style: Style) -> f64 {
        match style {
            Style::Cooperative => self.cooperative,
            Style::Egocentric => self.egocentric,
            Style::Ignorant => self.ignorant,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub num_nodes: usize,
    pub episode_days: usize,
    /// One tick is the 0.8-hour social frequency, so 30 ticks make a day.
    pub ticks_per_day: usize,
    /// Reciprocation window for bonding, in ticks before the current one.
    pub bond_window_ticks: u64,
    /// Healthy thresholds on the normalized [0, 1] score scale.
    pub threshold_base: StyleThresholds,
    /// Threshold multiplier applied while infected. Must exceed 1.
    pub eta: f64,
    pub b: f64,
    pub alpha: f64,
    /// Reward depreciation for infected nodes, in (0, 1).
    pub delta: f64,
    pub noise_sigma: f64,
    pub ignorant_constant: f64,
    pub rl_epoch_ticks: usize,
    /// Per-tick probability that an ordered pair encounters. 1.0 is full mixing.
    pub encounter_probability: f64,
    /// Half-width of the action band that decodes to a neutral preference.
    pub deadzone: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            num_nodes: 30,
            episode_days: 100,
            ticks_per_day: 30,
            bond_window_ticks: 1,
            threshold_base: StyleThresholds::uniform(0.20),
            eta: 2.0,
            b: 0.25,
            alpha: 0.125,
            delta: 0.5,
            noise_sigma: 0.01,
            ignorant_constant: 0.0,
            rl_epoch_ticks: 30,
            encounter_probability: 1.0,
            deadzone: 1.0 / 3.0,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        let check = |ok: bool, msg: &str| if ok { Ok(()) } else { Err(Error::config(msg)) };
        check(self.num_nodes >= 1, "num_nodes must be positive")?;
        check(self.episode_days >= 1, "episode_days must be positive")?;
        check(self.ticks_per_day >= 1, "ticks_per_day must be positive")?;
        check(self.rl_epoch_ticks >= 1, "rl_epoch_ticks must be positive")?;
        for style in Style::ALL {
            let t = self.threshold_base.for_style(style);
            check(t.is_finite() && t >= 0.0, "threshold_base entries must be >= 0")?;
        }
        check(self.eta > 1.0 && self.eta.is_finite(), "eta must be > 1")?;
        check(self.b > 0.0 && self.b.is_finite(), "b must be > 0")?;
        check(self.alpha > 0.0 && self.alpha.is_finite(), "alpha must be > 0")?;
        check(self.delta > 0.0 && self.delta < 1.0, "delta must lie in (0, 1)")?;
        check(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite(), "noise_sigma must be >= 0")?;
        check(self.ignorant_constant.is_finite(), "ignorant_constant must be finite")?;
        check(
            (0.0..=1.0).contains(&self.encounter_probability),
            "encounter_probability must lie in [0, 1]",
        )?;
        check((0.0..1.0).contains(&self.deadzone), "deadzone must lie in [0, 1)")?;
        Ok(())
    }

    pub fn total_ticks(&self) -> u64 {
        (self.episode_days * self.ticks_per_day) as u64
    }

    /// RL decisions per episode (the last epoch may be partial).
    pub fn epochs_per_episode(&self) -> usize {
        (self.total_ticks() as usize).div_ceil(self.rl_epoch_ticks)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EpidemicConfig {
    pub transmissibility: f64,
    pub recovery_days: f64,
    pub seeds: Vec<usize>,
    /// Keep recovered nodes immune instead of returning them to susceptible.
    pub permanent_recovery: bool,
}

impl Default for EpidemicConfig {
    fn default() -> Self {
        EpidemicConfig {
            transmissibility: 0.10,
            recovery_days: 5.0,
            seeds: vec![0],
            permanent_recovery: false,
        }
    }
}

impl EpidemicConfig {
    pub fn recovery_ticks(&self, ticks_per_day: usize) -> u32 {
        (self.recovery_days * ticks_per_day as f64).round() as u32
    }

    pub fn validate(&self, sim: &SimConfig) -> Result<()> {
        if !(0.0..=1.0).contains(&self.transmissibility) {
            return Err(Error::config("transmissibility must lie in [0, 1]"));
        }
        if !(self.recovery_days > 0.0 && self.recovery_days <= 365.0)
            || self.recovery_ticks(sim.ticks_per_day) < 1
        {
            return Err(Error::config("recovery_days must lie in (0, 365] and span at least one tick"));
        }
        if let Some(&bad) = self.seeds.iter().find(|&&s| s >= sim.num_nodes) {
            return Err(Error::config(format!(
                "seed node {bad} out of range for {} nodes",
                sim.num_nodes
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerKind {
    Sgd,
    Adam,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Td3Config {
    pub learning_rate: f64,
    pub batch_size: usize,
    /// Environment steps (RL decision epochs), one gradient update each.
    pub total_steps: usize,
    pub discount: f64,
    pub policy_noise: f64,
    pub exploration_noise: f64,
    pub target_noise_clip: f64,
    pub tau: f64,
    pub policy_delay: usize,
    pub buffer_capacity: usize,
    pub hidden_sizes: Vec<usize>,
    pub optimizer: OptimizerKind,
    /// Environment steps driven by uniform random actions before the actor takes over.
    pub start_steps: usize,
    /// Multiplier applied to rewards before they enter the replay buffer.
    pub reward_scale: f64,
    /// Critic gradient clipping by global norm; 0 disables it.
    pub max_grad_norm: f64,
    /// All controlled nodes share one exploration draw per environment step
    /// (one warmup action, one noise vector), so the group explores as a unit.
    pub collective_exploration: bool,
}

impl Td3Config {
    pub fn cooperative() -> Self {
        Td3Config {
            learning_rate: 0.01,
            batch_size: 256,
            total_steps: 50_000,
            discount: 0.99,
            policy_noise: 0.2,
            exploration_noise: 0.1,
            target_noise_clip: 0.5,
            tau: 0.005,
            policy_delay: 2,
            buffer_capacity: 100_000,
            hidden_sizes: vec![64, 64],
            optimizer: OptimizerKind::Sgd,
            start_steps: 1_000,
            reward_scale: 1.0,
            max_grad_norm: 0.0,
            collective_exploration: true,
        }
    }

    pub fn egocentric() -> Self {
        Td3Config {
            total_steps: 20_000,
            ..Self::cooperative()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let check = |ok: bool, msg: &str| if ok { Ok(()) } else { Err(Error::config(msg)) };
        check(self.learning_rate > 0.0, "learning_rate must be > 0")?;
        check(self.batch_size >= 1, "batch_size must be positive")?;
        check(self.discount > 0.0 && self.discount < 1.0, "discount must lie in (0, 1)")?;
        check(self.policy_noise >= 0.0, "policy_noise must be >= 0")?;
        check(self.exploration_noise >= 0.0, "exploration_noise must be >= 0")?;
        check(self.target_noise_clip >= 0.0, "target_noise_clip must be >= 0")?;
        check((0.0..=1.0).contains(&self.tau), "tau must lie in [0, 1]")?;
        check(self.policy_delay >= 1, "policy_delay must be >= 1")?;
        check(self.buffer_capacity >= self.batch_size, "buffer_capacity must hold a batch")?;
        check(self.hidden_sizes.iter().all(|&h| h > 0), "hidden sizes must be positive")?;
        check(self.reward_scale > 0.0, "reward_scale must be > 0")?;
        check(self.max_grad_norm >= 0.0, "max_grad_norm must be >= 0")?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainingConfig {
    pub cooperative: Td3Config,
    pub egocentric: Td3Config,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        TrainingConfig {
            cooperative: Td3Config::cooperative(),
            egocentric: Td3Config::egocentric(),
        }
    }
}

impl TrainingConfig {
    pub fn for_style(&self, style: Style) -> Option<&Td3Config> {
        match style {
            Style::Cooperative => Some(&self.cooperative),
            Style::Egocentric => Some(&self.egocentric),
            Style::Ignorant => None,
        }
    }
}

/// Everything a config file can hold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub sim: SimConfig,
    pub epidemic: EpidemicConfig,
    pub td3: TrainingConfig,
    pub experiment: ExperimentConfig,
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> std::result::Result<Self, toml::de::Error> {
        let user: toml::Table = text.parse()?;
        let mut merged =
            toml::Table::try_from(RunConfig::default()).expect("defaults serialize to a table");
        overlay(&mut merged, user);
        merged.try_into()
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cfg = Self::from_toml_str(&text).map_err(|source| Error::Toml {
            path: path.to_path_buf(),
            source,
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.sim.validate()?;
        self.epidemic.validate(&self.sim)?;
        self.td3.cooperative.validate()?;
        self.td3.egocentric.validate()?;
        self.experiment.validate(&self.sim)
    }
}

fn overlay(base: &mut toml::Table, user: toml::Table) {
    for (key, value) in user {
        match (base.get_mut(&key), value) {
            (Some(toml::Value::Table(b)), toml::Value::Table(u)) => overlay(b, u),
            (_, v) => {
                base.insert(key, v);
            }
        }
    }
}

#[derive(Serialize)]
struct InitialGenome {
    p: [f64; NUM_FEATURES],
    w_p: [f64; NUM_FEATURES],
    h: [f64; NUM_FEATURES],
    w_h: [f64; NUM_FEATURES],
}

#[derive(Serialize)]
struct DefaultsDump {
    social_frequency_hours: f64,
    initial_genome: InitialGenome,
    sim: SimConfig,
    epidemic: EpidemicConfig,
    td3: TrainingConfig,
}

/// The effective defaults as TOML, used by the `config` subcommand.
pub fn defaults_dump() -> String {
    let sim = SimConfig::default();
    let dump = DefaultsDump {
        social_frequency_hours: 24.0 / sim.ticks_per_day as f64,
        initial_genome: InitialGenome {
            p: [0.0; NUM_FEATURES],
            w_p: [0.0; NUM_FEATURES],
            h: [0.0; NUM_FEATURES],
            w_h: [0.0; NUM_FEATURES],
        },
        sim,
        epidemic: EpidemicConfig::default(),
        td3: TrainingConfig::default(),
    };
    toml::to_string(&dump).expect("defaults serialize")
}
