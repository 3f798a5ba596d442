//! Episode orchestration.
//!
//! Each tick runs six phases in a fixed order:
//!
//! 1. score every encountered ordered pair;
//! 2. decide interactions under thresholds and capital, best scores first;
//! 3. record interaction intensities;
//! 4. update bonds and bond intensities;
//! 5. step the epidemic over this tick's contacts;
//! 6. compute step rewards (after the epidemic step) and accumulate them.
//!
//! Policy decisions happen at every epoch boundary, before the first tick of
//! the epoch. Cooperative nodes query the shared actor, egocentric nodes the
//! egocentric actor, and ignorant nodes draw a random genome and capital.

use std::io::Write;

use crate::config::{EpidemicConfig, SimConfig};
use crate::epidemic::{seed_epidemic, step_epidemic, EpidemicState};
use crate::error::{Error, Result};
use crate::kernel::{form_interactions, update_bonds};
use crate::model::{EncounterModel, Style, TemporalNetwork};
use crate::policy::{
    decode_action, ignorant_act, individual_reward, node_blocks, policy_input, random_capital_limit,
    reward_ignorant, ActionVector,
};
use crate::rng::{self, SimRng, Stream};
use crate::td3::net::DenseNet;

pub const TRACE_COLUMNS: [&str; 9] = [
    "tick",
    "day",
    "interactions",
    "bonds",
    "new_infections",
    "infected_now",
    "cum_infections",
    "reward_step",
    "cum_reward",
];

#[derive(Debug, Clone, PartialEq)]
pub struct TickRecord {
    pub tick: u64,
    pub day: u64,
    /// Directed interactions formed this tick.
    pub interactions: usize,
    pub bonds: usize,
    pub new_infections: usize,
    pub infected_now: usize,
    /// Includes the seed infections.
    pub cum_infections: u64,
    /// Network-wide total reward: the population mean of the individual
    /// reward terms.
    pub reward_step: f64,
    pub cum_reward: f64,
    /// Mean style-specific reward of the nodes of each style (cooperative,
    /// egocentric, ignorant); zero for styles with no nodes.
    pub style_rewards: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct EpisodeTrace {
    pub initial_infected: usize,
    pub records: Vec<TickRecord>,
}

/// Per-day aggregate of a trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DayRecord {
    pub day: u64,
    pub new_infections: usize,
    /// Infected count at the end of the day.
    pub infected_now: usize,
    pub cum_infections: u64,
    pub reward: f64,
    pub cum_reward: f64,
}

impl EpisodeTrace {
    pub fn final_cum_infections(&self) -> u64 {
        self.records.last().map_or(self.initial_infected as u64, |r| r.cum_infections)
    }

    pub fn final_cum_reward(&self) -> f64 {
        self.records.last().map_or(0.0, |r| r.cum_reward)
    }

    pub fn daily(&self) -> Vec<DayRecord> {
        let mut days: Vec<DayRecord> = Vec::new();
        for r in &self.records {
            match days.last_mut() {
                Some(d) if d.day == r.day => {
                    d.new_infections += r.new_infections;
                    d.infected_now = r.infected_now;
                    d.cum_infections = r.cum_infections;
                    d.reward += r.reward_step;
                    d.cum_reward = r.cum_reward;
                }
                _ => days.push(DayRecord {
                    day: r.day,
                    new_infections: r.new_infections,
                    infected_now: r.infected_now,
                    cum_infections: r.cum_infections,
                    reward: r.reward_step,
                    cum_reward: r.cum_reward,
                }),
            }
        }
        days
    }

    /// The trace as CSV with [`TRACE_COLUMNS`].
    pub fn write_csv(&self, out: impl Write) -> std::result::Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(TRACE_COLUMNS)?;
        for r in &self.records {
            w.write_record(r.csv_fields())?;
        }
        w.flush()?;
        Ok(())
    }
}

impl TickRecord {
    pub fn csv_fields(&self) -> [String; 9] {
        [
            self.tick.to_string(),
            self.day.to_string(),
            self.interactions.to_string(),
            self.bonds.to_string(),
            self.new_infections.to_string(),
            self.infected_now.to_string(),
            self.cum_infections.to_string(),
            self.reward_step.to_string(),
            self.cum_reward.to_string(),
        ]
    }
}

/// Trained actors available to an episode.
#[derive(Debug, Clone, Default)]
pub struct PolicySet {
    pub cooperative: Option<DenseNet>,
    pub egocentric: Option<DenseNet>,
}

impl PolicySet {
    pub fn actor(&self, style: Style) -> Option<&DenseNet> {
        match style {
            Style::Cooperative => self.cooperative.as_ref(),
            Style::Egocentric => self.egocentric.as_ref(),
            Style::Ignorant => None,
        }
    }
}

/// What an episode simulates: the model, the epidemic and each node's style.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeSpec {
    pub sim: SimConfig,
    pub epidemic: EpidemicConfig,
    pub styles: Vec<Style>,
}

impl EpisodeSpec {
    pub fn uniform(sim: SimConfig, epidemic: EpidemicConfig, style: Style) -> Self {
        let styles = vec![style; sim.num_nodes];
        EpisodeSpec { sim, epidemic, styles }
    }
}

#[derive(Debug, Clone)]
pub struct Simulation {
    cfg: SimConfig,
    epidemic: EpidemicState,
    net: TemporalNetwork,
    encounters: EncounterModel,
    noise_rng: SimRng,
    epidemic_rng: SimRng,
    encounter_rng: SimRng,
    ignorant_rng: SimRng,
    next_tick: u64,
    epoch_ticks: u32,
    cum_infections: u64,
    cum_reward: f64,
    trace: EpisodeTrace,
}

impl Simulation {
    /// Fresh network with the given styles and the epidemic seeded.
    pub fn new(spec: &EpisodeSpec, seed: u64) -> Result<Self> {
        let epidemic = EpidemicState::from_config(&spec.epidemic, &spec.sim)?;
        let mut net = TemporalNetwork::new(&spec.sim, seed)?;
        net.assign_styles(&spec.styles)?;
        seed_epidemic(&mut net, &epidemic)?;
        Self::from_network(spec.sim.clone(), epidemic, net, seed)
    }

    /// Continue from an existing network state (health, histories and
    /// genomes are taken as they are).
    pub fn from_network(cfg: SimConfig, epidemic: EpidemicState, net: TemporalNetwork, seed: u64) -> Result<Self> {
        cfg.validate()?;
        if net.num_nodes() != cfg.num_nodes {
            return Err(Error::config(format!(
                "network has {} nodes, config says {}",
                net.num_nodes(),
                cfg.num_nodes
            )));
        }
        let initial_infected = net.infected_count();
        Ok(Simulation {
            encounters: EncounterModel::from_probability(cfg.encounter_probability),
            noise_rng: rng::stream(seed, Stream::ScoreNoise),
            epidemic_rng: rng::stream(seed, Stream::Epidemic),
            encounter_rng: rng::stream(seed, Stream::Encounter),
            ignorant_rng: rng::stream(seed, Stream::Ignorant),
            next_tick: net.tick(),
            epoch_ticks: 0,
            cum_infections: initial_infected as u64,
            cum_reward: 0.0,
            trace: EpisodeTrace {
                initial_infected,
                records: Vec::with_capacity(cfg.total_ticks() as usize),
            },
            cfg,
            epidemic,
            net,
        })
    }

    pub fn config(&self) -> &SimConfig {
        &self.cfg
    }

    pub fn epidemic(&self) -> &EpidemicState {
        &self.epidemic
    }

    pub fn network(&self) -> &TemporalNetwork {
        &self.net
    }

    pub fn network_mut(&mut self) -> &mut TemporalNetwork {
        &mut self.net
    }

    /// The tick `run_tick` will simulate next.
    pub fn next_tick(&self) -> u64 {
        self.next_tick
    }

    pub fn is_done(&self) -> bool {
        self.next_tick >= self.cfg.total_ticks()
    }

    pub fn at_epoch_boundary(&self) -> bool {
        self.next_tick % self.cfg.rl_epoch_ticks as u64 == 0
    }

    pub fn trace(&self) -> &EpisodeTrace {
        &self.trace
    }

    pub fn into_trace(self) -> EpisodeTrace {
        self.trace
    }

    /// Close the finished epoch: its contacts become the observable history,
    /// capital and reward accumulators reset.
    pub fn begin_epoch(&mut self) {
        self.net.start_epoch();
        for node in &mut self.net.nodes {
            node.reward_accum = 0.0;
        }
        self.epoch_ticks = 0;
    }

    /// Ticks simulated since the last `begin_epoch`.
    pub fn epoch_ticks(&self) -> u32 {
        self.epoch_ticks
    }

    /// Actor inputs for every node, each under its own style.
    pub fn policy_inputs(&self) -> Vec<Vec<f64>> {
        let blocks = node_blocks(&self.net, self.epidemic.transmissibility);
        (0..self.net.num_nodes())
            .map(|i| policy_input(&blocks, i, self.net.nodes[i].style))
            .collect()
    }

    pub fn apply_action(&mut self, i: usize, action: &ActionVector) {
        let n = self.net.num_nodes();
        let (genome, limit) = decode_action(action, self.cfg.deadzone, n);
        let node = &mut self.net.nodes[i];
        node.genome = genome;
        node.capital_limit = limit;
    }

    pub fn randomize_node(&mut self, i: usize) {
        let n = self.net.num_nodes();
        let genome = ignorant_act(&mut self.ignorant_rng);
        let limit = random_capital_limit(&mut self.ignorant_rng, n);
        let node = &mut self.net.nodes[i];
        node.genome = genome;
        node.capital_limit = limit;
    }

    /// Start an epoch and let every node decide with the deterministic
    /// actors in `policies`.
    pub fn decide(&mut self, policies: &PolicySet) -> Result<()> {
        self.begin_epoch();
        let inputs = self.policy_inputs();
        for (i, input) in inputs.iter().enumerate() {
            let style = self.net.nodes[i].style;
            match style {
                Style::Ignorant => self.randomize_node(i),
                Style::Cooperative | Style::Egocentric => {
                    let actor = policies
                        .actor(style)
                        .ok_or_else(|| Error::config(format!("no {style} policy loaded")))?;
                    let action = ActionVector::clamped(actor.forward(input));
                    self.apply_action(i, &action);
                }
            }
        }
        Ok(())
    }

    /// Simulate one tick through all six phases and append its record.
    pub fn run_tick(&mut self) -> &TickRecord {
        let t = self.next_tick;
        self.net.set_tick(t);
        self.net.clear_tick_state();

        // Phases 1-3.
        let interactions = form_interactions(
            &mut self.net,
            &self.cfg,
            self.encounters,
            &mut self.encounter_rng,
            &mut self.noise_rng,
        );
        // Phase 4.
        update_bonds(&mut self.net, t, self.cfg.bond_window_ticks);
        self.net.note_epoch_contacts();
        // Phase 5.
        let new_infections = step_epidemic(&mut self.net, &self.epidemic, &mut self.epidemic_rng);
        self.cum_infections += new_infections as u64;
        // Phase 6.
        let (reward_step, style_rewards) = self.step_rewards();
        self.cum_reward += reward_step;

        self.next_tick += 1;
        self.epoch_ticks += 1;
        self.trace.records.push(TickRecord {
            tick: t,
            day: t / self.cfg.ticks_per_day as u64,
            interactions,
            bonds: self.net.bond_count(),
            new_infections,
            infected_now: self.net.infected_count(),
            cum_infections: self.cum_infections,
            reward_step,
            cum_reward: self.cum_reward,
            style_rewards,
        });
        self.trace.records.last().expect("just pushed")
    }

    fn step_rewards(&mut self) -> (f64, [f64; 3]) {
        let n = self.net.num_nodes();
        let zeta = self.epidemic.transmissibility;
        let individual: Vec<f64> = (0..n)
            .map(|i| individual_reward(&self.net, i, zeta, self.cfg.delta))
            .collect();
        let total = if n == 0 {
            0.0
        } else {
            individual.iter().sum::<f64>() / n as f64
        };
        let mut sums = [0.0; 3];
        let mut counts = [0usize; 3];
        for (node, own) in self.net.nodes.iter_mut().zip(&individual) {
            let r = match node.style {
                Style::Cooperative => total,
                Style::Egocentric => *own,
                Style::Ignorant => reward_ignorant(self.cfg.ignorant_constant),
            };
            node.reward_accum += r;
            sums[node.style.index()] += r;
            counts[node.style.index()] += 1;
        }
        let style_rewards = std::array::from_fn(|k| if counts[k] == 0 { 0.0 } else { sums[k] / counts[k] as f64 });
        (total, style_rewards)
    }

    /// Decide, then run ticks up to the next epoch boundary or episode end.
    pub fn run_epoch(&mut self, policies: &PolicySet) -> Result<()> {
        self.decide(policies)?;
        loop {
            self.run_tick();
            if self.is_done() || self.at_epoch_boundary() {
                return Ok(());
            }
        }
    }
}

/// Simulate one full episode with deterministic policies.
pub fn run_episode(spec: &EpisodeSpec, policies: &PolicySet, seed: u64) -> Result<EpisodeTrace> {
    for style in [Style::Cooperative, Style::Egocentric] {
        if spec.styles.contains(&style) && policies.actor(style).is_none() {
            return Err(Error::config(format!("scenario has {style} nodes but no {style} policy")));
        }
    }
    let mut sim = Simulation::new(spec, seed)?;
    while !sim.is_done() {
        sim.run_epoch(policies)?;
    }
    Ok(sim.into_trace())
}
