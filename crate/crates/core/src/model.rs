//! Nodes, preference genomes, directed edge states and the temporal network.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::config::SimConfig;
use crate::error::{Error, Result};
use crate::rng::{self, SimRng, Stream};

/// Feature 0 is the health flag, feature 1 a static uniform trait.
pub const NUM_FEATURES: usize = 2;
pub const HEALTH_FEATURE: usize = 0;

pub type Features = [f64; NUM_FEATURES];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Style {
    Cooperative,
    Egocentric,
    Ignorant,
}

impl Style {
    pub const ALL: [Style; 3] = [Style::Cooperative, Style::Egocentric, Style::Ignorant];

    pub fn short_name(self) -> &'static str {
        match self {
            Style::Cooperative => "cop",
            Style::Egocentric => "ego",
            Style::Ignorant => "ign",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Style {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.short_name())
    }
}

impl FromStr for Style {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "cop" | "cooperative" => Ok(Style::Cooperative),
            "ego" | "egocentric" => Ok(Style::Egocentric),
            "ign" | "ignorant" => Ok(Style::Ignorant),
            other => Err(Error::config(format!("unknown style `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Health {
    Susceptible,
    Infected,
    /// Immune; only reachable when permanent recovery is enabled.
    Recovered,
}

/// Connection preferences and their weights.
///
/// `p`/`w_p` drive preferential attachment, `h`/`w_h` homophily. The
/// common-friend pair `c`/`w_c` is carried but no score uses it.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PreferenceGenome {
    pub p: [i8; NUM_FEATURES],
    pub w_p: Features,
    pub h: [i8; NUM_FEATURES],
    pub w_h: Features,
    pub c: i8,
    pub w_c: f64,
}

impl PreferenceGenome {
    /// Weights are zero exactly when their preference is zero, and lie in [0, 1].
    pub fn is_consistent(&self) -> bool {
        let pair_ok = |pref: i8, w: f64| {
            (-1..=1).contains(&pref) && (0.0..=1.0).contains(&w) && ((pref == 0) == (w == 0.0))
        };
        (0..NUM_FEATURES).all(|k| pair_ok(self.p[k], self.w_p[k]) && pair_ok(self.h[k], self.w_h[k]))
            && pair_ok(self.c, self.w_c)
    }

    pub fn signed_p(&self) -> Features {
        std::array::from_fn(|k| f64::from(self.p[k]) * self.w_p[k])
    }

    pub fn signed_h(&self) -> Features {
        std::array::from_fn(|k| f64::from(self.h[k]) * self.w_h[k])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NodeState {
    pub id: usize,
    pub style: Style,
    pub features: Features,
    pub genome: PreferenceGenome,
    pub health: Health,
    /// Remaining infected ticks; positive iff infected.
    pub recovery_clock: u32,
    pub capital_spent: u32,
    pub capital_limit: u32,
    pub reward_accum: f64,
}

impl NodeState {
    pub fn is_infected(&self) -> bool {
        self.health == Health::Infected
    }

    /// The binary health flag: 1 when infected.
    pub fn beta(&self) -> f64 {
        if self.is_infected() {
            1.0
        } else {
            0.0
        }
    }

    pub fn has_capital(&self) -> bool {
        self.capital_spent < self.capital_limit
    }

    pub(crate) fn set_health(&mut self, health: Health, clock: u32) {
        self.health = health;
        self.recovery_clock = clock;
        self.features[HEALTH_FEATURE] = self.beta();
    }
}

/// State of one directed connection at the current tick.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct EdgeState {
    pub interacted: bool,
    pub intensity: f64,
    pub bonded: bool,
    pub bond_intensity: f64,
    /// `(tick, intensity)` of recent interactions, pruned to the bond window.
    pub history: VecDeque<(u64, f64)>,
}

impl EdgeState {
    pub(crate) fn clear_tick(&mut self) {
        self.interacted = false;
        self.intensity = 0.0;
        self.bonded = false;
        self.bond_intensity = 0.0;
    }

    pub(crate) fn record(&mut self, tick: u64, intensity: f64, window: u64) {
        self.interacted = true;
        self.intensity = intensity;
        self.history.push_back((tick, intensity));
        self.prune(tick, window);
    }

    pub(crate) fn prune(&mut self, now: u64, window: u64) {
        while let Some(&(t, _)) = self.history.front() {
            if t + window < now {
                self.history.pop_front();
            } else {
                break;
            }
        }
    }

    pub fn invariants_hold(&self) -> bool {
        self.interacted == (self.intensity > 0.0)
            && self.bonded == (self.bond_intensity > 0.0)
            && self.intensity >= 0.0
            && self.bond_intensity >= 0.0
    }
}

/// Distinct partners touched during a decision epoch, by direction.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochContacts {
    pub(crate) interacted: Vec<bool>,
    pub(crate) bonded: Vec<bool>,
}

impl EpochContacts {
    fn new(len: usize) -> Self {
        EpochContacts {
            interacted: vec![false; len],
            bonded: vec![false; len],
        }
    }

    fn clear(&mut self) {
        self.interacted.fill(false);
        self.bonded.fill(false);
    }
}

/// A fixed node set with dense directed edge storage (no diagonal).
#[derive(Debug, Clone, PartialEq)]
pub struct TemporalNetwork {
    num_nodes: usize,
    tick: u64,
    pub nodes: Vec<NodeState>,
    edges: Vec<EdgeState>,
    pub(crate) epoch_current: EpochContacts,
    pub(crate) epoch_last: EpochContacts,
}

impl TemporalNetwork {
    /// `N` nodes with uniform traits, zero genomes, no interactions.
    pub fn new(config: &SimConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let n = config.num_nodes;
        let mut rng = rng::stream(seed, Stream::Features);
        let nodes = (0..n)
            .map(|id| NodeState {
                id,
                style: Style::Cooperative,
                features: [0.0, rng.random::<f64>()],
                genome: PreferenceGenome::default(),
                health: Health::Susceptible,
                recovery_clock: 0,
                capital_spent: 0,
                capital_limit: n.saturating_sub(1) as u32,
                reward_accum: 0.0,
            })
            .collect();
        let pairs = n * n.saturating_sub(1);
        Ok(TemporalNetwork {
            num_nodes: n,
            tick: 0,
            nodes,
            edges: vec![EdgeState::default(); pairs],
            epoch_current: EpochContacts::new(pairs),
            epoch_last: EpochContacts::new(pairs),
        })
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn tick(&self) -> u64 {
        self.tick
    }

    pub(crate) fn set_tick(&mut self, tick: u64) {
        self.tick = tick;
    }

    #[inline]
    pub(crate) fn edge_index(&self, i: usize, j: usize) -> usize {
        assert!(i != j, "self-edges do not exist ({i} -> {i})");
        debug_assert!(i < self.num_nodes && j < self.num_nodes);
        i * (self.num_nodes - 1) + if j < i { j } else { j - 1 }
    }

    pub fn edge(&self, i: usize, j: usize) -> &EdgeState {
        &self.edges[self.edge_index(i, j)]
    }

    pub fn edge_mut(&mut self, i: usize, j: usize) -> &mut EdgeState {
        let idx = self.edge_index(i, j);
        &mut self.edges[idx]
    }

    pub fn edges(&self) -> impl Iterator<Item = ((usize, usize), &EdgeState)> {
        let n = self.num_nodes;
        (0..n)
            .flat_map(move |i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .zip(self.edges.iter())
    }

    pub fn interacted(&self, i: usize, j: usize) -> bool {
        self.edge(i, j).interacted
    }

    /// Contact in either direction this tick.
    pub fn in_contact(&self, i: usize, j: usize) -> bool {
        self.edge(i, j).interacted || self.edge(j, i).interacted
    }

    pub fn infected_count(&self) -> usize {
        self.nodes.iter().filter(|n| n.is_infected()).count()
    }

    pub fn interaction_count(&self) -> usize {
        self.edges.iter().filter(|e| e.interacted).count()
    }

    /// Bonded unordered pairs at the current tick.
    pub fn bond_count(&self) -> usize {
        self.edges.iter().filter(|e| e.bonded).count() / 2
    }

    pub(crate) fn clear_tick_state(&mut self) {
        for e in &mut self.edges {
            e.clear_tick();
        }
    }

    pub(crate) fn note_epoch_contacts(&mut self) {
        for (idx, e) in self.edges.iter().enumerate() {
            if e.interacted {
                self.epoch_current.interacted[idx] = true;
            }
            if e.bonded {
                self.epoch_current.bonded[idx] = true;
            }
        }
    }

    /// Roll the epoch: current contacts become the observed last epoch and
    /// every node's capital is refunded.
    pub(crate) fn start_epoch(&mut self) {
        std::mem::swap(&mut self.epoch_current, &mut self.epoch_last);
        self.epoch_current.clear();
        for node in &mut self.nodes {
            node.capital_spent = 0;
        }
    }

    /// Per-node counts over the last epoch: (distinct out partners, distinct
    /// in partners, distinct bonded partners).
    pub fn last_epoch_degrees(&self, i: usize) -> (usize, usize, usize) {
        let mut out = 0;
        let mut inc = 0;
        let mut bonds = 0;
        for j in (0..self.num_nodes).filter(|&j| j != i) {
            let ij = self.edge_index(i, j);
            let ji = self.edge_index(j, i);
            out += usize::from(self.epoch_last.interacted[ij]);
            inc += usize::from(self.epoch_last.interacted[ji]);
            bonds += usize::from(self.epoch_last.bonded[ij]);
        }
        (out, inc, bonds)
    }

    pub(crate) fn last_epoch_contact(&self, i: usize, j: usize) -> bool {
        self.epoch_last.interacted[self.edge_index(i, j)]
            || self.epoch_last.interacted[self.edge_index(j, i)]
    }

    pub fn assign_styles(&mut self, styles: &[Style]) -> Result<()> {
        if styles.len() != self.num_nodes {
            return Err(Error::config(format!(
                "{} styles given for {} nodes",
                styles.len(),
                self.num_nodes
            )));
        }
        for (node, &style) in self.nodes.iter_mut().zip(styles) {
            node.style = style;
        }
        Ok(())
    }
}

/// Which ordered pairs meet at a tick.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EncounterModel {
    FullMixing,
    Bernoulli(f64),
}

impl EncounterModel {
    pub fn from_probability(p: f64) -> Self {
        if p >= 1.0 {
            EncounterModel::FullMixing
        } else {
            EncounterModel::Bernoulli(p)
        }
    }

    /// Whether the ordered pair meets; full mixing draws nothing.
    pub fn meets(&self, rng: &mut SimRng) -> bool {
        match *self {
            EncounterModel::FullMixing => true,
            EncounterModel::Bernoulli(p) => rng.random::<f64>() < p,
        }
    }
}

/// Ordered pairs eligible for evaluation under full mixing.
pub fn encounter_set(net: &TemporalNetwork, _tick: u64) -> Vec<(usize, usize)> {
    let n = net.num_nodes();
    (0..n)
        .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
        .collect()
}
