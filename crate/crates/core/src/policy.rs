//! Observations, action decoding, rewards and policy files.
//!
//! Each node is summarised by a six-entry block
//! `[health, trait, out-partners, in-partners, bonded partners, risk]`, where
//! the partner counts are distinct partners during the last decision epoch
//! divided by `N - 1`, and the risk is the contact risk computed over those
//! partners with current health. Policies read 12 numbers: the node's own
//! block followed by a population mean block (all nodes for the collective
//! mind, the other nodes for an egocentric agent), so one set of actor
//! weights serves any network size.

use std::fmt::Write as _;
use std::path::Path;

use rand::Rng;

use crate::error::{Error, Result};
use crate::model::{PreferenceGenome, Style, TemporalNetwork, NUM_FEATURES};
use crate::td3::net::{Activation, Dense, DenseNet};

pub const OBS_BLOCK: usize = 6;
pub const POLICY_INPUT: usize = 2 * OBS_BLOCK;
pub const ACTION_DIM: usize = 2 * NUM_FEATURES + 1;

/// Continuous policy output: `F` entries for preferential attachment, `F`
/// for homophily, then one for the capital limit. Entries lie in [-1, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct ActionVector(pub Vec<f64>);

impl ActionVector {
    pub fn clamped(mut values: Vec<f64>) -> Self {
        for v in &mut values {
            *v = v.clamp(-1.0, 1.0);
        }
        ActionVector(values)
    }
}

/// Whose view to build.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ObservationTarget {
    /// Every node's block, concatenated in id order (`6N` entries).
    Collective,
    /// Own block plus the mean block of the other nodes (12 entries).
    Node(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub values: Vec<f64>,
}

impl Observation {
    /// Shared-actor input for node `i` out of a collective observation.
    pub fn cooperative_input(&self, i: usize) -> Vec<f64> {
        let blocks: Vec<[f64; OBS_BLOCK]> = self
            .values
            .chunks_exact(OBS_BLOCK)
            .map(|c| c.try_into().expect("chunk of block size"))
            .collect();
        policy_input(&blocks, i, Style::Cooperative)
    }
}

fn last_epoch_risk(net: &TemporalNetwork, i: usize, zeta: f64) -> f64 {
    let me_infected = net.nodes[i].is_infected();
    let exposures = (0..net.num_nodes())
        .filter(|&j| j != i && net.last_epoch_contact(i, j))
        .filter(|&j| net.nodes[j].is_infected() != me_infected)
        .count() as i32;
    1.0 - (1.0 - zeta).powi(exposures)
}

pub fn node_block(net: &TemporalNetwork, i: usize, zeta: f64) -> [f64; OBS_BLOCK] {
    let node = &net.nodes[i];
    let denom = net.num_nodes().saturating_sub(1).max(1) as f64;
    let (out, inc, bonds) = net.last_epoch_degrees(i);
    [
        node.beta(),
        node.features[1],
        out as f64 / denom,
        inc as f64 / denom,
        bonds as f64 / denom,
        last_epoch_risk(net, i, zeta),
    ]
}

/// Blocks for every node, in id order.
pub fn node_blocks(net: &TemporalNetwork, zeta: f64) -> Vec<[f64; OBS_BLOCK]> {
    (0..net.num_nodes()).map(|i| node_block(net, i, zeta)).collect()
}

/// Element-wise mean of `blocks`, optionally leaving one node out.
pub fn mean_block(blocks: &[[f64; OBS_BLOCK]], skip: Option<usize>) -> [f64; OBS_BLOCK] {
    let count = blocks.len() - usize::from(skip.is_some());
    let mut mean = [0.0; OBS_BLOCK];
    if count == 0 {
        return mean;
    }
    for (j, block) in blocks.iter().enumerate() {
        if Some(j) == skip {
            continue;
        }
        for (m, v) in mean.iter_mut().zip(block) {
            *m += v / count as f64;
        }
    }
    mean
}

/// The 12-entry actor input for node `i` acting under `style`: the
/// collective mind averages over everyone, an egocentric agent over the
/// others.
pub fn policy_input(blocks: &[[f64; OBS_BLOCK]], i: usize, style: Style) -> Vec<f64> {
    let skip = match style {
        Style::Egocentric => Some(i),
        Style::Cooperative | Style::Ignorant => None,
    };
    let mut input = blocks[i].to_vec();
    input.extend(mean_block(blocks, skip));
    input
}

pub fn build_observation(target: ObservationTarget, net: &TemporalNetwork, zeta: f64) -> Observation {
    let blocks = node_blocks(net, zeta);
    let values = match target {
        ObservationTarget::Collective => blocks.into_iter().flatten().collect(),
        ObservationTarget::Node(i) => policy_input(&blocks, i, Style::Egocentric),
    };
    Observation { values }
}

fn decode_pref(a: f64, deadzone: f64) -> (i8, f64) {
    let a = a.clamp(-1.0, 1.0);
    if a.abs() < deadzone || a == 0.0 {
        (0, 0.0)
    } else {
        (a.signum() as i8, a.abs())
    }
}

/// Map an action to a genome and a capital limit in `[1, N - 1]`.
/// Out-of-range entries are clamped.
pub fn decode_action(a: &ActionVector, deadzone: f64, num_nodes: usize) -> (PreferenceGenome, u32) {
    assert_eq!(a.0.len(), ACTION_DIM, "action length mismatch");
    let mut g = PreferenceGenome::default();
    for k in 0..NUM_FEATURES {
        (g.p[k], g.w_p[k]) = decode_pref(a.0[k], deadzone);
        (g.h[k], g.w_h[k]) = decode_pref(a.0[NUM_FEATURES + k], deadzone);
    }
    let x = a.0[2 * NUM_FEATURES].clamp(-1.0, 1.0).abs();
    let span = num_nodes.saturating_sub(2) as f64;
    let limit = (1.0 + x * span).round() as u32;
    (g, limit.min(num_nodes.saturating_sub(1) as u32))
}

/// Inverse of [`decode_action`] for genomes whose weights sit outside the
/// deadzone.
pub fn encode_action(g: &PreferenceGenome, capital_limit: u32, num_nodes: usize) -> ActionVector {
    let mut a = vec![0.0; ACTION_DIM];
    for k in 0..NUM_FEATURES {
        a[k] = f64::from(g.p[k]) * g.w_p[k];
        a[NUM_FEATURES + k] = f64::from(g.h[k]) * g.w_h[k];
    }
    let span = num_nodes.saturating_sub(2) as f64;
    a[2 * NUM_FEATURES] = if span > 0.0 {
        (f64::from(capital_limit) - 1.0) / span
    } else {
        0.0
    };
    ActionVector(a)
}

/// A node's own reward term at the current tick: bonded intensity,
/// discounted by its contact risk, and depreciated by `delta` while infected.
pub fn individual_reward(net: &TemporalNetwork, i: usize, zeta: f64, delta: f64) -> f64 {
    let bonded: f64 = (0..net.num_nodes())
        .filter(|&j| j != i)
        .map(|j| {
            let e = net.edge(i, j);
            if e.bonded {
                e.bond_intensity
            } else {
                0.0
            }
        })
        .sum();
    if bonded == 0.0 {
        return 0.0;
    }
    let risk = crate::epidemic::spreading_risk(i, net, zeta);
    let value = bonded * (1.0 - risk);
    if net.nodes[i].is_infected() {
        delta * value
    } else {
        value
    }
}

/// Collective reward: population mean of the individual terms.
pub fn reward_cooperative(net: &TemporalNetwork, zeta: f64, delta: f64) -> f64 {
    let n = net.num_nodes();
    if n == 0 {
        return 0.0;
    }
    (0..n).map(|i| individual_reward(net, i, zeta, delta)).sum::<f64>() / n as f64
}

pub fn reward_egocentric(i: usize, net: &TemporalNetwork, zeta: f64, delta: f64) -> f64 {
    individual_reward(net, i, zeta, delta)
}

pub fn reward_ignorant(constant: f64) -> f64 {
    constant
}

fn random_pref(rng: &mut impl Rng) -> (i8, f64) {
    let pref = rng.random_range(-1i8..=1);
    if pref == 0 {
        (0, 0.0)
    } else {
        // uniform on (0, 1]
        (pref, 1.0 - rng.random::<f64>())
    }
}

/// Random preferences: each uniform on {-1, 0, 1}, nonzero ones weighted
/// uniformly on (0, 1].
pub fn ignorant_act(rng: &mut impl Rng) -> PreferenceGenome {
    let mut g = PreferenceGenome::default();
    for k in 0..NUM_FEATURES {
        (g.p[k], g.w_p[k]) = random_pref(rng);
    }
    for k in 0..NUM_FEATURES {
        (g.h[k], g.w_h[k]) = random_pref(rng);
    }
    g
}

/// Uniform capital limit in `[1, N - 1]` for ignorant nodes.
pub fn random_capital_limit(rng: &mut impl Rng, num_nodes: usize) -> u32 {
    let hi = num_nodes.saturating_sub(1).max(1) as u32;
    rng.random_range(1..=hi).min(num_nodes.saturating_sub(1) as u32)
}

const POLICY_MAGIC: &str = "dtcns-policy v1";

/// A trained actor plus the header needed to check it fits a scenario.
///
/// Text format:
///
/// ```text
/// dtcns-policy v1
/// kind cooperative
/// features 2
/// nodes 30
/// layers 12 64 64 5
/// hidden relu
/// output tanh
/// layer 0
/// w <in values>        (one line per output unit)
/// b <out values>
/// layer 1
/// ...
/// ```
///
/// Floats use the shortest representation that parses back to the same bits.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyFile {
    pub kind: Style,
    pub num_features: usize,
    pub num_nodes: usize,
    pub actor: DenseNet,
}

impl PolicyFile {
    pub fn to_text(&self) -> String {
        let kind = match self.kind {
            Style::Cooperative => "cooperative",
            Style::Egocentric => "egocentric",
            Style::Ignorant => "ignorant",
        };
        let mut out = String::new();
        let sizes: Vec<String> = self.actor.sizes().iter().map(usize::to_string).collect();
        writeln!(out, "{POLICY_MAGIC}").unwrap();
        writeln!(out, "kind {kind}").unwrap();
        writeln!(out, "features {}", self.num_features).unwrap();
        writeln!(out, "nodes {}", self.num_nodes).unwrap();
        writeln!(out, "layers {}", sizes.join(" ")).unwrap();
        writeln!(out, "hidden {}", self.actor.hidden_activation().name()).unwrap();
        writeln!(out, "output {}", self.actor.output_activation().name()).unwrap();
        for (l, layer) in self.actor.layers().iter().enumerate() {
            writeln!(out, "layer {l}").unwrap();
            for row in layer.weight.rows() {
                let vals: Vec<String> = row.iter().map(|v| v.to_string()).collect();
                writeln!(out, "w {}", vals.join(" ")).unwrap();
            }
            let vals: Vec<String> = layer.bias.iter().map(|v| v.to_string()).collect();
            writeln!(out, "b {}", vals.join(" ")).unwrap();
        }
        out
    }

    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let bad = |msg: String| Error::PolicyFormat {
            path: path.to_path_buf(),
            msg,
        };
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
        let mut next = |what: &str| lines.next().ok_or_else(|| bad(format!("missing {what}")));
        if next("header")? != POLICY_MAGIC {
            return Err(bad("unknown header or version".into()));
        }
        let field = |line: &str, key: &str| -> Result<String> {
            line.strip_prefix(key)
                .and_then(|r| r.strip_prefix(' '))
                .map(str::to_owned)
                .ok_or_else(|| bad(format!("expected `{key}`, found `{line}`")))
        };
        let int = |s: &str| s.parse::<usize>().map_err(|e| bad(format!("bad integer `{s}`: {e}")));
        let floats = |s: &str| -> Result<Vec<f64>> {
            s.split_whitespace()
                .map(|v| v.parse::<f64>().map_err(|e| bad(format!("bad number `{v}`: {e}"))))
                .collect()
        };
        let kind: Style = field(next("kind")?, "kind")?.parse().map_err(|_| bad("bad kind".into()))?;
        let num_features = int(&field(next("features")?, "features")?)?;
        let num_nodes = int(&field(next("nodes")?, "nodes")?)?;
        let sizes: Vec<usize> = field(next("layers")?, "layers")?
            .split_whitespace()
            .map(int)
            .collect::<Result<_>>()?;
        let act = |name: String| Activation::from_name(&name).ok_or_else(|| bad(format!("unknown activation `{name}`")));
        let hidden = act(field(next("hidden")?, "hidden")?)?;
        let output = act(field(next("output")?, "output")?)?;
        if sizes.len() < 2 {
            return Err(bad("need at least two layer sizes".into()));
        }
        let mut layers = Vec::new();
        for (l, w) in sizes.windows(2).enumerate() {
            let (inputs, outputs) = (w[0], w[1]);
            if field(next("layer")?, "layer")? != l.to_string() {
                return Err(bad(format!("expected layer {l}")));
            }
            let mut layer = Dense::zeros(inputs, outputs);
            for r in 0..outputs {
                let row = floats(&field(next("weights")?, "w")?)?;
                if row.len() != inputs {
                    return Err(bad(format!("layer {l} row {r}: {} values, expected {inputs}", row.len())));
                }
                layer.weight.row_mut(r).assign(&ndarray::Array1::from(row));
            }
            let bias = floats(&field(next("bias")?, "b")?)?;
            if bias.len() != outputs {
                return Err(bad(format!("layer {l} bias: {} values, expected {outputs}", bias.len())));
            }
            layer.bias = ndarray::Array1::from(bias);
            layers.push(layer);
        }
        if lines.next().is_some() {
            return Err(bad("trailing content".into()));
        }
        let actor = DenseNet::from_layers(layers, hidden, output).ok_or_else(|| bad("inconsistent layers".into()))?;
        Ok(PolicyFile {
            kind,
            num_features,
            num_nodes,
            actor,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path)
    }

    /// Check the actor fits the observation and action layout.
    pub fn check_compatible(&self, path: &Path) -> Result<()> {
        let ok = self.num_features == NUM_FEATURES
            && self.actor.input_size() == POLICY_INPUT
            && self.actor.output_size() == ACTION_DIM;
        if ok {
            Ok(())
        } else {
            Err(Error::PolicyFormat {
                path: path.to_path_buf(),
                msg: format!(
                    "actor maps {} -> {} with {} features; expected {POLICY_INPUT} -> {ACTION_DIM} with {NUM_FEATURES}",
                    self.actor.input_size(),
                    self.actor.output_size(),
                    self.num_features
                ),
            })
        }
    }
}
