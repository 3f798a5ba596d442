//! Scenario runners, multi-seed aggregation and result files.
//!
//! Scenarios are written as short labels: `cop`, `ego` and `ign` run a single
//! style on every node; `mix-ego-K` and `mix-ign-K` swap `K` cooperative nodes
//! for free-riders of that kind. `mix-*-0` is exactly the `cop` run.
//!
//! Every grid cell `(scenario, zeta, recovery_days, seed)` simulates one
//! episode seeded by `seed` alone, so scenarios sharing a seed see the same
//! features and the same random streams.

pub mod io;
pub mod plot;

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use rand::seq::index;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{EpidemicConfig, RunConfig, SimConfig};
use crate::engine::{run_episode, EpisodeSpec, EpisodeTrace, PolicySet};
use crate::error::{Error, Result};
use crate::model::Style;
use crate::rng::{self, Stream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Scenario {
    Single(Style),
    /// `count` free-riders of style `kind` (egocentric or ignorant) among
    /// cooperative nodes.
    Mixed { kind: Style, count: usize },
}

impl Scenario {
    /// The styles this scenario needs trained actors for.
    pub fn required_policies(&self) -> Vec<Style> {
        match *self {
            Scenario::Single(Style::Ignorant) => vec![],
            Scenario::Single(s) => vec![s],
            Scenario::Mixed { kind, count } if count > 0 && kind == Style::Egocentric => {
                vec![Style::Cooperative, Style::Egocentric]
            }
            Scenario::Mixed { .. } => vec![Style::Cooperative],
        }
    }

    /// Per-node styles. Free-riders take the lowest ids unless placement is
    /// random, in which case the draw depends only on `seed`.
    pub fn styles(&self, n: usize, placement: Placement, seed: u64) -> Result<Vec<Style>> {
        match *self {
            Scenario::Single(s) => Ok(vec![s; n]),
            Scenario::Mixed { kind, count } => {
                if count > n {
                    return Err(Error::config(format!("{count} free-riders requested for {n} nodes")));
                }
                let mut styles = vec![Style::Cooperative; n];
                match placement {
                    Placement::LowestIds => styles[..count].fill(kind),
                    Placement::Random => {
                        let mut r = rng::stream(seed, Stream::Placement);
                        for i in index::sample(&mut r, n, count) {
                            styles[i] = kind;
                        }
                    }
                }
                Ok(styles)
            }
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scenario::Single(s) => write!(f, "{s}"),
            Scenario::Mixed { kind, count } => write!(f, "mix-{kind}-{count}"),
        }
    }
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::config(format!("unknown scenario `{s}` (expected cop, ego, ign, mix-ego-K or mix-ign-K)"));
        if let Some(rest) = s.strip_prefix("mix-") {
            let (kind, count) = rest.split_once('-').ok_or_else(bad)?;
            let kind: Style = kind.parse().map_err(|_| bad())?;
            if kind == Style::Cooperative {
                return Err(bad());
            }
            let count = count.parse().map_err(|_| bad())?;
            return Ok(Scenario::Mixed { kind, count });
        }
        s.parse::<Style>().map(Scenario::Single).map_err(|_| bad())
    }
}

impl Serialize for Scenario {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Scenario {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Placement {
    #[default]
    LowestIds,
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenarios: Vec<Scenario>,
    /// Grid axes; every (transmissibility, recovery_days) pair is a cell.
    pub transmissibility: Vec<f64>,
    pub recovery_days: Vec<f64>,
    pub seeds: Vec<u64>,
    pub output_dir: PathBuf,
    /// Where `cooperative.policy` and `egocentric.policy` live.
    pub policy_dir: PathBuf,
    pub plots: bool,
    /// Write one per-tick trace file per cell.
    pub traces: bool,
    pub placement: Placement,
}

pub const DEFAULT_FREE_RIDER_COUNTS: [usize; 5] = [1, 2, 3, 5, 10];

impl Default for ExperimentConfig {
    fn default() -> Self {
        let mut scenarios = vec![
            Scenario::Single(Style::Cooperative),
            Scenario::Single(Style::Egocentric),
            Scenario::Single(Style::Ignorant),
        ];
        for kind in [Style::Egocentric, Style::Ignorant] {
            scenarios.extend(DEFAULT_FREE_RIDER_COUNTS.map(|count| Scenario::Mixed { kind, count }));
        }
        ExperimentConfig {
            scenarios,
            transmissibility: vec![0.05, 0.10, 0.15, 0.20],
            recovery_days: vec![5.0, 10.0, 15.0, 20.0],
            seeds: (0..5).collect(),
            output_dir: PathBuf::from("dtcns-out"),
            policy_dir: PathBuf::from("policies"),
            plots: true,
            traces: true,
            placement: Placement::LowestIds,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self, sim: &SimConfig) -> Result<()> {
        for s in &self.scenarios {
            if let Scenario::Mixed { count, .. } = s {
                if *count > sim.num_nodes {
                    return Err(Error::config(format!(
                        "scenario {s} needs {count} free-riders but there are {} nodes",
                        sim.num_nodes
                    )));
                }
            }
        }
        if let Some(z) = self.transmissibility.iter().find(|z| !(0.0..=1.0).contains(*z)) {
            return Err(Error::config(format!("grid transmissibility {z} outside [0, 1]")));
        }
        if let Some(r) = self.recovery_days.iter().find(|r| !(1.0..=365.0).contains(*r)) {
            return Err(Error::config(format!("grid recovery_days {r} outside [1, 365]")));
        }
        Ok(())
    }

    /// Grid cells in axis order: transmissibility outer, recovery inner.
    pub fn grid(&self) -> Vec<(f64, f64)> {
        self.transmissibility
            .iter()
            .flat_map(|&z| self.recovery_days.iter().map(move |&r| (z, r)))
            .collect()
    }

    pub fn required_policies(&self) -> Vec<Style> {
        let mut need: Vec<Style> = self.scenarios.iter().flat_map(Scenario::required_policies).collect();
        need.sort();
        need.dedup();
        need
    }
}

/// Provenance of one simulated episode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellKey {
    pub scenario: Scenario,
    pub zeta: f64,
    pub recovery_days: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellResult {
    pub key: CellKey,
    pub trace: EpisodeTrace,
}

impl CellResult {
    pub fn summary(&self) -> SummaryRow {
        SummaryRow {
            key: self.key,
            final_cum_infections: self.trace.final_cum_infections(),
            final_cum_reward: self.trace.final_cum_reward(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SummaryRow {
    pub key: CellKey,
    pub final_cum_infections: u64,
    pub final_cum_reward: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Envelope {
    pub mean: f64,
    pub min: f64,
    pub max: f64,
}

impl Envelope {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len().max(1) as f64;
        Envelope {
            mean: values.iter().sum::<f64>() / n,
            min: values.iter().copied().fold(f64::INFINITY, f64::min),
            max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        }
    }
}

/// Seed aggregate of one (scenario, zeta, recovery_days) cell.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRow {
    pub scenario: Scenario,
    pub zeta: f64,
    pub recovery_days: f64,
    pub seeds: usize,
    pub cum_infections: Envelope,
    pub cum_reward: Envelope,
}

/// Group summaries by (scenario, zeta, recovery_days), keeping first-seen order.
pub fn aggregate(rows: &[SummaryRow]) -> Vec<AggregateRow> {
    let mut groups: Vec<((Scenario, f64, f64), Vec<&SummaryRow>)> = Vec::new();
    for row in rows {
        let k = (row.key.scenario, row.key.zeta, row.key.recovery_days);
        match groups.iter_mut().find(|(g, _)| *g == k) {
            Some((_, members)) => members.push(row),
            None => groups.push((k, vec![row])),
        }
    }
    groups
        .into_iter()
        .map(|((scenario, zeta, recovery_days), members)| {
            let inf: Vec<f64> = members.iter().map(|r| r.final_cum_infections as f64).collect();
            let rew: Vec<f64> = members.iter().map(|r| r.final_cum_reward).collect();
            AggregateRow {
                scenario,
                zeta,
                recovery_days,
                seeds: members.len(),
                cum_infections: Envelope::of(&inf),
                cum_reward: Envelope::of(&rew),
            }
        })
        .collect()
}

/// Simulate one cell.
pub fn run_cell(run: &RunConfig, key: CellKey, policies: &PolicySet) -> Result<CellResult> {
    let styles = key
        .scenario
        .styles(run.sim.num_nodes, run.experiment.placement, key.seed)?;
    let spec = EpisodeSpec {
        sim: run.sim.clone(),
        epidemic: EpidemicConfig {
            transmissibility: key.zeta,
            recovery_days: key.recovery_days,
            ..run.epidemic.clone()
        },
        styles,
    };
    let trace = run_episode(&spec, policies, key.seed)?;
    Ok(CellResult { key, trace })
}

/// Run `keys` on `jobs` worker threads (0 = all cores); results come back in
/// key order regardless of scheduling.
pub fn run_cells(run: &RunConfig, keys: &[CellKey], policies: &PolicySet, jobs: usize) -> Result<Vec<CellResult>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::config(format!("cannot start {jobs} workers: {e}")))?;
    pool.install(|| keys.par_iter().map(|&key| run_cell(run, key, policies)).collect())
}

fn keys_for(scenarios: &[Scenario], grid: &[(f64, f64)], seeds: &[u64]) -> Vec<CellKey> {
    let mut keys = Vec::new();
    for &scenario in scenarios {
        for &(zeta, recovery_days) in grid {
            for &seed in seeds {
                keys.push(CellKey {
                    scenario,
                    zeta,
                    recovery_days,
                    seed,
                });
            }
        }
    }
    keys
}

/// Every cell of the configured scenarios, grid and seeds.
pub fn sweep_keys(exp: &ExperimentConfig) -> Vec<CellKey> {
    keys_for(&exp.scenarios, &exp.grid(), &exp.seeds)
}

pub fn run_single_style(
    run: &RunConfig,
    style: Style,
    grid: &[(f64, f64)],
    seeds: &[u64],
    policies: &PolicySet,
    jobs: usize,
) -> Result<Vec<CellResult>> {
    run_cells(run, &keys_for(&[Scenario::Single(style)], grid, seeds), policies, jobs)
}

pub fn run_mixed(
    run: &RunConfig,
    kind: Style,
    counts: &[usize],
    grid: &[(f64, f64)],
    seeds: &[u64],
    policies: &PolicySet,
    jobs: usize,
) -> Result<Vec<CellResult>> {
    if kind == Style::Cooperative {
        return Err(Error::config("free-riders are egocentric or ignorant"));
    }
    let scenarios: Vec<Scenario> = counts.iter().map(|&count| Scenario::Mixed { kind, count }).collect();
    run_cells(run, &keys_for(&scenarios, grid, seeds), policies, jobs)
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub cells: Vec<CellResult>,
    pub summaries: Vec<SummaryRow>,
    pub aggregates: Vec<AggregateRow>,
}

/// The full scenario × grid × seed sweep with seed aggregates.
pub fn run_resilience_sweep(run: &RunConfig, policies: &PolicySet, jobs: usize) -> Result<SweepResult> {
    run.validate()?;
    let cells = run_cells(run, &sweep_keys(&run.experiment), policies, jobs)?;
    let summaries: Vec<SummaryRow> = cells.iter().map(CellResult::summary).collect();
    let aggregates = aggregate(&summaries);
    Ok(SweepResult {
        cells,
        summaries,
        aggregates,
    })
}
