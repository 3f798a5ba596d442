//! End-to-end acceptance run: trains both policies with the default
//! configuration, sweeps every scenario over the default grid, and checks
//! each acceptance criterion. Prints one PASS/FAIL line per criterion.
//!
//! Failures of the numerical and config checks (7, 8) always make the run
//! fail. The behavioural criteria (1 to 6) are reported; set
//! `DTCNS_ACCEPTANCE_STRICT=1` to make their failures fatal as well.

use std::collections::BTreeMap;
use std::time::Instant;

use dtcns_core::config::{defaults_dump, EpidemicConfig, RunConfig, SimConfig};
use dtcns_core::engine::{run_episode, EpisodeSpec, PolicySet, Simulation};
use dtcns_core::epidemic::{seed_epidemic, step_epidemic, EpidemicState};
use dtcns_core::harness::{run_cells, run_resilience_sweep, CellKey, CellResult, Scenario};
use dtcns_core::policy::{ActionVector, ACTION_DIM};
use dtcns_core::rng::{self, Stream};
use dtcns_core::td3::net::{Activation, DenseNet};
use dtcns_core::td3::train::train;
use dtcns_core::{Style, TemporalNetwork};
use ndarray::Array2;
use rand::Rng;

const GOLDEN: &str = include_str!("golden/config_dump.toml");

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

// ---------------------------------------------------------------------------
// Sweep bookkeeping

/// Seed-level finals keyed by (scenario, zeta, recovery_days).
struct Table {
    cells: BTreeMap<(String, u64, u64), Vec<(u64, u64, f64)>>,
}

fn bits(x: f64) -> u64 {
    x.to_bits()
}

impl Table {
    fn new(cells: &[CellResult]) -> Self {
        let mut map: BTreeMap<_, Vec<_>> = BTreeMap::new();
        for c in cells {
            map.entry((c.key.scenario.to_string(), bits(c.key.zeta), bits(c.key.recovery_days)))
                .or_default()
                .push((c.key.seed, c.trace.final_cum_infections(), c.trace.final_cum_reward()));
        }
        for v in map.values_mut() {
            v.sort_by_key(|r| r.0);
        }
        Table { cells: map }
    }

    fn seeds(&self, scen: &str, zeta: f64, rd: f64) -> &[(u64, u64, f64)] {
        self.cells
            .get(&(scen.to_string(), bits(zeta), bits(rd)))
            .unwrap_or_else(|| panic!("no cells for {scen} z{zeta} r{rd}"))
    }

    fn mean_inf(&self, scen: &str, zeta: f64, rd: f64) -> f64 {
        let v = self.seeds(scen, zeta, rd);
        v.iter().map(|r| r.1 as f64).sum::<f64>() / v.len() as f64
    }

    fn mean_rew(&self, scen: &str, zeta: f64, rd: f64) -> f64 {
        let v = self.seeds(scen, zeta, rd);
        v.iter().map(|r| r.2).sum::<f64>() / v.len() as f64
    }
}

/// Adjacent decreases in `series`, each as a fraction of the series range.
fn inversions(series: &[f64]) -> Vec<f64> {
    let lo = series.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = series.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let range = hi - lo;
    series
        .windows(2)
        .filter(|w| w[1] < w[0])
        .map(|w| (w[0] - w[1]) / range)
        .collect()
}

/// Non-decreasing except for at most one inversion of at most 5% of range.
fn nearly_monotone(all: &[Vec<f64>]) -> (bool, Vec<f64>) {
    let inv: Vec<f64> = all.iter().flat_map(|s| inversions(s)).collect();
    (inv.len() <= 1 && inv.iter().all(|&f| f <= 0.05), inv)
}

fn fmt_series(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:.1}")).collect::<Vec<_>>().join(" ")
}

// ---------------------------------------------------------------------------
// Criteria on the sweep

const Z0: f64 = 0.10;
const R0: f64 = 5.0;

fn reward_ordering(t: &Table) -> Outcome {
    let cop = t.seeds("cop", Z0, R0);
    let ego = t.seeds("ego", Z0, R0);
    let ign = t.seeds("ign", Z0, R0);
    let mut good = 0;
    let mut rows = Vec::new();
    for ((c, e), i) in cop.iter().zip(ego).zip(ign) {
        if c.2 > e.2 && e.2 > i.2 {
            good += 1;
        }
        rows.push(format!("s{}: {:.1}/{:.1}/{:.1}", c.0, c.2, e.2, i.2));
    }
    outcome(
        good >= 4,
        format!("{good}/{} seeds ordered cop > ego > ign [{}]", cop.len(), rows.join(", ")),
    )
}

/// Daily current infections (value at the last tick of each day).
fn daily_infected(c: &CellResult) -> Vec<f64> {
    c.trace.daily().iter().map(|d| d.infected_now as f64).collect()
}

fn acf(x: &[f64], lag: usize) -> f64 {
    let m = x.iter().sum::<f64>() / x.len() as f64;
    let var: f64 = x.iter().map(|v| (v - m).powi(2)).sum();
    if var == 0.0 {
        return 0.0;
    }
    x.iter()
        .zip(&x[lag..])
        .map(|(a, b)| (a - m) * (b - m))
        .sum::<f64>()
        / var
}

/// First autocorrelation peak above the white-noise band, if any.
fn dominant_period(x: &[f64]) -> Option<usize> {
    let band = 2.0 / (x.len() as f64).sqrt();
    let r: Vec<f64> = (0..=x.len() / 2).map(|l| acf(x, l)).collect();
    (2..r.len() - 1).find(|&l| r[l] > band && r[l] >= r[l - 1] && r[l] >= r[l + 1])
}

fn infection_shape(cells: &[CellResult]) -> Outcome {
    let at = |scen: &str| -> Vec<&CellResult> {
        cells
            .iter()
            .filter(|c| c.key.scenario.to_string() == scen && c.key.zeta == Z0 && c.key.recovery_days == R0)
            .collect()
    };
    let (lo, hi) = (2.0 * R0 - 2.0, 2.0 * R0 + 2.0);
    let periods: Vec<Option<usize>> = at("ego").iter().map(|c| dominant_period(&daily_infected(c))).collect();
    let osc = periods
        .iter()
        .filter(|p| p.is_some_and(|p| (lo..=hi).contains(&(p as f64))))
        .count();
    let ticks_by_day30 = 30 * SimConfig::default().ticks_per_day;
    let extinct = |scen: &str| {
        at(scen)
            .iter()
            .filter(|c| c.trace.records.iter().take(ticks_by_day30).any(|r| r.infected_now == 0))
            .count()
    };
    let (cop, ign) = (extinct("cop"), extinct("ign"));
    outcome(
        osc >= 3 && cop >= 3 && ign >= 3,
        format!(
            "ego periods {periods:?} ({osc}/5 within {lo}-{hi} days); extinct by day 30: cop {cop}/5, ign {ign}/5"
        ),
    )
}

fn mixed_counts() -> [usize; 5] {
    dtcns_core::harness::DEFAULT_FREE_RIDER_COUNTS
}

fn full_cooperation_best(t: &Table) -> Outcome {
    let (ci, cr) = (t.mean_inf("cop", Z0, R0), t.mean_rew("cop", Z0, R0));
    let mut bad = Vec::new();
    for kind in ["ego", "ign"] {
        for k in mixed_counts() {
            let s = format!("mix-{kind}-{k}");
            let (i, r) = (t.mean_inf(&s, Z0, R0), t.mean_rew(&s, Z0, R0));
            if !(ci < i && cr > r) {
                bad.push(format!("{s} inf {i:.1} rew {r:.1}"));
            }
        }
    }
    outcome(
        bad.is_empty(),
        format!("cop inf {ci:.1} rew {cr:.1}; violations: [{}]", bad.join(", ")),
    )
}

fn free_riding_harm(t: &Table) -> Outcome {
    let series: Vec<f64> = mixed_counts()
        .iter()
        .map(|k| t.mean_inf(&format!("mix-ego-{k}"), Z0, R0))
        .collect();
    let (ok, inv) = nearly_monotone(std::slice::from_ref(&series));
    outcome(ok, format!("k=1,2,3,5,10 -> [{}]; inversions {inv:?}", fmt_series(&series)))
}

fn resilience_monotone(t: &Table, run: &RunConfig) -> Outcome {
    let zs = &run.experiment.transmissibility;
    let rs = &run.experiment.recovery_days;
    let mut bad = Vec::new();
    for scen in &run.experiment.scenarios {
        let s = scen.to_string();
        let along_z: Vec<Vec<f64>> = rs
            .iter()
            .map(|&r| zs.iter().map(|&z| t.mean_inf(&s, z, r)).collect())
            .collect();
        let along_r: Vec<Vec<f64>> = zs
            .iter()
            .map(|&z| rs.iter().map(|&r| t.mean_inf(&s, z, r)).collect())
            .collect();
        for (axis, all) in [("zeta", &along_z), ("recovery", &along_r)] {
            let (ok, inv) = nearly_monotone(all);
            if !ok {
                bad.push(format!("{s} along {axis}: inversions {inv:.3?}"));
            }
        }
    }
    outcome(
        bad.is_empty(),
        format!("{} scenarios x 2 axes; violations: [{}]", run.experiment.scenarios.len(), bad.join("; ")),
    )
}

fn cooperative_collapse(t: &Table) -> Outcome {
    let (short, long) = (t.mean_inf("cop", Z0, 5.0), t.mean_inf("cop", Z0, 20.0));
    let ratio = long / short;
    outcome(
        ratio >= 3.0,
        format!("cop at zeta 0.10: recovery 5 -> {short:.1}, recovery 20 -> {long:.1}, ratio {ratio:.2}"),
    )
}

// ---------------------------------------------------------------------------
// Numerical property suite

/// Empirical infection frequency of one healthy node against `k` infected
/// contacts, half of them incoming, over 1e5 trials.
fn monte_carlo_infection() -> Outcome {
    let trials = 100_000;
    let mut lines = Vec::new();
    let mut pass = true;
    for (case, &(zeta, k)) in [(0.10, 1usize), (0.10, 3), (0.25, 2), (0.05, 4)].iter().enumerate() {
        let sim = SimConfig {
            num_nodes: k + 1,
            ..SimConfig::default()
        };
        let state = EpidemicState {
            seeds: (1..=k).collect(),
            transmissibility: zeta,
            recovery_ticks: 150,
            permanent_recovery: false,
        };
        let mut net = TemporalNetwork::new(&sim, 0).unwrap();
        seed_epidemic(&mut net, &state).unwrap();
        for j in 1..=k {
            let e = if j % 2 == 0 { net.edge_mut(0, j) } else { net.edge_mut(j, 0) };
            e.interacted = true;
            e.intensity = 0.25;
        }
        let mut r = rng::stream(case as u64, Stream::Epidemic);
        let hits = (0..trials)
            .filter(|_| {
                let mut n = net.clone();
                step_epidemic(&mut n, &state, &mut r);
                n.nodes[0].is_infected()
            })
            .count();
        let p = 1.0 - (1.0 - zeta).powi(k as i32);
        let phat = hits as f64 / trials as f64;
        let sigma = (p * (1.0 - p) / trials as f64).sqrt();
        let z = (phat - p) / sigma;
        pass &= z.abs() <= 3.0;
        lines.push(format!("zeta {zeta} k {k}: {phat:.4} vs {p:.4} ({z:+.2} sigma)"));
    }
    outcome(pass, lines.join("; "))
}

fn gradient_check() -> Outcome {
    let mut r = rng::stream(2024, Stream::NetInit);
    let mut worst: f64 = 0.0;
    let mut nets = 0;
    while nets < 100 {
        let inputs = r.random_range(1..6);
        let hidden = r.random_range(1..8);
        let outputs = r.random_range(1..4);
        let batch = r.random_range(1..5);
        let out_act = if r.random::<bool>() { Activation::Tanh } else { Activation::Identity };
        let net = DenseNet::new(&[inputs, hidden, hidden, outputs], Activation::Relu, out_act, &mut r);
        let x = Array2::from_shape_fn((batch, inputs), |_| r.random_range(-1.0..1.0));
        let c = Array2::from_shape_fn((batch, outputs), |_| r.random_range(-1.0..1.0));
        if !kink_free(&net, &x) {
            continue;
        }
        nets += 1;
        let tape = net.forward_batch(x.view());
        let analytic = net.backward(&tape, c.view()).0.to_flat();
        let base = net.to_flat();
        let loss = |p: &[f64]| {
            let mut n = net.clone();
            n.set_flat(p);
            (n.forward_batch(x.view()).output() * &c).sum()
        };
        let h = 1e-4;
        for (k, a) in analytic.iter().enumerate() {
            let mut plus = base.clone();
            let mut minus = base.clone();
            plus[k] += h;
            minus[k] -= h;
            let n = (loss(&plus) - loss(&minus)) / (2.0 * h);
            let rel = (a - n).abs() / a.abs().max(n.abs()).max(1e-6);
            worst = worst.max(rel);
        }
    }
    outcome(worst <= 1e-4, format!("{nets} random nets, worst relative error {worst:.2e}"))
}

/// Central differences are meaningless across a ReLU kink; skip inputs that
/// put any hidden pre-activation within 1e-3 of zero.
fn kink_free(net: &DenseNet, x: &Array2<f64>) -> bool {
    let mut a = x.clone();
    let layers = net.layers();
    for (l, layer) in layers.iter().enumerate() {
        let mut z = a.dot(&layer.weight.t());
        z += &layer.bias;
        if l + 1 < layers.len() && z.iter().any(|v| v.abs() < 1e-3) {
            return false;
        }
        z.mapv_inplace(|v| v.max(0.0));
        a = z;
    }
    true
}

fn random_action(r: &mut impl Rng) -> ActionVector {
    ActionVector((0..ACTION_DIM).map(|_| r.random_range(-1.0..=1.0)).collect())
}

fn fuzz_sim(sim: SimConfig, zeta: f64, recovery_days: f64, seed: u64) -> Simulation {
    let epi = EpidemicConfig {
        transmissibility: zeta,
        recovery_days,
        ..EpidemicConfig::default()
    };
    Simulation::new(&EpisodeSpec::uniform(sim, epi, Style::Cooperative), seed).unwrap()
}

fn bond_symmetry() -> Outcome {
    let mut checked = 0usize;
    let mut broken = Vec::new();
    for (window, seed) in [(1u64, 11u64), (3, 12)] {
        let cfg = SimConfig {
            bond_window_ticks: window,
            ..SimConfig::default()
        };
        let mut sim = fuzz_sim(cfg, 0.1, 5.0, seed);
        let mut r = rng::stream(seed, Stream::Exploration);
        for _ in 0..1000 {
            if sim.at_epoch_boundary() {
                sim.begin_epoch();
                for i in 0..sim.network().num_nodes() {
                    sim.apply_action(i, &random_action(&mut r));
                }
            }
            sim.run_tick();
            let net = sim.network();
            let n = net.num_nodes();
            for i in 0..n {
                for j in (i + 1)..n {
                    let (a, b) = (net.edge(i, j), net.edge(j, i));
                    checked += 1;
                    if a.bonded != b.bonded || a.bond_intensity.to_bits() != b.bond_intensity.to_bits() {
                        broken.push(format!("window {window} tick {} pair {i}-{j}", net.tick()));
                    }
                }
            }
        }
    }
    outcome(
        broken.is_empty(),
        format!("{checked} pair-ticks over two 1000-tick runs; asymmetric: {}", broken.len()),
    )
}

/// Independent recomputation of one tick from the pre-tick state and a full
/// log of past interactions. Scores, thresholds, capital-limited selection,
/// intensities, bonds, risks and rewards are all rebuilt from scratch.
struct BruteTick {
    out: Vec<Vec<Option<f64>>>,
    bond: Vec<Vec<Option<f64>>>,
}

fn brute_tick(pre: &TemporalNetwork, cfg: &SimConfig, log: &[(u64, usize, usize, f64)], t: u64) -> BruteTick {
    let n = pre.num_nodes();
    let mut out = vec![vec![None; n]; n];
    for i in 0..n {
        let src = &pre.nodes[i];
        let base = cfg.threshold_base.for_style(src.style);
        let thr = if src.is_infected() { cfg.eta * base } else { base };
        let g = &src.genome;
        let score = |j: usize| {
            let (fi, fj) = (&src.features, &pre.nodes[j].features);
            let h: f64 = (0..fi.len())
                .map(|k| (fi[k] - fj[k]).abs() * f64::from(g.h[k]) * g.w_h[k])
                .sum();
            let p: f64 = (0..fj.len()).map(|k| fj[k] * f64::from(g.p[k]) * g.w_p[k]).sum();
            0.5 * (h.clamp(0.0, 1.0) + p.clamp(0.0, 1.0))
        };
        let cand: Vec<(usize, f64)> = (0..n).filter(|&j| j != i).map(|j| (j, score(j))).filter(|c| c.1 > thr).collect();
        let remaining = src.capital_limit.saturating_sub(src.capital_spent) as usize;
        for &(j, s) in &cand {
            let better = cand.iter().filter(|&&(k, sk)| sk > s || (sk == s && k < j)).count();
            if better < remaining {
                out[i][j] = Some(cfg.b + cfg.alpha * (s - thr));
            }
        }
    }
    let w = cfg.bond_window_ticks;
    let hist = |i: usize, j: usize| -> Vec<f64> {
        let mut v: Vec<f64> = log
            .iter()
            .filter(|e| e.1 == i && e.2 == j && e.0 + w >= t)
            .map(|e| e.3)
            .collect();
        if let Some(x) = out[i][j] {
            v.push(x);
        }
        v
    };
    let mut bond = vec![vec![None; n]; n];
    for i in 0..n {
        for j in (i + 1)..n {
            let (hij, hji) = (hist(i, j), hist(j, i));
            let now = out[i][j].is_some() || out[j][i].is_some();
            let both = !hij.is_empty() && !hji.is_empty();
            if now && both {
                let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
                let wb = 0.5 * (mean(&hij) + mean(&hji));
                bond[i][j] = Some(wb);
                bond[j][i] = Some(wb);
            }
        }
    }
    BruteTick { out, bond }
}

/// Reward of the tick given the post-epidemic health the engine produced.
fn brute_reward(bt: &BruteTick, post: &TemporalNetwork, zeta: f64, delta: f64) -> f64 {
    let n = post.num_nodes();
    let contact = |i: usize, j: usize| bt.out[i][j].is_some() || bt.out[j][i].is_some();
    let individual = |i: usize| {
        let bonded: f64 = (0..n).filter(|&j| j != i).map(|j| bt.bond[i][j].unwrap_or(0.0)).sum();
        if bonded == 0.0 {
            return 0.0;
        }
        let me = post.nodes[i].is_infected();
        let k = (0..n)
            .filter(|&j| j != i && contact(i, j) && post.nodes[j].is_infected() != me)
            .count();
        let risk = 1.0 - (1.0 - zeta).powi(k as i32);
        let v = bonded * (1.0 - risk);
        if me {
            delta * v
        } else {
            v
        }
    };
    (0..n).map(individual).sum::<f64>() / n as f64
}

fn brute_force_pipeline() -> Outcome {
    let mut ticks = 0;
    let mut mismatches = Vec::new();
    for case in 0..24u64 {
        let n = 2 + (case % 3) as usize;
        let cfg = SimConfig {
            num_nodes: n,
            episode_days: 5,
            ticks_per_day: 8,
            rl_epoch_ticks: 4,
            bond_window_ticks: 1 + case % 3,
            noise_sigma: 0.0,
            ..SimConfig::default()
        };
        let zeta = [0.3, 0.6, 1.0][(case / 3 % 3) as usize];
        let mut sim = fuzz_sim(cfg.clone(), zeta, 0.25, case);
        let mut r = rng::stream(case, Stream::Exploration);
        let mut log: Vec<(u64, usize, usize, f64)> = Vec::new();
        while !sim.is_done() {
            if sim.at_epoch_boundary() {
                sim.begin_epoch();
                for i in 0..n {
                    sim.apply_action(i, &random_action(&mut r));
                }
            }
            let pre = sim.network().clone();
            let t = sim.next_tick();
            let bt = brute_tick(&pre, &cfg, &log, t);
            let rec = sim.run_tick().clone();
            let post = sim.network();
            ticks += 1;
            let mut ok = true;
            let mut interactions = 0;
            let mut bonds = 0;
            for i in 0..n {
                for j in (0..n).filter(|&j| j != i) {
                    let e = post.edge(i, j);
                    let want = bt.out[i][j];
                    ok &= e.interacted == want.is_some() && e.intensity.to_bits() == want.unwrap_or(0.0).to_bits();
                    let wb = bt.bond[i][j];
                    ok &= e.bonded == wb.is_some() && e.bond_intensity.to_bits() == wb.unwrap_or(0.0).to_bits();
                    interactions += usize::from(want.is_some());
                    bonds += usize::from(wb.is_some() && i < j);
                    if let Some(x) = want {
                        log.push((t, i, j, x));
                    }
                }
            }
            let reward = brute_reward(&bt, post, zeta, cfg.delta);
            ok &= rec.interactions == interactions && rec.bonds == bonds;
            ok &= rec.reward_step.to_bits() == reward.to_bits();
            if !ok {
                mismatches.push(format!("case {case} tick {t}"));
            }
        }
    }
    outcome(
        mismatches.is_empty(),
        format!(
            "{ticks} ticks on 2-4 node networks; mismatches: {} {:?}",
            mismatches.len(),
            mismatches.iter().take(3).collect::<Vec<_>>()
        ),
    )
}

fn deterministic_traces(run: &RunConfig, policies: &PolicySet) -> Outcome {
    let mut compared = 0;
    let mut differing = Vec::new();
    for scen in ["cop", "ego", "ign", "mix-ego-3", "mix-ign-5"] {
        let scenario: Scenario = scen.parse().unwrap();
        let styles = scenario
            .styles(run.sim.num_nodes, run.experiment.placement, 4)
            .unwrap();
        let spec = EpisodeSpec {
            sim: run.sim.clone(),
            epidemic: run.epidemic.clone(),
            styles,
        };
        let bytes = || {
            let mut buf = Vec::new();
            run_episode(&spec, policies, 4).unwrap().write_csv(&mut buf).unwrap();
            buf
        };
        compared += 1;
        if bytes() != bytes() {
            differing.push(scen);
        }
    }
    // Thread count must not matter either.
    let keys: Vec<CellKey> = (0..6)
        .map(|seed| CellKey {
            scenario: "mix-ego-2".parse().unwrap(),
            zeta: 0.15,
            recovery_days: 10.0,
            seed,
        })
        .collect();
    let csv = |cells: Vec<CellResult>| -> Vec<Vec<u8>> {
        cells
            .iter()
            .map(|c| {
                let mut buf = Vec::new();
                c.trace.write_csv(&mut buf).unwrap();
                buf
            })
            .collect()
    };
    let serial = csv(run_cells(run, &keys, policies, 1).unwrap());
    let parallel = csv(run_cells(run, &keys, policies, 3).unwrap());
    if serial != parallel {
        differing.push("1 vs 3 workers");
    }
    outcome(
        differing.is_empty(),
        format!("{compared} scenarios rerun plus a 6-cell batch on 1 and 3 workers; differing: {differing:?}"),
    )
}

fn table_fidelity() -> Outcome {
    let dump = defaults_dump();
    let v: toml::Table = dump.parse().unwrap();
    let get = |path: &str| -> toml::Value {
        path.split('.')
            .fold(toml::Value::Table(v.clone()), |acc, k| acc.get(k).cloned().unwrap_or_else(|| panic!("missing {path}")))
    };
    let f = |p: &str| get(p).as_float().unwrap_or_else(|| get(p).as_integer().unwrap() as f64);
    let zero2 = toml::Value::Array(vec![toml::Value::Float(0.0), toml::Value::Float(0.0)]);
    let mut wrong = Vec::new();
    let mut expect = |name: &str, ok: bool| {
        if !ok {
            wrong.push(name.to_string());
        }
    };
    expect("num_nodes", f("sim.num_nodes") == 30.0);
    expect("episode_days", f("sim.episode_days") == 100.0);
    expect("social frequency", f("social_frequency_hours") == 0.8);
    for g in ["p", "w_p", "h", "w_h"] {
        expect(g, get(&format!("initial_genome.{g}")) == zero2);
    }
    for s in ["cooperative", "egocentric", "ignorant"] {
        expect(s, f(&format!("sim.threshold_base.{s}")) == 0.2);
    }
    expect("b", f("sim.b") == 0.25);
    expect("alpha", f("sim.alpha") == 0.125);
    expect("transmissibility", f("epidemic.transmissibility") == 0.10);
    expect("recovery_days", f("epidemic.recovery_days") == 5.0);
    for (s, steps) in [("cooperative", 50_000.0), ("egocentric", 20_000.0)] {
        expect("learning_rate", f(&format!("td3.{s}.learning_rate")) == 0.01);
        expect("batch_size", f(&format!("td3.{s}.batch_size")) == 256.0);
        expect("total_steps", f(&format!("td3.{s}.total_steps")) == steps);
        expect("discount", f(&format!("td3.{s}.discount")) == 0.99);
        expect("policy_noise", f(&format!("td3.{s}.policy_noise")) == 0.2);
        expect("exploration_noise", f(&format!("td3.{s}.exploration_noise")) == 0.1);
    }
    let golden = dump == GOLDEN;
    outcome(
        golden && wrong.is_empty(),
        format!("dump matches golden file: {golden}; wrong values: {wrong:?}"),
    )
}

// ---------------------------------------------------------------------------

fn main() {
    let start = Instant::now();
    let run = RunConfig::default();
    let mut results: Vec<(&str, Outcome)> = Vec::new();

    // Property checks first: they need no trained policy.
    let props = [
        ("7a Monte Carlo infection probability", monte_carlo_infection()),
        ("7b gradient check", gradient_check()),
        ("7c bond symmetry", bond_symmetry()),
        ("7d brute-force pipeline", brute_force_pipeline()),
    ];
    eprintln!("[{:>5.0}s] property checks done", start.elapsed().as_secs_f64());
    for (name, o) in &props {
        eprintln!("        {name}: {}", o.detail);
    }

    let coop = train(Style::Cooperative, &run, None, 0).expect("cooperative training");
    eprintln!("[{:>5.0}s] cooperative policy trained", start.elapsed().as_secs_f64());
    let ego = train(Style::Egocentric, &run, Some(&coop.policy.actor), 0).expect("egocentric training");
    eprintln!("[{:>5.0}s] egocentric policy trained", start.elapsed().as_secs_f64());
    let policies = PolicySet {
        cooperative: Some(coop.policy.actor),
        egocentric: Some(ego.policy.actor),
    };

    let sweep = run_resilience_sweep(&run, &policies, 0).expect("sweep");
    eprintln!(
        "[{:>5.0}s] sweep of {} cells done",
        start.elapsed().as_secs_f64(),
        sweep.cells.len()
    );
    let table = Table::new(&sweep.cells);

    results.push(("1 reward ordering", reward_ordering(&table)));
    results.push(("2 infection shape", infection_shape(&sweep.cells)));
    results.push(("3 full cooperation best", full_cooperation_best(&table)));
    results.push(("4 free-riding harm", free_riding_harm(&table)));
    results.push(("5 resilience monotonicity", resilience_monotone(&table, &run)));
    results.push(("6 cooperative collapse", cooperative_collapse(&table)));

    let determinism = deterministic_traces(&run, &policies);
    let mut all_props = determinism.pass;
    for (_, o) in &props {
        all_props &= o.pass;
    }
    let mut prop_detail: Vec<String> = props
        .iter()
        .map(|(n, o)| format!("{} {n}", if o.pass { "ok" } else { "FAILED" }))
        .collect();
    prop_detail.push(format!("{} 7e deterministic traces", if determinism.pass { "ok" } else { "FAILED" }));
    results.push(("7 numerical properties", outcome(all_props, prop_detail.join(", "))));
    results.push(("8 table fidelity", table_fidelity()));

    println!();
    for (name, o) in props.iter().chain(std::iter::once(&("7e deterministic traces", determinism))) {
        println!("    {:<4} {name}: {}", if o.pass { "ok" } else { "BAD" }, o.detail);
    }
    let mut failed = 0;
    let mut fatal = 0;
    let strict = std::env::var("DTCNS_ACCEPTANCE_STRICT").is_ok_and(|v| v == "1");
    for (name, o) in &results {
        println!("{} {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        failed += usize::from(!o.pass);
        let behavioural = !name.starts_with('7') && !name.starts_with('8');
        fatal += usize::from(!o.pass && (strict || !behavioural));
    }
    println!(
        "\n{} of {} criteria passed in {:.0}s",
        results.len() - failed,
        results.len(),
        start.elapsed().as_secs_f64()
    );
    if fatal > 0 {
        std::process::exit(1);
    }
}
