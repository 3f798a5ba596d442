//! Interaction scoring, formation and bonding.
//!
//! Component scores are clamped to [0, 1]. Each tick, every node ranks the
//! partners whose score clears its threshold and spends social capital on
//! them best-first. A pair bonds when one direction interacts now and the
//! other direction interacted within the last `window` ticks (inclusive of
//! the current tick).

use std::collections::VecDeque;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::config::SimConfig;
use crate::model::{EncounterModel, NodeState, TemporalNetwork};
use crate::rng::SimRng;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ScoreBreakdown {
    pub homophily: f64,
    pub pref_attach: f64,
    pub noise: f64,
    pub total: f64,
}

impl ScoreBreakdown {
    pub fn from_components(homophily: f64, pref_attach: f64, noise: f64) -> Self {
        ScoreBreakdown {
            homophily,
            pref_attach,
            noise,
            total: 0.5 * (homophily + pref_attach) + noise,
        }
    }
}

fn check_lengths(a: usize, b: usize, c: usize) {
    assert!(a == b && b == c, "vector lengths differ: {a}, {b}, {c}");
}

/// `sum_k |fi_k - fj_k| * h_k * w_h_k`, clamped to [0, 1].
pub fn homophily_score(fi: &[f64], fj: &[f64], h: &[i8], w_h: &[f64]) -> f64 {
    check_lengths(fi.len(), fj.len(), h.len());
    check_lengths(h.len(), w_h.len(), w_h.len());
    let raw: f64 = (0..fi.len())
        .map(|k| (fi[k] - fj[k]).abs() * f64::from(h[k]) * w_h[k])
        .sum();
    raw.clamp(0.0, 1.0)
}

/// `sum_k fj_k * p_k * w_p_k`, clamped to [0, 1].
pub fn pref_attach_score(fj: &[f64], p: &[i8], w_p: &[f64]) -> f64 {
    check_lengths(fj.len(), p.len(), w_p.len());
    let raw: f64 = (0..fj.len()).map(|k| fj[k] * f64::from(p[k]) * w_p[k]).sum();
    raw.clamp(0.0, 1.0)
}

/// Score that `src` assigns to a directed interaction towards `dst`.
///
/// Draws exactly one standard normal when the pair encountered and none
/// otherwise, whatever `noise_sigma` is.
pub fn interaction_score(
    src: &NodeState,
    dst: &NodeState,
    encountered: bool,
    noise_sigma: f64,
    rng: &mut SimRng,
) -> ScoreBreakdown {
    assert!(src.id != dst.id, "a node cannot score itself ({})", src.id);
    if !encountered {
        return ScoreBreakdown::default();
    }
    let g = &src.genome;
    let homophily = homophily_score(&src.features, &dst.features, &g.h, &g.w_h);
    let pref_attach = pref_attach_score(&dst.features, &g.p, &g.w_p);
    let z: f64 = rng.sample(StandardNormal);
    ScoreBreakdown::from_components(homophily, pref_attach, noise_sigma * z)
}

/// `eta^beta * base`: the threshold rises while the node is infected.
pub fn threshold(node: &NodeState, base: f64, eta: f64) -> f64 {
    if node.is_infected() {
        eta * base
    } else {
        base
    }
}

/// Interact iff the score clears the threshold and capital remains. Spends
/// one unit of capital on success.
pub fn decide_interaction(score: f64, thresh: f64, node: &mut NodeState) -> bool {
    if score > thresh && node.has_capital() {
        node.capital_spent += 1;
        true
    } else {
        false
    }
}

pub fn interaction_intensity(score: f64, thresh: f64, interacted: bool, b: f64, alpha: f64) -> f64 {
    if interacted {
        b + alpha * (score - thresh)
    } else {
        0.0
    }
}

fn window_mean(hist: &VecDeque<(u64, f64)>, window: u64, now: u64) -> Option<f64> {
    let (sum, count) = hist
        .iter()
        .filter(|&&(t, _)| t <= now && t + window >= now)
        .fold((0.0, 0usize), |(s, c), &(_, w)| (s + w, c + 1));
    (count > 0).then(|| sum / count as f64)
}

/// Mean of the two directions' average intensities over the window, or 0
/// when either direction has no interaction there.
pub fn bond_intensity(
    hist_ij: &VecDeque<(u64, f64)>,
    hist_ji: &VecDeque<(u64, f64)>,
    window: u64,
    now: u64,
) -> f64 {
    match (window_mean(hist_ij, window, now), window_mean(hist_ji, window, now)) {
        (Some(a), Some(b)) => 0.5 * (a + b),
        _ => 0.0,
    }
}

fn has_recent(hist: &VecDeque<(u64, f64)>, window: u64, now: u64) -> bool {
    hist.iter().any(|&(t, _)| t <= now && t + window >= now)
}

/// Recompute bonds for the current tick from this tick's interactions and
/// the window history. Bonds are symmetric.
pub fn update_bonds(net: &mut TemporalNetwork, tick: u64, window: u64) {
    let n = net.num_nodes();
    for i in 0..n {
        for j in (i + 1)..n {
            net.edge_mut(i, j).prune(tick, window);
            net.edge_mut(j, i).prune(tick, window);
            let (ij, ji) = (net.edge(i, j), net.edge(j, i));
            let bonded = (ij.interacted && has_recent(&ji.history, window, tick))
                || (ji.interacted && has_recent(&ij.history, window, tick));
            let w = if bonded {
                bond_intensity(&ij.history, &ji.history, window, tick)
            } else {
                0.0
            };
            let bonded = bonded && w > 0.0;
            for (a, b) in [(i, j), (j, i)] {
                let e = net.edge_mut(a, b);
                e.bonded = bonded;
                e.bond_intensity = if bonded { w } else { 0.0 };
            }
        }
    }
}

/// Phases one to three of a tick: score every encountered pair, let each
/// node spend capital on its best-scoring partners above threshold, and
/// record intensities. Returns the number of directed interactions.
///
/// Noise is drawn in row-major `(i, j)` order for every encountered pair,
/// including pairs whose source has no capital left.
pub fn form_interactions(
    net: &mut TemporalNetwork,
    cfg: &SimConfig,
    encounters: EncounterModel,
    encounter_rng: &mut SimRng,
    noise_rng: &mut SimRng,
) -> usize {
    let n = net.num_nodes();
    let tick = net.tick();
    let window = cfg.bond_window_ticks;
    let mut candidates: Vec<(usize, f64)> = Vec::with_capacity(n);
    let mut formed = 0;
    for i in 0..n {
        candidates.clear();
        let thresh = {
            let src = &net.nodes[i];
            threshold(src, cfg.threshold_base.for_style(src.style), cfg.eta)
        };
        for j in (0..n).filter(|&j| j != i) {
            let met = encounters.meets(encounter_rng);
            let s = interaction_score(&net.nodes[i], &net.nodes[j], met, cfg.noise_sigma, noise_rng);
            if met && s.total > thresh {
                candidates.push((j, s.total));
            }
        }
        // Best scores first; ties resolve to the lower id.
        candidates.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        for &(j, score) in &candidates {
            if !decide_interaction(score, thresh, &mut net.nodes[i]) {
                break;
            }
            let w = interaction_intensity(score, thresh, true, cfg.b, cfg.alpha);
            net.edge_mut(i, j).record(tick, w, window);
            formed += 1;
        }
    }
    formed
}
