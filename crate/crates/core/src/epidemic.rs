//! Epidemic seeding, transmission over this tick's contacts, and recovery.
//!
//! Recovery returns a node to susceptible unless permanent recovery is
//! enabled, so reinfection waves are possible in the default setting.
//! A healthy node is exposed to every infected partner it interacts with in
//! either direction during the tick.

use rand::Rng;

use crate::config::{EpidemicConfig, SimConfig};
use crate::error::{Error, Result};
use crate::model::{Health, TemporalNetwork};
use crate::rng::SimRng;

#[derive(Debug, Clone, PartialEq)]
pub struct EpidemicState {
    pub seeds: Vec<usize>,
    pub transmissibility: f64,
    pub recovery_ticks: u32,
    pub permanent_recovery: bool,
}

impl EpidemicState {
    pub fn from_config(cfg: &EpidemicConfig, sim: &SimConfig) -> Result<Self> {
        cfg.validate(sim)?;
        Ok(EpidemicState {
            seeds: cfg.seeds.clone(),
            transmissibility: cfg.transmissibility,
            recovery_ticks: cfg.recovery_ticks(sim.ticks_per_day),
            permanent_recovery: cfg.permanent_recovery,
        })
    }
}

/// Infect the seed nodes with a full recovery clock; everyone else becomes
/// susceptible.
pub fn seed_epidemic(net: &mut TemporalNetwork, state: &EpidemicState) -> Result<()> {
    let n = net.num_nodes();
    if let Some(&bad) = state.seeds.iter().find(|&&s| s >= n) {
        return Err(Error::config(format!("seed node {bad} does not exist ({n} nodes)")));
    }
    if state.recovery_ticks == 0 {
        return Err(Error::config("recovery must last at least one tick"));
    }
    for node in &mut net.nodes {
        node.set_health(Health::Susceptible, 0);
    }
    for &s in &state.seeds {
        net.nodes[s].set_health(Health::Infected, state.recovery_ticks);
    }
    Ok(())
}

fn contact_count(net: &TemporalNetwork, i: usize, partner_infected: bool) -> i32 {
    (0..net.num_nodes())
        .filter(|&j| j != i && net.nodes[j].is_infected() == partner_infected && net.in_contact(i, j))
        .count() as i32
}

/// Probability that healthy node `i` is infected through this tick's
/// contacts: one minus the escape probability over infected partners.
pub fn infection_probability(i: usize, net: &TemporalNetwork, zeta: f64) -> f64 {
    1.0 - (1.0 - zeta).powi(contact_count(net, i, true))
}

/// Contact risk of node `i` this tick. Healthy nodes get their infection
/// probability; infected nodes the probability of infecting at least one
/// healthy contact.
pub fn spreading_risk(i: usize, net: &TemporalNetwork, zeta: f64) -> f64 {
    if net.nodes[i].is_infected() {
        1.0 - (1.0 - zeta).powi(contact_count(net, i, false))
    } else {
        infection_probability(i, net, zeta)
    }
}

/// Advance health by one tick. Every susceptible node takes one uniform draw
/// against its infection probability (computed from start-of-tick health);
/// nodes infected at the start of the tick count their clocks down.
/// Returns the number of new infections.
pub fn step_epidemic(net: &mut TemporalNetwork, state: &EpidemicState, rng: &mut SimRng) -> usize {
    let n = net.num_nodes();
    let zeta = state.transmissibility;
    let flips: Vec<bool> = (0..n)
        .map(|i| match net.nodes[i].health {
            Health::Susceptible => {
                let p = infection_probability(i, net, zeta);
                rng.random::<f64>() < p
            }
            Health::Infected | Health::Recovered => false,
        })
        .collect();
    let after_recovery = if state.permanent_recovery {
        Health::Recovered
    } else {
        Health::Susceptible
    };
    let mut new_infections = 0;
    for (node, flip) in net.nodes.iter_mut().zip(flips) {
        if node.is_infected() {
            let clock = node.recovery_clock - 1;
            if clock == 0 {
                node.set_health(after_recovery, 0);
            } else {
                node.recovery_clock = clock;
            }
        } else if flip {
            node.set_health(Health::Infected, state.recovery_ticks);
            new_infections += 1;
        }
    }
    new_infections
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{self, Stream};

    fn net(n: usize) -> TemporalNetwork {
        let cfg = SimConfig {
            num_nodes: n,
            ..SimConfig::default()
        };
        TemporalNetwork::new(&cfg, 0).unwrap()
    }

    fn state(zeta: f64, seeds: Vec<usize>) -> EpidemicState {
        EpidemicState {
            seeds,
            transmissibility: zeta,
            recovery_ticks: 150,
            permanent_recovery: false,
        }
    }

    fn contact(net: &mut TemporalNetwork, i: usize, j: usize) {
        let t = net.tick();
        net.edge_mut(i, j).record(t, 0.3, 1);
    }

    #[track_caller]
    fn close(a: f64, b: f64) {
        assert!((a - b).abs() < 1e-12, "{a} != {b}");
    }

    #[test]
    fn seeding() {
        let mut g = net(30);
        seed_epidemic(&mut g, &state(0.1, vec![0])).unwrap();
        assert_eq!(g.infected_count(), 1);
        assert_eq!(g.nodes[0].features[0], 1.0);
        assert_eq!(g.nodes[0].recovery_clock, 150);

        seed_epidemic(&mut g, &state(0.1, vec![])).unwrap();
        assert_eq!(g.infected_count(), 0);

        seed_epidemic(&mut g, &state(0.1, (0..30).collect())).unwrap();
        assert_eq!(g.infected_count(), 30);

        assert!(matches!(
            seed_epidemic(&mut g, &state(0.1, vec![30])),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn infection_probability_examples() {
        let mut g = net(4);
        seed_epidemic(&mut g, &state(0.1, vec![1, 2])).unwrap();
        assert_eq!(infection_probability(0, &g, 0.1), 0.0);
        contact(&mut g, 0, 1);
        close(infection_probability(0, &g, 0.1), 0.10);
        // inbound contact counts as exposure too
        contact(&mut g, 2, 0);
        close(infection_probability(0, &g, 0.1), 0.19);
        // a healthy partner adds nothing
        contact(&mut g, 0, 3);
        close(infection_probability(0, &g, 0.1), 0.19);
    }

    #[test]
    fn spreading_risk_examples() {
        let mut g = net(5);
        seed_epidemic(&mut g, &state(0.1, vec![0])).unwrap();
        assert_eq!(spreading_risk(0, &g, 0.1), 0.0);
        for j in 1..4 {
            contact(&mut g, 0, j);
        }
        close(spreading_risk(0, &g, 0.1), 0.271);
        close(spreading_risk(1, &g, 0.1), infection_probability(1, &g, 0.1));
        close(spreading_risk(4, &g, 0.1), 0.0);
    }

    #[test]
    fn zero_transmissibility_never_infects() {
        let mut g = net(6);
        let st = state(0.0, vec![0]);
        seed_epidemic(&mut g, &st).unwrap();
        let mut r = rng::stream(0, Stream::Epidemic);
        for t in 0..300 {
            g.set_tick(t);
            g.clear_tick_state();
            for j in 1..6 {
                contact(&mut g, 0, j);
            }
            assert_eq!(step_epidemic(&mut g, &st, &mut r), 0);
        }
        assert_eq!(g.infected_count(), 0);
    }

    #[test]
    fn certain_transmission() {
        let mut g = net(3);
        let st = state(1.0, vec![0]);
        seed_epidemic(&mut g, &st).unwrap();
        contact(&mut g, 0, 1);
        let mut r = rng::stream(0, Stream::Epidemic);
        assert_eq!(step_epidemic(&mut g, &st, &mut r), 1);
        assert!(g.nodes[1].is_infected());
        assert!(!g.nodes[2].is_infected());
        assert_eq!(g.nodes[1].recovery_clock, 150);
    }

    #[test]
    fn isolated_node_recovers_after_its_clock() {
        // infected at the start of day 3, five-day recovery at 30 ticks/day
        let mut g = net(2);
        let st = state(0.1, vec![0]);
        seed_epidemic(&mut g, &st).unwrap();
        let mut r = rng::stream(0, Stream::Epidemic);
        for t in 90..240 {
            assert!(g.nodes[0].is_infected(), "still infected at tick {t}");
            g.set_tick(t);
            step_epidemic(&mut g, &st, &mut r);
        }
        assert_eq!(g.nodes[0].health, Health::Susceptible);
        assert_eq!(g.nodes[0].features[0], 0.0);
        assert_eq!(240 / 30, 8);
    }

    #[test]
    fn permanent_recovery_is_immune() {
        let mut g = net(2);
        let mut st = state(1.0, vec![0]);
        st.recovery_ticks = 1;
        st.permanent_recovery = true;
        seed_epidemic(&mut g, &st).unwrap();
        let mut r = rng::stream(0, Stream::Epidemic);
        step_epidemic(&mut g, &st, &mut r);
        assert_eq!(g.nodes[0].health, Health::Recovered);
        g.nodes[1].set_health(Health::Infected, 5);
        contact(&mut g, 0, 1);
        step_epidemic(&mut g, &st, &mut r);
        assert_eq!(g.nodes[0].health, Health::Recovered);
    }

    #[test]
    fn monte_carlo_matches_infection_probability() {
        // node 0 healthy, exposed to three infected partners (two outbound,
        // one inbound) and one healthy one
        let mut base = net(5);
        let st = state(0.1, vec![1, 2, 3]);
        seed_epidemic(&mut base, &st).unwrap();
        contact(&mut base, 0, 1);
        contact(&mut base, 0, 2);
        contact(&mut base, 3, 0);
        contact(&mut base, 0, 4);
        let p = infection_probability(0, &base, 0.1);
        close(p, 1.0 - 0.9f64.powi(3));

        let trials = 100_000;
        let mut r = rng::stream(99, Stream::Epidemic);
        let mut hits = 0usize;
        for _ in 0..trials {
            let mut g = base.clone();
            step_epidemic(&mut g, &st, &mut r);
            hits += usize::from(g.nodes[0].is_infected());
        }
        let freq = hits as f64 / trials as f64;
        let se = (p * (1.0 - p) / trials as f64).sqrt();
        assert!((freq - p).abs() <= 3.0 * se, "freq {freq} vs p {p} (se {se})");
    }
}
