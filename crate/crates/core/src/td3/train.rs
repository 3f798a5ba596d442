//! Training loops for the collective mind and the egocentric free-rider.
//!
//! One environment step is one decision epoch. The collective mind acts for
//! every node with one shared actor and stores one transition per node, all
//! carrying the shared reward. The egocentric learner controls a single node,
//! drawn anew each episode, while every other node follows the frozen
//! cooperative actor. With collective exploration every controlled node
//! shares one exploration draw per step. Transition rewards are the mean per-tick reward over
//! the epoch, times `reward_scale`.

use std::io::Write;

use rand::{Rng, RngCore};
use rand_distr::StandardNormal;

use crate::config::{RunConfig, Td3Config};
use crate::engine::{EpisodeSpec, PolicySet, Simulation};
use crate::error::{Error, Result};
use crate::model::{Style, NUM_FEATURES};
use crate::policy::{ActionVector, PolicyFile, ACTION_DIM, POLICY_INPUT};
use crate::rng::{self, Stream};
use crate::td3::agent::{select_action, Td3Agent, UpdateOutcome};
use crate::td3::net::DenseNet;
use crate::td3::replay::{ReplayBuffer, Transition};

pub const CURVE_COLUMNS: [&str; 5] = ["episode", "env_steps", "mean_return", "critic_loss", "actor_loss"];

#[derive(Debug, Clone, PartialEq)]
pub struct CurveRow {
    pub episode: usize,
    /// Environment steps completed by the end of this episode.
    pub env_steps: usize,
    /// Undiscounted sum of unscaled transition rewards, averaged over the
    /// controlled nodes.
    pub mean_return: f64,
    pub critic_loss: Option<f64>,
    pub actor_loss: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub policy: PolicyFile,
    pub curve: Vec<CurveRow>,
}

impl TrainOutcome {
    pub fn write_curve(&self, out: impl Write) -> std::result::Result<(), csv::Error> {
        let opt = |v: Option<f64>| v.map_or_else(String::new, |x| x.to_string());
        let mut w = csv::Writer::from_writer(out);
        w.write_record(CURVE_COLUMNS)?;
        for r in &self.curve {
            w.write_record([
                r.episode.to_string(),
                r.env_steps.to_string(),
                r.mean_return.to_string(),
                opt(r.critic_loss),
                opt(r.actor_loss),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Default)]
struct LossMeans {
    critic: (f64, usize),
    actor: (f64, usize),
}

impl LossMeans {
    fn add(&mut self, outcome: UpdateOutcome) {
        if let UpdateOutcome::Updated(stats) = outcome {
            self.critic.0 += stats.critic_loss;
            self.critic.1 += 1;
            if let Some(a) = stats.actor_loss {
                self.actor.0 += a;
                self.actor.1 += 1;
            }
        }
    }

    fn means(&self) -> (Option<f64>, Option<f64>) {
        let mean = |(s, n): (f64, usize)| (n > 0).then(|| s / n as f64);
        (mean(self.critic), mean(self.actor))
    }
}

fn random_action(rng: &mut impl Rng) -> ActionVector {
    ActionVector((0..ACTION_DIM).map(|_| rng.random_range(-1.0..=1.0)).collect())
}

/// Train the actor for `style` (cooperative or egocentric) under `run`.
/// Egocentric training needs the frozen cooperative actor.
pub fn train(style: Style, run: &RunConfig, cooperative: Option<&DenseNet>, seed: u64) -> Result<TrainOutcome> {
    run.sim.validate()?;
    run.epidemic.validate(&run.sim)?;
    let cfg: &Td3Config = run
        .td3
        .for_style(style)
        .ok_or_else(|| Error::config("only cooperative and egocentric policies are trained"))?;
    cfg.validate()?;
    let frozen = match style {
        Style::Egocentric => Some(
            cooperative
                .cloned()
                .ok_or_else(|| Error::config("egocentric training needs a cooperative policy"))?,
        ),
        _ => None,
    };
    let n = run.sim.num_nodes;

    let mut init_rng = rng::stream(seed, Stream::NetInit);
    let mut agent = Td3Agent::new(POLICY_INPUT, ACTION_DIM, cfg, &mut init_rng);
    let mut buffer = ReplayBuffer::new(cfg.buffer_capacity);
    let mut explore = rng::stream(seed, Stream::Exploration);
    let mut replay_rng = rng::stream(seed, Stream::Replay);
    let mut episodes = rng::stream(seed, Stream::Episodes);

    let mut curve = Vec::new();
    let mut step = 0usize;
    let mut updates = 0usize;
    while step < cfg.total_steps {
        let episode_seed = episodes.next_u64();
        let (controlled, styles): (Vec<usize>, Vec<Style>) = match style {
            Style::Egocentric => {
                let ego = episodes.random_range(0..n);
                let styles = (0..n)
                    .map(|i| if i == ego { Style::Egocentric } else { Style::Cooperative })
                    .collect();
                (vec![ego], styles)
            }
            _ => ((0..n).collect(), vec![Style::Cooperative; n]),
        };
        let spec = EpisodeSpec {
            sim: run.sim.clone(),
            epidemic: run.epidemic.clone(),
            styles,
        };
        let mut sim = Simulation::new(&spec, episode_seed)?;
        let mut returns = 0.0;
        let mut losses = LossMeans::default();

        sim.begin_epoch();
        let mut inputs = sim.policy_inputs();
        while !sim.is_done() && step < cfg.total_steps {
            let warmup = step < cfg.start_steps;
            let shared: Option<Vec<f64>> = cfg.collective_exploration.then(|| {
                if warmup {
                    random_action(&mut explore).0
                } else {
                    (0..ACTION_DIM)
                        .map(|_| cfg.exploration_noise * explore.sample::<f64, _>(StandardNormal))
                        .collect()
                }
            });
            let mut actions = Vec::with_capacity(controlled.len());
            for i in 0..n {
                if controlled.contains(&i) {
                    let a = match (&shared, warmup) {
                        (Some(u), true) => ActionVector(u.clone()),
                        (Some(eps), false) => ActionVector::clamped(
                            agent.actor.forward(&inputs[i]).iter().zip(eps).map(|(m, e)| m + e).collect(),
                        ),
                        (None, true) => random_action(&mut explore),
                        (None, false) => {
                            select_action(&agent.actor, &inputs[i], cfg.exploration_noise, &mut explore)
                        }
                    };
                    sim.apply_action(i, &a);
                    actions.push(a);
                } else if let Some(actor) = &frozen {
                    sim.apply_action(i, &ActionVector::clamped(actor.forward(&inputs[i])));
                }
            }
            loop {
                sim.run_tick();
                if sim.is_done() || sim.at_epoch_boundary() {
                    break;
                }
            }
            let ticks = f64::from(sim.epoch_ticks());
            let rewards: Vec<f64> = controlled
                .iter()
                .map(|&i| sim.network().nodes[i].reward_accum / ticks)
                .collect();
            let done = sim.is_done();
            sim.begin_epoch();
            let next_inputs = sim.policy_inputs();
            for ((&i, a), r) in controlled.iter().zip(actions).zip(&rewards) {
                buffer.push(Transition {
                    obs: inputs[i].clone(),
                    action: a.0,
                    reward: r * cfg.reward_scale,
                    next_obs: next_inputs[i].clone(),
                    done,
                });
            }
            returns += rewards.iter().sum::<f64>() / rewards.len() as f64;
            inputs = next_inputs;
            step += 1;

            if buffer.len() >= cfg.batch_size {
                losses.add(agent.update(&buffer, updates, &mut replay_rng));
                updates += 1;
            }
        }
        let (critic_loss, actor_loss) = losses.means();
        curve.push(CurveRow {
            episode: curve.len(),
            env_steps: step,
            mean_return: returns,
            critic_loss,
            actor_loss,
        });
    }

    if !agent.actor.is_finite() {
        return Err(Error::config("training diverged: actor parameters are not finite"));
    }
    Ok(TrainOutcome {
        policy: PolicyFile {
            kind: style,
            num_features: NUM_FEATURES,
            num_nodes: n,
            actor: agent.actor,
        },
        curve,
    })
}

/// Actors for a scenario, read from `<dir>/cooperative.policy` and
/// `<dir>/egocentric.policy` as needed.
pub fn load_policies(dir: &std::path::Path, need: &[Style]) -> Result<PolicySet> {
    let mut set = PolicySet::default();
    for style in [Style::Cooperative, Style::Egocentric] {
        if !need.contains(&style) {
            continue;
        }
        let path = policy_path(dir, style);
        if !path.exists() {
            return Err(Error::MissingPolicy {
                style: style.short_name(),
                path,
            });
        }
        let file = PolicyFile::load(&path)?;
        file.check_compatible(&path)?;
        if file.kind != style {
            return Err(Error::PolicyFormat {
                path,
                msg: format!("holds a {} policy, expected {style}", file.kind),
            });
        }
        match style {
            Style::Cooperative => set.cooperative = Some(file.actor),
            _ => set.egocentric = Some(file.actor),
        }
    }
    Ok(set)
}

pub fn policy_path(dir: &std::path::Path, style: Style) -> std::path::PathBuf {
    let name = match style {
        Style::Cooperative => "cooperative",
        Style::Egocentric => "egocentric",
        Style::Ignorant => "ignorant",
    };
    dir.join(format!("{name}.policy"))
}
