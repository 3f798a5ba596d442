//! Twin critics, target networks, clipped target smoothing and delayed actor
//! updates.

use ndarray::{concatenate, s, Array2, Axis, Zip};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::config::Td3Config;
use crate::policy::ActionVector;
use crate::td3::net::{polyak_update, Activation, DenseNet, Optimizer};
use crate::td3::replay::ReplayBuffer;

/// `clamp(actor(obs) + N(0, sigma^2), -1, 1)` per coordinate. A zero sigma
/// returns the actor output untouched and draws nothing.
pub fn select_action(actor: &DenseNet, obs: &[f64], explore_sigma: f64, rng: &mut impl Rng) -> ActionVector {
    let mut a = actor.forward(obs);
    if explore_sigma > 0.0 {
        for v in &mut a {
            let z: f64 = rng.sample(StandardNormal);
            *v += explore_sigma * z;
        }
    }
    ActionVector::clamped(a)
}

/// Bellman target with the twin-critic minimum.
pub fn critic_target(reward: f64, done: bool, q1: f64, q2: f64, discount: f64) -> f64 {
    let not_done = if done { 0.0 } else { 1.0 };
    reward + discount * not_done * q1.min(q2)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossStats {
    pub critic_loss: f64,
    /// Present only on steps where the actor moved.
    pub actor_loss: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum UpdateOutcome {
    /// Not enough transitions for a batch; nothing changed.
    Underfilled,
    Updated(LossStats),
}

#[derive(Debug, Clone)]
pub struct Td3Agent {
    pub actor: DenseNet,
    pub actor_target: DenseNet,
    pub critics: [DenseNet; 2],
    pub critic_targets: [DenseNet; 2],
    actor_opt: Optimizer,
    critic_opts: [Optimizer; 2],
    cfg: Td3Config,
}

impl Td3Agent {
    pub fn new(obs_dim: usize, act_dim: usize, cfg: &Td3Config, rng: &mut impl Rng) -> Self {
        let mut actor_sizes = vec![obs_dim];
        actor_sizes.extend(&cfg.hidden_sizes);
        actor_sizes.push(act_dim);
        let mut critic_sizes = vec![obs_dim + act_dim];
        critic_sizes.extend(&cfg.hidden_sizes);
        critic_sizes.push(1);

        let actor = DenseNet::new(&actor_sizes, Activation::Relu, Activation::Tanh, rng);
        let critics = [
            DenseNet::new(&critic_sizes, Activation::Relu, Activation::Identity, rng),
            DenseNet::new(&critic_sizes, Activation::Relu, Activation::Identity, rng),
        ];
        let lr = cfg.learning_rate;
        Td3Agent {
            actor_opt: Optimizer::new(cfg.optimizer, lr, &actor),
            critic_opts: [
                Optimizer::new(cfg.optimizer, lr, &critics[0]),
                Optimizer::new(cfg.optimizer, lr, &critics[1]),
            ],
            actor_target: actor.clone(),
            critic_targets: critics.clone(),
            actor,
            critics,
            cfg: cfg.clone(),
        }
    }

    pub fn config(&self) -> &Td3Config {
        &self.cfg
    }

    /// One TD3 iteration on a sampled minibatch. Critics always regress to the
    /// clipped double-Q target; the actor and all targets move only when
    /// `step` is a multiple of the policy delay.
    pub fn update(&mut self, buffer: &ReplayBuffer, step: usize, rng: &mut impl Rng) -> UpdateOutcome {
        let cfg = &self.cfg;
        let Some(batch) = buffer.sample(cfg.batch_size, rng) else {
            return UpdateOutcome::Underfilled;
        };
        let n = batch.rewards.len();
        let act_dim = batch.actions.ncols();

        // Target actions with clipped smoothing noise.
        let mut next_act = self.actor_target.forward_batch(batch.next_obs.view()).output().clone();
        let clip = cfg.target_noise_clip;
        next_act.mapv_inplace(|a| {
            let z: f64 = rng.sample(StandardNormal);
            (a + (cfg.policy_noise * z).clamp(-clip, clip)).clamp(-1.0, 1.0)
        });
        let next_in = concatenate![Axis(1), batch.next_obs, next_act];
        let q1t = self.critic_targets[0].forward_batch(next_in.view());
        let q2t = self.critic_targets[1].forward_batch(next_in.view());
        let mut y = Array2::zeros((n, 1));
        Zip::indexed(&mut y).for_each(|(r, _), y| {
            *y = critic_target(
                batch.rewards[r],
                batch.dones[r] > 0.5,
                q1t.output()[[r, 0]],
                q2t.output()[[r, 0]],
                cfg.discount,
            );
        });

        let cur_in = concatenate![Axis(1), batch.obs, batch.actions];
        let mut critic_loss = 0.0;
        for (critic, opt) in self.critics.iter_mut().zip(&mut self.critic_opts) {
            let tape = critic.forward_batch(cur_in.view());
            let err = tape.output() - &y;
            critic_loss += err.mapv(|e| e * e).mean().unwrap_or(0.0);
            let grad = err * (2.0 / n as f64);
            let (mut g, _) = critic.backward(&tape, grad.view());
            g.clip_norm(cfg.max_grad_norm);
            opt.step(critic, &g);
        }
        critic_loss *= 0.5;

        let mut actor_loss = None;
        if step.is_multiple_of(cfg.policy_delay) {
            let tape_a = self.actor.forward_batch(batch.obs.view());
            let q_in = concatenate![Axis(1), batch.obs, tape_a.output().view()];
            let tape_q = self.critics[0].forward_batch(q_in.view());
            actor_loss = Some(-tape_q.output().mean().unwrap_or(0.0));
            let dq = Array2::from_elem((n, 1), -1.0 / n as f64);
            let (_, d_in) = self.critics[0].backward(&tape_q, dq.view());
            let obs_dim = batch.obs.ncols();
            let d_act = d_in.slice(s![.., obs_dim..obs_dim + act_dim]);
            let (mut g, _) = self.actor.backward(&tape_a, d_act);
            g.clip_norm(cfg.max_grad_norm);
            self.actor_opt.step(&mut self.actor, &g);

            polyak_update(&mut self.actor_target, &self.actor, cfg.tau);
            for (t, c) in self.critic_targets.iter_mut().zip(&self.critics) {
                polyak_update(t, c, cfg.tau);
            }
        }
        UpdateOutcome::Updated(LossStats {
            critic_loss,
            actor_loss,
        })
    }
}
