//! Goal-conditioned DDPG: deterministic tanh actor, linear-output critic,
//! Polyak-averaged target networks and Adam on both.
//!
//! The actor sees `state || goal` (4 values) and the critic sees
//! `state || goal || action` (6 values). Bootstrapped targets are masked by
//! reward-based success (`r == 0` is terminal) and clipped to the range a
//! `{0, -1}` reward admits, `[-1 / (1 - gamma), 0]`.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::Vec2;
use crate::maze::A_MAX;
use crate::nn::{Adam, Matrix, Mlp, NnError, OutputActivation};
use crate::replay::Transition;

pub const OBS_DIM: usize = 4;
pub const ACTION_DIM: usize = 2;
pub const CRITIC_INPUT_DIM: usize = OBS_DIM + ACTION_DIM;

#[derive(Debug, Error)]
pub enum AgentError {
    #[error("training diverged: non-finite {0}")]
    Divergence(&'static str),
    #[error(transparent)]
    Network(#[from] NnError),
    #[error("invalid hyperparameter {key}: {reason}")]
    BadHyperParam { key: &'static str, reason: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HyperParams {
    pub gamma: f64,
    pub tau: f64,
    pub actor_lr: f64,
    pub critic_lr: f64,
    pub noise_sigma: f64,
    pub random_action_prob: f64,
    pub batch_size: usize,
    pub warmup_steps: u64,
    pub hidden_sizes: Vec<usize>,
    /// Coefficient of the `||pi(s, g)||^2` penalty in the actor loss.
    pub action_l2: f64,
}

impl Default for HyperParams {
    fn default() -> Self {
        HyperParams {
            gamma: 0.98,
            tau: 0.005,
            actor_lr: 1e-3,
            critic_lr: 1e-3,
            noise_sigma: 0.1,
            random_action_prob: 0.2,
            batch_size: 256,
            warmup_steps: 2_500,
            hidden_sizes: vec![128, 128],
            action_l2: 0.0,
        }
    }
}

impl HyperParams {
    pub fn validate(&self) -> Result<(), AgentError> {
        let bad = |key: &'static str, reason: &str| Err(AgentError::BadHyperParam { key, reason: reason.to_string() });
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return bad("gamma", "must be in (0, 1)");
        }
        if !(self.tau > 0.0 && self.tau <= 1.0) {
            return bad("tau", "must be in (0, 1]");
        }
        if !(self.actor_lr > 0.0 && self.actor_lr.is_finite()) {
            return bad("actor_lr", "must be positive");
        }
        if !(self.critic_lr > 0.0 && self.critic_lr.is_finite()) {
            return bad("critic_lr", "must be positive");
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return bad("noise_sigma", "must be non-negative");
        }
        if !(0.0..=1.0).contains(&self.random_action_prob) {
            return bad("random_action_prob", "must be in [0, 1]");
        }
        if self.batch_size == 0 {
            return bad("batch_size", "must be at least 1");
        }
        if self.hidden_sizes.contains(&0) {
            return bad("hidden_sizes", "layer widths must be positive");
        }
        if !(self.action_l2 >= 0.0 && self.action_l2.is_finite()) {
            return bad("action_l2", "must be non-negative");
        }
        Ok(())
    }

    pub fn actor_sizes(&self) -> Vec<usize> {
        layer_sizes(OBS_DIM, &self.hidden_sizes, ACTION_DIM)
    }

    pub fn critic_sizes(&self) -> Vec<usize> {
        layer_sizes(CRITIC_INPUT_DIM, &self.hidden_sizes, 1)
    }

    /// Lower clip bound for bootstrapped targets.
    pub fn min_target(&self) -> f64 {
        -1.0 / (1.0 - self.gamma)
    }
}

fn layer_sizes(input: usize, hidden: &[usize], output: usize) -> Vec<usize> {
    let mut sizes = Vec::with_capacity(hidden.len() + 2);
    sizes.push(input);
    sizes.extend_from_slice(hidden);
    sizes.push(output);
    sizes
}

pub const ACTOR_OUTPUT: OutputActivation = OutputActivation::Tanh { scale: A_MAX };
pub const CRITIC_OUTPUT: OutputActivation = OutputActivation::Linear;

pub fn actor_forward(actor: &Mlp, state: Vec2, goal: Vec2) -> Vec2 {
    let out = actor.forward_one(&[state.x, state.y, goal.x, goal.y]);
    Vec2::new(out[0], out[1])
}

pub fn critic_forward(critic: &Mlp, state: Vec2, goal: Vec2, action: Vec2) -> f64 {
    critic.forward_one(&[state.x, state.y, goal.x, goal.y, action.x, action.y])[0]
}

fn obs_matrix<'a>(rows: impl ExactSizeIterator<Item = (Vec2, Vec2)> + 'a) -> Matrix {
    let n = rows.len();
    let mut data = Vec::with_capacity(n * OBS_DIM);
    for (s, g) in rows {
        data.extend_from_slice(&[s.x, s.y, g.x, g.y]);
    }
    Matrix::from_vec(n, OBS_DIM, data)
}

fn critic_input(obs: &Matrix, actions: &Matrix) -> Matrix {
    let mut data = Vec::with_capacity(obs.rows * CRITIC_INPUT_DIM);
    for r in 0..obs.rows {
        data.extend_from_slice(obs.row(r));
        data.extend_from_slice(actions.row(r));
    }
    Matrix::from_vec(obs.rows, CRITIC_INPUT_DIM, data)
}

/// `y = r + gamma * (1 - success) * Q'(s', g, pi'(s', g))`, clipped to
/// `[-1 / (1 - gamma), 0]`, with `success = (r == 0)`.
pub fn compute_targets(batch: &[Transition], target_actor: &Mlp, target_critic: &Mlp, gamma: f64) -> Vec<f64> {
    let next_obs = obs_matrix(batch.iter().map(|t| (t.next_state, t.goal)));
    let next_actions = target_actor.forward(&next_obs);
    let q_next = target_critic.forward(&critic_input(&next_obs, &next_actions));
    let lower = -1.0 / (1.0 - gamma);
    batch
        .iter()
        .zip(&q_next.data)
        .map(|(t, q)| {
            let mask = if t.reward == 0.0 { 0.0 } else { 1.0 };
            (t.reward + gamma * mask * q).clamp(lower, 0.0)
        })
        .collect()
}

/// Mean squared TD error and its gradient with respect to the critic parameters.
pub fn critic_loss_and_grad(critic: &Mlp, batch: &[Transition], targets: &[f64]) -> (f64, Vec<f64>) {
    let n = batch.len();
    let obs = obs_matrix(batch.iter().map(|t| (t.state, t.goal)));
    let actions = Matrix::from_vec(n, ACTION_DIM, batch.iter().flat_map(|t| [t.action.x, t.action.y]).collect());
    let trace = critic.forward_trace(&critic_input(&obs, &actions));
    let mut loss = 0.0;
    let mut d_q = Matrix::zeros(n, 1);
    for (i, (q, y)) in trace.output.data.iter().zip(targets).enumerate() {
        let err = q - y;
        loss += err * err;
        d_q.data[i] = 2.0 * err / n as f64;
    }
    let mut grad = vec![0.0; critic.num_params()];
    critic.backward(&trace, &d_q, Some(&mut grad), false);
    (loss / n as f64, grad)
}

/// `-(1/N) sum Q(s, g, pi(s, g)) + c (1/N) sum ||pi(s, g)||^2` and its gradient
/// with respect to the actor parameters; the critic is held fixed.
pub fn actor_loss_and_grad(actor: &Mlp, critic: &Mlp, batch: &[Transition], action_l2: f64) -> (f64, Vec<f64>) {
    let n = batch.len();
    let inv_n = 1.0 / n as f64;
    let obs = obs_matrix(batch.iter().map(|t| (t.state, t.goal)));
    let actor_trace = actor.forward_trace(&obs);
    let actions = &actor_trace.output;
    let critic_trace = critic.forward_trace(&critic_input(&obs, actions));
    let q_sum: f64 = critic_trace.output.data.iter().sum();
    let l2_sum: f64 = actions.data.iter().map(|a| a * a).sum();
    let loss = -q_sum * inv_n + action_l2 * l2_sum * inv_n;

    let d_q = Matrix::from_vec(n, 1, vec![-inv_n; n]);
    let d_input = critic.backward(&critic_trace, &d_q, None, true).expect("input gradient requested");
    let mut d_action = Matrix::zeros(n, ACTION_DIM);
    for r in 0..n {
        let src = &d_input.row(r)[OBS_DIM..];
        let act = actions.row(r);
        for ((d, s), a) in d_action.row_mut(r).iter_mut().zip(src).zip(act) {
            *d = s + 2.0 * action_l2 * a * inv_n;
        }
    }
    let mut grad = vec![0.0; actor.num_params()];
    actor.backward(&actor_trace, &d_action, Some(&mut grad), false);
    (loss, grad)
}

/// Online and target networks with their optimizer state.
#[derive(Debug, Clone)]
pub struct Agent {
    pub actor: Mlp,
    pub critic: Mlp,
    pub target_actor: Mlp,
    pub target_critic: Mlp,
    pub actor_opt: Adam,
    pub critic_opt: Adam,
    pub hp: HyperParams,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UpdateStats {
    pub critic_loss: f64,
    pub actor_loss: f64,
}

fn check_finite(loss: f64, grad: &[f64], what: &'static str) -> Result<(), AgentError> {
    if loss.is_finite() && grad.iter().all(|g| g.is_finite()) {
        Ok(())
    } else {
        Err(AgentError::Divergence(what))
    }
}

impl Agent {
    pub fn new<R: Rng + ?Sized>(hp: HyperParams, rng: &mut R) -> Result<Self, AgentError> {
        hp.validate()?;
        let actor = Mlp::new(&hp.actor_sizes(), ACTOR_OUTPUT, rng)?;
        let critic = Mlp::new(&hp.critic_sizes(), CRITIC_OUTPUT, rng)?;
        Ok(Agent::from_networks(actor.clone(), critic.clone(), actor, critic, hp))
    }

    pub fn from_networks(actor: Mlp, critic: Mlp, target_actor: Mlp, target_critic: Mlp, hp: HyperParams) -> Self {
        Agent {
            actor_opt: Adam::new(actor.num_params()),
            critic_opt: Adam::new(critic.num_params()),
            actor,
            critic,
            target_actor,
            target_critic,
            hp,
        }
    }

    pub fn act(&self, state: Vec2, goal: Vec2) -> Vec2 {
        actor_forward(&self.actor, state, goal)
    }

    /// Behavioral policy when `explore`, otherwise the greedy actor output.
    pub fn select_action<R: Rng + ?Sized>(&self, state: Vec2, goal: Vec2, rng: &mut R, explore: bool) -> Vec2 {
        if !explore {
            return self.act(state, goal);
        }
        if rng.gen_bool(self.hp.random_action_prob) {
            return Vec2::new(rng.gen_range(-A_MAX..=A_MAX), rng.gen_range(-A_MAX..=A_MAX));
        }
        let a = self.act(state, goal);
        let sigma = self.hp.noise_sigma;
        let nx: f64 = rng.sample(StandardNormal);
        let ny: f64 = rng.sample(StandardNormal);
        Vec2::new(a.x + sigma * nx, a.y + sigma * ny).clamp_components(A_MAX)
    }

    pub fn compute_targets(&self, batch: &[Transition]) -> Vec<f64> {
        compute_targets(batch, &self.target_actor, &self.target_critic, self.hp.gamma)
    }

    pub fn critic_update(&mut self, batch: &[Transition], targets: &[f64]) -> Result<f64, AgentError> {
        let (loss, grad) = critic_loss_and_grad(&self.critic, batch, targets);
        check_finite(loss, &grad, "critic loss")?;
        self.critic_opt.step(self.critic.params_mut(), &grad, self.hp.critic_lr);
        Ok(loss)
    }

    pub fn actor_update(&mut self, batch: &[Transition]) -> Result<f64, AgentError> {
        let (loss, grad) = actor_loss_and_grad(&self.actor, &self.critic, batch, self.hp.action_l2);
        check_finite(loss, &grad, "actor loss")?;
        self.actor_opt.step(self.actor.params_mut(), &grad, self.hp.actor_lr);
        Ok(loss)
    }

    pub fn soft_update_targets(&mut self) -> Result<(), AgentError> {
        self.target_actor.soft_update_from(&self.actor, self.hp.tau)?;
        self.target_critic.soft_update_from(&self.critic, self.hp.tau)?;
        Ok(())
    }

    /// One full optimization step on a minibatch: critic, then actor, then
    /// both target networks.
    pub fn train_step(&mut self, batch: &[Transition]) -> Result<UpdateStats, AgentError> {
        let targets = self.compute_targets(batch);
        let critic_loss = self.critic_update(batch, &targets)?;
        let actor_loss = self.actor_update(batch)?;
        self.soft_update_targets()?;
        Ok(UpdateStats { critic_loss, actor_loss })
    }
}
