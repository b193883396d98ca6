//! PPO: generalized advantage estimation, the rollout buffer, the clipped
//! update over gated multi-head log-probabilities, and the trainer loop
//! driving parallel simulations.

use super::net::{
    clip_grad_norm, d_entropy_d_logits, d_logp_d_logits, log_softmax, Adam, MultiHeadNet, NetSpec,
};
use super::normalize::{ReturnNormalizer, RunningMeanStd};
use super::{sample_action, NotifierMode, PolicyNetwork, SampledAction, HEAD_COUNT};
use crate::derive_seed;
use crate::domains::{Domain, EpisodeStatus};
use crate::error::{CoreError, Result};
use crate::sim::Simulation;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::VecDeque;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PPOConfig {
    pub learning_rate: f64,
    pub anneal_lr: bool,
    pub num_envs: usize,
    pub num_steps: usize,
    pub gamma: f64,
    pub gae_lambda: f64,
    pub num_minibatches: usize,
    pub update_epochs: usize,
    pub norm_adv: bool,
    pub clip_coef: f64,
    pub clip_vloss: bool,
    pub ent_coef: f64,
    pub vf_coef: f64,
    pub max_grad_norm: f64,
    pub target_kl: Option<f64>,
    pub num_updates: usize,
    pub normalize_obs: bool,
    pub normalize_reward: bool,
}

impl Default for PPOConfig {
    fn default() -> Self {
        PPOConfig {
            learning_rate: 2.5e-4,
            anneal_lr: true,
            num_envs: 4,
            num_steps: 128,
            gamma: 0.99,
            gae_lambda: 0.95,
            num_minibatches: 4,
            update_epochs: 4,
            norm_adv: true,
            clip_coef: 0.2,
            clip_vloss: true,
            ent_coef: 0.01,
            vf_coef: 0.5,
            max_grad_norm: 0.5,
            target_kl: None,
            num_updates: 500,
            normalize_obs: false,
            normalize_reward: false,
        }
    }
}

impl PPOConfig {
    /// Profile for the hard piloting variant: bigger batches, more epochs,
    /// observation and reward normalization.
    pub fn hard_lander() -> Self {
        PPOConfig {
            num_envs: 16,
            num_steps: 600,
            num_minibatches: 8,
            update_epochs: 8,
            normalize_obs: true,
            normalize_reward: true,
            ..PPOConfig::default()
        }
    }

    pub fn batch_size(&self) -> usize {
        self.num_envs * self.num_steps
    }

    /// Learning rate applied at 0-based update `u` of `total`:
    /// lr0 * (1 - u/total), reaching 0 one step past the final update.
    pub fn lr_at(&self, update: usize, total: usize) -> f64 {
        if self.anneal_lr {
            self.learning_rate * (1.0 - update as f64 / total as f64)
        } else {
            self.learning_rate
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("learning_rate", self.learning_rate),
            ("gamma", self.gamma),
            ("gae_lambda", self.gae_lambda),
            ("clip_coef", self.clip_coef),
            ("vf_coef", self.vf_coef),
            ("max_grad_norm", self.max_grad_norm),
        ];
        for (name, v) in positive {
            if !v.is_finite() || v <= 0.0 {
                return Err(CoreError::Config(format!("ppo.{name} must be positive")));
            }
        }
        if self.num_envs == 0 || self.num_steps == 0 || self.num_updates == 0 {
            return Err(CoreError::Config(
                "ppo.num_envs, num_steps, num_updates must be positive".into(),
            ));
        }
        if !self.batch_size().is_multiple_of(self.num_minibatches) {
            return Err(CoreError::Config(
                "ppo.num_minibatches must divide num_envs * num_steps".into(),
            ));
        }
        Ok(())
    }
}

/// Generalized advantage estimation with episode-boundary masking for one
/// environment's step sequence. `dones[t]` marks a terminal after step t;
/// `next_value` bootstraps past the buffer end.
pub fn gae(
    rewards: &[f64],
    values: &[f64],
    dones: &[bool],
    next_value: f64,
    gamma: f64,
    lambda: f64,
) -> (Vec<f64>, Vec<f64>) {
    let n = rewards.len();
    debug_assert_eq!(values.len(), n);
    debug_assert_eq!(dones.len(), n);
    let mut advantages = vec![0.0; n];
    let mut carry = 0.0;
    for t in (0..n).rev() {
        let mask = if dones[t] { 0.0 } else { 1.0 };
        let v_next = if t == n - 1 { next_value } else { values[t + 1] };
        let delta = rewards[t] + gamma * v_next * mask - values[t];
        carry = delta + gamma * lambda * mask * carry;
        advantages[t] = carry;
    }
    let returns = advantages
        .iter()
        .zip(values)
        .map(|(a, v)| a + v)
        .collect();
    (advantages, returns)
}

/// Per-step storage for one update's worth of experience, laid out
/// `[step][env]`.
pub struct RolloutBuffer {
    pub num_steps: usize,
    pub num_envs: usize,
    pub feat_dim: usize,
    pub obs: Vec<f64>,
    pub actions: Vec<SampledAction>,
    pub values: Vec<f64>,
    pub rewards: Vec<f64>,
    pub dones: Vec<bool>,
    pub advantages: Vec<f64>,
    pub returns: Vec<f64>,
    len: usize,
}

impl RolloutBuffer {
    pub fn new(num_steps: usize, num_envs: usize, feat_dim: usize) -> Self {
        let cap = num_steps * num_envs;
        RolloutBuffer {
            num_steps,
            num_envs,
            feat_dim,
            obs: vec![0.0; cap * feat_dim],
            actions: Vec::with_capacity(cap),
            values: vec![0.0; cap],
            rewards: vec![0.0; cap],
            dones: vec![false; cap],
            advantages: vec![0.0; cap],
            returns: vec![0.0; cap],
            len: 0,
        }
    }

    pub fn clear(&mut self) {
        self.actions.clear();
        self.len = 0;
    }

    pub fn is_full(&self) -> bool {
        self.len == self.num_steps * self.num_envs
    }

    #[allow(clippy::too_many_arguments)]
    pub fn push(
        &mut self,
        obs: &[f64],
        action: SampledAction,
        value: f64,
        reward: f64,
        done: bool,
    ) {
        debug_assert!(!self.is_full());
        let i = self.len;
        self.obs[i * self.feat_dim..(i + 1) * self.feat_dim].copy_from_slice(obs);
        self.actions.push(action);
        self.values[i] = value;
        self.rewards[i] = reward;
        self.dones[i] = done;
        self.len += 1;
    }

    pub fn obs_at(&self, i: usize) -> &[f64] {
        &self.obs[i * self.feat_dim..(i + 1) * self.feat_dim]
    }

    /// Computes advantages/returns given bootstrap values per environment.
    pub fn finish(&mut self, next_values: &[f64], gamma: f64, lambda: f64) {
        debug_assert!(self.is_full());
        for (e, &bootstrap) in next_values.iter().enumerate().take(self.num_envs) {
            let idx: Vec<usize> = (0..self.num_steps).map(|s| s * self.num_envs + e).collect();
            let rewards: Vec<f64> = idx.iter().map(|&i| self.rewards[i]).collect();
            let values: Vec<f64> = idx.iter().map(|&i| self.values[i]).collect();
            let dones: Vec<bool> = idx.iter().map(|&i| self.dones[i]).collect();
            let (adv, ret) = gae(&rewards, &values, &dones, bootstrap, gamma, lambda);
            for (j, &i) in idx.iter().enumerate() {
                self.advantages[i] = adv[j];
                self.returns[i] = ret[j];
            }
        }
    }
}

#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
pub struct UpdateStats {
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub approx_kl: f64,
    pub clip_fraction: f64,
    pub grad_norm: f64,
}

/// Loss pieces for one sample; shared between the notifier update and the
/// single-head trainer so the gradient-checked path is the production path.
#[allow(clippy::too_many_arguments)]
pub fn accumulate_sample(
    actor: &MultiHeadNet,
    critic: &MultiHeadNet,
    obs: &[f64],
    heads: &[usize],
    active: &[bool],
    ent_mask: &[bool],
    old_logp: f64,
    advantage: f64,
    ret: f64,
    old_value: f64,
    clip_coef: f64,
    ent_coef: f64,
    vf_coef: f64,
    clip_vloss: bool,
    scale: f64,
    actor_grads: &mut [f64],
    critic_grads: &mut [f64],
) -> (f64, f64, f64, f64, f64) {
    let trace = actor.forward(obs);
    let dists: Vec<Vec<f64>> = trace.logits.iter().map(|l| log_softmax(l)).collect();
    let mut new_logp = 0.0;
    for h in 0..heads.len() {
        if active[h] {
            new_logp += dists[h][heads[h]];
        }
    }
    let log_ratio = new_logp - old_logp;
    let ratio = log_ratio.exp();

    // Clipped surrogate; gradient flows through the unclipped branch only
    // when it is the active minimum.
    let unclipped = ratio * advantage;
    let clipped = ratio.clamp(1.0 - clip_coef, 1.0 + clip_coef) * advantage;
    let pg_loss = -unclipped.min(clipped);
    // Gradient flows whenever the surrogate still depends on the ratio:
    // through the unclipped branch when it is the minimum, or through the
    // clipped branch while the ratio sits inside the clip band.
    let ratio_live =
        unclipped <= clipped || (1.0 - clip_coef..=1.0 + clip_coef).contains(&ratio);
    let d_logp = if ratio_live { -advantage * ratio } else { 0.0 };

    let mut total_entropy = 0.0;
    let mut d_logits: Vec<Vec<f64>> = dists.iter().map(|d| vec![0.0; d.len()]).collect();
    for h in 0..heads.len() {
        if active[h] {
            d_logp_d_logits(&dists[h], heads[h], d_logp * scale, &mut d_logits[h]);
        }
        if ent_mask[h] {
            total_entropy += super::net::entropy(&dists[h]);
            d_entropy_d_logits(&dists[h], -ent_coef * scale, &mut d_logits[h]);
        }
    }
    actor.backward(&trace, &d_logits, actor_grads);

    let v_trace = critic.forward(obs);
    let v = v_trace.logits[0][0];
    let (v_loss, dv) = if clip_vloss {
        let v_clip = old_value + (v - old_value).clamp(-clip_coef, clip_coef);
        let unclipped_sq = (v - ret) * (v - ret);
        let clipped_sq = (v_clip - ret) * (v_clip - ret);
        if unclipped_sq >= clipped_sq {
            (0.5 * unclipped_sq, v - ret)
        } else {
            let inside = (v - old_value).abs() <= clip_coef;
            (0.5 * clipped_sq, if inside { v_clip - ret } else { 0.0 })
        }
    } else {
        (0.5 * (v - ret) * (v - ret), v - ret)
    };
    critic.backward(&v_trace, &[vec![vf_coef * dv * scale]], critic_grads);

    let approx_kl = (ratio - 1.0) - log_ratio;
    (pg_loss, v_loss, total_entropy, approx_kl, ratio)
}

/// One PPO update over a full buffer. Returns averaged diagnostics.
#[allow(clippy::too_many_arguments)]
pub fn ppo_update(
    policy: &mut PolicyNetwork,
    buffer: &RolloutBuffer,
    cfg: &PPOConfig,
    mode: NotifierMode,
    adam: &mut Adam,
    lr: f64,
    rng: &mut ChaCha8Rng,
) -> Result<UpdateStats> {
    debug_assert!(buffer.is_full());
    let batch = buffer.num_steps * buffer.num_envs;
    let mb_size = batch / cfg.num_minibatches;
    let mut indices: Vec<usize> = (0..batch).collect();
    let ent_mask = mode.entropy_mask();

    let mut stats = UpdateStats::default();
    let mut samples_seen = 0usize;
    let mut clipped_count = 0usize;
    let mut actor_grads = vec![0.0; policy.actor.params.len()];
    let mut critic_grads = vec![0.0; policy.critic.params.len()];

    for _epoch in 0..cfg.update_epochs {
        indices.shuffle(rng);
        for mb in indices.chunks(mb_size) {
            let (mut adv_mean, mut adv_std) = (0.0, 1.0);
            if cfg.norm_adv {
                adv_mean = mb.iter().map(|&i| buffer.advantages[i]).sum::<f64>() / mb.len() as f64;
                let var = mb
                    .iter()
                    .map(|&i| (buffer.advantages[i] - adv_mean).powi(2))
                    .sum::<f64>()
                    / mb.len() as f64;
                adv_std = var.sqrt().max(1e-8);
            }
            actor_grads.fill(0.0);
            critic_grads.fill(0.0);
            let scale = 1.0 / mb.len() as f64;
            for &i in mb {
                let a = &buffer.actions[i];
                let adv = (buffer.advantages[i] - adv_mean) / adv_std;
                let (pg, vl, ent, kl, ratio) = accumulate_sample(
                    &policy.actor,
                    &policy.critic,
                    buffer.obs_at(i),
                    &a.heads,
                    &a.active,
                    &ent_mask,
                    a.logp,
                    adv,
                    buffer.returns[i],
                    buffer.values[i],
                    cfg.clip_coef,
                    cfg.ent_coef,
                    cfg.vf_coef,
                    cfg.clip_vloss,
                    scale,
                    &mut actor_grads,
                    &mut critic_grads,
                );
                if !(pg.is_finite() && vl.is_finite() && ent.is_finite()) {
                    return Err(CoreError::Training(format!(
                        "non-finite loss at sample {i}: pg={pg} value={vl} entropy={ent}"
                    )));
                }
                stats.policy_loss += pg;
                stats.value_loss += vl;
                stats.entropy += ent;
                stats.approx_kl += kl;
                samples_seen += 1;
                if (ratio - 1.0).abs() > cfg.clip_coef {
                    clipped_count += 1;
                }
            }
            let norm = clip_grad_norm(
                &mut [&mut actor_grads, &mut critic_grads],
                cfg.max_grad_norm,
            );
            stats.grad_norm += norm;
            adam.step(
                &mut [&mut policy.actor.params, &mut policy.critic.params],
                &[&actor_grads, &critic_grads],
                lr,
            );
        }
        if let Some(kl_limit) = cfg.target_kl {
            if stats.approx_kl / samples_seen as f64 > kl_limit {
                break;
            }
        }
    }
    let n = samples_seen as f64;
    stats.policy_loss /= n;
    stats.value_loss /= n;
    stats.entropy /= n;
    stats.approx_kl /= n;
    stats.clip_fraction = clipped_count as f64 / n;
    stats.grad_norm /= (cfg.update_epochs * cfg.num_minibatches) as f64;
    Ok(stats)
}

/// Per-update progress row, one JSON line each in training logs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainProgress {
    pub update: usize,
    pub env_steps: u64,
    pub lr: f64,
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub approx_kl: f64,
    pub clip_fraction: f64,
    pub mean_episode_return: f64,
    pub rolling_success: f64,
    pub episodes: u64,
    pub notify_rate: f64,
}

/// PPO trainer for the notifier task over parallel simulations.
pub struct Trainer<D: Domain> {
    pub sims: Vec<Simulation<D>>,
    pub policy: PolicyNetwork,
    pub mode: NotifierMode,
    pub cfg: PPOConfig,
    adam: Adam,
    rng: ChaCha8Rng,
    run_seed: u64,
    episode_counter: Vec<u64>,
    obs_norm: Option<RunningMeanStd>,
    ret_norm: Option<ReturnNormalizer>,
    env_steps: u64,
    episodes_done: u64,
    recent_success: VecDeque<bool>,
    recent_returns: VecDeque<f64>,
    cur_return: Vec<f64>,
    notify_count: u64,
    tick_count: u64,
}

impl<D: Domain> Trainer<D> {
    pub fn new(
        mut sims: Vec<Simulation<D>>,
        mode: NotifierMode,
        cfg: PPOConfig,
        seed: u64,
    ) -> Result<Self> {
        cfg.validate()?;
        if sims.len() != cfg.num_envs {
            return Err(CoreError::Config(format!(
                "trainer needs {} simulations, got {}",
                cfg.num_envs,
                sims.len()
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 0x90));
        for (i, sim) in sims.iter_mut().enumerate() {
            sim.reset(episode_seed(seed, i, 0));
        }
        let feat_dim = sims[0].window().feature_dim();
        let topic_count = sims[0].env().topics().len();
        let policy = PolicyNetwork::new(feat_dim, topic_count, &mut rng);
        let adam = Adam::new(&[policy.actor.params.len(), policy.critic.params.len()]);
        let obs_norm = cfg.normalize_obs.then(|| RunningMeanStd::new(feat_dim));
        let ret_norm = cfg
            .normalize_reward
            .then(|| ReturnNormalizer::new(cfg.num_envs, cfg.gamma));
        let num_envs = cfg.num_envs;
        Ok(Trainer {
            sims,
            policy,
            mode,
            cfg,
            adam,
            rng,
            run_seed: seed,
            episode_counter: vec![0; num_envs],
            obs_norm,
            ret_norm,
            env_steps: 0,
            episodes_done: 0,
            recent_success: VecDeque::with_capacity(128),
            recent_returns: VecDeque::with_capacity(128),
            cur_return: vec![0.0; num_envs],
            notify_count: 0,
            tick_count: 0,
        })
    }

    fn features(&self, env_idx: usize) -> Vec<f64> {
        let raw = self.sims[env_idx].window().features();
        match &self.obs_norm {
            Some(norm) => norm.normalize(&raw),
            None => raw,
        }
    }

    fn collect_rollout(&mut self, buffer: &mut RolloutBuffer) -> Result<()> {
        buffer.clear();
        for _ in 0..self.cfg.num_steps {
            for e in 0..self.cfg.num_envs {
                if let Some(norm) = &mut self.obs_norm {
                    norm.update(&self.sims[e].window().features());
                }
                let obs = self.features(e);
                let (dists, value) = self.policy.forward(&obs);
                let sample = sample_action(&dists, self.mode, &mut self.rng);
                let result = self.sims[e].step(sample.action)?;
                self.env_steps += 1;
                self.tick_count += 1;
                if sample.action.is_notify() {
                    self.notify_count += 1;
                }
                self.cur_return[e] += result.reward;
                let done = result.status.is_terminal();
                let reward = match &mut self.ret_norm {
                    Some(norm) => norm.normalize(e, result.reward, done),
                    None => result.reward,
                };
                buffer.push(&obs, sample, value, reward, done);
                if done {
                    self.episodes_done += 1;
                    push_capped(&mut self.recent_success, result.status == EpisodeStatus::Success);
                    push_capped(&mut self.recent_returns, self.cur_return[e]);
                    self.cur_return[e] = 0.0;
                    self.episode_counter[e] += 1;
                    let seed = episode_seed(self.run_seed, e, self.episode_counter[e]);
                    self.sims[e].reset(seed);
                }
            }
        }
        let next_values: Vec<f64> = (0..self.cfg.num_envs)
            .map(|e| self.policy.forward(&self.features(e)).1)
            .collect();
        buffer.finish(&next_values, self.cfg.gamma, self.cfg.gae_lambda);
        Ok(())
    }

    /// Runs `cfg.num_updates` PPO updates, invoking the callback after each.
    /// On a non-finite loss the trainer aborts with the policy untouched by
    /// the failing update.
    pub fn run(
        &mut self,
        mut on_update: impl FnMut(&PolicyNetwork, &TrainProgress),
    ) -> Result<()> {
        let mut buffer = RolloutBuffer::new(
            self.cfg.num_steps,
            self.cfg.num_envs,
            self.sims[0].window().feature_dim(),
        );
        let total = self.cfg.num_updates;
        for update in 0..total {
            let lr = self.cfg.lr_at(update, total);
            self.collect_rollout(&mut buffer)?;
            let cfg = self.cfg.clone();
            let mode = self.mode;
            let stats = ppo_update(
                &mut self.policy,
                &buffer,
                &cfg,
                mode,
                &mut self.adam,
                lr,
                &mut self.rng,
            )?;
            let progress = TrainProgress {
                update,
                env_steps: self.env_steps,
                lr,
                policy_loss: stats.policy_loss,
                value_loss: stats.value_loss,
                entropy: stats.entropy,
                approx_kl: stats.approx_kl,
                clip_fraction: stats.clip_fraction,
                mean_episode_return: mean(&self.recent_returns),
                rolling_success: frac(&self.recent_success),
                episodes: self.episodes_done,
                notify_rate: self.notify_count as f64 / self.tick_count.max(1) as f64,
            };
            on_update(&self.policy, &progress);
        }
        Ok(())
    }

    pub fn obs_normalizer(&self) -> Option<&RunningMeanStd> {
        self.obs_norm.as_ref()
    }
}

fn push_capped<T>(q: &mut VecDeque<T>, v: T) {
    if q.len() == 128 {
        q.pop_front();
    }
    q.push_back(v);
}

fn mean(q: &VecDeque<f64>) -> f64 {
    if q.is_empty() {
        return 0.0;
    }
    q.iter().sum::<f64>() / q.len() as f64
}

fn frac(q: &VecDeque<bool>) -> f64 {
    if q.is_empty() {
        return 0.0;
    }
    q.iter().filter(|b| **b).count() as f64 / q.len() as f64
}

fn episode_seed(run_seed: u64, env_idx: usize, episode: u64) -> u64 {
    derive_seed(derive_seed(run_seed, 0x5eed + env_idx as u64), episode)
}

/// Minimal discrete-action task interface for the single-head PPO loop
/// (used by the base-pilot trainer and sanity tasks).
pub trait DiscreteTask: Send {
    fn reset(&mut self, seed: u64) -> Vec<f64>;
    /// Returns (next observation, reward, done). Caller resets after done.
    fn step(&mut self, action: usize) -> (Vec<f64>, f64, bool);
    fn obs_dim(&self) -> usize;
    fn n_actions(&self) -> usize;
}

/// PPO over a single categorical head; shares the loss path with the
/// notifier update.
pub struct DiscreteTrainer<T: DiscreteTask> {
    pub tasks: Vec<T>,
    pub actor: MultiHeadNet,
    pub critic: MultiHeadNet,
    pub cfg: PPOConfig,
    adam: Adam,
    rng: ChaCha8Rng,
    run_seed: u64,
    episode_counter: Vec<u64>,
    obs: Vec<Vec<f64>>,
    pub mean_return: f64,
    cur_return: Vec<f64>,
    recent_returns: VecDeque<f64>,
}

impl<T: DiscreteTask> DiscreteTrainer<T> {
    pub fn new(mut tasks: Vec<T>, cfg: PPOConfig, seed: u64) -> Result<Self> {
        cfg.validate()?;
        if tasks.len() != cfg.num_envs {
            return Err(CoreError::Config("task count must equal num_envs".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 0xd15c));
        let obs_dim = tasks[0].obs_dim();
        let n_actions = tasks[0].n_actions();
        let actor = MultiHeadNet::new(
            NetSpec::new(obs_dim, vec![64, 64], vec![n_actions]),
            &[0.01],
            &mut rng,
        );
        let critic = MultiHeadNet::new(NetSpec::new(obs_dim, vec![64, 64], vec![1]), &[1.0], &mut rng);
        let adam = Adam::new(&[actor.params.len(), critic.params.len()]);
        let obs: Vec<Vec<f64>> = tasks
            .iter_mut()
            .enumerate()
            .map(|(i, t)| t.reset(episode_seed(seed, i, 0)))
            .collect();
        let num_envs = cfg.num_envs;
        Ok(DiscreteTrainer {
            tasks,
            actor,
            critic,
            cfg,
            adam,
            rng,
            run_seed: seed,
            episode_counter: vec![0; num_envs],
            obs,
            mean_return: 0.0,
            cur_return: vec![0.0; num_envs],
            recent_returns: VecDeque::with_capacity(128),
        })
    }

    pub fn action_probs(&self, obs: &[f64]) -> Vec<f64> {
        let trace = self.actor.forward(obs);
        log_softmax(&trace.logits[0]).iter().map(|l| l.exp()).collect()
    }

    pub fn run(&mut self, mut on_update: impl FnMut(usize, &UpdateStats)) -> Result<()> {
        let cfg = self.cfg.clone();
        let mut buffer = RolloutBuffer::new(cfg.num_steps, cfg.num_envs, self.tasks[0].obs_dim());
        let total = cfg.num_updates;
        for update in 0..total {
            let lr = cfg.lr_at(update, total);
            buffer.clear();
            for _ in 0..cfg.num_steps {
                for e in 0..cfg.num_envs {
                    let obs = self.obs[e].clone();
                    let trace = self.actor.forward(&obs);
                    let logps = log_softmax(&trace.logits[0]);
                    let action = super::net::sample_from_logps(&logps, &mut self.rng);
                    let value = self.critic.forward(&obs).logits[0][0];
                    let (next_obs, reward, done) = self.tasks[e].step(action);
                    self.cur_return[e] += reward;
                    let mut heads = [0usize; HEAD_COUNT];
                    let mut active = [false; HEAD_COUNT];
                    heads[0] = action;
                    active[0] = true;
                    let sample = SampledAction {
                        heads,
                        active,
                        logp: logps[action],
                        action: crate::action::NotificationAction::Null,
                    };
                    buffer.push(&obs, sample, value, reward, done);
                    if done {
                        push_capped(&mut self.recent_returns, self.cur_return[e]);
                        self.cur_return[e] = 0.0;
                        self.episode_counter[e] += 1;
                        self.obs[e] = self.tasks[e]
                            .reset(episode_seed(self.run_seed, e, self.episode_counter[e]));
                    } else {
                        self.obs[e] = next_obs;
                    }
                }
            }
            let next_values: Vec<f64> = (0..cfg.num_envs)
                .map(|e| self.critic.forward(&self.obs[e]).logits[0][0])
                .collect();
            buffer.finish(&next_values, cfg.gamma, cfg.gae_lambda);
            let stats = discrete_update(
                &mut self.actor,
                &mut self.critic,
                &buffer,
                &cfg,
                &mut self.adam,
                lr,
                &mut self.rng,
            )?;
            self.mean_return = mean(&self.recent_returns);
            on_update(update, &stats);
        }
        Ok(())
    }
}

/// Single-head variant of the PPO update (one active head per sample).
#[allow(clippy::too_many_arguments)]
fn discrete_update(
    actor: &mut MultiHeadNet,
    critic: &mut MultiHeadNet,
    buffer: &RolloutBuffer,
    cfg: &PPOConfig,
    adam: &mut Adam,
    lr: f64,
    rng: &mut ChaCha8Rng,
) -> Result<UpdateStats> {
    let batch = buffer.num_steps * buffer.num_envs;
    let mb_size = batch / cfg.num_minibatches;
    let mut indices: Vec<usize> = (0..batch).collect();
    let mut stats = UpdateStats::default();
    let mut seen = 0usize;
    let mut actor_grads = vec![0.0; actor.params.len()];
    let mut critic_grads = vec![0.0; critic.params.len()];
    for _epoch in 0..cfg.update_epochs {
        indices.shuffle(rng);
        for mb in indices.chunks(mb_size) {
            let (mut adv_mean, mut adv_std) = (0.0, 1.0);
            if cfg.norm_adv {
                adv_mean = mb.iter().map(|&i| buffer.advantages[i]).sum::<f64>() / mb.len() as f64;
                let var = mb
                    .iter()
                    .map(|&i| (buffer.advantages[i] - adv_mean).powi(2))
                    .sum::<f64>()
                    / mb.len() as f64;
                adv_std = var.sqrt().max(1e-8);
            }
            actor_grads.fill(0.0);
            critic_grads.fill(0.0);
            let scale = 1.0 / mb.len() as f64;
            for &i in mb {
                let a = &buffer.actions[i];
                let adv = (buffer.advantages[i] - adv_mean) / adv_std;
                let (pg, vl, ent, kl, _ratio) = accumulate_sample(
                    actor,
                    critic,
                    buffer.obs_at(i),
                    &a.heads[..1],
                    &a.active[..1],
                    &[true],
                    a.logp,
                    adv,
                    buffer.returns[i],
                    buffer.values[i],
                    cfg.clip_coef,
                    cfg.ent_coef,
                    cfg.vf_coef,
                    cfg.clip_vloss,
                    scale,
                    &mut actor_grads,
                    &mut critic_grads,
                );
                if !(pg.is_finite() && vl.is_finite()) {
                    return Err(CoreError::Training("non-finite loss".into()));
                }
                stats.policy_loss += pg;
                stats.value_loss += vl;
                stats.entropy += ent;
                stats.approx_kl += kl;
                seen += 1;
            }
            let norm = clip_grad_norm(&mut [&mut actor_grads, &mut critic_grads], cfg.max_grad_norm);
            stats.grad_norm += norm;
            adam.step(
                &mut [&mut actor.params, &mut critic.params],
                &[&actor_grads, &critic_grads],
                lr,
            );
        }
    }
    let n = seen as f64;
    stats.policy_loss /= n;
    stats.value_loss /= n;
    stats.entropy /= n;
    stats.approx_kl /= n;
    Ok(stats)
}

