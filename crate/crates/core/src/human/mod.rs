//! The reactive human: a base task policy plus an utterance reaction model.
//!
//! The human executes their own task policy every tick, except inside the
//! reaction window of a comprehended utterance: once an utterance's
//! actionable word has been heard (`k` words in, unless truncated first),
//! the instructed action `f(c)` takes over for ticks
//! `d_r <= Δt <= d_r + d_f`, where `Δt` counts ticks since comprehension.

use crate::action::{NotificationAction, TopicId};
use crate::domains::Domain;
use crate::time::WordTick;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

/// Weights of the informativeness measure `I(u) = alpha * l + beta * I_why`.
/// The rationale term is not modeled, so `beta` is fixed to 0 in every
/// shipped configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InformativenessConfig {
    pub alpha: f64,
    pub beta: f64,
}

impl Default for InformativenessConfig {
    fn default() -> Self {
        InformativenessConfig {
            alpha: 1.0,
            beta: 0.0,
        }
    }
}

/// Length-based informativeness proxy.
pub fn informativeness(u: &ActiveUtterance, cfg: &InformativenessConfig) -> f64 {
    informativeness_of_length(u.l, cfg)
}

pub fn informativeness_of_length(l: u32, cfg: &InformativenessConfig) -> f64 {
    cfg.alpha * l as f64
}

/// How informativeness maps to follow-through duration. Fixed per domain
/// configuration: identity for piloting, `2l - 2` for driving, constant 3
/// for the hard piloting variant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DfMap {
    LinearIdentity,
    Affine2lMinus2,
    Constant3,
}

/// Follow-through duration in ticks for informativeness `i`.
///
/// A negative mapped value clamps to 0 and logs a warning; only reachable
/// with non-default informativeness weights.
pub fn follow_through(i: f64, map: DfMap) -> u32 {
    let raw = match map {
        DfMap::LinearIdentity => i.round(),
        DfMap::Affine2lMinus2 => (2.0 * i - 2.0).round(),
        DfMap::Constant3 => 3.0,
    };
    if raw < 0.0 {
        eprintln!("warning: follow-through map {map:?} produced {raw} for I={i}; clamping to 0");
        0
    } else {
        raw as u32
    }
}

/// Reward granted to the notifier when an utterance is comprehended,
/// as a function of informativeness. Used by the hard piloting variant
/// (`l - 2`), disabled elsewhere.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReactionRewardMap {
    None,
    LMinus2,
}

pub fn reaction_reward(i: f64, map: ReactionRewardMap) -> f64 {
    match map {
        ReactionRewardMap::None => 0.0,
        ReactionRewardMap::LMinus2 => i - 2.0,
    }
}

/// Per-episode reaction delay distribution. One draw per episode: the delay
/// is a trait of the simulated human, not of individual notifications.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ReactionDelayDist {
    Fixed { value: u32 },
    Gaussian { mean: f64, std: f64 },
}

impl ReactionDelayDist {
    pub fn fixed(value: u32) -> Self {
        ReactionDelayDist::Fixed { value }
    }

    pub fn gaussian(mean: f64, std: f64) -> Self {
        ReactionDelayDist::Gaussian { mean, std }
    }
}

/// Samples a reaction delay: Gaussian draws are rounded to the nearest
/// integer and clamped at zero.
pub fn sample_reaction_delay(dist: &ReactionDelayDist, rng: &mut impl Rng) -> u32 {
    match *dist {
        ReactionDelayDist::Fixed { value } => value,
        ReactionDelayDist::Gaussian { mean, std } => {
            let normal = Normal::new(mean, std).expect("std must be finite and >= 0");
            let x: f64 = normal.sample(rng);
            x.round().max(0.0) as u32
        }
    }
}

/// An utterance being (or having been) delivered to the human.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActiveUtterance {
    pub topic: TopicId,
    /// Word index (1-based from start) at which the instruction is grasped.
    pub k: u32,
    /// Total conveyance length in words.
    pub l: u32,
    pub start: WordTick,
    /// Set when a newer notification preempted this one mid-delivery.
    pub truncated_at: Option<WordTick>,
}

impl ActiveUtterance {
    pub fn begin(topic: TopicId, k: u32, l: u32, start: WordTick) -> Self {
        ActiveUtterance {
            topic,
            k,
            l,
            start,
            truncated_at: None,
        }
    }

    /// Words delivered by time `t` (capped by truncation and by `l`).
    pub fn words_delivered(&self, t: WordTick) -> u32 {
        let horizon = match self.truncated_at {
            Some(tt) => tt.0.min(t.0),
            None => t.0,
        };
        horizon.saturating_sub(self.start.0).min(self.l)
    }

    /// Comprehension happens at `start + k`, and only if at least `k` words
    /// were delivered before any truncation.
    pub fn comprehension_tick(&self) -> WordTick {
        self.start.plus(self.k)
    }

    /// Whether the actionable word was (or will be, absent further
    /// preemption) actually heard.
    pub fn comprehensible(&self) -> bool {
        match self.truncated_at {
            Some(tt) => tt.0.saturating_sub(self.start.0) >= self.k,
            None => true,
        }
    }

    pub fn comprehended_by(&self, t: WordTick) -> bool {
        self.comprehensible() && t >= self.comprehension_tick()
    }

    pub fn delivered_fully(&self) -> bool {
        match self.truncated_at {
            Some(tt) => tt.0.saturating_sub(self.start.0) >= self.l,
            None => true,
        }
    }
}

/// The reaction-window test shared by every reaction path: the instructed
/// action holds exactly for `d_r <= Δt <= d_r + d_f`.
#[inline]
pub fn in_reaction_window(d_r: u32, d_f: u32, delta_t: u32) -> bool {
    d_r <= delta_t && delta_t <= d_r + d_f
}

/// Reaction function: returns `f(c)` iff `u` has been comprehended and the
/// elapsed time since comprehension falls inside the reaction window;
/// otherwise the base policy's action stands.
pub fn react<A: Copy>(
    base_action: A,
    u: Option<&ActiveUtterance>,
    d_r: u32,
    d_f: u32,
    t_now: WordTick,
    f: impl Fn(TopicId) -> A,
) -> A {
    match u {
        Some(u) if u.comprehended_by(t_now) => {
            let delta_t = t_now.0 - u.comprehension_tick().0;
            if in_reaction_window(d_r, d_f, delta_t) {
                f(u.topic)
            } else {
                base_action
            }
        }
        _ => base_action,
    }
}

/// Static parameters of the utterance reaction model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReactionParams {
    pub delay: ReactionDelayDist,
    pub df_map: DfMap,
    pub reward_map: ReactionRewardMap,
    pub informativeness: InformativenessConfig,
    /// Training-time override of the comprehension index: `Some(0)` models
    /// the delay-free assumption that utterances are understood the instant
    /// they begin. `None` uses each utterance's own `k`.
    pub comprehension_override: Option<u32>,
}

impl ReactionParams {
    pub fn new(delay: ReactionDelayDist, df_map: DfMap) -> Self {
        ReactionParams {
            delay,
            df_map,
            reward_map: ReactionRewardMap::None,
            informativeness: InformativenessConfig::default(),
            comprehension_override: None,
        }
    }

    fn effective_k(&self, k: u32, l: u32) -> u32 {
        self.comprehension_override.unwrap_or(k).min(l)
    }
}

/// Task policy the human follows when no reaction window is active.
///
/// Implementations must be a pure function of the human-visible state and
/// their own seeded randomness; they never read notifier state.
pub trait BasePolicy<D: Domain>: Send {
    fn act(&mut self, env: &D, rng: &mut ChaCha8Rng) -> D::Action;

    fn reset(&mut self, _seed: u64) {}
}

/// Log entry for one issued notification.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NotificationRecord {
    pub topic: TopicId,
    pub topic_name: String,
    pub k: u32,
    pub l: u32,
    pub start: WordTick,
    pub truncated_at: Option<WordTick>,
    pub comprehended_at: Option<WordTick>,
    pub d_f: Option<u32>,
    pub reaction_ticks: u32,
    /// Utterance text, when retrieval from the taxonomy is in play.
    pub text: Option<String>,
}

impl NotificationRecord {
    pub fn followed_through(&self) -> bool {
        self.comprehended_at.is_some() && self.reaction_ticks > 0
    }

    pub fn delivered_fully(&self) -> bool {
        match self.truncated_at {
            Some(tt) => tt.0.saturating_sub(self.start.0) >= self.l,
            None => true,
        }
    }
}

/// Comprehension event surfaced to the simulation loop (it may carry a
/// reaction reward for the notifier).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComprehensionEvent {
    pub record_idx: usize,
    pub topic: TopicId,
    pub d_f: u32,
    pub reward: f64,
}

/// Utterance-completion event (full delivery, untruncated).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompletionEvent {
    pub record_idx: usize,
    pub topic: TopicId,
    pub k: u32,
    pub l: u32,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TickEvents {
    pub comprehension: Option<ComprehensionEvent>,
    pub completion: Option<CompletionEvent>,
    pub truncated: Option<usize>,
}

#[derive(Debug, Clone, Copy)]
struct ActiveReaction {
    topic: TopicId,
    comprehended_at: WordTick,
    d_f: u32,
    record_idx: usize,
}

/// The reactive human: base policy, reaction parameters, and per-episode
/// mutable reaction state. Confined to one worker; replicate freely.
pub struct ReactiveHuman<D: Domain> {
    base: Box<dyn BasePolicy<D>>,
    pub params: ReactionParams,
    d_r: u32,
    inflight: Option<(ActiveUtterance, usize)>,
    reaction: Option<ActiveReaction>,
    records: Vec<NotificationRecord>,
    rng: ChaCha8Rng,
}

impl<D: Domain> ReactiveHuman<D> {
    pub fn new(base: Box<dyn BasePolicy<D>>, params: ReactionParams) -> Self {
        ReactiveHuman {
            base,
            params,
            d_r: 0,
            inflight: None,
            reaction: None,
            records: Vec::new(),
            rng: rand::SeedableRng::seed_from_u64(0),
        }
    }

    /// Clears reaction state and samples this episode's reaction delay.
    pub fn reset(&mut self, seed: u64) {
        self.rng = rand::SeedableRng::seed_from_u64(seed);
        self.d_r = sample_reaction_delay(&self.params.delay, &mut self.rng);
        self.inflight = None;
        self.reaction = None;
        self.records.clear();
        self.base.reset(seed);
    }

    /// Reaction delay realized for the current episode.
    pub fn realized_delay(&self) -> u32 {
        self.d_r
    }

    pub fn records(&self) -> &[NotificationRecord] {
        &self.records
    }

    pub fn take_records(&mut self) -> Vec<NotificationRecord> {
        std::mem::take(&mut self.records)
    }

    pub fn record_mut(&mut self, idx: usize) -> &mut NotificationRecord {
        &mut self.records[idx]
    }

    /// Resolves time-driven utterance events at the start of tick `t`:
    /// comprehension at `start + k`, completion at `start + l`.
    pub fn begin_tick(&mut self, t: WordTick) -> TickEvents {
        let mut events = TickEvents::default();
        if let Some((u, idx)) = self.inflight {
            let k_eff = self.params.effective_k(u.k, u.l);
            if u.truncated_at.is_none() && t == u.start.plus(k_eff) {
                events.comprehension = Some(self.comprehend(u.topic, idx, t));
            }
            if t >= u.start.plus(u.l) {
                // Full delivery; the utterance leaves the in-flight slot but
                // any active reaction window keeps running.
                if u.truncated_at.is_none() {
                    events.completion = Some(CompletionEvent {
                        record_idx: idx,
                        topic: u.topic,
                        k: u.k,
                        l: u.l,
                    });
                }
                self.inflight = None;
            }
        }
        events
    }

    /// Delivers a new notification at tick `t`, preempting any utterance
    /// still in flight. Truncation before the actionable word cancels the
    /// old utterance's comprehension entirely; a reaction window already
    /// running is only cancelled by the next comprehension event.
    pub fn receive(
        &mut self,
        action: &NotificationAction,
        topic_name: &str,
        t: WordTick,
    ) -> TickEvents {
        let mut events = TickEvents::default();
        let NotificationAction::Notify { topic, k, l } = *action else {
            return events;
        };
        if let Some((u, idx)) = self.inflight.as_mut() {
            u.truncated_at = Some(t);
            self.records[*idx].truncated_at = Some(t);
            events.truncated = Some(*idx);
        }
        let idx = self.records.len();
        self.records.push(NotificationRecord {
            topic,
            topic_name: topic_name.to_string(),
            k,
            l,
            start: t,
            truncated_at: None,
            comprehended_at: None,
            d_f: None,
            reaction_ticks: 0,
            text: None,
        });
        let u = ActiveUtterance::begin(topic, k, l, t);
        self.inflight = Some((u, idx));
        if self.params.effective_k(k, l) == 0 {
            events.comprehension = Some(self.comprehend(topic, idx, t));
        }
        events
    }

    fn comprehend(&mut self, topic: TopicId, record_idx: usize, t: WordTick) -> ComprehensionEvent {
        let rec = &mut self.records[record_idx];
        let i = informativeness_of_length(rec.l, &self.params.informativeness);
        let d_f = follow_through(i, self.params.df_map);
        rec.comprehended_at = Some(t);
        rec.d_f = Some(d_f);
        let reward = reaction_reward(i, self.params.reward_map);
        // A new comprehension replaces whatever reaction was running.
        self.reaction = Some(ActiveReaction {
            topic,
            comprehended_at: t,
            d_f,
            record_idx,
        });
        ComprehensionEvent {
            record_idx,
            topic,
            d_f,
            reward,
        }
    }

    /// Picks this tick's action: the instructed `f(c)` inside an active
    /// reaction window, the base policy otherwise. Also reports whether a
    /// reaction was executing.
    pub fn act(&mut self, env: &D, t: WordTick) -> (D::Action, bool) {
        if let Some(r) = self.reaction {
            let delta_t = t.0.saturating_sub(r.comprehended_at.0);
            if in_reaction_window(self.d_r, r.d_f, delta_t) {
                self.records[r.record_idx].reaction_ticks += 1;
                return (env.topics().action(r.topic), true);
            }
            if delta_t > self.d_r + r.d_f {
                self.reaction = None;
            }
        }
        (self.base.act(env, &mut self.rng), false)
    }
}

#[cfg(test)]
mod tests;
