//! The augmented-state MDP loop: one notifier action per word-tick, a human
//! action realized through the reaction model, one environment step, and a
//! window update.
//!
//! The transition factors cleanly: the reaction model only chooses the human
//! action, and the environment only consumes it. Nothing downstream of the
//! realized human action reads notifier state.

use crate::action::NotificationAction;
use crate::augment::AugmentedState;
use crate::derive_seed;
use crate::domains::{sum_items, Domain, EpisodeStatus, RewardItem, RewardTerm};
use crate::error::{CoreError, Result};
use crate::human::{ReactiveHuman, TickEvents};
use crate::time::WordTick;

/// Outcome of one simulated tick. The updated window lives on the
/// [`Simulation`] and is borrowed via [`Simulation::window`].
#[derive(Debug, Clone)]
pub struct TransitionResult<A> {
    /// Tick that was just simulated.
    pub t: WordTick,
    pub human_action: A,
    /// True when the human action came from a reaction window rather than
    /// the base policy.
    pub reacting: bool,
    pub reward: f64,
    pub reward_items: Vec<RewardItem>,
    pub status: EpisodeStatus,
    pub events: TickEvents,
}

pub struct Simulation<D: Domain> {
    env: D,
    human: ReactiveHuman<D>,
    window_len: usize,
    window: AugmentedState,
    t: WordTick,
    status: EpisodeStatus,
    total_reward: f64,
}

impl<D: Domain> Simulation<D> {
    pub fn new(env: D, human: ReactiveHuman<D>, window_len: usize) -> Result<Self> {
        if window_len == 0 {
            return Err(CoreError::Config(
                "history window length n must be >= 1".into(),
            ));
        }
        let topic_count = env.topics().len();
        let window = AugmentedState::initial(vec![0.0; env.obs_dim()], window_len, topic_count)?;
        Ok(Simulation {
            env,
            human,
            window_len,
            window,
            t: WordTick::ZERO,
            status: EpisodeStatus::Running,
            total_reward: 0.0,
        })
    }

    /// Starts a new episode; environment and human draw decorrelated seeds.
    pub fn reset(&mut self, seed: u64) {
        self.env.reset(derive_seed(seed, 1));
        self.human.reset(derive_seed(seed, 2));
        self.window = AugmentedState::initial(
            self.env.observation(),
            self.window_len,
            self.env.topics().len(),
        )
        .expect("window_len validated in new");
        self.t = WordTick::ZERO;
        self.status = EpisodeStatus::Running;
        self.total_reward = 0.0;
    }

    /// Advances one word-tick under the notifier action `a_g`.
    pub fn step(&mut self, a_g: NotificationAction) -> Result<TransitionResult<D::Action>> {
        if self.status.is_terminal() {
            return Err(CoreError::EpisodeOver);
        }
        a_g.validate(self.env.topics().len())?;
        let t = self.t;

        // Time-driven utterance events first, then the new notification.
        let mut events = self.human.begin_tick(t);
        if let Some(done) = events.completion {
            self.env
                .on_utterance_completed(done.topic, done.k, done.l, t);
        }
        let new_notification = a_g.is_notify();
        if let NotificationAction::Notify { topic, .. } = a_g {
            let name = self.env.topics().name(topic);
            let recv = self.human.receive(&a_g, name, t);
            if events.truncated.is_none() {
                events.truncated = recv.truncated;
            }
            // A same-tick comprehension of the incoming utterance (possible
            // only with the delay-free override) supersedes the older one in
            // reaction state; both rewards still count.
            if let Some(mut incoming) = recv.comprehension {
                if let Some(prev) = events.comprehension {
                    incoming.reward += prev.reward;
                }
                events.comprehension = Some(incoming);
            }
        }

        let (human_action, reacting) = self.human.act(&self.env, t);
        let effect = self.env.apply(human_action);

        let mut reward_items = effect.reward_items;
        if new_notification {
            reward_items.push(RewardItem::new(
                RewardTerm::NotifyInitiation,
                self.env.initiation_penalty(),
            ));
        }
        if let Some(c) = &events.comprehension {
            if c.reward != 0.0 {
                reward_items.push(RewardItem::new(RewardTerm::ReactionReward, c.reward));
            }
        }
        let reward = sum_items(&reward_items);
        self.total_reward += reward;

        self.window.push(self.env.observation(), a_g);
        self.t = t.next();
        self.status = effect.status;

        Ok(TransitionResult {
            t,
            human_action,
            reacting,
            reward,
            reward_items,
            status: self.status,
            events,
        })
    }

    pub fn window(&self) -> &AugmentedState {
        &self.window
    }

    pub fn env(&self) -> &D {
        &self.env
    }

    pub fn env_mut(&mut self) -> &mut D {
        &mut self.env
    }

    pub fn human(&self) -> &ReactiveHuman<D> {
        &self.human
    }

    pub fn human_mut(&mut self) -> &mut ReactiveHuman<D> {
        &mut self.human
    }

    pub fn t(&self) -> WordTick {
        self.t
    }

    pub fn status(&self) -> EpisodeStatus {
        self.status
    }

    pub fn total_reward(&self) -> f64 {
        self.total_reward
    }
}
