//! Minimal domain and base-policy stand-ins for unit tests.

use crate::action::TopicId;
use crate::domains::{
    Domain, DomainId, EpisodeStatus, RewardItem, RewardTerm, StepEffect, TopicTable,
};
use crate::human::BasePolicy;
use crate::time::WordTick;
use rand_chacha::ChaCha8Rng;

/// Two-topic toy environment: actions are small integers, the observation
/// is the running tick count, rewards are the action value.
pub struct ToyDomain {
    pub topics: TopicTable<u8>,
    pub tick: u32,
    pub applied: Vec<u8>,
    pub max_ticks: u32,
    pub status: EpisodeStatus,
}

impl Default for ToyDomain {
    fn default() -> Self {
        ToyDomain {
            topics: TopicTable::new(vec![("go_a", 1u8), ("go_b", 2u8)]),
            tick: 0,
            applied: Vec::new(),
            max_ticks: 100,
            status: EpisodeStatus::Running,
        }
    }
}

impl Domain for ToyDomain {
    type Action = u8;

    fn id(&self) -> DomainId {
        DomainId::Piloting
    }

    fn reset(&mut self, _seed: u64) {
        self.tick = 0;
        self.applied.clear();
        self.status = EpisodeStatus::Running;
    }

    fn observation(&self) -> Vec<f64> {
        vec![self.tick as f64]
    }

    fn obs_dim(&self) -> usize {
        1
    }

    fn apply(&mut self, action: u8) -> StepEffect {
        self.applied.push(action);
        self.tick += 1;
        if self.tick >= self.max_ticks {
            self.status = EpisodeStatus::Timeout;
        }
        StepEffect {
            reward_items: vec![RewardItem::new(RewardTerm::StepCost, action as f64)],
            status: self.status,
        }
    }

    fn status(&self) -> EpisodeStatus {
        self.status
    }

    fn topics(&self) -> &TopicTable<u8> {
        &self.topics
    }

    fn initiation_penalty(&self) -> f64 {
        -1.0
    }

    fn action_name(&self, action: u8) -> &'static str {
        match action {
            0 => "idle",
            1 => "a",
            2 => "b",
            _ => "?",
        }
    }

    fn plot_point(&self) -> (f64, f64) {
        (self.tick as f64, 0.0)
    }

    fn on_utterance_completed(&mut self, _topic: TopicId, _k: u32, _l: u32, _t: WordTick) {}
}

/// Base policy that always answers 0 ("idle").
pub struct IdleBase;

impl BasePolicy<ToyDomain> for IdleBase {
    fn act(&mut self, _env: &ToyDomain, _rng: &mut ChaCha8Rng) -> u8 {
        0
    }
}
