//! The three time-critical task environments (piloting, driving, cooking),
//! their base human policies, topic tables, and notifier reward structure.

pub mod highway;
pub mod kitchen;
pub mod lander;

use crate::action::TopicId;
use crate::time::WordTick;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DomainId {
    Piloting,
    Driving,
    Cooking,
}

impl DomainId {
    pub fn as_str(&self) -> &'static str {
        match self {
            DomainId::Piloting => "piloting",
            DomainId::Driving => "driving",
            DomainId::Cooking => "cooking",
        }
    }

    pub fn parse(s: &str) -> Option<DomainId> {
        match s {
            "piloting" => Some(DomainId::Piloting),
            "driving" => Some(DomainId::Driving),
            "cooking" => Some(DomainId::Cooking),
            _ => None,
        }
    }
}

impl std::fmt::Display for DomainId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Where an episode stands after a step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EpisodeStatus {
    Running,
    Success,
    Failure,
    Timeout,
}

impl EpisodeStatus {
    pub fn is_terminal(&self) -> bool {
        !matches!(self, EpisodeStatus::Running)
    }
}

/// Labels for the itemized reward ledger. Every step reward is the exact sum
/// of its items, so logs can be audited term by term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RewardTerm {
    FuelMain,
    FuelSide,
    NotifyInitiation,
    NearDanger,
    InDanger,
    Crash,
    SuccessLanding,
    Speed,
    Collision,
    StepCost,
    SubtaskComplete,
    ReactionReward,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardItem {
    pub term: RewardTerm,
    pub value: f64,
}

impl RewardItem {
    pub fn new(term: RewardTerm, value: f64) -> Self {
        RewardItem { term, value }
    }
}

pub fn sum_items(items: &[RewardItem]) -> f64 {
    items.iter().map(|i| i.value).sum()
}

/// Result of advancing a domain one tick under a realized human action.
#[derive(Debug, Clone)]
pub struct StepEffect {
    pub reward_items: Vec<RewardItem>,
    pub status: EpisodeStatus,
}

/// Maps each abstract topic `c` to the concrete human action `f(c)`.
#[derive(Debug, Clone)]
pub struct TopicTable<A> {
    names: Vec<&'static str>,
    actions: Vec<A>,
}

impl<A: Copy> TopicTable<A> {
    pub fn new(entries: Vec<(&'static str, A)>) -> Self {
        let (names, actions) = entries.into_iter().unzip();
        TopicTable { names, actions }
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn name(&self, id: TopicId) -> &'static str {
        self.names[id.0]
    }

    pub fn action(&self, id: TopicId) -> A {
        self.actions[id.0]
    }

    pub fn id_of(&self, name: &str) -> Option<TopicId> {
        self.names.iter().position(|n| *n == name).map(TopicId)
    }

    pub fn names(&self) -> &[&'static str] {
        &self.names
    }
}

/// Topic names per domain, in head-index order. The order is part of the
/// policy input/output encoding, so it is fixed here once.
pub fn topic_names(domain: DomainId) -> &'static [&'static str] {
    match domain {
        DomainId::Piloting => &["ascend", "shift_right", "shift_left", "descend"],
        DomainId::Driving => &["slow_down", "speed_up", "merge_left", "merge_right"],
        DomainId::Cooking => &[
            "move_up",
            "move_down",
            "move_left",
            "move_right",
            "disclose_information",
        ],
    }
}

/// A task environment stepped one word-tick at a time.
///
/// Instances are single-threaded and independently seeded; the trainer
/// replicates them across workers with no shared state.
pub trait Domain: Send {
    /// Primitive action executed by the human each tick.
    type Action: Copy + Eq + std::fmt::Debug + Send;

    fn id(&self) -> DomainId;

    /// Starts a fresh episode. All per-episode randomness derives from `seed`.
    fn reset(&mut self, seed: u64);

    /// Flat observation vector the notifier sees.
    fn observation(&self) -> Vec<f64>;

    fn obs_dim(&self) -> usize;

    /// Advances one tick under the realized human action.
    fn apply(&mut self, action: Self::Action) -> StepEffect;

    fn status(&self) -> EpisodeStatus;

    fn topics(&self) -> &TopicTable<Self::Action>;

    /// Reward added by the simulation loop whenever a new notification is
    /// initiated.
    fn initiation_penalty(&self) -> f64;

    fn action_name(&self, action: Self::Action) -> &'static str;

    /// (x, y)-style coordinate for trajectory plot data.
    fn plot_point(&self) -> (f64, f64);

    /// Hook invoked when an utterance finishes delivery untruncated. The
    /// cooking domain uses it to apply disclosed station information.
    fn on_utterance_completed(&mut self, _topic: TopicId, _k: u32, _l: u32, _t: WordTick) {}
}
