//! The notifier's action space: stay silent, or speak an utterance
//! characterized by a topic, a comprehension time `k`, and a length `l`.

use crate::error::{CoreError, Result};
use serde::{Deserialize, Serialize};

/// Inclusive lower bound for both `k` and `l` in all shipped domains.
pub const K_MIN: u32 = 2;
/// Inclusive upper bound for both `k` and `l` in all shipped domains.
pub const L_MAX: u32 = 5;

/// Number of distinct values each of `k` and `l` can take.
pub const KL_CARDINALITY: usize = (L_MAX - K_MIN + 1) as usize;

/// Index into a domain's topic table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TopicId(pub usize);

/// One notifier decision for one tick.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NotificationAction {
    /// Say nothing this tick.
    Null,
    /// Begin speaking an utterance. `k` is the word index (1-based, relative
    /// to utterance start) at which the instruction becomes actionable; `l`
    /// is the total word count. Requires `K_MIN <= k <= l <= L_MAX`.
    Notify { topic: TopicId, k: u32, l: u32 },
}

impl NotificationAction {
    pub fn notify(topic: TopicId, k: u32, l: u32) -> Self {
        NotificationAction::Notify { topic, k, l }
    }

    pub fn is_notify(&self) -> bool {
        matches!(self, NotificationAction::Notify { .. })
    }

    /// Checks the `k <= l` ordering and the `[K_MIN, L_MAX]` range, and that
    /// the topic exists in a table of `topic_count` entries.
    pub fn validate(&self, topic_count: usize) -> Result<()> {
        match *self {
            NotificationAction::Null => Ok(()),
            NotificationAction::Notify { topic, k, l } => {
                if topic.0 >= topic_count {
                    return Err(CoreError::InvalidAction(format!(
                        "topic index {} out of range (domain has {} topics)",
                        topic.0, topic_count
                    )));
                }
                if !(K_MIN <= k && k <= l && l <= L_MAX) {
                    return Err(CoreError::InvalidAction(format!(
                        "notification (k={k}, l={l}) violates {K_MIN} <= k <= l <= {L_MAX}"
                    )));
                }
                Ok(())
            }
        }
    }
}

impl std::fmt::Display for NotificationAction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            NotificationAction::Null => write!(f, "-"),
            NotificationAction::Notify { topic, k, l } => {
                write!(f, "notify(c={}, k={}, l={})", topic.0, k, l)
            }
        }
    }
}
