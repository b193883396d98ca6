//! The augmented state fed to the notifier policy: a fixed-length window of
//! the most recent (observation, previous notifier action) pairs.
//!
//! Keeping the recent action history in the state is what lets a memoryless
//! policy reason about in-flight utterances and decision-to-effect delays.

use crate::action::{NotificationAction, L_MAX};
use crate::error::{CoreError, Result};
use std::collections::VecDeque;

/// Fixed-width encoding of a [`NotificationAction`]: one-hot over
/// {Null} ∪ topics, then `k` and `l` normalized by `L_MAX`.
pub fn encode_action(a: &NotificationAction, topic_count: usize, out: &mut [f64]) {
    debug_assert_eq!(out.len(), encoded_action_dim(topic_count));
    out.fill(0.0);
    match *a {
        NotificationAction::Null => out[0] = 1.0,
        NotificationAction::Notify { topic, k, l } => {
            out[1 + topic.0] = 1.0;
            out[1 + topic_count] = k as f64 / L_MAX as f64;
            out[1 + topic_count + 1] = l as f64 / L_MAX as f64;
        }
    }
}

pub fn encoded_action_dim(topic_count: usize) -> usize {
    1 + topic_count + 2
}

/// Window of the last `n` (observation, previous action) pairs.
///
/// The window always holds exactly `n` entries: at episode start the older
/// `n - 1` slots are zero observations paired with the Null action, and each
/// push evicts the oldest entry.
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedState {
    n: usize,
    obs_dim: usize,
    topic_count: usize,
    entries: VecDeque<(Vec<f64>, NotificationAction)>,
}

impl AugmentedState {
    /// Builds the episode-start window: `n - 1` zero-padding entries followed
    /// by `(obs0, Null)` as the newest entry.
    pub fn initial(obs0: Vec<f64>, n: usize, topic_count: usize) -> Result<Self> {
        if n == 0 {
            return Err(CoreError::Config(
                "history window length n must be >= 1".into(),
            ));
        }
        let obs_dim = obs0.len();
        let mut entries = VecDeque::with_capacity(n);
        for _ in 0..n - 1 {
            entries.push_back((vec![0.0; obs_dim], NotificationAction::Null));
        }
        entries.push_back((obs0, NotificationAction::Null));
        Ok(AugmentedState {
            n,
            obs_dim,
            topic_count,
            entries,
        })
    }

    /// Appends the newest pair, evicting the oldest (FIFO).
    pub fn push(&mut self, obs: Vec<f64>, action: NotificationAction) {
        debug_assert_eq!(obs.len(), self.obs_dim);
        self.entries.pop_front();
        self.entries.push_back((obs, action));
        debug_assert_eq!(self.entries.len(), self.n);
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn window(&self) -> impl Iterator<Item = &(Vec<f64>, NotificationAction)> {
        self.entries.iter()
    }

    /// Newest observation in the window.
    pub fn current_obs(&self) -> &[f64] {
        &self.entries.back().expect("window is never empty").0
    }

    pub fn feature_dim(&self) -> usize {
        self.n * (self.obs_dim + encoded_action_dim(self.topic_count))
    }

    /// Flattens the window, oldest entry first, into the policy input vector.
    pub fn features(&self) -> Vec<f64> {
        let act_dim = encoded_action_dim(self.topic_count);
        let mut out = Vec::with_capacity(self.feature_dim());
        let mut enc = vec![0.0; act_dim];
        for (obs, act) in &self.entries {
            out.extend_from_slice(obs);
            encode_action(act, self.topic_count, &mut enc);
            out.extend_from_slice(&enc);
        }
        out
    }
}
