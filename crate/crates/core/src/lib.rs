//! Simulation, training, and evaluation library for delay-aware language
//! notification policies.
//!
//! The crate models an assistive notifier that speaks to a human operator
//! under three timing constraints: conveyance (an utterance takes `l`
//! word-ticks to say), comprehension (the instruction becomes actionable
//! `k` words in), and the human's own reaction delay and follow-through.
//! A notifier policy is trained with PPO over an augmented state window,
//! utterances come from an offline taxonomy database, and the evaluation
//! harness runs the baseline and robustness experiment suites.

pub mod action;
pub mod augment;
pub mod config;
pub mod domains;
pub mod error;
pub mod eval;
pub mod human;
pub mod policy;
pub mod sim;
pub mod taxonomy;
#[cfg(test)]
pub(crate) mod testutil;
pub mod time;

pub use action::{NotificationAction, TopicId};
pub use augment::AugmentedState;
pub use error::CoreError;
pub use sim::{Simulation, TransitionResult};
pub use time::WordTick;

/// Derives a decorrelated child seed from a base seed and a stream tag.
///
/// SplitMix64 finalizer; used everywhere a component needs its own RNG
/// stream so that adding a consumer never shifts another's draws.
pub fn derive_seed(base: u64, stream: u64) -> u64 {
    let mut z = base.wrapping_add(0x9e3779b97f4a7c15u64.wrapping_mul(stream.wrapping_add(1)));
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}
