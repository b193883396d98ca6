//! The simulation time model: one tick per spoken word.

use serde::{Deserialize, Serialize};

/// Nominal wall-clock duration of one word-tick, in seconds.
pub const SECONDS_PER_WORD: f64 = 0.3;

/// A point in simulated time, counted in spoken words since episode start.
///
/// Every latency in the system (comprehension `k`, conveyance `l`, reaction
/// delay `d_r`, follow-through `d_f`) is an integer number of these ticks.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct WordTick(pub u32);

impl WordTick {
    pub const ZERO: WordTick = WordTick(0);

    pub fn next(self) -> WordTick {
        WordTick(self.0 + 1)
    }

    /// Ticks elapsed since `earlier`, or `None` if `earlier` is in the future.
    pub fn since(self, earlier: WordTick) -> Option<u32> {
        self.0.checked_sub(earlier.0)
    }

    pub fn plus(self, ticks: u32) -> WordTick {
        WordTick(self.0 + ticks)
    }
}

impl std::fmt::Display for WordTick {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "t={}", self.0)
    }
}
