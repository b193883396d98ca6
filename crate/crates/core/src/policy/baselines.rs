//! Scripted baseline notifiers.

use super::Notifier;
use crate::action::{NotificationAction, K_MIN};
use crate::augment::AugmentedState;
use crate::domains::lander::{Lander, LanderState};
use crate::domains::Domain;
use crate::time::WordTick;

/// Threshold-triggered notifier for the piloting domain: once the lander
/// comes within `threshold` of any danger zone, it issues the topic steering
/// toward the next waypoint on a precomputed safe path. It never preempts
/// its own in-flight utterance.
pub struct HeuristicNotifier {
    pub threshold: f64,
    /// Safe path vertices toward the pad, visited top to bottom.
    pub waypoints: Vec<(f64, f64)>,
    busy_until: u32,
    tick: u32,
}

impl HeuristicNotifier {
    pub fn new(threshold: f64) -> Self {
        HeuristicNotifier {
            threshold,
            // Right of the top-left zone, then left of the overhead zone,
            // then the pad.
            waypoints: vec![(-0.25, 1.0), (-0.10, 0.5), (0.0, 0.0)],
            busy_until: 0,
            tick: 0,
        }
    }

    /// Steering topic toward the first waypoint below the lander's progress.
    pub fn steer(&self, s: &LanderState) -> &'static str {
        let target = self
            .waypoints
            .iter()
            .find(|(_, wy)| *wy < s.y)
            .unwrap_or(self.waypoints.last().expect("waypoints non-empty"));
        let dx = target.0 - s.x;
        if dx > 0.06 {
            "shift_right"
        } else if dx < -0.06 {
            "shift_left"
        } else if s.vy < -0.035 {
            "ascend"
        } else {
            "descend"
        }
    }
}

impl Notifier<Lander> for HeuristicNotifier {
    fn reset(&mut self, _seed: u64) {
        self.busy_until = 0;
        self.tick = 0;
    }

    fn act(&mut self, _window: &AugmentedState, env: &Lander) -> NotificationAction {
        let t = self.tick;
        self.tick += 1;
        if t < self.busy_until {
            return NotificationAction::Null;
        }
        let s = env.state();
        if env.cfg.zones.min_distance(s.x, s.y) >= self.threshold {
            return NotificationAction::Null;
        }
        let topic = self.steer(s);
        let id = env.topics().id_of(topic).expect("lander topic");
        self.busy_until = t + K_MIN;
        NotificationAction::notify(id, K_MIN, K_MIN)
    }

    fn name(&self) -> &'static str {
        "heuristic"
    }
}

/// Replays a fixed schedule of (tick, action) pairs; test and demo helper.
pub struct ScriptedNotifier {
    schedule: Vec<(WordTick, NotificationAction)>,
    tick: u32,
}

impl ScriptedNotifier {
    pub fn new(schedule: Vec<(WordTick, NotificationAction)>) -> Self {
        ScriptedNotifier { schedule, tick: 0 }
    }
}

impl<D: Domain> Notifier<D> for ScriptedNotifier {
    fn reset(&mut self, _seed: u64) {
        self.tick = 0;
    }

    fn act(&mut self, _window: &AugmentedState, _env: &D) -> NotificationAction {
        let t = WordTick(self.tick);
        self.tick += 1;
        self.schedule
            .iter()
            .find(|(at, _)| *at == t)
            .map(|(_, a)| *a)
            .unwrap_or(NotificationAction::Null)
    }

    fn name(&self) -> &'static str {
        "scripted"
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domains::lander::LanderConfig;

    #[test]
    fn far_from_zones_stays_silent() {
        let mut env = Lander::new(LanderConfig::calm());
        env.reset(0);
        let mut h = HeuristicNotifier::new(0.15);
        let window = AugmentedState::initial(env.observation(), 1, 4).unwrap();
        assert_eq!(h.act(&window, &env), NotificationAction::Null);
    }

    #[test]
    fn infinite_threshold_notifies_immediately() {
        let mut env = Lander::new(LanderConfig::calm());
        env.reset(0);
        let mut h = HeuristicNotifier::new(f64::INFINITY);
        let window = AugmentedState::initial(env.observation(), 1, 4).unwrap();
        assert!(h.act(&window, &env).is_notify());
    }

    #[test]
    fn steers_right_when_approaching_top_left_zone_from_its_right() {
        // Above the waypoint line, left of the first waypoint: the safe path
        // wants the pilot pushed right, away from the top-left zone.
        let h = HeuristicNotifier::new(0.15);
        let s = LanderState {
            x: -0.45,
            y: 1.05,
            vy: -0.03,
            ..Default::default()
        };
        assert_eq!(h.steer(&s), "shift_right");
    }

    #[test]
    fn never_preempts_its_own_utterance() {
        let mut env = Lander::new(LanderConfig::calm());
        env.reset(0);
        let mut h = HeuristicNotifier::new(f64::INFINITY);
        let window = AugmentedState::initial(env.observation(), 1, 4).unwrap();
        let first = h.act(&window, &env);
        assert!(first.is_notify());
        assert_eq!(h.act(&window, &env), NotificationAction::Null);
    }
}
