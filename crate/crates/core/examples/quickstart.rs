//! Minimal tour: run one lander episode with a scripted notifier and print
//! what the human did with each notification.
//!
//! ```sh
//! cargo run -p headsup-core --example quickstart
//! ```

use headsup_core::action::NotificationAction;
use headsup_core::domains::lander::{Lander, LanderConfig, ScriptedPilot};
use headsup_core::domains::Domain;
use headsup_core::eval::run_episode;
use headsup_core::human::{DfMap, ReactionDelayDist, ReactionParams, ReactiveHuman};
use headsup_core::policy::baselines::ScriptedNotifier;
use headsup_core::sim::Simulation;
use headsup_core::time::WordTick;

fn main() {
    let env = Lander::new(LanderConfig::default());
    let shift_right = env.topics().id_of("shift_right").unwrap();
    let shift_left = env.topics().id_of("shift_left").unwrap();

    // A d_r = 2 human: comprehends k words in, reacts two ticks later,
    // follows through for d_f = l ticks.
    let human = ReactiveHuman::new(
        Box::new(ScriptedPilot),
        ReactionParams::new(ReactionDelayDist::fixed(2), DfMap::LinearIdentity),
    );
    let mut sim = Simulation::new(env, human, 4).unwrap();

    // Dodge the first hazard early, brake the drift later.
    let mut notifier = ScriptedNotifier::new(vec![
        (WordTick(3), NotificationAction::notify(shift_right, 2, 4)),
        (WordTick(20), NotificationAction::notify(shift_left, 2, 2)),
    ]);

    let log = run_episode(&mut sim, &mut notifier, 7, None).unwrap();
    println!(
        "outcome: {:?} after {} ticks (reward {:.1}, entered danger: {})",
        log.outcome,
        log.ticks.len(),
        log.total_reward,
        log.entered_danger,
    );
    for n in &log.notifications {
        println!(
            "  notify {} (k={}, l={}) at {}: comprehended {:?}, reacted for {} ticks",
            n.topic_name, n.k, n.l, n.start, n.comprehended_at, n.reaction_ticks
        );
    }
}
