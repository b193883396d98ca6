//! Incrementally-actionable notification demo in the kitchen: a single
//! "go down, stations occupied" style utterance moves the human on partial
//! comprehension and updates their mental model at full delivery.

use crate::action::NotificationAction;
use crate::domains::kitchen::{Kitchen, KitchenConfig, MyopicCook, StationKind};
use crate::domains::Domain;
use crate::error::{CoreError, Result};
use crate::human::{DfMap, ReactionDelayDist, ReactionParams, ReactiveHuman};
use crate::sim::Simulation;
use crate::taxonomy::TaxonomyDb;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::fmt::Write as _;

pub struct DemoReport {
    pub timeline: String,
    /// Tick at which movement switched to the instructed direction, if any.
    pub moved_down_at: Option<u32>,
    /// Tick at which every station belief became known, if any.
    pub beliefs_complete_at: Option<u32>,
    pub utterance: Option<String>,
}

/// Runs the scripted pre-occupied scenario. The notifier issues the
/// disclosure utterance (k=2, l=5) at t=0; with `preempt_at` set, a second
/// short notification truncates it at that tick.
///
/// Without preemption, the human must start moving down at t = k + d_r and
/// know every station's state at t = l; with preemption before k, neither
/// may happen. Violations are reported as errors.
pub fn demo_incremental(
    taxonomy: Option<&TaxonomyDb>,
    d_r: u32,
    preempt_at: Option<u32>,
) -> Result<DemoReport> {
    let (k, l) = (2u32, 5u32);
    let env = Kitchen::new(KitchenConfig::preoccupied());
    let down = env.topics().id_of("move_down").expect("topic exists");
    let up = env.topics().id_of("move_up").expect("topic exists");
    let params = ReactionParams::new(ReactionDelayDist::fixed(d_r), DfMap::LinearIdentity);
    let human = ReactiveHuman::new(Box::new(MyopicCook::default()), params);
    let mut sim = Simulation::new(env, human, 4)?;
    sim.reset(20_260_105);

    let mut retrieval_rng = ChaCha8Rng::seed_from_u64(7);
    let mut utterance = None;
    let all_known = |env: &Kitchen| {
        [StationKind::Grill, StationKind::Board, StationKind::Sink]
            .iter()
            .all(|kind| env.state().belief(*kind).known)
    };

    let mut timeline = String::new();
    writeln!(
        timeline,
        "scenario: stations pre-occupied; utterance (k={k}, l={l}) at t=0{}",
        preempt_at
            .map(|t| format!(", preempted at t={t}"))
            .unwrap_or_default()
    )
    .unwrap();

    let mut moved_down_at = None;
    let mut beliefs_complete_at = None;
    for t in 0..9u32 {
        if sim.status().is_terminal() {
            break;
        }
        let mut a_g = if t == 0 {
            NotificationAction::notify(down, k, l)
        } else if preempt_at == Some(t) {
            NotificationAction::notify(up, 2, 2)
        } else {
            NotificationAction::Null
        };
        if let (Some(db), NotificationAction::Notify { topic, k, l }) = (taxonomy, a_g) {
            let name = sim.env().topics().name(topic);
            // Prefer the canonical disclosure wording when the cell has it;
            // fall back to ordinary retrieval otherwise.
            let cell = db.cell(sim.env().id(), name, k, l);
            let record = match cell.iter().find(|r| r.text == "Go down, all stations occupied.") {
                Some(r) => *r,
                None => db.retrieve(sim.env().id(), name, k, l, &mut retrieval_rng)?.0,
            };
            a_g = NotificationAction::notify(topic, record.k, record.l);
            if t == 0 {
                utterance = Some(record.text.clone());
                writeln!(timeline, "utterance: \"{}\"", record.text).unwrap();
            }
        }
        let result = sim.step(a_g)?;
        if moved_down_at.is_none()
            && result.reacting
            && sim.env().action_name(result.human_action) == "down"
        {
            moved_down_at = Some(t);
        }
        if beliefs_complete_at.is_none() && all_known(sim.env()) {
            beliefs_complete_at = Some(t);
        }
        if t < 12 {
            writeln!(
                timeline,
                "t={t:2} | human {:5} {:10} | beliefs {}",
                sim.env().action_name(result.human_action),
                if result.reacting { "(reacting)" } else { "" },
                if all_known(sim.env()) { "complete" } else { "partial" }
            )
            .unwrap();
        }
    }
    if let Some(t) = moved_down_at {
        writeln!(timeline, "downward movement began at t={t}").unwrap();
    }
    if let Some(t) = beliefs_complete_at {
        writeln!(timeline, "mental model complete at t={t}").unwrap();
    }

    match preempt_at {
        None => {
            if moved_down_at != Some(k + d_r) {
                return Err(CoreError::Validation(format!(
                    "demo failure: movement change at {moved_down_at:?}, expected t={}",
                    k + d_r
                )));
            }
            if beliefs_complete_at != Some(l) {
                return Err(CoreError::Validation(format!(
                    "demo failure: belief update at {beliefs_complete_at:?}, expected t={l}"
                )));
            }
        }
        Some(_) => {
            if moved_down_at.is_some() {
                return Err(CoreError::Validation(
                    "demo failure: preempted utterance still moved the human".into(),
                ));
            }
            if beliefs_complete_at.is_some() {
                return Err(CoreError::Validation(
                    "demo failure: preempted utterance still disclosed state".into(),
                ));
            }
        }
    }

    Ok(DemoReport {
        timeline,
        moved_down_at,
        beliefs_complete_at,
        utterance,
    })
}
