//! Evaluation harness: seeded episode batches, the experiment metrics,
//! robustness sweeps, and report emission.

pub mod demo;
pub mod report;
pub mod sweep;

use crate::action::NotificationAction;
use crate::domains::{Domain, DomainId, EpisodeStatus, RewardItem};
use crate::error::Result;
use crate::human::NotificationRecord;
use crate::policy::Notifier;
use crate::sim::Simulation;
use crate::taxonomy::TaxonomyDb;
use crate::time::WordTick;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Success,
    Failure,
    Timeout,
}

impl From<EpisodeStatus> for Outcome {
    fn from(s: EpisodeStatus) -> Self {
        match s {
            EpisodeStatus::Success => Outcome::Success,
            EpisodeStatus::Timeout => Outcome::Timeout,
            _ => Outcome::Failure,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TickRecord {
    pub t: WordTick,
    pub human_action: String,
    pub reacting: bool,
    pub notification: NotificationAction,
    pub reward_items: Vec<RewardItem>,
    pub reward: f64,
    pub position: (f64, f64),
}

/// Full record of one evaluated episode.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EpisodeLog {
    pub domain: DomainId,
    pub seed: u64,
    pub realized_reaction_delay: u32,
    pub ticks: Vec<TickRecord>,
    pub notifications: Vec<NotificationRecord>,
    pub outcome: Outcome,
    pub total_reward: f64,
    pub entered_danger: bool,
}

impl EpisodeLog {
    pub fn notify_count(&self) -> usize {
        self.notifications.len()
    }

    pub fn followed_through(&self) -> usize {
        self.notifications
            .iter()
            .filter(|n| n.followed_through())
            .count()
    }
}

/// Lets each domain report whether the episode crossed a hazard; only the
/// piloting domain has one.
pub trait DangerFlag {
    fn entered_danger(&self) -> bool {
        false
    }
}

impl DangerFlag for crate::domains::lander::Lander {
    fn entered_danger(&self) -> bool {
        crate::domains::lander::Lander::entered_danger(self)
    }
}

impl DangerFlag for crate::domains::highway::Highway {}
impl DangerFlag for crate::domains::kitchen::Kitchen {}

/// Runs one seeded episode under a notifier, optionally realizing actions
/// as utterances through the taxonomy (in which case the human reacts to
/// the retrieved record's true (k, l), not the requested ones).
pub fn run_episode<D: Domain + DangerFlag>(
    sim: &mut Simulation<D>,
    notifier: &mut dyn Notifier<D>,
    seed: u64,
    taxonomy: Option<&TaxonomyDb>,
) -> Result<EpisodeLog> {
    sim.reset(seed);
    notifier.reset(crate::derive_seed(seed, 0x707));
    let mut retrieval_rng = ChaCha8Rng::seed_from_u64(crate::derive_seed(seed, 0x7e7));
    let domain = sim.env().id();
    let mut ticks = Vec::new();
    let mut texts: Vec<(usize, String)> = Vec::new();
    while !sim.status().is_terminal() {
        let mut action = notifier.act(sim.window(), sim.env());
        if let (Some(db), NotificationAction::Notify { topic, k, l }) = (taxonomy, action) {
            let name = sim.env().topics().name(topic);
            let (record, _exact) = db.retrieve(domain, name, k, l, &mut retrieval_rng)?;
            action = NotificationAction::notify(topic, record.k, record.l);
            texts.push((sim.human().records().len(), record.text.clone()));
        }
        let result = sim.step(action)?;
        ticks.push(TickRecord {
            t: result.t,
            human_action: sim.env().action_name(result.human_action).to_string(),
            reacting: result.reacting,
            notification: action,
            reward_items: result.reward_items.clone(),
            reward: result.reward,
            position: sim.env().plot_point(),
        });
    }
    let mut notifications = sim.human_mut().take_records();
    for (idx, text) in texts {
        if let Some(r) = notifications.get_mut(idx) {
            r.text = Some(text);
        }
    }
    Ok(EpisodeLog {
        domain,
        seed,
        realized_reaction_delay: sim.human().realized_delay(),
        ticks,
        notifications,
        outcome: sim.status().into(),
        total_reward: sim.total_reward(),
        entered_danger: sim.env().entered_danger(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub mean: f64,
    pub std: f64,
}

impl Stat {
    pub fn over(values: &[f64]) -> Stat {
        if values.is_empty() {
            return Stat { mean: 0.0, std: 0.0 };
        }
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / values.len() as f64;
        Stat {
            mean,
            std: var.sqrt(),
        }
    }
}

/// Aggregated experiment metrics: rates per seed group, mean +/- std across
/// groups.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricsReport {
    pub label: String,
    pub success_rate: Stat,
    /// Mean notifications per tick.
    pub notification_frequency: Stat,
    /// Fraction of issued notifications the human comprehended and acted
    /// on; absent when no notifications were issued at all.
    pub follow_through_rate: Option<Stat>,
    /// Fraction of notifications with l >= 4.
    pub long_notification_rate: Option<Stat>,
    /// Piloting only: fraction of episodes that crossed a danger zone.
    pub enter_danger_rate: Option<Stat>,
    pub mean_return: Stat,
    pub episodes: usize,
    pub groups: usize,
}

/// Computes the metric set over logs grouped by training seed (one group
/// per distinct `group_of` value).
pub fn compute_metrics(
    label: &str,
    logs: &[EpisodeLog],
    group_of: impl Fn(&EpisodeLog) -> u64,
) -> MetricsReport {
    let mut groups: std::collections::BTreeMap<u64, Vec<&EpisodeLog>> = Default::default();
    for log in logs {
        groups.entry(group_of(log)).or_default().push(log);
    }
    let grouped: Vec<Vec<&EpisodeLog>> = groups.into_values().collect();
    compute_metrics_grouped(label, &grouped)
}

/// Same metrics over pre-grouped logs (one inner slice per seed group).
pub fn compute_metrics_grouped(label: &str, groups: &[Vec<&EpisodeLog>]) -> MetricsReport {
    let mut success = Vec::new();
    let mut freq = Vec::new();
    let mut follow = Vec::new();
    let mut long_rate = Vec::new();
    let mut danger = Vec::new();
    let mut returns = Vec::new();
    let mut any_notifications = false;
    for logs in groups {
        let n = logs.len() as f64;
        success.push(
            logs.iter().filter(|l| l.outcome == Outcome::Success).count() as f64 / n,
        );
        freq.push(
            logs.iter()
                .map(|l| l.notify_count() as f64 / l.ticks.len().max(1) as f64)
                .sum::<f64>()
                / n,
        );
        returns.push(logs.iter().map(|l| l.total_reward).sum::<f64>() / n);
        let issued: usize = logs.iter().map(|l| l.notify_count()).sum();
        if issued > 0 {
            any_notifications = true;
            let followed: usize = logs.iter().map(|l| l.followed_through()).sum();
            follow.push(followed as f64 / issued as f64);
            let long: usize = logs
                .iter()
                .flat_map(|l| &l.notifications)
                .filter(|r| r.l >= 4)
                .count();
            long_rate.push(long as f64 / issued as f64);
        }
        danger.push(logs.iter().filter(|l| l.entered_danger).count() as f64 / n);
    }
    let first = groups.iter().flat_map(|g| g.iter()).next();
    let piloting = first.map(|l| l.domain) == Some(DomainId::Piloting);
    MetricsReport {
        label: label.to_string(),
        success_rate: Stat::over(&success),
        notification_frequency: Stat::over(&freq),
        follow_through_rate: any_notifications.then(|| Stat::over(&follow)),
        long_notification_rate: any_notifications.then(|| Stat::over(&long_rate)),
        enter_danger_rate: piloting.then(|| Stat::over(&danger)),
        mean_return: Stat::over(&returns),
        episodes: groups.iter().map(Vec::len).sum(),
        groups: groups.len(),
    }
}
