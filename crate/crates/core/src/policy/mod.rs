//! The timing-and-intent network, its PPO trainer, and baseline notifiers.
//!
//! The actor is a shared tanh backbone with four categorical heads —
//! initiate {no, yes}, topic, comprehension time `k`, and length `l` — and a
//! separate critic network of the same shape. Null actions gate the
//! topic/k/l heads out of the joint log-probability.

pub mod baselines;
pub mod checkpoint;
pub mod net;
pub mod normalize;
pub mod ppo;
pub mod recurrent;

use crate::action::{NotificationAction, TopicId, KL_CARDINALITY, K_MIN};
use crate::augment::AugmentedState;
use crate::domains::Domain;
use crate::human::{ReactionDelayDist, ReactionParams};
use net::{entropy, log_softmax, sample_from_logps, MultiHeadNet, NetSpec};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub const HEAD_COUNT: usize = 4;
pub const HEAD_INITIATE: usize = 0;
pub const HEAD_TOPIC: usize = 1;
pub const HEAD_K: usize = 2;
pub const HEAD_L: usize = 3;

/// Training assumption and action-space bound combinations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NotifierMode {
    /// Trains against a human who comprehends instantly (k = 0, d_r = 0).
    DelayFree,
    /// Trains against true conveyance but an instant reaction (d_r = 0).
    ConveyOnly,
    /// Trains against the full reactive human.
    ConveyReact,
    /// Action space restricted to minimal utterances (k = l = K_MIN).
    TopicOnly,
    /// Comprehension only at full delivery (k forced to l).
    CompleteUtterance,
    /// Partial comprehension allowed (k <= l); same as ConveyReact training.
    Incremental,
}

impl NotifierMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            NotifierMode::DelayFree => "delay_free",
            NotifierMode::ConveyOnly => "convey_only",
            NotifierMode::ConveyReact => "convey_react",
            NotifierMode::TopicOnly => "topic_only",
            NotifierMode::CompleteUtterance => "complete_utterance",
            NotifierMode::Incremental => "incremental",
        }
    }

    /// Reaction parameters of the human this mode trains against, derived
    /// from the evaluation-time parameters.
    pub fn training_human(&self, eval: &ReactionParams) -> ReactionParams {
        let mut p = eval.clone();
        match self {
            NotifierMode::DelayFree => {
                p.comprehension_override = Some(0);
                p.delay = ReactionDelayDist::fixed(0);
            }
            NotifierMode::ConveyOnly => {
                p.delay = ReactionDelayDist::fixed(0);
            }
            _ => {}
        }
        p
    }

    /// Which heads are sampled when a notification is initiated.
    fn samples_k(&self) -> bool {
        !matches!(
            self,
            NotifierMode::TopicOnly | NotifierMode::CompleteUtterance
        )
    }

    fn samples_l(&self) -> bool {
        !matches!(self, NotifierMode::TopicOnly)
    }

    /// Heads whose entropies enter the PPO bonus for this mode.
    pub fn entropy_mask(&self) -> [bool; HEAD_COUNT] {
        [true, true, self.samples_k(), self.samples_l()]
    }
}

/// Actor + critic pair.
#[derive(Debug, Clone)]
pub struct PolicyNetwork {
    pub actor: MultiHeadNet,
    pub critic: MultiHeadNet,
}

impl PolicyNetwork {
    /// Standard architecture: two 64-unit tanh layers, four categorical
    /// heads at small gain, critic with a unit-gain scalar head.
    pub fn new(input_dim: usize, topic_count: usize, rng: &mut ChaCha8Rng) -> Self {
        let heads = vec![2, topic_count, KL_CARDINALITY, KL_CARDINALITY];
        let gains = vec![0.01; HEAD_COUNT];
        let mut actor =
            MultiHeadNet::new(NetSpec::new(input_dim, vec![64, 64], heads), &gains, rng);
        // Start mostly silent: notifications are rare events, and a chatty
        // initial policy preempts its own utterances before anything is
        // comprehended, starving the other heads of learning signal.
        let bias = actor.head_bias_mut(HEAD_INITIATE);
        bias[0] = 2.2;
        let critic = MultiHeadNet::new(NetSpec::new(input_dim, vec![64, 64], vec![1]), &[1.0], rng);
        PolicyNetwork { actor, critic }
    }

    pub fn topic_count(&self) -> usize {
        self.actor.spec.heads[HEAD_TOPIC]
    }

    pub fn input_dim(&self) -> usize {
        self.actor.spec.input_dim
    }

    /// Head distributions (as log-probabilities) and the value estimate.
    pub fn forward(&self, x: &[f64]) -> (Vec<Vec<f64>>, f64) {
        let trace = self.actor.forward(x);
        let dists = trace.logits.iter().map(|l| log_softmax(l)).collect();
        let value = self.critic.forward(x).logits[0][0];
        (dists, value)
    }
}

/// One sampled decision with everything PPO needs to recompute its joint
/// log-probability later.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampledAction {
    /// Raw per-head sample indices (pre-clamp; unused heads hold 0).
    pub heads: [usize; HEAD_COUNT],
    /// Heads included in the joint log-probability (gated factorization:
    /// Null actions count only the initiate head).
    pub active: [bool; HEAD_COUNT],
    pub logp: f64,
    pub action: NotificationAction,
}

/// Samples a notification from head distributions under a mode's bounds.
/// `k <= l` is enforced by clamping the realized k, never the raw sample.
pub fn sample_action(
    dists: &[Vec<f64>],
    mode: NotifierMode,
    rng: &mut ChaCha8Rng,
) -> SampledAction {
    let mut heads = [0usize; HEAD_COUNT];
    let mut active = [false; HEAD_COUNT];
    heads[HEAD_INITIATE] = sample_from_logps(&dists[HEAD_INITIATE], rng);
    active[HEAD_INITIATE] = true;
    if heads[HEAD_INITIATE] == 0 {
        let logp = dists[HEAD_INITIATE][0];
        return SampledAction {
            heads,
            active,
            logp,
            action: NotificationAction::Null,
        };
    }
    heads[HEAD_TOPIC] = sample_from_logps(&dists[HEAD_TOPIC], rng);
    active[HEAD_TOPIC] = true;
    if mode.samples_k() {
        heads[HEAD_K] = sample_from_logps(&dists[HEAD_K], rng);
        active[HEAD_K] = true;
    }
    if mode.samples_l() {
        heads[HEAD_L] = sample_from_logps(&dists[HEAD_L], rng);
        active[HEAD_L] = true;
    }
    let l = if mode.samples_l() {
        K_MIN + heads[HEAD_L] as u32
    } else {
        K_MIN
    };
    let k = match mode {
        NotifierMode::TopicOnly => K_MIN,
        NotifierMode::CompleteUtterance => l,
        _ => (K_MIN + heads[HEAD_K] as u32).min(l),
    };
    let logp = joint_logp(dists, &heads, &active);
    SampledAction {
        heads,
        active,
        logp,
        action: NotificationAction::notify(TopicId(heads[HEAD_TOPIC]), k, l),
    }
}

/// Joint log-probability over the active heads.
pub fn joint_logp(dists: &[Vec<f64>], heads: &[usize; HEAD_COUNT], active: &[bool; HEAD_COUNT]) -> f64 {
    let mut lp = 0.0;
    for h in 0..HEAD_COUNT {
        if active[h] {
            lp += dists[h][heads[h]];
        }
    }
    lp
}

/// Entropy summed over the mode's heads.
pub fn mode_entropy(dists: &[Vec<f64>], mode: NotifierMode) -> f64 {
    let mask = mode.entropy_mask();
    dists
        .iter()
        .zip(mask)
        .filter(|(_, m)| *m)
        .map(|(d, _)| entropy(d))
        .sum()
}

/// Anything that can decide notifications for a domain.
pub trait Notifier<D: Domain> {
    fn reset(&mut self, _seed: u64) {}

    fn act(&mut self, window: &AugmentedState, env: &D) -> NotificationAction;

    fn name(&self) -> &'static str {
        "notifier"
    }
}

/// Always stays silent; the unassisted baseline.
pub struct NullNotifier;

impl<D: Domain> Notifier<D> for NullNotifier {
    fn act(&mut self, _window: &AugmentedState, _env: &D) -> NotificationAction {
        NotificationAction::Null
    }

    fn name(&self) -> &'static str {
        "null"
    }
}

/// Wraps a trained policy as a stochastic notifier.
pub struct PolicyNotifier {
    pub policy: PolicyNetwork,
    pub mode: NotifierMode,
    rng: ChaCha8Rng,
}

impl PolicyNotifier {
    pub fn new(policy: PolicyNetwork, mode: NotifierMode) -> Self {
        PolicyNotifier {
            policy,
            mode,
            rng: rand::SeedableRng::seed_from_u64(0),
        }
    }
}

impl<D: Domain> Notifier<D> for PolicyNotifier {
    fn reset(&mut self, seed: u64) {
        self.rng = rand::SeedableRng::seed_from_u64(seed);
    }

    fn act(&mut self, window: &AugmentedState, _env: &D) -> NotificationAction {
        let (dists, _) = self.policy.forward(&window.features());
        sample_action(&dists, self.mode, &mut self.rng).action
    }

    fn name(&self) -> &'static str {
        "policy"
    }
}
