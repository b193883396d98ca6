use super::*;
use crate::action::NotificationAction;
use crate::testutil::{IdleBase, ToyDomain};
use proptest::prelude::*;
use rand::SeedableRng;

fn utterance(topic: usize, k: u32, l: u32, start: u32) -> ActiveUtterance {
    ActiveUtterance::begin(TopicId(topic), k, l, WordTick(start))
}

#[test]
fn informativeness_is_alpha_times_length() {
    let unit = InformativenessConfig::default();
    assert_eq!(informativeness(&utterance(0, 2, 5, 0), &unit), 5.0);
    assert_eq!(informativeness(&utterance(0, 2, 2, 0), &unit), 2.0);
    let doubled = InformativenessConfig {
        alpha: 2.0,
        beta: 0.0,
    };
    assert_eq!(informativeness(&utterance(0, 3, 3, 0), &doubled), 6.0);
}

#[test]
fn follow_through_maps_match_domain_formulas() {
    assert_eq!(follow_through(5.0, DfMap::LinearIdentity), 5);
    assert_eq!(follow_through(5.0, DfMap::Affine2lMinus2), 8);
    assert_eq!(follow_through(2.0, DfMap::Constant3), 3);
}

#[test]
fn follow_through_clamps_negative_results_to_zero() {
    // 2*0.5 - 2 = -1
    assert_eq!(follow_through(0.5, DfMap::Affine2lMinus2), 0);
}

#[test]
fn react_returns_instructed_action_inside_window() {
    // k=2, l=5, start=0, d_r=2, d_f=3: comprehension at t=2, window Δt in [2,5].
    let u = utterance(1, 2, 5, 0);
    let f = |c: TopicId| (c.0 + 10) as u8;
    assert_eq!(react(0u8, Some(&u), 2, 3, WordTick(4), f), 11); // Δt=2
    assert_eq!(react(0u8, Some(&u), 2, 3, WordTick(1), f), 0); // pre-comprehension
    assert_eq!(react(0u8, Some(&u), 2, 3, WordTick(8), f), 0); // Δt=6 > 5
}

#[test]
fn react_window_boundaries_are_inclusive() {
    let u = utterance(0, 2, 5, 0);
    let f = |_: TopicId| 1u8;
    // Comprehension at t=2; d_r=2, d_f=3 -> f(c) exactly for t in [4, 7].
    for t in 0..12 {
        let expect = (4..=7).contains(&t);
        assert_eq!(react(0u8, Some(&u), 2, 3, WordTick(t), f) == 1, expect, "t={t}");
    }
}

#[test]
fn truncated_before_k_never_comprehends() {
    let mut u = utterance(0, 4, 5, 0);
    u.truncated_at = Some(WordTick(2)); // only 2 of 4 needed words delivered
    assert!(!u.comprehensible());
    let f = |_: TopicId| 1u8;
    for t in 0..20 {
        assert_eq!(react(0u8, Some(&u), 0, 10, WordTick(t), f), 0);
    }
}

#[test]
fn truncated_at_or_after_k_still_comprehends() {
    let mut u = utterance(0, 2, 5, 0);
    u.truncated_at = Some(WordTick(2)); // exactly k words out
    assert!(u.comprehensible());
    assert!(u.comprehended_by(WordTick(2)));
    assert!(!u.delivered_fully());
}

#[test]
fn sample_fixed_delay() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    assert_eq!(
        sample_reaction_delay(&ReactionDelayDist::fixed(2), &mut rng),
        2
    );
}

#[test]
fn sample_gaussian_delay_rounds_and_clamps() {
    // Monte-Carlo check of rounding+clamping: mean over 1e5 draws of
    // round(N(2, 0.5)) clamped at 0 stays within 2 +/- 0.02.
    let mut rng = ChaCha8Rng::seed_from_u64(123);
    let dist = ReactionDelayDist::gaussian(2.0, 0.5);
    let n = 100_000;
    let mut sum = 0u64;
    for _ in 0..n {
        sum += sample_reaction_delay(&dist, &mut rng) as u64;
    }
    let mean = sum as f64 / n as f64;
    assert!((mean - 2.0).abs() < 0.02, "mean={mean}");
}

#[test]
fn sample_gaussian_degenerate_sigma() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    assert_eq!(
        sample_reaction_delay(&ReactionDelayDist::gaussian(2.0, 0.0), &mut rng),
        2
    );
}

fn human(params: ReactionParams) -> ReactiveHuman<ToyDomain> {
    let mut h = ReactiveHuman::new(Box::new(IdleBase), params);
    h.reset(0);
    h
}

fn fixed_params(d_r: u32) -> ReactionParams {
    ReactionParams::new(ReactionDelayDist::fixed(d_r), DfMap::LinearIdentity)
}

#[test]
fn receive_into_empty_slot_starts_at_now() {
    let mut h = human(fixed_params(2));
    let ev = h.receive(
        &NotificationAction::notify(TopicId(0), 2, 5),
        "go_a",
        WordTick(3),
    );
    assert_eq!(ev.truncated, None);
    assert_eq!(h.records()[0].start, WordTick(3));
}

#[test]
fn preemption_before_k_cancels_comprehension() {
    // Utterance with k=4 preempted at t=2: never comprehended, logged as
    // delivered-but-not-followed.
    let env = ToyDomain::default();
    let mut h = human(fixed_params(0));
    h.receive(
        &NotificationAction::notify(TopicId(0), 4, 5),
        "go_a",
        WordTick(0),
    );
    for t in 1..=1 {
        h.begin_tick(WordTick(t));
    }
    let ev = h.receive(
        &NotificationAction::notify(TopicId(1), 2, 2),
        "go_b",
        WordTick(2),
    );
    assert_eq!(ev.truncated, Some(0));
    // Run the episode out; the first utterance must contribute zero
    // reaction ticks.
    for t in 2..20 {
        h.begin_tick(WordTick(t));
        h.act(&env, WordTick(t));
    }
    let first = &h.records()[0];
    assert_eq!(first.comprehended_at, None);
    assert_eq!(first.reaction_ticks, 0);
    assert!(!first.followed_through());
    // The second utterance took over normally.
    assert!(h.records()[1].followed_through());
}

#[test]
fn running_follow_through_is_cancelled_at_new_comprehension_only() {
    // First utterance comprehended at t=2 (k=2), d_r=0, d_f=5: window [2,7].
    // Second issued at t=3 with k=2 comprehends at t=5; from then on the
    // reaction follows the new topic.
    let env = ToyDomain::default();
    let mut h = human(fixed_params(0));
    let mut actions = Vec::new();
    for t in 0..10 {
        h.begin_tick(WordTick(t));
        if t == 0 {
            h.receive(
                &NotificationAction::notify(TopicId(0), 2, 5),
                "go_a",
                WordTick(t),
            );
        }
        if t == 3 {
            h.receive(
                &NotificationAction::notify(TopicId(1), 2, 5),
                "go_b",
                WordTick(t),
            );
        }
        actions.push(h.act(&env, WordTick(t)).0);
    }
    // t=0,1: base; t=2..4: f(go_a)=1; t=5..: f(go_b)=2 (new window).
    assert_eq!(actions[..2], [0, 0]);
    assert_eq!(actions[2..5], [1, 1, 1]);
    assert_eq!(actions[5..10], [2, 2, 2, 2, 2]);
}

#[test]
fn base_policy_isolation_without_notifications() {
    // With no utterances ever, the trajectory equals the base policy's.
    let env = ToyDomain::default();
    let mut h = human(fixed_params(2));
    for t in 0..50 {
        h.begin_tick(WordTick(t));
        let (a, reacting) = h.act(&env, WordTick(t));
        assert_eq!(a, 0);
        assert!(!reacting);
    }
    assert!(h.records().is_empty());
}

#[test]
fn delay_free_override_comprehends_at_issue_tick() {
    let env = ToyDomain::default();
    let mut params = fixed_params(0);
    params.comprehension_override = Some(0);
    let mut h = human(params);
    h.begin_tick(WordTick(0));
    let ev = h.receive(
        &NotificationAction::notify(TopicId(0), 3, 4),
        "go_a",
        WordTick(0),
    );
    assert!(ev.comprehension.is_some());
    let (a, reacting) = h.act(&env, WordTick(0));
    assert_eq!(a, 1);
    assert!(reacting);
}

#[test]
fn completion_event_fires_once_on_full_delivery() {
    let mut h = human(fixed_params(0));
    h.receive(
        &NotificationAction::notify(TopicId(0), 2, 3),
        "go_a",
        WordTick(0),
    );
    let mut completions = 0;
    for t in 1..8 {
        let ev = h.begin_tick(WordTick(t));
        if let Some(c) = ev.completion {
            completions += 1;
            assert_eq!(t, 3);
            assert_eq!(c.l, 3);
        }
    }
    assert_eq!(completions, 1);
}

#[test]
fn truncated_utterance_never_completes() {
    let mut h = human(fixed_params(0));
    h.receive(
        &NotificationAction::notify(TopicId(0), 2, 5),
        "go_a",
        WordTick(0),
    );
    h.begin_tick(WordTick(1));
    h.receive(
        &NotificationAction::notify(TopicId(1), 2, 2),
        "go_b",
        WordTick(1),
    );
    for t in 2..10 {
        let ev = h.begin_tick(WordTick(t));
        if let Some(c) = ev.completion {
            assert_eq!(c.record_idx, 1, "only the preempting utterance completes");
        }
    }
}

proptest! {
    // Window exactness on a grid is also covered by the acceptance suite;
    // here it runs as a property over arbitrary in-range triples.
    #[test]
    fn reaction_window_matches_case_split(d_r in 0u32..=10, d_f in 0u32..=10, dt in 0u32..=25) {
        let u = utterance(0, 2, 5, 0);
        let t_now = WordTick(u.comprehension_tick().0 + dt);
        let picked = react(0u8, Some(&u), d_r, d_f, t_now, |_| 1u8);
        let expect = d_r <= dt && dt <= d_r + d_f;
        prop_assert_eq!(picked == 1, expect);
    }

    #[test]
    fn informativeness_and_linear_maps_monotone_in_length(l1 in 2u32..=5, l2 in 2u32..=5) {
        prop_assume!(l1 <= l2);
        let cfg = InformativenessConfig::default();
        let i1 = informativeness_of_length(l1, &cfg);
        let i2 = informativeness_of_length(l2, &cfg);
        prop_assert!(i1 <= i2);
        for map in [DfMap::LinearIdentity, DfMap::Affine2lMinus2] {
            prop_assert!(follow_through(i1, map) <= follow_through(i2, map));
        }
    }

    #[test]
    fn preempted_before_k_contributes_zero_reaction_ticks(
        k in 2u32..=5,
        preempt_at in 1u32..=4,
        d_r in 0u32..=3,
    ) {
        prop_assume!(preempt_at < k);
        let env = ToyDomain::default();
        let mut h = human(fixed_params(d_r));
        for t in 0..30u32 {
            h.begin_tick(WordTick(t));
            if t == 0 {
                h.receive(&NotificationAction::notify(TopicId(0), k, 5), "go_a", WordTick(t));
            }
            if t == preempt_at {
                h.receive(&NotificationAction::notify(TopicId(1), 2, 2), "go_b", WordTick(t));
            }
            h.act(&env, WordTick(t));
        }
        prop_assert_eq!(h.records()[0].reaction_ticks, 0);
        prop_assert_eq!(h.records()[0].comprehended_at, None);
    }
}
