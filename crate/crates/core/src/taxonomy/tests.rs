use super::scorer::{StubScorer, ScorerClient};
use super::*;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn actionable_index_finds_first_threshold_crossing() {
    // the main-text sample progression
    let p = [5.0, 20.0, 80.0, 80.0, 100.0];
    assert_eq!(actionable_index(&p, 80.0).unwrap(), 3);
}

#[test]
fn actionable_index_immediate_comprehension() {
    assert_eq!(actionable_index(&[100.0], 80.0).unwrap(), 1);
}

#[test]
fn actionable_index_falls_back_to_final_word() {
    let p = [5.0, 50.0, 50.0, 50.0, 70.0, 70.0, 70.0];
    assert_eq!(actionable_index(&p, 80.0).unwrap(), 7);
}

#[test]
fn actionable_index_rejects_empty_progression() {
    assert!(actionable_index(&[], 80.0).is_err());
}

fn build_default() -> (TaxonomyDb, BuildSummary) {
    let cfg = BuildConfig {
        seed: 7,
        ..BuildConfig::default()
    };
    let mut scorer = StubScorer::new(cfg.seed);
    build_taxonomy(&cfg, &mut scorer).unwrap()
}

#[test]
fn build_places_exemplars_in_their_cells() {
    let (db, _) = build_default();
    let cell = db.cell(DomainId::Piloting, "shift_left", 2, 2);
    assert!(
        cell.iter().any(|r| r.text == "Shift left."),
        "cell (2,2): {:?}",
        cell.iter().map(|r| &r.text).collect::<Vec<_>>()
    );
    let cell = db.cell(DomainId::Piloting, "ascend", 5, 5);
    assert!(cell
        .iter()
        .any(|r| r.text == "Avoid top-left danger zone, ascend."));
    let cell = db.cell(DomainId::Driving, "slow_down", 2, 5);
    assert!(cell
        .iter()
        .any(|r| r.text == "Slow down for incoming traffic."));
    let cell = db.cell(DomainId::Driving, "merge_right", 5, 5);
    assert!(cell.iter().any(|r| r.text == "Merge to the right lane."));
    let cell = db.cell(DomainId::Cooking, "move_down", 2, 2);
    assert!(cell.iter().any(|r| r.text == "Go down."));
    let cell = db.cell(DomainId::Cooking, "move_right", 5, 5);
    assert!(cell.iter().any(|r| r.text == "Chopping board full, go right."));
    // the incremental-demo utterance
    let cell = db.cell(DomainId::Cooking, "move_down", 2, 5);
    assert!(cell
        .iter()
        .any(|r| r.text == "Go down, all stations occupied."));
}

#[test]
fn build_invariants_hold_for_every_record() {
    let (db, summary) = build_default();
    db.validate().unwrap();
    assert!(summary.records > 100, "records: {}", summary.records);
    for r in db.records() {
        assert_eq!(
            r.k,
            actionable_index(&r.progression, COMPREHENSION_THRESHOLD).unwrap()
        );
        assert_eq!(r.l as usize, r.words.len());
        assert!(r.progression.iter().all(|p| (0.0..=100.0).contains(p)));
    }
}

#[test]
fn build_is_byte_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let (db1, _) = build_default();
    let (db2, _) = build_default();
    let p1 = dir.path().join("a.jsonl");
    let p2 = dir.path().join("b.jsonl");
    db1.save_jsonl(&p1).unwrap();
    db2.save_jsonl(&p2).unwrap();
    let b1 = std::fs::read(&p1).unwrap();
    let b2 = std::fs::read(&p2).unwrap();
    assert!(!b1.is_empty());
    assert_eq!(b1, b2);
}

#[test]
fn db_roundtrip_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let (db, _) = build_default();
    let p1 = dir.path().join("a.jsonl");
    db.save_jsonl(&p1).unwrap();
    let loaded = TaxonomyDb::load_jsonl(&p1).unwrap();
    let p2 = dir.path().join("b.jsonl");
    loaded.save_jsonl(&p2).unwrap();
    assert_eq!(std::fs::read(&p1).unwrap(), std::fs::read(&p2).unwrap());
}

#[test]
fn underfilled_cells_are_reported_not_fatal() {
    let (_, summary) = build_default();
    // merge topics cannot reach every (k, l) combination with the stub
    // lexicon; those cells are retained as-is and reported.
    assert!(summary.cells_total > 0);
    for (_, _, k, l, n) in &summary.cells_underfilled {
        assert!(k <= l);
        assert!(*n < DEFAULT_CELL_QUOTA);
    }
}

#[test]
fn retrieve_exact_cell_prefers_exact_records() {
    let (db, _) = build_default();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (rec, exact) = db
        .retrieve(DomainId::Driving, "slow_down", 2, 5, &mut rng)
        .unwrap();
    assert!(exact);
    assert_eq!((rec.k, rec.l), (2, 5));
}

#[test]
fn retrieve_singleton_cell_is_deterministic() {
    let records = vec![record(DomainId::Piloting, "ascend", "Climb higher.", 2, 2)];
    let db = TaxonomyDb::from_records(records);
    for seed in 0..5 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (r, exact) = db
            .retrieve(DomainId::Piloting, "ascend", 2, 2, &mut rng)
            .unwrap();
        assert!(exact);
        assert_eq!(r.text, "Climb higher.");
    }
}

fn record(domain: DomainId, topic: &str, text: &str, k: u32, l: u32) -> UtteranceRecord {
    let words = super::scorer::tokenize(text);
    let mut progression: Vec<f64> = (0..l).map(|i| 40.0 + i as f64).collect();
    for v in progression.iter_mut().skip(k as usize - 1) {
        *v = 90.0;
    }
    UtteranceRecord {
        domain,
        topic: topic.into(),
        text: text.into(),
        words,
        progression,
        k,
        l,
        scorer_id: "test".into(),
        seed: 0,
    }
}

#[test]
fn retrieve_fallback_prefers_smaller_k_on_tie() {
    // only cells (2,4) and (3,5) exist; request (3,4) is distance 1 from
    // both; k' <= k wins, so (2,4) is served.
    let records = vec![
        record(DomainId::Piloting, "descend", "Sink lower now please.", 2, 4),
        record(DomainId::Piloting, "descend", "Pilot, please descend lower now.", 3, 5),
    ];
    let db = TaxonomyDb::from_records(records);
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let (r, exact) = db
        .retrieve(DomainId::Piloting, "descend", 3, 4, &mut rng)
        .unwrap();
    assert!(!exact);
    assert_eq!((r.k, r.l), (2, 4));
}

#[test]
fn retrieve_unknown_topic_errors() {
    let (db, _) = build_default();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    assert!(db
        .retrieve(DomainId::Piloting, "barrel_roll", 2, 2, &mut rng)
        .is_err());
}

#[test]
fn stub_scorer_matches_hand_scored_exemplars() {
    let mut s = StubScorer::new(0);
    let p = s
        .score("Shift left.", DomainId::Piloting, "shift_left")
        .unwrap();
    assert_eq!(actionable_index(&p, 80.0).unwrap(), 2);
    let p = s
        .score("Merge to the right lane.", DomainId::Driving, "merge_right")
        .unwrap();
    assert_eq!(actionable_index(&p, 80.0).unwrap(), 5);
    let p = s
        .score(
            "Go down, all stations occupied.",
            DomainId::Cooking,
            "move_down",
        )
        .unwrap();
    assert_eq!(actionable_index(&p, 80.0).unwrap(), 2);
    assert_eq!(p.len(), 5);
}

#[test]
fn prompt_templates_substitute_placeholders() {
    use super::scorer::{render_generation_prompt, render_rating_prompt};
    let g = render_generation_prompt("summary text", "slow down", (2, 5), 8);
    assert!(g.contains("summary text"));
    assert!(g.contains("8 candidate notification(s)"));
    assert!(g.contains("\"slow down.\""));
    assert!(g.contains("2-th word"));
    assert!(g.contains("under 5 words"));
    assert!(!g.contains('['));
    let r = render_rating_prompt("slow down", "Ease off the gas.");
    assert!(r.contains("Ease off the gas."));
    assert!(!r.contains("[Command Type]"));
}

#[test]
fn remote_reply_progression_parses() {
    use super::scorer::RemoteScorer;
    let reply = "Instruction: Slow down now.\nWords: Slow | down | now.\nComprehension after each word: 45% | 95% | 100%";
    let p = RemoteScorer::parse_progression(reply).unwrap();
    assert_eq!(p, vec![45.0, 95.0, 100.0]);
    assert!(RemoteScorer::parse_progression("no data here").is_err());
}

#[test]
fn remote_scorer_speaks_http_json() {
    use super::scorer::RemoteScorer;
    use std::io::{Read, Write};
    // one-shot local server speaking the wire protocol
    let listener = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    let handle = std::thread::spawn(move || {
        let (mut conn, _) = listener.accept().unwrap();
        let mut buf = [0u8; 65536];
        let n = conn.read(&mut buf).unwrap();
        let request = String::from_utf8_lossy(&buf[..n]).to_string();
        let body = serde_json::json!({
            "text": "Slow down.\nEase off the gas now."
        })
        .to_string();
        let response = format!(
            "HTTP/1.1 200 OK\r\nContent-Type: application/json\r\nContent-Length: {}\r\n\r\n{}",
            body.len(),
            body
        );
        conn.write_all(response.as_bytes()).unwrap();
        request
    });
    let mut remote = RemoteScorer {
        endpoint: format!("{addr}/generate"),
        max_tokens: 64,
        domain_summaries: Default::default(),
    };
    let texts = remote
        .generate(DomainId::Driving, "slow_down", (2, 5), 4, 0)
        .unwrap();
    assert_eq!(texts, vec!["Slow down.", "Ease off the gas now."]);
    let request = handle.join().unwrap();
    assert!(request.starts_with("POST /generate HTTP/1.1"));
    assert!(request.contains("\"max_tokens\":64"));
}

proptest! {
    #[test]
    fn stub_filler_append_is_monotone(extra in 1usize..4) {
        // appending pure filler never decreases earlier progression values
        // and never decreases the derived k
        let mut s = StubScorer::new(0);
        let base = "Slow down for incoming traffic.";
        let p0 = s.score(base, DomainId::Driving, "slow_down").unwrap();
        let k0 = actionable_index(&p0, 80.0).unwrap();
        let appended = format!("{base}{}", " please".repeat(extra));
        let p1 = s.score(&appended, DomainId::Driving, "slow_down").unwrap();
        for (a, b) in p0.iter().zip(&p1) {
            prop_assert_eq!(a, b);
        }
        let k1 = actionable_index(&p1, 80.0).unwrap();
        prop_assert!(k1 >= k0);
    }

    #[test]
    fn retrieval_is_total_over_in_range_requests(k in 2u32..=5, l in 2u32..=5, seed in 0u64..50) {
        prop_assume!(k <= l);
        let (db, _) = build_default();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for domain in [DomainId::Piloting, DomainId::Driving, DomainId::Cooking] {
            for topic in crate::domains::topic_names(domain) {
                let got = db.retrieve(domain, topic, k, l, &mut rng);
                prop_assert!(got.is_ok(), "{domain}/{topic} ({k},{l})");
            }
        }
    }
}

