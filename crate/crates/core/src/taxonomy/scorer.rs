//! Candidate generation and word-level comprehension scoring.
//!
//! Two implementations of the same client interface: a deterministic
//! lexical stub that keeps the whole pipeline offline and reproducible, and
//! a remote text-generation service speaking a small HTTP/JSON protocol.

use crate::derive_seed;
use crate::domains::DomainId;
use crate::error::{CoreError, Result};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::io::{Read, Write};

/// Generation/scoring backend for taxonomy construction.
pub trait ScorerClient {
    fn id(&self) -> String;

    /// Proposes up to `count` candidate utterances for `topic` aimed at the
    /// (k, l) target cell. `iteration` decorrelates repeated calls.
    fn generate(
        &mut self,
        domain: DomainId,
        topic: &str,
        target: (u32, u32),
        count: usize,
        iteration: u64,
    ) -> Result<Vec<String>>;

    /// Per-word comprehension progression for `text`, values in [0, 100].
    fn score(&mut self, text: &str, domain: DomainId, topic: &str) -> Result<Vec<f64>>;

    /// Curated utterances that must survive the diversity pass.
    fn pinned(&self, _domain: DomainId, _topic: &str) -> Vec<String> {
        Vec::new()
    }
}

/// Splits on whitespace, punctuation staying attached to its word.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split_whitespace().map(|w| w.to_string()).collect()
}

fn normalize(word: &str) -> String {
    word.trim_matches(|c: char| !c.is_alphanumeric() && c != '-')
        .to_lowercase()
}

struct TopicLexicon {
    topic: &'static str,
    /// Words that jump comprehension to an absolute floor.
    jumps: &'static [(&'static str, f64)],
    /// Core action phrases; the final word carries the decisive jump.
    cores: &'static [&'static str],
    /// Hand-written exemplars pinned to (k, l) cells.
    exemplars: &'static [(u32, u32, &'static str)],
}

const PILOTING_TOPICS: &[TopicLexicon] = &[
    TopicLexicon {
        topic: "ascend",
        jumps: &[("ascend", 95.0), ("climb", 90.0), ("rise", 85.0)],
        cores: &["Ascend now.", "Climb higher.", "Pilot, ascend."],
        exemplars: &[
            (2, 2, "Ascend now."),
            (5, 5, "Avoid top-left danger zone, ascend."),
        ],
    },
    TopicLexicon {
        topic: "shift_right",
        jumps: &[("right", 95.0), ("starboard", 85.0), ("shift", 40.0), ("drift", 35.0)],
        cores: &["Shift right.", "Drift right.", "Move right."],
        exemplars: &[(2, 2, "Shift right.")],
    },
    TopicLexicon {
        topic: "shift_left",
        jumps: &[("left", 95.0), ("port", 85.0), ("shift", 40.0), ("drift", 35.0)],
        cores: &["Shift left.", "Drift left.", "Move left."],
        exemplars: &[(2, 2, "Shift left.")],
    },
    TopicLexicon {
        topic: "descend",
        jumps: &[("descend", 95.0), ("lower", 85.0), ("sink", 85.0)],
        cores: &["Descend now.", "Pilot, descend.", "Sink lower."],
        exemplars: &[(2, 2, "Descend now.")],
    },
];

const DRIVING_TOPICS: &[TopicLexicon] = &[
    TopicLexicon {
        topic: "slow_down",
        jumps: &[("slow", 45.0), ("down", 95.0), ("brake", 70.0), ("decelerate", 90.0)],
        cores: &["Slow down.", "Slow down now.", "Please decelerate."],
        exemplars: &[
            (2, 2, "Slow down."),
            (2, 5, "Slow down for incoming traffic."),
        ],
    },
    TopicLexicon {
        topic: "speed_up",
        jumps: &[("up", 95.0), ("faster", 90.0), ("accelerate", 90.0), ("speed", 45.0)],
        cores: &["Speed up.", "Go faster.", "Please accelerate."],
        exemplars: &[(2, 2, "Speed up.")],
    },
    TopicLexicon {
        // Direction words alone stay below the threshold here: a bare
        // "Merge left." is understood only once complete, matching the
        // exemplar cells.
        topic: "merge_left",
        jumps: &[("left", 75.0), ("merge", 40.0), ("switch", 45.0)],
        cores: &["Merge left.", "Left lane."],
        exemplars: &[(2, 2, "Merge left."), (5, 5, "Merge to the left lane.")],
    },
    TopicLexicon {
        topic: "merge_right",
        jumps: &[("right", 75.0), ("merge", 40.0), ("switch", 45.0)],
        cores: &["Merge right.", "Right lane."],
        exemplars: &[(2, 2, "Merge right."), (5, 5, "Merge to the right lane.")],
    },
];

const COOKING_TOPICS: &[TopicLexicon] = &[
    TopicLexicon {
        topic: "move_up",
        jumps: &[("up", 90.0), ("go", 30.0), ("move", 30.0)],
        cores: &["Go up.", "Move up.", "Head up."],
        exemplars: &[(2, 2, "Go up.")],
    },
    TopicLexicon {
        topic: "move_down",
        jumps: &[("down", 95.0), ("go", 30.0), ("move", 30.0)],
        cores: &["Go down.", "Move down.", "Head down."],
        exemplars: &[
            (2, 2, "Go down."),
            (2, 5, "Go down, all stations occupied."),
        ],
    },
    TopicLexicon {
        topic: "move_left",
        jumps: &[("left", 95.0), ("go", 30.0), ("move", 30.0)],
        cores: &["Go left.", "Move left."],
        exemplars: &[(2, 2, "Go left.")],
    },
    TopicLexicon {
        topic: "move_right",
        jumps: &[("right", 95.0), ("go", 30.0), ("move", 30.0)],
        cores: &["Go right.", "Move right."],
        exemplars: &[
            (2, 2, "Go right."),
            (5, 5, "Chopping board full, go right."),
        ],
    },
    TopicLexicon {
        // Pure context: no actionable word, so comprehension completes only
        // at full delivery (k falls back to l).
        topic: "disclose_information",
        jumps: &[],
        cores: &["Stations busy.", "All occupied."],
        exemplars: &[(4, 4, "All the stations occupied.")],
    },
];

fn domain_lexicon(domain: DomainId) -> &'static [TopicLexicon] {
    match domain {
        DomainId::Piloting => PILOTING_TOPICS,
        DomainId::Driving => DRIVING_TOPICS,
        DomainId::Cooking => COOKING_TOPICS,
    }
}

fn context_words(domain: DomainId) -> &'static [&'static str] {
    match domain {
        DomainId::Piloting => &[
            "danger", "zone", "avoid", "top-left", "pad", "safe", "turbulence", "hazard",
        ],
        DomainId::Driving => &[
            "traffic", "incoming", "vehicle", "lane", "ahead", "car", "collision",
        ],
        DomainId::Cooking => &[
            "stations", "occupied", "grill", "board", "full", "busy", "kitchen", "chopping",
        ],
    }
}

fn filler_words(domain: DomainId) -> &'static [&'static str] {
    match domain {
        DomainId::Piloting => &["Pilot,", "Please", "Attention:", "Now,"],
        DomainId::Driving => &["Driver,", "Please", "Careful,", "Heads-up:"],
        DomainId::Cooking => &["Chef,", "Please", "Quick,", "Listen:"],
    }
}

fn tails(domain: DomainId, len: usize) -> &'static [&'static str] {
    match (domain, len) {
        (DomainId::Piloting, 1) => &["now.", "immediately.", "please."],
        (DomainId::Piloting, 2) => &["avoid danger.", "stay safe.", "danger ahead."],
        (DomainId::Piloting, 3) => &["to avoid danger.", "past the zone.", "for the pad."],
        (DomainId::Driving, 1) => &["now.", "please.", "immediately."],
        (DomainId::Driving, 2) => &["traffic ahead.", "car incoming.", "for safety."],
        (DomainId::Driving, 3) => &["for incoming traffic.", "to avoid collision.", "car merging ahead."],
        (DomainId::Cooking, 1) => &["now.", "please.", "quickly."],
        (DomainId::Cooking, 2) => &["stations busy.", "grill occupied.", "board full."],
        (DomainId::Cooking, 3) => &["all stations occupied.", "the grill's taken.", "everything is busy."],
        _ => &[],
    }
}

/// Deterministic lexical scorer: action keywords jump comprehension to a
/// fixed floor, domain context words add 10 points, anything else adds 5.
pub struct StubScorer {
    pub seed: u64,
}

impl StubScorer {
    pub fn new(seed: u64) -> Self {
        StubScorer { seed }
    }

    fn lexicon(domain: DomainId, topic: &str) -> Result<&'static TopicLexicon> {
        domain_lexicon(domain)
            .iter()
            .find(|t| t.topic == topic)
            .ok_or_else(|| {
                CoreError::Scorer(format!("no lexicon for topic {topic} in {domain}"))
            })
    }
}

impl ScorerClient for StubScorer {
    fn id(&self) -> String {
        "stub-lexical-v1".into()
    }

    fn generate(
        &mut self,
        domain: DomainId,
        topic: &str,
        target: (u32, u32),
        count: usize,
        iteration: u64,
    ) -> Result<Vec<String>> {
        let lex = Self::lexicon(domain, topic)?;
        let (k, l) = target;
        let mut out: Vec<String> = Vec::new();
        for &(ek, el, text) in lex.exemplars {
            if (ek, el) == (k, l) {
                out.push(text.to_string());
            }
        }
        let mut cell_tag = 0u64;
        for b in format!("{domain}/{topic}/{k}/{l}").bytes() {
            cell_tag = cell_tag.wrapping_mul(31).wrapping_add(b as u64);
        }
        let mut rng =
            ChaCha8Rng::seed_from_u64(derive_seed(derive_seed(self.seed, cell_tag), iteration));
        let fillers = filler_words(domain);
        for _attempt in 0..count * 4 {
            if out.len() >= count {
                break;
            }
            let core = lex.cores.choose(&mut rng).expect("cores non-empty");
            let core_words = tokenize(core);
            let c = core_words.len() as u32;
            if c > k {
                continue;
            }
            let prefix_len = (k - c) as usize;
            if prefix_len > 3 {
                continue;
            }
            let tail_len = (l - k) as usize;
            let tail_pool = tails(domain, tail_len);
            if tail_len > 0 && tail_pool.is_empty() {
                continue;
            }
            let mut words: Vec<String> = Vec::new();
            let mut pool = fillers.to_vec();
            for _ in 0..prefix_len {
                let i = rng.random_range(0..pool.len());
                words.push(pool.remove(i).to_string());
            }
            words.extend(core_words.iter().map(|w| w.trim_end_matches('.').to_string()));
            if tail_len > 0 {
                let tail = tail_pool.choose(&mut rng).expect("tail pool non-empty");
                // the core no longer ends the sentence; drop its period
                words.extend(tokenize(tail));
            } else if let Some(last) = words.last_mut() {
                if !last.ends_with('.') && !last.ends_with('!') {
                    last.push('.');
                }
            }
            let text = words.join(" ");
            if !out.contains(&text) {
                out.push(text);
            }
        }
        Ok(out)
    }

    fn pinned(&self, domain: DomainId, topic: &str) -> Vec<String> {
        Self::lexicon(domain, topic)
            .map(|lex| lex.exemplars.iter().map(|(_, _, t)| t.to_string()).collect())
            .unwrap_or_default()
    }

    fn score(&mut self, text: &str, domain: DomainId, topic: &str) -> Result<Vec<f64>> {
        let lex = Self::lexicon(domain, topic)?;
        let ctx = context_words(domain);
        let mut value: f64 = 0.0;
        let mut progression = Vec::new();
        for word in tokenize(text) {
            let w = normalize(&word);
            if let Some((_, jump)) = lex.jumps.iter().find(|(j, _)| *j == w) {
                value = value.max(*jump);
            } else if ctx.contains(&w.as_str()) {
                value += 10.0;
            } else {
                value += 5.0;
            }
            value = value.clamp(0.0, 100.0);
            progression.push(value);
        }
        Ok(progression)
    }
}

/// Prompt template for candidate generation. Placeholders: `[Domain Summary]`,
/// `[Number Samples]`, `[Command Type]`, `[Reaction Time Word]`, `[Word Length]`.
pub const GENERATION_PROMPT: &str = "Context: [Domain Summary]\n\n\
Generate [Number Samples] candidate notification(s) instructing the pilot such that the pilot would:\n\
- Each must prompt the pilot to perform the action \"[Command Type].\"\n\
- Structure each notification so that by the [Reaction Time Word]-th word, the pilot has fully grasped the command.\n\
- Use simple, unambiguous phrasing.\n\
- Keep each notification under [Word Length] words total.\n\
- In at least some of the samples, weave in one piece of the previously missing information to reinforce future decision-making\n\n\
Format: Return each notification as a single line.\n\n\
Examples of various types of notifications for different instructions:\n\
- \"Pilot, stop now!\"\n\
- \"Please slow down immediately.\"\n\
- \"There is an obstacle ahead, please go make a shift to the right such that you can avoid it.\"\n\
- \"Please maneuver to the left in order to avoid crossing the flight trajectory of another aircraft.\"\n\
- \"You will be crossing the danger zone in front of you, so descend now.\"\n\n\
Don't number the notifications. Don't provide reasoning or explanations. Only output notifications.\n\n\
Generate your notifications now:";

/// Prompt template for comprehension rating. Placeholders: `[Command Type]`,
/// `[Notification]`.
pub const RATING_PROMPT: &str = "You are given a notification, each an instruction (or possibly multiple instructions) for the pilot. \
Your task is to analyze each notification word by word and compute how a human's comprehension in understanding what the instruction wants them to do evolves from the first to the last word.\n\
Process:\n\
1. Start at 0% comprehension before reading any words.\n\
2. Read the instruction word by word from left to right.\n\
3. At each word, adjust the comprehension level based on how that word clarifies or obscures the intended action:\n\
- Words that clearly indicate the core action (e.g., \"Reduce\", \"Slow\", \"Descend\") increase comprehension significantly.\n\
- Neutral words or filler words that do not add clarity may only slightly increase or keep comprehension stable.\n\
4. Continue updating the comprehension level word-by-word until the final word.\n\
5. Return the final results for all notifications as a list of lists of comprehension values (0-100%) after each word in the sentence. Each sub-list corresponds to one notification.\n\n\
In-Context Examples (Guides):\n\
Here are some examples for the comprehension progression for the command type \"Slow down\".\n\
- Instruction: \"Immediate speed reduction needed, danger!\"\n\
  Words: Immediate | speed | reduction | needed, | danger!\n\
  Comprehension after each word: 5% | 20% | 80% | 80% | 100%\n\
- Instruction: \"Adjust speed, prepare to avoid the zone.\"\n\
  Words: Adjust | speed | prepare | to | avoid | the | zone.\n\
  Comprehension after each word: 5% | 50% | 50% | 50% | 70% | 70% | 70%\n\n\
Your Task:\n\
Apply the same reasoning above to the given notification below for the instruction type: [Command Type]. \
Start from 0% comprehension before the first word, and after reading each word, estimate the new comprehension level for instruction type: [Command Type]. \
Please output the comprehension after each word for each of the following instructions, which is intended to instruct the receiver to \"[Command Type]\".\n\n\
[Notification]\n\n\
Return the final result in this format:\n\n\
Instruction: sentence with n words\n\
Words: word 1 | word 2 | word 3 | word 4 | ... | word n-1 | word n.\n\
Comprehension after each word: number% | number% | number% | number% | ... | number% | number%\n\n\
Do not include any explanations or commentary.\n\
Only output the data structure.";

pub fn render_generation_prompt(
    domain_summary: &str,
    topic: &str,
    target: (u32, u32),
    count: usize,
) -> String {
    GENERATION_PROMPT
        .replace("[Domain Summary]", domain_summary)
        .replace("[Number Samples]", &count.to_string())
        .replace("[Command Type]", topic)
        .replace("[Reaction Time Word]", &target.0.to_string())
        .replace("[Word Length]", &target.1.to_string())
}

pub fn render_rating_prompt(topic: &str, notification: &str) -> String {
    RATING_PROMPT
        .replace("[Command Type]", topic)
        .replace("[Notification]", notification)
}

/// Environment variable naming the remote scorer endpoint (host:port/path).
pub const SCORER_ENDPOINT_VAR: &str = "HEADSUP_SCORER_ENDPOINT";

/// Remote text-generation scorer: HTTP POST with JSON body
/// `{"prompt": ..., "max_tokens": ...}`, JSON reply `{"text": ...}`.
pub struct RemoteScorer {
    pub endpoint: String,
    pub max_tokens: u32,
    pub domain_summaries: std::collections::BTreeMap<DomainId, String>,
}

impl RemoteScorer {
    pub fn from_env() -> Result<Self> {
        let endpoint = std::env::var(SCORER_ENDPOINT_VAR).map_err(|_| {
            CoreError::Config(format!("{SCORER_ENDPOINT_VAR} is not set"))
        })?;
        Ok(RemoteScorer {
            endpoint,
            max_tokens: 512,
            domain_summaries: Default::default(),
        })
    }

    fn post(&self, prompt: &str) -> Result<String> {
        let body = serde_json::to_string(&serde_json::json!({
            "prompt": prompt,
            "max_tokens": self.max_tokens,
        }))?;
        let (host_port, path) = match self.endpoint.split_once('/') {
            Some((h, p)) => (h.to_string(), format!("/{p}")),
            None => (self.endpoint.clone(), "/".to_string()),
        };
        let mut stream = std::net::TcpStream::connect(&host_port)
            .map_err(|e| CoreError::Scorer(format!("connect {host_port}: {e}")))?;
        let request = format!(
            "POST {path} HTTP/1.1\r\nHost: {host_port}\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
            body.len()
        );
        stream.write_all(request.as_bytes())?;
        let mut response = String::new();
        stream.read_to_string(&mut response)?;
        let (header, payload) = response
            .split_once("\r\n\r\n")
            .ok_or_else(|| CoreError::Scorer("malformed HTTP response".into()))?;
        if !header.starts_with("HTTP/1.1 200") && !header.starts_with("HTTP/1.0 200") {
            return Err(CoreError::Scorer(format!(
                "scorer returned non-200: {}",
                header.lines().next().unwrap_or("")
            )));
        }
        let reply: serde_json::Value = serde_json::from_str(payload.trim())?;
        reply["text"]
            .as_str()
            .map(|s| s.to_string())
            .ok_or_else(|| CoreError::Scorer("reply missing 'text' field".into()))
    }

    /// Parses "Comprehension after each word: 5% | 20% | ..." reply lines.
    pub fn parse_progression(reply: &str) -> Result<Vec<f64>> {
        for line in reply.lines() {
            if let Some(rest) = line.trim().strip_prefix("Comprehension after each word:") {
                let values: std::result::Result<Vec<f64>, _> = rest
                    .split('|')
                    .map(|v| v.trim().trim_end_matches('%').parse::<f64>())
                    .collect();
                return values
                    .map_err(|e| CoreError::Scorer(format!("bad progression value: {e}")));
            }
        }
        Err(CoreError::Scorer(
            "reply contained no comprehension line".into(),
        ))
    }
}

impl ScorerClient for RemoteScorer {
    fn id(&self) -> String {
        format!("remote@{}", self.endpoint)
    }

    fn generate(
        &mut self,
        domain: DomainId,
        topic: &str,
        target: (u32, u32),
        count: usize,
        _iteration: u64,
    ) -> Result<Vec<String>> {
        let summary = self
            .domain_summaries
            .get(&domain)
            .cloned()
            .unwrap_or_else(|| domain.to_string());
        let prompt = render_generation_prompt(&summary, topic, target, count);
        let reply = self.post(&prompt)?;
        Ok(reply
            .lines()
            .map(|l| l.trim().trim_start_matches('-').trim().to_string())
            .filter(|l| !l.is_empty())
            .take(count)
            .collect())
    }

    fn score(&mut self, text: &str, _domain: DomainId, topic: &str) -> Result<Vec<f64>> {
        let prompt = render_rating_prompt(topic, text);
        let reply = self.post(&prompt)?;
        Self::parse_progression(&reply)
    }
}
