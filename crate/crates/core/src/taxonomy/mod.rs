//! The offline utterance database: candidate generation, word-level
//! comprehension scoring, actionable-index derivation, medoid
//! deduplication, and (topic, k, l)-indexed retrieval.

pub mod medoids;
pub mod scorer;

use crate::action::{K_MIN, L_MAX};
use crate::domains::DomainId;
use crate::error::{CoreError, Result};
use medoids::{select_medoids, JaccardTokenSet, SimilarityMeasure};
use rand::Rng;
use scorer::{tokenize, ScorerClient};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::io::{BufRead, Write};
use std::path::Path;

/// Comprehension percentage at which the instruction counts as grasped.
pub const COMPREHENSION_THRESHOLD: f64 = 80.0;

/// Default per-cell record quota (also the medoid count of the diversity
/// pass).
pub const DEFAULT_CELL_QUOTA: usize = 5;

/// Generation attempts per cell before giving up on the quota.
pub const DEFAULT_MAX_ITERATIONS: u64 = 1000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UtteranceRecord {
    pub domain: DomainId,
    pub topic: String,
    pub text: String,
    pub words: Vec<String>,
    pub progression: Vec<f64>,
    pub k: u32,
    pub l: u32,
    pub scorer_id: String,
    pub seed: u64,
}

/// Smallest 1-indexed word position whose progression reaches `threshold`;
/// an utterance that never reaches it is only comprehended at completion,
/// so the index falls back to the final word.
pub fn actionable_index(progression: &[f64], threshold: f64) -> Result<u32> {
    if progression.is_empty() {
        return Err(CoreError::Validation(
            "progression must be non-empty".into(),
        ));
    }
    for (i, v) in progression.iter().enumerate() {
        if *v >= threshold {
            return Ok(i as u32 + 1);
        }
    }
    Ok(progression.len() as u32)
}

type CellKey = (DomainId, String, u32, u32);

#[derive(Debug, Clone, Default)]
pub struct TaxonomyDb {
    records: Vec<UtteranceRecord>,
    index: BTreeMap<CellKey, Vec<usize>>,
}

/// Per-cell fill report produced by a build.
#[derive(Debug, Clone, Serialize)]
pub struct BuildSummary {
    pub cells_total: usize,
    pub cells_filled: usize,
    pub cells_underfilled: Vec<(String, String, u32, u32, usize)>,
    pub records: usize,
    pub discarded_out_of_range: usize,
}

impl TaxonomyDb {
    pub fn from_records(mut records: Vec<UtteranceRecord>) -> Self {
        records.sort_by(|a, b| {
            (a.domain, &a.topic, a.k, a.l, &a.text).cmp(&(b.domain, &b.topic, b.k, b.l, &b.text))
        });
        let mut index: BTreeMap<CellKey, Vec<usize>> = BTreeMap::new();
        for (i, r) in records.iter().enumerate() {
            index
                .entry((r.domain, r.topic.clone(), r.k, r.l))
                .or_default()
                .push(i);
        }
        TaxonomyDb { records, index }
    }

    pub fn records(&self) -> &[UtteranceRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn cell(&self, domain: DomainId, topic: &str, k: u32, l: u32) -> Vec<&UtteranceRecord> {
        self.index
            .get(&(domain, topic.to_string(), k, l))
            .map(|idxs| idxs.iter().map(|&i| &self.records[i]).collect())
            .unwrap_or_default()
    }

    /// Populated (k, l) cells for a topic.
    pub fn cells_for_topic(&self, domain: DomainId, topic: &str) -> Vec<(u32, u32)> {
        self.index
            .keys()
            .filter(|(d, t, _, _)| *d == domain && t == topic)
            .map(|(_, _, k, l)| (*k, *l))
            .collect()
    }

    /// Retrieves a record for the requested cell: a uniform draw on an exact
    /// match, otherwise the nearest populated cell by |k-k'| + |l-l'| with
    /// ties preferring k' <= k, then smaller l'. The second return value is
    /// false when the fallback fired.
    pub fn retrieve(
        &self,
        domain: DomainId,
        topic: &str,
        k: u32,
        l: u32,
        rng: &mut impl Rng,
    ) -> Result<(&UtteranceRecord, bool)> {
        let exact = self.cell(domain, topic, k, l);
        if !exact.is_empty() {
            let pick = rng.random_range(0..exact.len());
            return Ok((exact[pick], true));
        }
        let cells = self.cells_for_topic(domain, topic);
        if cells.is_empty() {
            return Err(CoreError::Retrieval(format!(
                "no records for topic {topic} in domain {domain}"
            )));
        }
        let (bk, bl) = self.nearest_cell(&cells, k, l).expect("cells non-empty");
        let bucket = self.cell(domain, topic, bk, bl);
        let pick = rng.random_range(0..bucket.len());
        Ok((bucket[pick], false))
    }

    /// Fallback metric: distance, then cells with k' <= k, then smaller l',
    /// then smaller k' as the final tiebreak.
    pub fn nearest_cell(&self, cells: &[(u32, u32)], k: u32, l: u32) -> Option<(u32, u32)> {
        cells
            .iter()
            .min_by_key(|(ck, cl)| {
                let dist = ck.abs_diff(k) + cl.abs_diff(l);
                (dist, u32::from(*ck > k), *cl, *ck)
            })
            .copied()
    }

    pub fn save_jsonl(&self, path: &Path) -> Result<()> {
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        for r in &self.records {
            serde_json::to_writer(&mut out, r)?;
            out.write_all(b"\n")?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn load_jsonl(path: &Path) -> Result<TaxonomyDb> {
        let file = std::fs::File::open(path)
            .map_err(|e| CoreError::Validation(format!("{}: {e}", path.display())))?;
        let mut records = Vec::new();
        for (lineno, line) in std::io::BufReader::new(file).lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let r: UtteranceRecord = serde_json::from_str(&line).map_err(|e| {
                CoreError::Validation(format!("{}:{}: {e}", path.display(), lineno + 1))
            })?;
            records.push(r);
        }
        Ok(TaxonomyDb::from_records(records))
    }

    /// Checks the stored-record invariants: k = actionable_index(progression)
    /// and l = word count, both within range.
    pub fn validate(&self) -> Result<()> {
        for r in &self.records {
            let k = actionable_index(&r.progression, COMPREHENSION_THRESHOLD)?;
            if r.k != k {
                return Err(CoreError::Validation(format!(
                    "record '{}' stores k={} but derives k={k}",
                    r.text, r.k
                )));
            }
            if r.l as usize != r.words.len() || r.progression.len() != r.words.len() {
                return Err(CoreError::Validation(format!(
                    "record '{}' has inconsistent lengths",
                    r.text
                )));
            }
            if !(K_MIN..=L_MAX).contains(&r.k) || !(K_MIN..=L_MAX).contains(&r.l) || r.k > r.l {
                return Err(CoreError::Validation(format!(
                    "record '{}' outside k/l range",
                    r.text
                )));
            }
        }
        Ok(())
    }
}

/// All (k, l) cells in range, k <= l.
pub fn cell_grid() -> Vec<(u32, u32)> {
    let mut cells = Vec::new();
    for k in K_MIN..=L_MAX {
        for l in k..=L_MAX {
            cells.push((k, l));
        }
    }
    cells
}

#[derive(Debug, Clone)]
pub struct BuildConfig {
    pub domains: Vec<DomainId>,
    pub quota: usize,
    pub max_iterations: u64,
    pub seed: u64,
}

impl Default for BuildConfig {
    fn default() -> Self {
        BuildConfig {
            domains: vec![DomainId::Piloting, DomainId::Driving, DomainId::Cooking],
            quota: DEFAULT_CELL_QUOTA,
            max_iterations: DEFAULT_MAX_ITERATIONS,
            seed: 0,
        }
    }
}

/// Builds the taxonomy: per (domain, topic, k, l) cell, generate candidates,
/// score them, derive their true (k, l), and bucket them where they land.
/// Cells still under quota after `max_iterations` are kept as-is with a
/// warning; a final diversity pass trims overfull cells to `quota` medoids.
pub fn build_taxonomy(
    cfg: &BuildConfig,
    scorer: &mut dyn ScorerClient,
) -> Result<(TaxonomyDb, BuildSummary)> {
    let scorer_id = scorer.id();
    let mut buckets: BTreeMap<CellKey, Vec<UtteranceRecord>> = BTreeMap::new();
    let mut discarded = 0usize;
    let mut scorer_failures = 0usize;
    for &domain in &cfg.domains {
        for &topic in crate::domains::topic_names(domain) {
            // Curated exemplars enter first so cell quotas can never
            // squeeze them out.
            for text in scorer.pinned(domain, topic) {
                let progression = scorer.score(&text, domain, topic)?;
                let words = tokenize(&text);
                if words.len() != progression.len() || progression.is_empty() {
                    continue;
                }
                let k = actionable_index(&progression, COMPREHENSION_THRESHOLD)?;
                let l = words.len() as u32;
                if !(K_MIN..=L_MAX).contains(&k) || !(K_MIN..=L_MAX).contains(&l) || k > l {
                    continue;
                }
                let bucket = buckets.entry((domain, topic.to_string(), k, l)).or_default();
                if !bucket.iter().any(|r| r.text == text) {
                    bucket.push(UtteranceRecord {
                        domain,
                        topic: topic.to_string(),
                        text,
                        words,
                        progression,
                        k,
                        l,
                        scorer_id: scorer_id.clone(),
                        seed: cfg.seed,
                    });
                }
            }
            for &(k, l) in &cell_grid().to_vec() {
                let key = (domain, topic.to_string(), k, l);
                let mut stagnant = 0u32;
                for iteration in 0..cfg.max_iterations {
                    let have = buckets.get(&key).map_or(0, Vec::len);
                    if have >= cfg.quota {
                        break;
                    }
                    let texts =
                        match scorer.generate(domain, topic, (k, l), cfg.quota, iteration) {
                            Ok(t) => t,
                            Err(e) => {
                                eprintln!(
                                    "warning: generation failed for {domain}/{topic} ({k},{l}): {e}; cell left incomplete"
                                );
                                scorer_failures += 1;
                                break;
                            }
                        };
                    let mut grew = false;
                    for text in texts {
                        let progression = match scorer.score(&text, domain, topic) {
                            Ok(p) => p,
                            Err(e) => {
                                eprintln!("warning: scoring failed for '{text}': {e}");
                                scorer_failures += 1;
                                continue;
                            }
                        };
                        if progression.is_empty() {
                            continue;
                        }
                        let words = tokenize(&text);
                        if words.len() != progression.len() {
                            discarded += 1;
                            continue;
                        }
                        let derived_k = actionable_index(&progression, COMPREHENSION_THRESHOLD)?;
                        let derived_l = words.len() as u32;
                        if !(K_MIN..=L_MAX).contains(&derived_k)
                            || !(K_MIN..=L_MAX).contains(&derived_l)
                            || derived_k > derived_l
                        {
                            discarded += 1;
                            continue;
                        }
                        let bucket = buckets
                            .entry((domain, topic.to_string(), derived_k, derived_l))
                            .or_default();
                        if bucket.iter().any(|r| r.text == text) {
                            continue;
                        }
                        bucket.push(UtteranceRecord {
                            domain,
                            topic: topic.to_string(),
                            text,
                            words,
                            progression,
                            k: derived_k,
                            l: derived_l,
                            scorer_id: scorer_id.clone(),
                            seed: cfg.seed,
                        });
                        grew = true;
                    }
                    stagnant = if grew { 0 } else { stagnant + 1 };
                    // A deterministic source that stops producing new texts
                    // will never fill the quota; stop early.
                    if stagnant >= 5 {
                        break;
                    }
                }
            }
        }
    }

    // Diversity pass: trim overfull cells to quota medoids. Curated
    // exemplars are pinned and never dropped.
    let measure = JaccardTokenSet;
    for ((domain, topic, _, _), records) in buckets.iter_mut() {
        if records.len() <= cfg.quota {
            continue;
        }
        let pinned_texts = scorer.pinned(*domain, topic);
        let (pinned, rest): (Vec<_>, Vec<_>) = std::mem::take(records)
            .into_iter()
            .partition(|r| pinned_texts.contains(&r.text));
        let free_slots = cfg.quota.saturating_sub(pinned.len()).max(1);
        let mut kept = pinned;
        kept.extend(dedupe_medoids(rest, free_slots, &measure));
        *records = kept;
    }

    let mut summary = BuildSummary {
        cells_total: 0,
        cells_filled: 0,
        cells_underfilled: Vec::new(),
        records: 0,
        discarded_out_of_range: discarded,
    };
    for &domain in &cfg.domains {
        for &topic in crate::domains::topic_names(domain) {
            for &(k, l) in &cell_grid() {
                summary.cells_total += 1;
                let n = buckets
                    .get(&(domain, topic.to_string(), k, l))
                    .map_or(0, Vec::len);
                if n >= cfg.quota {
                    summary.cells_filled += 1;
                } else {
                    summary.cells_underfilled.push((
                        domain.to_string(),
                        topic.to_string(),
                        k,
                        l,
                        n,
                    ));
                }
            }
        }
    }
    if scorer_failures > 0 {
        eprintln!("warning: {scorer_failures} scorer call(s) failed during the build");
    }

    let records: Vec<UtteranceRecord> = buckets.into_values().flatten().collect();
    summary.records = records.len();
    let db = TaxonomyDb::from_records(records);
    db.validate()?;
    Ok((db, summary))
}

/// Keeps at most `m` representatives of `records`, one medoid per cluster
/// under the given similarity measure.
pub fn dedupe_medoids(
    records: Vec<UtteranceRecord>,
    m: usize,
    measure: &dyn SimilarityMeasure,
) -> Vec<UtteranceRecord> {
    if records.len() <= m {
        return records;
    }
    let texts: Vec<&str> = records.iter().map(|r| r.text.as_str()).collect();
    let keep = select_medoids(&texts, m, measure);
    records
        .into_iter()
        .enumerate()
        .filter(|(i, _)| keep.contains(i))
        .map(|(_, r)| r)
        .collect()
}

#[cfg(test)]
mod tests;
