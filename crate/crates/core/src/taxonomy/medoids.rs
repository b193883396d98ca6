//! Diversity pass over a taxonomy cell: k-medoids clustering under a
//! pluggable pairwise text distance, token-set Jaccard by default.

use std::collections::BTreeSet;

/// Pairwise distance between two utterance texts, in [0, 1].
pub trait SimilarityMeasure {
    fn distance(&self, a: &str, b: &str) -> f64;
}

/// 1 - |A ∩ B| / |A ∪ B| on lowercased, punctuation-stripped token sets.
pub struct JaccardTokenSet;

fn token_set(text: &str) -> BTreeSet<String> {
    text.split_whitespace()
        .map(|w| {
            w.trim_matches(|c: char| !c.is_alphanumeric())
                .to_lowercase()
        })
        .filter(|w| !w.is_empty())
        .collect()
}

impl SimilarityMeasure for JaccardTokenSet {
    fn distance(&self, a: &str, b: &str) -> f64 {
        let sa = token_set(a);
        let sb = token_set(b);
        if sa.is_empty() && sb.is_empty() {
            return 0.0;
        }
        let inter = sa.intersection(&sb).count() as f64;
        let union = sa.union(&sb).count() as f64;
        1.0 - inter / union
    }
}

/// Picks up to `m` medoids by PAM (greedy BUILD, then SWAP to a local
/// optimum), returning their indices in ascending order. Deterministic:
/// ties always keep the lower index.
pub fn select_medoids(texts: &[&str], m: usize, measure: &dyn SimilarityMeasure) -> Vec<usize> {
    let n = texts.len();
    assert!(m >= 1);
    if n <= m {
        return (0..n).collect();
    }
    let mut dist = vec![0.0; n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            let d = measure.distance(texts[i], texts[j]);
            dist[i * n + j] = d;
            dist[j * n + i] = d;
        }
    }
    let cost = |medoids: &[usize]| -> f64 {
        (0..n)
            .map(|p| {
                medoids
                    .iter()
                    .map(|&c| dist[p * n + c])
                    .fold(f64::INFINITY, f64::min)
            })
            .sum::<f64>()
    };

    // BUILD: start from the 1-medoid optimum, then add greedily.
    let mut medoids: Vec<usize> = Vec::with_capacity(m);
    for _ in 0..m {
        let mut best: Option<(f64, usize)> = None;
        for cand in 0..n {
            if medoids.contains(&cand) {
                continue;
            }
            medoids.push(cand);
            let c = cost(&medoids);
            medoids.pop();
            if best.is_none_or(|(bc, _)| c < bc) {
                best = Some((c, cand));
            }
        }
        medoids.push(best.expect("candidates remain").1);
    }

    // SWAP until no strict improvement.
    let mut current = cost(&medoids);
    loop {
        let mut improved = false;
        'outer: for mi in 0..m {
            for cand in 0..n {
                if medoids.contains(&cand) {
                    continue;
                }
                let old = medoids[mi];
                medoids[mi] = cand;
                let c = cost(&medoids);
                if c + 1e-12 < current {
                    current = c;
                    improved = true;
                    break 'outer;
                }
                medoids[mi] = old;
            }
        }
        if !improved {
            break;
        }
    }
    medoids.sort_unstable();
    medoids
}
