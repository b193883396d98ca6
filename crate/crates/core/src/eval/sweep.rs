//! Robustness study: training regimes crossed with evaluation reaction
//! delays, with the matching regime as the per-delay reference.

use super::{compute_metrics_grouped, EpisodeLog, MetricsReport};
use crate::error::Result;
use crate::human::ReactionDelayDist;
use serde::{Deserialize, Serialize};

pub const MATCHING_REGIME: &str = "matching";

/// How far below the matching reference a population cell may fall and
/// still count as holding up.
pub const SWEEP_MARGIN: f64 = 0.05;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RegimeSpec {
    pub label: String,
    /// None marks the matching regime (trained at each evaluation delay).
    pub dist: Option<ReactionDelayDist>,
}

impl RegimeSpec {
    pub fn population(label: &str, dist: ReactionDelayDist) -> Self {
        RegimeSpec {
            label: label.into(),
            dist: Some(dist),
        }
    }

    pub fn matching() -> Self {
        RegimeSpec {
            label: MATCHING_REGIME.into(),
            dist: None,
        }
    }
}

/// Default protocol: two Gaussian populations plus the matching reference,
/// evaluated across delays 0..=4.
pub fn default_sweep_regimes() -> Vec<RegimeSpec> {
    vec![
        RegimeSpec::population("gaussian(2,0.5)", ReactionDelayDist::gaussian(2.0, 0.5)),
        RegimeSpec::population("gaussian(2,1.0)", ReactionDelayDist::gaussian(2.0, 1.0)),
        RegimeSpec::matching(),
    ]
}

pub fn default_dr_grid() -> Vec<u32> {
    vec![0, 1, 2, 3, 4]
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepCell {
    pub regime: String,
    pub d_r: u32,
    pub report: MetricsReport,
    /// For population regimes: success within `SWEEP_MARGIN` of matching
    /// at the same delay (one-sided; exceeding the reference counts).
    pub holds_up: Option<bool>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct SweepTable {
    pub cells: Vec<SweepCell>,
}

impl SweepTable {
    pub fn cell(&self, regime: &str, d_r: u32) -> Option<&SweepCell> {
        self.cells
            .iter()
            .find(|c| c.regime == regime && c.d_r == d_r)
    }

    /// Fills the `holds_up` marks against the matching column.
    pub fn mark(&mut self) {
        let matching: Vec<(u32, f64)> = self
            .cells
            .iter()
            .filter(|c| c.regime == MATCHING_REGIME)
            .map(|c| (c.d_r, c.report.success_rate.mean))
            .collect();
        for cell in &mut self.cells {
            if cell.regime == MATCHING_REGIME {
                cell.holds_up = None;
                continue;
            }
            cell.holds_up = matching
                .iter()
                .find(|(d, _)| *d == cell.d_r)
                .map(|(_, reference)| cell.report.success_rate.mean >= reference - SWEEP_MARGIN);
        }
    }

    pub fn render_markdown(&self) -> String {
        use std::fmt::Write;
        let mut out = String::new();
        let mut grid: Vec<u32> = self.cells.iter().map(|c| c.d_r).collect();
        grid.sort_unstable();
        grid.dedup();
        let mut regimes: Vec<&str> = self.cells.iter().map(|c| c.regime.as_str()).collect();
        regimes.dedup();
        writeln!(out, "| d_r | {} |", regimes.join(" | ")).unwrap();
        writeln!(out, "|{}|", vec!["---"; regimes.len() + 1].join("|")).unwrap();
        for d in &grid {
            let mut row = format!("| {d} ");
            for regime in &regimes {
                match self.cell(regime, *d) {
                    Some(c) => {
                        let mark = match c.holds_up {
                            Some(true) => " *",
                            _ => "",
                        };
                        row.push_str(&format!(
                            "| {:.2} ± {:.2}{mark} ",
                            c.report.success_rate.mean, c.report.success_rate.std
                        ));
                    }
                    None => row.push_str("| "),
                }
            }
            writeln!(out, "{row}|").unwrap();
        }
        out.push_str("\n* within margin of the matching reference\n");
        out
    }
}

/// Runs the full sweep. `train` builds a policy for (delay distribution,
/// seed); `evaluate` rolls it out at a fixed evaluation delay. The matching
/// regime trains one policy per grid delay.
pub fn robustness_sweep<P>(
    regimes: &[RegimeSpec],
    dr_grid: &[u32],
    seeds: &[u64],
    mut train: impl FnMut(&ReactionDelayDist, u64) -> Result<P>,
    mut evaluate: impl FnMut(&P, u32, u64) -> Result<Vec<EpisodeLog>>,
) -> Result<SweepTable> {
    let mut table = SweepTable::default();
    for regime in regimes {
        match &regime.dist {
            Some(dist) => {
                // One policy per seed, evaluated across the whole grid.
                let policies: Vec<(u64, P)> = seeds
                    .iter()
                    .map(|&s| train(dist, s).map(|p| (s, p)))
                    .collect::<Result<_>>()?;
                for &d_r in dr_grid {
                    let mut groups: Vec<Vec<EpisodeLog>> = Vec::new();
                    for (seed, policy) in &policies {
                        groups.push(evaluate(policy, d_r, *seed)?);
                    }
                    let label = format!("{}@dr{}", regime.label, d_r);
                    let refs: Vec<Vec<&EpisodeLog>> =
                        groups.iter().map(|g| g.iter().collect()).collect();
                    let report = compute_metrics_grouped(&label, &refs);
                    table.cells.push(SweepCell {
                        regime: regime.label.clone(),
                        d_r,
                        report,
                        holds_up: None,
                    });
                }
            }
            None => {
                // Matching: train at the evaluation delay itself.
                for &d_r in dr_grid {
                    let mut groups: Vec<Vec<EpisodeLog>> = Vec::new();
                    for &seed in seeds {
                        let policy = train(&ReactionDelayDist::fixed(d_r), seed)?;
                        groups.push(evaluate(&policy, d_r, seed)?);
                    }
                    let label = format!("matching@dr{d_r}");
                    let refs: Vec<Vec<&EpisodeLog>> =
                        groups.iter().map(|g| g.iter().collect()).collect();
                    let report = compute_metrics_grouped(&label, &refs);
                    table.cells.push(SweepCell {
                        regime: MATCHING_REGIME.into(),
                        d_r,
                        report,
                        holds_up: None,
                    });
                }
            }
        }
    }
    table.mark();
    Ok(table)
}
