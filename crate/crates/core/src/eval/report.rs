//! Metric tables (CSV, markdown) and trajectory plot data.

use super::{EpisodeLog, MetricsReport};
use crate::error::Result;
use std::fmt::Write as _;
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Markdown,
    PlotData,
}

impl ReportFormat {
    pub fn parse(s: &str) -> Option<ReportFormat> {
        match s {
            "csv" => Some(ReportFormat::Csv),
            "markdown" | "md" => Some(ReportFormat::Markdown),
            "plot-data" | "plot_data" => Some(ReportFormat::PlotData),
            _ => None,
        }
    }
}

const COLUMNS: &[&str] = &[
    "label",
    "success_mean",
    "success_std",
    "noti_freq_mean",
    "noti_freq_std",
    "follow_through_mean",
    "follow_through_std",
    "long_noti_mean",
    "long_noti_std",
    "enter_danger_mean",
    "enter_danger_std",
    "return_mean",
    "return_std",
    "episodes",
    "groups",
];

fn row_values(r: &MetricsReport) -> Vec<String> {
    let stat = |s: Option<&super::Stat>| -> (String, String) {
        match s {
            Some(s) => (format!("{:.4}", s.mean), format!("{:.4}", s.std)),
            None => (String::new(), String::new()),
        }
    };
    let (fm, fs) = stat(r.follow_through_rate.as_ref());
    let (lm, ls) = stat(r.long_notification_rate.as_ref());
    let (dm, ds) = stat(r.enter_danger_rate.as_ref());
    vec![
        r.label.clone(),
        format!("{:.4}", r.success_rate.mean),
        format!("{:.4}", r.success_rate.std),
        format!("{:.4}", r.notification_frequency.mean),
        format!("{:.4}", r.notification_frequency.std),
        fm,
        fs,
        lm,
        ls,
        dm,
        ds,
        format!("{:.3}", r.mean_return.mean),
        format!("{:.3}", r.mean_return.std),
        r.episodes.to_string(),
        r.groups.to_string(),
    ]
}

pub fn render_csv(reports: &[MetricsReport]) -> String {
    let mut out = String::new();
    out.push_str(&COLUMNS.join(","));
    out.push('\n');
    for r in reports {
        out.push_str(&row_values(r).join(","));
        out.push('\n');
    }
    out
}

pub fn render_markdown(reports: &[MetricsReport]) -> String {
    let mut out = String::new();
    let header = [
        "policy",
        "success",
        "noti. freq.",
        "follow-through",
        "long noti.",
        "enter danger",
    ];
    writeln!(out, "| {} |", header.join(" | ")).unwrap();
    writeln!(out, "|{}|", vec!["---"; header.len()].join("|")).unwrap();
    for r in reports {
        let pm = |s: &super::Stat| format!("{:.2} ± {:.2}", s.mean, s.std);
        let opt = |s: &Option<super::Stat>| s.as_ref().map(&pm).unwrap_or_else(|| "N/A".into());
        writeln!(
            out,
            "| {} | {} | {} | {} | {} | {} |",
            r.label,
            pm(&r.success_rate),
            pm(&r.notification_frequency),
            opt(&r.follow_through_rate),
            opt(&r.long_notification_rate),
            opt(&r.enter_danger_rate),
        )
        .unwrap();
    }
    out
}

/// Per-tick trajectory series with event markers: `notify_start` where a
/// notification begins, `follow_through` on reaction ticks, `conveying`
/// while an utterance is being spoken, `none` otherwise.
pub fn render_plot_data(logs: &[EpisodeLog]) -> String {
    let mut out = String::from("episode,t,x,y,event\n");
    for (e, log) in logs.iter().enumerate() {
        for tick in &log.ticks {
            let t = tick.t.0;
            let event = if tick.notification.is_notify() {
                "notify_start"
            } else if tick.reacting {
                "follow_through"
            } else if log.notifications.iter().any(|n| {
                let end = n.truncated_at.map(|tt| tt.0).unwrap_or(n.start.0 + n.l);
                n.start.0 <= t && t < end
            }) {
                "conveying"
            } else {
                "none"
            };
            writeln!(
                out,
                "{e},{t},{:.4},{:.4},{event}",
                tick.position.0, tick.position.1
            )
            .unwrap();
        }
    }
    out
}

/// Writes a report file in the requested format; plot data renders raw logs.
pub fn emit_report(
    reports: &[MetricsReport],
    logs: &[EpisodeLog],
    format: ReportFormat,
    path: &Path,
) -> Result<()> {
    let content = match format {
        ReportFormat::Csv => render_csv(reports),
        ReportFormat::Markdown => render_markdown(reports),
        ReportFormat::PlotData => render_plot_data(logs),
    };
    std::fs::write(path, content)?;
    Ok(())
}
