//! Episode counters and the collision-aware navigation metrics.
//!
//! Net collisions per episode are `max(c − a_c, 0)`, where `c` counts human
//! collisions with a person within 1 m and `a_c` the encounters the episode
//! could not avoid. The collision rate is normalized by the number of
//! human-influenced episodes and is 0 when there are none.

use std::fmt::Write as _;
use std::io::BufRead;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::planner::{EpisodeSpec, HumanInfluence};
use crate::runner::LogRecord;
use crate::sim::{Action, CollisionKind};

pub const SUCCESS_DISTANCE: f64 = 3.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub episode_id: String,
    pub c: usize,
    pub a_c: usize,
    pub d: f64,
    pub human_influenced: bool,
    pub steps: usize,
    pub stopped: bool,
}

impl EpisodeRecord {
    pub fn net_collisions(&self) -> usize {
        self.c.saturating_sub(self.a_c)
    }
}

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("no episodes to evaluate")]
    Empty,
    #[error("log line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Counters for one episode from its trajectory log (JSON lines).
pub fn record_from_log(log: impl BufRead, episode: &EpisodeSpec) -> Result<EpisodeRecord, MetricsError> {
    let mut entries = Vec::new();
    for (i, line) in log.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: LogRecord = serde_json::from_str(&line).map_err(|e| MetricsError::Malformed {
            line: i + 1,
            message: e.to_string(),
        })?;
        entries.push(rec);
    }
    Ok(record_from_entries(&entries, episode))
}

/// Counters for one episode from already parsed log records.
pub fn record_from_entries(entries: &[LogRecord], episode: &EpisodeSpec) -> EpisodeRecord {
    let c = entries
        .iter()
        .filter(|r| {
            r.collision
                .as_ref()
                .is_some_and(|ev| ev.kind == CollisionKind::Human && ev.human_within_1m)
        })
        .count();
    let last = entries.last();
    let final_position = last.map_or(episode.start.position, |r| r.post_pose.position);
    EpisodeRecord {
        episode_id: episode.id.clone(),
        c,
        a_c: episode.unavoidable_encounters,
        d: final_position.distance(&episode.goal),
        human_influenced: episode.human_influence == HumanInfluence::Direct,
        steps: entries.len(),
        stopped: last.is_some_and(|r| r.action == Action::Stop),
    }
}

pub fn is_success(record: &EpisodeRecord, threshold: f64) -> bool {
    record.stopped && record.d <= threshold && record.net_collisions() == 0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    #[serde(rename = "L")]
    pub l: usize,
    pub beta: f64,
    #[serde(rename = "TCR")]
    pub tcr: f64,
    #[serde(rename = "CR")]
    pub cr: f64,
    #[serde(rename = "NE")]
    pub ne: f64,
    #[serde(rename = "SR_collision")]
    pub sr_collision: f64,
    #[serde(rename = "SR_full")]
    pub sr_full: f64,
    pub per_episode: Vec<EpisodeRecord>,
    pub notes: Vec<String>,
}

pub fn compute_metrics(records: &[EpisodeRecord]) -> Result<EvalReport, MetricsError> {
    if records.is_empty() {
        return Err(MetricsError::Empty);
    }
    let l = records.len() as f64;
    let influenced = records.iter().filter(|r| r.human_influenced).count() as f64;
    let beta = influenced / l;
    let net: Vec<usize> = records.iter().map(EpisodeRecord::net_collisions).collect();
    let tcr = net.iter().sum::<usize>() as f64 / l;
    let cr = if beta == 0.0 {
        0.0
    } else {
        net.iter().map(|n| (*n).min(1)).sum::<usize>() as f64 / (beta * l)
    };
    let ne = records.iter().map(|r| r.d).sum::<f64>() / l;
    let sr_collision = net.iter().filter(|n| **n == 0).count() as f64 / l;
    let sr_full = records
        .iter()
        .filter(|r| is_success(r, SUCCESS_DISTANCE))
        .count() as f64
        / l;
    Ok(EvalReport {
        l: records.len(),
        beta,
        tcr,
        cr,
        ne,
        sr_collision,
        sr_full,
        per_episode: records.to_vec(),
        notes: vec![
            "net collisions per episode are clamped at zero".into(),
            "CR is 0 when no episode is human-influenced".into(),
        ],
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub split: String,
    pub agent: String,
    #[serde(rename = "L")]
    pub l: usize,
    #[serde(rename = "NE")]
    pub ne: f64,
    #[serde(rename = "TCR")]
    pub tcr: f64,
    #[serde(rename = "CR")]
    pub cr: f64,
    #[serde(rename = "SR_collision")]
    pub sr_collision: f64,
    #[serde(rename = "SR_full")]
    pub sr_full: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonTable {
    pub rows: Vec<ReportRow>,
}

/// One row per (split, agent) report, ordered by split then agent name.
pub fn aggregate_report(
    reports: &[(String, String, EvalReport)],
) -> Result<ComparisonTable, MetricsError> {
    if reports.is_empty() {
        return Err(MetricsError::Empty);
    }
    let mut rows: Vec<ReportRow> = reports
        .iter()
        .map(|(split, agent, r)| ReportRow {
            split: split.clone(),
            agent: agent.clone(),
            l: r.l,
            ne: r.ne,
            tcr: r.tcr,
            cr: r.cr,
            sr_collision: r.sr_collision,
            sr_full: r.sr_full,
        })
        .collect();
    rows.sort_by(|a, b| a.split.cmp(&b.split).then_with(|| a.agent.cmp(&b.agent)));
    Ok(ComparisonTable { rows })
}

impl ComparisonTable {
    pub fn to_text(&self) -> String {
        let header = ["split", "agent", "L", "NE", "TCR", "CR", "SR_col", "SR_full"];
        let body: Vec<[String; 8]> = self
            .rows
            .iter()
            .map(|r| {
                [
                    r.split.clone(),
                    r.agent.clone(),
                    r.l.to_string(),
                    format!("{:.2}", r.ne),
                    format!("{:.3}", r.tcr),
                    format!("{:.3}", r.cr),
                    format!("{:.3}", r.sr_collision),
                    format!("{:.3}", r.sr_full),
                ]
            })
            .collect();
        let mut widths = header.map(str::len);
        for row in &body {
            for (w, cell) in widths.iter_mut().zip(row) {
                *w = (*w).max(cell.len());
            }
        }
        let mut out = String::new();
        let mut line = |cells: Vec<&str>| {
            let parts: Vec<String> = cells
                .iter()
                .zip(widths)
                .enumerate()
                .map(|(i, (c, w))| if i < 2 { format!("{c:<w$}") } else { format!("{c:>w$}") })
                .collect();
            let _ = writeln!(out, "{}", parts.join("  ").trim_end());
        };
        line(header.to_vec());
        for row in &body {
            line(row.iter().map(String::as_str).collect());
        }
        out
    }
}

impl EvalReport {
    pub fn to_text(&self, split: &str, agent: &str) -> String {
        ComparisonTable {
            rows: aggregate_report(&[(split.into(), agent.into(), self.clone())])
                .map(|t| t.rows)
                .unwrap_or_default(),
        }
        .to_text()
    }
}
