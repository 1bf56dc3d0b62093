//! File exports of episode logs.
//!
//! * `trajectory-table` writes `<stem>.trajectory.csv` (one row per policy
//!   step) and `<stem>.episodes.csv` (one row per episode; `arriving_time`
//!   is empty for failed runs).
//! * `metrics-table` writes `<stem>.metrics.json` holding exactly the four
//!   suite metrics.
//! * `curve-series` writes `<stem>.curve.csv`: per-episode outcome, scores
//!   and return in episode order.
//!
//! Floats are written with 9 significant digits in exponent form, so the
//! output bytes depend only on the logs.

use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Deserialize;

use super::{compute_metrics, metrics_from_summaries, score, EpisodeLog, EpisodeSummary, EvalError, Metrics};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportFormat {
    TrajectoryTable,
    MetricsTable,
    CurveSeries,
}

impl FromStr for ExportFormat {
    type Err = EvalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "trajectory-table" => Ok(ExportFormat::TrajectoryTable),
            "metrics-table" => Ok(ExportFormat::MetricsTable),
            "curve-series" => Ok(ExportFormat::CurveSeries),
            other => Err(EvalError::UnknownFormat(other.to_string())),
        }
    }
}

pub const TRAJECTORY_COLUMNS: [&str; 16] = [
    "suite",
    "policy",
    "root_seed",
    "episode",
    "step",
    "time",
    "x",
    "y",
    "heading",
    "v_l",
    "v_w",
    "reward_ego",
    "reward_social",
    "reward_goal",
    "ego_violation",
    "social_violations",
];

pub const EPISODE_COLUMNS: [&str; 9] = [
    "suite",
    "policy",
    "root_seed",
    "episode",
    "outcome",
    "steps",
    "ego_violation_steps",
    "social_violation_steps",
    "arriving_time",
];

pub const CURVE_COLUMNS: [&str; 7] = [
    "episode",
    "outcome",
    "steps",
    "arriving_time",
    "ego_score",
    "social_score",
    "return",
];

pub fn fmt_float(v: f64) -> String {
    format!("{v:.8e}")
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_float).unwrap_or_default()
}

pub fn write_trajectory_table(logs: &[EpisodeLog], path: &Path) -> Result<(), EvalError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(TRAJECTORY_COLUMNS)?;
    for log in logs {
        for r in &log.records {
            w.write_record([
                log.suite.clone(),
                log.policy.clone(),
                log.root_seed.to_string(),
                log.episode.to_string(),
                r.step.to_string(),
                fmt_float(r.time),
                fmt_float(r.pose.position.x),
                fmt_float(r.pose.position.y),
                fmt_float(r.pose.heading),
                fmt_float(r.twist.linear),
                fmt_float(r.twist.angular),
                fmt_float(r.reward.ego),
                fmt_float(r.reward.social),
                fmt_float(r.reward.goal),
                u8::from(r.ego_violation).to_string(),
                r.social_violations.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_episode_table(logs: &[EpisodeLog], path: &Path) -> Result<(), EvalError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(EPISODE_COLUMNS)?;
    for log in logs {
        w.write_record([
            log.suite.clone(),
            log.policy.clone(),
            log.root_seed.to_string(),
            log.episode.to_string(),
            log.outcome.to_string(),
            log.records.len().to_string(),
            log.ego_violation_steps().to_string(),
            log.social_violation_steps().to_string(),
            fmt_opt(log.arriving_time),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_metrics(metrics: &Metrics, path: &Path) -> Result<(), EvalError> {
    let mut s = serde_json::to_string_pretty(metrics)?;
    s.push('\n');
    fs::write(path, s)?;
    Ok(())
}

pub fn write_curve_series(logs: &[EpisodeLog], path: &Path) -> Result<(), EvalError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(CURVE_COLUMNS)?;
    for log in logs {
        let n = log.records.len();
        let ret: f64 = log.records.iter().map(|r| r.reward.total()).sum();
        w.write_record([
            log.episode.to_string(),
            log.outcome.to_string(),
            n.to_string(),
            fmt_opt(log.arriving_time),
            fmt_float(score(log.ego_violation_steps(), n)),
            fmt_float(score(log.social_violation_steps(), n)),
            fmt_float(ret),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Writes `format` for `logs` into `dir`, naming files after `stem`, and
/// returns the paths written.
pub fn export(logs: &[EpisodeLog], format: ExportFormat, dir: &Path, stem: &str) -> Result<Vec<PathBuf>, EvalError> {
    fs::create_dir_all(dir)?;
    let path = |suffix: &str| dir.join(format!("{stem}.{suffix}"));
    Ok(match format {
        ExportFormat::TrajectoryTable => {
            let (t, e) = (path("trajectory.csv"), path("episodes.csv"));
            write_trajectory_table(logs, &t)?;
            write_episode_table(logs, &e)?;
            vec![t, e]
        }
        ExportFormat::MetricsTable => {
            let p = path("metrics.json");
            write_metrics(&compute_metrics(logs)?, &p)?;
            vec![p]
        }
        ExportFormat::CurveSeries => {
            let p = path("curve.csv");
            write_curve_series(logs, &p)?;
            vec![p]
        }
    })
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct TrajectoryRow {
    pub suite: String,
    pub policy: String,
    pub root_seed: u64,
    pub episode: u64,
    pub step: usize,
    pub time: f64,
    pub x: f64,
    pub y: f64,
    pub heading: f64,
    pub v_l: f64,
    pub v_w: f64,
    pub reward_ego: f64,
    pub reward_social: f64,
    pub reward_goal: f64,
    pub ego_violation: u8,
    pub social_violations: usize,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct EpisodeRow {
    pub suite: String,
    pub policy: String,
    pub root_seed: u64,
    pub episode: u64,
    pub outcome: String,
    pub steps: usize,
    pub ego_violation_steps: usize,
    pub social_violation_steps: usize,
    pub arriving_time: Option<f64>,
}

fn read_rows<T: for<'de> Deserialize<'de>>(path: &Path, columns: &[&str]) -> Result<Vec<T>, EvalError> {
    let mut r = csv::Reader::from_path(path)?;
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header != columns {
        return Err(EvalError::Parse {
            file: path.display().to_string(),
            message: format!("unexpected header {header:?}"),
        });
    }
    Ok(r.deserialize().collect::<Result<Vec<T>, _>>()?)
}

pub fn read_trajectory_table(path: &Path) -> Result<Vec<TrajectoryRow>, EvalError> {
    read_rows(path, &TRAJECTORY_COLUMNS)
}

pub fn read_episode_table(path: &Path) -> Result<Vec<EpisodeRow>, EvalError> {
    read_rows(path, &EPISODE_COLUMNS)
}

/// Recomputes suite metrics from exported tables alone: violation counts
/// from the per-step rows, arrival times from the episode rows.
pub fn metrics_from_tables(traj: &[TrajectoryRow], episodes: &[EpisodeRow]) -> Result<Metrics, EvalError> {
    let summaries: Vec<EpisodeSummary> = episodes
        .iter()
        .map(|e| {
            let rows = traj.iter().filter(|r| r.episode == e.episode && r.root_seed == e.root_seed);
            let (mut n, mut k, mut m) = (0, 0, 0);
            for r in rows {
                n += 1;
                k += usize::from(r.ego_violation != 0);
                m += usize::from(r.social_violations > 0);
            }
            EpisodeSummary {
                steps: n,
                ego_violation_steps: k,
                social_violation_steps: m,
                arriving_time: e.arriving_time,
            }
        })
        .collect();
    metrics_from_summaries(&summaries)
}
