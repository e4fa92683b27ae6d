//! Artifact encoders and loaders: metrics CSV, evaluation reports, sweep
//! tables, CDF tables, per-slot traces, channel snapshots, and SVG figures.
//!
//! Every file embeds provenance comment lines (`# key=value`) carrying the
//! config hash, seed, and code version. Floats are written with Rust's
//! shortest round-trip formatting, so identical data produces byte-identical
//! files and loading a CSV recovers the exact values.

use super::metrics::empirical_cdf;
use super::svg::{render, PlotStyle, Series};
use super::{EvalEpisode, EvalReport, HarnessError, SweepResult, TraceRow, TrainResult};
use crate::channel::ChannelSnapshot;
use crate::config::Config;
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

fn malformed(path: &Path, reason: impl Into<String>) -> HarnessError {
    HarnessError::Malformed {
        path: path.display().to_string(),
        reason: reason.into(),
    }
}

fn provenance(out: &mut String, kind: &str, pairs: &[(&str, String)]) {
    let _ = writeln!(out, "# antijam {kind} v1");
    for (k, v) in pairs {
        let _ = writeln!(out, "# {k}={v}");
    }
}

/// Comment metadata plus data lines of a CSV document.
fn split_csv(text: &str) -> (BTreeMap<String, String>, Vec<&str>) {
    let mut meta = BTreeMap::new();
    let mut rows = Vec::new();
    for line in text.lines() {
        if let Some(comment) = line.strip_prefix('#') {
            if let Some((k, v)) = comment.trim().split_once('=') {
                meta.insert(k.trim().to_string(), v.trim().to_string());
            }
        } else if !line.trim().is_empty() {
            rows.push(line);
        }
    }
    (meta, rows)
}

fn parse_fields(path: &Path, line: &str, expected: usize) -> Result<Vec<f64>, HarnessError> {
    let fields: Vec<&str> = line.split(',').collect();
    if fields.len() != expected {
        return Err(malformed(path, format!("expected {expected} fields, got {}", fields.len())));
    }
    fields
        .iter()
        .map(|f| f.parse::<f64>().map_err(|e| malformed(path, format!("{f:?}: {e}"))))
        .collect()
}

// ---------------------------------------------------------------------------
// Training metrics
// ---------------------------------------------------------------------------

/// Per-episode training metrics, the per-episode/average reward record.
pub fn render_train_metrics_csv(result: &TrainResult, cfg: &Config) -> String {
    let mut out = String::new();
    provenance(
        &mut out,
        "train-metrics",
        &[
            ("algorithm", result.algorithm.name().to_string()),
            ("seed", result.seed.to_string()),
            ("config_hash", cfg.content_hash()),
            ("code_version", env!("CARGO_PKG_VERSION").to_string()),
        ],
    );
    out.push_str("episode,reward,avg_reward,critic_loss\n");
    for (i, ((r, a), l)) in result
        .episode_rewards
        .iter()
        .zip(&result.average_rewards)
        .zip(&result.critic_losses)
        .enumerate()
    {
        let _ = writeln!(out, "{},{r},{a},{l}", i + 1);
    }
    out
}

pub fn write_train_metrics_csv(result: &TrainResult, cfg: &Config, path: &Path) -> Result<(), HarnessError> {
    std::fs::write(path, render_train_metrics_csv(result, cfg))?;
    Ok(())
}

/// One loaded training-metrics row.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MetricsRow {
    pub episode: u64,
    pub reward: f64,
    pub avg_reward: f64,
    pub critic_loss: f64,
}

pub fn load_train_metrics_csv(path: &Path) -> Result<(BTreeMap<String, String>, Vec<MetricsRow>), HarnessError> {
    let text = std::fs::read_to_string(path)?;
    let (meta, lines) = split_csv(&text);
    let mut rows = Vec::new();
    for line in lines.iter().skip(1) {
        let f = parse_fields(path, line, 4)?;
        rows.push(MetricsRow {
            episode: f[0] as u64,
            reward: f[1],
            avg_reward: f[2],
            critic_loss: f[3],
        });
    }
    Ok((meta, rows))
}

// ---------------------------------------------------------------------------
// Evaluation reports
// ---------------------------------------------------------------------------

pub fn write_eval_report_json(report: &EvalReport, path: &Path) -> Result<(), HarnessError> {
    let json = serde_json::to_string_pretty(report).expect("report serialization cannot fail");
    std::fs::write(path, json)?;
    Ok(())
}

pub fn load_eval_report_json(path: &Path) -> Result<EvalReport, HarnessError> {
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| malformed(path, e.to_string()))
}

pub fn render_eval_episodes_csv(report: &EvalReport) -> String {
    let mut out = String::new();
    provenance(
        &mut out,
        "eval-episodes",
        &[
            ("algorithm", report.algorithm.clone()),
            ("seed", report.seed.to_string()),
            ("config_hash", report.config_hash.clone()),
            ("code_version", report.code_version.clone()),
        ],
    );
    out.push_str("episode,cumulative_rate,finishing_distance,total_reward\n");
    for e in &report.episodes {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            e.episode, e.cumulative_rate, e.finishing_distance, e.total_reward
        );
    }
    out
}

pub fn write_eval_episodes_csv(report: &EvalReport, path: &Path) -> Result<(), HarnessError> {
    std::fs::write(path, render_eval_episodes_csv(report))?;
    Ok(())
}

pub fn load_eval_episodes_csv(
    path: &Path,
) -> Result<(BTreeMap<String, String>, Vec<EvalEpisode>), HarnessError> {
    let text = std::fs::read_to_string(path)?;
    let (meta, lines) = split_csv(&text);
    let mut rows = Vec::new();
    for line in lines.iter().skip(1) {
        let f = parse_fields(path, line, 4)?;
        rows.push(EvalEpisode {
            episode: f[0] as u64,
            cumulative_rate: f[1],
            finishing_distance: f[2],
            total_reward: f[3],
        });
    }
    Ok((meta, rows))
}

// ---------------------------------------------------------------------------
// Sweeps
// ---------------------------------------------------------------------------

pub fn render_sweep_csv(sweep: &SweepResult) -> String {
    let mut out = String::new();
    provenance(
        &mut out,
        "sweep",
        &[
            ("algorithm", sweep.algorithm.clone()),
            ("seed", sweep.seed.to_string()),
            ("code_version", env!("CARGO_PKG_VERSION").to_string()),
        ],
    );
    out.push_str("duration_s,mean_rate,std_rate,mean_finishing_distance,std_finishing_distance\n");
    for r in &sweep.rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            r.duration_s, r.mean_rate, r.std_rate, r.mean_finishing_distance, r.std_finishing_distance
        );
    }
    out
}

pub fn write_sweep_csv(sweep: &SweepResult, path: &Path) -> Result<(), HarnessError> {
    std::fs::write(path, render_sweep_csv(sweep))?;
    Ok(())
}

/// Per-episode sweep detail (`duration` prepended to each eval row), the
/// source for rate-versus-distance scatter plots.
pub fn render_sweep_detail_csv(sweep: &SweepResult) -> String {
    let mut out = String::new();
    provenance(
        &mut out,
        "sweep-detail",
        &[
            ("algorithm", sweep.algorithm.clone()),
            ("seed", sweep.seed.to_string()),
            ("code_version", env!("CARGO_PKG_VERSION").to_string()),
        ],
    );
    out.push_str("duration_s,episode,cumulative_rate,finishing_distance,total_reward\n");
    for (d, e) in &sweep.detail {
        let _ = writeln!(
            out,
            "{d},{},{},{},{}",
            e.episode, e.cumulative_rate, e.finishing_distance, e.total_reward
        );
    }
    out
}

pub fn write_sweep_detail_csv(sweep: &SweepResult, path: &Path) -> Result<(), HarnessError> {
    std::fs::write(path, render_sweep_detail_csv(sweep))?;
    Ok(())
}

pub struct LoadedSweep {
    pub meta: BTreeMap<String, String>,
    pub rows: Vec<super::SweepRow>,
}

pub fn load_sweep_csv(path: &Path) -> Result<LoadedSweep, HarnessError> {
    let text = std::fs::read_to_string(path)?;
    let (meta, lines) = split_csv(&text);
    let mut rows = Vec::new();
    for line in lines.iter().skip(1) {
        let f = parse_fields(path, line, 5)?;
        rows.push(super::SweepRow {
            duration_s: f[0],
            mean_rate: f[1],
            std_rate: f[2],
            mean_finishing_distance: f[3],
            std_finishing_distance: f[4],
        });
    }
    Ok(LoadedSweep { meta, rows })
}

pub fn load_sweep_detail_csv(
    path: &Path,
) -> Result<(BTreeMap<String, String>, Vec<(f64, EvalEpisode)>), HarnessError> {
    let text = std::fs::read_to_string(path)?;
    let (meta, lines) = split_csv(&text);
    let mut rows = Vec::new();
    for line in lines.iter().skip(1) {
        let f = parse_fields(path, line, 5)?;
        rows.push((
            f[0],
            EvalEpisode {
                episode: f[1] as u64,
                cumulative_rate: f[2],
                finishing_distance: f[3],
                total_reward: f[4],
            },
        ));
    }
    Ok((meta, rows))
}

// ---------------------------------------------------------------------------
// CDF, trace, snapshot
// ---------------------------------------------------------------------------

pub fn render_cdf_csv(values: &[f64], label: &str) -> Result<String, HarnessError> {
    let cdf = empirical_cdf(values).map_err(|e| HarnessError::Malformed {
        path: label.to_string(),
        reason: e.to_string(),
    })?;
    let mut out = String::new();
    provenance(&mut out, "cdf", &[("label", label.to_string())]);
    out.push_str("value,probability\n");
    for (v, p) in cdf {
        let _ = writeln!(out, "{v},{p}");
    }
    Ok(out)
}

pub fn write_trace_csv(rows: &[TraceRow], path: &Path) -> Result<(), HarnessError> {
    let mut out = String::new();
    provenance(&mut out, "trace", &[]);
    out.push_str("t,x,y,z,vx,vy,vz,sinr,rate,reward,goal_distance\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{}",
            r.t, r.x, r.y, r.z, r.vx, r.vy, r.vz, r.sinr, r.rate, r.reward, r.goal_distance
        );
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Dump every complex gain of a snapshot as re/im pairs, one element per row.
pub fn render_snapshot_csv(snapshot: &ChannelSnapshot) -> String {
    let mut out = String::new();
    provenance(&mut out, "snapshot", &[("slot", snapshot.slot.to_string())]);
    out.push_str("link,element,re,im\n");
    let _ = writeln!(out, "bs_uav,0,{},{}", snapshot.bs_uav.re, snapshot.bs_uav.im);
    let _ = writeln!(out, "jammer_uav,0,{},{}", snapshot.jammer_uav.re, snapshot.jammer_uav.im);
    for (name, vec) in [
        ("bs_ris", &snapshot.bs_ris),
        ("jammer_ris", &snapshot.jammer_ris),
        ("ris_uav", &snapshot.ris_uav),
    ] {
        for (i, c) in vec.iter().enumerate() {
            let _ = writeln!(out, "{name},{i},{},{}", c.re, c.im);
        }
    }
    out
}

pub fn write_snapshot_csv(snapshot: &ChannelSnapshot, path: &Path) -> Result<(), HarnessError> {
    std::fs::write(path, render_snapshot_csv(snapshot))?;
    Ok(())
}

// ---------------------------------------------------------------------------
// Figures
// ---------------------------------------------------------------------------

/// Average-reward learning curves, one polyline per algorithm.
pub fn reward_curves_svg(curves: &[(String, Vec<MetricsRow>)]) -> String {
    let series: Vec<Series> = curves
        .iter()
        .map(|(label, rows)| {
            Series::line(
                label.clone(),
                rows.iter().map(|r| (r.episode as f64, r.avg_reward)).collect(),
            )
        })
        .collect();
    render("Average reward per training episode", "episode", "average reward", &series, PlotStyle::Lines)
}

/// Mean received rate against mission duration, with sample-σ error bars.
pub fn rate_vs_duration_svg(tables: &[(String, Vec<super::SweepRow>)]) -> String {
    let series: Vec<Series> = tables
        .iter()
        .map(|(label, rows)| Series {
            label: label.clone(),
            points: rows.iter().map(|r| (r.duration_s, r.mean_rate)).collect(),
            error: Some(rows.iter().map(|r| r.std_rate).collect()),
        })
        .collect();
    render(
        "Received data rate vs. mission duration",
        "mission duration (s)",
        "cumulative rate (bit/s/Hz)",
        &series,
        PlotStyle::Lines,
    )
}

/// Mean finishing distance against mission duration.
pub fn finishing_distance_vs_duration_svg(tables: &[(String, Vec<super::SweepRow>)]) -> String {
    let series: Vec<Series> = tables
        .iter()
        .map(|(label, rows)| Series {
            label: label.clone(),
            points: rows.iter().map(|r| (r.duration_s, r.mean_finishing_distance)).collect(),
            error: Some(rows.iter().map(|r| r.std_finishing_distance).collect()),
        })
        .collect();
    render(
        "Finishing distance vs. mission duration",
        "mission duration (s)",
        "finishing distance (m)",
        &series,
        PlotStyle::Lines,
    )
}

/// Empirical CDFs of finishing distance.
pub fn finishing_distance_cdf_svg(groups: &[(String, Vec<f64>)]) -> Result<String, HarnessError> {
    let mut series = Vec::new();
    for (label, values) in groups {
        let cdf = empirical_cdf(values).map_err(|e| HarnessError::Malformed {
            path: label.clone(),
            reason: e.to_string(),
        })?;
        series.push(Series::line(label.clone(), cdf));
    }
    Ok(render(
        "CDF of the finishing distance",
        "finishing distance (m)",
        "probability",
        &series,
        PlotStyle::Steps,
    ))
}

/// Per-episode rate against finishing distance (sweep detail scatter).
pub fn rate_vs_distance_svg(groups: &[(String, Vec<(f64, EvalEpisode)>)]) -> String {
    let series: Vec<Series> = groups
        .iter()
        .map(|(label, detail)| {
            Series::line(
                label.clone(),
                detail
                    .iter()
                    .map(|(_, e)| (e.finishing_distance, e.cumulative_rate))
                    .collect(),
            )
        })
        .collect();
    render(
        "Rate vs. distance to the destination",
        "finishing distance (m)",
        "cumulative rate (bit/s/Hz)",
        &series,
        PlotStyle::Scatter,
    )
}
