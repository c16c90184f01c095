//! CSV and JSON writers. Rates are written in Mbps with three decimals;
//! column order is fixed.

use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::metrics::{ClassMetrics, TickMetrics};
use crate::orchestrator::{FailureRecord, RunOutput, SwitchEvent, TraceRow, UserTraceRow};
use crate::sweep::SweepResult;

pub const METRICS_HEADER: &str = "time,premium_served_pct,premium_mean_mbps,premium_fulfilled_pct,\
regular_served_pct,regular_mean_mbps,regular_fulfilled_pct,\
all_served_pct,all_mean_mbps,all_fulfilled_pct,p0_objective_mbps,active_channels";

pub const TRACE_HEADER: &str = "tick,uav_id,time,x,y,z,vx,vy,channel,alive,load";

pub const USER_TRACE_HEADER: &str = "tick,time,user_id,class,serving_uav,rate_mbps,mean_rate_mbps";

fn mbps(bits: f64) -> f64 {
    bits / 1e6
}

fn class_cols(out: &mut String, c: &ClassMetrics) {
    let _ = write!(out, ",{:.3},{:.3},{:.3}", c.served_pct, mbps(c.mean_rate), c.fulfilled_pct);
}

fn metrics_row(out: &mut String, m: &TickMetrics) {
    let _ = write!(out, "{:.3}", m.time);
    for c in [&m.premium, &m.regular, &m.all] {
        class_cols(out, c);
    }
    let _ = writeln!(out, ",{:.3},{}", mbps(m.p0_objective), m.active_channels);
}

pub fn metrics_csv(metrics: &[TickMetrics]) -> String {
    let mut out = String::with_capacity(128 * (metrics.len() + 1));
    out.push_str(METRICS_HEADER);
    out.push('\n');
    for m in metrics {
        metrics_row(&mut out, m);
    }
    out
}

pub fn trace_csv(trace: &[TraceRow]) -> String {
    let mut out = String::with_capacity(80 * (trace.len() + 1));
    out.push_str(TRACE_HEADER);
    out.push('\n');
    for r in trace {
        let _ = writeln!(
            out,
            "{},{},{:.3},{:.3},{:.3},{:.3},{:.3},{:.3},{},{},{}",
            r.tick,
            r.uav_id,
            r.time,
            r.position.x,
            r.position.y,
            r.position.z,
            r.velocity.x,
            r.velocity.y,
            r.channel,
            u8::from(r.alive),
            r.load
        );
    }
    out
}

pub fn user_trace_csv(rows: &[UserTraceRow]) -> String {
    let mut out = String::with_capacity(60 * (rows.len() + 1));
    out.push_str(USER_TRACE_HEADER);
    out.push('\n');
    for r in rows {
        let serving = r.serving_uav.map(|k| k.to_string()).unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{:.3},{},{},{},{:.3},{:.3}",
            r.tick,
            r.time,
            r.user_id,
            r.klass.as_str(),
            serving,
            mbps(r.rate),
            mbps(r.mean_rate)
        );
    }
    out
}

pub fn sweep_csv(sweep: &SweepResult) -> String {
    let mut out = String::from("uav_count,");
    out.push_str(METRICS_HEADER);
    out.push('\n');
    for e in &sweep.entries {
        let _ = write!(out, "{},", e.uav_count);
        metrics_row(&mut out, &e.steady);
    }
    out
}

fn round3(x: f64) -> f64 {
    (x * 1000.0).round() / 1000.0
}

/// Class aggregates as they appear in the JSON summary.
#[derive(Debug, Clone, Serialize)]
pub struct ClassSummary {
    pub served_pct: f64,
    pub mean_rate_mbps: f64,
    pub fulfilled_pct: f64,
}

impl From<&ClassMetrics> for ClassSummary {
    fn from(c: &ClassMetrics) -> Self {
        Self {
            served_pct: round3(c.served_pct),
            mean_rate_mbps: round3(mbps(c.mean_rate)),
            fulfilled_pct: round3(c.fulfilled_pct),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct MetricsSummary {
    pub time: f64,
    pub premium: ClassSummary,
    pub regular: ClassSummary,
    pub all: ClassSummary,
    pub p0_objective_mbps: f64,
    pub active_channels: usize,
}

impl From<&TickMetrics> for MetricsSummary {
    fn from(m: &TickMetrics) -> Self {
        Self {
            time: round3(m.time),
            premium: (&m.premium).into(),
            regular: (&m.regular).into(),
            all: (&m.all).into(),
            p0_objective_mbps: round3(mbps(m.p0_objective)),
            active_channels: m.active_channels,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub scenario: String,
    pub seed: u64,
    pub ticks: usize,
    pub final_metrics: Option<MetricsSummary>,
    pub steady_state: Option<MetricsSummary>,
    pub switch_events: Vec<SwitchEvent>,
    pub failure_events: Vec<FailureRecord>,
    /// ticks with at least one alive UAV pair closer than d
    pub spacing_violation_ticks: usize,
    pub steady_state_spacing_violations: usize,
}

impl RunSummary {
    pub fn new(scenario: &str, seed: u64, out: &RunOutput) -> Self {
        Self {
            scenario: scenario.to_string(),
            seed,
            ticks: out.metrics.len(),
            final_metrics: out.metrics.last().map(Into::into),
            steady_state: (!out.metrics.is_empty()).then(|| (&out.steady_state()).into()),
            switch_events: out.switches.clone(),
            failure_events: out.failures.clone(),
            spacing_violation_ticks: out.spacing_violations.len(),
            steady_state_spacing_violations: out.steady_spacing_violations(),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("summary serializes");
        s.push('\n');
        s
    }
}

pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}

/// Writes `metrics.csv`, `trace.csv`, `summary.json` and, when recorded,
/// `user_rates.csv` into `dir`.
pub fn write_run(dir: &Path, summary: &RunSummary, out: &RunOutput) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_file(&dir.join("metrics.csv"), &metrics_csv(&out.metrics))?;
    write_file(&dir.join("trace.csv"), &trace_csv(&out.trace))?;
    write_file(&dir.join("summary.json"), &summary.to_json())?;
    if !out.user_trace.is_empty() {
        write_file(&dir.join("user_rates.csv"), &user_trace_csv(&out.user_trace))?;
    }
    Ok(())
}

pub fn write_sweep(dir: &Path, sweep: &SweepResult) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_file(&dir.join("sweep.csv"), &sweep_csv(sweep))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_series_is_header_only() {
        assert_eq!(metrics_csv(&[]), format!("{METRICS_HEADER}\n"));
        assert_eq!(trace_csv(&[]).lines().count(), 1);
    }

    #[test]
    fn one_tick_is_two_lines() {
        let mut m = TickMetrics { time: 0.1, active_channels: 2, ..Default::default() };
        m.premium.mean_rate = 191.6e6;
        m.premium.served_pct = 100.0;
        let text = metrics_csv(&[m]);
        assert_eq!(text.lines().count(), 2);
        let row = text.lines().nth(1).unwrap();
        assert_eq!(row, "0.100,100.000,191.600,0.000,0.000,0.000,0.000,0.000,0.000,0.000,0.000,2");
        assert_eq!(row.split(',').count(), METRICS_HEADER.split(',').count());
    }

    #[test]
    fn unwritable_path_is_io_error() {
        let err = write_file(Path::new("/nonexistent-dir/x/metrics.csv"), "a").unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }
}
