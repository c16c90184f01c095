//! UAV-count sweeps over one base scenario.

use rayon::prelude::*;
use serde::Serialize;

use crate::config::ScenarioConfig;
use crate::error::{Error, Result};
use crate::metrics::TickMetrics;
use crate::orchestrator::run;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepEntry {
    pub uav_count: usize,
    /// mean over the final 10% of ticks
    pub steady: TickMetrics,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub entries: Vec<SweepEntry>,
}

/// Runs `base` once per UAV count, in parallel. Every run keeps the base
/// seed, so user placement is identical across counts.
pub fn run_sweep(base: &ScenarioConfig, uav_counts: &[usize]) -> Result<SweepResult> {
    if uav_counts.is_empty() {
        return Err(Error::InvalidConfig("sweep needs at least one UAV count".into()));
    }
    if uav_counts.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidConfig("sweep UAV counts must be strictly ascending".into()));
    }
    if base.uav_region.is_none() {
        return Err(Error::InvalidConfig("sweeps need `uav_region` start positions".into()));
    }
    let entries = uav_counts
        .par_iter()
        .map(|&count| {
            let cfg = ScenarioConfig { uav_count: count, ..base.clone() };
            let out = run(&cfg)?;
            Ok(SweepEntry { uav_count: count, steady: out.steady_state() })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepResult { entries })
}

/// Parses `A..B` (inclusive) or a single count.
pub fn parse_count_range(text: &str) -> Option<Vec<usize>> {
    match text.split_once("..") {
        Some((a, b)) => {
            let a: usize = a.trim().parse().ok()?;
            let b: usize = b.trim().trim_start_matches('=').parse().ok()?;
            (a <= b).then(|| (a..=b).collect())
        }
        None => text.trim().parse().ok().map(|n| vec![n]),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranges_parse_inclusive() {
        assert_eq!(parse_count_range("6..9"), Some(vec![6, 7, 8, 9]));
        assert_eq!(parse_count_range("6..=7"), Some(vec![6, 7]));
        assert_eq!(parse_count_range("4"), Some(vec![4]));
        assert_eq!(parse_count_range("9..6"), None);
        assert_eq!(parse_count_range("x..6"), None);
    }
}
