//! Per-tick, per-class service aggregates.

use serde::Serialize;

use crate::model::{UavState, UserClass, UserState};
use crate::orchestrator::WorldState;
use crate::radio::p0_objective;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct ClassMetrics {
    /// percent of the class with a serving UAV
    pub served_pct: f64,
    /// bits/s, averaged over every user of the class (unserved count as 0)
    pub mean_rate: f64,
    /// percent of the class served at or above target
    pub fulfilled_pct: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct TickMetrics {
    pub time: f64,
    pub premium: ClassMetrics,
    pub regular: ClassMetrics,
    pub all: ClassMetrics,
    /// bits/s
    pub p0_objective: f64,
    /// distinct channels used by alive UAVs
    pub active_channels: usize,
}

fn class_metrics<'a>(users: impl Iterator<Item = &'a UserState>) -> ClassMetrics {
    let (mut n, mut served, mut fulfilled, mut rate_sum) = (0usize, 0usize, 0usize, 0.0);
    for u in users {
        n += 1;
        if u.serving_uav.is_some() {
            served += 1;
            rate_sum += u.achieved_rate;
            if u.achieved_rate >= u.target_rate {
                fulfilled += 1;
            }
        }
    }
    if n == 0 {
        return ClassMetrics::default();
    }
    let pct = |k: usize| 100.0 * k as f64 / n as f64;
    ClassMetrics { served_pct: pct(served), mean_rate: rate_sum / n as f64, fulfilled_pct: pct(fulfilled) }
}

pub fn metrics_for(time: f64, users: &[UserState], uavs: &[UavState]) -> TickMetrics {
    let mut channels: Vec<usize> = uavs.iter().filter(|u| u.alive).map(|u| u.channel).collect();
    channels.sort_unstable();
    channels.dedup();
    TickMetrics {
        time,
        premium: class_metrics(users.iter().filter(|u| u.klass == UserClass::Premium)),
        regular: class_metrics(users.iter().filter(|u| u.klass == UserClass::Regular)),
        all: class_metrics(users.iter()),
        p0_objective: p0_objective(users),
        active_channels: channels.len(),
    }
}

pub fn compute_metrics(world: &WorldState) -> TickMetrics {
    metrics_for(world.time, &world.users, &world.uavs)
}

impl ClassMetrics {
    fn mean(items: &[ClassMetrics]) -> ClassMetrics {
        let n = items.len().max(1) as f64;
        ClassMetrics {
            served_pct: items.iter().map(|c| c.served_pct).sum::<f64>() / n,
            mean_rate: items.iter().map(|c| c.mean_rate).sum::<f64>() / n,
            fulfilled_pct: items.iter().map(|c| c.fulfilled_pct).sum::<f64>() / n,
        }
    }
}

impl TickMetrics {
    /// Field-wise mean over `window`; `time` is that of the last entry and
    /// the channel count is rounded.
    pub fn mean(window: &[TickMetrics]) -> TickMetrics {
        let Some(last) = window.last() else { return TickMetrics::default() };
        let n = window.len() as f64;
        let pick = |f: fn(&TickMetrics) -> ClassMetrics| {
            ClassMetrics::mean(&window.iter().map(f).collect::<Vec<_>>())
        };
        TickMetrics {
            time: last.time,
            premium: pick(|m| m.premium),
            regular: pick(|m| m.regular),
            all: pick(|m| m.all),
            p0_objective: window.iter().map(|m| m.p0_objective).sum::<f64>() / n,
            active_channels: (window.iter().map(|m| m.active_channels as f64).sum::<f64>() / n).round()
                as usize,
        }
    }
}
