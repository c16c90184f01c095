//! Scenario files.
//!
//! A scenario is one TOML document whose keys mirror [`ScenarioConfig`].
//! Unknown keys are rejected at every level. Users are listed either one by
//! one (`position`) or as uniformly sampled groups (`region` + `count`); the
//! same goes for UAV start positions (`uav_initial_positions` or
//! `uav_region`). Sampling draws from the scenario seed: users first, in
//! file order, then UAVs.

use std::path::Path;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ControlGains, RadioParams, UserClass, UserState, Vec3};

/// Axis-aligned rectangle on the ground, meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Region {
    pub x: [f64; 2],
    pub y: [f64; 2],
}

impl Region {
    pub fn new(x0: f64, x1: f64, y0: f64, y1: f64) -> Self {
        Self { x: [x0, x1], y: [y0, y1] }
    }

    fn validate(&self, what: &str) -> Result<()> {
        let ok = self.x.iter().chain(&self.y).all(|v| v.is_finite())
            && self.x[1] > self.x[0]
            && self.y[1] > self.y[0];
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!("{what}: region must have positive, finite extent")))
        }
    }

    pub fn sample(&self, rng: &mut ChaCha8Rng) -> (f64, f64) {
        let x = rng.gen_range(self.x[0]..self.x[1]);
        let y = rng.gen_range(self.y[0]..self.y[1]);
        (x, y)
    }
}

/// One `[[users]]` entry: a single placed user or a sampled group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UserSpec {
    pub klass: UserClass,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub position: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub region: Option<Region>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub count: Option<usize>,
}

impl UserSpec {
    pub fn at(x: f64, y: f64, klass: UserClass) -> Self {
        Self { klass, position: Some([x, y]), region: None, count: None }
    }

    pub fn group(region: Region, count: usize, klass: UserClass) -> Self {
        Self { klass, position: None, region: Some(region), count: Some(count) }
    }

    fn validate(&self, idx: usize) -> Result<()> {
        let what = format!("users[{idx}]");
        match (&self.position, &self.region, self.count) {
            (Some(p), None, None) => {
                if p.iter().all(|v| v.is_finite()) {
                    Ok(())
                } else {
                    Err(Error::InvalidConfig(format!("{what}: position must be finite")))
                }
            }
            (None, Some(r), Some(_)) => r.validate(&what),
            _ => {
                Err(Error::InvalidConfig(format!("{what}: give either `position` or `region` with `count`")))
            }
        }
    }

    fn user_count(&self) -> usize {
        if self.position.is_some() {
            1
        } else {
            self.count.unwrap_or(0)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FailureEvent {
    /// s
    pub time: f64,
    /// share of currently alive UAVs that fail, in [0, 1]
    pub fraction: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControllerMode {
    #[default]
    QosDriven,
    FlockingBaseline,
}

fn default_premium_rate() -> f64 {
    300e6
}

fn default_regular_rate() -> f64 {
    100e6
}

fn default_height() -> f64 {
    100.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub name: String,
    pub seed: u64,
    /// simulated horizon, s
    pub duration: f64,
    /// fixed UAV altitude, m
    #[serde(default = "default_height")]
    pub height: f64,
    #[serde(default)]
    pub controller_mode: ControllerMode,
    /// premium target, bits/s
    #[serde(default = "default_premium_rate")]
    pub premium_rate: f64,
    /// regular target, bits/s
    #[serde(default = "default_regular_rate")]
    pub regular_rate: f64,
    pub uav_count: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub uav_initial_positions: Option<Vec<[f64; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub uav_region: Option<Region>,
    #[serde(default)]
    pub failure_events: Vec<FailureEvent>,
    #[serde(default)]
    pub radio: RadioParams,
    #[serde(default)]
    pub gains: ControlGains,
    pub users: Vec<UserSpec>,
}

impl ScenarioConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: ScenarioConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("scenario config is always representable as TOML")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if !(self.duration.is_finite() && self.duration >= 0.0) {
            return bad(format!("duration must be finite and >= 0 (got {})", self.duration));
        }
        if !(self.height.is_finite() && self.height > 0.0) {
            return bad(format!("height must be > 0 (got {})", self.height));
        }
        if !(self.premium_rate > self.regular_rate && self.regular_rate > 0.0) {
            return bad("targets require premium_rate > regular_rate > 0".into());
        }
        self.radio.validate().map_err(Error::InvalidConfig)?;
        self.gains.validate().map_err(Error::InvalidConfig)?;
        for (i, ev) in self.failure_events.iter().enumerate() {
            if !(0.0..=1.0).contains(&ev.fraction) || !ev.time.is_finite() || ev.time < 0.0 {
                return bad(format!("failure_events[{i}]: need time >= 0 and 0 <= fraction <= 1"));
            }
        }
        for (i, u) in self.users.iter().enumerate() {
            u.validate(i)?;
        }
        match (&self.uav_initial_positions, &self.uav_region) {
            (Some(p), None) => {
                if p.len() != self.uav_count {
                    return bad(format!(
                        "uav_initial_positions has {} entries but uav_count is {}",
                        p.len(),
                        self.uav_count
                    ));
                }
                if p.iter().flatten().any(|v| !v.is_finite()) {
                    return bad("uav_initial_positions must be finite".into());
                }
            }
            (None, Some(r)) => r.validate("uav_region")?,
            _ => return bad("give exactly one of `uav_initial_positions` or `uav_region`".into()),
        }
        Ok(())
    }

    pub fn target_for(&self, klass: UserClass) -> f64 {
        match klass {
            UserClass::Premium => self.premium_rate,
            UserClass::Regular => self.regular_rate,
        }
    }

    pub fn total_users(&self) -> usize {
        self.users.iter().map(UserSpec::user_count).sum()
    }

    /// Expands user entries in file order, drawing group members from `rng`.
    pub fn materialize_users(&self, rng: &mut ChaCha8Rng) -> Vec<UserState> {
        let mut users = Vec::with_capacity(self.total_users());
        for spec in &self.users {
            let target = self.target_for(spec.klass);
            if let Some([x, y]) = spec.position {
                users.push(UserState::new(users.len(), x, y, spec.klass, target));
            } else if let (Some(region), Some(n)) = (spec.region, spec.count) {
                for _ in 0..n {
                    let (x, y) = region.sample(rng);
                    users.push(UserState::new(users.len(), x, y, spec.klass, target));
                }
            }
        }
        users
    }

    pub fn materialize_uav_positions(&self, rng: &mut ChaCha8Rng) -> Vec<Vec3> {
        match (&self.uav_initial_positions, &self.uav_region) {
            (Some(p), _) => p.iter().map(|&[x, y]| Vec3::new(x, y, self.height)).collect(),
            (None, Some(region)) => (0..self.uav_count)
                .map(|_| {
                    let (x, y) = region.sample(rng);
                    Vec3::new(x, y, self.height)
                })
                .collect(),
            (None, None) => Vec::new(),
        }
    }
}
