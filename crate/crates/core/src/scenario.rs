//! Generators for the parade-style layouts used by the shipped scenarios.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::{ControllerMode, Region, ScenarioConfig, UserSpec};
use crate::model::{ControlGains, RadioParams, UserClass};

/// Users spread uniformly over a rectangle, premium users confined to its
/// left part and regular users to the rest.
#[derive(Debug, Clone, PartialEq)]
pub struct ParadeSpec {
    pub users: usize,
    pub premium_fraction: f64,
    pub area: Region,
    /// x coordinate separating the premium (left) part from the regular part
    pub split_x: f64,
    pub uav_count: usize,
    pub uav_region: Region,
    pub duration: f64,
}

impl ParadeSpec {
    pub fn premium_count(&self) -> usize {
        (self.premium_fraction * self.users as f64).round() as usize
    }

    pub fn premium_region(&self) -> Region {
        Region::new(self.area.x[0], self.split_x, self.area.y[0], self.area.y[1])
    }

    pub fn regular_region(&self) -> Region {
        Region::new(self.split_x, self.area.x[1], self.area.y[0], self.area.y[1])
    }

    /// Scenario with the user groups left as sampled regions.
    pub fn to_config(&self, seed: u64) -> ScenarioConfig {
        let n_prem = self.premium_count();
        let mut users = Vec::new();
        if n_prem > 0 {
            users.push(UserSpec::group(self.premium_region(), n_prem, UserClass::Premium));
        }
        if self.users > n_prem {
            users.push(UserSpec::group(self.regular_region(), self.users - n_prem, UserClass::Regular));
        }
        ScenarioConfig {
            name: "parade".into(),
            seed,
            duration: self.duration,
            height: 100.0,
            controller_mode: ControllerMode::QosDriven,
            premium_rate: 300e6,
            regular_rate: 100e6,
            uav_count: self.uav_count,
            uav_initial_positions: None,
            uav_region: Some(self.uav_region),
            failure_events: Vec::new(),
            radio: RadioParams::default(),
            gains: ControlGains::default(),
            users,
        }
    }
}

/// Scenario with every user placed explicitly, drawn from the seeded
/// generator exactly as a simulation of `spec.to_config(seed)` would draw
/// them.
pub fn generate_scenario(spec: &ParadeSpec, seed: u64) -> ScenarioConfig {
    let mut cfg = spec.to_config(seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    cfg.users = cfg
        .materialize_users(&mut rng)
        .into_iter()
        .map(|u| UserSpec::at(u.position.x, u.position.y, u.klass))
        .collect();
    cfg
}
