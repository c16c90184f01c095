//! Domain types and geometry shared by the radio, control and simulation layers.

use std::collections::VecDeque;
use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

/// Cartesian 3-vector. Used for positions (m), velocities (m/s) and
/// control inputs (m/s²); the unit is implied by the field that holds it.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3 { x: 0.0, y: 0.0, z: 0.0 };

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn dot(self, other: Vec3) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn norm_squared(self) -> f64 {
        self.dot(self)
    }

    pub fn norm(self) -> f64 {
        self.norm_squared().sqrt()
    }

    /// Same vector with the vertical component dropped.
    pub fn horizontal(self) -> Vec3 {
        Vec3::new(self.x, self.y, 0.0)
    }

    /// Rescales to at most `max_norm`, keeping direction.
    pub fn clamp_norm(self, max_norm: f64) -> Vec3 {
        let n = self.norm();
        if n > max_norm && n > 0.0 {
            self * (max_norm / n)
        } else {
            self
        }
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl AddAssign for Vec3 {
    fn add_assign(&mut self, o: Vec3) {
        *self = *self + o;
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, k: f64) -> Vec3 {
        Vec3::new(self.x * k, self.y * k, self.z * k)
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

impl fmt::Display for Vec3 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.x, self.y, self.z)
    }
}

/// Euclidean distance in meters.
pub fn distance(a: Vec3, b: Vec3) -> f64 {
    (a - b).norm()
}

/// Angle between the ground plane and the UAV-to-user ray, in radians.
/// Directly overhead gives π/2.
pub fn elevation_angle(uav: Vec3, user: Vec3) -> f64 {
    let horizontal = (uav - user).horizontal().norm();
    (uav.z - user.z).atan2(horizontal)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UserClass {
    Premium,
    Regular,
}

impl UserClass {
    pub fn as_str(self) -> &'static str {
        match self {
            UserClass::Premium => "premium",
            UserClass::Regular => "regular",
        }
    }
}

/// Index of a radio channel. Channel 0 is the default channel shared with
/// regular users.
pub type Channel = usize;

pub const DEFAULT_CHANNEL: Channel = 0;

#[derive(Debug, Clone, PartialEq)]
pub struct UavState {
    pub id: usize,
    pub position: Vec3,
    pub velocity: Vec3,
    pub channel: Channel,
    /// Served user ids, ascending.
    pub connected_users: Vec<usize>,
    pub alive: bool,
    pub last_switch_time: f64,
}

impl UavState {
    pub fn new(id: usize, position: Vec3) -> Self {
        Self {
            id,
            position,
            velocity: Vec3::ZERO,
            channel: DEFAULT_CHANNEL,
            connected_users: Vec::new(),
            alive: true,
            last_switch_time: 0.0,
        }
    }

    pub fn load(&self) -> usize {
        self.connected_users.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UserState {
    pub id: usize,
    pub position: Vec3,
    pub klass: UserClass,
    /// bits/s
    pub target_rate: f64,
    pub serving_uav: Option<usize>,
    /// bits/s, zero when unserved
    pub achieved_rate: f64,
    /// (time s, rate bits/s) samples covering the trailing window
    pub rate_window: VecDeque<(f64, f64)>,
    pub mean_rate: f64,
}

impl UserState {
    pub fn new(id: usize, x: f64, y: f64, klass: UserClass, target_rate: f64) -> Self {
        Self {
            id,
            position: Vec3::new(x, y, 0.0),
            klass,
            target_rate,
            serving_uav: None,
            achieved_rate: 0.0,
            rate_window: VecDeque::new(),
            mean_rate: 0.0,
        }
    }

    /// Appends a sample, drops those older than `window` seconds and
    /// refreshes the running mean.
    pub fn record_rate(&mut self, time: f64, rate: f64, window: f64) {
        self.achieved_rate = rate;
        self.rate_window.push_back((time, rate));
        // keep samples with time - t < window; 1e-9 absorbs tick-time rounding
        while let Some(&(t, _)) = self.rate_window.front() {
            if time - t >= window - 1e-9 && self.rate_window.len() > 1 {
                self.rate_window.pop_front();
            } else {
                break;
            }
        }
        let sum: f64 = self.rate_window.iter().map(|&(_, r)| r).sum();
        self.mean_rate = sum / self.rate_window.len() as f64;
    }

    pub fn is_fulfilled(&self) -> bool {
        self.serving_uav.is_some() && self.achieved_rate >= self.target_rate
    }
}

/// Which form of the elevation-dependent LoS probability to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlosForm {
    /// `1 / (1 + θ·exp(-ξ·deg - θ))`
    #[default]
    AsWritten,
    /// `1 / (1 + θ·exp(-ξ·(deg - θ)))`
    Standard,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RadioParams {
    /// carrier frequency, Hz
    pub f_c: f64,
    /// path-loss exponent
    pub delta: f64,
    /// extra mean loss on LoS paths, dB
    pub eta_los: f64,
    /// extra mean loss on NLoS paths, dB
    pub eta_nlos: f64,
    pub theta_env: f64,
    pub xi_env: f64,
    /// transmit power, dBm
    pub p_t: f64,
    /// Hz
    pub bandwidth: f64,
    /// thermal noise power, dBm
    pub noise: f64,
    pub c_light: f64,
    pub num_channels: usize,
    pub plos_form: PlosForm,
}

impl Default for RadioParams {
    fn default() -> Self {
        Self {
            f_c: 2.0e9,
            delta: 2.0,
            eta_los: 0.1,
            eta_nlos: 21.0,
            theta_env: 4.88,
            xi_env: 0.43,
            p_t: 37.0,
            bandwidth: 15.0e6,
            noise: -80.0,
            c_light: 3.0e8,
            num_channels: 8,
            plos_form: PlosForm::AsWritten,
        }
    }
}

impl RadioParams {
    pub fn validate(&self) -> Result<(), String> {
        let finite = [
            self.f_c,
            self.delta,
            self.eta_los,
            self.eta_nlos,
            self.theta_env,
            self.xi_env,
            self.p_t,
            self.bandwidth,
            self.noise,
            self.c_light,
        ];
        if finite.iter().any(|v| !v.is_finite()) {
            return Err("radio parameters must be finite".into());
        }
        if self.f_c <= 0.0 {
            return Err("radio.f_c must be > 0".into());
        }
        if self.bandwidth <= 0.0 {
            return Err("radio.bandwidth must be > 0".into());
        }
        if self.delta <= 0.0 {
            return Err("radio.delta must be > 0".into());
        }
        if self.c_light <= 0.0 {
            return Err("radio.c_light must be > 0".into());
        }
        if self.num_channels < 1 {
            return Err("radio.num_channels must be >= 1".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ControlGains {
    /// σ-norm constant
    pub eps: f64,
    /// upper asymptote of the spacing sigmoid; also the overload-attraction gain
    pub a: f64,
    /// magnitude of the lower asymptote
    pub b: f64,
    /// gain on repulsion from unsatisfied users served elsewhere
    pub c1: f64,
    pub c2_reg: f64,
    pub c2_prem: f64,
    /// attraction to a connected user stops at `beta * target`
    pub beta: f64,
    /// serving capacity, users per UAV
    pub n_max: usize,
    /// communication range, m
    pub r: f64,
    /// minimum UAV separation, m
    pub d: f64,
    /// rate-averaging window and channel-switch cooldown, s
    pub tau: f64,
    pub dt: f64,
    pub v_max: f64,
    pub u_max: f64,
    /// linear drag coefficient applied during integration, 1/s
    pub damping: f64,
}

impl Default for ControlGains {
    fn default() -> Self {
        Self {
            eps: 0.1,
            a: 5.0,
            b: 5.0,
            c1: 6.0,
            c2_reg: 4.0,
            c2_prem: 6.0,
            beta: 1.5,
            n_max: 80,
            r: 300.0,
            d: 100.0,
            tau: 5.0,
            dt: 0.1,
            v_max: 20.0,
            u_max: 10.0,
            damping: 0.5,
        }
    }
}

impl ControlGains {
    pub fn validate(&self) -> Result<(), String> {
        let reals = [
            self.eps,
            self.a,
            self.b,
            self.c1,
            self.c2_reg,
            self.c2_prem,
            self.beta,
            self.r,
            self.d,
            self.tau,
            self.dt,
            self.v_max,
            self.u_max,
            self.damping,
        ];
        if reals.iter().any(|v| !v.is_finite()) {
            return Err("control gains must be finite".into());
        }
        if !(self.d > 0.0 && self.d < self.r) {
            return Err(format!("gains require 0 < d < r (d={}, r={})", self.d, self.r));
        }
        if self.a <= 0.0 || self.b <= 0.0 {
            return Err("gains.a and gains.b must be > 0".into());
        }
        if (self.c2_prem - 1.5 * self.c2_reg).abs() > 1e-12 * self.c2_reg.abs().max(1.0) {
            return Err(format!(
                "gains.c2_prem must equal 1.5 * gains.c2_reg ({} != 1.5 * {})",
                self.c2_prem, self.c2_reg
            ));
        }
        if self.dt <= 0.0 {
            return Err("gains.dt must be > 0".into());
        }
        if self.eps <= 0.0 {
            return Err("gains.eps must be > 0".into());
        }
        if self.beta <= 0.0 {
            return Err("gains.beta must be > 0".into());
        }
        if self.n_max == 0 {
            return Err("gains.n_max must be >= 1".into());
        }
        if self.tau <= 0.0 || self.v_max <= 0.0 || self.u_max <= 0.0 {
            return Err("gains.tau, gains.v_max and gains.u_max must be > 0".into());
        }
        if self.damping < 0.0 {
            return Err("gains.damping must be >= 0".into());
        }
        Ok(())
    }
}

/// Ids of alive UAVs within range `r` of UAV `uav_id`, ascending.
/// A dead UAV has no neighbors.
pub fn neighbor_set(uav_id: usize, uavs: &[UavState], r: f64) -> Vec<usize> {
    let me = &uavs[uav_id];
    if !me.alive {
        return Vec::new();
    }
    uavs.iter()
        .filter(|u| u.id != uav_id && u.alive && distance(u.position, me.position) <= r)
        .map(|u| u.id)
        .collect()
}
