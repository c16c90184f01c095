//! Tick loop: association, rate bookkeeping, channel switching, failure
//! injection and Euler integration of the UAV double-integrator dynamics.
//!
//! Every tick runs against one frozen snapshot: control inputs for all UAVs
//! are computed before any UAV moves.

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{ControllerMode, FailureEvent, ScenarioConfig};
use crate::error::Result;
use crate::kernels::{control_input, KernelParams};
use crate::metrics::{compute_metrics, TickMetrics};
use crate::model::{
    distance, Channel, ControlGains, RadioParams, UavState, UserClass, UserState, Vec3, DEFAULT_CHANNEL,
};
use crate::radio;

/// Slack on time comparisons so that tick times built as `k * dt` match
/// configured event times.
const TIME_SLACK: f64 = 1e-9;

/// Relative slack on the "rate has not improved" test; a flat window can
/// average to one ulp below its samples.
const RATE_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SwitchEvent {
    pub time: f64,
    pub uav_id: usize,
    pub from: Channel,
    pub to: Channel,
    /// premium user whose stalled rate triggered the switch
    pub trigger_user: usize,
    /// regular users dropped because the UAV left the default channel
    pub released_users: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FailureRecord {
    pub time: f64,
    pub fraction: f64,
    pub failed_uavs: Vec<usize>,
}

#[derive(Debug, Clone)]
struct PendingFailure {
    event: FailureEvent,
    applied: bool,
}

#[derive(Debug, Clone)]
pub struct WorldState {
    pub tick: u64,
    pub time: f64,
    pub uavs: Vec<UavState>,
    pub users: Vec<UserState>,
    pub rng: ChaCha8Rng,
    pub height: f64,
    pub radio: RadioParams,
    pub gains: ControlGains,
    pub kernel: KernelParams,
    pub mode: ControllerMode,
    failures: Vec<PendingFailure>,
    pub switch_log: Vec<SwitchEvent>,
    pub failure_log: Vec<FailureRecord>,
}

/// Hard-invariant breach found by [`WorldState::check_invariants`].
#[derive(Debug, Clone, PartialEq)]
pub struct InvariantViolation(pub String);

impl std::fmt::Display for InvariantViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl WorldState {
    /// Builds tick-0 state. Users are drawn from the seeded generator
    /// before UAV start positions.
    pub fn from_config(cfg: &ScenarioConfig) -> Result<Self> {
        cfg.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let users = cfg.materialize_users(&mut rng);
        let uavs = cfg
            .materialize_uav_positions(&mut rng)
            .into_iter()
            .enumerate()
            .map(|(id, q)| UavState::new(id, q))
            .collect();
        let mut failures: Vec<PendingFailure> =
            cfg.failure_events.iter().map(|&event| PendingFailure { event, applied: false }).collect();
        failures.sort_by(|a, b| a.event.time.total_cmp(&b.event.time));
        Ok(Self {
            tick: 0,
            time: 0.0,
            uavs,
            users,
            rng,
            height: cfg.height,
            radio: cfg.radio.clone(),
            gains: cfg.gains.clone(),
            kernel: KernelParams::new(&cfg.gains),
            mode: cfg.controller_mode,
            failures,
            switch_log: Vec::new(),
            failure_log: Vec::new(),
        })
    }

    pub fn alive_count(&self) -> usize {
        self.uavs.iter().filter(|u| u.alive).count()
    }

    fn release_user(&mut self, user_id: usize) {
        let user = &mut self.users[user_id];
        if let Some(uav) = user.serving_uav.take() {
            self.uavs[uav].connected_users.retain(|&m| m != user_id);
        }
        user.achieved_rate = 0.0;
    }

    /// Fires every scheduled failure whose time has come and that has not
    /// fired yet.
    pub fn apply_due_failures(&mut self) -> Vec<FailureRecord> {
        let mut fired = Vec::new();
        for i in 0..self.failures.len() {
            let pending = &self.failures[i];
            if pending.applied || self.time + TIME_SLACK < pending.event.time {
                continue;
            }
            let fraction = pending.event.fraction;
            self.failures[i].applied = true;
            let failed_uavs = self.inject_failures(fraction);
            let record = FailureRecord { time: self.time, fraction, failed_uavs };
            self.failure_log.push(record.clone());
            fired.push(record);
        }
        fired
    }

    /// Kills round-half-up(fraction × alive) distinct alive UAVs chosen
    /// uniformly. Returns their ids, ascending.
    pub fn inject_failures(&mut self, fraction: f64) -> Vec<usize> {
        let alive: Vec<usize> = self.uavs.iter().filter(|u| u.alive).map(|u| u.id).collect();
        let count = failure_count(fraction, alive.len());
        let mut picked: Vec<usize> =
            index::sample(&mut self.rng, alive.len(), count).into_iter().map(|k| alive[k]).collect();
        picked.sort_unstable();
        for &id in &picked {
            let served = std::mem::take(&mut self.uavs[id].connected_users);
            for m in served {
                self.users[m].serving_uav = None;
                self.users[m].achieved_rate = 0.0;
            }
            let uav = &mut self.uavs[id];
            uav.alive = false;
            uav.velocity = Vec3::ZERO;
        }
        picked
    }

    fn channel_eligible(klass: UserClass, channel: Channel) -> bool {
        klass == UserClass::Premium || channel == DEFAULT_CHANNEL
    }

    /// Greedy nearest-UAV association with capacity spill.
    ///
    /// Users are taken in order of distance to their nearest eligible UAV
    /// (ties by user id); each takes the nearest eligible UAV that still has
    /// a free slot. Eligible means alive, within range r, and on the default
    /// channel for regular users.
    pub fn associate_users(&mut self) {
        let r = self.gains.r;
        let mut candidates: Vec<Vec<(f64, usize)>> = self
            .users
            .iter()
            .map(|user| {
                let mut c: Vec<(f64, usize)> = self
                    .uavs
                    .iter()
                    .filter(|k| k.alive && Self::channel_eligible(user.klass, k.channel))
                    .map(|k| (distance(k.position, user.position), k.id))
                    .filter(|&(dist, _)| dist <= r)
                    .collect();
                c.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
                c
            })
            .collect();

        let mut order: Vec<usize> = (0..self.users.len()).collect();
        order.sort_by(|&a, &b| {
            let da = candidates[a].first().map_or(f64::INFINITY, |c| c.0);
            let db = candidates[b].first().map_or(f64::INFINITY, |c| c.0);
            da.total_cmp(&db).then(a.cmp(&b))
        });

        for uav in &mut self.uavs {
            uav.connected_users.clear();
        }
        let mut slots: Vec<usize> = self.uavs.iter().map(|_| self.gains.n_max).collect();
        for m in order {
            let choice = candidates[m].iter().map(|c| c.1).find(|&k| slots[k] > 0);
            self.users[m].serving_uav = choice;
            if let Some(k) = choice {
                slots[k] -= 1;
                self.uavs[k].connected_users.push(m);
            }
            candidates[m].clear();
        }
        for uav in &mut self.uavs {
            uav.connected_users.sort_unstable();
        }
    }

    /// Achieved rate of every user against the current association, in
    /// user-id order. Unserved users get zero.
    pub fn current_rates(&self) -> Result<Vec<f64>> {
        let uavs = &self.uavs;
        let radio = &self.radio;
        self.users
            .par_iter()
            .map(|user| match user.serving_uav {
                None => Ok(0.0),
                Some(k) => {
                    let serving = &uavs[k];
                    let interference =
                        radio::interference_mw(user.position, serving.channel, Some(k), uavs, radio)?;
                    Ok(radio::link_budget(serving.position, user.position, interference, radio)?.rate)
                }
            })
            .collect()
    }

    /// Refreshes C_m, appends it to the trailing window and recomputes μ_m.
    pub fn update_rates(&mut self) -> Result<()> {
        let rates = self.current_rates()?;
        let (time, window) = (self.time, self.gains.tau);
        for (user, rate) in self.users.iter_mut().zip(rates) {
            user.record_rate(time, rate, window);
        }
        Ok(())
    }

    fn sinr_on(&self, user_id: usize, uav_id: usize, channel: Channel) -> Result<f64> {
        let uav = &self.uavs[uav_id];
        let pos = self.users[user_id].position;
        let interference = radio::interference_mw(pos, channel, Some(uav_id), &self.uavs, &self.radio)?;
        Ok(radio::link_budget(uav.position, pos, interference, &self.radio)?.sinr)
    }

    /// Moves UAVs whose premium users have stalled below target onto a
    /// quieter channel. UAVs are handled in id order and see switches made
    /// earlier in the same pass.
    ///
    /// A UAV is a candidate when one of its premium users has
    /// `C_m < target` and `C_m <= μ_m` and its last switch is at least τ old.
    /// It takes the lowest-indexed non-default channel no other alive UAV
    /// uses; failing that, the channel with the least interference at the
    /// triggering user, provided that is strictly lower than now and none of
    /// its other users loses SINR. Leaving the default channel drops the
    /// UAV's regular users.
    pub fn maybe_switch_channel(&mut self) -> Result<Vec<SwitchEvent>> {
        let mut events = Vec::new();
        let num_channels = self.radio.num_channels;
        for uav_id in 0..self.uavs.len() {
            let uav = &self.uavs[uav_id];
            if !uav.alive || self.time - uav.last_switch_time + TIME_SLACK < self.gains.tau {
                continue;
            }
            let trigger = uav.connected_users.iter().copied().find(|&m| {
                let u = &self.users[m];
                u.klass == UserClass::Premium
                    && u.achieved_rate < u.target_rate
                    && u.achieved_rate <= u.mean_rate * (1.0 + RATE_SLACK)
            });
            let Some(trigger) = trigger else { continue };
            let current = uav.channel;
            let trigger_pos = self.users[trigger].position;
            let interference_on =
                |c: Channel| radio::interference_mw(trigger_pos, c, Some(uav_id), &self.uavs, &self.radio);
            let now = interference_on(current)?;
            if now <= 0.0 {
                continue;
            }

            let free = (1..num_channels)
                .filter(|&c| c != current)
                .find(|&c| !self.uavs.iter().any(|k| k.alive && k.id != uav_id && k.channel == c));
            let target = match free {
                Some(c) => Some(c),
                None => {
                    let mut best: Option<(f64, Channel)> = None;
                    for c in (1..num_channels).filter(|&c| c != current) {
                        let i = interference_on(c)?;
                        if i < now && best.is_none_or(|(bi, _)| i < bi) {
                            best = Some((i, c));
                        }
                    }
                    match best {
                        Some((_, c)) if self.keeps_sinr(uav_id, current, c)? => Some(c),
                        _ => None,
                    }
                }
            };
            let Some(to) = target else { continue };

            let uav = &mut self.uavs[uav_id];
            uav.channel = to;
            uav.last_switch_time = self.time;
            let mut released = Vec::new();
            if current == DEFAULT_CHANNEL {
                released = self.uavs[uav_id]
                    .connected_users
                    .iter()
                    .copied()
                    .filter(|&m| self.users[m].klass == UserClass::Regular)
                    .collect();
                for &m in &released {
                    self.release_user(m);
                }
            }
            let event = SwitchEvent {
                time: self.time,
                uav_id,
                from: current,
                to,
                trigger_user: trigger,
                released_users: released,
            };
            self.switch_log.push(event.clone());
            events.push(event);
        }
        Ok(events)
    }

    /// True when moving `uav_id` from `from` to `to` lowers SINR for none of
    /// the users that would stay attached.
    fn keeps_sinr(&self, uav_id: usize, from: Channel, to: Channel) -> Result<bool> {
        for &m in &self.uavs[uav_id].connected_users {
            if !Self::channel_eligible(self.users[m].klass, to) {
                continue;
            }
            if self.sinr_on(m, uav_id, to)? < self.sinr_on(m, uav_id, from)? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Control input for every UAV from the current snapshot; zero for dead
    /// UAVs.
    pub fn compute_controls(&self) -> Vec<Vec3> {
        (0..self.uavs.len())
            .into_par_iter()
            .map(|i| {
                if self.uavs[i].alive {
                    control_input(i, &self.uavs, &self.users, &self.kernel, self.mode)
                } else {
                    Vec3::ZERO
                }
            })
            .collect()
    }

    /// Semi-implicit Euler step of the double integrator, then advances the
    /// clock by dt. Altitude stays at `height` and vertical speed at zero.
    pub fn integrate(&mut self, controls: &[Vec3]) {
        let g = &self.gains;
        for (uav, &u) in self.uavs.iter_mut().zip(controls) {
            if !uav.alive {
                continue;
            }
            let accel = (u - uav.velocity * g.damping).horizontal();
            uav.velocity = (uav.velocity + accel * g.dt).horizontal().clamp_norm(g.v_max);
            let mut q = uav.position + uav.velocity * g.dt;
            q.z = self.height;
            uav.position = q;
        }
        self.tick += 1;
        self.time = self.tick as f64 * g.dt;
    }

    /// Phases (1)–(5) of a tick: failures, association, rates, channel
    /// switching and control computation. Leaves positions untouched.
    pub fn prepare_tick(&mut self) -> Result<Vec<Vec3>> {
        self.apply_due_failures();
        self.associate_users();
        self.update_rates()?;
        self.maybe_switch_channel()?;
        Ok(self.compute_controls())
    }

    /// One full synchronous tick.
    pub fn step(&mut self) -> Result<()> {
        let controls = self.prepare_tick()?;
        self.integrate(&controls);
        Ok(())
    }

    /// Alive UAV pairs closer than the minimum separation d.
    pub fn spacing_violations(&self) -> usize {
        let alive: Vec<&UavState> = self.uavs.iter().filter(|u| u.alive).collect();
        let mut count = 0;
        for (i, a) in alive.iter().enumerate() {
            for b in &alive[i + 1..] {
                if distance(a.position, b.position) < self.gains.d {
                    count += 1;
                }
            }
        }
        count
    }

    pub fn check_invariants(&self) -> std::result::Result<(), InvariantViolation> {
        let fail = |m: String| Err(InvariantViolation(m));
        for uav in &self.uavs {
            if uav.position.z != self.height || uav.velocity.z != 0.0 {
                return fail(format!("UAV {} left the fixed altitude", uav.id));
            }
            if !uav.position.is_finite() || !uav.velocity.is_finite() {
                return fail(format!("UAV {} has a non-finite state", uav.id));
            }
            if uav.load() > self.gains.n_max {
                return fail(format!("UAV {} serves {} users", uav.id, uav.load()));
            }
            if !uav.alive && !uav.connected_users.is_empty() {
                return fail(format!("dead UAV {} still serves users", uav.id));
            }
        }
        for user in &self.users {
            let Some(k) = user.serving_uav else { continue };
            let uav = &self.uavs[k];
            if !uav.alive {
                return fail(format!("user {} served by dead UAV {k}", user.id));
            }
            if distance(uav.position, user.position) > self.gains.r {
                return fail(format!("user {} served out of range by UAV {k}", user.id));
            }
            if user.klass == UserClass::Regular && uav.channel != DEFAULT_CHANNEL {
                return fail(format!("regular user {} on channel {}", user.id, uav.channel));
            }
            if !uav.connected_users.contains(&user.id) {
                return fail(format!("user {} missing from UAV {k} roster", user.id));
            }
        }
        Ok(())
    }
}

/// round-half-up(fraction × alive), capped at `alive`.
pub fn failure_count(fraction: f64, alive: usize) -> usize {
    let raw = (fraction * alive as f64 + 0.5 + TIME_SLACK).floor();
    (raw.max(0.0) as usize).min(alive)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceRow {
    pub tick: u64,
    pub uav_id: usize,
    pub time: f64,
    pub position: Vec3,
    pub velocity: Vec3,
    pub channel: Channel,
    pub alive: bool,
    pub load: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UserTraceRow {
    pub tick: u64,
    pub time: f64,
    pub user_id: usize,
    pub klass: UserClass,
    pub serving_uav: Option<usize>,
    pub rate: f64,
    pub mean_rate: f64,
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub record_user_trace: bool,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub metrics: Vec<TickMetrics>,
    pub trace: Vec<TraceRow>,
    pub user_trace: Vec<UserTraceRow>,
    pub switches: Vec<SwitchEvent>,
    pub failures: Vec<FailureRecord>,
    /// (tick, alive UAV pairs closer than d), only ticks with violations
    pub spacing_violations: Vec<(u64, usize)>,
    pub final_world: WorldState,
}

impl RunOutput {
    /// Ticks of the last 10% of the run (at least one).
    pub fn steady_window(&self) -> &[TickMetrics] {
        let n = self.metrics.len();
        let take = (n / 10).max(1).min(n);
        &self.metrics[n - take..]
    }

    pub fn steady_state(&self) -> TickMetrics {
        TickMetrics::mean(self.steady_window())
    }

    /// Spacing violations among the ticks of the steady-state window.
    pub fn steady_spacing_violations(&self) -> usize {
        let Some(first) = self.steady_window().first() else { return 0 };
        let first_tick = (first.time / self.final_world.gains.dt).round() as u64;
        self.spacing_violations.iter().filter(|(t, _)| *t >= first_tick).map(|(_, c)| c).sum()
    }
}

pub fn run(cfg: &ScenarioConfig) -> Result<RunOutput> {
    run_with(cfg, &RunOptions::default())
}

/// Runs `round(duration / dt)` ticks after tick 0, recording metrics and
/// the UAV trace at every tick (state after association and rate update,
/// before the move).
pub fn run_with(cfg: &ScenarioConfig, opts: &RunOptions) -> Result<RunOutput> {
    let mut world = WorldState::from_config(cfg)?;
    let last_tick = (cfg.duration / cfg.gains.dt).round() as u64;
    let mut metrics = Vec::with_capacity(last_tick as usize + 1);
    let mut trace = Vec::with_capacity((last_tick as usize + 1) * world.uavs.len());
    let mut user_trace = Vec::new();
    let mut spacing_violations = Vec::new();

    loop {
        let controls = world.prepare_tick()?;
        if let Err(v) = world.check_invariants() {
            panic!("invariant violated at t={}: {v}", world.time);
        }
        metrics.push(compute_metrics(&world));
        let violations = world.spacing_violations();
        if violations > 0 {
            spacing_violations.push((world.tick, violations));
        }
        trace.extend(world.uavs.iter().map(|u| TraceRow {
            tick: world.tick,
            uav_id: u.id,
            time: world.time,
            position: u.position,
            velocity: u.velocity,
            channel: u.channel,
            alive: u.alive,
            load: u.load(),
        }));
        if opts.record_user_trace {
            user_trace.extend(world.users.iter().map(|m| UserTraceRow {
                tick: world.tick,
                time: world.time,
                user_id: m.id,
                klass: m.klass,
                serving_uav: m.serving_uav,
                rate: m.achieved_rate,
                mean_rate: m.mean_rate,
            }));
        }
        if world.tick >= last_tick {
            break;
        }
        world.integrate(&controls);
    }

    Ok(RunOutput {
        metrics,
        trace,
        user_trace,
        switches: world.switch_log.clone(),
        failures: world.failure_log.clone(),
        spacing_violations,
        final_world: world,
    })
}
