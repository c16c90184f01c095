//! Straight-line reference computations shared by the integration tests.
//! Nothing here calls into the crate's radio or kernel code.
#![allow(dead_code)]

use std::path::PathBuf;

pub const F_C: f64 = 2e9;
pub const C_LIGHT: f64 = 3e8;
pub const ETA_LOS: f64 = 0.1;
pub const ETA_NLOS: f64 = 21.0;
pub const THETA: f64 = 4.88;
pub const XI: f64 = 0.43;
pub const P_T_DBM: f64 = 37.0;
pub const NOISE_DBM: f64 = -80.0;
pub const BANDWIDTH: f64 = 15e6;

/// Path loss in dB with δ = 2 and the as-written LoS exponent.
pub fn oracle_path_loss(uav: [f64; 3], user: [f64; 3]) -> f64 {
    let dx = uav[0] - user[0];
    let dy = uav[1] - user[1];
    let dz = uav[2] - user[2];
    let ground = (dx * dx + dy * dy).sqrt();
    let dist = (ground * ground + dz * dz).sqrt();
    let deg = dz.abs().atan2(ground) * 180.0 / std::f64::consts::PI;
    let plos = 1.0 / (1.0 + THETA * (-XI * deg - THETA).exp());
    20.0 * (4.0 * std::f64::consts::PI * F_C * dist / C_LIGHT).log10()
        + plos * ETA_LOS
        + (1.0 - plos) * ETA_NLOS
}

pub fn oracle_power_mw(uav: [f64; 3], user: [f64; 3]) -> f64 {
    10f64.powf((P_T_DBM - oracle_path_loss(uav, user)) / 10.0)
}

/// Shannon rate in bit/s for a user served from `serving` while every
/// position in `interferers` transmits on the same channel.
pub fn oracle_rate(serving: [f64; 3], user: [f64; 3], interferers: &[[f64; 3]]) -> (f64, f64) {
    let signal = oracle_power_mw(serving, user);
    let noise = 10f64.powf(NOISE_DBM / 10.0);
    let interference: f64 = interferers.iter().map(|&q| oracle_power_mw(q, user)).sum();
    let sinr = signal / (noise + interference);
    (sinr, BANDWIDTH * (1.0 + sinr).ln() / std::f64::consts::LN_2)
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

pub fn scenario_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(format!("{name}.toml"))
}

pub const SHIPPED: [&str; 3] = ["fig3_three_users", "fig5_parade", "sweep_base"];

pub mod checks {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use swarmcell::config::{ControllerMode, ScenarioConfig};
    use swarmcell::export;
    use swarmcell::kernels::{self, KernelParams};
    use swarmcell::model::{ControlGains, RadioParams, UavState, UserClass, UserState, Vec3};
    use swarmcell::orchestrator::{run, WorldState};
    use swarmcell::radio;

    pub type Check = Result<String, String>;

    fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
        if ok {
            Ok(())
        } else {
            Err(msg())
        }
    }

    /// Bump endpoints and continuity, σ-norm gradient against central
    /// differences, φ(0) and the zeros of the pair potential.
    pub fn kernel_suite() -> Check {
        let gamma = 0.2;
        ensure(kernels::bump(0.0, gamma) == 1.0, || "bump(0) != 1".into())?;
        ensure(kernels::bump(gamma, gamma) == 1.0, || "bump(γ) != 1".into())?;
        ensure(kernels::bump(1.0, gamma) == 0.0, || "bump(1) != 0".into())?;
        ensure(kernels::bump(1.5, gamma) == 0.0, || "bump(1.5) != 0".into())?;

        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let lipschitz = std::f64::consts::PI / (2.0 * (1.0 - gamma));
        for _ in 0..1000 {
            let z = rng.gen_range(-0.1..1.2);
            let dz = rng.gen_range(1e-9..1e-4);
            let jump = (kernels::bump(z + dz, gamma) - kernels::bump(z, gamma)).abs();
            ensure(jump <= lipschitz * dz * (1.0 + 1e-9) + 1e-15, || {
                format!("bump jumps by {jump} between {z} and {}", z + dz)
            })?;
        }

        let eps = 0.1;
        let h = 1e-5;
        let mut worst = 0.0f64;
        for _ in 0..50 {
            let z =
                Vec3::new(rng.gen_range(-50.0..50.0), rng.gen_range(-50.0..50.0), rng.gen_range(-50.0..50.0));
            let g = kernels::sigma_grad(z, eps);
            let axes = [Vec3::new(h, 0.0, 0.0), Vec3::new(0.0, h, 0.0), Vec3::new(0.0, 0.0, h)];
            let analytic = [g.x, g.y, g.z];
            for (e, a) in axes.iter().zip(analytic) {
                let fd = (kernels::sigma_norm(z + *e, eps) - kernels::sigma_norm(z - *e, eps)) / (2.0 * h);
                worst = worst.max((fd - a).abs());
            }
        }
        ensure(worst <= 1e-6, || format!("σ-gradient off by {worst:.3e}"))?;

        let p = KernelParams::new(&ControlGains::default());
        ensure(kernels::phi_sigmoid(0.0, &p) == 0.0, || "φ(0) != 0".into())?;
        ensure(kernels::pair_potential(p.d_sigma, &p) == 0.0, || "Φ(‖d‖σ) != 0".into())?;
        for k in 0..100 {
            let z = p.r_sigma * (1.0 + k as f64 * 0.05);
            ensure(kernels::pair_potential(z, &p) == 0.0, || format!("Φ({z}) != 0"))?;
        }
        Ok(format!("max σ-gradient error {worst:.2e}"))
    }

    /// Crate link budget against the reference computation.
    pub fn radio_suite() -> Check {
        let params = RadioParams::default();
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let mut worst = 0.0f64;
        for _ in 0..100 {
            let user = [rng.gen_range(-400.0..400.0), rng.gen_range(-400.0..400.0), 0.0];
            let pos: Vec<[f64; 3]> = (0..4)
                .map(|_| {
                    [rng.gen_range(-400.0..400.0), rng.gen_range(-400.0..400.0), rng.gen_range(60.0..250.0)]
                })
                .collect();
            let uavs: Vec<UavState> =
                pos.iter().enumerate().map(|(i, p)| UavState::new(i, Vec3::new(p[0], p[1], p[2]))).collect();
            let (sinr, rate) = oracle_rate(pos[0], user, &pos[1..]);
            let u = Vec3::new(user[0], user[1], user[2]);
            let i = radio::interference_mw(u, 0, Some(0), &uavs, &params).map_err(|e| e.to_string())?;
            let lb = radio::link_budget(uavs[0].position, u, i, &params).map_err(|e| e.to_string())?;
            worst = worst
                .max(rel_err(lb.path_loss, oracle_path_loss(pos[0], user)))
                .max(rel_err(lb.sinr, sinr))
                .max(rel_err(lb.rate, rate));
        }
        ensure(worst <= 1e-9, || format!("relative error {worst:.3e}"))?;

        let lb = radio::link_budget(Vec3::new(0.0, 0.0, 100.0), Vec3::ZERO, 0.0, &params)
            .map_err(|e| e.to_string())?;
        let snr_db = 10.0 * lb.sinr.log10();
        ensure(rel_err(lb.path_loss, 78.56) <= 1e-3, || format!("PL {:.3} dB", lb.path_loss))?;
        ensure(rel_err(snr_db, 38.44) <= 1e-3, || format!("SNR {snr_db:.3} dB"))?;
        ensure(rel_err(lb.rate, 191.6e6) <= 1e-3, || format!("rate {:.3} Mbps", lb.rate / 1e6))?;
        Ok(format!(
            "max relative error {worst:.2e}; overhead PL {:.2} dB, SNR {snr_db:.2} dB, {:.1} Mbps",
            lb.path_loss,
            lb.rate / 1e6
        ))
    }

    /// Two UAVs exactly d apart with equal velocities and every user
    /// satisfied feel no control input.
    pub fn fixed_point() -> Check {
        let gains = ControlGains::default();
        let p = KernelParams::new(&gains);
        let vel = Vec3::new(1.5, -0.5, 0.0);
        let mut uavs = vec![
            UavState::new(0, Vec3::new(0.0, 0.0, 100.0)),
            UavState::new(1, Vec3::new(gains.d, 0.0, 100.0)),
        ];
        let targets = [(UserClass::Premium, 300e6), (UserClass::Regular, 100e6)];
        let mut users = Vec::new();
        for (k, uav) in uavs.iter_mut().enumerate() {
            uav.velocity = vel;
            for (j, &(klass, target)) in targets.iter().enumerate() {
                let id = users.len();
                let mut u = UserState::new(id, k as f64 * gains.d + 10.0 * j as f64, 20.0, klass, target);
                u.serving_uav = Some(k);
                u.achieved_rate = 2.0 * target;
                u.mean_rate = 2.0 * target;
                uav.connected_users.push(id);
                users.push(u);
            }
        }
        for k in 0..2 {
            let u = kernels::control_input(k, &uavs, &users, &p, ControllerMode::QosDriven);
            ensure(u == Vec3::ZERO, || format!("UAV {k} control {u:?}"))?;
        }
        Ok("control input is exactly zero".into())
    }

    /// Replays every channel switch of a run against the state just before
    /// it and checks that no user kept by the switching UAV loses SINR.
    pub fn channel_isolation(cfg: &ScenarioConfig) -> Check {
        let mut world = WorldState::from_config(cfg).map_err(|e| e.to_string())?;
        let last_tick = (cfg.duration / cfg.gains.dt).round() as u64;
        let mut checked = 0usize;
        let mut users_checked = 0usize;
        loop {
            world.apply_due_failures();
            world.associate_users();
            world.update_rates().map_err(|e| e.to_string())?;
            let mut before = world.clone();
            let events = world.maybe_switch_channel().map_err(|e| e.to_string())?;
            for ev in &events {
                let keep: Vec<usize> = before.uavs[ev.uav_id]
                    .connected_users
                    .iter()
                    .copied()
                    .filter(|m| !ev.released_users.contains(m))
                    .collect();
                let sinr = |w: &WorldState, m: usize| {
                    radio::sinr(m, ev.uav_id, &w.uavs, &w.users, &w.radio).map_err(|e| e.to_string())
                };
                let pre: Vec<f64> = keep.iter().map(|&m| sinr(&before, m)).collect::<Result<_, _>>()?;
                before.uavs[ev.uav_id].channel = ev.to;
                for (&m, s0) in keep.iter().zip(pre) {
                    let s1 = sinr(&before, m)?;
                    ensure(s1 >= s0, || {
                        format!("t={:.1}: UAV {} user {m} SINR {s0:.4} -> {s1:.4}", ev.time, ev.uav_id)
                    })?;
                    users_checked += 1;
                }
                checked += 1;
            }
            if world.tick >= last_tick {
                break;
            }
            let controls = world.compute_controls();
            world.integrate(&controls);
        }
        ensure(checked > 0, || "no switch events to check".into())?;
        Ok(format!("{checked} switch events, {users_checked} user links"))
    }

    /// Runs a scenario twice and compares the written files byte for byte.
    pub fn determinism(cfg: &ScenarioConfig) -> Check {
        let mut files: Vec<Vec<Vec<u8>>> = Vec::new();
        for _ in 0..2 {
            let out = run(cfg).map_err(|e| e.to_string())?;
            let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
            let summary = export::RunSummary::new(&cfg.name, cfg.seed, &out);
            export::write_run(dir.path(), &summary, &out).map_err(|e| e.to_string())?;
            let read = |f: &str| std::fs::read(dir.path().join(f)).map_err(|e| e.to_string());
            files.push(vec![read("metrics.csv")?, read("trace.csv")?, read("summary.json")?]);
        }
        ensure(files[0] == files[1], || "outputs differ".into())?;
        Ok(format!("{} bytes identical", files[0].iter().map(Vec::len).sum::<usize>()))
    }
}
