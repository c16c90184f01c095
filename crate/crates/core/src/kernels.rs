//! Potential-field control: bump gate, σ-norm, spacing sigmoid, pairwise
//! potential and the spacing (f), velocity-consensus (g) and QoS (h) terms.
//!
//! All functions are pure over a frozen view of the swarm. Terms may carry a
//! vertical component; [`control_input`] projects onto the horizontal plane.

use crate::config::ControllerMode;
use crate::model::{distance, neighbor_set, ControlGains, UavState, UserClass, UserState, Vec3};

/// Plateau width of the gate used by the spacing potential and the
/// velocity consensus.
const PAIR_GATE: f64 = 0.2;

/// Control constants plus the values derived from them.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelParams {
    pub eps: f64,
    pub a: f64,
    pub b: f64,
    pub c1: f64,
    pub c2_reg: f64,
    pub c2_prem: f64,
    pub beta: f64,
    pub n_max: usize,
    pub r: f64,
    pub d: f64,
    pub u_max: f64,
    /// sigmoid offset (b−a)/√(4ab), puts φ(0) at zero; equals |a−b|/√(4ab)
    /// whenever a ≤ b
    pub c_sig: f64,
    pub r_sigma: f64,
    pub d_sigma: f64,
    pub n_max_sigma: f64,
}

impl KernelParams {
    pub fn new(g: &ControlGains) -> Self {
        let c_sig = (g.b - g.a) / (4.0 * g.a * g.b).sqrt();
        Self {
            eps: g.eps,
            a: g.a,
            b: g.b,
            c1: g.c1,
            c2_reg: g.c2_reg,
            c2_prem: g.c2_prem,
            beta: g.beta,
            n_max: g.n_max,
            r: g.r,
            d: g.d,
            u_max: g.u_max,
            c_sig,
            r_sigma: sigma_norm_scalar(g.r, g.eps),
            d_sigma: sigma_norm_scalar(g.d, g.eps),
            n_max_sigma: sigma_norm_scalar(g.n_max as f64, g.eps),
        }
    }

    fn c2(&self, klass: UserClass) -> f64 {
        match klass {
            UserClass::Premium => self.c2_prem,
            UserClass::Regular => self.c2_reg,
        }
    }
}

/// Smooth gate: 1 on [0, γ), cosine roll-off on [γ, 1), 0 from 1 on.
/// Negative inputs are treated as 0.
pub fn bump(z: f64, gamma: f64) -> f64 {
    let z = z.max(0.0);
    if z >= 1.0 {
        0.0
    } else if z < gamma {
        1.0
    } else {
        0.5 * (1.0 + (std::f64::consts::PI * (z - gamma) / (1.0 - gamma)).cos())
    }
}

/// σ-norm of a scalar magnitude.
pub fn sigma_norm_scalar(norm: f64, eps: f64) -> f64 {
    ((1.0 + eps * (norm * norm)).sqrt() - 1.0) / eps
}

pub fn sigma_norm(z: Vec3, eps: f64) -> f64 {
    ((1.0 + eps * z.norm_squared()).sqrt() - 1.0) / eps
}

pub fn sigma_grad(z: Vec3, eps: f64) -> Vec3 {
    z * (1.0 / (1.0 + eps * z.norm_squared()).sqrt())
}

/// Uneven sigmoid with asymptotes −b and a, zero at the origin.
pub fn phi_sigmoid(z: f64, p: &KernelParams) -> f64 {
    let s = z + p.c_sig;
    0.5 * ((p.a + p.b) * s / (1.0 + s * s).sqrt() + (p.a - p.b))
}

/// Pairwise spacing potential over σ-distance `z`: repulsive below the
/// σ-norm of d, attractive above it, cut off at the σ-norm of r.
pub fn pair_potential(z: f64, p: &KernelParams) -> f64 {
    bump(z / p.r_sigma, PAIR_GATE) * phi_sigmoid(z - p.d_sigma, p)
}

/// Gate in [0, 1] that opens when a UAV carries more than `n_max` users.
fn overload_gate(load: usize, p: &KernelParams) -> f64 {
    let excess = load.saturating_sub(p.n_max) as f64;
    1.0 - bump(sigma_norm_scalar(excess, p.eps) / p.n_max_sigma, 0.0)
}

/// Spacing term: pairwise potential plus attraction toward overloaded
/// neighbors.
pub fn f_term(uav_id: usize, uavs: &[UavState], p: &KernelParams) -> Vec3 {
    let me = &uavs[uav_id];
    let mut acc = Vec3::ZERO;
    for j in neighbor_set(uav_id, uavs, p.r) {
        let other = &uavs[j];
        let offset = other.position - me.position;
        let weight = pair_potential(sigma_norm(offset, p.eps), p) + p.a * overload_gate(other.load(), p);
        acc += sigma_grad(offset, p.eps) * weight;
    }
    acc
}

/// Velocity consensus with neighbors, full weight inside 0.2·r (in σ units).
pub fn g_term(uav_id: usize, uavs: &[UavState], p: &KernelParams) -> Vec3 {
    let me = &uavs[uav_id];
    let mut acc = Vec3::ZERO;
    for j in neighbor_set(uav_id, uavs, p.r) {
        let other = &uavs[j];
        let w = bump(sigma_norm(me.position - other.position, p.eps) / p.r_sigma, PAIR_GATE);
        acc += (other.velocity - me.velocity) * w;
    }
    acc
}

/// QoS term. Unsatisfied users served by another UAV (or unserved) push
/// the UAV away; its own users below `beta * target` pull it in.
///
/// The pull uses the sigmoid of the deficit in Mbps. Only users within
/// range r contribute to the push.
pub fn h_term(uav_id: usize, uavs: &[UavState], users: &[UserState], p: &KernelParams) -> Vec3 {
    let me = &uavs[uav_id];
    let mut acc = Vec3::ZERO;
    for user in users {
        let connected = user.serving_uav == Some(uav_id);
        let target = user.target_rate;
        let rate = if user.serving_uav.is_some() { user.achieved_rate } else { 0.0 };
        if connected {
            let gate = bump(rate / (p.beta * target), 0.0);
            if gate == 0.0 {
                continue;
            }
            let pull = phi_sigmoid((target - rate) / 1e6, p);
            acc += sigma_grad(user.position - me.position, p.eps) * (p.c2(user.klass) * gate * pull);
        } else {
            let deficit = ((target - rate) / target).max(0.0);
            if deficit == 0.0 || distance(me.position, user.position) > p.r {
                continue;
            }
            acc += sigma_grad(me.position - user.position, p.eps) * (p.c1 * deficit);
        }
    }
    acc
}

/// Arithmetic centroid of all user positions.
pub fn user_centroid(users: &[UserState]) -> Vec3 {
    if users.is_empty() {
        return Vec3::ZERO;
    }
    let sum = users.iter().fold(Vec3::ZERO, |acc, u| acc + u.position);
    sum * (1.0 / users.len() as f64)
}

/// Total horizontal control input for one UAV, saturated at `u_max`.
pub fn control_input(
    uav_id: usize,
    uavs: &[UavState],
    users: &[UserState],
    p: &KernelParams,
    mode: ControllerMode,
) -> Vec3 {
    let swarm = f_term(uav_id, uavs, p) + g_term(uav_id, uavs, p);
    let goal = match mode {
        ControllerMode::QosDriven => h_term(uav_id, uavs, users, p),
        ControllerMode::FlockingBaseline => {
            sigma_grad(user_centroid(users) - uavs[uav_id].position, p.eps) * p.c1
        }
    };
    (swarm + goal).horizontal().clamp_norm(p.u_max)
}
