//! Air-to-ground link model: LoS probability, mean path loss, received
//! power, SINR and Shannon rate.
//!
//! Powers are configured in dBm; they are turned into mW here and nowhere
//! else.

use crate::error::{Error, Result};
use crate::model::{distance, elevation_angle, PlosForm, RadioParams, UavState, UserState, Vec3};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkBudget {
    /// dB
    pub path_loss: f64,
    pub p_los: f64,
    /// mW
    pub received_power: f64,
    /// linear
    pub sinr: f64,
    /// bits/s
    pub rate: f64,
}

pub fn dbm_to_mw(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0)
}

/// Probability of a line-of-sight path at elevation `elev` (radians).
pub fn los_probability(elev: f64, params: &RadioParams) -> f64 {
    let deg = elev.to_degrees();
    let exponent = match params.plos_form {
        PlosForm::AsWritten => -params.xi_env * deg - params.theta_env,
        PlosForm::Standard => -params.xi_env * (deg - params.theta_env),
    };
    1.0 / (1.0 + params.theta_env * exponent.exp())
}

/// Mean air-to-ground path loss in dB: free-space term plus the
/// LoS/NLoS-weighted excess loss.
pub fn path_loss(uav: Vec3, user: Vec3, params: &RadioParams) -> Result<f64> {
    Ok(path_loss_with_plos(uav, user, params)?.0)
}

fn path_loss_with_plos(uav: Vec3, user: Vec3, params: &RadioParams) -> Result<(f64, f64)> {
    let dist = distance(uav, user);
    if dist <= 0.0 {
        return Err(Error::ZeroDistance);
    }
    let p_los = los_probability(elevation_angle(uav, user), params);
    let free_space =
        10.0 * params.delta * (4.0 * std::f64::consts::PI * params.f_c * dist / params.c_light).log10();
    let pl = free_space + p_los * params.eta_los + (1.0 - p_los) * params.eta_nlos;
    Ok((pl, p_los))
}

pub fn received_power_mw(p_t_dbm: f64, pl_db: f64) -> f64 {
    dbm_to_mw(p_t_dbm) / 10f64.powf(pl_db / 10.0)
}

/// Received power at `user` from a UAV at `uav`, mW.
pub fn link_power_mw(uav: Vec3, user: Vec3, params: &RadioParams) -> Result<f64> {
    Ok(received_power_mw(params.p_t, path_loss(uav, user, params)?))
}

pub fn data_rate(sinr: f64, bandwidth: f64) -> f64 {
    bandwidth * (1.0 + sinr).log2()
}

/// Full budget for one link given the co-channel interference already
/// summed at the user (mW).
pub fn link_budget(uav: Vec3, user: Vec3, interference_mw: f64, params: &RadioParams) -> Result<LinkBudget> {
    let (path_loss, p_los) = path_loss_with_plos(uav, user, params)?;
    let received_power = received_power_mw(params.p_t, path_loss);
    let sinr = received_power / (dbm_to_mw(params.noise) + interference_mw);
    Ok(LinkBudget { path_loss, p_los, received_power, sinr, rate: data_rate(sinr, params.bandwidth) })
}

/// Power received at `user` from every alive UAV on `channel` other than
/// `exclude`, mW. The sum is network-wide, not limited to neighbors.
pub fn interference_mw(
    user: Vec3,
    channel: usize,
    exclude: Option<usize>,
    uavs: &[UavState],
    params: &RadioParams,
) -> Result<f64> {
    let mut total = 0.0;
    for k in uavs {
        if k.alive && k.channel == channel && Some(k.id) != exclude {
            total += link_power_mw(k.position, user, params)?;
        }
    }
    Ok(total)
}

/// Downlink SINR (linear) of `user_id` served by `serving_uav_id`.
pub fn sinr(
    user_id: usize,
    serving_uav_id: usize,
    uavs: &[UavState],
    users: &[UserState],
    params: &RadioParams,
) -> Result<f64> {
    let serving = &uavs[serving_uav_id];
    let user = users[user_id].position;
    let interference = interference_mw(user, serving.channel, Some(serving_uav_id), uavs, params)?;
    Ok(link_budget(serving.position, user, interference, params)?.sinr)
}

/// Sum over users of |achieved − target|; unserved users count as zero rate.
pub fn p0_objective(users: &[UserState]) -> f64 {
    users
        .iter()
        .map(|u| {
            let achieved = if u.serving_uav.is_some() { u.achieved_rate } else { 0.0 };
            (achieved - u.target_rate).abs()
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::UserClass;
    use approx::assert_relative_eq;
    use std::f64::consts::FRAC_PI_2;

    fn params(form: PlosForm) -> RadioParams {
        RadioParams { plos_form: form, ..Default::default() }
    }

    #[test]
    fn los_probability_examples() {
        for form in [PlosForm::AsWritten, PlosForm::Standard] {
            assert!((los_probability(FRAC_PI_2, &params(form)) - 1.0).abs() < 1e-12);
        }
        let tiny = 1e-12;
        let written = los_probability(tiny, &params(PlosForm::AsWritten));
        assert_relative_eq!(written, 1.0 / (1.0 + 4.88 * (-4.88f64).exp()), epsilon = 1e-9);
        assert!((written - 0.9642).abs() < 1e-4);
        let standard = los_probability(tiny, &params(PlosForm::Standard));
        assert!((standard - 0.0245).abs() < 1e-4);
    }

    #[test]
    fn path_loss_examples() {
        let p = RadioParams::default();
        let diag = path_loss(Vec3::new(100.0, 0.0, 100.0), Vec3::ZERO, &p).unwrap();
        assert!((diag - 81.57).abs() < 0.01, "{diag}");
        let over = path_loss(Vec3::new(0.0, 0.0, 100.0), Vec3::ZERO, &p).unwrap();
        assert!((over - 78.56).abs() < 0.01, "{over}");

        let flat = RadioParams { eta_los: 7.0, eta_nlos: 7.0, ..Default::default() };
        let fs = 20.0 * (4.0 * std::f64::consts::PI * 2e9 * 100.0 / 3e8f64).log10();
        let pl = path_loss(Vec3::new(0.0, 0.0, 100.0), Vec3::ZERO, &flat).unwrap();
        assert_relative_eq!(pl, fs + 7.0, epsilon = 1e-9);
        let pl45 = path_loss(Vec3::new(100.0, 0.0, 100.0), Vec3::ZERO, &flat).unwrap();
        let d45 = 200f64.sqrt() * 10.0;
        let fs45 = 20.0 * (4.0 * std::f64::consts::PI * 2e9 * d45 / 3e8).log10();
        assert_relative_eq!(pl45, fs45 + 7.0, epsilon = 1e-9);
    }

    #[test]
    fn zero_distance_is_an_error() {
        let p = RadioParams::default();
        assert!(matches!(path_loss(Vec3::ZERO, Vec3::ZERO, &p), Err(Error::ZeroDistance)));
    }

    #[test]
    fn received_power_examples() {
        assert_relative_eq!(received_power_mw(37.0, 0.0), 5011.872336, epsilon = 1e-5);
        assert_eq!(received_power_mw(0.0, 0.0), 1.0);
        let pr = received_power_mw(37.0, 78.56);
        assert!((pr / 6.98e-5 - 1.0).abs() < 1e-3, "{pr}");
    }

    #[test]
    fn data_rate_examples() {
        assert_eq!(data_rate(1.0, 15e6), 15e6);
        assert_eq!(data_rate(3.0, 15e6), 30e6);
        let snr = 10f64.powf(3.844);
        assert!((data_rate(snr, 15e6) / 191.6e6 - 1.0).abs() < 1e-3);
        assert_eq!(data_rate(0.0, 15e6), 0.0);
    }

    fn one_user_at_origin() -> Vec<UserState> {
        vec![UserState::new(0, 0.0, 0.0, UserClass::Premium, 300e6)]
    }

    #[test]
    fn sinr_equal_power_and_noise_is_one() {
        let users = one_user_at_origin();
        let uavs = vec![UavState::new(0, Vec3::new(0.0, 0.0, 100.0))];
        let pl = path_loss(uavs[0].position, Vec3::ZERO, &RadioParams::default()).unwrap();
        // place the noise floor exactly at the received power
        let p = RadioParams { noise: 37.0 - pl, ..Default::default() };
        assert_relative_eq!(sinr(0, 0, &uavs, &users, &p).unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn sinr_without_co_channel_uav_is_snr() {
        let p = RadioParams::default();
        let users = one_user_at_origin();
        let mut uavs =
            vec![UavState::new(0, Vec3::new(0.0, 0.0, 100.0)), UavState::new(1, Vec3::new(50.0, 0.0, 100.0))];
        uavs[1].channel = 3;
        let pr = link_power_mw(uavs[0].position, Vec3::ZERO, &p).unwrap();
        assert_eq!(sinr(0, 0, &uavs, &users, &p).unwrap(), pr / dbm_to_mw(p.noise));
    }

    #[test]
    fn sinr_with_symmetric_interferer() {
        let p = RadioParams::default();
        let users = one_user_at_origin();
        let uavs = vec![
            UavState::new(0, Vec3::new(80.0, 0.0, 100.0)),
            UavState::new(1, Vec3::new(-80.0, 0.0, 100.0)),
        ];
        let pr = link_power_mw(uavs[0].position, Vec3::ZERO, &p).unwrap();
        let s = sinr(0, 0, &uavs, &users, &p).unwrap();
        assert_relative_eq!(s, pr / (dbm_to_mw(p.noise) + pr), max_relative = 1e-12);
        assert!(s < 1.0);
    }

    #[test]
    fn dead_uavs_do_not_interfere() {
        let p = RadioParams::default();
        let users = one_user_at_origin();
        let mut uavs = vec![
            UavState::new(0, Vec3::new(80.0, 0.0, 100.0)),
            UavState::new(1, Vec3::new(-80.0, 0.0, 100.0)),
        ];
        uavs[1].alive = false;
        let pr = link_power_mw(uavs[0].position, Vec3::ZERO, &p).unwrap();
        assert_eq!(sinr(0, 0, &uavs, &users, &p).unwrap(), pr / dbm_to_mw(p.noise));
    }

    #[test]
    fn p0_examples() {
        let mut a = UserState::new(0, 0.0, 0.0, UserClass::Regular, 100e6);
        a.serving_uav = Some(0);
        a.achieved_rate = 100e6;
        assert_eq!(p0_objective(&[a.clone()]), 0.0);

        let b = UserState::new(1, 0.0, 0.0, UserClass::Regular, 100e6);
        assert_eq!(p0_objective(&[b]), 1e8);

        let mut c = UserState::new(2, 0.0, 0.0, UserClass::Premium, 300e6);
        c.serving_uav = Some(0);
        c.achieved_rate = 310e6;
        a.achieved_rate = 90e6;
        assert_eq!(p0_objective(&[a, c]), 2e7);
    }

    use proptest::prelude::*;

    proptest! {
        #[test]
        fn los_probability_bounded_and_monotone(k in 1usize..1000) {
            for form in [PlosForm::AsWritten, PlosForm::Standard] {
                let p = params(form);
                let lo = los_probability(FRAC_PI_2 * (k as f64 - 1.0).max(1e-9) / 1000.0, &p);
                let hi = los_probability(FRAC_PI_2 * k as f64 / 1000.0, &p);
                prop_assert!((0.0..=1.0).contains(&lo) && (0.0..=1.0).contains(&hi));
                prop_assert!(hi >= lo);
            }
        }

        #[test]
        fn path_loss_increases_with_distance(scale in 1.0..20.0f64, step in 1e-3..1.0f64, ang in 0.05..1.5f64) {
            let p = RadioParams::default();
            let dir = Vec3::new(ang.cos(), 0.0, ang.sin());
            let a = path_loss(dir * (scale * 100.0), Vec3::ZERO, &p).unwrap();
            let b = path_loss(dir * (scale * 100.0 + step), Vec3::ZERO, &p).unwrap();
            prop_assert!(b > a);
        }

        #[test]
        fn interference_never_helps(x0 in -300.0..300.0f64, y0 in -300.0..300.0f64, x1 in -300.0..300.0f64, y1 in -300.0..300.0f64) {
            let p = RadioParams::default();
            let users = one_user_at_origin();
            let mut uavs = vec![
                UavState::new(0, Vec3::new(x0, y0, 100.0)),
                UavState::new(1, Vec3::new(x1, y1, 100.0)),
            ];
            let with = sinr(0, 0, &uavs, &users, &p).unwrap();
            uavs[1].channel = 1;
            let without = sinr(0, 0, &uavs, &users, &p).unwrap();
            prop_assert!(with <= without);
        }

        #[test]
        fn rate_strictly_increasing(s in 0.0..1e6f64, ds in 1e-3..10.0f64) {
            prop_assert!(data_rate(s + ds, 15e6) > data_rate(s, 15e6));
        }
    }
}
