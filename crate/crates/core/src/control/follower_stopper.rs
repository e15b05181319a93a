//! Piecewise-linear commanded velocity over three parabolic gap boundaries.

use serde::{Deserialize, Serialize};

use super::ControllerInput;
use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FollowerStopperConfig {
    /// Boundary intercepts at zero closing speed, m.
    pub dx0: [f64; 3],
    /// Deceleration rates shaping each boundary, m/s^2.
    pub decel: [f64; 3],
}

impl Default for FollowerStopperConfig {
    fn default() -> Self {
        Self { dx0: [4.5, 5.25, 6.0], decel: [1.5, 1.0, 0.5] }
    }
}

impl FollowerStopperConfig {
    pub fn validate(&self) -> Result<()> {
        let [x1, x2, x3] = self.dx0;
        let [d1, d2, d3] = self.decel;
        if !(x1 < x2 && x2 < x3) {
            return Err(invalid(format!("intercepts must increase, got {:?}", self.dx0)));
        }
        if !(d1 > d2 && d2 > d3 && d3 > 0.0) {
            return Err(invalid(format!("deceleration rates must decrease and stay positive, got {:?}", self.decel)));
        }
        Ok(())
    }
}

/// Region boundaries `dx_k = dx_k0 + min(dv, 0)^2 / (2 d_k)`.
pub fn fs_boundaries(dv: f64, cfg: &FollowerStopperConfig) -> [f64; 3] {
    let closing = dv.min(0.0);
    let mut out = [0.0; 3];
    for (k, b) in out.iter_mut().enumerate() {
        *b = cfg.dx0[k] + closing * closing / (2.0 * cfg.decel[k]);
    }
    out
}

/// Commanded velocity. Requires an externally supplied desired velocity.
pub fn follower_stopper(input: &ControllerInput, cfg: &FollowerStopperConfig) -> Result<f64> {
    let u = input.desired.ok_or_else(|| invalid("follower stopper needs a desired velocity"))?;
    Ok(follower_stopper_with(input.gap, input.dv, input.lead_velocity(), u, cfg))
}

pub(crate) fn follower_stopper_with(gap: f64, dv: f64, v_lead: f64, u: f64, cfg: &FollowerStopperConfig) -> f64 {
    let u = u.max(0.0);
    let v = v_lead.max(0.0).min(u);
    let [x1, x2, x3] = fs_boundaries(dv, cfg);
    if gap <= x1 {
        0.0
    } else if gap <= x2 {
        v * (gap - x1) / (x2 - x1)
    } else if gap <= x3 {
        v + (u - v) * (gap - x2) / (x3 - x2)
    } else {
        u
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn input(gap: f64, dv: f64, v_av: f64, u: f64) -> ControllerInput {
        ControllerInput { v_av, gap, dv, desired: Some(u) }
    }

    #[test]
    fn boundary_examples() {
        let cfg = FollowerStopperConfig::default();
        let b = fs_boundaries(-3.0, &cfg);
        assert!((b[0] - 7.5).abs() < 1e-12 && (b[1] - 9.75).abs() < 1e-12 && (b[2] - 15.0).abs() < 1e-12);
        assert_eq!(fs_boundaries(0.0, &cfg), [4.5, 5.25, 6.0]);
        assert_eq!(fs_boundaries(2.0, &cfg), [4.5, 5.25, 6.0]);
    }

    #[test]
    fn four_regions() {
        let cfg = FollowerStopperConfig::default();
        assert_eq!(follower_stopper(&input(20.0, 0.0, 7.5, 7.5), &cfg).unwrap(), 7.5);
        assert_eq!(follower_stopper(&input(3.0, 0.0, 3.0, 7.5), &cfg).unwrap(), 0.0);
        assert_eq!(follower_stopper(&input(3.0, 1.5, 3.0, 7.5), &cfg).unwrap(), 0.0);
        // v_lead = v_av + dv = 3
        let b2 = follower_stopper(&input(5.0, 0.0, 3.0, 7.5), &cfg).unwrap();
        assert!((b2 - 2.0).abs() < 1e-12, "{b2}");
        let b3 = follower_stopper(&input(5.5, 0.0, 3.0, 7.5), &cfg).unwrap();
        assert!((b3 - 4.5).abs() < 1e-12, "{b3}");
    }

    #[test]
    fn missing_setpoint_is_an_error() {
        let cfg = FollowerStopperConfig::default();
        let mut i = input(10.0, 0.0, 5.0, 7.0);
        i.desired = None;
        assert!(follower_stopper(&i, &cfg).is_err());
    }

    #[test]
    fn config_validation() {
        assert!(FollowerStopperConfig::default().validate().is_ok());
        let bad = FollowerStopperConfig { decel: [0.5, 1.0, 1.5], ..Default::default() };
        assert!(bad.validate().is_err());
    }

    proptest! {
        #[test]
        fn boundaries_stay_ordered(dv in -30.0f64..30.0) {
            let b = fs_boundaries(dv, &FollowerStopperConfig::default());
            prop_assert!(b[0] < b[1] && b[1] < b[2]);
        }

        #[test]
        fn output_within_zero_and_setpoint(
            gap in 0.0f64..60.0, dv in -10.0f64..10.0, v_av in 0.0f64..15.0, u in 0.0f64..15.0,
        ) {
            let cmd = follower_stopper(&input(gap, dv, v_av, u), &FollowerStopperConfig::default()).unwrap();
            prop_assert!(cmd >= 0.0 && cmd <= u + 1e-12);
        }

        #[test]
        fn monotone_in_gap(
            a in 0.0f64..40.0, b in 0.0f64..40.0, dv in -8.0f64..8.0, v_av in 0.0f64..12.0, u in 0.0f64..12.0,
        ) {
            let cfg = FollowerStopperConfig::default();
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let c_lo = follower_stopper(&input(lo, dv, v_av, u), &cfg).unwrap();
            let c_hi = follower_stopper(&input(hi, dv, v_av, u), &cfg).unwrap();
            prop_assert!(c_lo <= c_hi + 1e-12);
        }
    }
}
