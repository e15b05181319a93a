//! Surrogate human drivers: a bounded, noisy, delayed optimal velocity model.

use std::collections::VecDeque;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OvmParams {
    /// Relaxation rate towards the optimal velocity, 1/s.
    pub sensitivity: f64,
    pub v_max: f64,
    pub form_offset: f64,
    pub form_scale: f64,
    /// Gap scale, m.
    pub length_scale: f64,
    pub max_accel: f64,
    /// Magnitude of the strongest deceleration, m/s^2.
    pub max_decel: f64,
    /// Std of the additive acceleration noise, m/s^2.
    pub noise_std: f64,
    /// Perception-reaction delay, s.
    pub reaction_delay: f64,
}

impl Default for OvmParams {
    /// 21 vehicles on 260 m settle near 7 m/s, just past the stability
    /// boundary, so stop-and-go waves form within about 100 s.
    fn default() -> Self {
        Self {
            sensitivity: 2.0,
            v_max: 12.0,
            form_offset: 1.266,
            form_scale: 1.5,
            length_scale: 5.0,
            max_accel: 1.5,
            max_decel: 9.0,
            noise_std: 0.1,
            reaction_delay: 0.2,
        }
    }
}

impl OvmParams {
    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.sensitivity,
            self.v_max,
            self.form_offset,
            self.form_scale,
            self.length_scale,
            self.max_accel,
            self.max_decel,
            self.noise_std,
            self.reaction_delay,
        ]
        .iter()
        .all(|x| x.is_finite());
        if !finite {
            return Err(invalid("driver parameters must be finite"));
        }
        if self.sensitivity <= 0.0 || self.v_max <= 0.0 || self.length_scale <= 0.0 {
            return Err(invalid("sensitivity, v_max and length_scale must be positive"));
        }
        if !(self.max_decel > self.max_accel && self.max_accel > 0.0) {
            return Err(invalid("need max_decel > max_accel > 0"));
        }
        if self.noise_std < 0.0 || self.reaction_delay < 0.0 {
            return Err(invalid("noise_std and reaction_delay must be non-negative"));
        }
        Ok(())
    }

    fn denominator(&self) -> f64 {
        1.0 + self.form_scale.tanh()
    }

    fn raw_velocity(&self, gap: f64) -> f64 {
        self.v_max * ((gap / self.length_scale - self.form_offset).tanh() + self.form_scale.tanh()) / self.denominator()
    }
}

/// Preferred speed for a given gap, in `[0, v_max]`.
pub fn optimal_velocity(gap: f64, p: &OvmParams) -> f64 {
    p.raw_velocity(gap.max(0.0)).clamp(0.0, p.v_max)
}

/// Analytic `dV/dgap`, zero where the clamp is active.
pub fn optimal_velocity_slope(gap: f64, p: &OvmParams) -> f64 {
    let raw = p.raw_velocity(gap.max(0.0));
    if raw <= 0.0 || raw >= p.v_max {
        return 0.0;
    }
    let sech = 1.0 / (gap / p.length_scale - p.form_offset).cosh();
    p.v_max * sech * sech / (p.length_scale * p.denominator())
}

/// Deterministic part of the driver response: `clamp(k (V(gap) - v))`.
pub fn ovm_acceleration(gap: f64, v: f64, p: &OvmParams) -> f64 {
    (p.sensitivity * (optimal_velocity(gap, p) - v)).clamp(-p.max_decel, p.max_accel)
}

/// `V'(gap*) - k/2`. Positive means small perturbations grow along the
/// platoon (linear string instability of the undelayed model).
pub fn string_stability_margin(p: &OvmParams, equilibrium_gap: f64) -> Result<f64> {
    if !(equilibrium_gap > 0.0) {
        return Err(invalid(format!("equilibrium gap must be positive, got {equilibrium_gap}")));
    }
    Ok(optimal_velocity_slope(equilibrium_gap, p) - p.sensitivity / 2.0)
}

/// One human driver: observation delay line plus actuation noise.
#[derive(Debug, Clone)]
pub struct HumanDriver {
    params: OvmParams,
    delay_ticks: usize,
    history: VecDeque<(f64, f64)>,
    noise: Option<Normal<f64>>,
}

impl HumanDriver {
    pub fn new(params: OvmParams, dt: f64) -> Result<Self> {
        params.validate()?;
        let delay_ticks = (params.reaction_delay / dt).round() as usize;
        let noise = if params.noise_std > 0.0 {
            Some(Normal::new(0.0, params.noise_std).map_err(|e| invalid(e.to_string()))?)
        } else {
            None
        };
        Ok(Self { params, delay_ticks, history: VecDeque::with_capacity(delay_ticks + 1), noise })
    }

    pub fn params(&self) -> &OvmParams {
        &self.params
    }

    /// Records the current observation and returns the commanded
    /// acceleration based on the observation `reaction_delay` ago. Until the
    /// delay line fills, the oldest observation is used.
    pub fn acceleration<R: Rng + ?Sized>(&mut self, gap: f64, v: f64, rng: &mut R) -> f64 {
        self.history.push_back((gap, v));
        if self.history.len() > self.delay_ticks + 1 {
            self.history.pop_front();
        }
        let (g, vd) = self.history[0];
        let a = ovm_acceleration(g, vd, &self.params);
        match &self.noise {
            Some(n) => a + n.sample(rng),
            None => a,
        }
    }

    /// Forget the delay line (used when a controller hands back control).
    pub fn reset(&mut self) {
        self.history.clear();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn saturates_at_v_max() {
        let p = OvmParams::default();
        assert_relative_eq!(optimal_velocity(1.0e4, &p), p.v_max, epsilon = 1e-9);
        let raw0 = p.v_max * ((-p.form_offset).tanh() + p.form_scale.tanh()) / (1.0 + p.form_scale.tanh());
        assert_relative_eq!(optimal_velocity(0.0, &p), raw0.max(0.0), epsilon = 1e-12);
        let steep = OvmParams { form_scale: 1.0, ..p };
        assert_eq!(optimal_velocity(0.0, &steep), 0.0);
    }

    #[test]
    fn symmetry_point() {
        let p = OvmParams { form_scale: 1.3, ..OvmParams::default() };
        let expect = p.v_max * p.form_scale.tanh() / (1.0 + p.form_scale.tanh());
        assert_relative_eq!(optimal_velocity(p.length_scale * p.form_offset, &p), expect, epsilon = 1e-12);
    }

    #[test]
    fn acceleration_examples() {
        let p = OvmParams { noise_std: 0.0, ..OvmParams::default() };
        let g = 7.0;
        assert_eq!(ovm_acceleration(g, optimal_velocity(g, &p), &p), 0.0);
        assert_eq!(ovm_acceleration(1.0e4, 0.0, &p), p.max_accel);
        // k = 0.8, V = 5, v = 7
        let q = OvmParams { sensitivity: 0.8, v_max: 10.0, form_offset: 0.0, form_scale: 20.0, ..p };
        // tanh(20) rounds to 1, so V(0) = v_max / 2 = 5
        let gap = 0.0;
        assert_relative_eq!(optimal_velocity(gap, &q), 5.0, epsilon = 1e-9);
        assert_relative_eq!(ovm_acceleration(gap, 7.0, &q), -1.6, epsilon = 1e-8);
    }

    #[test]
    fn slope_matches_finite_difference() {
        let p = OvmParams::default();
        for gap in [4.0, 6.0, 7.0, 7.32, 9.0, 12.0] {
            let h = 1e-5;
            let fd = (optimal_velocity(gap + h, &p) - optimal_velocity(gap - h, &p)) / (2.0 * h);
            assert!((fd - optimal_velocity_slope(gap, &p)).abs() < 1e-6, "gap {gap}");
        }
    }

    #[test]
    fn margin_sign() {
        let stiff = OvmParams { sensitivity: 1.0e3, ..OvmParams::default() };
        assert!(string_stability_margin(&stiff, 7.32).unwrap() < 0.0);
        assert!(string_stability_margin(&OvmParams::default(), 7.32).unwrap() > 0.0);
        assert!(string_stability_margin(&stiff, 0.0).is_err());
    }

    #[test]
    fn delay_line_lags_observations() {
        let p = OvmParams { noise_std: 0.0, reaction_delay: 0.1, ..OvmParams::default() };
        let mut d = HumanDriver::new(p, 0.05).unwrap();
        let mut rng = rand::rng();
        let a0 = d.acceleration(100.0, 0.0, &mut rng);
        assert_eq!(a0, p.max_accel);
        d.acceleration(0.0, 5.0, &mut rng);
        // still reacting to the first observation
        assert_eq!(d.acceleration(0.0, 5.0, &mut rng), p.max_accel);
        assert_eq!(d.acceleration(0.0, 5.0, &mut rng), -p.max_decel.min(p.sensitivity * 5.0));
    }

    #[test]
    fn invalid_params_rejected() {
        let bad = OvmParams { max_accel: 5.0, max_decel: 4.0, ..OvmParams::default() };
        assert!(bad.validate().is_err());
        assert!(HumanDriver::new(bad, 0.05).is_err());
    }

    proptest! {
        #[test]
        fn bounded_and_monotone(
            a in 0.0f64..60.0, b in 0.0f64..60.0,
            k in 0.1f64..3.0, vmax in 1.0f64..30.0, c1 in -1.0f64..4.0, c2 in -1.0f64..4.0, d0 in 0.5f64..10.0,
        ) {
            let p = OvmParams { sensitivity: k, v_max: vmax, form_offset: c1, form_scale: c2, length_scale: d0, ..OvmParams::default() };
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let (vl, vh) = (optimal_velocity(lo, &p), optimal_velocity(hi, &p));
            prop_assert!((0.0..=vmax).contains(&vl));
            prop_assert!((0.0..=vmax).contains(&vh));
            prop_assert!(vl <= vh);
        }
    }
}
