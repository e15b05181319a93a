//! Surrogate instantaneous fuel model.
//!
//! `rate = idle + c_v v + c_d v^3 + c_a v max(a, 0)`, never below idle.
//! The shape follows the usual power-demand decomposition: rolling
//! resistance, aerodynamic drag and inertial power.

use serde::{Deserialize, Serialize};

/// Cruise speed at which per-vehicle calibration is anchored, m/s.
pub const CALIBRATION_SPEED: f64 = 7.5;
/// Steady cruise consumption at [`CALIBRATION_SPEED`] as a fraction of the
/// EPA city rating. City cycles include stops, so cruise sits below it.
pub const CRUISE_TO_CITY_RATIO: f64 = 0.85;
/// City rating (l/100km) of the reference parameter set.
pub const REFERENCE_CITY: f64 = 11.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FuelModelParams {
    /// l/s at rest.
    pub idle_rate: f64,
    /// l/m.
    pub v_coeff: f64,
    /// l s^2 / m^3.
    pub drag_coeff: f64,
    /// l s / m^2, multiplies `v * max(a, 0)`.
    pub accel_coeff: f64,
}

impl Default for FuelModelParams {
    fn default() -> Self {
        Self::reference()
    }
}

impl FuelModelParams {
    /// Mid-size sedan rated [`REFERENCE_CITY`] l/100km.
    pub fn reference() -> Self {
        let idle_rate = 2.5e-4;
        let v_coeff = 5.0e-5;
        let accel_coeff = 1.5e-4;
        // solve the drag term so steady cruise hits the target exactly
        let v = CALIBRATION_SPEED;
        let target = CRUISE_TO_CITY_RATIO * REFERENCE_CITY / 1.0e5 * v;
        let drag_coeff = (target - idle_rate - v_coeff * v) / v.powi(3);
        Self { idle_rate, v_coeff, drag_coeff, accel_coeff }
    }

    /// Reference parameters scaled to a vehicle's EPA city rating.
    pub fn calibrated(city_l_per_100km: f64) -> Self {
        let s = city_l_per_100km / REFERENCE_CITY;
        let r = Self::reference();
        Self {
            idle_rate: r.idle_rate * s,
            v_coeff: r.v_coeff * s,
            drag_coeff: r.drag_coeff * s,
            accel_coeff: r.accel_coeff * s,
        }
    }

    pub fn is_valid(&self) -> bool {
        [self.idle_rate, self.v_coeff, self.drag_coeff, self.accel_coeff].iter().all(|c| c.is_finite() && *c >= 0.0)
            && self.idle_rate > 0.0
    }
}

/// Instantaneous consumption in l/s.
pub fn fuel_rate(v: f64, a: f64, p: &FuelModelParams) -> f64 {
    let v = v.max(0.0);
    let demand = p.idle_rate + p.v_coeff * v + p.drag_coeff * v.powi(3) + p.accel_coeff * v * a.max(0.0);
    demand.max(p.idle_rate)
}
