//! Wave-dampening control laws for the instrumented vehicle.

pub mod follower_stopper;
pub mod human_avg;
pub mod pi_saturation;
pub mod smoothing;

pub use follower_stopper::{follower_stopper, fs_boundaries, FollowerStopperConfig};
pub use human_avg::{human_avg_controller, quantize, HumanAvgConfig, HumanAvgController};
pub use pi_saturation::{
    pi_alpha_beta, pi_command_update, pi_desired_velocity, pi_target_velocity, PiSatConfig, PiSatState, PiSaturation,
    SafetyBasis,
};
pub use smoothing::{smooth_gap_signal, GapFilter, SmoothingConfig};

/// What the controller sees at one tick.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControllerInput {
    /// Own speed, m/s.
    pub v_av: f64,
    /// Smoothed gap to the leader, m.
    pub gap: f64,
    /// Smoothed gap rate, `v_lead - v_av`, m/s.
    pub dv: f64,
    /// Externally supplied desired velocity, m/s.
    pub desired: Option<f64>,
}

impl ControllerInput {
    pub fn lead_velocity(&self) -> f64 {
        self.v_av + self.dv
    }
}
