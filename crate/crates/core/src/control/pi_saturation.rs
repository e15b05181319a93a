//! Proportional-integral speed control with gap-dependent saturation.
//!
//! The desired speed is the running mean of the controlled vehicle's own
//! speed; the command blends that target, the lead vehicle's speed and the
//! previous command with gap-dependent weights.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::ControllerInput;
use crate::error::{invalid, Error, Result};

/// Which speed the safety-distance term multiplies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SafetyBasis {
    /// `max(t_s * dv, floor)`, with `dv` the gap rate.
    #[default]
    RelativeSpeed,
    /// `max(t_s * v_av, floor)`: the conventional time-headway rule.
    EgoSpeed,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PiSatConfig {
    /// Averaging window for the desired velocity, s.
    pub window: f64,
    pub g_l: f64,
    pub g_u: f64,
    pub v_catch: f64,
    pub gamma: f64,
    pub safety_time: f64,
    pub safety_floor: f64,
    pub safety_basis: SafetyBasis,
}

impl Default for PiSatConfig {
    fn default() -> Self {
        Self {
            window: 38.0,
            g_l: 7.0,
            g_u: 30.0,
            v_catch: 1.0,
            gamma: 2.0,
            safety_time: 2.0,
            safety_floor: 4.0,
            safety_basis: SafetyBasis::RelativeSpeed,
        }
    }
}

impl PiSatConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.g_l < self.g_u) {
            return Err(invalid(format!("need g_l < g_u, got {} and {}", self.g_l, self.g_u)));
        }
        if !(self.gamma > 0.0 && self.window > 0.0) {
            return Err(invalid("gamma and window must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PiSatState {
    capacity: usize,
    history: VecDeque<f64>,
    prev_cmd: Option<f64>,
}

impl PiSatState {
    /// History sized to `window / dt` samples.
    pub fn new(cfg: &PiSatConfig, dt: f64) -> Self {
        let capacity = ((cfg.window / dt).round() as usize).max(1);
        Self::with_capacity(capacity)
    }

    pub fn with_capacity(capacity: usize) -> Self {
        Self { capacity: capacity.max(1), history: VecDeque::with_capacity(capacity.max(1)), prev_cmd: None }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.history.len()
    }

    pub fn is_empty(&self) -> bool {
        self.history.is_empty()
    }

    pub fn push(&mut self, v_av: f64) {
        if self.history.len() == self.capacity {
            self.history.pop_front();
        }
        self.history.push_back(v_av);
    }

    pub fn prev_cmd(&self) -> Option<f64> {
        self.prev_cmd
    }

    /// Sets the previous command, e.g. to the current speed at activation.
    pub fn set_prev_cmd(&mut self, v: f64) {
        self.prev_cmd = Some(v.max(0.0));
    }
}

/// Mean of the buffered speeds.
pub fn pi_desired_velocity(state: &PiSatState) -> Result<f64> {
    if state.history.is_empty() {
        return Err(Error::InsufficientData("no velocity history yet".into()));
    }
    Ok(state.history.iter().sum::<f64>() / state.history.len() as f64)
}

pub fn pi_target_velocity(u: f64, gap: f64, cfg: &PiSatConfig) -> f64 {
    u + cfg.v_catch * ((gap - cfg.g_l) / (cfg.g_u - cfg.g_l)).clamp(0.0, 1.0)
}

/// Safety distance for the given gap rate and ego speed.
pub fn safety_distance(dv: f64, v_av: f64, cfg: &PiSatConfig) -> f64 {
    let speed = match cfg.safety_basis {
        SafetyBasis::RelativeSpeed => dv,
        SafetyBasis::EgoSpeed => v_av,
    };
    (cfg.safety_time * speed).max(cfg.safety_floor)
}

/// Blend weights `(alpha, beta)`.
pub fn pi_alpha_beta(gap: f64, dv: f64, v_av: f64, cfg: &PiSatConfig) -> (f64, f64) {
    let dxs = safety_distance(dv, v_av, cfg);
    let alpha = ((gap - dxs) / cfg.gamma).clamp(0.0, 1.0);
    (alpha, 1.0 - 0.5 * alpha)
}

/// Next command; updates the stored previous command. An uninitialized
/// state uses the target as the previous command.
pub fn pi_command_update(state: &mut PiSatState, v_target: f64, v_lead: f64, alpha: f64, beta: f64) -> f64 {
    let prev = state.prev_cmd.unwrap_or(v_target);
    let cmd = (beta * (alpha * v_target + (1.0 - alpha) * v_lead) + (1.0 - beta) * prev).max(0.0);
    state.prev_cmd = Some(cmd);
    cmd
}

/// The full controller: record speed, average, saturate, blend.
#[derive(Debug, Clone)]
pub struct PiSaturation {
    pub cfg: PiSatConfig,
    pub state: PiSatState,
}

impl PiSaturation {
    pub fn new(cfg: PiSatConfig, dt: f64) -> Result<Self> {
        cfg.validate()?;
        Ok(Self { state: PiSatState::new(&cfg, dt), cfg })
    }

    /// Called at activation: bumpless start from the current speed.
    pub fn activate(&mut self, v_av: f64) {
        self.state.set_prev_cmd(v_av);
    }

    /// Records a speed sample without producing a command (history keeps
    /// filling while the vehicle is human-driven).
    pub fn observe(&mut self, v_av: f64) {
        self.state.push(v_av);
    }

    pub fn command(&mut self, input: &ControllerInput) -> Result<f64> {
        self.state.push(input.v_av);
        if self.state.prev_cmd.is_none() {
            self.state.set_prev_cmd(input.v_av);
        }
        let u = pi_desired_velocity(&self.state)?;
        let target = pi_target_velocity(u, input.gap, &self.cfg);
        let (alpha, beta) = pi_alpha_beta(input.gap, input.dv, input.v_av, &self.cfg);
        Ok(pi_command_update(&mut self.state, target, input.lead_velocity(), alpha, beta))
    }
}
