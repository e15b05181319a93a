//! A trained human emulating the follower-stopper law by eye: the desired
//! speed is read off a speedometer in whole mph and reactions lag.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::follower_stopper::{follower_stopper_with, FollowerStopperConfig};
use super::ControllerInput;
use crate::error::{invalid, Result};

pub const MPH: f64 = 0.44704;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HumanAvgConfig {
    /// Speedometer resolution, m/s.
    pub quantum: f64,
    /// Refresh period of the observer's lap average, s. `None` refreshes
    /// once per completed lap of the controlled vehicle.
    pub update_period: Option<f64>,
    /// Delay before a new lap average reaches the driver, s.
    pub reaction_lag: f64,
    pub follower_stopper: FollowerStopperConfig,
}

impl Default for HumanAvgConfig {
    fn default() -> Self {
        Self {
            quantum: MPH,
            update_period: None,
            reaction_lag: 2.0,
            follower_stopper: FollowerStopperConfig::default(),
        }
    }
}

impl HumanAvgConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.quantum > 0.0) {
            return Err(invalid("speed quantum must be positive"));
        }
        if self.reaction_lag < 0.0 {
            return Err(invalid("reaction lag must be non-negative"));
        }
        if let Some(p) = self.update_period {
            if !(p > 0.0) {
                return Err(invalid("update period must be positive"));
            }
        }
        self.follower_stopper.validate()
    }
}

pub fn quantize(v: f64, quantum: f64) -> f64 {
    (v / quantum).round() * quantum
}

/// Follower-stopper with the setpoint rounded to the speedometer quantum.
/// Input delay is handled by [`HumanAvgController`].
pub fn human_avg_controller(input: &ControllerInput, cfg: &HumanAvgConfig, lap_avg: f64) -> f64 {
    let u = quantize(lap_avg, cfg.quantum);
    follower_stopper_with(input.gap, input.dv, input.lead_velocity(), u, &cfg.follower_stopper)
}

/// The human operator: sees the gap after `perception_delay` and receives
/// each lap average `reaction_lag` after it was computed.
#[derive(Debug, Clone)]
pub struct HumanAvgController {
    pub cfg: HumanAvgConfig,
    perception_ticks: usize,
    lag_ticks: usize,
    seen: VecDeque<ControllerInput>,
    heard: VecDeque<f64>,
}

impl HumanAvgController {
    pub fn new(cfg: HumanAvgConfig, perception_delay: f64, dt: f64) -> Result<Self> {
        cfg.validate()?;
        if !(perception_delay >= 0.0) {
            return Err(invalid("perception delay must be non-negative"));
        }
        Ok(Self {
            perception_ticks: (perception_delay / dt).round() as usize,
            lag_ticks: (cfg.reaction_lag / dt).round() as usize,
            seen: VecDeque::new(),
            heard: VecDeque::new(),
            cfg,
        })
    }

    pub fn command(&mut self, input: ControllerInput, lap_avg: f64) -> f64 {
        self.seen.push_back(input);
        if self.seen.len() > self.perception_ticks + 1 {
            self.seen.pop_front();
        }
        self.heard.push_back(lap_avg);
        if self.heard.len() > self.lag_ticks + 1 {
            self.heard.pop_front();
        }
        human_avg_controller(&self.seen[0], &self.cfg, self.heard[0])
    }

    pub fn reset(&mut self) {
        self.seen.clear();
        self.heard.clear();
    }
}
