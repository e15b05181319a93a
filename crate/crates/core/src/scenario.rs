//! Scenario description and its TOML file format.
//!
//! ```toml
//! name = "experiment-a"
//! duration = 567.0
//! dt = 0.05
//! seed = 1
//! av_index = 0
//!
//! [track]
//! circumference = 260.0
//!
//! [fleet]
//! size = 21
//!
//! [driver]
//! sensitivity = 0.6
//!
//! [controller]
//! kind = "follower_stopper"
//!
//! [[events]]
//! time = 126.0
//! kind = "activate_controller"
//!
//! [[events]]
//! time = 126.0
//! kind = "set_u"
//! value = 6.5
//! ```
//!
//! Every table except `[track]` and `[fleet]` is optional and falls back to
//! the calibrated defaults.

use serde::{Deserialize, Serialize};

use crate::actuation::{ActuationGains, IdealTracker, PlantParams};
use crate::control::{FollowerStopperConfig, HumanAvgConfig, PiSatConfig, SmoothingConfig};
use crate::driver::OvmParams;
use crate::error::{invalid, Result};
use crate::fleet;
use crate::ring::{CollisionPolicy, Ring, RingTrack, VehicleSpec};

pub const DEFAULT_DT: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FleetConfig {
    /// Number of vehicles; the fleet table is used in order.
    pub size: usize,
    /// Replace the table with identical vehicles of this length.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub uniform_length: Option<f64>,
}

impl FleetConfig {
    pub fn specs(&self) -> Result<Vec<VehicleSpec>> {
        match self.uniform_length {
            Some(len) => fleet::uniform_specs(self.size, len),
            None => fleet::fleet_specs(self.size),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControllerKind {
    FollowerStopper,
    PiSaturation,
    HumanAvg,
    #[default]
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActuationKind {
    /// Switched PID on the first-order plant.
    #[default]
    Pid,
    /// Rate-limited direct tracking of the commanded speed.
    Ideal,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ControllerConfig {
    pub kind: ControllerKind,
    pub actuation: ActuationKind,
    /// Std of additive gap sensor noise, m.
    pub sensor_noise: f64,
    pub follower_stopper: FollowerStopperConfig,
    pub pi_saturation: PiSatConfig,
    pub human_avg: HumanAvgConfig,
    pub smoothing: SmoothingConfig,
    pub plant: PlantParams,
    pub gains: ActuationGains,
    pub ideal: IdealTracker,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialCondition {
    /// Front bumpers evenly spaced, everyone stopped.
    #[default]
    Rest,
    /// Equal gaps, everyone at the optimal velocity for that gap.
    Equilibrium,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EventKind {
    ActivateController,
    DeactivateController,
    #[serde(rename = "set_u")]
    SetU {
        value: f64,
    },
    MarkInterval {
        label: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioEvent {
    pub time: f64,
    #[serde(flatten)]
    pub kind: EventKind,
}

impl ScenarioEvent {
    pub fn new(time: f64, kind: EventKind) -> Self {
        Self { time, kind }
    }
}

fn default_dt() -> f64 {
    DEFAULT_DT
}

fn default_threshold() -> f64 {
    crate::metrics::DEFAULT_WAVE_THRESHOLD
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default)]
    pub name: String,
    pub duration: f64,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default)]
    pub seed: u64,
    /// Index of the instrumented vehicle in ring order.
    #[serde(default)]
    pub av_index: usize,
    #[serde(default)]
    pub collision_policy: CollisionPolicy,
    #[serde(default)]
    pub initial: InitialCondition,
    /// Velocity std marking a wave, m/s.
    #[serde(default = "default_threshold")]
    pub wave_threshold: f64,
    #[serde(default)]
    pub track: RingTrack,
    pub fleet: FleetConfig,
    #[serde(default)]
    pub driver: OvmParams,
    #[serde(default)]
    pub controller: ControllerConfig,
    #[serde(default)]
    pub events: Vec<ScenarioEvent>,
}

impl Scenario {
    /// An uncontrolled ring with default drivers.
    pub fn uncontrolled(n: usize, duration: f64, seed: u64) -> Self {
        Self {
            name: format!("uncontrolled-{n}"),
            duration,
            dt: DEFAULT_DT,
            seed,
            av_index: 0,
            collision_policy: CollisionPolicy::Strict,
            initial: InitialCondition::Rest,
            wave_threshold: default_threshold(),
            track: RingTrack::default(),
            fleet: FleetConfig { size: n, uniform_length: None },
            driver: OvmParams::default(),
            controller: ControllerConfig::default(),
            events: Vec::new(),
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn ring(&self) -> Result<Ring> {
        Ring::new(self.track, self.fleet.specs()?)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.duration.is_finite() && self.duration > 0.0) {
            return Err(invalid(format!("duration must be positive, got {}", self.duration)));
        }
        if !(self.dt.is_finite() && self.dt > 0.0 && self.dt < self.duration) {
            return Err(invalid(format!("dt must be positive and below the duration, got {}", self.dt)));
        }
        if self.av_index >= self.fleet.size {
            return Err(invalid(format!("av_index {} out of range for {} vehicles", self.av_index, self.fleet.size)));
        }
        if !(self.wave_threshold >= 0.0) {
            return Err(invalid("wave threshold must be non-negative"));
        }
        for w in self.events.windows(2) {
            if w[1].time < w[0].time {
                return Err(invalid("events must be sorted by time"));
            }
        }
        for e in &self.events {
            if !(0.0..=self.duration).contains(&e.time) {
                return Err(invalid(format!("event at t={} lies outside [0, {}]", e.time, self.duration)));
            }
            if let EventKind::SetU { value } = e.kind {
                if !(value.is_finite() && value >= 0.0) {
                    return Err(invalid(format!("set_u value must be non-negative, got {value}")));
                }
            }
        }
        let has_activation = self.events.iter().any(|e| e.kind == EventKind::ActivateController);
        if has_activation && self.controller.kind == ControllerKind::None {
            return Err(invalid("activate_controller needs a controller kind"));
        }
        self.driver.validate()?;
        self.controller.follower_stopper.validate()?;
        self.controller.pi_saturation.validate()?;
        self.controller.human_avg.validate()?;
        self.controller.plant.validate()?;
        self.controller.gains.validate()?;
        if !(self.controller.sensor_noise >= 0.0) {
            return Err(invalid("sensor noise must be non-negative"));
        }
        self.ring()?;
        Ok(())
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let s: Scenario = toml::from_str(text)?;
        s.validate()?;
        Ok(s)
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    /// Time of the first activation, if any.
    pub fn activation_time(&self) -> Option<f64> {
        self.events.iter().find(|e| e.kind == EventKind::ActivateController).map(|e| e.time)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_file_uses_defaults() {
        let s = Scenario::from_toml(
            r#"
            duration = 60.0
            [track]
            circumference = 260.0
            [fleet]
            size = 21
            "#,
        )
        .unwrap();
        assert_eq!(s.dt, DEFAULT_DT);
        assert_eq!(s.driver, OvmParams::default());
        assert_eq!(s.controller.kind, ControllerKind::None);
        assert_eq!(s.wave_threshold, 2.5);
    }

    #[test]
    fn events_roundtrip() {
        let mut s = Scenario::uncontrolled(21, 100.0, 3);
        s.controller.kind = ControllerKind::FollowerStopper;
        s.events = vec![
            ScenarioEvent::new(10.0, EventKind::ActivateController),
            ScenarioEvent::new(10.0, EventKind::SetU { value: 6.5 }),
            ScenarioEvent::new(50.0, EventKind::MarkInterval { label: "probe".into() }),
            ScenarioEvent::new(80.0, EventKind::DeactivateController),
        ];
        let text = s.to_toml().unwrap();
        assert!(text.contains("kind = \"set_u\""));
        assert_eq!(Scenario::from_toml(&text).unwrap(), s);
    }

    #[test]
    fn rejects_bad_scenarios() {
        let mut s = Scenario::uncontrolled(21, 100.0, 3);
        s.av_index = 21;
        assert!(s.validate().is_err());

        let mut s = Scenario::uncontrolled(21, 100.0, 3);
        s.events = vec![
            ScenarioEvent::new(50.0, EventKind::DeactivateController),
            ScenarioEvent::new(10.0, EventKind::DeactivateController),
        ];
        assert!(s.validate().is_err());

        let mut s = Scenario::uncontrolled(21, 100.0, 3);
        s.events = vec![ScenarioEvent::new(10.0, EventKind::ActivateController)];
        assert!(s.validate().is_err());

        let mut s = Scenario::uncontrolled(60, 100.0, 3);
        s.fleet.uniform_length = Some(5.0);
        assert!(s.validate().is_err());

        assert!(Scenario::from_toml("duration = 5.0\n[track]\ncircumference = 260.0\n[fleet]\nsize = 21\nbogus = 1")
            .is_err());
    }
}
