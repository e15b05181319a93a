//! Time-indexed trajectory data: the unit of export, import and analysis.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Role an interval plays when comparing controlled and uncontrolled traffic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IntervalKind {
    /// Before any wave is detected.
    Baseline,
    /// Uncontrolled traffic with an active wave.
    Waves,
    /// A wave-dampening controller drives the instrumented vehicle.
    Controlled,
    /// Controller switched off again.
    Released,
    /// User-marked or otherwise unclassified.
    Other,
}

impl std::fmt::Display for IntervalKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            IntervalKind::Baseline => "baseline",
            IntervalKind::Waves => "waves",
            IntervalKind::Controlled => "controlled",
            IntervalKind::Released => "released",
            IntervalKind::Other => "other",
        };
        f.write_str(s)
    }
}

impl std::str::FromStr for IntervalKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.trim().to_ascii_lowercase().as_str() {
            "baseline" => IntervalKind::Baseline,
            "waves" => IntervalKind::Waves,
            "controlled" => IntervalKind::Controlled,
            "released" => IntervalKind::Released,
            "other" | "" => IntervalKind::Other,
            other => return Err(invalid(format!("unknown interval kind '{other}'"))),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub label: String,
    pub t_start: f64,
    pub t_end: f64,
    pub kind: IntervalKind,
}

impl Interval {
    pub fn new(label: impl Into<String>, t_start: f64, t_end: f64, kind: IntervalKind) -> Result<Self> {
        if !(t_start.is_finite() && t_end.is_finite() && t_start < t_end) {
            return Err(invalid(format!("interval needs t_start < t_end, got [{t_start}, {t_end}]")));
        }
        Ok(Self { label: label.into(), t_start, t_end, kind })
    }
}

/// One vehicle's sampled history.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct VehicleSeries {
    pub id: u32,
    /// Unwrapped distance travelled, m.
    pub position: Vec<f64>,
    pub velocity: Vec<f64>,
    pub acceleration: Vec<f64>,
    /// l/s.
    pub fuel_rate: Vec<f64>,
    /// Commanded velocity for the controlled vehicle while a controller is
    /// active, `None` otherwise.
    pub v_cmd: Vec<Option<f64>>,
}

impl VehicleSeries {
    pub fn new(id: u32) -> Self {
        Self { id, ..Default::default() }
    }

    pub fn len(&self) -> usize {
        self.position.len()
    }

    pub fn is_empty(&self) -> bool {
        self.position.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoggedEvent {
    pub time: f64,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryDataset {
    pub dt: f64,
    /// Ring circumference the data was recorded on, m.
    pub track_length: f64,
    pub times: Vec<f64>,
    pub vehicles: Vec<VehicleSeries>,
    pub events: Vec<LoggedEvent>,
    pub intervals: Vec<Interval>,
}

/// Relative slack when mapping interval bounds onto sample indices.
const INDEX_EPS: f64 = 1e-9;

impl TrajectoryDataset {
    pub fn new(dt: f64, track_length: f64, ids: impl IntoIterator<Item = u32>) -> Self {
        Self {
            dt,
            track_length,
            times: Vec::new(),
            vehicles: ids.into_iter().map(VehicleSeries::new).collect(),
            events: Vec::new(),
            intervals: Vec::new(),
        }
    }

    pub fn num_vehicles(&self) -> usize {
        self.vehicles.len()
    }

    pub fn num_samples(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn start_time(&self) -> Option<f64> {
        self.times.first().copied()
    }

    pub fn end_time(&self) -> Option<f64> {
        self.times.last().copied()
    }

    /// Checks the structural invariants: equal series lengths, uniform time.
    pub fn validate(&self) -> Result<()> {
        let m = self.times.len();
        for v in &self.vehicles {
            let lens = [v.position.len(), v.velocity.len(), v.acceleration.len(), v.fuel_rate.len(), v.v_cmd.len()];
            if lens.iter().any(|&l| l != m) {
                return Err(invalid(format!("vehicle {} has series lengths {lens:?}, expected {m}", v.id)));
            }
        }
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(invalid(format!("dataset dt must be positive, got {}", self.dt)));
        }
        for w in self.times.windows(2) {
            let step = w[1] - w[0];
            if ((step - self.dt) / self.dt).abs() > 0.01 {
                return Err(invalid(format!(
                    "non-uniform sampling: step {step} at t={} differs from dt {}",
                    w[0], self.dt
                )));
            }
        }
        Ok(())
    }

    /// Sample index range `[lo, hi)` covered by `t_start <= t < t_end`.
    /// The last interval ending at the final sample includes it.
    pub fn index_range(&self, interval: &Interval) -> std::ops::Range<usize> {
        let eps = INDEX_EPS * self.dt.max(1.0);
        let lo = self.times.partition_point(|&t| t < interval.t_start - eps);
        let mut hi = self.times.partition_point(|&t| t < interval.t_end - eps);
        if let Some(&last) = self.times.last() {
            if (last - interval.t_end).abs() <= eps {
                hi = self.times.len();
            }
        }
        lo..hi.max(lo)
    }

    /// One interval spanning the whole recording.
    pub fn full_interval(&self, label: &str, kind: IntervalKind) -> Result<Interval> {
        match (self.start_time(), self.end_time()) {
            (Some(a), Some(b)) if b > a => Interval::new(label, a, b, kind),
            _ => Err(Error::InsufficientData("dataset spans no time".into())),
        }
    }

    pub fn velocities_at(&self, j: usize) -> impl Iterator<Item = f64> + '_ {
        self.vehicles.iter().map(move |v| v.velocity[j])
    }

    pub fn log(&mut self, time: f64, message: impl Into<String>) {
        self.events.push(LoggedEvent { time, message: message.into() });
    }
}
