//! Single-lane ring road traffic with one speed-controlled vehicle: human
//! driver surrogates, wave-dampening controllers, a switched PID actuation
//! layer, and the metrics used to compare controlled and uncontrolled
//! traffic.

pub mod actuation;
pub mod control;
pub mod dataset;
pub mod driver;
pub mod error;
pub mod experiment;
pub mod fleet;
pub mod io;
pub mod metrics;
pub mod ring;
pub mod scenario;
pub mod templates;

pub use dataset::{Interval, IntervalKind, LoggedEvent, TrajectoryDataset, VehicleSeries};
pub use error::{Error, Result};
pub use experiment::{
    auto_intervals, run_and_report, run_scenario, scenario_intervals, seed_sweep, sweep_map, SweepOutcome,
};
pub use metrics::{compute_report, ComparisonRow, IntervalMetrics, MetricsReport};
pub use ring::{CollisionPolicy, Ring, RingTrack, VehicleSpec, VehicleState, WorldState};
pub use scenario::{ControllerKind, EventKind, Scenario, ScenarioEvent};
