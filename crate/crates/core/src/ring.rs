//! Single-lane ring road: geometry, vehicle state and fixed-step advancement.
//!
//! Positions are arc lengths of the front bumper measured along the lane
//! centre line, in `[0, L)`. Vehicle `i` follows vehicle `(i + 1) % n`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::metrics::fuel::{fuel_rate, FuelModelParams};

/// Tolerance used when checking the gap-closure identity and overlap.
pub const GEOMETRY_EPS: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RingTrack {
    pub circumference: f64,
    /// Radius to the lane centre. Not used by the dynamics.
    #[serde(default = "default_radius")]
    pub lane_radius: f64,
}

fn default_radius() -> f64 {
    41.4
}

impl Default for RingTrack {
    fn default() -> Self {
        Self { circumference: 260.0, lane_radius: default_radius() }
    }
}

impl RingTrack {
    pub fn new(circumference: f64) -> Result<Self> {
        if !(circumference.is_finite() && circumference > 0.0) {
            return Err(invalid(format!("ring circumference must be positive, got {circumference}")));
        }
        Ok(Self { circumference, lane_radius: circumference / (2.0 * std::f64::consts::PI) })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VehicleSpec {
    pub id: u32,
    pub length: f64,
    pub fuel_params: FuelModelParams,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct VehicleState {
    /// Front bumper arc position in `[0, L)`.
    pub position: f64,
    pub velocity: f64,
    /// Acceleration realized over the last tick.
    pub acceleration: f64,
    pub fuel_rate: f64,
    /// Unwrapped distance travelled since t = 0.
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct WorldState {
    pub time: f64,
    pub vehicles: Vec<VehicleState>,
}

/// What to do when a follower overruns its leader.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CollisionPolicy {
    /// Abort the step with [`Error::Collision`].
    #[default]
    Strict,
    /// Clamp the follower onto the leader's rear bumper and continue.
    Permissive,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CollisionEvent {
    pub time: f64,
    pub follower: usize,
    pub leader: usize,
    /// Signed overlap-adjusted gap before clamping (negative).
    pub gap: f64,
}

/// Reduce `x` into `[0, circumference)`.
pub fn wrap_position(x: f64, circumference: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(invalid(format!("position must be finite, got {x}")));
    }
    if !(circumference.is_finite() && circumference > 0.0) {
        return Err(invalid(format!("circumference must be positive, got {circumference}")));
    }
    let r = x.rem_euclid(circumference);
    // rem_euclid can round up to exactly `circumference` for tiny negative x
    Ok(if r >= circumference { 0.0 } else { r })
}

/// Track plus the fleet that drives on it.
#[derive(Debug, Clone, PartialEq)]
pub struct Ring {
    pub track: RingTrack,
    pub specs: Vec<VehicleSpec>,
}

impl Ring {
    pub fn new(track: RingTrack, specs: Vec<VehicleSpec>) -> Result<Self> {
        if !(track.circumference.is_finite() && track.circumference > 0.0) {
            return Err(invalid("ring circumference must be positive"));
        }
        if specs.len() < 2 {
            return Err(invalid(format!("a ring needs at least 2 vehicles, got {}", specs.len())));
        }
        if let Some(s) = specs.iter().find(|s| !(s.length.is_finite() && s.length > 0.0)) {
            return Err(invalid(format!("vehicle {} has non-positive length {}", s.id, s.length)));
        }
        let total: f64 = specs.iter().map(|s| s.length).sum();
        if total >= track.circumference {
            return Err(invalid(format!(
                "vehicles occupy {total:.2} m but the ring is only {:.2} m",
                track.circumference
            )));
        }
        Ok(Self { track, specs })
    }

    pub fn len(&self) -> usize {
        self.specs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.specs.is_empty()
    }

    pub fn circumference(&self) -> f64 {
        self.track.circumference
    }

    pub fn total_length(&self) -> f64 {
        self.specs.iter().map(|s| s.length).sum()
    }

    /// Largest gap any single vehicle can have when nobody overlaps.
    fn max_gap(&self) -> f64 {
        self.circumference() - self.total_length()
    }

    pub fn leader_of(&self, i: usize) -> usize {
        (i + 1) % self.len()
    }

    /// Bumper-to-bumper distance from vehicle `i` to its leader.
    pub fn gap(&self, world: &WorldState, i: usize) -> Result<f64> {
        let n = self.len();
        if world.vehicles.len() != n {
            return Err(invalid(format!("world has {} vehicles, ring has {n}", world.vehicles.len())));
        }
        if i >= n {
            return Err(invalid(format!("vehicle index {i} out of range")));
        }
        let lead = self.leader_of(i);
        // front-to-front distance; the follower's front inside the leader's
        // body is an overlap (no vehicle moves a full length in one step)
        let ahead = wrap_position(world.vehicles[lead].position - world.vehicles[i].position, self.circumference())?;
        let g = ahead - self.specs[lead].length;
        if g < -GEOMETRY_EPS {
            return Err(Error::Collision { time: world.time, follower: i, leader: lead, gap: g });
        }
        Ok(g.max(0.0))
    }

    pub fn gaps(&self, world: &WorldState) -> Result<Vec<f64>> {
        (0..self.len()).map(|i| self.gap(world, i)).collect()
    }

    /// Front bumpers evenly spaced at `i * L / n`, everyone at rest.
    pub fn uniform_initialization(&self) -> Result<WorldState> {
        let n = self.len();
        let spacing = self.circumference() / n as f64;
        let longest = self.specs.iter().map(|s| s.length).fold(0.0, f64::max);
        if spacing < longest {
            return Err(invalid(format!(
                "cannot pack {n} vehicles: spacing {spacing:.3} m is shorter than the longest vehicle ({longest:.3} m)"
            )));
        }
        let vehicles = self
            .specs
            .iter()
            .enumerate()
            .map(|(i, s)| VehicleState {
                position: i as f64 * spacing,
                fuel_rate: fuel_rate(0.0, 0.0, &s.fuel_params),
                ..Default::default()
            })
            .collect();
        Ok(WorldState { time: 0.0, vehicles })
    }

    /// Equal bumper-to-bumper gaps, everyone at speed `v`.
    pub fn equal_gap_initialization(&self, v: f64) -> Result<WorldState> {
        if !(v.is_finite() && v >= 0.0) {
            return Err(invalid(format!("initial speed must be non-negative, got {v}")));
        }
        let gap = self.max_gap() / self.len() as f64;
        let mut position = 0.0;
        let mut vehicles = Vec::with_capacity(self.len());
        for (i, s) in self.specs.iter().enumerate() {
            if i > 0 {
                position += s.length + gap;
            }
            vehicles.push(VehicleState {
                position,
                velocity: v,
                fuel_rate: fuel_rate(v, 0.0, &s.fuel_params),
                ..Default::default()
            });
        }
        Ok(WorldState { time: 0.0, vehicles })
    }

    /// Mean gap when the fleet is spread evenly.
    pub fn equilibrium_gap(&self) -> f64 {
        self.max_gap() / self.len() as f64
    }

    /// Advance one tick with semi-implicit Euler: `v' = max(0, v + a dt)`,
    /// `x' = x + v' dt`.
    ///
    /// Collisions either abort (strict) or are clamped and reported in the
    /// returned event list (permissive).
    pub fn step(
        &self,
        world: &WorldState,
        accelerations: &[f64],
        dt: f64,
        policy: CollisionPolicy,
    ) -> Result<(WorldState, Vec<CollisionEvent>)> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(invalid(format!("time step must be positive, got {dt}")));
        }
        let n = self.len();
        if accelerations.len() != n || world.vehicles.len() != n {
            return Err(invalid("acceleration/vehicle count mismatch"));
        }
        let l = self.circumference();
        let mut next = Vec::with_capacity(n);
        for ((state, &a), spec) in world.vehicles.iter().zip(accelerations).zip(&self.specs) {
            if !a.is_finite() {
                return Err(invalid(format!("non-finite acceleration for vehicle {}", spec.id)));
            }
            let v = (state.velocity + a * dt).max(0.0);
            let realized = (v - state.velocity) / dt;
            next.push(VehicleState {
                position: wrap_position(state.position + v * dt, l)?,
                velocity: v,
                acceleration: realized,
                fuel_rate: fuel_rate(v, realized, &spec.fuel_params),
                distance: state.distance + v * dt,
            });
        }
        let mut out = WorldState { time: world.time + dt, vehicles: next };
        let mut events = Vec::new();
        let mut pending: std::collections::VecDeque<usize> = (0..n).collect();
        while let Some(i) = pending.pop_front() {
            match self.gap(&out, i) {
                Ok(_) => {}
                Err(Error::Collision { follower, leader, gap, time }) => match policy {
                    CollisionPolicy::Strict => return Err(Error::Collision { time, follower, leader, gap }),
                    CollisionPolicy::Permissive => {
                        if events.len() > n * n {
                            return Err(invalid("collision clamping did not settle"));
                        }
                        log::warn!("collision at t={time:.2}s between {follower} and {leader}; clamping");
                        let lead = out.vehicles[leader];
                        let before = world.vehicles[follower].velocity;
                        let spec = &self.specs[follower];
                        let f = &mut out.vehicles[follower];
                        f.position = wrap_position(lead.position - self.specs[leader].length, l)?;
                        f.distance += gap;
                        f.velocity = f.velocity.min(lead.velocity);
                        f.acceleration = (f.velocity - before) / dt;
                        f.fuel_rate = fuel_rate(f.velocity, f.acceleration, &spec.fuel_params);
                        events.push(CollisionEvent { time, follower, leader, gap });
                        // pulling this vehicle back can push it into its own follower
                        pending.push_back((follower + n - 1) % n);
                    }
                },
                Err(e) => return Err(e),
            }
        }
        Ok((out, events))
    }
}
