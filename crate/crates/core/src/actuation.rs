//! Low-level speed tracking: a two-mode switched PID driving a first-order
//! longitudinal plant through a signed pedal in `[-100, 100]` (negative is
//! brake).

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

pub const PEDAL_LIMIT: f64 = 100.0;
/// Speed error at or below which the brake mode takes over, m/s.
pub const BRAKE_THRESHOLD: f64 = -0.25;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlantParams {
    pub time_constant: f64,
    /// Steady-state speed per pedal unit, (m/s) / pedal.
    pub gain: f64,
}

impl Default for PlantParams {
    fn default() -> Self {
        Self { time_constant: 4.0, gain: 0.25 }
    }
}

impl PlantParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.time_constant > 0.0 && self.gain > 0.0) {
            return Err(invalid("plant time constant and gain must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PidGains {
    pub kp: f64,
    pub ki: f64,
    pub kd: f64,
    /// Bound on the integral contribution, pedal units.
    pub integrator_limit: f64,
    pub output_min: f64,
    pub output_max: f64,
}

impl PidGains {
    /// Accelerator mode, tuned for a 1.6 s rise and 5% overshoot on the
    /// default plant. Never touches the brake.
    pub fn accelerate() -> Self {
        Self { kp: 17.0, ki: 7.0, kd: 0.5, integrator_limit: PEDAL_LIMIT, output_min: 0.0, output_max: PEDAL_LIMIT }
    }

    /// Brake mode, tuned for a 0.8 s rise and 11% overshoot.
    pub fn brake() -> Self {
        Self {
            kp: 30.0,
            ki: 21.5,
            kd: 2.0,
            integrator_limit: PEDAL_LIMIT,
            output_min: -PEDAL_LIMIT,
            output_max: PEDAL_LIMIT,
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = [self.kp, self.ki, self.kd, self.integrator_limit, self.output_min, self.output_max]
            .iter()
            .all(|x| x.is_finite());
        if !ok || self.integrator_limit <= 0.0 || self.output_min >= self.output_max {
            return Err(invalid("PID gains must be finite with a positive integrator limit"));
        }
        if self.output_min < -PEDAL_LIMIT || self.output_max > PEDAL_LIMIT {
            return Err(invalid("PID output range must lie within the pedal range"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ActuationGains {
    pub accelerate: PidGains,
    pub brake: PidGains,
}

impl Default for ActuationGains {
    fn default() -> Self {
        Self { accelerate: PidGains::accelerate(), brake: PidGains::brake() }
    }
}

impl ActuationGains {
    pub fn validate(&self) -> Result<()> {
        self.accelerate.validate()?;
        self.brake.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Accelerate,
    Brake,
    Coast,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PidState {
    /// Integral contribution, pedal units.
    pub integral: f64,
    pub prev_measurement: Option<f64>,
}

impl PidState {
    pub fn reset(&mut self) {
        *self = Self::default();
    }
}

pub fn select_mode(v: f64, v_cmd: f64) -> Mode {
    let diff = v_cmd - v;
    if !diff.is_finite() {
        Mode::Coast
    } else if diff > BRAKE_THRESHOLD {
        Mode::Accelerate
    } else {
        Mode::Brake
    }
}

/// One PID update with derivative on measurement and conditional
/// integration. The state resets whenever the vehicle is at rest.
pub fn pid_step(state: &mut PidState, v: f64, v_cmd: f64, gains: &PidGains, dt: f64) -> f64 {
    if v <= 0.0 {
        state.reset();
    }
    let e = v_cmd - v;
    let d = match state.prev_measurement {
        Some(p) => -(v - p) / dt,
        None => 0.0,
    };
    let candidate = (state.integral + gains.ki * e * dt).clamp(-gains.integrator_limit, gains.integrator_limit);
    let raw = gains.kp * e + candidate + gains.kd * d;
    let out = raw.clamp(gains.output_min, gains.output_max);
    let saturated_high = raw >= gains.output_max && e > 0.0;
    let saturated_low = raw <= gains.output_min && e < 0.0;
    if !(saturated_high || saturated_low) {
        state.integral = candidate;
    }
    state.prev_measurement = Some(v);
    out
}

/// First-order plant `tau dv/dt = gain * pedal - v`, floored at rest.
pub fn plant_step(v: f64, pedal: f64, p: &PlantParams, dt: f64) -> f64 {
    (v + dt * (p.gain * pedal - v) / p.time_constant).max(0.0)
}

/// Switched controller memory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActuationState {
    pub mode: Mode,
    pub accelerate: PidState,
    pub brake: PidState,
    pub pedal: f64,
}

impl Default for ActuationState {
    fn default() -> Self {
        Self { mode: Mode::Accelerate, accelerate: PidState::default(), brake: PidState::default(), pedal: 0.0 }
    }
}

impl ActuationState {
    /// Steady cruise at `v`: accelerator integral holds the pedal that
    /// sustains it.
    pub fn cruising(v: f64, plant: &PlantParams, gains: &ActuationGains) -> Self {
        let pedal = (v / plant.gain).clamp(gains.accelerate.output_min, gains.accelerate.output_max);
        Self {
            mode: Mode::Accelerate,
            accelerate: PidState {
                integral: pedal.clamp(-gains.accelerate.integrator_limit, gains.accelerate.integrator_limit),
                prev_measurement: Some(v),
            },
            brake: PidState::default(),
            pedal,
        }
    }

    fn pid_mut(&mut self, mode: Mode) -> Option<&mut PidState> {
        match mode {
            Mode::Accelerate => Some(&mut self.accelerate),
            Mode::Brake => Some(&mut self.brake),
            Mode::Coast => None,
        }
    }
}

/// Mode selection plus PID update. On a mode change the incoming PID's
/// integral is preset so its first output continues from the last pedal.
pub fn actuation_step(state: &mut ActuationState, v: f64, v_cmd: f64, gains: &ActuationGains, dt: f64) -> f64 {
    let mode = select_mode(v, v_cmd);
    if mode != state.mode {
        let last = state.pedal;
        let g = match mode {
            Mode::Accelerate => Some(&gains.accelerate),
            Mode::Brake => Some(&gains.brake),
            Mode::Coast => None,
        };
        if let (Some(g), Some(pid)) = (g, state.pid_mut(mode)) {
            let e = v_cmd - v;
            pid.integral =
                (last.clamp(g.output_min, g.output_max) - g.kp * e).clamp(-g.integrator_limit, g.integrator_limit);
            pid.prev_measurement = Some(v);
        }
        state.mode = mode;
    }
    let pedal = match mode {
        Mode::Accelerate => pid_step(&mut state.accelerate, v, v_cmd, &gains.accelerate, dt),
        Mode::Brake => pid_step(&mut state.brake, v, v_cmd, &gains.brake, dt),
        Mode::Coast => 0.0,
    };
    state.pedal = pedal.clamp(-PEDAL_LIMIT, PEDAL_LIMIT);
    state.pedal
}

/// Commanded speed applied directly, limited only by acceleration bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IdealTracker {
    pub max_accel: f64,
    pub max_decel: f64,
}

impl Default for IdealTracker {
    fn default() -> Self {
        Self { max_accel: 2.5, max_decel: 6.0 }
    }
}

impl IdealTracker {
    pub fn acceleration(&self, v: f64, v_cmd: f64, dt: f64) -> f64 {
        ((v_cmd - v) / dt).clamp(-self.max_decel, self.max_accel)
    }
}

/// How the controlled vehicle turns a commanded speed into motion.
#[derive(Debug, Clone, PartialEq)]
pub enum Actuator {
    Pid { plant: PlantParams, gains: ActuationGains, state: ActuationState },
    Ideal(IdealTracker),
}

impl Actuator {
    pub fn pid(plant: PlantParams, gains: ActuationGains, v: f64) -> Self {
        Actuator::Pid { state: ActuationState::cruising(v, &plant, &gains), plant, gains }
    }

    /// Acceleration to apply this tick and the pedal position (0 for the
    /// ideal tracker).
    pub fn step(&mut self, v: f64, v_cmd: f64, dt: f64) -> (f64, f64) {
        match self {
            Actuator::Pid { plant, gains, state } => {
                let pedal = actuation_step(state, v, v_cmd, gains, dt);
                let next = plant_step(v, pedal, plant, dt);
                ((next - v) / dt, pedal)
            }
            Actuator::Ideal(t) => (t.acceleration(v, v_cmd, dt), 0.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StepMetrics {
    /// 10%-90% rise time, s.
    pub rise_time: f64,
    /// Peak overshoot, percent of the step.
    pub overshoot_pct: f64,
    /// Time after which the response stays within 2% of the step, s.
    pub settling_time: f64,
}

fn crossing_time(y: &[f64], level: f64, dt: f64) -> Option<f64> {
    let k = y.iter().position(|&x| x >= level)?;
    if k == 0 {
        return Some(0.0);
    }
    let (a, b) = (y[k - 1], y[k]);
    Some(((k - 1) as f64 + (level - a) / (b - a)) * dt)
}

/// Rise, overshoot and settling of a sampled response to a step of size
/// `step` applied at the first sample.
pub fn step_response_metrics(trace: &[f64], dt: f64, step: f64) -> Result<StepMetrics> {
    if trace.len() < 2 || step == 0.0 || !(dt > 0.0) {
        return Err(invalid("step response needs a nonzero step and at least two samples"));
    }
    let y: Vec<f64> = trace.iter().map(|x| (x - trace[0]) / step).collect();
    let t10 = crossing_time(&y, 0.1, dt);
    let t90 = crossing_time(&y, 0.9, dt);
    let (t10, t90) = match (t10, t90) {
        (Some(a), Some(b)) => (a, b),
        _ => return Err(Error::InsufficientData("response never reaches 90% of the step".into())),
    };
    let peak = y.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let settle_idx = y.iter().rposition(|x| (x - 1.0).abs() > 0.02).map_or(0, |k| k + 1);
    Ok(StepMetrics {
        rise_time: t90 - t10,
        overshoot_pct: ((peak - 1.0) * 100.0).max(0.0),
        settling_time: settle_idx as f64 * dt,
    })
}

/// Which PID to exercise in isolation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepMode {
    /// Accelerator PID, +1 m/s step.
    H1,
    /// Brake PID, -1 m/s step.
    H2,
}

/// Closed-loop velocity trace of one PID on the plant, starting at steady
/// cruise `v0` and commanded to `v0 +- 1` m/s.
pub fn simulate_step_response(
    mode: StepMode,
    plant: &PlantParams,
    gains: &ActuationGains,
    v0: f64,
    duration: f64,
    dt: f64,
) -> Vec<f64> {
    let (g, step) = match mode {
        StepMode::H1 => (&gains.accelerate, 1.0),
        StepMode::H2 => (&gains.brake, -1.0),
    };
    let mut pid = PidState {
        integral: (v0 / plant.gain).clamp(-g.integrator_limit, g.integrator_limit),
        prev_measurement: Some(v0),
    };
    let cmd = v0 + step;
    let mut v = v0;
    let mut trace = vec![v];
    for _ in 0..(duration / dt).round() as usize {
        let pedal = pid_step(&mut pid, v, cmd, g, dt);
        v = plant_step(v, pedal, plant, dt);
        trace.push(v);
    }
    trace
}

/// Operating speed used for the step-response checks, m/s.
pub const STEP_TEST_SPEED: f64 = 7.0;

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    const DT: f64 = 0.05;

    #[test]
    fn mode_examples() {
        assert_eq!(select_mode(5.0, 5.0), Mode::Accelerate);
        assert_eq!(select_mode(5.0, 4.0), Mode::Brake);
        assert_eq!(select_mode(5.0, 4.8), Mode::Accelerate);
        assert_eq!(select_mode(5.0, 4.75), Mode::Brake);
        assert_eq!(select_mode(5.0, f64::NAN), Mode::Coast);
    }

    #[test]
    fn zero_error_from_rest_stays_zero() {
        let mut s = PidState::default();
        for _ in 0..100 {
            assert_eq!(pid_step(&mut s, 0.0, 0.0, &PidGains::accelerate(), DT), 0.0);
        }
    }

    #[test]
    fn saturation_and_anti_windup() {
        let g = PidGains::accelerate();
        let mut s = PidState::default();
        let mut v = 1.0;
        let plant = PlantParams::default();
        for _ in 0..400 {
            let p = pid_step(&mut s, v, 30.0, &g, DT);
            assert!(p <= PEDAL_LIMIT);
            assert!(s.integral.abs() <= g.integrator_limit);
            v = plant_step(v, p, &plant, DT);
        }
        assert_eq!(pid_step(&mut s, v, 30.0, &g, DT), PEDAL_LIMIT);
        let held = s.integral;
        // error flips sign: the integrator unwinds immediately
        let mut recovered = None;
        for k in 0..400 {
            let p = pid_step(&mut s, v, 2.0, &g, DT);
            assert!(s.integral.abs() <= g.integrator_limit);
            v = plant_step(v, p, &plant, DT);
            if p < PEDAL_LIMIT && recovered.is_none() {
                recovered = Some(k);
            }
        }
        assert!(held <= g.integrator_limit);
        assert!(recovered.unwrap() < 5);
    }

    #[test]
    fn reset_at_rest() {
        let g = PidGains::accelerate();
        let mut s = PidState { integral: 42.0, prev_measurement: Some(0.3) };
        pid_step(&mut s, 0.0, 0.0, &g, DT);
        assert_eq!(s.integral, 0.0);
        assert_eq!(s.prev_measurement, Some(0.0));
    }

    #[test]
    fn plant_examples() {
        let p = PlantParams::default();
        assert_eq!(plant_step(0.0, 0.0, &p, DT), 0.0);
        let mut v = 0.0;
        for _ in 0..4000 {
            v = plant_step(v, 30.0, &p, DT);
        }
        assert!((v - p.gain * 30.0).abs() < 1e-9);
        assert_eq!(plant_step(0.1, -100.0, &p, DT), 0.0);
    }

    #[test]
    fn plant_reaches_63_percent_at_time_constant() {
        let p = PlantParams::default();
        let target = p.gain * 40.0;
        let mut v = 0.0;
        let mut trace = vec![v];
        for _ in 0..400 {
            v = plant_step(v, 40.0, &p, DT);
            trace.push(v);
        }
        let k = trace.iter().position(|&x| x >= (1.0 - (-1.0f64).exp()) * target).unwrap();
        let tick = (p.time_constant / DT).round() as usize;
        assert!(k.abs_diff(tick) <= 1, "crossed at tick {k}, expected {tick}");
    }

    #[test]
    fn ideal_first_order_rise_time() {
        let tau = 1.0;
        let dt = 0.001;
        let trace: Vec<f64> = (0..20_000).map(|j| 1.0 - (-(j as f64) * dt / tau).exp()).collect();
        let m = step_response_metrics(&trace, dt, 1.0).unwrap();
        assert!((m.rise_time - 9f64.ln() * tau).abs() < 1e-3, "{}", m.rise_time);
        assert_eq!(m.overshoot_pct, 0.0);
        assert!((m.settling_time - 50f64.ln()).abs() < 2e-3);
        assert!(step_response_metrics(&[0.0, 0.5, 0.6], 0.1, 1.0).is_err());
    }

    #[test]
    fn tuned_modes_hit_targets() {
        let plant = PlantParams::default();
        let gains = ActuationGains::default();
        let h1 = simulate_step_response(StepMode::H1, &plant, &gains, STEP_TEST_SPEED, 15.0, DT);
        let m1 = step_response_metrics(&h1, DT, 1.0).unwrap();
        assert!((m1.rise_time - 1.6).abs() <= 0.4 && (m1.overshoot_pct - 5.0).abs() <= 5.0, "{m1:?}");
        let h2 = simulate_step_response(StepMode::H2, &plant, &gains, STEP_TEST_SPEED, 15.0, DT);
        let m2 = step_response_metrics(&h2, DT, -1.0).unwrap();
        assert!((m2.rise_time - 0.8).abs() <= 0.2 && (m2.overshoot_pct - 11.0).abs() <= 5.0, "{m2:?}");
    }

    #[test]
    fn brake_only_in_brake_mode() {
        let plant = PlantParams::default();
        let gains = ActuationGains::default();
        let mut s = ActuationState::cruising(8.0, &plant, &gains);
        let mut v = 8.0;
        for k in 0..2000 {
            let cmd = if (k / 100) % 2 == 0 { 3.0 } else { 9.0 };
            let pedal = actuation_step(&mut s, v, cmd, &gains, DT);
            assert!((-PEDAL_LIMIT..=PEDAL_LIMIT).contains(&pedal));
            if pedal < 0.0 {
                assert_eq!(s.mode, Mode::Brake);
            }
            v = plant_step(v, pedal, &plant, DT);
            assert!(v >= 0.0);
        }
    }

    #[test]
    fn no_chattering_under_speed_noise() {
        let plant = PlantParams::default();
        let gains = ActuationGains::default();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let noise = Normal::new(0.0, 0.05).unwrap();
        let mut s = ActuationState::cruising(7.0, &plant, &gains);
        let mut v = 7.0;
        let mut switches = Vec::new();
        let mut last = s.mode;
        let ticks = (600.0 / DT) as usize;
        for k in 0..ticks {
            let sensed = v + noise.sample(&mut rng);
            let pedal = actuation_step(&mut s, sensed, 7.0, &gains, DT);
            v = plant_step(v, pedal, &plant, DT);
            if s.mode != last {
                switches.push(k as f64 * DT);
                last = s.mode;
            }
        }
        for w in switches.windows(2) {
            assert!(w[1] - w[0] >= 2.0, "switches at {} and {}", w[0], w[1]);
        }
        assert!((v - 7.0).abs() < 0.3);
    }
}
