//! Fixed-step simulation of a scenario, interval segmentation and seed
//! sweeps.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::actuation::Actuator;
use crate::control::{
    follower_stopper, ControllerInput, FollowerStopperConfig, GapFilter, HumanAvgController, PiSaturation,
};
use crate::dataset::{Interval, IntervalKind, TrajectoryDataset};
use crate::driver::{optimal_velocity, HumanDriver};
use crate::error::{invalid, Error, Result};
use crate::metrics::{compute_report, wave_onset_time, MetricsReport};
use crate::ring::{Ring, WorldState};
use crate::scenario::{ActuationKind, ControllerKind, EventKind, InitialCondition, Scenario};

/// Unsteady traffic wanted before the controller takes over, s.
pub const MIN_WAVE_OBSERVATION: f64 = 45.0;

/// Events fire on the first tick whose time is within this of the event.
const EVENT_EPS: f64 = 1e-9;

/// Lap (or fixed window) speed average seen by a roadside observer.
#[derive(Debug, Clone)]
struct LapObserver {
    circumference: f64,
    period: Option<f64>,
    start_time: f64,
    start_distance: f64,
    sum: f64,
    count: usize,
    average: Option<f64>,
}

impl LapObserver {
    fn new(circumference: f64, period: Option<f64>) -> Self {
        Self { circumference, period, start_time: 0.0, start_distance: 0.0, sum: 0.0, count: 0, average: None }
    }

    fn observe(&mut self, time: f64, distance: f64, v: f64) {
        self.sum += v;
        self.count += 1;
        let done = match self.period {
            Some(p) => time - self.start_time >= p - EVENT_EPS,
            None => distance - self.start_distance >= self.circumference,
        };
        if done {
            self.average = Some(self.sum / self.count as f64);
            self.start_time = time;
            self.start_distance = distance;
            self.sum = 0.0;
            self.count = 0;
        }
    }
}

/// Everything attached to the instrumented vehicle.
struct Autonomy {
    kind: ControllerKind,
    fs: FollowerStopperConfig,
    active: bool,
    setpoint: Option<f64>,
    filter: GapFilter,
    sensor_noise: Option<Normal<f64>>,
    pi: PiSaturation,
    human_avg: HumanAvgController,
    lap: LapObserver,
    actuator: Option<Actuator>,
}

impl Autonomy {
    fn new(s: &Scenario, initial_gap: f64) -> Result<Self> {
        let c = &s.controller;
        let mut filter = GapFilter::new(c.smoothing, s.dt);
        filter.prime(initial_gap, 0.0);
        let sensor_noise = if c.sensor_noise > 0.0 {
            Some(Normal::new(0.0, c.sensor_noise).map_err(|e| invalid(e.to_string()))?)
        } else {
            None
        };
        Ok(Self {
            kind: c.kind,
            fs: c.follower_stopper,
            active: false,
            setpoint: None,
            filter,
            sensor_noise,
            pi: PiSaturation::new(c.pi_saturation, s.dt)?,
            human_avg: HumanAvgController::new(c.human_avg, s.driver.reaction_delay, s.dt)?,
            lap: LapObserver::new(s.track.circumference, c.human_avg.update_period),
            actuator: None,
        })
    }

    fn activate(&mut self, s: &Scenario, v: f64) {
        self.active = true;
        self.actuator = Some(match s.controller.actuation {
            ActuationKind::Pid => Actuator::pid(s.controller.plant, s.controller.gains, v),
            ActuationKind::Ideal => Actuator::Ideal(s.controller.ideal),
        });
        self.pi.activate(v);
    }

    fn deactivate(&mut self) {
        self.active = false;
        self.actuator = None;
    }

    /// Senses, updates every observer and returns the commanded speed when
    /// the controller is engaged.
    fn sense<R: Rng>(&mut self, time: f64, gap: f64, v: f64, distance: f64, rng: &mut R) -> Result<Option<f64>> {
        let raw = match &self.sensor_noise {
            Some(n) => (gap + n.sample(rng)).max(0.0),
            None => gap,
        };
        let (g, dv) = self.filter.update(raw);
        self.lap.observe(time, distance, v);
        let desired = match self.kind {
            ControllerKind::HumanAvg => self.setpoint.or(self.lap.average).or(Some(v)),
            _ => self.setpoint,
        };
        let input = ControllerInput { v_av: v, gap: g, dv, desired };
        // lagged perception keeps running so hand-over is seamless
        let human_cmd = self.human_avg.command(input, desired.unwrap_or(v));
        if !self.active {
            self.pi.observe(v);
            return Ok(None);
        }
        let cmd = match self.kind {
            ControllerKind::FollowerStopper => follower_stopper(&input, &self.fs)?,
            ControllerKind::PiSaturation => self.pi.command(&input)?,
            ControllerKind::HumanAvg => human_cmd,
            ControllerKind::None => return Ok(None),
        };
        Ok(Some(cmd))
    }
}

fn initial_world(s: &Scenario, ring: &Ring) -> Result<WorldState> {
    match s.initial {
        InitialCondition::Rest => ring.uniform_initialization(),
        InitialCondition::Equilibrium => {
            ring.equal_gap_initialization(optimal_velocity(ring.equilibrium_gap(), &s.driver))
        }
    }
}

fn record(ds: &mut TrajectoryDataset, world: &WorldState, origin: &[f64], av: usize, v_cmd: Option<f64>) {
    ds.times.push(world.time);
    for (i, (series, st)) in ds.vehicles.iter_mut().zip(&world.vehicles).enumerate() {
        series.position.push(origin[i] + st.distance);
        series.velocity.push(st.velocity);
        series.acceleration.push(st.acceleration);
        series.fuel_rate.push(st.fuel_rate);
        series.v_cmd.push(if i == av { v_cmd } else { None });
    }
}

fn note(ds: &mut TrajectoryDataset, time: f64, msg: String) {
    log::info!("t={time:.2}s {msg}");
    ds.log(time, msg);
}

fn warn(ds: &mut TrajectoryDataset, time: f64, msg: String) {
    log::warn!("t={time:.2}s {msg}");
    ds.log(time, format!("warning: {msg}"));
}

/// Runs `scenario` and labels the recording with [`scenario_intervals`].
///
/// A strict-mode collision returns [`Error::RunAborted`] carrying the
/// samples recorded so far.
pub fn run_scenario(scenario: &Scenario) -> Result<TrajectoryDataset> {
    scenario.validate()?;
    let s = scenario;
    let ring = s.ring()?;
    let n = ring.len();
    let av = s.av_index;
    let dt = s.dt;
    let mut rng = ChaCha8Rng::seed_from_u64(s.seed);
    let mut world = initial_world(s, &ring)?;
    let mut drivers = (0..n).map(|_| HumanDriver::new(s.driver, dt)).collect::<Result<Vec<_>>>()?;
    let origin: Vec<f64> = world.vehicles.iter().map(|v| v.position).collect();
    let mut auto = Autonomy::new(s, ring.gap(&world, av)?)?;
    let mut ds = TrajectoryDataset::new(dt, ring.circumference(), ring.specs.iter().map(|sp| sp.id));

    let steps = (s.duration / dt).round() as usize;
    let mut next_event = 0;
    for k in 0..=steps {
        let t = k as f64 * dt;
        world.time = t;
        while next_event < s.events.len() && s.events[next_event].time <= t + EVENT_EPS {
            let e = &s.events[next_event];
            next_event += 1;
            let v = world.vehicles[av].velocity;
            match &e.kind {
                EventKind::ActivateController if auto.active => {
                    warn(&mut ds, t, "activate_controller ignored: already active".into())
                }
                EventKind::ActivateController => {
                    auto.activate(s, v);
                    note(&mut ds, t, "activate_controller".into());
                }
                EventKind::DeactivateController if !auto.active => {
                    warn(&mut ds, t, "deactivate_controller ignored: not active".into())
                }
                EventKind::DeactivateController => {
                    auto.deactivate();
                    note(&mut ds, t, "deactivate_controller".into());
                }
                EventKind::SetU { value } if auto.setpoint == Some(*value) => {
                    warn(&mut ds, t, format!("set_u {value:.2} repeats the current setpoint"))
                }
                EventKind::SetU { value } => {
                    auto.setpoint = Some(*value);
                    note(&mut ds, t, format!("set_u {value:.2}"));
                }
                EventKind::MarkInterval { label } => note(&mut ds, t, format!("mark_interval {label}")),
            }
        }

        if auto.active && auto.kind == ControllerKind::FollowerStopper && auto.setpoint.is_none() {
            let v = world.vehicles[av].velocity;
            auto.setpoint = Some(v);
            warn(&mut ds, t, format!("no setpoint given, holding current speed {v:.2}"));
        }

        let gaps = match ring.gaps(&world) {
            Ok(g) => g,
            Err(e) => return Err(abort(e, ds)),
        };
        let mut accels = Vec::with_capacity(n);
        for (i, d) in drivers.iter_mut().enumerate() {
            accels.push(d.acceleration(gaps[i], world.vehicles[i].velocity, &mut rng));
        }
        let me = world.vehicles[av];
        let cmd = auto.sense(t, gaps[av], me.velocity, me.distance, &mut rng)?;
        if let (Some(c), Some(act)) = (cmd, auto.actuator.as_mut()) {
            accels[av] = act.step(me.velocity, c, dt).0;
        }
        record(&mut ds, &world, &origin, av, cmd);
        if k == steps {
            break;
        }
        match ring.step(&world, &accels, dt, s.collision_policy) {
            Ok((next, collisions)) => {
                for c in collisions {
                    let msg = format!("collision between {} and {} clamped", c.follower, c.leader);
                    warn(&mut ds, c.time, msg);
                }
                world = next;
            }
            Err(e) => return Err(abort(e, ds)),
        }
    }
    ds.intervals = scenario_intervals(s, &ds)?;
    Ok(ds)
}

fn abort(e: Error, mut ds: TrajectoryDataset) -> Error {
    let t = ds.end_time().unwrap_or(0.0);
    ds.log(t, format!("aborted: {e}"));
    log::error!("{e}");
    Error::RunAborted { cause: Box::new(e), partial: Box::new(ds) }
}

fn setpoint_label(kind: ControllerKind, u: Option<f64>, quantum: f64) -> String {
    match (kind, u) {
        (ControllerKind::HumanAvg, Some(u)) => {
            format!("Human avg {:.2} m/s", crate::control::quantize(u, quantum))
        }
        (ControllerKind::HumanAvg, None) => "Human avg".into(),
        (ControllerKind::PiSaturation, _) | (_, None) => "Autonomy".into(),
        (_, Some(u)) => format!("Autonomy {u:.2} m/s"),
    }
}

/// Splits a run into labelled intervals.
///
/// Before the first control event the recording is split at the wave onset
/// into a baseline and a wave interval. After it, each activation, setpoint
/// change, deactivation or mark starts a new interval. Simultaneous events
/// open a single interval, zero-length intervals are dropped and repeated
/// labels get a numeric suffix.
pub fn scenario_intervals(s: &Scenario, ds: &TrajectoryDataset) -> Result<Vec<Interval>> {
    let quantum = s.controller.human_avg.quantum;

    let mut marks: Vec<(f64, String, IntervalKind)> = Vec::new();
    let mut active = false;
    let mut u = None;
    let mut i = 0;
    while i < s.events.len() {
        let time = s.events[i].time;
        let mut changed = false;
        let mut mark = None;
        while i < s.events.len() && s.events[i].time <= time + EVENT_EPS {
            match &s.events[i].kind {
                EventKind::ActivateController if !active => {
                    active = true;
                    changed = true;
                }
                EventKind::DeactivateController if active => {
                    active = false;
                    changed = true;
                }
                EventKind::SetU { value } if u != Some(*value) => {
                    u = Some(*value);
                    changed |= active;
                }
                EventKind::MarkInterval { label } => mark = Some(label.clone()),
                _ => {}
            }
            i += 1;
        }
        let entry = match (mark, active) {
            (Some(label), true) => Some((label, IntervalKind::Controlled)),
            (Some(label), false) => Some((label, IntervalKind::Other)),
            (None, true) if changed => Some((setpoint_label(s.controller.kind, u, quantum), IntervalKind::Controlled)),
            (None, false) if changed => Some((
                if s.controller.kind == ControllerKind::HumanAvg { "Disable control" } else { "Disable autonomy" }
                    .into(),
                IntervalKind::Released,
            )),
            _ => None,
        };
        if let Some((label, kind)) = entry {
            marks.push((time, label, kind));
        }
    }

    segment(ds, marks, s.wave_threshold)
}

/// Prefixes the control marks with the baseline / wave split and turns the
/// boundaries into intervals.
fn segment(ds: &TrajectoryDataset, marks: Vec<(f64, String, IntervalKind)>, threshold: f64) -> Result<Vec<Interval>> {
    let (Some(t0), Some(t_end)) = (ds.start_time(), ds.end_time()) else {
        return Err(Error::InsufficientData("empty recording".into()));
    };
    let first_control = marks.first().map_or(t_end, |m| m.0);
    let mut bounds: Vec<(f64, String, IntervalKind)> = Vec::new();
    match wave_onset_time(ds, threshold).filter(|&o| o < first_control) {
        Some(onset) => {
            if onset > t0 {
                bounds.push((t0, "Exp. start".into(), IntervalKind::Baseline));
            }
            bounds.push((onset, "Waves start".into(), IntervalKind::Waves));
            if !marks.is_empty() && first_control - onset < MIN_WAVE_OBSERVATION {
                log::warn!(
                    "only {:.1} s of waves before the first control event (wanted {MIN_WAVE_OBSERVATION} s)",
                    first_control - onset
                );
            }
        }
        None => {
            bounds.push((t0, "Exp. start".into(), IntervalKind::Baseline));
            if !marks.is_empty() {
                log::warn!("no wave formed before the first control event at t={first_control:.2}s");
            }
        }
    }
    bounds.extend(marks);

    let mut out: Vec<Interval> = Vec::new();
    for (j, (start, label, kind)) in bounds.iter().enumerate() {
        let end = bounds.get(j + 1).map_or(t_end, |b| b.0);
        if end <= *start {
            continue;
        }
        let base = label.clone();
        let mut name = base.clone();
        let mut k = 2;
        while out.iter().any(|iv| iv.label == name) {
            name = format!("{base} ({k})");
            k += 1;
        }
        out.push(Interval::new(name, *start, end, *kind)?);
    }
    Ok(out)
}

/// Intervals for a recording without a scenario. When any vehicle carries a
/// commanded speed, every maximal run of commanded samples is an
/// "Autonomy" interval and the gaps after it are "Disable autonomy". Without
/// commands only the wave detector splits the recording.
pub fn auto_intervals(ds: &TrajectoryDataset, threshold: f64) -> Result<Vec<Interval>> {
    let commanded: Vec<bool> =
        (0..ds.num_samples()).map(|j| ds.vehicles.iter().any(|v| v.v_cmd[j].is_some())).collect();
    let mut marks = Vec::new();
    for j in 0..commanded.len() {
        let prev = j > 0 && commanded[j - 1];
        if commanded[j] && !prev {
            marks.push((ds.times[j], "Autonomy".to_string(), IntervalKind::Controlled));
        } else if !commanded[j] && prev {
            marks.push((ds.times[j], "Disable autonomy".to_string(), IntervalKind::Released));
        }
    }
    segment(ds, marks, threshold)
}

/// Runs the scenario and evaluates its own intervals.
pub fn run_and_report(scenario: &Scenario) -> Result<(TrajectoryDataset, MetricsReport)> {
    let ds = run_scenario(scenario)?;
    let report = compute_report(&ds, &ds.intervals)?;
    Ok((ds, report))
}

/// Applies `f` to the scenario under each seed on `jobs` threads. Output is
/// in seed order regardless of scheduling.
pub fn sweep_map<T, F>(scenario: &Scenario, seeds: &[u64], jobs: usize, f: F) -> Result<Vec<(u64, T)>>
where
    T: Send,
    F: Fn(&Scenario) -> T + Sync,
{
    if jobs == 0 {
        return Err(invalid("jobs must be at least 1"));
    }
    let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs).build().map_err(|e| invalid(e.to_string()))?;
    Ok(pool.install(|| seeds.par_iter().map(|&seed| (seed, f(&scenario.clone().with_seed(seed)))).collect()))
}

#[derive(Debug)]
pub struct SweepOutcome {
    pub seed: u64,
    pub onset: Option<f64>,
    pub result: Result<MetricsReport>,
}

/// Report (or failure) for every seed.
pub fn seed_sweep(scenario: &Scenario, seeds: &[u64], jobs: usize) -> Result<Vec<SweepOutcome>> {
    let runs = sweep_map(scenario, seeds, jobs, |s| match run_scenario(s) {
        Ok(ds) => {
            let onset = wave_onset_time(&ds, s.wave_threshold);
            (onset, compute_report(&ds, &ds.intervals))
        }
        Err(e) => (None, Err(e)),
    })?;
    Ok(runs.into_iter().map(|(seed, (onset, result))| SweepOutcome { seed, onset, result }).collect())
}
