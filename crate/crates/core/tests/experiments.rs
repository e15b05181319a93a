use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use ringwave_core::driver::{optimal_velocity, string_stability_margin, HumanDriver, OvmParams};
use ringwave_core::fleet::uniform_specs;
use ringwave_core::metrics::{instantaneous_velocity_std, wave_onset_time};
use ringwave_core::scenario::InitialCondition;
use ringwave_core::{
    run_scenario, sweep_map, templates, CollisionPolicy, Error, EventKind, IntervalKind, Ring, RingTrack, Scenario,
    ScenarioEvent,
};

fn shortened(name: &str, duration: f64) -> Scenario {
    let mut s = templates::template(name).unwrap();
    s.duration = duration;
    s.events.retain(|e| e.time <= duration);
    s
}

#[test]
fn equilibrium_without_noise_stays_put() {
    let mut s = Scenario::uncontrolled(21, 100.0, 1);
    s.initial = InitialCondition::Equilibrium;
    s.driver.noise_std = 0.0;
    let ds = run_scenario(&s).unwrap();
    let worst = instantaneous_velocity_std(&ds).into_iter().fold(0.0, f64::max);
    assert!(worst < 1e-9, "velocity spread {worst}");
    assert_eq!(ds.intervals.len(), 1);
    assert_eq!(ds.intervals[0].kind, IntervalKind::Baseline);
}

#[test]
fn same_seed_same_run() {
    let s = shortened("c", 260.0).with_seed(3);
    let a = run_scenario(&s).unwrap();
    let b = run_scenario(&s).unwrap();
    assert_eq!(a.vehicles, b.vehicles);
    assert_eq!(a.intervals, b.intervals);
    let other = run_scenario(&s.clone().with_seed(4)).unwrap();
    assert_ne!(a.vehicles, other.vehicles);
}

#[test]
fn sweep_is_independent_of_jobs() {
    let s = shortened("a", 150.0);
    let seeds = [3, 1, 4, 2];
    let f = |sc: &Scenario| run_scenario(sc).unwrap().vehicles[5].velocity.clone();
    let one = sweep_map(&s, &seeds, 1, f).unwrap();
    let four = sweep_map(&s, &seeds, 4, f).unwrap();
    assert_eq!(one.iter().map(|p| p.0).collect::<Vec<_>>(), seeds);
    assert_eq!(one, four);
    let direct = run_scenario(&s.clone().with_seed(4)).unwrap();
    assert_eq!(one[2].1, direct.vehicles[5].velocity);
}

#[test]
fn redundant_events_change_nothing() {
    let base = shortened("a", 300.0);
    let mut noisy = base.clone();
    noisy.events.push(ScenarioEvent::new(50.0, EventKind::DeactivateController));
    noisy.events.push(ScenarioEvent::new(150.0, EventKind::ActivateController));
    noisy.events.push(ScenarioEvent::new(250.0, EventKind::SetU { value: 7.0 }));
    noisy.events.sort_by(|a, b| a.time.total_cmp(&b.time));

    let a = run_scenario(&base).unwrap();
    let b = run_scenario(&noisy).unwrap();
    assert_eq!(a.vehicles, b.vehicles);
    assert_eq!(a.intervals, b.intervals);
    let warnings = b.events.iter().filter(|e| e.message.starts_with("warning")).count();
    assert!(warnings >= a.events.iter().filter(|e| e.message.starts_with("warning")).count() + 3);
}

#[test]
fn intervals_tile_the_run() {
    for name in ["a", "b", "c"] {
        let s = shortened(name, 320.0);
        let ds = run_scenario(&s).unwrap();
        let iv = &ds.intervals;
        assert!(!iv.is_empty());
        assert_eq!(iv[0].t_start, 0.0, "{name}");
        assert!((iv.last().unwrap().t_end - s.duration).abs() < 1e-9, "{name}");
        for w in iv.windows(2) {
            assert_eq!(w[0].t_end, w[1].t_start, "{name}: {} -> {}", w[0].label, w[1].label);
            assert!(w[0].t_start < w[0].t_end);
        }
        assert!(iv.iter().any(|i| i.kind == IntervalKind::Controlled), "{name}");
    }
}

#[test]
fn wave_interval_starts_at_onset() {
    let s = Scenario::uncontrolled(21, 250.0, 2);
    let ds = run_scenario(&s).unwrap();
    let onset = wave_onset_time(&ds, s.wave_threshold).expect("waves form");
    let waves: Vec<_> = ds.intervals.iter().filter(|i| i.kind == IntervalKind::Waves).collect();
    assert_eq!(waves.len(), 1);
    assert_eq!(waves[0].t_start, onset);
    assert_eq!(waves[0].label, "Waves start");
}

#[test]
fn strict_collision_keeps_partial_recording() {
    let mut s = Scenario::uncontrolled(21, 120.0, 1);
    s.driver.reaction_delay = 0.5;
    s.driver.max_decel = 4.0;
    match run_scenario(&s) {
        Err(Error::RunAborted { cause, partial }) => {
            assert!(matches!(*cause, Error::Collision { .. }));
            assert!(partial.num_samples() > 1);
            assert!(partial.end_time().unwrap() < s.duration);
            partial.validate().unwrap();
        }
        other => panic!("expected an aborted run, got {:?}", other.map(|d| d.num_samples())),
    }
    s.collision_policy = CollisionPolicy::Permissive;
    let ds = run_scenario(&s).unwrap();
    assert!(ds.events.iter().any(|e| e.message.contains("clamped")));
}

/// Spread of speeds some time after a small kick, using the driver model on a bare ring
/// without delay or noise.
fn kicked_spread(p: OvmParams, seconds: f64) -> (f64, f64) {
    let ring = Ring::new(RingTrack::new(260.0).unwrap(), uniform_specs(21, 5.0).unwrap()).unwrap();
    let dt = 0.05;
    let mut world = ring.equal_gap_initialization(optimal_velocity(ring.equilibrium_gap(), &p)).unwrap();
    world.vehicles[0].velocity -= 0.2;
    let mut drivers: Vec<HumanDriver> = (0..21).map(|_| HumanDriver::new(p, dt).unwrap()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let spread = |w: &ringwave_core::WorldState| {
        let v: Vec<f64> = w.vehicles.iter().map(|s| s.velocity).collect();
        v.iter().cloned().fold(f64::MIN, f64::max) - v.iter().cloned().fold(f64::MAX, f64::min)
    };
    let start = spread(&world);
    for _ in 0..(seconds / dt) as usize {
        let gaps = ring.gaps(&world).unwrap();
        let a: Vec<f64> = drivers
            .iter_mut()
            .enumerate()
            .map(|(i, d)| d.acceleration(gaps[i], world.vehicles[i].velocity, &mut rng))
            .collect();
        world = ring.step(&world, &a, dt, CollisionPolicy::Strict).unwrap().0;
    }
    (start, spread(&world))
}

#[test]
fn perturbations_follow_the_stability_margin() {
    let ring_gap = (260.0 - 21.0 * 5.0) / 21.0;
    let calm = OvmParams { noise_std: 0.0, reaction_delay: 0.0, ..OvmParams::default() };
    assert!(string_stability_margin(&calm, ring_gap).unwrap() > 0.0);
    let (start, end) = kicked_spread(calm, 800.0);
    assert!(end > 5.0 * start, "unstable ring: {start} -> {end}");

    let stiff = OvmParams { sensitivity: 3.0, ..calm };
    assert!(string_stability_margin(&stiff, ring_gap).unwrap() < 0.0);
    let (start, end) = kicked_spread(stiff, 800.0);
    assert!(end < 0.01 * start, "stable ring: {start} -> {end}");
}
