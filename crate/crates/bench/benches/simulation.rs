use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use ringwave_core::control::{follower_stopper, ControllerInput, FollowerStopperConfig};
use ringwave_core::io::write_trajectory_csv;
use ringwave_core::metrics::count_braking_peaks;
use ringwave_core::{compute_report, run_scenario, templates, Scenario};

fn simulation(c: &mut Criterion) {
    let mut g = c.benchmark_group("simulation");
    g.sample_size(10);
    let ring = Scenario::uncontrolled(21, 60.0, 1);
    g.bench_function("uncontrolled_21_vehicles_60s", |b| b.iter(|| run_scenario(black_box(&ring)).unwrap()));
    let mut a = templates::template("a").unwrap();
    a.duration = 200.0;
    a.events.retain(|e| e.time <= a.duration);
    g.bench_function("experiment_a_200s", |b| b.iter(|| run_scenario(black_box(&a)).unwrap()));
    g.finish();
}

fn controllers(c: &mut Criterion) {
    let cfg = FollowerStopperConfig::default();
    let inputs: Vec<ControllerInput> = (0..1000)
        .map(|k| ControllerInput {
            v_av: 7.0,
            gap: 2.0 + k as f64 * 0.02,
            dv: -1.5 + k as f64 * 0.003,
            desired: Some(7.5),
        })
        .collect();
    c.bench_function("follower_stopper_1000_evals", |b| {
        b.iter(|| inputs.iter().map(|i| follower_stopper(black_box(i), &cfg).unwrap()).sum::<f64>())
    });
}

fn metrics_and_io(c: &mut Criterion) {
    let s = templates::template("c").unwrap();
    let ds = run_scenario(&s).unwrap();
    c.bench_function("compute_report_experiment_c", |b| {
        b.iter(|| compute_report(black_box(&ds), &ds.intervals).unwrap())
    });
    let accel = &ds.vehicles[0].acceleration;
    c.bench_function("count_braking_peaks_one_vehicle", |b| b.iter(|| count_braking_peaks(black_box(accel), 0.5)));
    c.bench_function("write_trajectory_csv_experiment_c", |b| {
        b.iter_batched(Vec::new, |mut buf| write_trajectory_csv(&ds, &mut buf).unwrap(), BatchSize::LargeInput)
    });
}

criterion_group!(benches, simulation, controllers, metrics_and_io);
criterion_main!(benches);
