//! Traffic-state metrics over trajectory datasets.

pub mod fuel;
pub mod peaks;
pub mod report;

pub use fuel::{fuel_rate, FuelModelParams};
pub use peaks::count_braking_peaks;
pub use report::{compare, compute_report, ComparisonRow, IntervalMetrics, MetricsReport};

use crate::dataset::{Interval, TrajectoryDataset};
use crate::error::{invalid, Error, Result};
use crate::ring::VehicleState;

/// Cross-vehicle std (divisor n-1) above which traffic is said to carry a wave.
pub const DEFAULT_WAVE_THRESHOLD: f64 = 2.5;

pub fn spatial_mean_velocity(frame: &[VehicleState]) -> Result<f64> {
    if frame.is_empty() {
        return Err(Error::InsufficientData("empty frame".into()));
    }
    Ok(frame.iter().map(|v| v.velocity).sum::<f64>() / frame.len() as f64)
}

fn samples(ds: &TrajectoryDataset, interval: &Interval) -> Result<std::ops::Range<usize>> {
    if ds.vehicles.is_empty() {
        return Err(Error::InsufficientData("dataset has no vehicles".into()));
    }
    let r = ds.index_range(interval);
    if r.is_empty() {
        return Err(Error::InsufficientData(format!(
            "interval '{}' [{}, {}] contains no samples",
            interval.label, interval.t_start, interval.t_end
        )));
    }
    Ok(r)
}

/// Mean velocity over all vehicles and samples in the interval.
pub fn interval_velocity_mean(ds: &TrajectoryDataset, interval: &Interval) -> Result<f64> {
    let r = samples(ds, interval)?;
    let count = (r.len() * ds.num_vehicles()) as f64;
    let sum: f64 = ds.vehicles.iter().map(|v| v.velocity[r.clone()].iter().sum::<f64>()).sum();
    Ok(sum / count)
}

/// Pooled sample std over every vehicle and sample, divisor `mn - 1`.
pub fn interval_velocity_std(ds: &TrajectoryDataset, interval: &Interval) -> Result<f64> {
    let r = samples(ds, interval)?;
    let count = r.len() * ds.num_vehicles();
    if count < 2 {
        return Err(Error::InsufficientData("velocity std needs at least 2 samples".into()));
    }
    let mean = interval_velocity_mean(ds, interval)?;
    let ss: f64 = ds.vehicles.iter().flat_map(|v| v.velocity[r.clone()].iter()).map(|x| (x - mean).powi(2)).sum();
    Ok((ss / (count - 1) as f64).sqrt())
}

/// Litres per 100 km: trapezoid-integrated fuel of all vehicles divided by
/// their total distance.
pub fn interval_fuel_consumption(ds: &TrajectoryDataset, interval: &Interval) -> Result<f64> {
    let r = samples(ds, interval)?;
    let mut litres = 0.0;
    let mut metres = 0.0;
    for v in &ds.vehicles {
        let c = &v.fuel_rate[r.clone()];
        litres += c.windows(2).map(|w| 0.5 * (w[0] + w[1]) * ds.dt).sum::<f64>();
        metres += v.position[r.end - 1] - v.position[r.start];
    }
    if metres <= 0.0 {
        return Err(Error::InsufficientData(format!("no distance travelled in interval '{}'", interval.label)));
    }
    Ok(litres / metres * 1.0e5)
}

fn sample_std(xs: &[f64]) -> Option<f64> {
    if xs.len() < 2 {
        return None;
    }
    let mean = xs.iter().sum::<f64>() / xs.len() as f64;
    let ss: f64 = xs.iter().map(|x| (x - mean).powi(2)).sum();
    Some((ss / (xs.len() - 1) as f64).sqrt())
}

/// Braking threshold: mean over vehicles of the per-vehicle sample std of
/// the acceleration signal inside the wave interval.
pub fn deceleration_threshold(ds: &TrajectoryDataset, wave_interval: &Interval) -> Result<f64> {
    let r = samples(ds, wave_interval)?;
    let stds: Option<Vec<f64>> = ds.vehicles.iter().map(|v| sample_std(&v.acceleration[r.clone()])).collect();
    let stds = stds.ok_or_else(|| Error::InsufficientData("threshold interval has a single sample".into()))?;
    Ok(stds.iter().sum::<f64>() / stds.len() as f64)
}

/// Braking events per vehicle per km.
pub fn braking_event_rate(ds: &TrajectoryDataset, interval: &Interval, tau: f64) -> Result<f64> {
    if !(tau.is_finite() && tau > 0.0) {
        return Err(invalid(format!("braking threshold must be positive, got {tau}")));
    }
    let r = samples(ds, interval)?;
    let mut total = 0.0;
    for v in &ds.vehicles {
        let km = (v.position[r.end - 1] - v.position[r.start]) / 1000.0;
        if km <= 0.0 {
            return Err(Error::InsufficientData(format!(
                "vehicle {} travelled no distance in '{}'",
                v.id, interval.label
            )));
        }
        total += count_braking_peaks(&v.acceleration[r.clone()], tau) as f64 / km;
    }
    Ok(total / ds.num_vehicles() as f64)
}

/// Flow `q = (n / L) v` in vehicles per hour.
pub fn throughput(n: usize, circumference: f64, mean_velocity: f64) -> Result<f64> {
    if !(circumference.is_finite() && circumference > 0.0) {
        return Err(invalid(format!("ring length must be positive, got {circumference}")));
    }
    Ok(n as f64 / circumference * mean_velocity * 3600.0)
}

/// Cross-vehicle sample std of velocity at every sample.
pub fn instantaneous_velocity_std(ds: &TrajectoryDataset) -> Vec<f64> {
    let n = ds.num_vehicles();
    (0..ds.num_samples())
        .map(|j| {
            if n < 2 {
                return 0.0;
            }
            let mean = ds.velocities_at(j).sum::<f64>() / n as f64;
            let ss: f64 = ds.velocities_at(j).map(|v| (v - mean).powi(2)).sum();
            (ss / (n - 1) as f64).sqrt()
        })
        .collect()
}

/// First time the cross-vehicle velocity std exceeds `threshold`.
pub fn wave_onset_time(ds: &TrajectoryDataset, threshold: f64) -> Option<f64> {
    wave_onset_after(ds, threshold, f64::NEG_INFINITY)
}

/// Like [`wave_onset_time`], ignoring samples before `t_min`.
pub fn wave_onset_after(ds: &TrajectoryDataset, threshold: f64, t_min: f64) -> Option<f64> {
    instantaneous_velocity_std(ds)
        .into_iter()
        .zip(&ds.times)
        .find(|(s, &t)| t >= t_min && *s > threshold)
        .map(|(_, &t)| t)
}
