//! Per-interval metric tables.

use serde::{Deserialize, Serialize};

use super::{
    braking_event_rate, deceleration_threshold, interval_fuel_consumption, interval_velocity_mean,
    interval_velocity_std, throughput,
};
use crate::dataset::{Interval, IntervalKind, TrajectoryDataset};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalMetrics {
    pub interval: Interval,
    pub velocity_mean: f64,
    pub velocity_std: f64,
    pub fuel_per_100km: f64,
    /// Events per vehicle per km.
    pub braking_rate: f64,
    /// Vehicles per hour.
    pub throughput: f64,
}

/// Percent change from the wave interval to the best controlled interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub wave_label: String,
    pub controlled_label: String,
    pub velocity_mean_pct: f64,
    pub velocity_std_pct: f64,
    pub fuel_pct: f64,
    pub braking_pct: f64,
    pub throughput_pct: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    /// Braking threshold used for every row, m/s^2.
    pub braking_threshold: f64,
    pub rows: Vec<IntervalMetrics>,
}

impl MetricsReport {
    pub fn row(&self, label: &str) -> Option<&IntervalMetrics> {
        self.rows.iter().find(|r| r.interval.label == label)
    }

    pub fn wave_row(&self) -> Option<&IntervalMetrics> {
        self.rows.iter().find(|r| r.interval.kind == IntervalKind::Waves)
    }

    /// Controlled interval with the lowest velocity std.
    pub fn best_controlled_row(&self) -> Option<&IntervalMetrics> {
        self.rows
            .iter()
            .filter(|r| r.interval.kind == IntervalKind::Controlled)
            .min_by(|a, b| a.velocity_std.total_cmp(&b.velocity_std))
    }

    pub fn comparison(&self) -> Option<ComparisonRow> {
        compare(self.wave_row()?, self.best_controlled_row()?)
    }
}

pub fn percent_change(from: f64, to: f64) -> f64 {
    if from == to {
        return 0.0;
    }
    (to - from) / from * 100.0
}

pub fn compare(wave: &IntervalMetrics, controlled: &IntervalMetrics) -> Option<ComparisonRow> {
    Some(ComparisonRow {
        wave_label: wave.interval.label.clone(),
        controlled_label: controlled.interval.label.clone(),
        velocity_mean_pct: percent_change(wave.velocity_mean, controlled.velocity_mean),
        velocity_std_pct: percent_change(wave.velocity_std, controlled.velocity_std),
        fuel_pct: percent_change(wave.fuel_per_100km, controlled.fuel_per_100km),
        braking_pct: percent_change(wave.braking_rate, controlled.braking_rate),
        throughput_pct: percent_change(wave.throughput, controlled.throughput),
    })
}

/// Evaluates every interval. The braking threshold comes from the first
/// interval of kind [`IntervalKind::Waves`], or the whole recording when
/// there is none.
pub fn compute_report(ds: &TrajectoryDataset, intervals: &[Interval]) -> Result<MetricsReport> {
    let basis = match intervals.iter().find(|i| i.kind == IntervalKind::Waves) {
        Some(w) => w.clone(),
        None => ds.full_interval("all", IntervalKind::Other)?,
    };
    let tau = deceleration_threshold(ds, &basis)?;
    if !(tau > 0.0) {
        return Err(Error::InsufficientData(format!(
            "braking threshold from '{}' is zero: no acceleration variability",
            basis.label
        )));
    }
    let rows = intervals
        .iter()
        .map(|iv| {
            let velocity_mean = interval_velocity_mean(ds, iv)?;
            Ok(IntervalMetrics {
                interval: iv.clone(),
                velocity_mean,
                velocity_std: interval_velocity_std(ds, iv)?,
                fuel_per_100km: interval_fuel_consumption(ds, iv)?,
                braking_rate: braking_event_rate(ds, iv, tau)?,
                throughput: throughput(ds.num_vehicles(), ds.track_length, velocity_mean)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(MetricsReport { braking_threshold: tau, rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(label: &str, kind: IntervalKind, std: f64) -> IntervalMetrics {
        IntervalMetrics {
            interval: Interval::new(label, 0.0, 1.0, kind).unwrap(),
            velocity_mean: 7.0,
            velocity_std: std,
            fuel_per_100km: 20.0,
            braking_rate: 5.0,
            throughput: 2000.0,
        }
    }

    #[test]
    fn picks_lowest_std_controlled_interval() {
        let report = MetricsReport {
            braking_threshold: 0.5,
            rows: vec![
                row("start", IntervalKind::Baseline, 1.0),
                row("waves", IntervalKind::Waves, 3.31),
                row("c1", IntervalKind::Controlled, 1.69),
                row("c2", IntervalKind::Controlled, 0.64),
                row("off", IntervalKind::Released, 0.1),
            ],
        };
        let c = report.comparison().unwrap();
        assert_eq!(c.controlled_label, "c2");
        assert!((c.velocity_std_pct - (-80.664_652_567_975_83)).abs() < 1e-9);
        assert_eq!(c.fuel_pct, 0.0);
    }

    #[test]
    fn no_comparison_without_both_kinds() {
        let report = MetricsReport { braking_threshold: 0.5, rows: vec![row("w", IntervalKind::Waves, 3.0)] };
        assert!(report.comparison().is_none());
    }
}
