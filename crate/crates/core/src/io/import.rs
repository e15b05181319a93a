use std::collections::BTreeMap;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::open;
use crate::dataset::TrajectoryDataset;
use crate::error::{invalid, Error, Result};
use crate::fleet;
use crate::metrics::fuel_rate;

/// Column names to look for. Unknown columns are ignored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ColumnMap {
    pub time: String,
    pub vehicle_id: String,
    pub position: String,
    pub velocity: String,
    pub acceleration: String,
    pub fuel: String,
    pub v_cmd: String,
}

impl Default for ColumnMap {
    fn default() -> Self {
        Self {
            time: "time".into(),
            vehicle_id: "vehicle_id".into(),
            position: "position_m".into(),
            velocity: "velocity_mps".into(),
            acceleration: "accel_mps2".into(),
            fuel: "fuel_lps".into(),
            v_cmd: "v_cmd_mps".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImportOptions {
    /// Sampling period; inferred from the time column when `None`.
    pub dt: Option<f64>,
    /// Smoothing window for derived velocity and acceleration, s.
    pub window: f64,
    pub track_length: f64,
    pub columns: ColumnMap,
}

impl Default for ImportOptions {
    fn default() -> Self {
        Self { dt: None, window: 0.5, track_length: 260.0, columns: ColumnMap::default() }
    }
}

/// Central difference in the interior, one-sided at both ends.
pub fn central_difference(x: &[f64], dt: f64) -> Vec<f64> {
    let m = x.len();
    match m {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => (0..m)
            .map(|j| {
                if j == 0 {
                    (x[1] - x[0]) / dt
                } else if j == m - 1 {
                    (x[m - 1] - x[m - 2]) / dt
                } else {
                    (x[j + 1] - x[j - 1]) / (2.0 * dt)
                }
            })
            .collect(),
    }
}

/// Centred moving average over `width` samples (rounded up to odd). Near the
/// ends the window shrinks symmetrically so it stays centred.
pub fn moving_average(x: &[f64], width: usize) -> Vec<f64> {
    let half = width / 2;
    let m = x.len();
    let mut prefix = Vec::with_capacity(m + 1);
    prefix.push(0.0);
    for v in x {
        prefix.push(prefix.last().unwrap() + v);
    }
    (0..m)
        .map(|j| {
            let h = half.min(j).min(m - 1 - j);
            let (lo, hi) = (j - h, j + h + 1);
            (prefix[hi] - prefix[lo]) / (hi - lo) as f64
        })
        .collect()
}

/// Derivative of a uniformly sampled signal, smoothed over `window` seconds.
pub fn smoothed_derivative(x: &[f64], dt: f64, window: f64) -> Vec<f64> {
    let width = ((window / dt).round() as usize).max(1);
    let d = central_difference(x, dt);
    moving_average(&d, width)
}

struct Row {
    time: f64,
    position: f64,
    velocity: Option<f64>,
    acceleration: Option<f64>,
    fuel: Option<f64>,
    v_cmd: Option<f64>,
}

fn parse_num(s: &str, what: &str, line: u64) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| invalid(format!("line {line}: bad {what} '{s}'")))
}

/// Reads trajectory CSV. Velocity and acceleration columns that are absent
/// are derived from position by smoothed central differences; a missing
/// fuel column is filled in from the fleet fuel model.
pub fn read_trajectory_csv<R: Read>(input: R, opts: &ImportOptions) -> Result<TrajectoryDataset> {
    let mut r = csv::Reader::from_reader(input);
    let headers = r.headers()?.clone();
    let col = |name: &str| headers.iter().position(|h| h.trim() == name);
    let c = &opts.columns;
    let (Some(tc), Some(ic), Some(pc)) = (col(&c.time), col(&c.vehicle_id), col(&c.position)) else {
        return Err(invalid(format!(
            "trajectory file needs '{}', '{}' and '{}' columns",
            c.time, c.vehicle_id, c.position
        )));
    };
    let (vc, ac, fc, cc) = (col(&c.velocity), col(&c.acceleration), col(&c.fuel), col(&c.v_cmd));

    let mut by_id: BTreeMap<u32, Vec<Row>> = BTreeMap::new();
    for rec in r.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        let field = |i: usize| rec.get(i).unwrap_or("");
        let optional = |i: Option<usize>, what: &str| -> Result<Option<f64>> {
            match i.map(field).map(str::trim) {
                None | Some("") => Ok(None),
                Some(s) => parse_num(s, what, line).map(Some),
            }
        };
        let id: u32 =
            field(ic).trim().parse().map_err(|_| invalid(format!("line {line}: bad vehicle id '{}'", field(ic))))?;
        by_id.entry(id).or_default().push(Row {
            time: parse_num(field(tc), "time", line)?,
            position: parse_num(field(pc), "position", line)?,
            velocity: optional(vc, "velocity")?,
            acceleration: optional(ac, "acceleration")?,
            fuel: optional(fc, "fuel")?,
            v_cmd: optional(cc, "v_cmd")?,
        });
    }

    let Some(first) = by_id.values_mut().next() else {
        return Ok(TrajectoryDataset::new(opts.dt.unwrap_or(0.05), opts.track_length, []));
    };
    first.sort_by(|a, b| a.time.total_cmp(&b.time));
    let times: Vec<f64> = first.iter().map(|row| row.time).collect();
    let m = times.len();
    let dt = match opts.dt {
        Some(dt) => dt,
        None if m >= 2 => (times[m - 1] - times[0]) / (m - 1) as f64,
        None => 0.05,
    };
    if !(dt.is_finite() && dt > 0.0) {
        return Err(invalid(format!("sampling period must be positive, got {dt}")));
    }

    let mut ds = TrajectoryDataset::new(dt, opts.track_length, by_id.keys().copied());
    ds.times = times;
    let tol = 0.01 * dt;
    for (series, (id, rows)) in ds.vehicles.iter_mut().zip(by_id.iter_mut()) {
        rows.sort_by(|a, b| a.time.total_cmp(&b.time));
        if rows.len() != m || rows.iter().zip(&ds.times).any(|(row, t)| (row.time - t).abs() > tol) {
            return Err(invalid(format!("vehicle {id} is not sampled on the same time grid as the others")));
        }
        series.position = rows.iter().map(|row| row.position).collect();
        series.velocity = match rows.iter().map(|row| row.velocity).collect::<Option<Vec<_>>>() {
            Some(v) => v,
            None => smoothed_derivative(&series.position, dt, opts.window),
        };
        series.acceleration = match rows.iter().map(|row| row.acceleration).collect::<Option<Vec<_>>>() {
            Some(a) => a,
            None => smoothed_derivative(&series.velocity, dt, opts.window),
        };
        series.fuel_rate = match rows.iter().map(|row| row.fuel).collect::<Option<Vec<_>>>() {
            Some(f) => f,
            None => {
                let p = fleet::fuel_params_for_id(*id);
                series.velocity.iter().zip(&series.acceleration).map(|(&v, &a)| fuel_rate(v, a, &p)).collect()
            }
        };
        series.v_cmd = rows.iter().map(|row| row.v_cmd).collect();
    }
    ds.validate()?;
    Ok(ds)
}

pub fn import_displacement(path: &Path, opts: &ImportOptions) -> Result<TrajectoryDataset> {
    read_trajectory_csv(open(path)?, opts).map_err(|e| match e {
        Error::InvalidInput(msg) => Error::InvalidInput(format!("{}: {msg}", path.display())),
        e => e,
    })
}
