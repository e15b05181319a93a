//! Trajectory CSV exchange, interval tables and report rendering.

mod import;
mod render;

pub use import::{
    central_difference, import_displacement, moving_average, read_trajectory_csv, smoothed_derivative, ColumnMap,
    ImportOptions,
};
pub use render::{render_report, render_report_csv, render_report_text, ReportFormat};

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use crate::dataset::{Interval, IntervalKind, TrajectoryDataset};
use crate::error::{invalid, Error, Result};

pub const TRAJECTORY_HEADER: [&str; 7] =
    ["time", "vehicle_id", "position_m", "velocity_mps", "accel_mps2", "fuel_lps", "v_cmd_mps"];

pub const INTERVALS_HEADER: [&str; 4] = ["label", "t_start", "t_end", "kind"];

pub(crate) fn io_err(path: &Path, source: std::io::Error) -> Error {
    Error::Io { path: path.display().to_string(), source }
}

fn create(path: &Path) -> Result<File> {
    File::create(path).map_err(|e| io_err(path, e))
}

pub(crate) fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| io_err(path, e))
}

/// Writes one row per (sample, vehicle), sorted by time then vehicle id.
/// Fuel rate keeps 9 decimals since it is of order 1e-3 l/s; every other
/// field keeps 6.
pub fn write_trajectory_csv<W: Write>(ds: &TrajectoryDataset, out: W) -> Result<()> {
    ds.validate()?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TRAJECTORY_HEADER)?;
    let mut order: Vec<usize> = (0..ds.num_vehicles()).collect();
    order.sort_by_key(|&i| ds.vehicles[i].id);
    for (j, t) in ds.times.iter().enumerate() {
        for &i in &order {
            let v = &ds.vehicles[i];
            w.write_record([
                format!("{t:.6}"),
                v.id.to_string(),
                format!("{:.6}", v.position[j]),
                format!("{:.6}", v.velocity[j]),
                format!("{:.6}", v.acceleration[j]),
                format!("{:.9}", v.fuel_rate[j]),
                v.v_cmd[j].map(|c| format!("{c:.6}")).unwrap_or_default(),
            ])?;
        }
    }
    w.flush().map_err(|e| io_err(Path::new("<csv>"), e))?;
    Ok(())
}

pub fn export_csv(ds: &TrajectoryDataset, path: &Path) -> Result<()> {
    let f = create(path)?;
    write_trajectory_csv(ds, std::io::BufWriter::new(f)).map_err(|e| match e {
        Error::Io { source, .. } => io_err(path, source),
        e => e,
    })
}

pub fn write_intervals<W: Write>(intervals: &[Interval], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(INTERVALS_HEADER)?;
    for iv in intervals {
        w.write_record([
            iv.label.clone(),
            format!("{:.6}", iv.t_start),
            format!("{:.6}", iv.t_end),
            iv.kind.to_string(),
        ])?;
    }
    w.flush().map_err(|e| io_err(Path::new("<csv>"), e))?;
    Ok(())
}

pub fn export_intervals(intervals: &[Interval], path: &Path) -> Result<()> {
    write_intervals(intervals, create(path)?)
}

/// Reads `label,t_start,t_end[,kind]`. A missing kind is inferred from the
/// label: "wave" means the wave interval, anything else is `other`.
pub fn read_intervals<R: Read>(input: R) -> Result<Vec<Interval>> {
    let mut r = csv::Reader::from_reader(input);
    let headers = r.headers()?.clone();
    let col = |name: &str| headers.iter().position(|h| h.trim() == name);
    let (Some(label), Some(start), Some(end)) = (col("label"), col("t_start"), col("t_end")) else {
        return Err(invalid("intervals file needs label, t_start and t_end columns"));
    };
    let kind_col = col("kind");
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let get = |i: usize| rec.get(i).unwrap_or("").trim();
        let parse = |i: usize| -> Result<f64> {
            get(i).parse().map_err(|_| invalid(format!("bad number '{}' in intervals file", get(i))))
        };
        let name = get(label).to_string();
        let kind = match kind_col.map(get) {
            Some(k) if !k.is_empty() => k.parse()?,
            _ if name.to_ascii_lowercase().contains("wave") => IntervalKind::Waves,
            _ => IntervalKind::Other,
        };
        out.push(Interval::new(name, parse(start)?, parse(end)?, kind)?);
    }
    Ok(out)
}

pub fn import_intervals(path: &Path) -> Result<Vec<Interval>> {
    read_intervals(open(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> TrajectoryDataset {
        let mut ds = TrajectoryDataset::new(0.5, 260.0, [2, 1]);
        ds.times = vec![0.0, 0.5];
        for (k, v) in ds.vehicles.iter_mut().enumerate() {
            v.position = vec![k as f64, k as f64 + 3.5];
            v.velocity = vec![7.0, 7.0];
            v.acceleration = vec![0.0, -0.125];
            v.fuel_rate = vec![0.000812345678, 0.0008];
            v.v_cmd = vec![None, if k == 0 { Some(6.5) } else { None }];
        }
        ds
    }

    #[test]
    fn header_and_row_order() {
        let mut buf = Vec::new();
        write_trajectory_csv(&tiny(), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "time,vehicle_id,position_m,velocity_mps,accel_mps2,fuel_lps,v_cmd_mps");
        assert_eq!(lines[1], "0.000000,1,1.000000,7.000000,0.000000,0.000812346,");
        assert_eq!(lines[2], "0.000000,2,0.000000,7.000000,0.000000,0.000812346,");
        assert_eq!(lines[4], "0.500000,2,3.500000,7.000000,-0.125000,0.000800000,6.500000");
        assert_eq!(lines.len(), 5);
    }

    #[test]
    fn empty_dataset_is_header_only() {
        let ds = TrajectoryDataset::new(0.05, 260.0, [1, 2]);
        let mut buf = Vec::new();
        write_trajectory_csv(&ds, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), format!("{}\n", TRAJECTORY_HEADER.join(",")));
    }

    #[test]
    fn unwritable_path_is_io_error() {
        let err = export_csv(&tiny(), Path::new("/nonexistent/dir/x.csv")).unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
    }

    #[test]
    fn intervals_roundtrip() {
        let ivs = vec![
            Interval::new("Exp. start", 0.0, 79.0, IntervalKind::Baseline).unwrap(),
            Interval::new("Waves start", 79.0, 126.0, IntervalKind::Waves).unwrap(),
            Interval::new("Autonomy 6.50 m/s", 126.0, 222.0, IntervalKind::Controlled).unwrap(),
        ];
        let mut buf = Vec::new();
        write_intervals(&ivs, &mut buf).unwrap();
        assert_eq!(read_intervals(buf.as_slice()).unwrap(), ivs);

        let bare = "label,t_start,t_end\nWaves,1,2\nother,2,3\n";
        let got = read_intervals(bare.as_bytes()).unwrap();
        assert_eq!(got[0].kind, IntervalKind::Waves);
        assert_eq!(got[1].kind, IntervalKind::Other);
        assert!(read_intervals("label,t_start\n".as_bytes()).is_err());
    }
}
