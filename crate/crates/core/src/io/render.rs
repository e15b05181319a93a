use std::fmt::Write as _;
use std::str::FromStr;

use crate::error::{invalid, Error, Result};
use crate::metrics::{ComparisonRow, MetricsReport};

pub const REPORT_HEADER: [&str; 8] = [
    "interval",
    "t_start",
    "t_end",
    "v_mean",
    "v_std",
    "fuel_l_per_100km",
    "braking_events_per_veh_km",
    "throughput_veh_hr",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Text,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(ReportFormat::Csv),
            "text" | "txt" => Ok(ReportFormat::Text),
            other => Err(invalid(format!("unknown report format '{other}'"))),
        }
    }
}

fn comparison_label(c: &ComparisonRow) -> String {
    format!("% change {} -> {}", c.wave_label, c.controlled_label)
}

fn pct(x: f64) -> String {
    format!("{x:.1}")
}

/// One row per interval plus, when both a wave and a controlled interval
/// exist, a percent-change row with empty time columns.
pub fn render_report_csv(report: &MetricsReport) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut rows: Vec<Vec<String>> = vec![REPORT_HEADER.iter().map(|s| s.to_string()).collect()];
    for r in &report.rows {
        rows.push(vec![
            r.interval.label.clone(),
            format!("{:.2}", r.interval.t_start),
            format!("{:.2}", r.interval.t_end),
            format!("{:.4}", r.velocity_mean),
            format!("{:.4}", r.velocity_std),
            format!("{:.4}", r.fuel_per_100km),
            format!("{:.4}", r.braking_rate),
            format!("{:.2}", r.throughput),
        ]);
    }
    if let Some(c) = report.comparison() {
        rows.push(vec![
            comparison_label(&c),
            String::new(),
            String::new(),
            pct(c.velocity_mean_pct),
            pct(c.velocity_std_pct),
            pct(c.fuel_pct),
            pct(c.braking_pct),
            pct(c.throughput_pct),
        ]);
    }
    for row in rows {
        w.write_record(&row).expect("writing to memory");
    }
    String::from_utf8(w.into_inner().expect("flushing memory")).expect("csv output is utf-8")
}

pub fn render_report_text(report: &MetricsReport) -> String {
    let head = [
        "Interval",
        "Start (s)",
        "End (s)",
        "Vel. mean (m/s)",
        "Vel. std (m/s)",
        "Fuel (l/100km)",
        "Braking (/veh/km)",
        "Throughput (veh/hr)",
    ];
    let mut cells: Vec<[String; 8]> = report
        .rows
        .iter()
        .map(|r| {
            [
                r.interval.label.clone(),
                format!("{:.0}", r.interval.t_start),
                format!("{:.0}", r.interval.t_end),
                format!("{:.2}", r.velocity_mean),
                format!("{:.2}", r.velocity_std),
                format!("{:.2}", r.fuel_per_100km),
                format!("{:.2}", r.braking_rate),
                format!("{:.0}", r.throughput),
            ]
        })
        .collect();
    let comparison = report.comparison();
    if let Some(c) = &comparison {
        cells.push([
            "% change".into(),
            String::new(),
            String::new(),
            pct(c.velocity_mean_pct),
            pct(c.velocity_std_pct),
            pct(c.fuel_pct),
            pct(c.braking_pct),
            pct(c.throughput_pct),
        ]);
    }
    let widths: Vec<usize> =
        (0..8).map(|k| cells.iter().map(|r| r[k].chars().count()).chain([head[k].len()]).max().unwrap_or(0)).collect();
    let mut out = String::new();
    let line = |out: &mut String, row: &[&str]| {
        let mut s = String::new();
        for (k, cell) in row.iter().enumerate() {
            if k == 0 {
                let _ = write!(s, "{cell:<w$}", w = widths[k]);
            } else {
                let _ = write!(s, "  {cell:>w$}", w = widths[k]);
            }
        }
        out.push_str(s.trim_end());
        out.push('\n');
    };
    line(&mut out, &head);
    line(
        &mut out,
        &widths.iter().map(|&w| "-".repeat(w)).collect::<Vec<_>>().iter().map(String::as_str).collect::<Vec<_>>(),
    );
    for r in &cells {
        line(&mut out, &r.iter().map(String::as_str).collect::<Vec<_>>());
    }
    let _ = writeln!(out, "\nbraking threshold: {:.3} m/s^2", report.braking_threshold);
    if let Some(c) = comparison {
        let _ = writeln!(out, "{}", comparison_label(&c));
    }
    out
}

pub fn render_report(report: &MetricsReport, format: ReportFormat) -> String {
    match format {
        ReportFormat::Csv => render_report_csv(report),
        ReportFormat::Text => render_report_text(report),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{Interval, IntervalKind};
    use crate::metrics::IntervalMetrics;

    fn row(label: &str, kind: IntervalKind, std: f64) -> IntervalMetrics {
        IntervalMetrics {
            interval: Interval::new(label, 79.0, 126.0, kind).unwrap(),
            velocity_mean: 6.88,
            velocity_std: std,
            fuel_per_100km: 20.0,
            braking_rate: 5.0,
            throughput: 2000.0,
        }
    }

    #[test]
    fn single_interval_has_no_comparison() {
        let rep = MetricsReport { braking_threshold: 0.4, rows: vec![row("Waves start", IntervalKind::Waves, 3.31)] };
        let csv = render_report_csv(&rep);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], REPORT_HEADER.join(","));
        assert_eq!(lines.len(), 2);
        assert!(lines[1].starts_with("Waves start,79.00,126.00,6.8800,3.3100,"));
    }

    #[test]
    fn comparison_row_rendered() {
        let rep = MetricsReport {
            braking_threshold: 0.4,
            rows: vec![
                row("Waves start", IntervalKind::Waves, 3.31),
                row("Autonomy 7.50 m/s", IntervalKind::Controlled, 0.64),
            ],
        };
        let csv = render_report_csv(&rep);
        let last = csv.lines().last().unwrap();
        // (0.64 - 3.31) / 3.31 = -80.66%
        assert_eq!(last, "% change Waves start -> Autonomy 7.50 m/s,,,0.0,-80.7,0.0,0.0,0.0");
        let text = render_report_text(&rep);
        assert!(text.contains("-80.7"));
        assert!(text.lines().next().unwrap().starts_with("Interval"));
    }

    #[test]
    fn format_parse() {
        assert_eq!("CSV".parse::<ReportFormat>().unwrap(), ReportFormat::Csv);
        assert!("xml".parse::<ReportFormat>().is_err());
    }
}
