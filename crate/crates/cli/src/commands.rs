use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::Path;
use std::process::ExitCode;

use anyhow::{Context, Result};
use ringwave_core::actuation::{
    simulate_step_response, step_response_metrics, ActuationGains, PlantParams, StepMode, STEP_TEST_SPEED,
};
use ringwave_core::io::{self, ImportOptions, ReportFormat};
use ringwave_core::metrics::wave_onset_time;
use ringwave_core::{
    auto_intervals, compute_report, run_scenario, sweep_map, templates, Error, MetricsReport, Scenario,
};

use crate::{Cli, Command, Loop};

pub fn run(cli: Cli) -> Result<ExitCode> {
    let quiet = cli.quiet;
    match cli.command {
        Command::Simulate { scenario, seed, out, format } => simulate(&scenario, seed, &out, format.into(), quiet),
        Command::Template { name, out } => template(&name, out.as_deref(), quiet),
        Command::Analyze {
            trajectory,
            intervals,
            auto_intervals: _,
            wave_threshold,
            track_length,
            dt,
            window,
            format,
            output,
        } => {
            let opts = ImportOptions { dt, window, track_length, ..Default::default() };
            analyze(&trajectory, intervals.as_deref(), wave_threshold, &opts, format.into(), output.as_deref())
        }
        Command::Sweep { scenario, seeds, first_seed, jobs, out } => {
            sweep(&scenario, seeds, first_seed, jobs, &out, quiet)
        }
        Command::StepResponse { which, out, duration } => step_response(which, out.as_deref(), duration),
    }
}

fn load_scenario(path: &Path) -> Result<Scenario> {
    let text = fs::read_to_string(path).map_err(|e| Error::Io { path: path.display().to_string(), source: e })?;
    Ok(Scenario::from_toml(&text).with_context(|| format!("reading {}", path.display()))?)
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::Io { path: dir.display().to_string(), source: e })?;
    Ok(())
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::Io { path: path.display().to_string(), source: e })?;
    Ok(())
}

fn progress(quiet: bool, msg: impl AsRef<str>) {
    if !quiet {
        eprintln!("{}", msg.as_ref());
    }
}

/// Runs one scenario into `dir`. The report is computed from the exported
/// CSV read back in, so it matches what `analyze` gives for the same files.
fn simulate_into(scenario: &Scenario, dir: &Path) -> Result<(MetricsReport, Option<f64>)> {
    ensure_dir(dir)?;
    let traj = dir.join("trajectory.csv");
    let ds = match run_scenario(scenario) {
        Ok(ds) => ds,
        Err(Error::RunAborted { cause, partial }) => {
            io::export_csv(&partial, &traj)?;
            log::warn!("partial trajectory written to {}", traj.display());
            return Err(Error::RunAborted { cause, partial }.into());
        }
        Err(e) => return Err(e.into()),
    };
    io::export_csv(&ds, &traj)?;
    io::export_intervals(&ds.intervals, &dir.join("intervals.csv"))?;
    let opts = ImportOptions { track_length: scenario.track.circumference, ..Default::default() };
    let reread = io::import_displacement(&traj, &opts)?;
    let report = compute_report(&reread, &ds.intervals)?;
    write_text(&dir.join("report.csv"), &io::render_report_csv(&report))?;
    Ok((report, wave_onset_time(&reread, scenario.wave_threshold)))
}

fn simulate(path: &Path, seed: Option<u64>, out: &Path, format: ReportFormat, quiet: bool) -> Result<ExitCode> {
    let mut scenario = load_scenario(path)?;
    if let Some(seed) = seed {
        scenario = scenario.with_seed(seed);
    }
    progress(quiet, format!("simulating '{}' for {} s (seed {})", scenario.name, scenario.duration, scenario.seed));
    let (report, _) = simulate_into(&scenario, out)?;
    progress(quiet, format!("wrote trajectory.csv, intervals.csv and report.csv to {}", out.display()));
    print!("{}", io::render_report(&report, format));
    Ok(ExitCode::SUCCESS)
}

fn template(name: &str, out: Option<&Path>, quiet: bool) -> Result<ExitCode> {
    let src = templates::template_source(name)?;
    match out {
        Some(path) => {
            write_text(path, src)?;
            progress(quiet, format!("wrote {}", path.display()));
        }
        None => print!("{src}"),
    }
    Ok(ExitCode::SUCCESS)
}

fn analyze(
    path: &Path,
    intervals: Option<&Path>,
    wave_threshold: f64,
    opts: &ImportOptions,
    format: ReportFormat,
    output: Option<&Path>,
) -> Result<ExitCode> {
    let ds = io::import_displacement(path, opts)?;
    let intervals = match intervals {
        Some(p) => io::import_intervals(p)?,
        None => auto_intervals(&ds, wave_threshold)?,
    };
    let report = compute_report(&ds, &intervals)?;
    let text = io::render_report(&report, format);
    match output {
        Some(p) => write_text(p, &text)?,
        None => print!("{text}"),
    }
    Ok(ExitCode::SUCCESS)
}

struct SeedSummary {
    onset: Option<f64>,
    report: std::result::Result<MetricsReport, String>,
    collided: bool,
}

const SWEEP_HEADER: &str = "seed,status,wave_onset_s,wave_std,best_interval,best_std,std_change_pct,braking_change_pct,fuel_change_pct,throughput_change_pct";

fn sweep(path: &Path, seeds: u64, first: Option<u64>, jobs: usize, out: &Path, quiet: bool) -> Result<ExitCode> {
    let scenario = load_scenario(path)?;
    if seeds == 0 {
        return Err(Error::InvalidInput("--seeds must be at least 1".into()).into());
    }
    let first = first.unwrap_or(scenario.seed);
    let list: Vec<u64> = (first..first + seeds).collect();
    ensure_dir(out)?;
    progress(
        quiet,
        format!("sweeping '{}' over seeds {}..={} on {jobs} thread(s)", scenario.name, first, first + seeds - 1),
    );

    let runs = sweep_map(&scenario, &list, jobs, |s| {
        let dir = out.join(format!("seed_{:04}", s.seed));
        match simulate_into(s, &dir) {
            Ok((report, onset)) => SeedSummary { onset, report: Ok(report), collided: false },
            Err(e) => {
                let collided = e
                    .chain()
                    .any(|c| matches!(c.downcast_ref::<Error>().map(Error::root), Some(Error::Collision { .. })));
                SeedSummary { onset: None, report: Err(format!("{e:#}")), collided }
            }
        }
    })?;

    let mut table = String::from(SWEEP_HEADER);
    table.push('\n');
    let mut text = String::new();
    let mut pcts: Vec<[f64; 4]> = Vec::new();
    let mut failures = 0;
    let mut collisions = 0;
    let fmt = |x: Option<f64>| x.map(|v| format!("{v:.4}")).unwrap_or_default();
    for (seed, s) in &runs {
        match &s.report {
            Ok(rep) => {
                let wave = rep.wave_row();
                let best = rep.best_controlled_row();
                let cmp = rep.comparison();
                let row = [
                    seed.to_string(),
                    "ok".into(),
                    fmt(s.onset),
                    fmt(wave.map(|w| w.velocity_std)),
                    best.map(|b| b.interval.label.clone()).unwrap_or_default(),
                    fmt(best.map(|b| b.velocity_std)),
                    fmt(cmp.as_ref().map(|c| c.velocity_std_pct)),
                    fmt(cmp.as_ref().map(|c| c.braking_pct)),
                    fmt(cmp.as_ref().map(|c| c.fuel_pct)),
                    fmt(cmp.as_ref().map(|c| c.throughput_pct)),
                ];
                table.push_str(&csv_line(&row));
                match &cmp {
                    Some(c) => {
                        pcts.push([c.velocity_std_pct, c.braking_pct, c.fuel_pct, c.throughput_pct]);
                        let _ = writeln!(
                            text,
                            "seed {seed:>4}: onset {:>7}  std {:+6.1}%  braking {:+6.1}%  fuel {:+6.1}%  ({})",
                            s.onset.map_or("-".into(), |o| format!("{o:.1}s")),
                            c.velocity_std_pct,
                            c.braking_pct,
                            c.fuel_pct,
                            c.controlled_label
                        );
                    }
                    None => {
                        let _ = writeln!(
                            text,
                            "seed {seed:>4}: onset {:>7}  no wave/controlled pair to compare",
                            s.onset.map_or("-".into(), |o| format!("{o:.1}s"))
                        );
                    }
                }
            }
            Err(msg) => {
                failures += 1;
                collisions += usize::from(s.collided);
                let status = if s.collided { "collision" } else { "error" };
                let mut row = vec![String::new(); 10];
                row[0] = seed.to_string();
                row[1] = status.into();
                row[2] = fmt(s.onset);
                table.push_str(&csv_line(&row));
                let _ = writeln!(text, "seed {seed:>4}: {msg}");
            }
        }
    }
    write_text(&out.join("sweep.csv"), &table)?;

    if !pcts.is_empty() {
        let n = pcts.len() as f64;
        let mean = |k: usize| pcts.iter().map(|p| p[k]).sum::<f64>() / n;
        let _ = writeln!(
            text,
            "mean over {} compared seed(s): std {:+.1}%  braking {:+.1}%  fuel {:+.1}%  throughput {:+.1}%",
            pcts.len(),
            mean(0),
            mean(1),
            mean(2),
            mean(3)
        );
    }
    let _ = writeln!(text, "{} of {} seed(s) completed", runs.len() - failures, runs.len());
    print!("{text}");
    progress(quiet, format!("wrote per-seed outputs and sweep.csv to {}", out.display()));
    Ok(if collisions > 0 {
        ExitCode::from(3)
    } else if failures > 0 {
        ExitCode::from(2)
    } else {
        ExitCode::SUCCESS
    })
}

fn csv_line(fields: &[String]) -> String {
    let mut w = csv::WriterBuilder::new().from_writer(Vec::new());
    w.write_record(fields).expect("writing to memory");
    String::from_utf8(w.into_inner().expect("flushing memory")).expect("utf-8")
}

fn step_response(which: Loop, out: Option<&Path>, duration: f64) -> Result<ExitCode> {
    if !(duration.is_finite() && duration > 0.0) {
        return Err(Error::InvalidInput(format!("duration must be positive, got {duration}")).into());
    }
    let dt = ringwave_core::scenario::DEFAULT_DT;
    let (mode, step, name) = match which {
        Loop::H1 => (StepMode::H1, 1.0, "h1 (accelerate)"),
        Loop::H2 => (StepMode::H2, -1.0, "h2 (brake)"),
    };
    let trace = simulate_step_response(
        mode,
        &PlantParams::default(),
        &ActuationGains::default(),
        STEP_TEST_SPEED,
        duration,
        dt,
    );
    let m = step_response_metrics(&trace, dt, step)?;
    if let Some(path) = out {
        let mut body = String::from("time,velocity_mps\n");
        for (k, v) in trace.iter().enumerate() {
            let _ = writeln!(body, "{:.6},{v:.6}", k as f64 * dt);
        }
        write_text(path, &body)?;
    }
    let mut stdout = std::io::stdout().lock();
    writeln!(stdout, "loop: {name}, {step:+.0} m/s step from {STEP_TEST_SPEED} m/s")?;
    writeln!(stdout, "rise time (10-90%): {:.3} s", m.rise_time)?;
    writeln!(stdout, "overshoot: {:.2} %", m.overshoot_pct)?;
    writeln!(stdout, "settling time (2%): {:.3} s", m.settling_time)?;
    Ok(ExitCode::SUCCESS)
}
