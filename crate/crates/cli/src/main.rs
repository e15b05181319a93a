//! Command-line front end: run scenarios, analyze recordings, sweep seeds.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use ringwave_core::io::ReportFormat;
use ringwave_core::Error;

#[derive(Debug, Parser)]
#[command(name = "ringwave", version, about = "Ring-road traffic waves and wave-dampening controllers")]
struct Cli {
    /// Suppress progress messages and warnings.
    #[arg(short, long, global = true)]
    quiet: bool,

    /// More log output (repeat for debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count, conflicts_with = "quiet")]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Text,
}

impl From<Format> for ReportFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Csv => ReportFormat::Csv,
            Format::Text => ReportFormat::Text,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Loop {
    /// Accelerator PID, +1 m/s step.
    H1,
    /// Brake PID, -1 m/s step.
    H2,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a scenario file, write trajectory.csv, intervals.csv and report.csv.
    Simulate {
        scenario: PathBuf,
        /// Override the scenario seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, env = "RINGWAVE_OUT", default_value = ".")]
        out: PathBuf,
        /// Format of the report printed to stdout.
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
    /// Write one of the shipped experiment templates (a, b or c).
    Template {
        name: String,
        /// Destination file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Report metrics for an external trajectory CSV.
    Analyze {
        trajectory: PathBuf,
        /// Interval table with label,t_start,t_end[,kind] columns.
        #[arg(long, conflicts_with = "auto_intervals")]
        intervals: Option<PathBuf>,
        /// Segment by commanded-speed spans, else by the wave detector (default).
        #[arg(long)]
        auto_intervals: bool,
        #[arg(long, default_value_t = ringwave_core::metrics::DEFAULT_WAVE_THRESHOLD)]
        wave_threshold: f64,
        #[arg(long, default_value_t = 260.0)]
        track_length: f64,
        /// Sampling period; inferred from the time column when omitted.
        #[arg(long)]
        dt: Option<f64>,
        /// Smoothing window for derived velocity and acceleration, s.
        #[arg(long, default_value_t = 0.5)]
        window: f64,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
        /// Write the report here instead of stdout.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Run a scenario over consecutive seeds and summarise.
    Sweep {
        scenario: PathBuf,
        #[arg(long)]
        seeds: u64,
        /// First seed; defaults to the scenario seed.
        #[arg(long)]
        first_seed: Option<u64>,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        #[arg(long, env = "RINGWAVE_OUT", default_value = ".")]
        out: PathBuf,
    },
    /// Closed-loop step response of one low-level PID.
    StepResponse {
        #[arg(value_enum)]
        which: Loop,
        /// Write the velocity trace as CSV.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 20.0)]
        duration: f64,
    },
}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<Error>() {
            return match e.root() {
                Error::Collision { .. } => 3,
                Error::Io { .. } => 4,
                Error::Csv(c) if c.is_io_error() => 4,
                _ => 2,
            };
        }
        if cause.downcast_ref::<std::io::Error>().is_some() {
            return 4;
        }
    }
    1
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match (cli.quiet, cli.verbose) {
        (true, _) => log::LevelFilter::Error,
        (false, 0) => log::LevelFilter::Warn,
        (false, 1) => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).parse_env("RINGWAVE_LOG").format_timestamp(None).init();

    match commands::run(cli) {
        Ok(code) => code,
        Err(err) => {
            let mut msg = err.to_string();
            for cause in err.chain().skip(1) {
                let c = cause.to_string();
                if !msg.contains(&c) {
                    msg.push_str(": ");
                    msg.push_str(&c);
                }
            }
            eprintln!("error: {msg}");
            ExitCode::from(exit_code(&err))
        }
    }
}
