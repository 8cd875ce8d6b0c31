//! `isd`: command-line front end for the sensor digital twin.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use isd_core::excitation::ExcitationKind;

#[derive(Parser, Debug)]
#[command(name = "isd", version, about = "Static/dynamic pressure sensor digital twin")]
pub struct Cli {
    /// Configuration file of `section.key = value` lines.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate a pressure excitation trace.
    Gen(GenArgs),
    /// Simulate the DC and AC output channels for a pressure trace.
    Sim(SimArgs),
    /// Shape an AC trace through the RC conditioning network.
    Condition(ConditionArgs),
    /// Charge a storage capacitor through the rectifier.
    Harvest(OutArgs),
    /// Fit a pressure-voltage curve.
    Fit(FitArgs),
    /// Detect static plateaus and dynamic spikes.
    Classify(ClassifyArgs),
    /// Map events to commands, send them over the link and drive the hand.
    Control(ControlArgs),
    /// Aggregate metrics into a single run report.
    Report(ReportArgs),
    /// Print the resolved configuration.
    Config,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum Kind {
    Square,
    Sine,
    WeightSteps,
    TapTrain,
    Constant,
}

impl From<Kind> for ExcitationKind {
    fn from(k: Kind) -> Self {
        match k {
            Kind::Square => ExcitationKind::Square,
            Kind::Sine => ExcitationKind::Sine,
            Kind::WeightSteps => ExcitationKind::WeightSteps,
            Kind::TapTrain => ExcitationKind::TapTrain,
            Kind::Constant => ExcitationKind::Constant,
        }
    }
}

#[derive(Args, Debug)]
pub struct OutArgs {
    #[arg(short, long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct GenArgs {
    #[arg(short, long)]
    pub out: PathBuf,
    #[arg(long, value_enum)]
    pub kind: Option<Kind>,
    #[arg(long)]
    pub amplitude_pa: Option<f64>,
    #[arg(long)]
    pub frequency_hz: Option<f64>,
    #[arg(long)]
    pub duration_s: Option<f64>,
    #[arg(long)]
    pub sample_rate_hz: Option<f64>,
}

#[derive(Args, Debug)]
pub struct SimArgs {
    /// Pressure trace CSV.
    #[arg(short, long)]
    pub input: PathBuf,
    #[arg(long)]
    pub dc_out: PathBuf,
    #[arg(long)]
    pub ac_out: PathBuf,
}

#[derive(Args, Debug)]
pub struct ConditionArgs {
    /// AC voltage trace CSV.
    #[arg(short, long)]
    pub input: PathBuf,
    #[arg(short, long)]
    pub out: PathBuf,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum Model {
    Piecewise,
    Exponential,
}

#[derive(Args, Debug)]
pub struct FitArgs {
    /// CSV with columns pressure_kpa,voltage_v.
    #[arg(short, long)]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value = "piecewise")]
    pub model: Model,
    #[arg(long, default_value_t = 3)]
    pub segments: usize,
    /// Pressures (Pa) at which to tabulate an exponential fit's sensitivity.
    #[arg(long, value_delimiter = ',', default_value = "0")]
    pub at_pa: Vec<f64>,
    #[arg(short, long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct ClassifyArgs {
    #[arg(long)]
    pub dc: PathBuf,
    #[arg(long)]
    pub ac: PathBuf,
    #[arg(short, long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct ControlArgs {
    /// DC voltage trace CSV; Bend levels are read from it.
    #[arg(long)]
    pub dc: PathBuf,
    /// Events JSON from `classify`.
    #[arg(long, conflicts_with = "ac", required_unless_present = "ac")]
    pub events: Option<PathBuf>,
    /// AC trace CSV, classified on the fly when no events file is given.
    #[arg(long)]
    pub ac: Option<PathBuf>,
    /// Delivered commands as JSON lines.
    #[arg(long)]
    pub commands_out: PathBuf,
    /// Hand trajectory CSV.
    #[arg(long)]
    pub trajectory_out: PathBuf,
}

#[derive(Args, Debug)]
pub struct ReportArgs {
    /// Pressure-voltage CSV to characterize with a piecewise fit.
    #[arg(long)]
    pub pv: Option<PathBuf>,
    #[arg(long, default_value_t = 3)]
    pub segments: usize,
    /// DC step response CSV for rise/fall extraction.
    #[arg(long)]
    pub step_dc: Option<PathBuf>,
    /// Compute the detection limit of the configured sensor.
    #[arg(long)]
    pub detection: bool,
    /// Existing report JSON files to merge.
    #[arg(long = "include", value_name = "JSON")]
    pub includes: Vec<PathBuf>,
    #[arg(short, long)]
    pub out: PathBuf,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("isd: {e}");
            ExitCode::from(if e.is_io() { 2 } else { 1 })
        }
    }
}
