use std::path::Path;

use isd_core::charfit::{
    detection_limit, extract_response_times, fit_exponential, fit_piecewise, sensitivity_report, Fit, SensingMode,
};
use isd_core::conditioning::shape_pulse;
use isd_core::config::Config;
use isd_core::control::{actuate, classify, map_control, transmit, Event, HandState};
use isd_core::excitation::generate;
use isd_core::harvest::harvest;
use isd_core::io::{
    format_hand_trajectory, read_json, read_pv, read_trace, write_atomic, write_json,
    write_json_lines, write_trace,
};
use isd_core::report::Report;
use isd_core::transducer::simulate;
use isd_core::{Channel, Result};

use crate::{Cli, Command, ControlArgs, FitArgs, GenArgs, Model, ReportArgs};

fn display(path: &Path) -> String {
    path.display().to_string()
}

pub fn run(cli: &Cli) -> Result<()> {
    let cfg = Config::load(cli.config.as_deref())?;
    match &cli.command {
        Command::Gen(args) => gen(&cfg, args),
        Command::Sim(args) => {
            let pressure = read_trace(&args.input, Some(Channel::PressurePa))?;
            let out = simulate(&pressure, &cfg.transducer()?, &cfg.ce_state(), &cfg.response_dynamics())?;
            write_trace(&args.dc_out, &out.dc)?;
            write_trace(&args.ac_out, &out.ac)?;
            println!("simulated {} samples", pressure.len());
            Ok(())
        }
        Command::Condition(args) => {
            let ac = read_trace(&args.input, Some(Channel::VoltageAc))?;
            let shaped = shape_pulse(&ac, &cfg.conditioning_network())?;
            write_trace(&args.out, &shaped)?;
            println!("shaped {} samples", shaped.len());
            Ok(())
        }
        Command::Harvest(args) => {
            let trace = harvest(&cfg.harvest_config())?;
            write_trace(&args.out, &trace)?;
            println!("final storage voltage {:.6} V", trace.samples.last().copied().unwrap_or(0.0));
            Ok(())
        }
        Command::Fit(args) => fit(&cfg, args),
        Command::Classify(args) => {
            let dc = read_trace(&args.dc, Some(Channel::VoltageDc))?;
            let ac = read_trace(&args.ac, Some(Channel::VoltageAc))?;
            let events = classify(&dc, &ac, &cfg.classifier_config())?;
            write_json(&args.out, &events)?;
            println!("{} events", events.len());
            Ok(())
        }
        Command::Control(args) => control(&cfg, args),
        Command::Report(args) => report(&cfg, args),
        Command::Config => {
            print!("{}", cfg.to_document());
            Ok(())
        }
    }
}

fn gen(cfg: &Config, args: &GenArgs) -> Result<()> {
    let mut spec = cfg.excitation_spec();
    if let Some(k) = args.kind {
        spec.kind = k.into();
    }
    if let Some(v) = args.amplitude_pa {
        spec.amplitude_pa = v;
    }
    if let Some(v) = args.frequency_hz {
        spec.frequency_hz = v;
    }
    if let Some(v) = args.duration_s {
        spec.duration_s = v;
    }
    if let Some(v) = args.sample_rate_hz {
        spec.sample_rate_hz = v;
    }
    let trace = generate(&spec)?;
    write_trace(&args.out, &trace)?;
    println!("wrote {} samples to {}", trace.len(), display(&args.out));
    Ok(())
}

fn fit(cfg: &Config, args: &FitArgs) -> Result<()> {
    let fit = match args.model {
        Model::Piecewise => Fit::Piecewise(fit_piecewise(&read_pv(&args.input, SensingMode::Static)?, args.segments)?),
        Model::Exponential => Fit::Exponential(fit_exponential(&read_pv(&args.input, SensingMode::Dynamic)?)?),
    };
    let mut report = Report::new(cfg).with_artifact(display(&args.input));
    report.metrics.sensitivities = sensitivity_report(&fit, &args.at_pa);
    for row in &report.metrics.sensitivities {
        println!(
            "{:>10.1} – {:>10.1} Pa: {:.4} V/kPa",
            row.pressure_lo_pa,
            row.pressure_hi_pa,
            row.sensitivity_v_per_kpa()
        );
    }
    report.metrics.fits.push(fit);
    write_json(&args.out, &report)
}

fn control(cfg: &Config, args: &ControlArgs) -> Result<()> {
    let dc = read_trace(&args.dc, Some(Channel::VoltageDc))?;
    let events: Vec<Event> = match (&args.events, &args.ac) {
        (Some(path), _) => read_json(path)?,
        (None, Some(ac)) => classify(&dc, &read_trace(ac, Some(Channel::VoltageAc))?, &cfg.classifier_config())?,
        (None, None) => unreachable!("clap requires --events or --ac"),
    };
    let sent = map_control(&events, &dc, &cfg.mapping_config())?;
    let delivered = transmit(&sent, &cfg.channel_model())?;
    let hand = actuate(&delivered, HandState::open(), &cfg.actuator_config())?;
    write_json_lines(&args.commands_out, &delivered)?;
    write_atomic(&args.trajectory_out, format_hand_trajectory(&hand).as_bytes())?;
    println!("{} commands sent, {} delivered, {} hand samples", sent.len(), delivered.len(), hand.states.len());
    Ok(())
}

fn report(cfg: &Config, args: &ReportArgs) -> Result<()> {
    let mut report = Report::new(cfg);
    if let Some(path) = &args.pv {
        let fit = Fit::Piecewise(fit_piecewise(&read_pv(path, SensingMode::Static)?, args.segments)?);
        report.metrics.sensitivities.extend(sensitivity_report(&fit, &[]));
        report.metrics.fits.push(fit);
        report.artifacts.push(display(path));
    }
    if let Some(path) = &args.step_dc {
        report.metrics.response_times = Some(extract_response_times(&read_trace(path, Some(Channel::VoltageDc))?)?);
        report.artifacts.push(display(path));
    }
    if args.detection {
        let limit = detection_limit(
            &cfg.transducer()?,
            &cfg.response_dynamics(),
            cfg.detection.criterion,
            &cfg.detection_grid(),
        )?;
        report.metrics.detection_limit_pa = Some(limit);
    }
    for path in &args.includes {
        let other: Report = read_json(path)?;
        report.absorb(other);
        report.artifacts.push(display(path));
    }
    write_json(&args.out, &report)?;
    println!("report {} (config {})", display(&args.out), &report.run.config_hash[..12]);
    Ok(())
}
