use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use exotendon::config::{parse_config, RunConfig};
use exotendon::routing::DesignVariant;
use exotendon::runner::{exit_code, run, Command};
use exotendon::{Error, Result};

/// Tendon routing studies for a dorsal hand exoskeleton.
#[derive(Parser)]
#[command(name = "exotendon", version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Moment arms of one design over the angle grid.
    MomentArm(Opts),
    /// Design A PIP arm over the x1 × x2 grid.
    SweepA(Opts),
    /// PIP arms of Baseline, Design A and Design B side by side.
    Compare(Opts),
    /// Posture reached at each tension, per design.
    ForceCurve(Opts),
    /// Repeated noisy loading strokes on the test finger.
    Experiment(Opts),
    /// Button-driven actuation under the spool PID controller.
    Simulate(Opts),
    /// Spring scale and the tension each design needs at full extension.
    Calibrate(Opts),
}

#[derive(Args, Default)]
struct Opts {
    /// Configuration file; command-line values override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, allow_negative_numbers = true)]
    theta_min: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    theta_max: Option<f64>,
    #[arg(long)]
    theta_step: Option<f64>,
    /// Design A support height (mm); selects Design A.
    #[arg(long, allow_negative_numbers = true)]
    x1: Option<f64>,
    /// Design A arm length (mm); selects Design A.
    #[arg(long, allow_negative_numbers = true)]
    x2: Option<f64>,
    /// Design B pathway height (mm); selects Design B.
    #[arg(long, allow_negative_numbers = true)]
    h: Option<f64>,
    /// Design to study, e.g. `baseline`, `A(17,19)`, `B`. Repeatable; the
    /// first one is used by single-design commands.
    #[arg(long = "design")]
    designs: Vec<DesignVariant>,
    #[arg(long)]
    tension_max: Option<f64>,
    #[arg(long)]
    tension_steps: Option<usize>,
    #[arg(long)]
    peak_force: Option<f64>,
    #[arg(long)]
    press_s: Option<f64>,
    #[arg(long)]
    release_s: Option<f64>,
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long)]
    noise_sigma: Option<f64>,
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

fn load(command: Command, opts: Opts) -> Result<RunConfig> {
    let mut cfg = match &opts.config {
        Some(path) => parse_config(&fs::read_to_string(path)?)?,
        None => RunConfig::default(),
    };
    cfg.command = command;
    set(&mut cfg.output_dir, opts.out);
    set(&mut cfg.seed, opts.seed);
    let st = &mut cfg.study;
    set(&mut st.theta_min, opts.theta_min);
    set(&mut st.theta_max, opts.theta_max);
    set(&mut st.theta_step, opts.theta_step);
    set(&mut st.tension_max, opts.tension_max);
    set(&mut st.tension_steps, opts.tension_steps);
    set(&mut st.reps, opts.reps);
    set(&mut st.noise_sigma, opts.noise_sigma);
    set(&mut cfg.controller.peak_force, opts.peak_force);
    set(&mut cfg.press_s, opts.press_s);
    set(&mut cfg.release_s, opts.release_s);

    if let Some(&first) = opts.designs.first() {
        cfg.design.variant = first;
        cfg.study.designs = opts.designs;
    }
    if opts.x1.is_some() || opts.x2.is_some() {
        if opts.h.is_some() {
            return Err(Error::Validation {
                field: "h".into(),
                message: "--h selects Design B and cannot be combined with --x1/--x2".into(),
            });
        }
        let (x1, x2) = match (cfg.design.variant, DesignVariant::design_a()) {
            (DesignVariant::DesignA { x1, x2 }, _) | (_, DesignVariant::DesignA { x1, x2 }) => {
                (x1, x2)
            }
            _ => unreachable!("design_a() is a Design A variant"),
        };
        cfg.design.variant = DesignVariant::DesignA {
            x1: opts.x1.unwrap_or(x1),
            x2: opts.x2.unwrap_or(x2),
        };
    }
    if let Some(h) = opts.h {
        cfg.design.variant = DesignVariant::DesignB { h };
    }
    cfg.validate()?;
    Ok(cfg)
}

fn main() -> ExitCode {
    let (command, opts) = match Cli::parse().command {
        Cmd::MomentArm(o) => (Command::MomentArm, o),
        Cmd::SweepA(o) => (Command::SweepA, o),
        Cmd::Compare(o) => (Command::Compare, o),
        Cmd::ForceCurve(o) => (Command::ForceCurve, o),
        Cmd::Experiment(o) => (Command::Experiment, o),
        Cmd::Simulate(o) => (Command::Simulate, o),
        Cmd::Calibrate(o) => (Command::Calibrate, o),
    };
    let outcome = load(command, opts).and_then(|cfg| {
        let out = cfg.output_dir.clone();
        run(&cfg).map(|report| (report, out))
    });
    match outcome {
        Ok((report, out)) => {
            print!("{}", report.summary_text());
            println!("wrote {}", out.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("exotendon {}: {e}", command.name());
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
