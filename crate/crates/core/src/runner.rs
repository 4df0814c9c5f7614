//! Runs one study from a [`RunConfig`], writes its CSV files and a
//! `summary.txt` with the run metadata and built-in check outcomes.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::checks::{
    check_actuation_trace, check_cross_method, check_design_a_pip_over_mcp,
    check_design_b_constancy, check_force_ordering, check_pip_ordering, check_sensitivity,
    CheckOutcome,
};
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::fingermodel::{JointConfig, TorsionSpringSet};
use crate::routing::{
    dip_hyperextension_risk, instantiate_design, moment_arm_table, DesignSpec, DesignVariant,
};
use crate::statics::{
    force_angle_curve, required_tension, simulate_actuation, spring_tag, trace_metadata,
    CALIBRATION_TENSION_N,
};
use crate::studies::{
    artificial_finger_experiment, compare_designs, sweep_design_a, tension_grid,
    ExperimentSettings,
};
use crate::table::{write_atomic, StudyTable};

pub const SUMMARY_FILE: &str = "summary.txt";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    MomentArm,
    SweepA,
    Compare,
    ForceCurve,
    Experiment,
    Simulate,
    Calibrate,
}

impl Command {
    pub const ALL: [Command; 7] = [
        Command::MomentArm,
        Command::SweepA,
        Command::Compare,
        Command::ForceCurve,
        Command::Experiment,
        Command::Simulate,
        Command::Calibrate,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::MomentArm => "moment-arm",
            Command::SweepA => "sweep-a",
            Command::Compare => "compare",
            Command::ForceCurve => "force-curve",
            Command::Experiment => "experiment",
            Command::Simulate => "simulate",
            Command::Calibrate => "calibrate",
        }
    }
}

impl std::str::FromStr for Command {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Command::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::Validation {
                field: "study.command".into(),
                message: format!("`{s}` is not a command"),
            })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunReport {
    pub command: Command,
    pub files: Vec<PathBuf>,
    pub checks: Vec<CheckOutcome>,
    pub metadata: BTreeMap<String, String>,
}

impl RunReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn summary_text(&self) -> String {
        let mut s = String::new();
        for (k, v) in &self.metadata {
            let _ = writeln!(s, "# {k}={v}");
        }
        for f in &self.files {
            let name = f.file_name().map(|n| n.to_string_lossy()).unwrap_or_default();
            let _ = writeln!(s, "# output={name}");
        }
        for c in &self.checks {
            let verdict = if c.passed { "pass" } else { "FAIL" };
            let _ = writeln!(s, "check {} {verdict} {}", c.name, c.detail);
        }
        s
    }
}

/// Process exit code for a failed run.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Parse { .. } | Error::Validation { .. } => 2,
        Error::PropertyViolation(_) => 3,
        Error::Io(_) => 4,
        _ => 5,
    }
}

struct Run<'a> {
    cfg: &'a RunConfig,
    springs: Option<TorsionSpringSet>,
    report: RunReport,
}

impl Run<'_> {
    fn springs(&mut self) -> Result<TorsionSpringSet> {
        if let Some(s) = self.springs {
            return Ok(s);
        }
        let s = self.cfg.resolved_springs()?;
        self.report.metadata.insert("springs".into(), spring_tag(&s));
        self.report
            .metadata
            .insert("calibration_scale".into(), s.scale.to_string());
        self.springs = Some(s);
        Ok(s)
    }

    fn write(&mut self, name: &str, table: &StudyTable) -> Result<()> {
        let path = self.cfg.output_dir.join(name);
        table.export_csv(&path)?;
        self.report.files.push(path);
        Ok(())
    }

    fn meta(&mut self, key: &str, value: impl Into<String>) {
        self.report.metadata.insert(key.into(), value.into());
    }
}

/// Runs the configured command, writes its outputs under `cfg.output_dir` and returns the
/// report. A failing built-in check still writes every file and the summary,
/// then returns [`Error::PropertyViolation`].
pub fn run(cfg: &RunConfig) -> Result<RunReport> {
    cfg.validate()?;
    let command = cfg.command;
    fs::create_dir_all(&cfg.output_dir)?;
    let mut run = Run {
        cfg,
        springs: None,
        report: RunReport {
            command,
            files: Vec::new(),
            checks: Vec::new(),
            metadata: BTreeMap::new(),
        },
    };
    run.meta("command", command.name());
    run.meta("chain", cfg.chain.fingerprint());
    run.meta("seed", cfg.seed.to_string());
    match command {
        Command::MomentArm => moment_arm(&mut run)?,
        Command::SweepA => sweep_a(&mut run)?,
        Command::Compare => compare(&mut run)?,
        Command::ForceCurve => force_curve(&mut run)?,
        Command::Experiment => experiment(&mut run)?,
        Command::Simulate => simulate(&mut run)?,
        Command::Calibrate => calibrate(&mut run)?,
    }
    let report = run.report;
    write_summary(&cfg.output_dir, &report)?;
    let failed: Vec<&str> = report
        .checks
        .iter()
        .filter(|c| !c.passed)
        .map(|c| c.name)
        .collect();
    if failed.is_empty() {
        Ok(report)
    } else {
        Err(Error::PropertyViolation(failed.join(", ")))
    }
}

fn write_summary(dir: &Path, report: &RunReport) -> Result<()> {
    write_atomic(&dir.join(SUMMARY_FILE), &report.summary_text())
}

fn moment_arm(run: &mut Run) -> Result<()> {
    let cfg = run.cfg;
    let theta = cfg.theta_grid()?;
    let table = moment_arm_table(&cfg.design, &cfg.chain, &theta, &cfg.study.coupling)?;
    run.meta("design", cfg.design.variant.to_string());
    let layout = instantiate_design(&cfg.design, &cfg.chain)?;
    run.meta(
        "dip_hyperextension_risk",
        dip_hyperextension_risk(&layout, &cfg.chain)?.to_string(),
    );
    run.write("moment_arm.csv", &table)?;
    run.report
        .checks
        .push(check_cross_method(&cfg.chain, &[cfg.design], &theta)?);
    Ok(())
}

fn fixed_design_a(cfg: &RunConfig) -> (f64, f64) {
    let variant = match cfg.design.variant {
        a @ DesignVariant::DesignA { .. } => a,
        _ => DesignVariant::design_a(),
    };
    match variant {
        DesignVariant::DesignA { x1, x2 } => (x1, x2),
        _ => unreachable!("design_a() is a Design A variant"),
    }
}

fn sweep_a(run: &mut Run) -> Result<()> {
    let cfg = run.cfg;
    let theta = cfg.theta_grid()?;
    let table = sweep_design_a(&cfg.chain, &cfg.study.x1_grid, &cfg.study.x2_grid, &theta)?;
    run.write("sweep_a.csv", &table)?;
    let (x1, x2) = fixed_design_a(cfg);
    run.report.checks.push(check_sensitivity(&table, x1, x2));
    Ok(())
}

fn first_of(cfg: &RunConfig, pick: fn(&DesignVariant) -> bool) -> Option<DesignVariant> {
    std::iter::once(cfg.design.variant)
        .chain(cfg.study.designs.iter().copied())
        .find(pick)
}

fn compare(run: &mut Run) -> Result<()> {
    let cfg = run.cfg;
    let theta = cfg.theta_grid()?;
    let a = first_of(cfg, |v| matches!(v, DesignVariant::DesignA { .. }))
        .unwrap_or_else(DesignVariant::design_a);
    let b = first_of(cfg, |v| matches!(v, DesignVariant::DesignB { .. }))
        .unwrap_or_else(DesignVariant::design_b);
    let DesignVariant::DesignB { h } = b else {
        unreachable!()
    };
    let cmp = compare_designs(&cfg.chain, &theta, a, b)?;
    run.meta("designs", format!("baseline {a} {b}"));
    run.write("compare_pip.csv", &cmp.pip)?;
    run.write("compare_design_a.csv", &cmp.design_a)?;
    let matched = cfg.design.placement.pathway_height;
    let specs: Vec<DesignSpec> = [
        DesignVariant::Traditional,
        DesignVariant::Baseline,
        a,
        b,
    ]
    .into_iter()
    .map(DesignSpec::new)
    .collect();
    let checks = &mut run.report.checks;
    checks.push(check_pip_ordering(&cmp, matched));
    checks.push(check_design_a_pip_over_mcp(&cmp));
    checks.push(check_design_b_constancy(&cmp, h));
    checks.push(check_cross_method(&cfg.chain, &specs, &theta)?);
    Ok(())
}

/// Output file stem per design; designs sharing a short name get an index.
fn design_stems(designs: &[DesignSpec]) -> Vec<String> {
    designs
        .iter()
        .enumerate()
        .map(|(i, d)| {
            let name = d.variant.short_name();
            let shared = designs
                .iter()
                .filter(|o| o.variant.short_name() == name)
                .count()
                > 1;
            if shared {
                format!("{name}_{i}")
            } else {
                name.to_string()
            }
        })
        .collect()
}

/// Position of the first Baseline, Design A and Design B in the list.
fn ordering_triple(designs: &[DesignSpec]) -> Option<[usize; 3]> {
    let find = |f: fn(&DesignVariant) -> bool| designs.iter().position(|d| f(&d.variant));
    Some([
        find(|v| *v == DesignVariant::Baseline)?,
        find(|v| matches!(v, DesignVariant::DesignA { .. }))?,
        find(|v| matches!(v, DesignVariant::DesignB { .. }))?,
    ])
}

fn force_curve(run: &mut Run) -> Result<()> {
    let cfg = run.cfg;
    let springs = run.springs()?;
    let grid = tension_grid(cfg.study.tension_max, cfg.study.tension_steps)?;
    let designs = cfg.design_specs();
    let mut curves = Vec::with_capacity(designs.len());
    for (spec, stem) in designs.iter().zip(design_stems(&designs)) {
        let table = force_angle_curve(spec, &cfg.chain, &springs, &grid)?;
        run.write(&format!("force_curve_{stem}.csv"), &table)?;
        curves.push(table);
    }
    if let Some([b, a, bb]) = ordering_triple(&designs) {
        run.report
            .checks
            .push(check_force_ordering(&curves[b], &curves[a], &curves[bb]));
    }
    Ok(())
}

/// Loading curve of one design rebuilt from the experiment rows, with the
/// measured mean force standing in for the tension.
fn measured_curve(table: &StudyTable, index: usize) -> Result<StudyTable> {
    let col = |name| table.column_index(name).expect("experiment column");
    let (d, f, p, m) = (
        col("design"),
        col("force_mean_n"),
        col("theta_pip_deg"),
        col("theta_mcp_deg"),
    );
    let mut curve = StudyTable::new(&[
        ("tension_n", "N"),
        ("theta_pip_deg", "deg"),
        ("theta_mcp_deg", "deg"),
    ]);
    for row in table.rows().iter().filter(|r| r[d] == index as f64) {
        curve.push_row(vec![row[f], row[p], row[m]])?;
    }
    Ok(curve)
}

fn experiment(run: &mut Run) -> Result<()> {
    let cfg = run.cfg;
    let springs = run.springs()?;
    let grid = tension_grid(cfg.study.tension_max, cfg.study.tension_steps)?;
    let designs = cfg.design_specs();
    let settings = ExperimentSettings {
        reps: cfg.study.reps,
        noise_sigma: cfg.study.noise_sigma,
        seed: cfg.seed,
    };
    let table = artificial_finger_experiment(&designs, &cfg.chain, &springs, &grid, &settings)?;
    run.write("experiment.csv", &table)?;
    if let Some([b, a, bb]) = ordering_triple(&designs) {
        let outcome = check_force_ordering(
            &measured_curve(&table, b)?,
            &measured_curve(&table, a)?,
            &measured_curve(&table, bb)?,
        );
        run.report.checks.push(outcome);
    }
    Ok(())
}

fn simulate(run: &mut Run) -> Result<()> {
    let cfg = run.cfg;
    let springs = run.springs()?;
    let trace = simulate_actuation(
        &cfg.design,
        &cfg.chain,
        &springs,
        &cfg.controller,
        cfg.press_s,
        cfg.release_s,
    )?;
    let mut table = trace.to_table();
    trace_metadata(&mut table, &cfg.design, &springs, &cfg.controller)?;
    run.write("actuation.csv", &table)?;
    run.meta("design", cfg.design.variant.to_string());
    match trace.first_stall() {
        Some(s) => {
            run.meta("stall_time_s", s.t.to_string());
            run.meta("stall_tension_n", s.tension.to_string());
        }
        None => run.meta("stall_time_s", "none"),
    }
    run.report
        .checks
        .push(check_actuation_trace(&trace, &cfg.controller));
    Ok(())
}

fn calibrate(run: &mut Run) -> Result<()> {
    let cfg = run.cfg;
    let springs = run.springs()?;
    run.meta("calibration_tension_n", CALIBRATION_TENSION_N.to_string());
    let designs = cfg.design_specs();
    let mut table = StudyTable::new(&[
        ("design", "index"),
        ("t_pip_n", "N"),
        ("t_mcp_n", "N"),
        ("t_binding_n", "N"),
    ]);
    let names: Vec<String> = designs.iter().map(|d| d.variant.to_string()).collect();
    table.set_meta("designs", names.join(" "))?;
    table.set_meta("springs", spring_tag(&springs))?;
    table.set_meta("calibration_scale", springs.scale.to_string())?;
    for (i, spec) in designs.iter().enumerate() {
        let t = required_tension(spec, &cfg.chain, &springs, &JointConfig::EXTENDED)?;
        table.push_row(vec![i as f64, t.pip, t.mcp, t.binding])?;
    }
    run.write("calibration.csv", &table)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config;

    fn config(dir: &Path, text: &str) -> RunConfig {
        let mut cfg = parse_config(text).unwrap();
        cfg.output_dir = dir.to_path_buf();
        cfg
    }

    #[test]
    fn compare_writes_tables_and_passes_checks() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = config(dir.path(), "[study] command=compare");
        let report = run(&cfg).unwrap();
        assert_eq!(report.files.len(), 2);
        assert_eq!(report.checks.len(), 4);
        let summary = fs::read_to_string(dir.path().join(SUMMARY_FILE)).unwrap();
        assert!(summary.starts_with("# chain="));
        assert!(summary.contains("# command=compare\n"));
        assert!(summary.contains("check design_b_constancy pass"));
        let pip = StudyTable::import_csv(&dir.path().join("compare_pip.csv")).unwrap();
        assert_eq!(pip.len(), 91);
    }

    #[test]
    fn calibrate_reports_80_newtons_for_baseline() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = config(dir.path(), "[study] command=calibrate");
        let report = run(&cfg).unwrap();
        let table = StudyTable::import_csv(&report.files[0]).unwrap();
        let binding = table.column("t_binding_n").unwrap();
        assert!((binding[0] - 80.0).abs() < 1e-6);
        assert!(report.metadata["calibration_scale"].parse::<f64>().unwrap() > 11.0);
    }

    #[test]
    fn failing_check_still_writes_summary() {
        let dir = tempfile::tempdir().unwrap();
        // With a single x1 value there is no x1 spread, so the sensitivity
        // check cannot pass.
        let cfg = config(dir.path(), "[study] command=sweep-a x1_grid=17");
        let err = run(&cfg).unwrap_err();
        assert_eq!(exit_code(&err), 3);
        let summary = fs::read_to_string(dir.path().join(SUMMARY_FILE)).unwrap();
        assert!(summary.contains("check design_a_sensitivity FAIL"));
        assert!(dir.path().join("sweep_a.csv").exists());
    }

    #[test]
    fn duplicate_design_names_get_indexed_files() {
        let specs: Vec<DesignSpec> = [
            DesignVariant::Baseline,
            DesignVariant::DesignA { x1: 14.0, x2: 16.0 },
            DesignVariant::design_a(),
        ]
        .into_iter()
        .map(DesignSpec::new)
        .collect();
        assert_eq!(design_stems(&specs), ["baseline", "A_1", "A_2"]);
    }

    #[test]
    fn command_names_round_trip() {
        for c in Command::ALL {
            assert_eq!(c.name().parse::<Command>().unwrap(), c);
        }
        assert!("plot".parse::<Command>().is_err());
    }

    #[test]
    fn exit_codes() {
        assert_eq!(
            exit_code(&Error::Parse {
                line: 1,
                message: String::new()
            }),
            2
        );
        assert_eq!(exit_code(&Error::Io(std::io::Error::other("x"))), 4);
        assert_eq!(
            exit_code(&Error::NoConvergence {
                iterations: 1,
                residual: 1.0
            }),
            5
        );
    }
}
