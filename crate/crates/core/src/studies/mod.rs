//! Parameter sweeps, design comparisons and the simulated bench experiment.

use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::fingermodel::{apply_coupling, CouplingRule, Joint, PhalanxChain, TorsionSpringSet};
use crate::routing::{
    grid_label, instantiate_design, moment_arm_geometric, DesignSpec, DesignVariant,
};
use crate::statics::{spring_tag, stroke, Model};

pub use crate::table::{Column, StudyTable};

pub const DEFAULT_X1_GRID: [f64; 4] = [11.0, 14.0, 17.0, 20.0];
pub const DEFAULT_X2_GRID: [f64; 4] = [13.0, 16.0, 19.0, 22.0];
pub const DEFAULT_REPS: usize = 50;

/// Evenly spaced drive angles from `min` to `max` inclusive.
pub fn theta_grid(min: f64, max: f64, step: f64) -> Result<Vec<f64>> {
    if !(min.is_finite() && max.is_finite() && step.is_finite() && step > 0.0 && min <= max) {
        return Err(Error::Validation {
            field: "theta_grid".into(),
            message: format!("need min <= max and step > 0, got {min}..{max} by {step}"),
        });
    }
    let n = ((max - min) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|i| min + step * i as f64).collect())
}

/// 91 points at 1° spacing over [-90°, 0°].
pub fn default_theta_grid() -> Vec<f64> {
    (0..=90).map(|i| -90.0 + i as f64).collect()
}

/// `steps` tensions evenly spaced over [0, max], both ends included.
pub fn tension_grid(max: f64, steps: usize) -> Result<Vec<f64>> {
    if !(max.is_finite() && max > 0.0) || steps < 2 {
        return Err(Error::Validation {
            field: "tension_grid".into(),
            message: format!("need max > 0 and at least 2 steps, got {max} and {steps}"),
        });
    }
    let last = (steps - 1) as f64;
    Ok((0..steps).map(|i| max * i as f64 / last).collect())
}

pub fn export_csv(table: &StudyTable, destination: &Path) -> Result<usize> {
    table.export_csv(destination)
}

fn require_non_empty(field: &str, grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::Validation {
            field: field.into(),
            message: "grid is empty".into(),
        });
    }
    Ok(())
}

/// PIP moment arm of Design A over every (x1, x2, θ). Parameter pairs the
/// finger cannot carry are kept as rows with `valid = 0` and NaN arms.
pub fn sweep_design_a(
    chain: &PhalanxChain,
    x1_grid: &[f64],
    x2_grid: &[f64],
    theta: &[f64],
) -> Result<StudyTable> {
    require_non_empty("x1_grid", x1_grid)?;
    require_non_empty("x2_grid", x2_grid)?;
    require_non_empty("theta_grid", theta)?;
    let configs = theta
        .iter()
        .map(|&t| apply_coupling(t, &CouplingRule::default()))
        .collect::<Result<Vec<_>>>()?;
    let mut table = StudyTable::new(&[
        ("x1_mm", "mm"),
        ("x2_mm", "mm"),
        ("theta_deg", "deg"),
        ("r_pip_mm", "mm"),
        ("valid", "bool"),
    ]);
    table.set_meta("design", "A")?;
    table.set_meta("chain", chain.fingerprint())?;
    table.set_meta("x1_grid", join(x1_grid))?;
    table.set_meta("x2_grid", join(x2_grid))?;
    table.set_meta("grid", grid_label(theta))?;
    for &x1 in x1_grid {
        for &x2 in x2_grid {
            let layout = match instantiate_design(&DesignSpec::design_a(x1, x2), chain) {
                Ok(l) => Some(l),
                Err(Error::IncompatibleParameters(_)) => None,
                Err(e) => return Err(e),
            };
            for (&t, config) in theta.iter().zip(&configs) {
                let row = match &layout {
                    Some(l) => match moment_arm_geometric(l, chain, config, Joint::Pip) {
                        Ok(r) => vec![x1, x2, t, r, 1.0],
                        Err(Error::PathInfeasible(_)) => vec![x1, x2, t, f64::NAN, 0.0],
                        Err(e) => return Err(e),
                    },
                    None => vec![x1, x2, t, f64::NAN, 0.0],
                };
                table.push_row(row)?;
            }
        }
    }
    Ok(table)
}

fn join(values: &[f64]) -> String {
    values
        .iter()
        .map(f64::to_string)
        .collect::<Vec<_>>()
        .join(" ")
}

/// PIP arms of the three dorsal designs side by side, and Design A's PIP and
/// MCP arms.
#[derive(Clone, Debug, PartialEq)]
pub struct DesignComparison {
    /// theta_deg, r_base_mm, r_A_mm, r_B_mm
    pub pip: StudyTable,
    /// theta_deg, r_A_pip_mm, r_A_mcp_mm
    pub design_a: StudyTable,
}

pub fn compare_designs(
    chain: &PhalanxChain,
    theta: &[f64],
    design_a: DesignVariant,
    design_b: DesignVariant,
) -> Result<DesignComparison> {
    require_non_empty("theta_grid", theta)?;
    let base = instantiate_design(&DesignSpec::baseline(), chain)?;
    let a = instantiate_design(&DesignSpec::new(design_a), chain)?;
    let b = instantiate_design(&DesignSpec::new(design_b), chain)?;
    let mut pip = StudyTable::new(&[
        ("theta_deg", "deg"),
        ("r_base_mm", "mm"),
        ("r_A_mm", "mm"),
        ("r_B_mm", "mm"),
    ]);
    let mut arms_a = StudyTable::new(&[
        ("theta_deg", "deg"),
        ("r_A_pip_mm", "mm"),
        ("r_A_mcp_mm", "mm"),
    ]);
    for t in [&mut pip, &mut arms_a] {
        t.set_meta("designs", format!("baseline {design_a} {design_b}"))?;
        t.set_meta("chain", chain.fingerprint())?;
        t.set_meta("grid", grid_label(theta))?;
    }
    for &th in theta {
        let config = apply_coupling(th, &CouplingRule::default())?;
        let r = |layout, joint| moment_arm_geometric(layout, chain, &config, joint);
        let a_pip = r(&a, Joint::Pip)?;
        pip.push_row(vec![th, r(&base, Joint::Pip)?, a_pip, r(&b, Joint::Pip)?])?;
        arms_a.push_row(vec![th, a_pip, r(&a, Joint::Mcp)?])?;
    }
    Ok(DesignComparison {
        pip,
        design_a: arms_a,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExperimentSettings {
    pub reps: usize,
    /// Standard deviation of the per-sample force noise, N.
    pub noise_sigma: f64,
    pub seed: u64,
}

impl Default for ExperimentSettings {
    fn default() -> Self {
        Self {
            reps: DEFAULT_REPS,
            noise_sigma: 0.0,
            seed: 0,
        }
    }
}

pub const EXPERIMENT_COLUMNS: [(&str, &str); 7] = [
    ("design", "index"),
    ("tension_n", "N"),
    ("force_mean_n", "N"),
    ("force_se_n", "N"),
    ("theta_pip_deg", "deg"),
    ("theta_mcp_deg", "deg"),
    ("converged", "bool"),
];

/// Repeated loading strokes on the spring-loaded test finger. Each run
/// records the force with independent Gaussian noise; rows carry the mean
/// and its standard error across runs. `design` indexes into `designs`,
/// whose names are listed in the `designs` metadata entry.
pub fn artificial_finger_experiment(
    designs: &[DesignSpec],
    chain: &PhalanxChain,
    springs: &TorsionSpringSet,
    tensions: &[f64],
    settings: &ExperimentSettings,
) -> Result<StudyTable> {
    if settings.reps == 0 {
        return Err(Error::Validation {
            field: "reps".into(),
            message: "at least one repetition is needed".into(),
        });
    }
    let noise = Normal::new(0.0, settings.noise_sigma).map_err(|_| Error::Validation {
        field: "noise_sigma".into(),
        message: format!("must be finite and >= 0, got {}", settings.noise_sigma),
    })?;
    let mut rng = ChaCha8Rng::seed_from_u64(settings.seed);
    let mut table = StudyTable::new(&EXPERIMENT_COLUMNS);
    let names: Vec<String> = designs.iter().map(|d| d.variant.to_string()).collect();
    table.set_meta("designs", names.join(" "))?;
    table.set_meta("chain", chain.fingerprint())?;
    table.set_meta("springs", spring_tag(springs))?;
    table.set_meta("calibration_scale", springs.scale.to_string())?;
    table.set_meta("reps", settings.reps.to_string())?;
    table.set_meta("noise_sigma", settings.noise_sigma.to_string())?;
    table.set_meta("seed", settings.seed.to_string())?;
    table.set_meta("grid", grid_label(tensions))?;

    let n = settings.reps as f64;
    for (index, spec) in designs.iter().enumerate() {
        let model = Model::new(spec, chain, springs)?;
        for r in stroke(&model, tensions)? {
            let draws: Vec<f64> = if settings.noise_sigma > 0.0 {
                (0..settings.reps).map(|_| noise.sample(&mut rng)).collect()
            } else {
                vec![0.0; settings.reps]
            };
            let mean_noise = draws.iter().sum::<f64>() / n;
            let se = if settings.reps > 1 {
                let ss: f64 = draws.iter().map(|d| (d - mean_noise).powi(2)).sum();
                (ss / (n - 1.0)).sqrt() / n.sqrt()
            } else {
                0.0
            };
            table.push_row(vec![
                index as f64,
                r.tension,
                r.tension + mean_noise,
                se,
                r.config.pip,
                r.config.mcp,
                if r.converged { 1.0 } else { 0.0 },
            ])?;
        }
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::statics::{calibrate_springs, force_angle_curve};

    #[test]
    fn grids_have_expected_shape() {
        let g = default_theta_grid();
        assert_eq!(g.len(), 91);
        assert_eq!((g[0], g[90]), (-90.0, 0.0));
        assert_eq!(theta_grid(-90.0, 0.0, 1.0).unwrap(), g);
        let t = tension_grid(100.0, 200).unwrap();
        assert_eq!((t.len(), t[0], t[199]), (200, 0.0, 100.0));
        assert!(theta_grid(0.0, -1.0, 1.0).is_err());
    }

    #[test]
    fn default_sweep_has_all_rows() {
        let t = sweep_design_a(
            &PhalanxChain::default(),
            &DEFAULT_X1_GRID,
            &DEFAULT_X2_GRID,
            &default_theta_grid(),
        )
        .unwrap();
        assert_eq!(t.len(), 4 * 4 * 91);
        assert!(t.column("valid").unwrap().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn incompatible_pairs_are_flagged() {
        let t = sweep_design_a(&PhalanxChain::default(), &[2.0, 17.0], &[19.0], &[0.0]).unwrap();
        assert_eq!(t.rows()[0][4], 0.0);
        assert!(t.rows()[0][3].is_nan());
        assert_eq!(t.rows()[1][4], 1.0);
    }

    #[test]
    fn compare_columns() {
        let c = compare_designs(
            &PhalanxChain::default(),
            &[0.0],
            DesignVariant::design_a(),
            DesignVariant::design_b(),
        )
        .unwrap();
        let names: Vec<&str> = c.pip.columns().iter().map(|c| c.name.as_str()).collect();
        assert_eq!(names, ["theta_deg", "r_base_mm", "r_A_mm", "r_B_mm"]);
        let row = &c.pip.rows()[0];
        assert!((row[1] - 17.0).abs() < 1e-9 && (row[3] - 17.0).abs() < 1e-9);
        assert!(row[2] > row[1]);
    }

    #[test]
    fn noiseless_experiment_equals_single_curve() {
        let chain = PhalanxChain::default();
        let springs = calibrate_springs(&chain, &TorsionSpringSet::artificial()).unwrap();
        let grid = tension_grid(90.0, 30).unwrap();
        let spec = DesignSpec::design_a(17.0, 19.0);
        let exp = artificial_finger_experiment(
            &[spec],
            &chain,
            &springs,
            &grid,
            &ExperimentSettings::default(),
        )
        .unwrap();
        let curve = force_angle_curve(&spec, &chain, &springs, &grid).unwrap();
        for (e, c) in exp.rows().iter().zip(curve.rows()) {
            assert_eq!(e[1], c[0]);
            assert_eq!(e[2], c[0]);
            assert_eq!(e[3], 0.0);
            assert_eq!(e[4], c[1]);
            assert_eq!(e[5], c[2]);
        }
    }

    #[test]
    fn zero_reps_rejected() {
        let settings = ExperimentSettings {
            reps: 0,
            ..ExperimentSettings::default()
        };
        let err = artificial_finger_experiment(
            &[DesignSpec::baseline()],
            &PhalanxChain::default(),
            &TorsionSpringSet::artificial(),
            &[0.0],
            &settings,
        )
        .unwrap_err();
        assert!(matches!(err, Error::Validation { .. }));
    }
}
