//! Quasi-static force analysis: the tension needed to hold a posture, the
//! posture reached at a tension, and a simulated actuation stroke.

mod actuation;
mod equilibrium;

use std::f64::consts::FRAC_PI_2;

use crate::error::Result;
use crate::fingermodel::{
    apply_coupling, CouplingRule, Joint, JointConfig, PhalanxChain, Pose, TorsionSpringSet,
};
use crate::routing::{arms_at, instantiate_design, length_at, require_positive, DesignSpec, GuideLayout};
use crate::table::StudyTable;

pub use actuation::{
    simulate_actuation, ActuationSample, ActuationTrace, ControllerParams, SAMPLE_RATE_HZ,
};
pub(crate) use actuation::trace_metadata;
pub(crate) use equilibrium::stroke;
pub use equilibrium::{
    equilibrium_config, force_angle_curve, solve_equilibrium, stroke_energy_balance,
    EnergyBalance, EquilibriumResult, SolverSettings,
};

/// Tension the default Baseline layout must reach to hold the finger fully
/// extended once springs are calibrated.
pub const CALIBRATION_TENSION_N: f64 = 80.0;

const LO: f64 = -FRAC_PI_2;
const HI: f64 = 0.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TensionRequirement {
    pub pip: f64,
    pub mcp: f64,
    /// The larger of the two; the tension at which both joints hold.
    pub binding: f64,
}

/// One design on one finger, with MCP and PIP free and the DIP following the
/// coupling rule.
#[derive(Clone, Debug)]
pub(crate) struct Model {
    pub layout: GuideLayout,
    pub chain: PhalanxChain,
    pub springs: TorsionSpringSet,
    pub coupling: CouplingRule,
}

impl Model {
    pub fn new(spec: &DesignSpec, chain: &PhalanxChain, springs: &TorsionSpringSet) -> Result<Self> {
        springs.validate()?;
        Ok(Self {
            layout: instantiate_design(spec, chain)?,
            chain: *chain,
            springs: *springs,
            coupling: CouplingRule::default(),
        })
    }

    pub fn pose(&self, mcp: f64, pip: f64) -> Pose {
        Pose {
            mcp,
            pip,
            dip: self.coupling.dip_for(pip.to_degrees()).to_radians(),
        }
    }

    pub fn rest(&self) -> (f64, f64) {
        let r = self.springs.rest_angle.to_radians().clamp(LO, HI);
        (r, r)
    }

    /// Geometric arms (MCP, PIP) at a pose in radians.
    pub fn arms(&self, mcp: f64, pip: f64) -> Result<(f64, f64)> {
        let [m, p, _] = arms_at(&self.layout, &self.chain, &self.pose(mcp, pip))?;
        Ok((m, p))
    }

    pub fn length(&self, mcp: f64, pip: f64) -> Result<f64> {
        length_at(&self.layout, &self.chain, &self.pose(mcp, pip))
    }

    pub fn config(&self, mcp: f64, pip: f64) -> JointConfig {
        let deg = |r: f64| r.to_degrees().clamp(-90.0, 0.0);
        JointConfig {
            mcp: deg(mcp),
            pip: deg(pip),
            dip: self.coupling.dip_for(deg(pip)),
        }
    }
}

fn requirement_at(model: &Model, config: &JointConfig) -> Result<TensionRequirement> {
    config.check_rom()?;
    let pose = config.to_pose();
    let [rm, rp, _] = arms_at(&model.layout, &model.chain, &pose)?;
    let rm = require_positive(Joint::Mcp, rm)?;
    let rp = require_positive(Joint::Pip, rp)?;
    let s = &model.springs;
    let pip = s.torque_rad(Joint::Pip, pose.pip) / rp;
    let mcp = s.torque_rad(Joint::Mcp, pose.mcp) / rm;
    Ok(TensionRequirement {
        pip,
        mcp,
        binding: pip.max(mcp),
    })
}

/// Tension at which each spring torque is balanced by the tendon at `config`.
pub fn required_tension(
    spec: &DesignSpec,
    chain: &PhalanxChain,
    springs: &TorsionSpringSet,
    config: &JointConfig,
) -> Result<TensionRequirement> {
    requirement_at(&Model::new(spec, chain, springs)?, config)
}

pub fn required_tension_at_drive(
    spec: &DesignSpec,
    chain: &PhalanxChain,
    springs: &TorsionSpringSet,
    drive_deg: f64,
    coupling: &CouplingRule,
) -> Result<TensionRequirement> {
    let config = apply_coupling(drive_deg, coupling)?;
    required_tension(spec, chain, springs, &config)
}

/// Rows of (θ, T_PIP, T_MCP, T_binding) along a drive-angle grid.
pub fn tension_profile(
    spec: &DesignSpec,
    chain: &PhalanxChain,
    springs: &TorsionSpringSet,
    grid: &[f64],
    coupling: &CouplingRule,
) -> Result<StudyTable> {
    let model = Model::new(spec, chain, springs)?;
    let mut table = StudyTable::new(&[
        ("theta_deg", "deg"),
        ("t_pip_n", "N"),
        ("t_mcp_n", "N"),
        ("t_binding_n", "N"),
    ]);
    table.set_meta("design", spec.variant.to_string())?;
    table.set_meta("chain", chain.fingerprint())?;
    table.set_meta("springs", spring_tag(springs))?;
    for &theta in grid {
        let t = requirement_at(&model, &apply_coupling(theta, coupling)?)?;
        table.push_row(vec![theta, t.pip, t.mcp, t.binding])?;
    }
    Ok(table)
}

pub fn spring_tag(springs: &TorsionSpringSet) -> String {
    format!(
        "{}:{}:{}@{}x{}",
        springs.k_dip, springs.k_pip, springs.k_mcp, springs.rest_angle, springs.scale
    )
}

/// Scale factor that makes the default Baseline layout on `chain` need
/// exactly [`CALIBRATION_TENSION_N`] at full extension.
pub fn calibration_scale(chain: &PhalanxChain, springs: &TorsionSpringSet) -> Result<f64> {
    let unit = springs.with_scale(1.0);
    let t = required_tension(&DesignSpec::baseline(), chain, &unit, &JointConfig::EXTENDED)?;
    Ok(CALIBRATION_TENSION_N / t.binding)
}

pub fn calibrate_springs(
    chain: &PhalanxChain,
    springs: &TorsionSpringSet,
) -> Result<TorsionSpringSet> {
    Ok(springs.with_scale(calibration_scale(chain, springs)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;

    fn calibrated() -> TorsionSpringSet {
        calibrate_springs(&PhalanxChain::default(), &TorsionSpringSet::artificial()).unwrap()
    }

    #[test]
    fn rest_needs_no_tension() {
        let t = required_tension_at_drive(
            &DesignSpec::baseline(),
            &PhalanxChain::default(),
            &calibrated(),
            -90.0,
            &CouplingRule::default(),
        )
        .unwrap();
        assert_eq!((t.pip, t.mcp, t.binding), (0.0, 0.0, 0.0));
    }

    #[test]
    fn calibration_hits_eighty_newtons() {
        let t = required_tension(
            &DesignSpec::baseline(),
            &PhalanxChain::default(),
            &calibrated(),
            &JointConfig::EXTENDED,
        )
        .unwrap();
        assert!((t.binding - 80.0).abs() < 1e-9);
        let scale = calibrated().scale;
        assert!((scale - 11.26).abs() < 0.01, "{scale}");
    }

    #[test]
    fn design_b_ratio_equals_stiffness_ratio() {
        let t = required_tension(
            &DesignSpec::design_b(17.0),
            &PhalanxChain::default(),
            &calibrated(),
            &JointConfig::EXTENDED,
        )
        .unwrap();
        // both arms equal h, so the division oracle reduces to the spring ratio
        let s = calibrated();
        let expect_pip = s.stiffness(Joint::Pip) * FRAC_PI_2 / 17.0;
        assert!((t.pip - expect_pip).abs() < 1e-9 * expect_pip);
        assert!((t.pip / t.mcp - 76.9 / 54.9).abs() < 1e-9);
    }

    #[test]
    fn zero_arm_is_reported() {
        use crate::fingermodel::Body;
        use crate::routing::GuideElement;
        let chain = PhalanxChain::default();
        let model = Model {
            layout: GuideLayout::new(
                vec![
                    GuideElement::via(Body::Palm, -30.0, 0.0),
                    GuideElement::anchor(Body::Middle, 10.0, 0.0),
                ],
                "flat",
            )
            .unwrap(),
            chain,
            springs: calibrated(),
            coupling: CouplingRule::default(),
        };
        let err = requirement_at(&model, &JointConfig::EXTENDED).unwrap_err();
        assert!(matches!(err, Error::ZeroMomentArm { joint: Joint::Mcp, .. }));
    }
}
