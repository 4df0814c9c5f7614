use crate::error::{Error, Result};
use crate::fingermodel::{apply_coupling, CouplingRule, Joint, JointConfig, PhalanxChain, Pose};
use crate::geometry::signed_line_distance;
use crate::table::StudyTable;

use super::design::{instantiate_design, DesignSpec};
use super::layout::GuideLayout;
use super::path::{solve_at, TendonPath};

/// Central-difference step for the virtual-work method, radians.
pub const FD_STEP_RAD: f64 = 1e-4;

fn arm_on_path(path: &TendonPath, chain: &PhalanxChain, pose: &Pose, joint: Joint) -> f64 {
    let Some(seg) = path.crossing(joint) else {
        return 0.0;
    };
    let frames = crate::fingermodel::frames_at(chain, pose);
    signed_line_distance(frames.joint_center(joint), seg.start, seg.end)
}

/// Geometric arms of all three joints at one pose, from a single path solve.
pub(crate) fn arms_at(layout: &GuideLayout, chain: &PhalanxChain, pose: &Pose) -> Result<[f64; 3]> {
    let path = solve_at(layout, chain, pose)?;
    Ok(Joint::ALL.map(|j| arm_on_path(&path, chain, pose, j)))
}

pub(crate) fn length_at(layout: &GuideLayout, chain: &PhalanxChain, pose: &Pose) -> Result<f64> {
    Ok(solve_at(layout, chain, pose)?.length)
}

pub(crate) fn virtual_work_at(
    layout: &GuideLayout,
    chain: &PhalanxChain,
    pose: &Pose,
    joint: Joint,
) -> Result<f64> {
    let th = pose.get(joint);
    let plus = length_at(layout, chain, &pose.with(joint, th + FD_STEP_RAD))?;
    let minus = length_at(layout, chain, &pose.with(joint, th - FD_STEP_RAD))?;
    Ok(-(plus - minus) / (2.0 * FD_STEP_RAD))
}

/// Perpendicular distance (mm) from the joint center to the straight tendon
/// segment that crosses the joint. When the tendon wraps the knuckle the
/// crossing segment is tangent to it and the result is the knuckle radius.
pub fn moment_arm_geometric(
    layout: &GuideLayout,
    chain: &PhalanxChain,
    config: &JointConfig,
    joint: Joint,
) -> Result<f64> {
    config.check_rom_with(true)?;
    let pose = config.to_pose();
    let path = solve_at(layout, chain, &pose)?;
    Ok(arm_on_path(&path, chain, &pose, joint))
}

/// Moment arm from the tendon excursion: r = -dL/dθ.
pub fn moment_arm_virtual_work(
    layout: &GuideLayout,
    chain: &PhalanxChain,
    config: &JointConfig,
    joint: Joint,
) -> Result<f64> {
    config.check_rom_with(true)?;
    virtual_work_at(layout, chain, &config.to_pose(), joint)
}

/// Rows of (θ, r_PIP, r_MCP) over a grid of drive angles applied to MCP and
/// PIP, with the DIP following `coupling`.
pub fn moment_arm_table(
    spec: &DesignSpec,
    chain: &PhalanxChain,
    grid: &[f64],
    coupling: &CouplingRule,
) -> Result<StudyTable> {
    let layout = instantiate_design(spec, chain)?;
    let mut table = StudyTable::new(&[("theta_deg", "deg"), ("r_pip_mm", "mm"), ("r_mcp_mm", "mm")]);
    table.set_meta("design", spec.variant.to_string())?;
    table.set_meta("chain", chain.fingerprint())?;
    table.set_meta("grid", grid_label(grid))?;
    for &theta in grid {
        let config = apply_coupling(theta, coupling)?;
        let [mcp, pip, _] = arms_at(&layout, chain, &config.to_pose())?;
        table.push_row(vec![theta, pip, mcp])?;
    }
    Ok(table)
}

pub(crate) fn grid_label(grid: &[f64]) -> String {
    match (grid.first(), grid.last()) {
        (Some(a), Some(b)) => format!("{a}..{b}:{}", grid.len()),
        _ => "empty".to_string(),
    }
}

/// True when tendon tension would push the DIP into hyperextension at full
/// extension: a positive extension arm at the DIP and no mechanical stop.
pub fn dip_hyperextension_risk(layout: &GuideLayout, chain: &PhalanxChain) -> Result<bool> {
    if layout.dip_stop() {
        return Ok(false);
    }
    let r = virtual_work_at(layout, chain, &Pose::default(), Joint::Dip)?;
    Ok(r > 1e-6)
}

/// Rejects a configuration whose arm at `joint` cannot extend it.
pub(crate) fn require_positive(joint: Joint, arm: f64) -> Result<f64> {
    if arm > 1e-9 {
        Ok(arm)
    } else {
        Err(Error::ZeroMomentArm { joint, arm })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fingermodel::Body;
    use crate::routing::{GuideElement, GuideLayout};

    fn chain() -> PhalanxChain {
        PhalanxChain::default()
    }

    #[test]
    fn chord_through_center_has_zero_arm() {
        let c = chain();
        let layout = GuideLayout::new(
            vec![
                GuideElement::via(Body::Palm, -30.0, 0.0),
                GuideElement::anchor(Body::Proximal, 30.0, 0.0),
            ],
            "axis",
        )
        .unwrap();
        let cfg = JointConfig::EXTENDED;
        assert_eq!(moment_arm_geometric(&layout, &c, &cfg, Joint::Mcp).unwrap(), 0.0);
        let vw = moment_arm_virtual_work(&layout, &c, &cfg, Joint::Mcp).unwrap();
        assert!(vw.abs() < 1e-6, "{vw}");
    }

    #[test]
    fn design_b_holds_pathway_height_at_extension() {
        let c = chain();
        let layout = instantiate_design(&DesignSpec::design_b(17.0), &c).unwrap();
        for j in [Joint::Mcp, Joint::Pip] {
            let r = moment_arm_geometric(&layout, &c, &JointConfig::EXTENDED, j).unwrap();
            assert!((r - 17.0).abs() <= 0.5, "{j}: {r}");
        }
    }

    #[test]
    fn design_a_pip_exceeds_mcp_at_extension() {
        let c = chain();
        let layout = instantiate_design(&DesignSpec::design_a(17.0, 19.0), &c).unwrap();
        let cfg = JointConfig::EXTENDED;
        let pip = moment_arm_virtual_work(&layout, &c, &cfg, Joint::Pip).unwrap();
        let mcp = moment_arm_virtual_work(&layout, &c, &cfg, Joint::Mcp).unwrap();
        assert!(pip > mcp, "{pip} vs {mcp}");
    }

    #[test]
    fn baseline_methods_agree_at_minus_sixty() {
        let c = chain();
        let layout = instantiate_design(&DesignSpec::baseline(), &c).unwrap();
        let cfg = JointConfig::new(-60.0, -60.0, -60.0).unwrap();
        for j in [Joint::Mcp, Joint::Pip] {
            let g = moment_arm_geometric(&layout, &c, &cfg, j).unwrap();
            let v = moment_arm_virtual_work(&layout, &c, &cfg, j).unwrap();
            assert!((g - v).abs() <= 1e-3, "{j}: {g} vs {v}");
        }
    }

    #[test]
    fn single_point_table_matches_operations() {
        let c = chain();
        let spec = DesignSpec::design_a(17.0, 19.0);
        let layout = instantiate_design(&spec, &c).unwrap();
        let t = moment_arm_table(&spec, &c, &[-35.0], &CouplingRule::default()).unwrap();
        let cfg = apply_coupling(-35.0, &CouplingRule::default()).unwrap();
        let row = &t.rows()[0];
        assert_eq!(row[1], moment_arm_geometric(&layout, &c, &cfg, Joint::Pip).unwrap());
        assert_eq!(row[2], moment_arm_geometric(&layout, &c, &cfg, Joint::Mcp).unwrap());
    }

    #[test]
    fn traditional_pushes_dip_into_hyperextension() {
        let c = chain();
        let trad = instantiate_design(&DesignSpec::traditional(), &c).unwrap();
        assert!(dip_hyperextension_risk(&trad, &c).unwrap());
        let a = instantiate_design(&DesignSpec::design_a(17.0, 19.0), &c).unwrap();
        assert!(!dip_hyperextension_risk(&a, &c).unwrap());
        let base = instantiate_design(&DesignSpec::baseline(), &c).unwrap();
        assert!(!dip_hyperextension_risk(&base, &c).unwrap());
    }
}
