//! Built-in property checks over study outputs. Each returns a named
//! pass/fail outcome with a short numeric detail for the run summary.

use crate::error::Result;
use crate::fingermodel::{apply_coupling, CouplingRule, Joint, PhalanxChain};
use crate::routing::{instantiate_design, moment_arm_geometric, moment_arm_virtual_work, DesignSpec};
use crate::statics::{ActuationTrace, ControllerParams};
use crate::studies::DesignComparison;
use crate::table::StudyTable;

#[derive(Clone, Debug, PartialEq)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl CheckOutcome {
    fn new(name: &'static str, passed: bool, detail: String) -> Self {
        Self {
            name,
            passed,
            detail,
        }
    }
}

/// Allowed disagreement between the two moment-arm methods.
pub fn cross_method_tolerance(r: f64) -> f64 {
    1e-3f64.max(1e-4 * r.abs())
}

pub fn check_cross_method(
    chain: &PhalanxChain,
    designs: &[DesignSpec],
    theta: &[f64],
) -> Result<CheckOutcome> {
    let mut worst: f64 = 0.0;
    let mut failures = 0;
    let mut samples = 0;
    for spec in designs {
        let layout = instantiate_design(spec, chain)?;
        for &t in theta {
            let config = apply_coupling(t, &CouplingRule::default())?;
            for joint in [Joint::Mcp, Joint::Pip] {
                let g = moment_arm_geometric(&layout, chain, &config, joint)?;
                let v = moment_arm_virtual_work(&layout, chain, &config, joint)?;
                let diff = (g - v).abs();
                worst = worst.max(diff);
                samples += 1;
                if diff > cross_method_tolerance(g) {
                    failures += 1;
                }
            }
        }
    }
    Ok(CheckOutcome::new(
        "moment_arm_cross_method",
        failures == 0,
        format!("{samples} samples, worst difference {worst:.3e} mm, {failures} over tolerance"),
    ))
}

fn col(table: &StudyTable, name: &str) -> Vec<f64> {
    table.column(name).unwrap_or_default()
}

/// A and B give a longer PIP arm than the Baseline at every flexed angle,
/// Baseline and B start from the matched pathway height at full extension,
/// and A leads both there.
pub fn check_pip_ordering(cmp: &DesignComparison, matched_height: f64) -> CheckOutcome {
    let theta = col(&cmp.pip, "theta_deg");
    let base = col(&cmp.pip, "r_base_mm");
    let a = col(&cmp.pip, "r_A_mm");
    let b = col(&cmp.pip, "r_B_mm");
    let mut margin = f64::INFINITY;
    for i in 0..theta.len() {
        margin = margin.min(a[i] - base[i]);
        if theta[i] < 0.0 {
            margin = margin.min(b[i] - base[i]);
        }
    }
    let ext = theta.iter().position(|&t| t == 0.0);
    let (lead, matched) = match ext {
        Some(i) => (
            (a[i] - b[i]).min(a[i] - base[i]),
            (base[i] - matched_height).abs() <= 0.5 && (b[i] - matched_height).abs() <= 0.5,
        ),
        None => (f64::NAN, false),
    };
    CheckOutcome::new(
        "pip_arm_ordering",
        !theta.is_empty() && margin > 0.0 && lead > 0.0 && matched,
        format!("min margin over Baseline {margin:.4} mm, A minus B at 0 deg {lead:.4} mm"),
    )
}

pub fn check_design_a_pip_over_mcp(cmp: &DesignComparison) -> CheckOutcome {
    let pip = col(&cmp.design_a, "r_A_pip_mm");
    let mcp = col(&cmp.design_a, "r_A_mcp_mm");
    let margin = pip
        .iter()
        .zip(&mcp)
        .map(|(p, m)| p - m)
        .fold(f64::INFINITY, f64::min);
    CheckOutcome::new(
        "design_a_pip_over_mcp",
        !pip.is_empty() && margin > 0.0,
        format!("min PIP minus MCP arm {margin:.4} mm"),
    )
}

pub fn check_design_b_constancy(cmp: &DesignComparison, h: f64) -> CheckOutcome {
    let dev = col(&cmp.pip, "r_B_mm")
        .iter()
        .map(|r| (r - h).abs() / h)
        .fold(0.0, f64::max);
    CheckOutcome::new(
        "design_b_constancy",
        dev <= 0.15,
        format!("max relative deviation from h {dev:.4}"),
    )
}

/// Spread (max - min) of r_PIP across one parameter with the other fixed.
pub fn sweep_spread(sweep: &StudyTable, vary_x1: bool, fixed: f64, theta: f64) -> f64 {
    let (x1, x2, th, r) = (
        col(sweep, "x1_mm"),
        col(sweep, "x2_mm"),
        col(sweep, "theta_deg"),
        col(sweep, "r_pip_mm"),
    );
    let values: Vec<f64> = (0..r.len())
        .filter(|&i| th[i] == theta && r[i].is_finite())
        .filter(|&i| if vary_x1 { x2[i] == fixed } else { x1[i] == fixed })
        .map(|i| r[i])
        .collect();
    if values.is_empty() {
        return f64::NAN;
    }
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    max - min
}

/// x1 matters most when extended, x2 when flexed.
pub fn check_sensitivity(sweep: &StudyTable, x1_fixed: f64, x2_fixed: f64) -> CheckOutcome {
    let x1_ext = sweep_spread(sweep, true, x2_fixed, 0.0);
    let x1_flex = sweep_spread(sweep, true, x2_fixed, -90.0);
    let x2_ext = sweep_spread(sweep, false, x1_fixed, 0.0);
    let x2_flex = sweep_spread(sweep, false, x1_fixed, -90.0);
    CheckOutcome::new(
        "design_a_sensitivity",
        x1_ext > x1_flex && x2_flex > x2_ext,
        format!(
            "x1 spread {x1_ext:.3} (0 deg) vs {x1_flex:.3} (-90 deg); \
             x2 spread {x2_flex:.3} (-90 deg) vs {x2_ext:.3} (0 deg)"
        ),
    )
}

/// Tension at which the loading curve first reaches a given angle of the
/// named joint column, by linear interpolation between rows.
pub fn tension_at_angle(curve: &StudyTable, angle_column: &str, theta: f64) -> Option<f64> {
    let t = curve.column("tension_n")?;
    let a = curve.column(angle_column)?;
    if a.first().is_some_and(|&a0| a0 >= theta) {
        return t.first().copied();
    }
    for i in 1..t.len() {
        if a[i] >= theta {
            let span = a[i] - a[i - 1];
            if span <= 0.0 {
                return Some(t[i]);
            }
            let f = (theta - a[i - 1]) / span;
            return Some(t[i - 1] + f * (t[i] - t[i - 1]));
        }
    }
    None
}

/// Relative advantage of the weaker of the other designs over the Baseline.
fn relative_gap(base: f64, others: &[f64]) -> f64 {
    others
        .iter()
        .map(|o| 1.0 - o / base)
        .fold(f64::INFINITY, f64::min)
}

/// Force ordering on the loading curves: the Baseline needs the most force
/// at every PIP angle in [-89°, -20°], its lead is larger at -80° than at
/// -30°, and Design A's PIP leads its MCP along the whole stroke.
pub fn check_force_ordering(
    baseline: &StudyTable,
    design_a: &StudyTable,
    design_b: &StudyTable,
) -> CheckOutcome {
    let mut margin = f64::INFINITY;
    let mut missing = false;
    let mut mcp_margin = f64::INFINITY;
    for i in -89..=-20 {
        let th = i as f64;
        let at = |c: &StudyTable, col: &str| tension_at_angle(c, col, th);
        match (
            at(baseline, "theta_pip_deg"),
            at(design_a, "theta_pip_deg"),
            at(design_b, "theta_pip_deg"),
        ) {
            (Some(tb), Some(ta), Some(tbb)) => margin = margin.min(tb - ta).min(tb - tbb),
            _ => missing = true,
        }
        if let (Some(tb), Some(ta), Some(tbb)) = (
            at(baseline, "theta_mcp_deg"),
            at(design_a, "theta_mcp_deg"),
            at(design_b, "theta_mcp_deg"),
        ) {
            mcp_margin = mcp_margin.min(tb - ta).min(tb - tbb);
        }
    }
    let gap = |th: f64| -> Option<f64> {
        let tb = tension_at_angle(baseline, "theta_pip_deg", th)?;
        let ta = tension_at_angle(design_a, "theta_pip_deg", th)?;
        let tbb = tension_at_angle(design_b, "theta_pip_deg", th)?;
        Some(relative_gap(tb, &[ta, tbb]))
    };
    let (g80, g30) = (gap(-80.0).unwrap_or(f64::NAN), gap(-30.0).unwrap_or(f64::NAN));
    let pip = col(design_a, "theta_pip_deg");
    let mcp = col(design_a, "theta_mcp_deg");
    let lead = pip
        .iter()
        .zip(&mcp)
        .map(|(p, m)| p - m)
        .fold(f64::INFINITY, f64::min);
    CheckOutcome::new(
        "force_curve_ordering",
        !missing && margin > 0.0 && g80 > g30 && lead >= 0.0,
        format!(
            "min Baseline excess {margin:.3} N; relative gap {g80:.3} at -80 deg vs {g30:.3} at -30 deg; \
             Design A min PIP lead {lead:.3} deg; MCP-angle excess {mcp_margin:.3} N"
        ),
    )
}

/// Trace invariants: tension never above peak; every stalled sample is at
/// peak force or fully extended.
pub fn check_actuation_trace(trace: &ActuationTrace, ctrl: &ControllerParams) -> CheckOutcome {
    let over = trace
        .samples
        .iter()
        .filter(|s| s.tension > ctrl.peak_force)
        .count();
    let bad_stall = trace
        .samples
        .iter()
        .filter(|s| {
            s.stalled
                && !(s.tension >= 0.99 * ctrl.peak_force
                    || (s.theta_mcp >= -0.5 && s.theta_pip >= -0.5))
        })
        .count();
    let stall = trace
        .first_stall()
        .map(|s| {
            format!(
                "stalled at {:.2} s, {:.2} N, MCP {:.2} deg, PIP {:.2} deg",
                s.t, s.tension, s.theta_mcp, s.theta_pip
            )
        })
        .unwrap_or_else(|| "no stall".into());
    CheckOutcome::new(
        "actuation_stall_semantics",
        over == 0 && bad_stall == 0,
        format!("{stall}; {over} samples above peak, {bad_stall} inconsistent stall flags"),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn curve(rows: &[[f64; 3]]) -> StudyTable {
        let mut t = StudyTable::new(&[
            ("tension_n", "N"),
            ("theta_pip_deg", "deg"),
            ("theta_mcp_deg", "deg"),
        ]);
        for r in rows {
            t.push_row(r.to_vec()).unwrap();
        }
        t
    }

    #[test]
    fn interpolates_first_crossing() {
        let c = curve(&[[0.0, -90.0, -90.0], [10.0, -60.0, -70.0], [20.0, 0.0, 0.0], [30.0, 0.0, 0.0]]);
        assert_eq!(tension_at_angle(&c, "theta_pip_deg", -75.0), Some(5.0));
        assert_eq!(tension_at_angle(&c, "theta_pip_deg", 0.0), Some(20.0));
        assert_eq!(tension_at_angle(&c, "theta_pip_deg", -90.0), Some(0.0));
        assert_eq!(tension_at_angle(&c, "theta_pip_deg", 1.0), None);
    }

    #[test]
    fn spread_uses_only_the_slice() {
        let mut s = StudyTable::new(&[
            ("x1_mm", "mm"),
            ("x2_mm", "mm"),
            ("theta_deg", "deg"),
            ("r_pip_mm", "mm"),
        ]);
        for row in [
            [11.0, 19.0, 0.0, 10.0],
            [17.0, 19.0, 0.0, 14.0],
            [17.0, 13.0, 0.0, 100.0],
            [11.0, 19.0, -90.0, 5.0],
        ] {
            s.push_row(row.to_vec()).unwrap();
        }
        assert_eq!(sweep_spread(&s, true, 19.0, 0.0), 4.0);
        assert_eq!(sweep_spread(&s, false, 17.0, 0.0), 86.0);
        assert_eq!(sweep_spread(&s, true, 19.0, -90.0), 0.0);
    }
}
