use crate::error::{Error, Result};
use crate::fingermodel::{Joint, JointConfig, JointTorques, PhalanxChain, TorsionSpringSet};
use crate::routing::DesignSpec;
use crate::table::StudyTable;

use super::{spring_tag, Model, HI, LO};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverSettings {
    /// Fraction of the fixed-point update applied per iteration.
    pub damping: f64,
    /// Largest joint update (radians) accepted as converged.
    pub step_tol: f64,
    /// Residual bound relative to max(1 N·mm, applied tendon torque).
    pub residual_tol: f64,
    pub max_iterations: usize,
    /// Iterations spent on the fixed-point scheme before the bisection
    /// fallback takes over.
    pub fixed_point_budget: usize,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            damping: 0.5,
            step_tol: 1e-8,
            residual_tol: 1e-10,
            max_iterations: 10_000,
            fixed_point_budget: 2_000,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EquilibriumResult {
    pub tension: f64,
    pub config: JointConfig,
    /// k·(θ − rest) − T·r per joint, N·mm. Zero at a joint held by the
    /// extension stop.
    pub residual: JointTorques,
    /// Geometric moment arms (MCP, PIP) at the solution, mm.
    pub arms: (f64, f64),
    /// MCP and PIP resting against a range-of-motion limit.
    pub at_limit: (bool, bool),
    pub iterations: usize,
    pub converged: bool,
}

struct Eval {
    arms: (f64, f64),
    residual: (f64, f64),
    target: (f64, f64),
    at_limit: (bool, bool),
    within_tol: bool,
}

fn evaluate(model: &Model, t: f64, m: f64, p: f64, tol: f64) -> Result<Eval> {
    let (rm, rp) = model.arms(m, p)?;
    let s = &model.springs;
    let joint = |joint: Joint, theta: f64, r: f64| {
        let k = s.stiffness(joint);
        let drive = t * r;
        let raw = s.torque_rad(joint, theta) - drive;
        let target = if k > 0.0 {
            (s.rest_angle.to_radians() + drive / k).clamp(LO, HI)
        } else if drive > 0.0 {
            HI
        } else {
            theta
        };
        let limit = (theta >= HI && raw < 0.0) || (theta <= LO && raw > 0.0);
        let residual = if limit { 0.0 } else { raw };
        let ok = residual.abs() <= tol * drive.abs().max(1.0);
        (residual, target, limit, ok)
    };
    let (res_m, tgt_m, lim_m, ok_m) = joint(Joint::Mcp, m, rm);
    let (res_p, tgt_p, lim_p, ok_p) = joint(Joint::Pip, p, rp);
    Ok(Eval {
        arms: (rm, rp),
        residual: (res_m, res_p),
        target: (tgt_m, tgt_p),
        at_limit: (lim_m, lim_p),
        within_tol: ok_m && ok_p,
    })
}

/// Damped steps only approach a range limit geometrically; land on it once
/// close enough when the limit is where the joint is headed.
fn snap(theta: f64, target: f64, tol: f64) -> f64 {
    if (target == HI || target == LO) && (theta - target).abs() <= tol {
        target
    } else {
        theta
    }
}

/// Loaded-branch root of one joint's balance with the other joint held:
/// the first angle above the lower limit where the spring overtakes the
/// tendon.
fn joint_root(model: &Model, t: f64, joint: Joint, other: f64) -> Result<f64> {
    let s = &model.springs;
    let g = |theta: f64| -> Result<f64> {
        let (m, p) = match joint {
            Joint::Mcp => (theta, other),
            _ => (other, theta),
        };
        let (rm, rp) = model.arms(m, p)?;
        let r = if joint == Joint::Mcp { rm } else { rp };
        Ok(s.torque_rad(joint, theta) - t * r)
    };
    if g(LO)? >= 0.0 {
        return Ok(LO);
    }
    const SCAN: usize = 90;
    let mut lo = LO;
    for i in 1..=SCAN {
        let hi = LO + (HI - LO) * i as f64 / SCAN as f64;
        if g(hi)? >= 0.0 {
            let (mut a, mut b) = (lo, hi);
            for _ in 0..64 {
                let mid = 0.5 * (a + b);
                if g(mid)? >= 0.0 {
                    b = mid;
                } else {
                    a = mid;
                }
            }
            return Ok(0.5 * (a + b));
        }
        lo = hi;
    }
    Ok(HI)
}

pub(crate) fn solve(
    model: &Model,
    tension: f64,
    start: (f64, f64),
    settings: &SolverSettings,
) -> Result<EquilibriumResult> {
    if !(tension.is_finite() && tension >= 0.0) {
        return Err(Error::OutOfRange {
            what: "tension",
            value: tension,
            range: "[0, inf)",
        });
    }
    let finish = |m: f64, p: f64, e: &Eval, iterations: usize, converged: bool| {
        EquilibriumResult {
            tension,
            config: model.config(m, p),
            residual: JointTorques {
                mcp: e.residual.0,
                pip: e.residual.1,
                // the DIP is held by its coupling, not balanced by the tendon
                dip: 0.0,
            },
            arms: e.arms,
            at_limit: e.at_limit,
            iterations,
            converged,
        }
    };

    if tension == 0.0 {
        let (m, p) = model.rest();
        let e = evaluate(model, 0.0, m, p, settings.residual_tol)?;
        return Ok(finish(m, p, &e, 0, true));
    }

    let (mut m, mut p) = (start.0.clamp(LO, HI), start.1.clamp(LO, HI));
    let mut best: Option<(f64, f64, f64)> = None;
    let mut track = |m: f64, p: f64, e: &Eval| {
        let worst = e.residual.0.abs().max(e.residual.1.abs());
        if best.is_none_or(|(_, _, b)| worst < b) {
            best = Some((m, p, worst));
        }
    };

    let fp_budget = settings.fixed_point_budget.min(settings.max_iterations);
    for it in 0..fp_budget {
        let e = evaluate(model, tension, m, p, settings.residual_tol)?;
        track(m, p, &e);
        let dm = settings.damping * (e.target.0 - m);
        let dp = settings.damping * (e.target.1 - p);
        if dm.abs().max(dp.abs()) <= settings.step_tol && e.within_tol {
            return Ok(finish(m, p, &e, it, true));
        }
        m = snap(m + dm, e.target.0, settings.step_tol);
        p = snap(p + dp, e.target.1, settings.step_tol);
    }

    // Gauss-Seidel sweeps, each joint solved exactly on its loaded branch
    for it in fp_budget..settings.max_iterations {
        let m_new = joint_root(model, tension, Joint::Mcp, p)?;
        let p_new = joint_root(model, tension, Joint::Pip, m_new)?;
        let step = (m_new - m).abs().max((p_new - p).abs());
        m = m_new;
        p = p_new;
        let e = evaluate(model, tension, m, p, settings.residual_tol)?;
        track(m, p, &e);
        if step <= settings.step_tol && e.within_tol {
            return Ok(finish(m, p, &e, it + 1, true));
        }
    }

    let (m, p, _) = best.expect("at least one iteration ran");
    let e = evaluate(model, tension, m, p, settings.residual_tol)?;
    Ok(finish(m, p, &e, settings.max_iterations, false))
}

/// Equilibrium at `tension`, reached by loading from the relaxed finger.
/// Non-convergence is reported through the `converged` flag.
pub fn solve_equilibrium(
    spec: &DesignSpec,
    chain: &PhalanxChain,
    springs: &TorsionSpringSet,
    tension: f64,
) -> Result<EquilibriumResult> {
    let model = Model::new(spec, chain, springs)?;
    solve(&model, tension, model.rest(), &SolverSettings::default())
}

/// Like [`solve_equilibrium`] but fails when the solver does not converge.
pub fn equilibrium_config(
    spec: &DesignSpec,
    chain: &PhalanxChain,
    springs: &TorsionSpringSet,
    tension: f64,
) -> Result<EquilibriumResult> {
    let r = solve_equilibrium(spec, chain, springs, tension)?;
    if r.converged {
        Ok(r)
    } else {
        Err(Error::NoConvergence {
            iterations: r.iterations,
            residual: r.residual.mcp.abs().max(r.residual.pip.abs()),
        })
    }
}

pub(crate) fn check_tension_grid(grid: &[f64]) -> Result<()> {
    if let Some(bad) = grid.iter().find(|t| !(t.is_finite() && **t >= 0.0)) {
        return Err(Error::OutOfRange {
            what: "tension",
            value: *bad,
            range: "[0, inf)",
        });
    }
    if grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::Validation {
            field: "tension_grid".into(),
            message: "tensions must be sorted ascending".into(),
        });
    }
    Ok(())
}

/// Equilibria along a loading stroke, each warm-started from the previous.
pub(crate) fn stroke(model: &Model, grid: &[f64]) -> Result<Vec<EquilibriumResult>> {
    check_tension_grid(grid)?;
    let settings = SolverSettings::default();
    let mut start = model.rest();
    let mut out = Vec::with_capacity(grid.len());
    for &t in grid {
        let r = solve(model, t, start, &settings)?;
        start = (r.config.mcp.to_radians(), r.config.pip.to_radians());
        out.push(r);
    }
    Ok(out)
}

pub(crate) const CURVE_COLUMNS: [(&str, &str); 4] = [
    ("tension_n", "N"),
    ("theta_pip_deg", "deg"),
    ("theta_mcp_deg", "deg"),
    ("converged", "bool"),
];

/// Rows of (T, θ_PIP, θ_MCP, converged) over an ascending tension grid.
pub fn force_angle_curve(
    spec: &DesignSpec,
    chain: &PhalanxChain,
    springs: &TorsionSpringSet,
    grid: &[f64],
) -> Result<StudyTable> {
    let model = Model::new(spec, chain, springs)?;
    let mut table = StudyTable::new(&CURVE_COLUMNS);
    table.set_meta("design", spec.variant.to_string())?;
    table.set_meta("chain", chain.fingerprint())?;
    table.set_meta("springs", spring_tag(springs))?;
    table.set_meta("calibration_scale", springs.scale.to_string())?;
    for r in stroke(&model, grid)? {
        table.push_row(vec![
            r.tension,
            r.config.pip,
            r.config.mcp,
            if r.converged { 1.0 } else { 0.0 },
        ])?;
    }
    Ok(table)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnergyBalance {
    /// ∫ T dL over the stroke, N·mm.
    pub work: f64,
    /// Spring energy gained over the stroke, N·mm.
    pub energy: f64,
    pub relative_error: f64,
    pub steps: usize,
}

/// Work done by the tendon on a quasi-static stroke from rest to `t_max`,
/// compared with the energy stored in the springs. Tension steps are refined
/// until no joint moves more than 1° between samples.
pub fn stroke_energy_balance(
    spec: &DesignSpec,
    chain: &PhalanxChain,
    springs: &TorsionSpringSet,
    t_max: f64,
) -> Result<EnergyBalance> {
    let model = Model::new(spec, chain, springs)?;
    let settings = SolverSettings::default();
    let max_move = 1f64.to_radians();
    let angles = |r: &EquilibriumResult| (r.config.mcp.to_radians(), r.config.pip.to_radians());

    let first = solve(&model, 0.0, model.rest(), &settings)?;
    let mut states = vec![first];
    let mut t = 0.0;
    let coarse = t_max / 50.0;
    while t < t_max {
        let prev = *states.last().expect("seeded");
        let mut dt = coarse.min(t_max - t);
        loop {
            let next = solve(&model, t + dt, angles(&prev), &settings)?;
            let (a, b) = (angles(&prev), angles(&next));
            if (a.0 - b.0).abs().max((a.1 - b.1).abs()) <= max_move || dt < 1e-9 {
                states.push(next);
                t += dt;
                break;
            }
            dt *= 0.5;
        }
    }

    let mut work = 0.0;
    let mut prev_len = None;
    for w in states.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        let la = match prev_len {
            Some(l) => l,
            None => model.length(angles(a).0, angles(a).1)?,
        };
        let lb = model.length(angles(b).0, angles(b).1)?;
        work += 0.5 * (a.tension + b.tension) * (la - lb);
        prev_len = Some(lb);
    }
    let last = states.last().expect("seeded");
    let energy = springs.energy(&last.config) - springs.energy(&first.config);
    let relative_error = if energy.abs() > 0.0 {
        (work - energy).abs() / energy.abs()
    } else {
        work.abs()
    };
    Ok(EnergyBalance {
        work,
        energy,
        relative_error,
        steps: states.len() - 1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::statics::calibrate_springs;

    fn springs() -> TorsionSpringSet {
        calibrate_springs(&PhalanxChain::default(), &TorsionSpringSet::artificial()).unwrap()
    }

    fn designs() -> [DesignSpec; 3] {
        [
            DesignSpec::baseline(),
            DesignSpec::design_a(17.0, 19.0),
            DesignSpec::design_b(17.0),
        ]
    }

    #[test]
    fn zero_tension_is_rest() {
        for spec in designs() {
            let r = equilibrium_config(&spec, &PhalanxChain::default(), &springs(), 0.0).unwrap();
            assert_eq!(r.config.mcp, -90.0);
            assert_eq!(r.config.pip, -90.0);
            assert_eq!(r.iterations, 0);
        }
    }

    #[test]
    fn large_tension_saturates() {
        for spec in designs() {
            let r = equilibrium_config(&spec, &PhalanxChain::default(), &springs(), 800.0).unwrap();
            assert_eq!((r.config.mcp, r.config.pip), (0.0, 0.0));
            assert_eq!(r.at_limit, (true, true));
        }
    }

    #[test]
    fn residual_within_bound() {
        for spec in designs() {
            for t in [1.0, 20.0, 55.0, 79.0] {
                let r = equilibrium_config(&spec, &PhalanxChain::default(), &springs(), t).unwrap();
                let bound = |arm: f64| 1e-6 * (t * arm).max(1.0);
                assert!(r.residual.mcp.abs() <= bound(r.arms.0), "{spec:?} {t} {r:?}");
                assert!(r.residual.pip.abs() <= bound(r.arms.1), "{spec:?} {t} {r:?}");
            }
        }
    }

    #[test]
    fn fallback_agrees_with_fixed_point() {
        let chain = PhalanxChain::default();
        let model = Model::new(&DesignSpec::baseline(), &chain, &springs()).unwrap();
        let fp = solve(&model, 40.0, model.rest(), &SolverSettings::default()).unwrap();
        let settings = SolverSettings {
            fixed_point_budget: 0,
            ..SolverSettings::default()
        };
        let gs = solve(&model, 40.0, model.rest(), &settings).unwrap();
        assert!(fp.converged && gs.converged);
        assert!((fp.config.pip - gs.config.pip).abs() < 1e-6);
        assert!((fp.config.mcp - gs.config.mcp).abs() < 1e-6);
    }

    #[test]
    fn unsorted_grid_rejected() {
        let err = force_angle_curve(
            &DesignSpec::baseline(),
            &PhalanxChain::default(),
            &springs(),
            &[0.0, 5.0, 2.0],
        )
        .unwrap_err();
        assert!(matches!(err, Error::Validation { .. }));
    }

    #[test]
    fn energy_balances_on_a_stroke() {
        for spec in designs() {
            let e = stroke_energy_balance(&spec, &PhalanxChain::default(), &springs(), 90.0)
                .unwrap();
            assert!(e.relative_error <= 0.01, "{spec:?} {e:?}");
        }
    }
}
