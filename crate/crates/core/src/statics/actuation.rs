use crate::error::{Error, Result};
use crate::fingermodel::{PhalanxChain, TorsionSpringSet};
use crate::routing::DesignSpec;
use crate::table::StudyTable;

use super::equilibrium::{solve, EquilibriumResult, SolverSettings};
use super::{spring_tag, Model};

/// Trace sampling rate; the controller also steps at this rate.
pub const SAMPLE_RATE_HZ: f64 = 100.0;
/// Fraction of peak force counted as "at peak" for stall detection.
const PEAK_FRACTION: f64 = 0.99;
const PEAK_HOLD_S: f64 = 0.2;
const EXTENDED_WITHIN_DEG: f64 = 0.5;

/// Spool position controller. The PID acts on the tendon displacement error
/// (mm) and commands a spool speed (mm/s), limited to `speed_limit`. The
/// motor cannot pull harder than `peak_force`; while it is pinned there the
/// integrator is frozen.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ControllerParams {
    pub kp: f64,
    pub ki: f64,
    pub kd: f64,
    /// mm/s
    pub speed_limit: f64,
    /// N
    pub peak_force: f64,
}

impl Default for ControllerParams {
    fn default() -> Self {
        Self {
            kp: 5.0,
            ki: 0.5,
            kd: 0.05,
            speed_limit: 50.0,
            peak_force: 100.0,
        }
    }
}

impl ControllerParams {
    pub fn validate(&self) -> Result<()> {
        for (field, v) in [("kp", self.kp), ("ki", self.ki), ("kd", self.kd)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::Validation {
                    field: field.into(),
                    message: format!("gain must be >= 0, got {v}"),
                });
            }
        }
        for (field, v) in [("speed_limit", self.speed_limit), ("peak_force", self.peak_force)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Validation {
                    field: field.into(),
                    message: format!("must be > 0, got {v}"),
                });
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ActuationSample {
    pub t: f64,
    /// Tendon pulled in from the relaxed finger, mm.
    pub displacement: f64,
    pub tension: f64,
    pub theta_mcp: f64,
    pub theta_pip: f64,
    pub stalled: bool,
    pub pressed: bool,
    pub converged: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ActuationTrace {
    pub design: String,
    /// Displacement that brings the finger to full extension, mm.
    pub target_displacement: f64,
    pub samples: Vec<ActuationSample>,
}

impl ActuationTrace {
    pub fn first_stall(&self) -> Option<&ActuationSample> {
        self.samples.iter().find(|s| s.stalled)
    }

    pub fn stalled(&self) -> bool {
        self.first_stall().is_some()
    }

    pub fn to_table(&self) -> StudyTable {
        let mut table = StudyTable::new(&[
            ("t_s", "s"),
            ("displacement_mm", "mm"),
            ("tension_n", "N"),
            ("theta_mcp_deg", "deg"),
            ("theta_pip_deg", "deg"),
            ("stalled", "bool"),
            ("pressed", "bool"),
            ("converged", "bool"),
        ]);
        let flag = |b: bool| if b { 1.0 } else { 0.0 };
        for s in &self.samples {
            table
                .push_row(vec![
                    s.t,
                    s.displacement,
                    s.tension,
                    s.theta_mcp,
                    s.theta_pip,
                    flag(s.stalled),
                    flag(s.pressed),
                    flag(s.converged),
                ])
                .expect("fixed width");
        }
        table
    }
}

/// Finger plus tendon seen from the spool: displacement as a function of
/// tension and its inverse.
struct Plant {
    model: Model,
    settings: SolverSettings,
    l_rest: f64,
    warm: (f64, f64),
}

impl Plant {
    fn at_tension(&mut self, t: f64) -> Result<(EquilibriumResult, f64)> {
        let r = solve(&self.model, t, self.warm, &self.settings)?;
        let (m, p) = (r.config.mcp.to_radians(), r.config.pip.to_radians());
        self.warm = (m, p);
        Ok((r, self.l_rest - self.model.length(m, p)?))
    }

    /// Tension in `[0, t_hi]` holding the finger at displacement `x`.
    fn at_displacement(&mut self, x: f64, t_hi: f64) -> Result<(EquilibriumResult, f64)> {
        if x <= 0.0 {
            return self.at_tension(0.0);
        }
        // false position with the Illinois modification; x(T) is monotone
        let (mut a, mut fa) = (0.0, -x);
        let mut best = self.at_tension(t_hi)?;
        let (mut b, mut fb) = (t_hi, best.1 - x);
        if fb <= 0.0 {
            return Ok(best);
        }
        let mut side = 0i8;
        for _ in 0..100 {
            let mut c = (a * fb - b * fa) / (fb - fa);
            if !(c > a && c < b) {
                c = 0.5 * (a + b);
            }
            let (r, xc) = self.at_tension(c)?;
            let fc = xc - x;
            if fc.abs() <= 1e-9 || b - a <= 1e-12 * t_hi.max(1.0) {
                return Ok((r, xc));
            }
            if fc < 0.0 {
                (a, fa) = (c, fc);
                if side == -1 {
                    fb *= 0.5;
                }
                side = -1;
            } else {
                (b, fb) = (c, fc);
                best = (r, xc);
                if side == 1 {
                    fa *= 0.5;
                }
                side = 1;
            }
        }
        Ok(best)
    }
}

/// Quasi-static actuation: the button is held for `press_s` seconds, then
/// released for `release_s` seconds while the spool unwinds.
pub fn simulate_actuation(
    spec: &DesignSpec,
    chain: &PhalanxChain,
    springs: &TorsionSpringSet,
    ctrl: &ControllerParams,
    press_s: f64,
    release_s: f64,
) -> Result<ActuationTrace> {
    ctrl.validate()?;
    for (field, v) in [("press_s", press_s), ("release_s", release_s)] {
        if !(v.is_finite() && v >= 0.0) {
            return Err(Error::Validation {
                field: field.into(),
                message: format!("duration must be >= 0, got {v}"),
            });
        }
    }
    let model = Model::new(spec, chain, springs)?;
    let (rm, rp) = model.rest();
    let l_rest = model.length(rm, rp)?;
    let target = l_rest - model.length(0.0, 0.0)?;
    let mut plant = Plant {
        model,
        settings: SolverSettings::default(),
        l_rest,
        warm: (rm, rp),
    };
    // furthest the motor can pull before it is pinned at peak force
    let (_, x_peak) = plant.at_tension(ctrl.peak_force)?;
    let x_max = x_peak.min(target);
    plant.warm = (rm, rp);

    let dt = 1.0 / SAMPLE_RATE_HZ;
    let press_steps = (press_s * SAMPLE_RATE_HZ).round() as usize;
    let release_steps = (release_s * SAMPLE_RATE_HZ).round() as usize;

    let (eq, _) = plant.at_tension(0.0)?;
    let sample = |t: f64, x: f64, r: &EquilibriumResult, stalled: bool, pressed: bool| {
        ActuationSample {
            t,
            displacement: x,
            tension: r.tension,
            theta_mcp: r.config.mcp,
            theta_pip: r.config.pip,
            stalled,
            pressed,
            converged: r.converged,
        }
    };
    let mut samples = vec![sample(0.0, 0.0, &eq, false, press_steps > 0)];

    let mut x = 0.0;
    let mut integral = 0.0;
    let mut prev_error = target;
    let mut at_peak_for = 0.0;
    let mut stalled = false;
    let mut state = eq;

    for step in 1..=press_steps + release_steps {
        let t = step as f64 / SAMPLE_RATE_HZ;
        let pressed = step <= press_steps;
        if step == press_steps + 1 {
            // button released: controller now drives the spool back to zero
            integral = 0.0;
            prev_error = -x;
            stalled = false;
            at_peak_for = 0.0;
        }
        if pressed && stalled {
            samples.push(sample(t, x, &state, true, true));
            continue;
        }
        let goal = if pressed { target } else { 0.0 };
        let error = goal - x;
        let derivative = (error - prev_error) / dt;
        prev_error = error;
        let pinned = state.tension >= ctrl.peak_force * PEAK_FRACTION && error > 0.0;
        if !pinned {
            integral += error * dt;
        }
        let v = (ctrl.kp * error + ctrl.ki * integral + ctrl.kd * derivative)
            .clamp(-ctrl.speed_limit, ctrl.speed_limit);
        let x_cmd = (x + v * dt).clamp(0.0, x_max);

        let (r, x_new) = if x_cmd >= x_peak && x_peak < target {
            plant.at_tension(ctrl.peak_force)?
        } else {
            plant.at_displacement(x_cmd, ctrl.peak_force)?
        };
        x = x_new;
        state = r;

        if pressed {
            if state.tension >= PEAK_FRACTION * ctrl.peak_force {
                at_peak_for += dt;
            } else {
                at_peak_for = 0.0;
            }
            let extended = state.config.mcp >= -EXTENDED_WITHIN_DEG
                && state.config.pip >= -EXTENDED_WITHIN_DEG;
            stalled = extended || at_peak_for >= PEAK_HOLD_S - 1e-9;
        }
        samples.push(sample(t, x, &state, pressed && stalled, pressed));
    }

    Ok(ActuationTrace {
        design: spec.variant.to_string(),
        target_displacement: target,
        samples,
    })
}

pub(crate) fn trace_metadata(
    table: &mut StudyTable,
    spec: &DesignSpec,
    springs: &TorsionSpringSet,
    ctrl: &ControllerParams,
) -> Result<()> {
    table.set_meta("design", spec.variant.to_string())?;
    table.set_meta("springs", spring_tag(springs))?;
    table.set_meta(
        "controller",
        format!(
            "kp={} ki={} kd={} speed={} peak={}",
            ctrl.kp, ctrl.ki, ctrl.kd, ctrl.speed_limit, ctrl.peak_force
        ),
    )?;
    table.set_meta("sample_rate_hz", SAMPLE_RATE_HZ.to_string())
}
