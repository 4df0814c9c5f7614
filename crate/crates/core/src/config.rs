//! Run configuration and its text format.
//!
//! ```text
//! # comment
//! [chain]
//! proximal_len=45 middle_len=25
//! [design] variant=A x1=17 x2=19
//! [study] command=sweep-a
//! theta_min=-90 theta_max=0 theta_step=1
//! designs=baseline,A(17,19),B(17)
//! ```
//!
//! A line holds a section header, whitespace-separated `key=value` tokens, or
//! both. Every key has a default; unknown sections or keys, and keys given
//! twice, are rejected.

use std::path::PathBuf;

use crate::error::{Error, Result};
use crate::fingermodel::{
    validate_chain, CouplingRule, DipCoupling, JointRadii, PhalanxChain, TorsionSpringSet,
};
use crate::routing::{DesignSpec, DesignVariant, Placement};
use crate::runner::Command;
use crate::statics::{calibration_scale, ControllerParams};
use crate::studies::{theta_grid, DEFAULT_REPS, DEFAULT_X1_GRID, DEFAULT_X2_GRID};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SpringScale {
    /// Scale so the Baseline needs 80 N at full extension.
    Calibrate,
    Fixed(f64),
}

#[derive(Clone, Debug, PartialEq)]
pub struct StudySettings {
    pub theta_min: f64,
    pub theta_max: f64,
    pub theta_step: f64,
    pub x1_grid: Vec<f64>,
    pub x2_grid: Vec<f64>,
    pub tension_max: f64,
    pub tension_steps: usize,
    pub reps: usize,
    pub noise_sigma: f64,
    pub coupling: CouplingRule,
    /// Designs compared by `force-curve` and `experiment`.
    pub designs: Vec<DesignVariant>,
}

impl Default for StudySettings {
    fn default() -> Self {
        Self {
            theta_min: -90.0,
            theta_max: 0.0,
            theta_step: 1.0,
            x1_grid: DEFAULT_X1_GRID.to_vec(),
            x2_grid: DEFAULT_X2_GRID.to_vec(),
            tension_max: 100.0,
            tension_steps: 200,
            reps: DEFAULT_REPS,
            noise_sigma: 0.0,
            coupling: CouplingRule::default(),
            designs: vec![
                DesignVariant::Baseline,
                DesignVariant::design_a(),
                DesignVariant::design_b(),
            ],
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub chain: PhalanxChain,
    pub springs: TorsionSpringSet,
    pub spring_set: String,
    pub scale: SpringScale,
    pub design: DesignSpec,
    pub study: StudySettings,
    pub controller: ControllerParams,
    pub press_s: f64,
    pub release_s: f64,
    pub output_dir: PathBuf,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            command: Command::Compare,
            chain: PhalanxChain::default(),
            springs: TorsionSpringSet::artificial(),
            spring_set: "artificial".into(),
            scale: SpringScale::Calibrate,
            design: DesignSpec::design_b(17.0),
            study: StudySettings::default(),
            controller: ControllerParams::default(),
            press_s: 3.0,
            release_s: 2.0,
            output_dir: PathBuf::from("out"),
            seed: 0,
        }
    }
}

fn invalid<T>(field: &str, message: impl Into<String>) -> Result<T> {
    Err(Error::Validation {
        field: field.into(),
        message: message.into(),
    })
}

fn positive(field: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        invalid(field, format!("must be > 0, got {v}"))
    }
}

fn check_variant(variant: DesignVariant, x1_field: &str, x2_field: &str, h_field: &str) -> Result<()> {
    match variant {
        DesignVariant::DesignA { x1, x2 } => {
            positive(x1_field, x1)?;
            positive(x2_field, x2)
        }
        DesignVariant::DesignB { h } => positive(h_field, h),
        _ => Ok(()),
    }
}

impl RunConfig {
    /// Spring set with the scale resolved, calibrating when requested.
    pub fn resolved_springs(&self) -> Result<TorsionSpringSet> {
        let scale = match self.scale {
            SpringScale::Calibrate => calibration_scale(&self.chain, &self.springs)?,
            SpringScale::Fixed(s) => s,
        };
        Ok(self.springs.with_scale(scale))
    }

    pub fn theta_grid(&self) -> Result<Vec<f64>> {
        theta_grid(self.study.theta_min, self.study.theta_max, self.study.theta_step)
    }

    pub fn design_specs(&self) -> Vec<DesignSpec> {
        self.study
            .designs
            .iter()
            .map(|&variant| DesignSpec {
                variant,
                ..self.design
            })
            .collect()
    }

    /// Checks every field against the invariants of the model it feeds.
    pub fn validate(&self) -> Result<()> {
        if let Err(Error::InvalidGeometry { field, reason }) = validate_chain(self.chain) {
            let key = match field {
                "joint_radius.mcp" => "r_mcp",
                "joint_radius.pip" => "r_pip",
                "joint_radius.dip" => "r_dip",
                other => other,
            };
            return invalid(&format!("chain.{key}"), reason);
        }
        match self.springs.validate() {
            Err(Error::OutOfRange { what, value, range }) => {
                return invalid(&format!("springs.{what}"), format!("{value} is outside {range}"))
            }
            Err(e) => return Err(e),
            Ok(()) => {}
        }
        if let SpringScale::Fixed(s) = self.scale {
            positive("springs.scale", s)?;
        }
        check_variant(self.design.variant, "design.x1", "design.x2", "design.h")?;
        let s = &self.study;
        for (field, v) in [("study.theta_min", s.theta_min), ("study.theta_max", s.theta_max)] {
            if !(v.is_finite() && (-90.0..=0.0).contains(&v)) {
                return invalid(field, format!("{v} is outside [-90, 0]"));
            }
        }
        if s.theta_min > s.theta_max {
            return invalid("study.theta_min", "must not exceed theta_max");
        }
        positive("study.theta_step", s.theta_step)?;
        for (field, grid) in [("study.x1_grid", &s.x1_grid), ("study.x2_grid", &s.x2_grid)] {
            if grid.is_empty() {
                return invalid(field, "grid is empty");
            }
            for &v in grid {
                positive(field, v)?;
            }
        }
        positive("study.tension_max", s.tension_max)?;
        if s.tension_steps < 2 {
            return invalid("study.tension_steps", "need at least 2 steps");
        }
        if s.reps == 0 {
            return invalid("study.reps", "need at least 1 repetition");
        }
        if !(s.noise_sigma.is_finite() && s.noise_sigma >= 0.0) {
            return invalid("study.noise_sigma", "must be >= 0");
        }
        if let DipCoupling::Linear { ratio } = s.coupling.dip {
            if !(0.0..=1.0).contains(&ratio) {
                return invalid("study.dip", format!("ratio {ratio} is outside [0, 1]"));
            }
        }
        if s.designs.is_empty() {
            return invalid("study.designs", "list is empty");
        }
        for &d in &s.designs {
            check_variant(d, "study.designs", "study.designs", "study.designs")?;
        }
        if let Err(Error::Validation { field, message }) = self.controller.validate() {
            return invalid(&format!("controller.{field}"), message);
        }
        for (field, v) in [("controller.press_s", self.press_s), ("controller.release_s", self.release_s)] {
            if !(v.is_finite() && v >= 0.0) {
                return invalid(field, format!("must be >= 0, got {v}"));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Section {
    Chain,
    Springs,
    Design,
    Study,
    Controller,
    Output,
}

impl Section {
    fn parse(name: &str) -> Option<Self> {
        Some(match name {
            "chain" => Section::Chain,
            "springs" => Section::Springs,
            "design" => Section::Design,
            "study" => Section::Study,
            "controller" => Section::Controller,
            "output" => Section::Output,
            _ => return None,
        })
    }

    fn name(self) -> &'static str {
        match self {
            Section::Chain => "chain",
            Section::Springs => "springs",
            Section::Design => "design",
            Section::Study => "study",
            Section::Controller => "controller",
            Section::Output => "output",
        }
    }

    fn keys(self) -> &'static [&'static str] {
        match self {
            Section::Chain => &[
                "proximal_len",
                "middle_len",
                "distal_len",
                "dorsal_offset",
                "r_mcp",
                "r_pip",
                "r_dip",
                "palm_len",
            ],
            Section::Springs => &["set", "k_dip", "k_pip", "k_mcp", "rest_angle", "scale"],
            Section::Design => &[
                "variant",
                "x1",
                "x2",
                "h",
                "telescoping",
                "pathway_height",
                "channel_fraction",
                "funnel_height",
                "funnel_depth",
                "hook_rise",
                "sleeve_reach",
            ],
            Section::Study => &[
                "command",
                "theta_min",
                "theta_max",
                "theta_step",
                "x1_grid",
                "x2_grid",
                "tension_max",
                "tension_steps",
                "reps",
                "noise_sigma",
                "seed",
                "dip",
                "designs",
            ],
            Section::Controller => &[
                "kp",
                "ki",
                "kd",
                "speed_limit",
                "peak_force",
                "press_s",
                "release_s",
            ],
            Section::Output => &["dir"],
        }
    }
}

struct Entry {
    line: usize,
    value: String,
}

fn parse_err<T>(line: usize, message: impl Into<String>) -> Result<T> {
    Err(Error::Parse {
        line,
        message: message.into(),
    })
}

fn tokens(line: &str) -> Vec<&str> {
    let cut = line.find(['#', ';']).unwrap_or(line.len());
    line[..cut].split_whitespace().collect()
}

/// Parses the configuration text, applies defaults and validates the result.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let mut entries: Vec<((Section, &'static str), Entry)> = Vec::new();
    let mut section: Option<Section> = None;
    for (i, raw) in text.lines().enumerate() {
        let n = i + 1;
        let mut toks = tokens(raw).into_iter().peekable();
        if let Some(head) = toks.peek().copied() {
            if let Some(rest) = head.strip_prefix('[') {
                let Some(name) = rest.strip_suffix(']') else {
                    return parse_err(n, format!("malformed section header `{head}`"));
                };
                match Section::parse(name) {
                    Some(s) => section = Some(s),
                    None => return parse_err(n, format!("unknown section `[{name}]`")),
                }
                toks.next();
            }
        }
        for tok in toks {
            let Some((key, value)) = tok.split_once('=') else {
                return parse_err(n, format!("expected key=value, found `{tok}`"));
            };
            let Some(sec) = section else {
                return parse_err(n, format!("`{key}` appears before any section header"));
            };
            let Some(&known) = sec.keys().iter().find(|k| **k == key) else {
                return parse_err(n, format!("unknown key `{key}` in [{}]", sec.name()));
            };
            if value.is_empty() {
                return parse_err(n, format!("`{key}` has no value"));
            }
            if let Some((_, first)) = entries.iter().find(|(k, _)| *k == (sec, known)) {
                return parse_err(
                    n,
                    format!("`{key}` in [{}] already set on line {}", sec.name(), first.line),
                );
            }
            entries.push((
                (sec, known),
                Entry {
                    line: n,
                    value: value.to_string(),
                },
            ));
        }
    }
    build(&entries)
}

fn number(sec: Section, key: &str, e: &Entry) -> Result<f64> {
    match e.value.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => invalid(
            &format!("{}.{key}", sec.name()),
            format!("`{}` is not a finite number (line {})", e.value, e.line),
        ),
    }
}

fn integer<T: std::str::FromStr>(sec: Section, key: &str, e: &Entry) -> Result<T> {
    e.value.parse::<T>().or_else(|_| {
        invalid(
            &format!("{}.{key}", sec.name()),
            format!("`{}` is not a non-negative integer (line {})", e.value, e.line),
        )
    })
}

fn number_list(sec: Section, key: &str, e: &Entry) -> Result<Vec<f64>> {
    e.value
        .split(',')
        .map(|part| {
            number(
                sec,
                key,
                &Entry {
                    line: e.line,
                    value: part.to_string(),
                },
            )
        })
        .collect()
}

/// Splits on commas outside parentheses: `A(17,19),B` → [`A(17,19)`, `B`].
fn split_designs(s: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let (mut depth, mut start) = (0i32, 0);
    for (i, c) in s.char_indices() {
        match c {
            '(' => depth += 1,
            ')' => depth -= 1,
            ',' if depth == 0 => {
                out.push(&s[start..i]);
                start = i + 1;
            }
            _ => {}
        }
    }
    out.push(&s[start..]);
    out
}

fn build(entries: &[((Section, &'static str), Entry)]) -> Result<RunConfig> {
    let mut cfg = RunConfig::default();
    let get = |sec: Section, key: &str| {
        entries
            .iter()
            .find(|((s, k), _)| *s == sec && *k == key)
            .map(|(_, e)| e)
    };
    let num = |sec: Section, key: &str| get(sec, key).map(|e| number(sec, key, e)).transpose();

    use Section::*;
    let c = &mut cfg.chain;
    for (key, slot) in [
        ("proximal_len", &mut c.proximal_len),
        ("middle_len", &mut c.middle_len),
        ("distal_len", &mut c.distal_len),
        ("dorsal_offset", &mut c.dorsal_offset),
        ("palm_len", &mut c.palm_len),
    ] {
        if let Some(v) = num(Chain, key)? {
            *slot = v;
        }
    }
    let JointRadii { mcp, pip, dip } = &mut c.joint_radius;
    for (key, slot) in [("r_mcp", mcp), ("r_pip", pip), ("r_dip", dip)] {
        if let Some(v) = num(Chain, key)? {
            *slot = v;
        }
    }

    if let Some(e) = get(Springs, "set") {
        cfg.springs = match e.value.as_str() {
            "artificial" => TorsionSpringSet::artificial(),
            "cruz" => TorsionSpringSet::cruz(),
            "custom" => TorsionSpringSet::from_ratio(0.0, 0.0, 0.0),
            other => {
                return invalid(
                    "springs.set",
                    format!("`{other}` is not one of artificial, cruz, custom"),
                )
            }
        };
        cfg.spring_set = e.value.clone();
    }
    let custom = cfg.spring_set == "custom";
    let sp = &mut cfg.springs;
    for (key, slot) in [("k_dip", &mut sp.k_dip), ("k_pip", &mut sp.k_pip), ("k_mcp", &mut sp.k_mcp)] {
        match num(Springs, key)? {
            Some(_) if !custom => {
                return invalid(
                    &format!("springs.{key}"),
                    "stiffnesses can only be given with set=custom",
                )
            }
            Some(v) => *slot = v,
            None if custom => {
                return invalid(&format!("springs.{key}"), "required with set=custom")
            }
            None => {}
        }
    }
    if let Some(v) = num(Springs, "rest_angle")? {
        sp.rest_angle = v;
    }
    if let Some(e) = get(Springs, "scale") {
        cfg.scale = if e.value == "calibrate" {
            SpringScale::Calibrate
        } else {
            SpringScale::Fixed(number(Springs, "scale", e)?)
        };
    }

    let mut placement = Placement::default();
    for (key, slot) in [
        ("pathway_height", &mut placement.pathway_height),
        ("channel_fraction", &mut placement.channel_fraction),
        ("funnel_height", &mut placement.funnel_height),
        ("funnel_depth", &mut placement.funnel_depth),
        ("hook_rise", &mut placement.hook_rise),
        ("sleeve_reach", &mut placement.sleeve_reach),
    ] {
        if let Some(v) = num(Design, key)? {
            *slot = v;
        }
    }
    let variant_name = get(Design, "variant").map(|e| e.value.as_str()).unwrap_or("B");
    let mut variant: DesignVariant = variant_name.parse().or_else(|_| {
        invalid(
            "design.variant",
            format!("`{variant_name}` is not one of traditional, baseline, A, B"),
        )
    })?;
    let (x1, x2, h) = (num(Design, "x1")?, num(Design, "x2")?, num(Design, "h")?);
    match &mut variant {
        DesignVariant::DesignA { x1: a1, x2: a2 } => {
            if h.is_some() {
                return invalid("design.h", "only applies to Design B");
            }
            *a1 = x1.unwrap_or(*a1);
            *a2 = x2.unwrap_or(*a2);
        }
        DesignVariant::DesignB { h: bh } => {
            if x1.is_some() || x2.is_some() {
                let field = if x1.is_some() { "design.x1" } else { "design.x2" };
                return invalid(field, "only applies to Design A");
            }
            *bh = h.unwrap_or(*bh);
        }
        _ => {
            for (field, v) in [("design.x1", x1), ("design.x2", x2), ("design.h", h)] {
                if v.is_some() {
                    return invalid(field, format!("does not apply to {variant_name}"));
                }
            }
        }
    }
    let telescoping = match get(Design, "telescoping").map(|e| e.value.as_str()) {
        None | Some("false") => false,
        Some("true") => true,
        Some(other) => return invalid("design.telescoping", format!("`{other}` is not true/false")),
    };
    cfg.design = DesignSpec {
        variant,
        placement,
        allow_telescoping: telescoping,
    };

    let st = &mut cfg.study;
    for (key, slot) in [
        ("theta_min", &mut st.theta_min),
        ("theta_max", &mut st.theta_max),
        ("theta_step", &mut st.theta_step),
        ("tension_max", &mut st.tension_max),
        ("noise_sigma", &mut st.noise_sigma),
    ] {
        if let Some(v) = num(Study, key)? {
            *slot = v;
        }
    }
    for (key, slot) in [("x1_grid", &mut st.x1_grid), ("x2_grid", &mut st.x2_grid)] {
        if let Some(e) = get(Study, key) {
            *slot = number_list(Study, key, e)?;
        }
    }
    if let Some(e) = get(Study, "command") {
        cfg.command = e.value.parse()?;
    }
    if let Some(e) = get(Study, "tension_steps") {
        st.tension_steps = integer(Study, "tension_steps", e)?;
    }
    if let Some(e) = get(Study, "reps") {
        st.reps = integer(Study, "reps", e)?;
    }
    if let Some(e) = get(Study, "seed") {
        cfg.seed = integer(Study, "seed", e)?;
    }
    if let Some(e) = get(Study, "dip") {
        st.coupling = match e.value.as_str() {
            "locked" => CouplingRule::default(),
            other => match other.strip_prefix("linear:").map(str::parse::<f64>) {
                Some(Ok(r)) => CouplingRule::linear_dip(r),
                _ => {
                    return invalid(
                        "study.dip",
                        format!("`{other}` is not `locked` or `linear:<ratio>`"),
                    )
                }
            },
        };
    }
    if let Some(e) = get(Study, "designs") {
        st.designs = split_designs(&e.value)
            .into_iter()
            .map(|d| {
                d.parse::<DesignVariant>()
                    .or_else(|_| invalid("study.designs", format!("`{d}` is not a design")))
            })
            .collect::<Result<_>>()?;
    }

    let ct = &mut cfg.controller;
    for (key, slot) in [
        ("kp", &mut ct.kp),
        ("ki", &mut ct.ki),
        ("kd", &mut ct.kd),
        ("speed_limit", &mut ct.speed_limit),
        ("peak_force", &mut ct.peak_force),
    ] {
        if let Some(v) = num(Controller, key)? {
            *slot = v;
        }
    }
    if let Some(v) = num(Controller, "press_s")? {
        cfg.press_s = v;
    }
    if let Some(v) = num(Controller, "release_s")? {
        cfg.release_s = v;
    }
    if let Some(e) = get(Output, "dir") {
        cfg.output_dir = PathBuf::from(&e.value);
    }

    cfg.validate()?;
    Ok(cfg)
}
