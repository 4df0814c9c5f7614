use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::fingermodel::{validate_chain, Body, Joint, PhalanxChain};
use crate::geometry::Vec2;

use super::layout::{Engagement, GuideElement, GuideKind, GuideLayout};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DesignVariant {
    /// Skin-level rings with the tendon tied off at the fingertip.
    Traditional,
    /// Raised pathways, one per segment, anchored at the middle phalanx head.
    Baseline,
    /// Dorsal funnel plus a rigid fingertip piece. `x1` is the height of the
    /// piece's post above the PIP center, `x2` how far its arm reaches back
    /// over the proximal phalanx.
    DesignA { x1: f64, x2: f64 },
    /// Two joint-spanning pathways holding the tendon at height `h`.
    DesignB { h: f64 },
}

impl DesignVariant {
    pub fn design_a() -> Self {
        DesignVariant::DesignA { x1: 17.0, x2: 19.0 }
    }

    pub fn design_b() -> Self {
        DesignVariant::DesignB { h: 17.0 }
    }

    pub fn short_name(&self) -> &'static str {
        match self {
            DesignVariant::Traditional => "traditional",
            DesignVariant::Baseline => "baseline",
            DesignVariant::DesignA { .. } => "A",
            DesignVariant::DesignB { .. } => "B",
        }
    }
}

impl fmt::Display for DesignVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DesignVariant::DesignA { x1, x2 } => write!(f, "A({x1},{x2})"),
            DesignVariant::DesignB { h } => write!(f, "B({h})"),
            other => f.write_str(other.short_name()),
        }
    }
}

/// Parses `traditional`, `baseline`, `A`, `B`, optionally with parameters in
/// parentheses: `A(17,19)`, `B(17)`. Names are case-insensitive.
impl FromStr for DesignVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = |msg: &str| Error::Validation {
            field: "design".into(),
            message: format!("{msg}: `{s}`"),
        };
        let s = s.trim();
        let (name, args) = match s.find('(') {
            Some(open) => {
                let rest = &s[open + 1..];
                let inner = rest.strip_suffix(')').ok_or_else(|| bad("missing `)`"))?;
                (&s[..open], Some(inner))
            }
            None => (s, None),
        };
        let params: Vec<f64> = match args {
            Some(inner) => inner
                .split(',')
                .map(|p| match p.trim().parse::<f64>() {
                    Ok(v) if v.is_finite() => Ok(v),
                    _ => Err(bad("bad parameter")),
                })
                .collect::<Result<_>>()?,
            None => Vec::new(),
        };
        let name = name.trim().to_ascii_lowercase();
        let variant = match (name.as_str(), params.as_slice()) {
            ("traditional" | "trad", []) => DesignVariant::Traditional,
            ("baseline" | "base", []) => DesignVariant::Baseline,
            ("a" | "design_a", []) => DesignVariant::design_a(),
            ("a" | "design_a", [x1, x2]) => DesignVariant::DesignA { x1: *x1, x2: *x2 },
            ("b" | "design_b", []) => DesignVariant::design_b(),
            ("b" | "design_b", [h]) => DesignVariant::DesignB { h: *h },
            _ => return Err(bad("unknown design or wrong parameter count")),
        };
        Ok(variant)
    }
}

/// Placement constants for the guides. None of these are given numerically
/// for the physical prototypes; they are chosen so that every design holds
/// the tendon 17 mm above the joints at full extension.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Placement {
    /// Height of Baseline pathways above the link axis.
    pub pathway_height: f64,
    /// Fraction of each segment covered by a Baseline pathway, centered.
    pub channel_fraction: f64,
    /// Height of the Design A funnel above the MCP center.
    pub funnel_height: f64,
    /// Depth of the funnel tube; the tendon leaves from its back end when
    /// the fingertip piece is allowed to telescope into it.
    pub funnel_depth: f64,
    /// Minimum gap between fingertip-piece arm and funnel at full extension.
    pub funnel_clearance: f64,
    /// Height of the tendon hook at the end of the Design A arm.
    pub hook_rise: f64,
    /// Fraction of the adjacent segment a Design B pathway reaches on each
    /// side of the joint it spans.
    pub sleeve_reach: f64,
    /// Wall thickness of Traditional rings above the knuckle surface.
    pub ring_clearance: f64,
}

impl Default for Placement {
    fn default() -> Self {
        Self {
            pathway_height: 17.0,
            channel_fraction: 0.6,
            funnel_height: 17.0,
            funnel_depth: 12.0,
            funnel_clearance: 2.0,
            hook_rise: 5.0,
            sleeve_reach: 0.4,
            ring_clearance: 1.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DesignSpec {
    pub variant: DesignVariant,
    pub placement: Placement,
    /// Lets the Design A fingertip piece slide into the funnel on short hands.
    pub allow_telescoping: bool,
}

impl DesignSpec {
    pub fn new(variant: DesignVariant) -> Self {
        Self {
            variant,
            placement: Placement::default(),
            allow_telescoping: false,
        }
    }

    pub fn traditional() -> Self {
        Self::new(DesignVariant::Traditional)
    }

    pub fn baseline() -> Self {
        Self::new(DesignVariant::Baseline)
    }

    pub fn design_a(x1: f64, x2: f64) -> Self {
        Self::new(DesignVariant::DesignA { x1, x2 })
    }

    pub fn design_b(h: f64) -> Self {
        Self::new(DesignVariant::DesignB { h })
    }
}

fn incompatible<T>(msg: String) -> Result<T> {
    Err(Error::IncompatibleParameters(msg))
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        incompatible(format!("{name} must be positive, got {v}"))
    }
}

pub fn instantiate_design(spec: &DesignSpec, chain: &PhalanxChain) -> Result<GuideLayout> {
    let chain = validate_chain(*chain)?;
    let p = spec.placement;
    let (guides, dip_stop) = match spec.variant {
        DesignVariant::Traditional => (traditional(&chain, &p), false),
        DesignVariant::Baseline => (baseline(&chain, &p)?, false),
        DesignVariant::DesignA { x1, x2 } => {
            (design_a(&chain, &p, x1, x2, spec.allow_telescoping)?, true)
        }
        DesignVariant::DesignB { h } => (design_b(&chain, &p, h)?, false),
    };
    let elements = with_joint_discs(&chain, guides);
    Ok(GuideLayout::new(elements, spec.variant.to_string())?.with_dip_stop(dip_stop))
}

fn traditional(chain: &PhalanxChain, p: &Placement) -> Vec<GuideElement> {
    let ring = chain.dorsal_offset.max(chain.joint_radius.max()) + p.ring_clearance;
    vec![
        GuideElement::via(Body::Palm, -0.5 * chain.palm_len, ring),
        GuideElement::via(Body::Proximal, 0.5 * chain.proximal_len, ring),
        GuideElement::via(Body::Middle, 0.5 * chain.middle_len, ring),
        GuideElement::via(Body::Distal, 0.5 * chain.distal_len, ring),
        GuideElement::anchor(Body::Distal, chain.distal_len, ring),
    ]
}

fn baseline(chain: &PhalanxChain, p: &Placement) -> Result<Vec<GuideElement>> {
    let h = p.pathway_height;
    positive("pathway_height", h)?;
    if h <= chain.dorsal_offset {
        return incompatible(format!(
            "pathway height {h} mm does not clear the dorsal surface ({} mm)",
            chain.dorsal_offset
        ));
    }
    if !(p.channel_fraction > 0.0 && p.channel_fraction < 1.0) {
        return incompatible(format!(
            "channel fraction {} must lie in (0, 1)",
            p.channel_fraction
        ));
    }
    let m = 0.5 * (1.0 - p.channel_fraction);
    let span = |len: f64| (len * m, len * (1.0 - m));
    let (palm_a, palm_b) = span(chain.palm_len);
    let (prox_a, prox_b) = span(chain.proximal_len);
    let (mid_a, mid_b) = span(chain.middle_len);
    Ok(vec![
        GuideElement::channel(Body::Palm, -palm_b, -palm_a, h),
        GuideElement::channel(Body::Proximal, prox_a, prox_b, h),
        GuideElement::channel(Body::Middle, mid_a, mid_b, h),
        GuideElement::anchor(Body::Middle, chain.middle_len, h),
    ])
}

fn design_a(
    chain: &PhalanxChain,
    p: &Placement,
    x1: f64,
    x2: f64,
    telescoping: bool,
) -> Result<Vec<GuideElement>> {
    positive("x1", x1)?;
    positive("x2", x2)?;
    if x1 < chain.dorsal_offset {
        return incompatible(format!(
            "x1 = {x1} mm puts the tendon below the dorsal surface ({} mm)",
            chain.dorsal_offset
        ));
    }
    let funnel_x = if telescoping { -p.funnel_depth } else { 0.0 };
    // arm end position along the extended finger, measured from the MCP
    let arm_end = chain.proximal_len - x2;
    if !telescoping && arm_end < funnel_x + p.funnel_clearance {
        return incompatible(format!(
            "fingertip piece (x2 = {x2} mm) collides with the funnel at full extension; \
             enable telescoping"
        ));
    }
    Ok(vec![
        GuideElement::via(Body::Palm, funnel_x, p.funnel_height),
        // the piece is rigid on the middle/distal assembly: a post of height
        // x1 over the PIP, an arm reaching x2 back, ending in a hook
        GuideElement::anchor(Body::Middle, -x2, x1 + p.hook_rise),
    ])
}

fn design_b(chain: &PhalanxChain, p: &Placement, h: f64) -> Result<Vec<GuideElement>> {
    positive("h", h)?;
    let floor = chain
        .dorsal_offset
        .max(chain.joint_radius.mcp)
        .max(chain.joint_radius.pip);
    if h <= floor {
        return incompatible(format!(
            "h = {h} mm does not clear the finger surface ({floor} mm)"
        ));
    }
    let reach = p.sleeve_reach;
    if !(reach > 0.0 && reach < 0.5) {
        return incompatible(format!("sleeve reach {reach} must lie in (0, 0.5)"));
    }
    let sleeve = |owner: Body, joint: Joint, entry_x: f64, exit_x: f64| GuideElement {
        owner,
        kind: GuideKind::Channel {
            entry: Vec2::new(entry_x, h),
            exit: Vec2::new(exit_x, h),
            height: h,
            spans: Some(joint),
        },
    };
    // entries are measured in the owner frame, whose origin is the proximal
    // joint of that body
    Ok(vec![
        sleeve(
            Body::Palm,
            Joint::Mcp,
            -reach * chain.palm_len,
            reach * chain.proximal_len,
        ),
        sleeve(
            Body::Proximal,
            Joint::Pip,
            (1.0 - reach) * chain.proximal_len,
            reach * chain.middle_len,
        ),
        GuideElement::anchor(Body::Middle, chain.middle_len, h),
    ])
}

/// Inserts a knuckle disc wherever consecutive guides sit on different
/// bodies, except across joints already covered by a sleeve.
fn with_joint_discs(chain: &PhalanxChain, guides: Vec<GuideElement>) -> Vec<GuideElement> {
    let mut out = Vec::with_capacity(guides.len() + 3);
    let mut prev_end: Option<Body> = None;
    for g in guides {
        if let Some(end) = prev_end {
            for joint in Joint::ALL {
                let k = joint.distal_body();
                let radius = chain.joint_radius.get(joint);
                if end < k && k <= g.owner && radius > 0.0 {
                    out.push(GuideElement {
                        owner: joint.proximal_body(),
                        kind: GuideKind::WrapDisc {
                            center: chain.joint_in_proximal_frame(joint),
                            radius,
                            engagement: Engagement::OnContact,
                        },
                    });
                }
            }
        }
        prev_end = Some(g.end_body());
        out.push(g);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain() -> PhalanxChain {
        PhalanxChain::default()
    }

    #[test]
    fn design_b_has_two_sleeves_and_anchor() {
        let layout = instantiate_design(&DesignSpec::design_b(17.0), &chain()).unwrap();
        let e = layout.elements();
        assert_eq!(e.len(), 3);
        assert_eq!(layout.channel_count(), 2);
        for g in &e[..2] {
            match g.kind {
                GuideKind::Channel { height, spans, .. } => {
                    assert_eq!(height, 17.0);
                    assert!(spans.is_some());
                }
                other => panic!("expected channel, got {other:?}"),
            }
        }
        assert!(e[2].is_anchor());
    }

    #[test]
    fn design_a_fixed_values_accepted() {
        let layout = instantiate_design(&DesignSpec::design_a(17.0, 19.0), &chain()).unwrap();
        assert!(layout.dip_stop());
        assert!(layout.elements().last().unwrap().is_anchor());
    }

    #[test]
    fn design_a_below_skin_rejected() {
        let err = instantiate_design(&DesignSpec::design_a(2.0, 19.0), &chain()).unwrap_err();
        assert!(matches!(err, Error::IncompatibleParameters(_)));
    }

    #[test]
    fn design_a_collision_needs_telescoping() {
        let short = PhalanxChain {
            proximal_len: 20.0,
            ..chain()
        };
        let spec = DesignSpec::design_a(17.0, 19.0);
        assert!(matches!(
            instantiate_design(&spec, &short),
            Err(Error::IncompatibleParameters(_))
        ));
        let spec = DesignSpec {
            allow_telescoping: true,
            ..spec
        };
        assert!(instantiate_design(&spec, &short).is_ok());
    }

    #[test]
    fn non_positive_parameters_rejected() {
        for spec in [
            DesignSpec::design_a(-3.0, 19.0),
            DesignSpec::design_a(17.0, 0.0),
            DesignSpec::design_b(0.0),
            DesignSpec::design_b(4.0),
        ] {
            assert!(instantiate_design(&spec, &chain()).is_err(), "{spec:?}");
        }
    }

    #[test]
    fn baseline_gets_knuckle_discs_between_pathways() {
        let layout = instantiate_design(&DesignSpec::baseline(), &chain()).unwrap();
        let discs = layout
            .elements()
            .iter()
            .filter(|e| matches!(e.kind, GuideKind::WrapDisc { .. }))
            .count();
        assert_eq!(discs, 2);
        assert_eq!(layout.channel_count(), 3);
    }

    #[test]
    fn traditional_anchors_at_fingertip() {
        let layout = instantiate_design(&DesignSpec::traditional(), &chain()).unwrap();
        let last = layout.elements().last().unwrap();
        assert_eq!(last.owner, Body::Distal);
        assert!(last.is_anchor());
    }

    #[test]
    fn variant_names_parse() {
        assert_eq!("A".parse::<DesignVariant>().unwrap(), DesignVariant::design_a());
        assert_eq!(
            "b(12.5)".parse::<DesignVariant>().unwrap(),
            DesignVariant::DesignB { h: 12.5 }
        );
        assert_eq!(
            " Baseline ".parse::<DesignVariant>().unwrap(),
            DesignVariant::Baseline
        );
        assert!("A(1)".parse::<DesignVariant>().is_err());
        assert!("C".parse::<DesignVariant>().is_err());
        assert!("B(17".parse::<DesignVariant>().is_err());
        let v = DesignVariant::DesignA { x1: 14.0, x2: 22.0 };
        assert_eq!(v.to_string().parse::<DesignVariant>().unwrap(), v);
    }

    #[test]
    fn layout_rejects_misordered_guides() {
        let elements = vec![
            GuideElement::via(Body::Middle, 0.0, 10.0),
            GuideElement::anchor(Body::Proximal, 0.0, 10.0),
        ];
        assert!(GuideLayout::new(elements, "bad").is_err());
        let elements = vec![
            GuideElement::anchor(Body::Proximal, 0.0, 10.0),
            GuideElement::via(Body::Middle, 0.0, 10.0),
        ];
        assert!(GuideLayout::new(elements, "bad").is_err());
    }
}
