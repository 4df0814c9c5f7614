use crate::error::{Error, Result};
use crate::fingermodel::{Body, Joint};
use crate::geometry::Vec2;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Engagement {
    /// The tendon wraps the disc only when the free chord would cut into it.
    OnContact,
    /// The tendon always follows the disc surface.
    Always,
}

/// Geometry of one guide, expressed in the frame of its owner body.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum GuideKind {
    /// Terminal attachment of the tendon.
    Anchor { point: Vec2 },
    /// Eyelet the tendon passes through.
    Via { point: Vec2 },
    /// Raised pathway. Without `spans` both ends sit on the owner body and
    /// the tendon runs straight between them. With `spans` the pathway is
    /// secured on the owner (the body proximal to the joint), bends over the
    /// joint as a sleeve of radius `height`, and its free end `exit` rests on
    /// the body distal to the joint, expressed in that body's frame.
    Channel {
        entry: Vec2,
        exit: Vec2,
        height: f64,
        spans: Option<Joint>,
    },
    /// Circular surface the tendon may wrap on its dorsal side.
    WrapDisc {
        center: Vec2,
        radius: f64,
        engagement: Engagement,
    },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GuideElement {
    pub owner: Body,
    pub kind: GuideKind,
}

impl GuideElement {
    pub fn anchor(owner: Body, x: f64, y: f64) -> Self {
        Self {
            owner,
            kind: GuideKind::Anchor {
                point: Vec2::new(x, y),
            },
        }
    }

    pub fn via(owner: Body, x: f64, y: f64) -> Self {
        Self {
            owner,
            kind: GuideKind::Via {
                point: Vec2::new(x, y),
            },
        }
    }

    pub fn channel(owner: Body, entry_x: f64, exit_x: f64, height: f64) -> Self {
        Self {
            owner,
            kind: GuideKind::Channel {
                entry: Vec2::new(entry_x, height),
                exit: Vec2::new(exit_x, height),
                height,
                spans: None,
            },
        }
    }

    /// Last body the element touches.
    pub fn end_body(&self) -> Body {
        match self.kind {
            GuideKind::Channel {
                spans: Some(joint), ..
            } => joint.distal_body(),
            _ => self.owner,
        }
    }

    pub fn is_anchor(&self) -> bool {
        matches!(self.kind, GuideKind::Anchor { .. })
    }
}

/// A design instantiated as an ordered list of guides, palm first.
#[derive(Clone, Debug, PartialEq)]
pub struct GuideLayout {
    elements: Vec<GuideElement>,
    design: String,
    dip_stop: bool,
}

impl GuideLayout {
    pub fn new(elements: Vec<GuideElement>, design: impl Into<String>) -> Result<Self> {
        let layout = Self {
            elements,
            design: design.into(),
            dip_stop: false,
        };
        layout.validate()?;
        Ok(layout)
    }

    /// Marks the layout as mechanically blocking DIP hyperextension.
    pub fn with_dip_stop(mut self, stop: bool) -> Self {
        self.dip_stop = stop;
        self
    }

    pub fn elements(&self) -> &[GuideElement] {
        &self.elements
    }

    pub fn design(&self) -> &str {
        &self.design
    }

    pub fn dip_stop(&self) -> bool {
        self.dip_stop
    }

    pub fn channel_count(&self) -> usize {
        self.elements
            .iter()
            .filter(|e| matches!(e.kind, GuideKind::Channel { .. }))
            .count()
    }

    fn validate(&self) -> Result<()> {
        let infeasible = |msg: String| Err(Error::IncompatibleParameters(msg));
        let Some(last) = self.elements.last() else {
            return infeasible("layout has no guides".into());
        };
        if !last.is_anchor() {
            return infeasible("layout must end with an anchor".into());
        }
        let anchors = self.elements.iter().filter(|e| e.is_anchor()).count();
        if anchors != 1 {
            return infeasible(format!("layout has {anchors} anchors, expected exactly one"));
        }
        if matches!(self.elements[0].kind, GuideKind::WrapDisc { .. }) {
            return infeasible("layout cannot start with a wrap disc".into());
        }
        let mut reached = Body::Palm;
        for (i, e) in self.elements.iter().enumerate() {
            if e.owner < reached {
                return infeasible(format!(
                    "guide {i} on {:?} comes after a guide on {reached:?}",
                    e.owner
                ));
            }
            match e.kind {
                GuideKind::Anchor { point } | GuideKind::Via { point } => {
                    if !point.is_finite() {
                        return infeasible(format!("guide {i} has a non-finite point"));
                    }
                }
                GuideKind::Channel {
                    entry,
                    exit,
                    height,
                    spans,
                } => {
                    if !(height.is_finite() && height >= 0.0) {
                        return infeasible(format!("channel {i} height {height} must be >= 0"));
                    }
                    if !(entry.is_finite() && exit.is_finite()) {
                        return infeasible(format!("channel {i} has a non-finite end"));
                    }
                    match spans {
                        None if exit.x <= entry.x => {
                            return infeasible(format!(
                                "channel {i} exit must lie distal to its entry"
                            ));
                        }
                        Some(joint) if joint.proximal_body() != e.owner => {
                            return infeasible(format!(
                                "channel {i} spanning {joint} must be owned by {:?}",
                                joint.proximal_body()
                            ));
                        }
                        Some(_) if height <= 0.0 => {
                            return infeasible(format!("sleeve channel {i} needs a positive height"));
                        }
                        _ => {}
                    }
                }
                GuideKind::WrapDisc { center, radius, .. } => {
                    if !(radius.is_finite() && radius > 0.0 && center.is_finite()) {
                        return infeasible(format!("wrap disc {i} needs a positive radius"));
                    }
                }
            }
            if i + 1 < self.elements.len() && e.is_anchor() {
                return infeasible("anchor must be the final guide".into());
            }
            reached = e.end_body();
        }
        Ok(())
    }
}
