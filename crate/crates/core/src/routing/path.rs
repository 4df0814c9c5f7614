use crate::error::{Error, Result};
use crate::fingermodel::{frames_at, Joint, JointConfig, LinkFrames, PhalanxChain, Pose};
use crate::geometry::{
    clockwise_sweep, signed_line_distance, tangent_between, tangent_from_point, tangent_to_point,
    Vec2,
};

use super::layout::{Engagement, GuideKind, GuideLayout};

/// Guide points closer than this to a disc interior count as inside it.
const INSIDE_TOL: f64 = 1e-9;
/// Chords must cut a disc by more than this before the tendon wraps it.
const PENETRATION_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Contact {
    /// Straight chord through free space.
    Free,
    /// Straight run or bend held by a pathway.
    Channel,
    /// Arc wrapped on a knuckle disc.
    Wrapped,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Arc {
    pub center: Vec2,
    pub radius: f64,
    /// Clockwise angle travelled, radians. Negative only on pathway sleeves
    /// pushed past full extension.
    pub sweep: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PathSegment {
    pub contact: Contact,
    pub start: Vec2,
    pub end: Vec2,
    pub arc: Option<Arc>,
    pub length: f64,
    start_rank: u8,
    end_rank: u8,
}

impl PathSegment {
    pub fn is_straight(&self) -> bool {
        self.arc.is_none()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TendonPath {
    pub vertices: Vec<Vec2>,
    pub segments: Vec<PathSegment>,
    pub length: f64,
    /// Index into `segments` of the straight segment crossing each joint,
    /// in MCP, PIP, DIP order. `None` when the tendon ends before the joint.
    pub crossings: [Option<usize>; 3],
}

impl TendonPath {
    pub fn crossing(&self, joint: Joint) -> Option<&PathSegment> {
        self.crossings[joint.index()].map(|i| &self.segments[i])
    }

    pub fn wrap_contacts(&self) -> usize {
        self.segments
            .iter()
            .filter(|s| s.contact == Contact::Wrapped)
            .count()
    }
}

#[derive(Clone, Copy, Debug)]
enum Node {
    Point {
        rank: u8,
        at: Vec2,
        channel_next: bool,
    },
    Disc(Disc),
}

#[derive(Clone, Copy, Debug)]
struct Disc {
    rank: u8,
    center: Vec2,
    radius: f64,
    always: bool,
    sleeve: bool,
}

#[derive(Clone, Copy, Debug)]
struct Stop {
    rank: u8,
    at: Vec2,
    channel_next: bool,
}

pub fn solve_path(
    layout: &GuideLayout,
    chain: &PhalanxChain,
    config: &JointConfig,
) -> Result<TendonPath> {
    config.check_rom_with(true)?;
    solve_at(layout, chain, &config.to_pose())
}

/// Path at a pose given in radians; poses may sit slightly outside the ROM
/// so that finite differences can straddle its limits.
pub(crate) fn solve_at(layout: &GuideLayout, chain: &PhalanxChain, pose: &Pose) -> Result<TendonPath> {
    let frames = frames_at(chain, pose);
    let nodes = build_nodes(layout, chain, &frames);
    check_points_outside_discs(&nodes)?;

    let mut segments = Vec::new();
    let mut i = 0;
    while i + 1 < nodes.len() {
        let Node::Point {
            rank,
            at,
            channel_next,
        } = nodes[i]
        else {
            return Err(Error::PathInfeasible("wrap disc without a preceding guide".into()));
        };
        let start = Stop {
            rank,
            at,
            channel_next,
        };
        let mut discs = Vec::new();
        let mut j = i + 1;
        while let Some(Node::Disc(d)) = nodes.get(j) {
            discs.push(*d);
            j += 1;
        }
        let Some(Node::Point { rank, at, .. }) = nodes.get(j).copied() else {
            return Err(Error::PathInfeasible("wrap disc after the anchor".into()));
        };
        let end = Stop {
            rank,
            at,
            channel_next: false,
        };
        solve_run(start, end, &discs, &mut segments)?;
        i = j;
    }

    let length = segments.iter().map(|s| s.length).sum();
    let mut vertices = Vec::with_capacity(segments.len() + 1);
    if let Some(Node::Point { at, .. }) = nodes.first() {
        vertices.push(*at);
    }
    vertices.extend(segments.iter().map(|s| s.end));

    let mut crossings = [None; 3];
    for joint in Joint::ALL {
        let k = joint.distal_body().rank();
        crossings[joint.index()] = segments.iter().position(|s| {
            s.is_straight() && s.length > 1e-12 && s.start_rank < k && k <= s.end_rank
        });
    }
    Ok(TendonPath {
        vertices,
        segments,
        length,
        crossings,
    })
}

fn build_nodes(layout: &GuideLayout, chain: &PhalanxChain, frames: &LinkFrames) -> Vec<Node> {
    let mut nodes = Vec::with_capacity(layout.elements().len() + 2);
    for e in layout.elements() {
        let rank = e.owner.rank();
        match e.kind {
            GuideKind::Anchor { point } | GuideKind::Via { point } => nodes.push(Node::Point {
                rank,
                at: frames.to_world(e.owner, point),
                channel_next: false,
            }),
            GuideKind::Channel {
                entry,
                exit,
                spans: None,
                ..
            } => {
                nodes.push(Node::Point {
                    rank,
                    at: frames.to_world(e.owner, entry),
                    channel_next: true,
                });
                nodes.push(Node::Point {
                    rank,
                    at: frames.to_world(e.owner, exit),
                    channel_next: false,
                });
            }
            GuideKind::Channel {
                entry,
                exit,
                height,
                spans: Some(joint),
            } => {
                let far = joint.distal_body();
                nodes.push(Node::Point {
                    rank,
                    at: frames.to_world(e.owner, entry),
                    channel_next: true,
                });
                nodes.push(Node::Disc(Disc {
                    rank,
                    center: frames.to_world(e.owner, chain.joint_in_proximal_frame(joint)),
                    radius: height,
                    always: true,
                    sleeve: true,
                }));
                nodes.push(Node::Point {
                    rank: far.rank(),
                    at: frames.to_world(far, exit),
                    channel_next: false,
                });
            }
            GuideKind::WrapDisc {
                center,
                radius,
                engagement,
            } => nodes.push(Node::Disc(Disc {
                rank,
                center: frames.to_world(e.owner, center),
                radius,
                always: engagement == Engagement::Always,
                sleeve: false,
            })),
        }
    }
    nodes
}

fn check_points_outside_discs(nodes: &[Node]) -> Result<()> {
    for n in nodes {
        let Node::Point { at, .. } = n else { continue };
        for d in nodes.iter().filter_map(|m| match m {
            Node::Disc(d) if !d.sleeve => Some(d),
            _ => None,
        }) {
            if at.distance(d.center) < d.radius - INSIDE_TOL {
                return Err(Error::PathInfeasible(format!(
                    "guide point ({:.3}, {:.3}) lies inside the knuckle disc of radius {}",
                    at.x, at.y, d.radius
                )));
            }
        }
    }
    Ok(())
}

/// Tangent points of the taut path between two fixed points over the active
/// discs: `(arrival, departure)` per active disc.
fn tangent_points(p: Vec2, q: Vec2, discs: &[&Disc]) -> Option<Vec<(Vec2, Vec2)>> {
    let n = discs.len();
    let mut pts = vec![(Vec2::ZERO, Vec2::ZERO); n];
    for k in 0..n {
        let d = discs[k];
        if k == 0 {
            pts[0].0 = tangent_from_point(p, d.center, d.radius)?;
        }
        if k + 1 < n {
            let e = discs[k + 1];
            let (a, b) = tangent_between(d.center, d.radius, e.center, e.radius)?;
            pts[k].1 = a;
            pts[k + 1].0 = b;
        } else {
            pts[k].1 = tangent_to_point(d.center, d.radius, q)?;
        }
    }
    Some(pts)
}

fn solve_run(start: Stop, end: Stop, discs: &[Disc], out: &mut Vec<PathSegment>) -> Result<()> {
    let mut active: Vec<bool> = discs.iter().map(|d| d.always).collect();
    let max_rounds = 4 * discs.len() + 4;
    for _ in 0..max_rounds {
        let on: Vec<&Disc> = discs
            .iter()
            .zip(&active)
            .filter_map(|(d, a)| a.then_some(d))
            .collect();
        let pts = tangent_points(start.at, end.at, &on).ok_or_else(|| {
            Error::PathInfeasible("no tangent line between consecutive wrap surfaces".into())
        })?;

        // release the conditional disc the tendon bends round the wrong way
        let mut worst: Option<(usize, f64)> = None;
        let mut slot = 0;
        for (idx, d) in discs.iter().enumerate() {
            if !active[idx] {
                continue;
            }
            let sweep = clockwise_sweep(d.center, pts[slot].0, pts[slot].1);
            if !d.always && sweep < 0.0 && worst.is_none_or(|(_, s)| sweep < s) {
                worst = Some((idx, sweep));
            }
            slot += 1;
        }
        if let Some((idx, _)) = worst {
            active[idx] = false;
            continue;
        }

        // engage the inactive disc cut deepest by a straight chord
        let mut deepest: Option<(usize, f64)> = None;
        for (idx, d) in discs.iter().enumerate() {
            if active[idx] {
                continue;
            }
            let before = (0..idx).filter(|&m| active[m]).count();
            let a = if before == 0 { start.at } else { pts[before - 1].1 };
            let b = if before == on.len() { end.at } else { pts[before].0 };
            let chord = b - a;
            let len = chord.norm();
            if len <= PENETRATION_TOL {
                continue;
            }
            let along = (d.center - a).dot(chord) / len;
            if along <= 0.0 || along >= len {
                continue;
            }
            let depth = d.radius - signed_line_distance(d.center, a, b);
            if depth > PENETRATION_TOL && deepest.is_none_or(|(_, x)| depth > x) {
                deepest = Some((idx, depth));
            }
        }
        if let Some((idx, _)) = deepest {
            active[idx] = true;
            continue;
        }

        emit(start, end, &on, &pts, out);
        return Ok(());
    }
    Err(Error::PathInfeasible(
        "wrap contacts did not settle between two guides".into(),
    ))
}

fn emit(start: Stop, end: Stop, on: &[&Disc], pts: &[(Vec2, Vec2)], out: &mut Vec<PathSegment>) {
    let straight = |a: Vec2, b: Vec2, ra: u8, rb: u8, contact: Contact| PathSegment {
        contact,
        start: a,
        end: b,
        arc: None,
        length: a.distance(b),
        start_rank: ra,
        end_rank: rb,
    };
    if on.is_empty() {
        let contact = if start.channel_next {
            Contact::Channel
        } else {
            Contact::Free
        };
        out.push(straight(start.at, end.at, start.rank, end.rank, contact));
        return;
    }
    let (mut at, mut rank, mut held) = (start.at, start.rank, start.channel_next);
    for (d, &(arrive, leave)) in on.iter().zip(pts) {
        let contact = if held || d.sleeve {
            Contact::Channel
        } else {
            Contact::Free
        };
        out.push(straight(at, arrive, rank, d.rank, contact));
        let sweep = clockwise_sweep(d.center, arrive, leave);
        out.push(PathSegment {
            contact: if d.sleeve {
                Contact::Channel
            } else {
                Contact::Wrapped
            },
            start: arrive,
            end: leave,
            arc: Some(Arc {
                center: d.center,
                radius: d.radius,
                sweep,
            }),
            length: d.radius * sweep,
            start_rank: d.rank,
            end_rank: d.rank,
        });
        at = leave;
        rank = d.rank;
        held = d.sleeve;
    }
    let contact = if held {
        Contact::Channel
    } else {
        Contact::Free
    };
    out.push(straight(at, end.at, rank, end.rank, contact));
}
