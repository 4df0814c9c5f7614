//! Planar three-link finger: geometry, forward kinematics, joint coupling and
//! torsion-spring spasticity.
//!
//! World frame: origin at the MCP joint center, +x along the extended finger,
//! +y dorsal. Joint angles are in degrees at every public interface, 0° fully
//! extended and -90° fully flexed; flexion rotates links clockwise.

use std::fmt;

use crate::error::{Error, Result};
use crate::geometry::Vec2;

pub const ROM_MIN_DEG: f64 = -90.0;
pub const ROM_MAX_DEG: f64 = 0.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Joint {
    Mcp,
    Pip,
    Dip,
}

impl Joint {
    pub const ALL: [Joint; 3] = [Joint::Mcp, Joint::Pip, Joint::Dip];

    /// Index of the body immediately distal to the joint.
    pub fn distal_body(self) -> Body {
        match self {
            Joint::Mcp => Body::Proximal,
            Joint::Pip => Body::Middle,
            Joint::Dip => Body::Distal,
        }
    }

    pub fn proximal_body(self) -> Body {
        match self {
            Joint::Mcp => Body::Palm,
            Joint::Pip => Body::Proximal,
            Joint::Dip => Body::Middle,
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Joint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Joint::Mcp => "MCP",
            Joint::Pip => "PIP",
            Joint::Dip => "DIP",
        })
    }
}

/// Rigid bodies of the chain, proximal to distal.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Body {
    Palm,
    Proximal,
    Middle,
    Distal,
}

impl Body {
    pub fn rank(self) -> u8 {
        self as u8
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct JointRadii {
    pub mcp: f64,
    pub pip: f64,
    pub dip: f64,
}

impl JointRadii {
    pub fn get(&self, joint: Joint) -> f64 {
        match joint {
            Joint::Mcp => self.mcp,
            Joint::Pip => self.pip,
            Joint::Dip => self.dip,
        }
    }

    pub fn max(&self) -> f64 {
        self.mcp.max(self.pip).max(self.dip)
    }
}

/// Finger dimensions in millimetres.
///
/// `dorsal_offset` is the height of the skin on the back of each phalanx
/// above the link axis; `joint_radius` is the knuckle surface a tendon wraps
/// when it would otherwise cut across a joint. `palm_len` is the length of the
/// back-of-hand mounting region proximal to the MCP joint.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhalanxChain {
    pub proximal_len: f64,
    pub middle_len: f64,
    pub distal_len: f64,
    pub dorsal_offset: f64,
    pub joint_radius: JointRadii,
    pub palm_len: f64,
}

impl Default for PhalanxChain {
    fn default() -> Self {
        Self {
            proximal_len: 45.0,
            middle_len: 25.0,
            distal_len: 20.0,
            dorsal_offset: 5.0,
            joint_radius: JointRadii {
                mcp: 8.0,
                pip: 6.0,
                dip: 5.0,
            },
            palm_len: 60.0,
        }
    }
}

impl PhalanxChain {
    pub fn total_len(&self) -> f64 {
        self.proximal_len + self.middle_len + self.distal_len
    }

    /// Length of the body distal to `joint`.
    pub fn link_len(&self, joint: Joint) -> f64 {
        match joint {
            Joint::Mcp => self.proximal_len,
            Joint::Pip => self.middle_len,
            Joint::Dip => self.distal_len,
        }
    }

    /// Joint center expressed in the frame of the body proximal to it.
    pub fn joint_in_proximal_frame(&self, joint: Joint) -> Vec2 {
        match joint {
            Joint::Mcp => Vec2::ZERO,
            Joint::Pip => Vec2::new(self.proximal_len, 0.0),
            Joint::Dip => Vec2::new(self.middle_len, 0.0),
        }
    }

    /// Stable textual digest of the dimensions, used in table metadata.
    pub fn fingerprint(&self) -> String {
        format!(
            "p{}-m{}-d{}-o{}-r{}/{}/{}-palm{}",
            self.proximal_len,
            self.middle_len,
            self.distal_len,
            self.dorsal_offset,
            self.joint_radius.mcp,
            self.joint_radius.pip,
            self.joint_radius.dip,
            self.palm_len
        )
    }
}

pub fn validate_chain(chain: PhalanxChain) -> Result<PhalanxChain> {
    let positive = [
        ("proximal_len", chain.proximal_len),
        ("middle_len", chain.middle_len),
        ("distal_len", chain.distal_len),
        ("palm_len", chain.palm_len),
    ];
    for (field, v) in positive {
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::InvalidGeometry {
                field,
                reason: format!("must be a positive length, got {v}"),
            });
        }
    }
    if !(chain.dorsal_offset.is_finite() && chain.dorsal_offset >= 0.0) {
        return Err(Error::InvalidGeometry {
            field: "dorsal_offset",
            reason: format!("must be non-negative, got {}", chain.dorsal_offset),
        });
    }
    for (joint, field) in [
        (Joint::Mcp, "joint_radius.mcp"),
        (Joint::Pip, "joint_radius.pip"),
        (Joint::Dip, "joint_radius.dip"),
    ] {
        let r = chain.joint_radius.get(joint);
        if !(r.is_finite() && r >= 0.0) {
            return Err(Error::InvalidGeometry {
                field,
                reason: format!("must be non-negative, got {r}"),
            });
        }
        // a knuckle may not be larger than either link it joins
        let proximal = match joint {
            Joint::Mcp => chain.palm_len,
            Joint::Pip => chain.proximal_len,
            Joint::Dip => chain.middle_len,
        };
        let limit = proximal.min(chain.link_len(joint));
        if r >= limit {
            return Err(Error::InvalidGeometry {
                field,
                reason: format!("{r} mm does not fit the adjacent phalanx ({limit} mm)"),
            });
        }
    }
    Ok(chain)
}

/// Joint angles in degrees.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct JointConfig {
    pub mcp: f64,
    pub pip: f64,
    pub dip: f64,
}

impl JointConfig {
    pub const EXTENDED: JointConfig = JointConfig {
        mcp: 0.0,
        pip: 0.0,
        dip: 0.0,
    };

    pub fn new(mcp: f64, pip: f64, dip: f64) -> Result<Self> {
        let c = Self { mcp, pip, dip };
        c.check_rom()?;
        Ok(c)
    }

    pub fn uniform(angle: f64) -> Self {
        Self {
            mcp: angle,
            pip: angle,
            dip: angle,
        }
    }

    pub fn get(&self, joint: Joint) -> f64 {
        match joint {
            Joint::Mcp => self.mcp,
            Joint::Pip => self.pip,
            Joint::Dip => self.dip,
        }
    }

    pub fn set(&mut self, joint: Joint, deg: f64) {
        match joint {
            Joint::Mcp => self.mcp = deg,
            Joint::Pip => self.pip = deg,
            Joint::Dip => self.dip = deg,
        }
    }

    pub fn check_rom(&self) -> Result<()> {
        self.check_rom_with(false)
    }

    /// ROM check; `allow_dip_hyperextension` admits DIP angles above 0° for
    /// hyperextension diagnostics.
    pub fn check_rom_with(&self, allow_dip_hyperextension: bool) -> Result<()> {
        let dip_max = if allow_dip_hyperextension { 90.0 } else { ROM_MAX_DEG };
        check_angle("theta_mcp", self.mcp, ROM_MAX_DEG)?;
        check_angle("theta_pip", self.pip, ROM_MAX_DEG)?;
        check_angle("theta_dip", self.dip, dip_max)
    }

    pub(crate) fn to_pose(self) -> Pose {
        Pose {
            mcp: self.mcp.to_radians(),
            pip: self.pip.to_radians(),
            dip: self.dip.to_radians(),
        }
    }
}

fn check_angle(what: &'static str, deg: f64, max: f64) -> Result<()> {
    if deg.is_finite() && (ROM_MIN_DEG..=max).contains(&deg) {
        Ok(())
    } else {
        Err(Error::OutOfRange {
            what,
            value: deg,
            range: "[-90°, 0°]",
        })
    }
}

/// Joint angles in radians without range checks. Finite differencing needs
/// to step slightly outside the ROM.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub(crate) struct Pose {
    pub mcp: f64,
    pub pip: f64,
    pub dip: f64,
}

impl Pose {
    pub fn get(&self, joint: Joint) -> f64 {
        match joint {
            Joint::Mcp => self.mcp,
            Joint::Pip => self.pip,
            Joint::Dip => self.dip,
        }
    }

    pub fn with(mut self, joint: Joint, rad: f64) -> Pose {
        match joint {
            Joint::Mcp => self.mcp = rad,
            Joint::Pip => self.pip = rad,
            Joint::Dip => self.dip = rad,
        }
        self
    }
}

/// Placement of one rigid body: `origin` is its proximal joint center and
/// `angle` the absolute orientation of its long axis in radians.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Frame {
    pub origin: Vec2,
    pub angle: f64,
}

impl Frame {
    pub fn to_world(&self, local: Vec2) -> Vec2 {
        self.origin + local.rotated(self.angle)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinkFrames {
    pub palm: Frame,
    pub proximal: Frame,
    pub middle: Frame,
    pub distal: Frame,
    pub fingertip: Vec2,
}

impl LinkFrames {
    pub fn frame(&self, body: Body) -> &Frame {
        match body {
            Body::Palm => &self.palm,
            Body::Proximal => &self.proximal,
            Body::Middle => &self.middle,
            Body::Distal => &self.distal,
        }
    }

    pub fn to_world(&self, body: Body, local: Vec2) -> Vec2 {
        self.frame(body).to_world(local)
    }

    pub fn joint_center(&self, joint: Joint) -> Vec2 {
        self.frame(joint.distal_body()).origin
    }
}

pub(crate) fn frames_at(chain: &PhalanxChain, pose: &Pose) -> LinkFrames {
    let palm = Frame {
        origin: Vec2::ZERO,
        angle: 0.0,
    };
    let a1 = pose.mcp;
    let a2 = a1 + pose.pip;
    let a3 = a2 + pose.dip;
    let proximal = Frame {
        origin: Vec2::ZERO,
        angle: a1,
    };
    let middle = Frame {
        origin: proximal.to_world(Vec2::new(chain.proximal_len, 0.0)),
        angle: a2,
    };
    let distal = Frame {
        origin: middle.to_world(Vec2::new(chain.middle_len, 0.0)),
        angle: a3,
    };
    let fingertip = distal.to_world(Vec2::new(chain.distal_len, 0.0));
    LinkFrames {
        palm,
        proximal,
        middle,
        distal,
        fingertip,
    }
}

pub fn forward_kinematics(chain: &PhalanxChain, config: &JointConfig) -> Result<LinkFrames> {
    config.check_rom()?;
    Ok(frames_at(chain, &config.to_pose()))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DipCoupling {
    /// DIP held at 0°.
    Locked,
    /// θ_dip = ratio · θ_pip.
    Linear { ratio: f64 },
}

/// How a single drive angle maps onto the joints. MCP and PIP always follow
/// the drive angle together; the DIP rule is selectable.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CouplingRule {
    pub dip: DipCoupling,
}

impl Default for CouplingRule {
    fn default() -> Self {
        Self {
            dip: DipCoupling::Locked,
        }
    }
}

impl CouplingRule {
    pub fn linear_dip(ratio: f64) -> Self {
        Self {
            dip: DipCoupling::Linear { ratio },
        }
    }

    pub fn dip_for(&self, pip_deg: f64) -> f64 {
        match self.dip {
            DipCoupling::Locked => 0.0,
            DipCoupling::Linear { ratio } => ratio * pip_deg,
        }
    }
}

pub fn apply_coupling(drive_deg: f64, rule: &CouplingRule) -> Result<JointConfig> {
    check_angle("drive_angle", drive_deg, ROM_MAX_DEG)?;
    if let DipCoupling::Linear { ratio } = rule.dip {
        if !(ratio.is_finite() && (0.0..=1.0).contains(&ratio)) {
            return Err(Error::OutOfRange {
                what: "dip_ratio",
                value: ratio,
                range: "[0, 1]",
            });
        }
    }
    JointConfig::new(drive_deg, drive_deg, rule.dip_for(drive_deg))
}

#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct JointTorques {
    pub mcp: f64,
    pub pip: f64,
    pub dip: f64,
}

impl JointTorques {
    pub fn get(&self, joint: Joint) -> f64 {
        match joint {
            Joint::Mcp => self.mcp,
            Joint::Pip => self.pip,
            Joint::Dip => self.dip,
        }
    }
}

/// Torsion springs standing in for spastic flexor tone.
///
/// `k_*` are relative stiffnesses in N·mm/rad, multiplied by `scale`. The
/// spring is relaxed at `rest_angle` (degrees) and resists extension away
/// from it linearly.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TorsionSpringSet {
    pub k_dip: f64,
    pub k_pip: f64,
    pub k_mcp: f64,
    pub rest_angle: f64,
    pub scale: f64,
}

impl TorsionSpringSet {
    /// Artificial test finger, DIP:PIP:MCP = 3.5 : 76.9 : 54.9.
    pub fn artificial() -> Self {
        Self::from_ratio(3.5, 76.9, 54.9)
    }

    /// Stroke-survivor extension torque proportions 0.03 : 0.66 : 0.46.
    pub fn cruz() -> Self {
        Self::from_ratio(0.03, 0.66, 0.46)
    }

    pub fn from_ratio(k_dip: f64, k_pip: f64, k_mcp: f64) -> Self {
        Self {
            k_dip,
            k_pip,
            k_mcp,
            rest_angle: ROM_MIN_DEG,
            scale: 1.0,
        }
    }

    pub fn with_scale(mut self, scale: f64) -> Self {
        self.scale = scale;
        self
    }

    pub fn validate(&self) -> Result<()> {
        for (field, v) in [
            ("k_dip", self.k_dip),
            ("k_pip", self.k_pip),
            ("k_mcp", self.k_mcp),
            ("scale", self.scale),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::OutOfRange {
                    what: field,
                    value: v,
                    range: "[0, inf)",
                });
            }
        }
        check_angle("rest_angle", self.rest_angle, ROM_MAX_DEG)
    }

    /// Effective stiffness in N·mm/rad.
    pub fn stiffness(&self, joint: Joint) -> f64 {
        self.scale
            * match joint {
                Joint::Mcp => self.k_mcp,
                Joint::Pip => self.k_pip,
                Joint::Dip => self.k_dip,
            }
    }

    pub(crate) fn torque_rad(&self, joint: Joint, angle_rad: f64) -> f64 {
        self.stiffness(joint) * (angle_rad - self.rest_angle.to_radians())
    }

    pub fn energy(&self, config: &JointConfig) -> f64 {
        Joint::ALL
            .iter()
            .map(|&j| {
                let d = (config.get(j) - self.rest_angle).to_radians();
                0.5 * self.stiffness(j) * d * d
            })
            .sum()
    }
}

/// Flexion-resisting spring torques (N·mm); positive means the spring pulls
/// the joint back toward flexion.
pub fn spring_torques(springs: &TorsionSpringSet, config: &JointConfig) -> Result<JointTorques> {
    config.check_rom()?;
    let pose = config.to_pose();
    Ok(JointTorques {
        mcp: springs.torque_rad(Joint::Mcp, pose.mcp),
        pip: springs.torque_rad(Joint::Pip, pose.pip),
        dip: springs.torque_rad(Joint::Dip, pose.dip),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_chain_is_valid() {
        let c = validate_chain(PhalanxChain::default()).unwrap();
        assert_eq!(
            (c.proximal_len, c.middle_len, c.distal_len),
            (45.0, 25.0, 20.0)
        );
    }

    #[test]
    fn zero_length_link_rejected() {
        let chain = PhalanxChain {
            middle_len: 0.0,
            ..Default::default()
        };
        match validate_chain(chain) {
            Err(Error::InvalidGeometry { field, .. }) => assert_eq!(field, "middle_len"),
            other => panic!("expected InvalidGeometry, got {other:?}"),
        }
    }

    #[test]
    fn oversized_knuckle_rejected() {
        let mut chain = PhalanxChain::default();
        chain.joint_radius.pip = 30.0;
        match validate_chain(chain) {
            Err(Error::InvalidGeometry { field, .. }) => assert_eq!(field, "joint_radius.pip"),
            other => panic!("expected InvalidGeometry, got {other:?}"),
        }
    }

    #[test]
    fn negative_offset_rejected() {
        let chain = PhalanxChain {
            dorsal_offset: -1.0,
            ..Default::default()
        };
        assert!(validate_chain(chain).is_err());
    }

    #[test]
    fn identity_pose_is_collinear() {
        let chain = PhalanxChain::default();
        let f = forward_kinematics(&chain, &JointConfig::EXTENDED).unwrap();
        for p in [f.middle.origin, f.distal.origin, f.fingertip] {
            assert!(p.y.abs() < 1e-12 && p.x > 0.0);
        }
        assert!((f.fingertip.x - 90.0).abs() < 1e-12);
    }

    #[test]
    fn right_angle_mcp_points_down() {
        let chain = PhalanxChain::default();
        let f = forward_kinematics(&chain, &JointConfig::new(-90.0, 0.0, 0.0).unwrap()).unwrap();
        assert!(f.middle.origin.x.abs() < 1e-12);
        assert!((f.middle.origin.y + 45.0).abs() < 1e-12);
        assert!((f.fingertip.y + 90.0).abs() < 1e-12);
    }

    #[test]
    fn pip_center_at_forty_five_degrees() {
        let chain = PhalanxChain::default();
        let f = forward_kinematics(&chain, &JointConfig::new(-45.0, -45.0, 0.0).unwrap()).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert!((f.middle.origin.x - 45.0 * s).abs() < 1e-12);
        assert!((f.middle.origin.y + 45.0 * s).abs() < 1e-12);
        // middle phalanx points straight down after 90° of accumulated flexion
        assert!((f.middle.angle + std::f64::consts::FRAC_PI_2).abs() < 1e-12);
    }

    #[test]
    fn out_of_rom_rejected() {
        let chain = PhalanxChain::default();
        let c = JointConfig {
            mcp: 5.0,
            pip: 0.0,
            dip: 0.0,
        };
        assert!(matches!(
            forward_kinematics(&chain, &c),
            Err(Error::OutOfRange { .. })
        ));
        assert!(JointConfig::new(0.0, -91.0, 0.0).is_err());
        assert!(JointConfig::new(0.0, 0.0, 10.0).is_err());
        let hyper = JointConfig {
            mcp: 0.0,
            pip: 0.0,
            dip: 10.0,
        };
        assert!(hyper.check_rom_with(true).is_ok());
    }

    #[test]
    fn coupling_examples() {
        let locked = CouplingRule::default();
        let c = apply_coupling(-90.0, &locked).unwrap();
        assert_eq!((c.mcp, c.pip, c.dip), (-90.0, -90.0, 0.0));
        let c = apply_coupling(0.0, &locked).unwrap();
        assert_eq!((c.mcp, c.pip, c.dip), (0.0, 0.0, 0.0));
        let c = apply_coupling(-30.0, &CouplingRule::linear_dip(0.67)).unwrap();
        assert_eq!((c.mcp, c.pip), (-30.0, -30.0));
        assert!((c.dip - (-20.1)).abs() < 1e-12);
        assert!(apply_coupling(-95.0, &locked).is_err());
        assert!(apply_coupling(-30.0, &CouplingRule::linear_dip(1.5)).is_err());
    }

    #[test]
    fn springs_zero_at_rest() {
        let s = TorsionSpringSet::artificial();
        let t = spring_torques(&s, &JointConfig::uniform(-90.0)).unwrap();
        assert_eq!((t.mcp, t.pip, t.dip), (0.0, 0.0, 0.0));
    }

    #[test]
    fn artificial_ratio_at_extension() {
        let s = TorsionSpringSet::artificial().with_scale(7.3);
        let t = spring_torques(&s, &JointConfig::EXTENDED).unwrap();
        assert!((t.pip / t.mcp - 76.9 / 54.9).abs() < 1e-12);
        assert!((t.pip / t.mcp - 1.4007).abs() < 1e-4);
    }

    #[test]
    fn half_way_gives_half_torque() {
        let s = TorsionSpringSet::artificial();
        let full = spring_torques(&s, &JointConfig::EXTENDED).unwrap();
        let half = spring_torques(&s, &JointConfig::new(-45.0, -45.0, -45.0).unwrap()).unwrap();
        for j in Joint::ALL {
            assert!((half.get(j) - 0.5 * full.get(j)).abs() <= 1e-12 * full.get(j).abs());
        }
    }

    #[test]
    fn energy_matches_quadratic() {
        let s = TorsionSpringSet::from_ratio(1.0, 2.0, 3.0);
        let e = s.energy(&JointConfig::EXTENDED);
        let q = std::f64::consts::FRAC_PI_2.powi(2);
        assert!((e - 0.5 * 6.0 * q).abs() < 1e-12);
    }
}
