//! Small planar vector type and the circle-tangent constructions used for
//! tendon wrapping.
//!
//! Wrapping is always clockwise: travelling along the tendon from the palm
//! toward the fingertip, a wrapped circle lies on the right-hand side. With
//! the finger extended along +x and the dorsal side at +y this places the
//! tendon over the top (dorsal side) of every disc.

use std::f64::consts::PI;
use std::ops::{Add, Mul, Neg, Sub};

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn from_angle(angle: f64) -> Self {
        Self::new(angle.cos(), angle.sin())
    }

    pub fn dot(self, other: Vec2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// z-component of the 3D cross product.
    pub fn cross(self, other: Vec2) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn distance(self, other: Vec2) -> f64 {
        (self - other).norm()
    }

    pub fn normalized(self) -> Vec2 {
        let n = self.norm();
        Vec2::new(self.x / n, self.y / n)
    }

    /// Counter-clockwise rotation by `angle` radians.
    pub fn rotated(self, angle: f64) -> Vec2 {
        let (s, c) = angle.sin_cos();
        Vec2::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }

    pub fn angle(self) -> f64 {
        self.y.atan2(self.x)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, rhs: f64) -> Vec2 {
        Vec2::new(self.x * rhs, self.y * rhs)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

/// Maps an angle onto (-π, π].
pub fn wrap_angle(a: f64) -> f64 {
    let mut r = a.rem_euclid(2.0 * PI);
    if r > PI {
        r -= 2.0 * PI;
    }
    r
}

/// Signed perpendicular distance from `p` to the directed line `a → b`.
///
/// Positive when `p` lies to the right of the direction of travel, which for
/// a tendon pulled toward the palm is an extension moment arm.
pub fn signed_line_distance(p: Vec2, a: Vec2, b: Vec2) -> f64 {
    let u = (b - a).normalized();
    u.cross(a - p)
}

/// Distance from `p` to the closed segment `a`–`b`.
pub fn segment_distance(p: Vec2, a: Vec2, b: Vec2) -> f64 {
    let d = b - a;
    let len2 = d.dot(d);
    if len2 == 0.0 {
        return p.distance(a);
    }
    let t = ((p - a).dot(d) / len2).clamp(0.0, 1.0);
    p.distance(a + d * t)
}

/// Tangent point on the circle for a tendon leaving `p` and wrapping the
/// circle clockwise. `None` when `p` is inside the circle.
pub fn tangent_from_point(p: Vec2, center: Vec2, radius: f64) -> Option<Vec2> {
    let v = center - p;
    let d = v.norm();
    if d < radius {
        return None;
    }
    let alpha = (radius / d).asin();
    let leg = (d * d - radius * radius).max(0.0).sqrt();
    Some(p + v.normalized().rotated(alpha) * leg)
}

/// Tangent point on the circle for a tendon that has wrapped the circle
/// clockwise and then runs straight to `q`.
pub fn tangent_to_point(center: Vec2, radius: f64, q: Vec2) -> Option<Vec2> {
    let w = center - q;
    let d = w.norm();
    if d < radius {
        return None;
    }
    let alpha = (radius / d).asin();
    let leg = (d * d - radius * radius).max(0.0).sqrt();
    Some(q + w.normalized().rotated(-alpha) * leg)
}

/// External tangent between two circles both wrapped clockwise; returns the
/// leaving point on the first circle and the arrival point on the second.
pub fn tangent_between(c1: Vec2, r1: f64, c2: Vec2, r2: f64) -> Option<(Vec2, Vec2)> {
    let delta = c2 - c1;
    let d = delta.norm();
    if d <= (r1 - r2).abs() || d == 0.0 {
        return None;
    }
    let beta = ((r1 - r2) / d).clamp(-1.0, 1.0).acos();
    let n = delta.normalized().rotated(beta);
    Some((c1 + n * r1, c2 + n * r2))
}

/// Clockwise sweep (radians) travelled on a circle from `entry` to `exit`,
/// mapped onto (-π, π]. Negative values mean the tendon would have to bend
/// the wrong way round the circle.
pub fn clockwise_sweep(center: Vec2, entry: Vec2, exit: Vec2) -> f64 {
    wrap_angle((entry - center).angle() - (exit - center).angle())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: Vec2, b: Vec2) -> bool {
        a.distance(b) < 1e-12
    }

    #[test]
    fn tangent_over_the_top() {
        let t = tangent_from_point(Vec2::new(-10.0, 5.0), Vec2::ZERO, 5.0).unwrap();
        assert!(close(t, Vec2::new(0.0, 5.0)));
        let t = tangent_to_point(Vec2::ZERO, 5.0, Vec2::new(10.0, 5.0)).unwrap();
        assert!(close(t, Vec2::new(0.0, 5.0)));
    }

    #[test]
    fn inside_point_has_no_tangent() {
        assert!(tangent_from_point(Vec2::new(1.0, 1.0), Vec2::ZERO, 5.0).is_none());
        assert!(tangent_to_point(Vec2::ZERO, 5.0, Vec2::new(0.0, -2.0)).is_none());
    }

    #[test]
    fn equal_circles_share_top_line() {
        let (a, b) = tangent_between(Vec2::ZERO, 5.0, Vec2::new(10.0, 0.0), 5.0).unwrap();
        assert!(close(a, Vec2::new(0.0, 5.0)));
        assert!(close(b, Vec2::new(10.0, 5.0)));
    }

    #[test]
    fn tangent_is_perpendicular_to_radius() {
        let c = Vec2::new(3.0, -2.0);
        let p = Vec2::new(-20.0, 11.0);
        let t = tangent_from_point(p, c, 7.0).unwrap();
        assert!(((t - c).norm() - 7.0).abs() < 1e-12);
        assert!((t - c).dot(t - p).abs() < 1e-9);
        // circle on the right of travel
        assert!(signed_line_distance(c, p, t) > 0.0);
    }

    #[test]
    fn sweep_sign() {
        let c = Vec2::ZERO;
        let s = clockwise_sweep(c, Vec2::from_angle(2.0), Vec2::from_angle(1.0));
        assert!((s - 1.0).abs() < 1e-12);
        assert!(clockwise_sweep(c, Vec2::from_angle(1.0), Vec2::from_angle(2.0)) < 0.0);
    }

    #[test]
    fn signed_distance_is_positive_above_joint() {
        let r = signed_line_distance(Vec2::ZERO, Vec2::new(-5.0, 17.0), Vec2::new(5.0, 17.0));
        assert!((r - 17.0).abs() < 1e-12);
    }
}
