//! Planar primitives and the exact queries the simulator is built on.
//!
//! Everything here is a plain value type. Contact is treated with closed-set
//! semantics: touching shapes intersect and have zero distance.

use std::f64::consts::PI;
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub, SubAssign};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Slack used by the separating-axis test so that touching boundaries count
/// as overlapping despite round-off.
const CONTACT_EPS: f64 = 1e-9;
const PARALLEL_EPS: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("non-finite coordinate ({0}, {1})")]
    NonFinite(f64, f64),
    #[error("circle radius must be positive and finite, got {0}")]
    BadRadius(f64),
    #[error("segment endpoints coincide at ({0}, {1})")]
    DegenerateSegment(f64, f64),
    #[error("rectangle extents must be finite and non-negative (half_width {half_width}, length {length})")]
    BadExtent { half_width: f64, length: f64 },
    #[error("closest distance requested against an empty shape set")]
    EmptyShapeSet,
}

/// Wraps an angle into `[-π, π)`.
pub fn normalize_angle(angle: f64) -> f64 {
    let wrapped = (angle + PI).rem_euclid(2.0 * PI) - PI;
    // rem_euclid can return exactly 2π for tiny negative inputs
    if wrapped >= PI {
        wrapped - 2.0 * PI
    } else {
        wrapped
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    /// Unchecked constructor; debug builds assert finiteness.
    #[inline]
    pub fn new(x: f64, y: f64) -> Self {
        debug_assert!(x.is_finite() && y.is_finite(), "non-finite Vec2 ({x}, {y})");
        Vec2 { x, y }
    }

    pub fn try_new(x: f64, y: f64) -> Result<Self, GeometryError> {
        if x.is_finite() && y.is_finite() {
            Ok(Vec2 { x, y })
        } else {
            Err(GeometryError::NonFinite(x, y))
        }
    }

    #[inline]
    pub fn from_angle(angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Vec2::new(c, s)
    }

    #[inline]
    pub fn dot(self, other: Vec2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// z-component of the 3D cross product.
    #[inline]
    pub fn cross(self, other: Vec2) -> f64 {
        self.x * other.y - self.y * other.x
    }

    #[inline]
    pub fn norm_squared(self) -> f64 {
        self.dot(self)
    }

    #[inline]
    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    #[inline]
    pub fn distance(self, other: Vec2) -> f64 {
        (self - other).norm()
    }

    /// Counter-clockwise perpendicular.
    #[inline]
    pub fn perp(self) -> Vec2 {
        Vec2::new(-self.y, self.x)
    }

    pub fn angle(self) -> f64 {
        self.y.atan2(self.x)
    }

    /// Unit vector in the same direction, or zero for the zero vector.
    pub fn normalized_or_zero(self) -> Vec2 {
        let n = self.norm();
        if n > 0.0 {
            self / n
        } else {
            Vec2::ZERO
        }
    }

    pub fn rotated(self, angle: f64) -> Vec2 {
        let (s, c) = angle.sin_cos();
        Vec2::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    #[inline]
    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
}

impl AddAssign for Vec2 {
    #[inline]
    fn add_assign(&mut self, o: Vec2) {
        self.x += o.x;
        self.y += o.y;
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    #[inline]
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

impl SubAssign for Vec2 {
    #[inline]
    fn sub_assign(&mut self, o: Vec2) {
        self.x -= o.x;
        self.y -= o.y;
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    #[inline]
    fn mul(self, s: f64) -> Vec2 {
        Vec2::new(self.x * s, self.y * s)
    }
}

impl Mul<Vec2> for f64 {
    type Output = Vec2;
    #[inline]
    fn mul(self, v: Vec2) -> Vec2 {
        v * self
    }
}

impl Div<f64> for Vec2 {
    type Output = Vec2;
    #[inline]
    fn div(self, s: f64) -> Vec2 {
        Vec2::new(self.x / s, self.y / s)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    #[inline]
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

/// Planar pose: position plus heading in `[-π, π)`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Pose {
    pub position: Vec2,
    pub heading: f64,
}

impl Pose {
    pub fn new(x: f64, y: f64, heading: f64) -> Self {
        Pose {
            position: Vec2::new(x, y),
            heading: normalize_angle(heading),
        }
    }

    pub fn forward(&self) -> Vec2 {
        Vec2::from_angle(self.heading)
    }

    /// Bearing of a world point as seen from this pose, in `[-π, π)`.
    pub fn bearing_to(&self, p: Vec2) -> f64 {
        normalize_angle((p - self.position).angle() - self.heading)
    }
}

/// Rotation followed by translation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidTransform {
    pub rotation: f64,
    pub translation: Vec2,
}

impl RigidTransform {
    pub fn new(rotation: f64, translation: Vec2) -> Self {
        RigidTransform { rotation, translation }
    }

    pub fn apply(&self, p: Vec2) -> Vec2 {
        p.rotated(self.rotation) + self.translation
    }

    pub fn apply_heading(&self, heading: f64) -> f64 {
        normalize_angle(heading + self.rotation)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Circle {
    pub center: Vec2,
    pub radius: f64,
}

impl Circle {
    pub fn new(center: Vec2, radius: f64) -> Result<Self, GeometryError> {
        if !center.is_finite() {
            return Err(GeometryError::NonFinite(center.x, center.y));
        }
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(GeometryError::BadRadius(radius));
        }
        Ok(Circle { center, radius })
    }

    pub fn contains(&self, p: Vec2) -> bool {
        (p - self.center).norm_squared() <= self.radius * self.radius
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub a: Vec2,
    pub b: Vec2,
}

impl Segment {
    pub fn new(a: Vec2, b: Vec2) -> Result<Self, GeometryError> {
        for p in [a, b] {
            if !p.is_finite() {
                return Err(GeometryError::NonFinite(p.x, p.y));
            }
        }
        if a == b {
            return Err(GeometryError::DegenerateSegment(a.x, a.y));
        }
        Ok(Segment { a, b })
    }

    pub fn closest_point(&self, p: Vec2) -> Vec2 {
        closest_point_on_segment(self.a, self.b, p)
    }

    pub fn distance_to_point(&self, p: Vec2) -> f64 {
        self.closest_point(p).distance(p)
    }
}

fn closest_point_on_segment(a: Vec2, b: Vec2, p: Vec2) -> Vec2 {
    let e = b - a;
    let len2 = e.norm_squared();
    if len2 == 0.0 {
        return a;
    }
    let t = ((p - a).dot(e) / len2).clamp(0.0, 1.0);
    a + e * t
}

/// A rectangle that starts at `anchor` and extends `length` metres along
/// `heading`, spanning `half_width` to either side.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrientedRect {
    pub anchor: Vec2,
    pub heading: f64,
    pub half_width: f64,
    pub length: f64,
}

impl OrientedRect {
    pub fn new(anchor: Vec2, heading: f64, half_width: f64, length: f64) -> Result<Self, GeometryError> {
        if !anchor.is_finite() {
            return Err(GeometryError::NonFinite(anchor.x, anchor.y));
        }
        if !heading.is_finite() {
            return Err(GeometryError::NonFinite(heading, heading));
        }
        let ok = |v: f64| v.is_finite() && v >= 0.0;
        if !ok(half_width) || !ok(length) {
            return Err(GeometryError::BadExtent { half_width, length });
        }
        Ok(OrientedRect {
            anchor,
            heading: normalize_angle(heading),
            half_width,
            length,
        })
    }

    /// Rectangle described by its center and half extents along/across `heading`.
    pub fn centered(center: Vec2, heading: f64, half_length: f64, half_width: f64) -> Result<Self, GeometryError> {
        let anchor = center - Vec2::from_angle(heading) * half_length;
        OrientedRect::new(anchor, heading, half_width, 2.0 * half_length)
    }

    #[inline]
    pub fn forward(&self) -> Vec2 {
        Vec2::from_angle(self.heading)
    }

    #[inline]
    pub fn left(&self) -> Vec2 {
        self.forward().perp()
    }

    pub fn center(&self) -> Vec2 {
        self.anchor + self.forward() * (0.5 * self.length)
    }

    /// Corners in counter-clockwise order starting at the back-right corner.
    pub fn corners(&self) -> [Vec2; 4] {
        let f = self.forward() * self.length;
        let l = self.left() * self.half_width;
        [self.anchor - l, self.anchor + f - l, self.anchor + f + l, self.anchor + l]
    }

    fn local(&self, p: Vec2) -> (f64, f64) {
        let d = p - self.anchor;
        (d.dot(self.forward()), d.dot(self.left()))
    }

    pub fn contains(&self, p: Vec2) -> bool {
        let (u, v) = self.local(p);
        u >= 0.0 && u <= self.length && v.abs() <= self.half_width
    }

    /// Signed distance from `p` to the rectangle boundary; negative inside.
    pub fn signed_distance(&self, p: Vec2) -> f64 {
        let (u, v) = self.local(p);
        let qx = (u - 0.5 * self.length).abs() - 0.5 * self.length;
        let qy = v.abs() - self.half_width;
        let outside = Vec2::new(qx.max(0.0), qy.max(0.0)).norm();
        let inside = qx.max(qy).min(0.0);
        outside + inside
    }

    pub fn transformed(&self, t: &RigidTransform) -> OrientedRect {
        OrientedRect {
            anchor: t.apply(self.anchor),
            heading: t.apply_heading(self.heading),
            half_width: self.half_width,
            length: self.length,
        }
    }

    fn project(&self, axis: Vec2) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for c in self.corners() {
            let p = c.dot(axis);
            lo = lo.min(p);
            hi = hi.max(p);
        }
        (lo, hi)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Shape {
    Circle(Circle),
    Segment(Segment),
    Rect(OrientedRect),
}

impl From<Circle> for Shape {
    fn from(c: Circle) -> Self {
        Shape::Circle(c)
    }
}

impl From<Segment> for Shape {
    fn from(s: Segment) -> Self {
        Shape::Segment(s)
    }
}

impl From<OrientedRect> for Shape {
    fn from(r: OrientedRect) -> Self {
        Shape::Rect(r)
    }
}

impl Shape {
    /// Distance along the ray to the first contact, `Some(0.0)` when the
    /// origin is already inside a closed shape.
    pub fn ray_hit(&self, origin: Vec2, dir: Vec2) -> Option<f64> {
        match self {
            Shape::Circle(c) => ray_circle(origin, dir, c),
            Shape::Segment(s) => ray_segment(origin, dir, s.a, s.b),
            Shape::Rect(r) => {
                if r.contains(origin) {
                    return Some(0.0);
                }
                let k = r.corners();
                (0..4)
                    .filter_map(|i| ray_segment(origin, dir, k[i], k[(i + 1) % 4]))
                    .min_by(f64::total_cmp)
            }
        }
    }

    /// Surface-to-surface distance to a circle; negative on penetration.
    pub fn surface_distance(&self, body: &Circle) -> f64 {
        match self {
            Shape::Circle(c) => c.center.distance(body.center) - c.radius - body.radius,
            Shape::Segment(s) => s.distance_to_point(body.center) - body.radius,
            Shape::Rect(r) => r.signed_distance(body.center) - body.radius,
        }
    }

    /// Closest point of the shape to `p` (the point itself when inside).
    pub fn closest_point(&self, p: Vec2) -> Vec2 {
        match self {
            Shape::Circle(c) => {
                let d = p - c.center;
                if d.norm() <= c.radius {
                    p
                } else {
                    c.center + d.normalized_or_zero() * c.radius
                }
            }
            Shape::Segment(s) => s.closest_point(p),
            Shape::Rect(r) => {
                if r.contains(p) {
                    return p;
                }
                let (u, v) = r.local(p);
                let u = u.clamp(0.0, r.length);
                let v = v.clamp(-r.half_width, r.half_width);
                r.anchor + r.forward() * u + r.left() * v
            }
        }
    }

    pub fn transformed(&self, t: &RigidTransform) -> Shape {
        match self {
            Shape::Circle(c) => Shape::Circle(Circle {
                center: t.apply(c.center),
                radius: c.radius,
            }),
            Shape::Segment(s) => Shape::Segment(Segment {
                a: t.apply(s.a),
                b: t.apply(s.b),
            }),
            Shape::Rect(r) => Shape::Rect(r.transformed(t)),
        }
    }
}

fn ray_circle(origin: Vec2, dir: Vec2, c: &Circle) -> Option<f64> {
    let m = origin - c.center;
    let c_term = m.norm_squared() - c.radius * c.radius;
    if c_term <= 0.0 {
        return Some(0.0);
    }
    let b = m.dot(dir);
    if b > 0.0 {
        return None;
    }
    let disc = b * b - c_term;
    if disc < 0.0 {
        return None;
    }
    Some((-b - disc.sqrt()).max(0.0))
}

fn ray_segment(origin: Vec2, dir: Vec2, a: Vec2, b: Vec2) -> Option<f64> {
    let e = b - a;
    let ao = a - origin;
    let denom = dir.cross(e);
    if denom.abs() <= PARALLEL_EPS * e.norm().max(1.0) {
        // parallel or degenerate edge: only a collinear overlap can hit
        if ao.cross(dir).abs() > PARALLEL_EPS * ao.norm().max(1.0) {
            return None;
        }
        let ta = ao.dot(dir);
        let tb = (b - origin).dot(dir);
        if ta.max(tb) < 0.0 {
            return None;
        }
        return Some(ta.min(tb).max(0.0));
    }
    let t = ao.cross(e) / denom;
    let u = ao.cross(dir) / denom;
    if t >= 0.0 && (0.0..=1.0).contains(&u) {
        Some(t)
    } else {
        None
    }
}

/// Distance from `origin` along unit `direction` to the first shape, capped
/// at `max_range`.
pub fn ray_cast(origin: Vec2, direction: Vec2, shapes: &[Shape], max_range: f64) -> f64 {
    debug_assert!((direction.norm() - 1.0).abs() < 1e-9, "ray direction must be unit length");
    debug_assert!(max_range > 0.0);
    shapes
        .iter()
        .filter_map(|s| s.ray_hit(origin, direction))
        .fold(max_range, f64::min)
}

/// Separating-axis overlap test for two closed oriented rectangles.
pub fn rects_intersect(a: &OrientedRect, b: &OrientedRect) -> bool {
    let axes = [a.forward(), a.left(), b.forward(), b.left()];
    axes.iter().all(|&axis| {
        let (a_lo, a_hi) = a.project(axis);
        let (b_lo, b_hi) = b.project(axis);
        a_hi + CONTACT_EPS >= b_lo && b_hi + CONTACT_EPS >= a_lo
    })
}

/// Smallest surface-to-surface distance between the robot body and any
/// shape. Negative values are penetration depth.
pub fn closest_distance(robot: &Circle, shapes: &[Shape]) -> Result<f64, GeometryError> {
    if shapes.is_empty() {
        return Err(GeometryError::EmptyShapeSet);
    }
    Ok(shapes
        .iter()
        .map(|s| s.surface_distance(robot))
        .fold(f64::INFINITY, f64::min))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn circle(x: f64, y: f64, r: f64) -> Shape {
        Circle::new(Vec2::new(x, y), r).unwrap().into()
    }

    fn unit_square(cx: f64, cy: f64, heading: f64) -> OrientedRect {
        OrientedRect::centered(Vec2::new(cx, cy), heading, 0.5, 0.5).unwrap()
    }

    #[test]
    fn ray_hits_circle_at_tangent_arithmetic() {
        let d = ray_cast(Vec2::ZERO, Vec2::new(1.0, 0.0), &[circle(5.0, 0.0, 1.0)], 10.0);
        assert_close!(d, 4.0, 1e-12);
    }

    #[test]
    fn ray_miss_returns_max_range() {
        assert_eq!(ray_cast(Vec2::ZERO, Vec2::new(1.0, 0.0), &[], 10.0), 10.0);
        let behind = circle(-5.0, 0.0, 1.0);
        assert_eq!(ray_cast(Vec2::ZERO, Vec2::new(1.0, 0.0), &[behind], 10.0), 10.0);
    }

    #[test]
    fn ray_from_inside_is_zero() {
        let d = ray_cast(Vec2::ZERO, Vec2::new(0.0, 1.0), &[circle(0.1, 0.0, 0.5)], 10.0);
        assert_eq!(d, 0.0);
        let r: Shape = unit_square(0.0, 0.0, 0.3).into();
        assert_eq!(ray_cast(Vec2::ZERO, Vec2::new(1.0, 0.0), &[r], 10.0), 0.0);
    }

    #[test]
    fn ray_hits_segment_and_rect() {
        let wall: Shape = Segment::new(Vec2::new(3.0, -1.0), Vec2::new(3.0, 1.0)).unwrap().into();
        assert_close!(ray_cast(Vec2::ZERO, Vec2::new(1.0, 0.0), &[wall], 10.0), 3.0, 1e-12);
        let r: Shape = unit_square(4.0, 0.0, 0.0).into();
        assert_close!(ray_cast(Vec2::ZERO, Vec2::new(1.0, 0.0), &[r], 10.0), 3.5, 1e-12);
    }

    #[test]
    fn collinear_segment_hit_at_near_endpoint() {
        let s: Shape = Segment::new(Vec2::new(2.0, 0.0), Vec2::new(5.0, 0.0)).unwrap().into();
        assert_close!(ray_cast(Vec2::ZERO, Vec2::new(1.0, 0.0), &[s], 10.0), 2.0, 1e-12);
    }

    #[test]
    fn constructors_reject_degenerate_shapes() {
        assert!(Circle::new(Vec2::ZERO, 0.0).is_err());
        assert!(Circle::new(Vec2::ZERO, -1.0).is_err());
        assert!(Segment::new(Vec2::new(1.0, 1.0), Vec2::new(1.0, 1.0)).is_err());
        assert!(OrientedRect::new(Vec2::ZERO, 0.0, -0.1, 1.0).is_err());
        assert!(Vec2::try_new(f64::NAN, 0.0).is_err());
    }

    #[test]
    fn rect_intersections() {
        let a = unit_square(0.0, 0.0, 0.0);
        assert!(rects_intersect(&a, &a));
        assert!(!rects_intersect(&a, &unit_square(10.0, 10.0, 0.0)));
        // shared edge
        assert!(rects_intersect(&a, &unit_square(1.0, 0.0, 0.0)));
        assert!(!rects_intersect(&a, &unit_square(1.0 + 1e-6, 0.0, 0.0)));
    }

    #[test]
    fn closest_distance_cases() {
        let robot = Circle::new(Vec2::ZERO, 0.3).unwrap();
        assert_close!(closest_distance(&robot, &[circle(2.0, 0.0, 0.3)]).unwrap(), 1.4, 1e-12);
        assert_close!(closest_distance(&robot, &[circle(0.6, 0.0, 0.3)]).unwrap(), 0.0, 1e-12);
        assert_eq!(closest_distance(&robot, &[]), Err(GeometryError::EmptyShapeSet));
        let wall: Shape = Segment::new(Vec2::new(1.0, -1.0), Vec2::new(1.0, 1.0)).unwrap().into();
        assert_close!(closest_distance(&robot, &[wall]).unwrap(), 0.7, 1e-12);
        // penetration into a rectangle
        let r: Shape = unit_square(0.0, 0.0, 0.0).into();
        assert_close!(closest_distance(&robot, &[r]).unwrap(), -0.8, 1e-12);
    }

    #[test]
    fn normalize_angle_range() {
        for k in -20..20 {
            let a = normalize_angle(0.37 + k as f64 * PI);
            assert!((-PI..PI).contains(&a));
        }
        assert_close!(normalize_angle(3.0 * PI / 2.0), -PI / 2.0, 1e-12);
    }
}
