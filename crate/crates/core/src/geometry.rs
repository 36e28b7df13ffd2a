//! Small 2D vector and convex-polygon toolkit used by the physics engine,
//! the spotlight lookahead and world validation.

use serde::{Deserialize, Serialize};
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl From<[f64; 2]> for Vec2 {
    fn from([x, y]: [f64; 2]) -> Self {
        Vec2 { x, y }
    }
}

impl From<Vec2> for [f64; 2] {
    fn from(v: Vec2) -> Self {
        [v.x, v.y]
    }
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Vec2 { x, y }
    }

    pub fn dot(self, o: Vec2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    pub fn cross(self, o: Vec2) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    /// Counter-clockwise rotation by `angle` radians in the (x, y) frame.
    pub fn rotate(self, angle: f64) -> Vec2 {
        let (s, c) = angle.sin_cos();
        Vec2::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
}

impl AddAssign for Vec2 {
    fn add_assign(&mut self, o: Vec2) {
        self.x += o.x;
        self.y += o.y;
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, k: f64) -> Vec2 {
        Vec2::new(self.x * k, self.y * k)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

/// Twice the shoelace area; positive for counter-clockwise order in the
/// (x, y) frame.
pub fn signed_area2(poly: &[Vec2]) -> f64 {
    let n = poly.len();
    (0..n).map(|i| poly[i].cross(poly[(i + 1) % n])).sum()
}

/// True when every turn has the same positive orientation and no three
/// consecutive vertices are collinear.
pub fn is_strictly_convex_ccw(poly: &[Vec2]) -> bool {
    let n = poly.len();
    if n < 3 {
        return false;
    }
    let mut winding = 0.0;
    for i in 0..n {
        let a = poly[i];
        let b = poly[(i + 1) % n];
        let c = poly[(i + 2) % n];
        if (b - a).cross(c - b) <= 0.0 {
            return false;
        }
        let e1 = b - a;
        let e2 = c - b;
        winding += e1.cross(e2).atan2(e1.dot(e2));
    }
    // a star polygon turns left everywhere but winds more than once
    (winding - std::f64::consts::TAU).abs() < 1e-6
}

pub fn centroid(poly: &[Vec2]) -> Vec2 {
    let n = poly.len();
    // work relative to the first vertex to limit cancellation
    let origin = poly[0];
    let local: Vec<Vec2> = poly.iter().map(|p| *p - origin).collect();
    let a2 = signed_area2(&local);
    if a2.abs() < f64::EPSILON {
        let sum = local.iter().fold(Vec2::ZERO, |acc, p| acc + *p);
        return origin + sum * (1.0 / n as f64);
    }
    let mut c = Vec2::ZERO;
    for i in 0..n {
        let p = local[i];
        let q = local[(i + 1) % n];
        c += (p + q) * p.cross(q);
    }
    origin + c * (1.0 / (3.0 * a2))
}

fn closest_on_segment(p: Vec2, a: Vec2, b: Vec2) -> Vec2 {
    let ab = b - a;
    let len2 = ab.norm_sq();
    if len2 == 0.0 {
        return a;
    }
    let t = ((p - a).dot(ab) / len2).clamp(0.0, 1.0);
    a + ab * t
}

/// Containment test for a counter-clockwise convex polygon; boundary counts
/// as inside.
pub fn contains(poly: &[Vec2], p: Vec2) -> bool {
    let n = poly.len();
    (0..n).all(|i| (poly[(i + 1) % n] - poly[i]).cross(p - poly[i]) >= 0.0)
}

/// Closest point on the polygon boundary and its distance.
pub fn closest_boundary_point(poly: &[Vec2], p: Vec2) -> (Vec2, f64) {
    let n = poly.len();
    let mut best = (poly[0], f64::INFINITY);
    for i in 0..n {
        let c = closest_on_segment(p, poly[i], poly[(i + 1) % n]);
        let d = (p - c).norm();
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

/// Euclidean distance from `p` to the polygon region (zero inside).
pub fn distance_to_polygon(poly: &[Vec2], p: Vec2) -> f64 {
    if contains(poly, p) {
        0.0
    } else {
        closest_boundary_point(poly, p).1
    }
}

/// Overlap between a disk and a convex polygon: outward unit normal (from the
/// polygon towards the disk centre) and penetration depth.
pub fn circle_polygon_contact(poly: &[Vec2], center: Vec2, radius: f64) -> Option<(Vec2, f64)> {
    if contains(poly, center) {
        // centre inside: leave through the nearest edge
        let n = poly.len();
        let mut best: Option<(Vec2, f64)> = None;
        for i in 0..n {
            let a = poly[i];
            let b = poly[(i + 1) % n];
            let e = b - a;
            let len = e.norm();
            if len == 0.0 {
                continue;
            }
            // outward normal of a ccw edge
            let normal = Vec2::new(e.y / len, -e.x / len);
            let dist = (center - a).dot(normal).abs();
            if best.is_none_or(|(_, d)| dist < d) {
                best = Some((normal, dist));
            }
        }
        return best.map(|(normal, dist)| (normal, dist + radius));
    }
    let (closest, dist) = closest_boundary_point(poly, center);
    if dist >= radius || dist == 0.0 {
        return None;
    }
    Some(((center - closest) * (1.0 / dist), radius - dist))
}

/// Separating-axis overlap test for two convex polygons. Touching edges do
/// not count as overlap.
pub fn polygons_overlap(a: &[Vec2], b: &[Vec2]) -> bool {
    fn separated_along_edges_of(p: &[Vec2], q: &[Vec2]) -> bool {
        let n = p.len();
        (0..n).any(|i| {
            let e = p[(i + 1) % n] - p[i];
            let axis = Vec2::new(-e.y, e.x);
            let (pmin, pmax) = project(p, axis);
            let (qmin, qmax) = project(q, axis);
            pmax <= qmin || qmax <= pmin
        })
    }
    fn project(p: &[Vec2], axis: Vec2) -> (f64, f64) {
        p.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
            let d = v.dot(axis);
            (lo.min(d), hi.max(d))
        })
    }
    !(separated_along_edges_of(a, b) || separated_along_edges_of(b, a))
}

pub fn bounding_box(poly: &[Vec2]) -> (Vec2, Vec2) {
    poly.iter().fold(
        (
            Vec2::new(f64::INFINITY, f64::INFINITY),
            Vec2::new(f64::NEG_INFINITY, f64::NEG_INFINITY),
        ),
        |(lo, hi), p| (Vec2::new(lo.x.min(p.x), lo.y.min(p.y)), Vec2::new(hi.x.max(p.x), hi.y.max(p.y))),
    )
}

/// Axis-aligned rectangle in counter-clockwise vertex order.
pub fn rect(x0: f64, y0: f64, x1: f64, y1: f64) -> Vec<Vec2> {
    vec![Vec2::new(x0, y0), Vec2::new(x1, y0), Vec2::new(x1, y1), Vec2::new(x0, y1)]
}

/// Puts vertices in counter-clockwise order (no-op if already).
pub fn to_ccw(mut poly: Vec<Vec2>) -> Vec<Vec2> {
    if signed_area2(&poly) < 0.0 {
        poly.reverse();
    }
    poly
}
