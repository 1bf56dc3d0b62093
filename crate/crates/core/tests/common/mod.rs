//! Reference implementations used as test oracles. They deliberately avoid
//! the library's own intersection and distance routines and work from raw
//! coordinates instead.

#![allow(dead_code)]

pub mod nets;
pub mod rotation;

use std::collections::VecDeque;

use socnav::geometry::{Circle, OrientedRect, Segment, Shape, Vec2};

pub type P = (f64, f64);

fn sub(a: P, b: P) -> P {
    (a.0 - b.0, a.1 - b.1)
}

fn dot(a: P, b: P) -> f64 {
    a.0 * b.0 + a.1 * b.1
}

fn cross(a: P, b: P) -> f64 {
    a.0 * b.1 - a.1 * b.0
}

fn len(a: P) -> f64 {
    dot(a, a).sqrt()
}

pub fn point_segment_distance(p: P, a: P, b: P) -> f64 {
    let ab = sub(b, a);
    let l2 = dot(ab, ab);
    let t = if l2 == 0.0 { 0.0 } else { (dot(sub(p, a), ab) / l2).clamp(0.0, 1.0) };
    len(sub(p, (a.0 + t * ab.0, a.1 + t * ab.1)))
}

/// Corners of a rectangle given by centre, heading and half extents,
/// counter-clockwise.
pub fn rect_corners(center: P, heading: f64, half_length: f64, half_width: f64) -> [P; 4] {
    let (c, s) = (heading.cos(), heading.sin());
    let at = |u: f64, v: f64| (center.0 + u * c - v * s, center.1 + u * s + v * c);
    [
        at(-half_length, -half_width),
        at(half_length, -half_width),
        at(half_length, half_width),
        at(-half_length, half_width),
    ]
}

pub fn polygon_contains(poly: &[P], p: P) -> bool {
    (0..poly.len()).all(|i| cross(sub(poly[(i + 1) % poly.len()], poly[i]), sub(p, poly[i])) >= 0.0)
}

pub fn polygon_boundary_distance(poly: &[P], p: P) -> f64 {
    (0..poly.len())
        .map(|i| point_segment_distance(p, poly[i], poly[(i + 1) % poly.len()]))
        .fold(f64::INFINITY, f64::min)
}

fn segments_cross(a: P, b: P, c: P, d: P) -> bool {
    let o = |p: P, q: P, r: P| cross(sub(q, p), sub(r, p));
    let (d1, d2, d3, d4) = (o(c, d, a), o(c, d, b), o(a, b, c), o(a, b, d));
    (d1 * d2 <= 0.0) && (d3 * d4 <= 0.0)
}

/// Convex polygons overlap (boundaries touching counts).
pub fn polygons_overlap(a: &[P], b: &[P]) -> bool {
    for i in 0..a.len() {
        for j in 0..b.len() {
            if segments_cross(a[i], a[(i + 1) % a.len()], b[j], b[(j + 1) % b.len()]) {
                return true;
            }
        }
    }
    polygon_contains(a, b[0]) || polygon_contains(b, a[0])
}

/// Gap between disjoint convex polygons (0 when they overlap).
pub fn polygon_gap(a: &[P], b: &[P]) -> f64 {
    if polygons_overlap(a, b) {
        return 0.0;
    }
    let ab = a.iter().map(|&p| polygon_boundary_distance(b, p)).fold(f64::INFINITY, f64::min);
    let ba = b.iter().map(|&p| polygon_boundary_distance(a, p)).fold(f64::INFINITY, f64::min);
    ab.min(ba)
}

/// Shape description independent of the library types.
#[derive(Debug, Clone)]
pub enum Body {
    Disc { center: P, radius: f64 },
    Wall { a: P, b: P },
    Box { corners: [P; 4] },
}

impl Body {
    /// Signed distance to the surface (segments are unsigned).
    pub fn distance(&self, p: P) -> f64 {
        match self {
            Body::Disc { center, radius } => len(sub(p, *center)) - radius,
            Body::Wall { a, b } => point_segment_distance(p, *a, *b),
            Body::Box { corners } => {
                let d = polygon_boundary_distance(corners, p);
                if polygon_contains(corners, p) {
                    -d
                } else {
                    d
                }
            }
        }
    }

    pub fn to_shape(&self) -> Shape {
        match self {
            Body::Disc { center, radius } => Circle::new(Vec2::new(center.0, center.1), *radius).unwrap().into(),
            Body::Wall { a, b } => Segment::new(Vec2::new(a.0, a.1), Vec2::new(b.0, b.1)).unwrap().into(),
            Body::Box { corners } => {
                let c = ((corners[0].0 + corners[2].0) / 2.0, (corners[0].1 + corners[2].1) / 2.0);
                let along = sub(corners[1], corners[0]);
                let across = sub(corners[3], corners[0]);
                OrientedRect::centered(
                    Vec2::new(c.0, c.1),
                    along.1.atan2(along.0),
                    len(along) / 2.0,
                    len(across) / 2.0,
                )
                .unwrap()
                .into()
            }
        }
    }

    pub fn from_shape(s: &Shape) -> Body {
        match s {
            Shape::Circle(c) => Body::Disc {
                center: (c.center.x, c.center.y),
                radius: c.radius,
            },
            Shape::Segment(s) => Body::Wall {
                a: (s.a.x, s.a.y),
                b: (s.b.x, s.b.y),
            },
            Shape::Rect(r) => Body::Box {
                corners: r.corners().map(|c| (c.x, c.y)),
            },
        }
    }
}

pub fn scene_distance(bodies: &[Body], p: P) -> f64 {
    bodies.iter().map(|b| b.distance(p)).fold(f64::INFINITY, f64::min)
}

/// Sphere tracing: advance by the distance to the nearest surface, which
/// can never step past a surface, until the gap closes or the range runs
/// out.
pub fn marched_range(bodies: &[Body], origin: P, angle: f64, max_range: f64) -> f64 {
    let dir = (angle.cos(), angle.sin());
    let mut t = 0.0;
    for _ in 0..1_000_000 {
        let p = (origin.0 + t * dir.0, origin.1 + t * dir.1);
        let d = scene_distance(bodies, p);
        if d <= 1e-7 {
            return t.min(max_range);
        }
        t += d;
        if t >= max_range {
            return max_range;
        }
    }
    t.min(max_range)
}

/// Samples an `n × n` grid over rectangle `a` (boundary included) and
/// reports whether any sample lies in `b`.
pub fn sampled_overlap(a: &[P; 4], b: &[P; 4], n: usize) -> bool {
    let u = sub(a[1], a[0]);
    let v = sub(a[3], a[0]);
    for i in 0..=n {
        for j in 0..=n {
            let (s, t) = (i as f64 / n as f64, j as f64 / n as f64);
            let p = (a[0].0 + s * u.0 + t * v.0, a[0].1 + s * u.1 + t * v.1);
            if polygon_contains(b, p) {
                return true;
            }
        }
    }
    false
}

/// Social zone polygon: anchored at the agent centre, `length` ahead along
/// `heading`, half width `radius`.
pub fn social_zone_polygon(center: P, heading: f64, radius: f64, speed: f64, headway: f64, d_min: f64) -> [P; 4] {
    let length = radius / 2.0 + d_min + headway * speed;
    let (c, s) = (heading.cos(), heading.sin());
    let at = |u: f64, v: f64| (center.0 + u * c - v * s, center.1 + u * s + v * c);
    [at(0.0, -radius), at(length, -radius), at(length, radius), at(0.0, radius)]
}

/// Flood fill on a `res` grid over `arena`; a cell is free when a disc of
/// `radius` at its centre clears every body.
pub fn grid_path_exists(bodies: &[Body], arena: [f64; 4], res: f64, radius: f64, start: P, goal: P) -> bool {
    let [x0, y0, x1, y1] = arena;
    let nx = ((x1 - x0) / res).ceil() as i64;
    let ny = ((y1 - y0) / res).ceil() as i64;
    let center = |i: i64, j: i64| (x0 + (i as f64 + 0.5) * res, y0 + (j as f64 + 0.5) * res);
    let free = |i: i64, j: i64| scene_distance(bodies, center(i, j)) > radius;
    let cell = |p: P| (((p.0 - x0) / res).floor() as i64, ((p.1 - y0) / res).floor() as i64);
    let (s, g) = (cell(start), cell(goal));
    let mut seen = vec![false; (nx * ny) as usize];
    let mut queue = VecDeque::new();
    if !free(s.0, s.1) {
        return false;
    }
    seen[(s.1 * nx + s.0) as usize] = true;
    queue.push_back(s);
    while let Some((i, j)) = queue.pop_front() {
        if (i, j) == g {
            return true;
        }
        for (di, dj) in [(1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (1, -1), (-1, 1), (-1, -1)] {
            let (a, b) = (i + di, j + dj);
            if a < 0 || b < 0 || a >= nx || b >= ny {
                continue;
            }
            let k = (b * nx + a) as usize;
            if !seen[k] && free(a, b) {
                seen[k] = true;
                queue.push_back((a, b));
            }
        }
    }
    false
}

pub fn random_body<R: rand::Rng>(rng: &mut R, extent: f64) -> Body {
    let pt = |r: &mut R| (r.random_range(-extent..extent), r.random_range(-extent..extent));
    match rng.random_range(0..3) {
        0 => Body::Disc {
            center: pt(rng),
            radius: rng.random_range(0.1..1.5),
        },
        1 => {
            let a = pt(rng);
            let mut b = pt(rng);
            while len(sub(a, b)) < 0.05 {
                b = pt(rng);
            }
            Body::Wall { a, b }
        }
        _ => {
            let c = pt(rng);
            Body::Box {
                corners: rect_corners(
                    c,
                    rng.random_range(-3.2..3.2),
                    rng.random_range(0.05..1.5),
                    rng.random_range(0.05..1.5),
                ),
            }
        }
    }
}

pub fn random_scene<R: rand::Rng>(rng: &mut R) -> Vec<Body> {
    let n = rng.random_range(1..=6);
    (0..n).map(|_| random_body(rng, 6.0)).collect()
}
