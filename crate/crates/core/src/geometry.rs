//! Planar helpers shared by the energy terms, the sampler and instantiation.
//!
//! Objects are upright boxes. A footprint is the box projected to the floor:
//! a rectangle centred at `(x, y)` whose length runs along the heading `yaw`
//! and whose width runs along `yaw + π/2`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

pub type Vec2 = [f64; 2];
pub type Vec3 = [f64; 3];

/// Wraps an angle to `[-π, π)`.
pub fn wrap_angle(theta: f64) -> f64 {
    let two_pi = 2.0 * PI;
    let mut t = (theta + PI).rem_euclid(two_pi) - PI;
    // rem_euclid can round up to exactly 2π for tiny negative inputs
    if t >= PI {
        t -= two_pi;
    }
    t
}

/// Absolute circular difference in `[0, π]`.
pub fn angle_diff(a: f64, b: f64) -> f64 {
    wrap_angle(a - b).abs()
}

pub fn sub2(a: Vec2, b: Vec2) -> Vec2 {
    [a[0] - b[0], a[1] - b[1]]
}

pub fn dot2(a: Vec2, b: Vec2) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

pub fn norm2(a: Vec2) -> f64 {
    a[0].hypot(a[1])
}

pub fn dist2(a: Vec2, b: Vec2) -> f64 {
    norm2(sub2(a, b))
}

/// Rotates `v` by `theta` counter-clockwise.
pub fn rotate2(v: Vec2, theta: f64) -> Vec2 {
    let (s, c) = theta.sin_cos();
    [c * v[0] - s * v[1], s * v[0] + c * v[1]]
}

/// Expresses the world point `p` in the frame of a footprint centred at
/// `center` with heading `yaw`: returns (offset along length, offset along width).
pub fn to_local(p: Vec2, center: Vec2, yaw: f64) -> Vec2 {
    rotate2(sub2(p, center), -yaw)
}

pub fn to_world(local: Vec2, center: Vec2, yaw: f64) -> Vec2 {
    let r = rotate2(local, yaw);
    [center[0] + r[0], center[1] + r[1]]
}

pub fn add3(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

pub fn sub3(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub fn scale3(a: Vec3, s: f64) -> Vec3 {
    [a[0] * s, a[1] * s, a[2] * s]
}

pub fn dot3(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub fn cross3(a: Vec3, b: Vec3) -> Vec3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

pub fn norm3(a: Vec3) -> f64 {
    dot3(a, a).sqrt()
}

pub fn normalize3(a: Vec3) -> Vec3 {
    scale3(a, 1.0 / norm3(a))
}

/// Oriented rectangle on the floor plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Footprint {
    pub center: Vec2,
    pub yaw: f64,
    pub length: f64,
    pub width: f64,
}

impl Footprint {
    pub fn corners(&self) -> [Vec2; 4] {
        let hl = 0.5 * self.length;
        let hw = 0.5 * self.width;
        [[hl, hw], [-hl, hw], [-hl, -hw], [hl, -hw]].map(|c| to_world(c, self.center, self.yaw))
    }

    pub fn contains(&self, p: Vec2, tol: f64) -> bool {
        let l = to_local(p, self.center, self.yaw);
        l[0].abs() <= 0.5 * self.length + tol && l[1].abs() <= 0.5 * self.width + tol
    }

    /// Axis-aligned extent `(min, max)` of the rotated rectangle.
    pub fn aabb(&self) -> (Vec2, Vec2) {
        let (s, c) = self.yaw.sin_cos();
        let ex = 0.5 * (self.length * c.abs() + self.width * s.abs());
        let ey = 0.5 * (self.length * s.abs() + self.width * c.abs());
        (
            [self.center[0] - ex, self.center[1] - ey],
            [self.center[0] + ex, self.center[1] + ey],
        )
    }

    fn axes(&self) -> [Vec2; 2] {
        let (s, c) = self.yaw.sin_cos();
        [[c, s], [-s, c]]
    }
}

/// Separating-axis overlap test for two oriented rectangles.
pub fn footprints_overlap(a: &Footprint, b: &Footprint) -> bool {
    let ca = a.corners();
    let cb = b.corners();
    for axis in a.axes().into_iter().chain(b.axes()) {
        let (amin, amax) = project(&ca, axis);
        let (bmin, bmax) = project(&cb, axis);
        if amax < bmin || bmax < amin {
            return false;
        }
    }
    true
}

fn project(pts: &[Vec2; 4], axis: Vec2) -> (f64, f64) {
    pts.iter()
        .map(|p| dot2(*p, axis))
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
            (lo.min(v), hi.max(v))
        })
}

fn point_segment_dist(p: Vec2, a: Vec2, b: Vec2) -> f64 {
    let ab = sub2(b, a);
    let len2 = dot2(ab, ab);
    let t = if len2 > 0.0 {
        (dot2(sub2(p, a), ab) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    dist2(p, [a[0] + t * ab[0], a[1] + t * ab[1]])
}

/// Planar gap between two footprints; 0 when they touch or overlap.
pub fn footprint_gap(a: &Footprint, b: &Footprint) -> f64 {
    if footprints_overlap(a, b) {
        return 0.0;
    }
    // Disjoint convex polygons: the gap is realised between a vertex and an edge.
    let ca = a.corners();
    let cb = b.corners();
    let mut best = f64::INFINITY;
    for (pts, other) in [(&ca, &cb), (&cb, &ca)] {
        for p in pts.iter() {
            for k in 0..4 {
                best = best.min(point_segment_dist(*p, other[k], other[(k + 1) % 4]));
            }
        }
    }
    best
}

/// A wall as a directed floor segment. Walls of a room run counter-clockwise,
/// so the inward normal is the direction rotated by +π/2.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Wall {
    pub start: Vec2,
    pub end: Vec2,
}

impl Wall {
    pub fn length(&self) -> f64 {
        dist2(self.start, self.end)
    }

    pub fn inward_normal(&self) -> Vec2 {
        let d = sub2(self.end, self.start);
        let n = norm2(d);
        [-d[1] / n, d[0] / n]
    }

    /// Heading of the inward normal, in `[-π, π)`.
    pub fn heading(&self) -> f64 {
        let n = self.inward_normal();
        wrap_angle(n[1].atan2(n[0]))
    }

    /// Perpendicular distance from `p` to the wall's infinite line.
    pub fn distance_to_line(&self, p: Vec2) -> f64 {
        dot2(sub2(p, self.start), self.inward_normal()).abs()
    }
}

/// The four counter-clockwise walls of a `width × depth` room anchored at the origin.
pub fn rectangle_walls(width: f64, depth: f64) -> [Wall; 4] {
    let p = [[0.0, 0.0], [width, 0.0], [width, depth], [0.0, depth]];
    [0, 1, 2, 3].map(|i| Wall {
        start: p[i],
        end: p[(i + 1) % 4],
    })
}
