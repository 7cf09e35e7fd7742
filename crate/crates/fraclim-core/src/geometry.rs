//! Plane geometry primitives: points, rectangles, segments and polylines.

use alloc::vec::Vec;

use crate::num;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

pub type Point2 = Vec2;

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    pub fn new(x: f64, y: f64) -> Self {
        Vec2 { x, y }
    }

    pub fn add(&self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
    }

    pub fn sub(&self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }

    pub fn scale(&self, s: f64) -> Vec2 {
        Vec2::new(s * self.x, s * self.y)
    }

    pub fn dot(&self, o: Vec2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    pub fn norm(&self) -> f64 {
        num::hypot(self.x, self.y)
    }

    pub fn norm_inf(&self) -> f64 {
        num::max(num::abs(self.x), num::abs(self.y))
    }

    /// Counter-clockwise perpendicular.
    pub fn perp(&self) -> Vec2 {
        Vec2::new(-self.y, self.x)
    }

    pub fn normalized(&self) -> Vec2 {
        let n = self.norm();
        Vec2::new(self.x / n, self.y / n)
    }
}

/// Axis-aligned rectangle `[x0, x1] × [y0, y1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DomainRect {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl DomainRect {
    pub fn new(x0: f64, y0: f64, x1: f64, y1: f64) -> Self {
        assert!(x1 > x0 && y1 > y0, "degenerate rectangle");
        DomainRect { x0, y0, x1, y1 }
    }

    pub fn unit() -> Self {
        DomainRect::new(0.0, 0.0, 1.0, 1.0)
    }

    pub fn width(&self) -> f64 {
        self.x1 - self.x0
    }

    pub fn height(&self) -> f64 {
        self.y1 - self.y0
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn diameter(&self) -> f64 {
        num::hypot(self.width(), self.height())
    }

    pub fn contains(&self, p: Point2) -> bool {
        p.x >= self.x0 && p.x <= self.x1 && p.y >= self.y0 && p.y <= self.y1
    }

    pub fn center(&self) -> Point2 {
        Point2::new(0.5 * (self.x0 + self.x1), 0.5 * (self.y0 + self.y1))
    }
}

/// Closest point of segment `[a, b]` to `p` together with its arclength
/// parameter (clamped to `[0, |b-a|]`).
pub fn project_to_segment(a: Point2, b: Point2, p: Point2) -> (Point2, f64) {
    let ab = b.sub(a);
    let len = ab.norm();
    let t = num::clamp(p.sub(a).dot(ab) / (len * len), 0.0, 1.0);
    (a.add(ab.scale(t)), t * len)
}

/// Euclidean distance from `p` to segment `[a, b]`.
pub fn dist_to_segment(a: Point2, b: Point2, p: Point2) -> f64 {
    let (q, _) = project_to_segment(a, b, p);
    p.sub(q).norm()
}

/// Minimal distance between two segments (0 if they intersect).
pub fn segment_segment_distance(a0: Point2, a1: Point2, b0: Point2, b1: Point2) -> f64 {
    if segments_intersect(a0, a1, b0, b1) {
        return 0.0;
    }
    let d = num::min(
        num::min(dist_to_segment(a0, a1, b0), dist_to_segment(a0, a1, b1)),
        num::min(dist_to_segment(b0, b1, a0), dist_to_segment(b0, b1, a1)),
    );
    d
}

fn orient(a: Point2, b: Point2, c: Point2) -> f64 {
    (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)
}

fn segments_intersect(a0: Point2, a1: Point2, b0: Point2, b1: Point2) -> bool {
    let d1 = orient(b0, b1, a0);
    let d2 = orient(b0, b1, a1);
    let d3 = orient(a0, a1, b0);
    let d4 = orient(a0, a1, b1);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    false
}

/// An open polyline given by its vertices.
#[derive(Debug, Clone, PartialEq)]
pub struct Polyline {
    pub vertices: Vec<Point2>,
}

impl Polyline {
    pub fn new(vertices: Vec<Point2>) -> Self {
        assert!(vertices.len() >= 2, "polyline needs at least two vertices");
        Polyline { vertices }
    }

    /// Exact Euclidean distance to the polyline (per-segment minimum).
    pub fn distance(&self, p: Point2) -> f64 {
        let mut best = f64::INFINITY;
        for w in self.vertices.windows(2) {
            best = num::min(best, dist_to_segment(w[0], w[1], p));
        }
        best
    }

    /// Signed side of `p` relative to the nearest segment: positive on the
    /// left of the segment's direction. Used to decide two-rock regions.
    pub fn side(&self, p: Point2) -> f64 {
        let mut best = f64::INFINITY;
        let mut side = 0.0;
        for w in self.vertices.windows(2) {
            let d = dist_to_segment(w[0], w[1], p);
            if d < best {
                best = d;
                side = orient(w[0], w[1], p);
            }
        }
        if side >= 0.0 {
            1.0
        } else {
            -1.0
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn segment_projection_clamps() {
        let a = Point2::new(0.0, 0.0);
        let b = Point2::new(1.0, 0.0);
        let (q, s) = project_to_segment(a, b, Point2::new(0.25, 1.0));
        assert_eq!(q, Point2::new(0.25, 0.0));
        assert_eq!(s, 0.25);
        let (q, s) = project_to_segment(a, b, Point2::new(2.0, 0.5));
        assert_eq!(q, b);
        assert_eq!(s, 1.0);
    }

    #[test]
    fn disjoint_segment_distance() {
        let d = segment_segment_distance(
            Point2::new(0.0, 0.0),
            Point2::new(1.0, 0.0),
            Point2::new(0.0, 0.5),
            Point2::new(1.0, 0.5),
        );
        assert!(num::abs(d - 0.5) < 1e-15);
        // Crossing segments have distance zero.
        let d = segment_segment_distance(
            Point2::new(0.0, 0.0),
            Point2::new(1.0, 1.0),
            Point2::new(0.0, 1.0),
            Point2::new(1.0, 0.0),
        );
        assert_eq!(d, 0.0);
    }

    #[test]
    fn polyline_side_is_stable() {
        let pl = Polyline::new(alloc::vec![Point2::new(0.0, 0.0), Point2::new(1.0, 0.0)]);
        assert_eq!(pl.side(Point2::new(0.5, 0.2)), 1.0);
        assert_eq!(pl.side(Point2::new(0.5, -0.2)), -1.0);
    }
}
