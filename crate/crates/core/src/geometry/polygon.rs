use alloc::vec::Vec;

use crate::error::{invalid, Result};
use crate::vec2::{Point, Vec2};

/// A simple closed polygon with counterclockwise vertex order.
#[derive(Clone, Debug, PartialEq)]
pub struct Polygon {
    vertices: Vec<Point>,
    /// Arc length at each vertex; `cumulative[n]` is the perimeter.
    cumulative: Vec<f64>,
}

/// Closest point of a polygon to a query point.
#[derive(Clone, Copy, Debug)]
pub(crate) struct PolygonHit {
    pub point: Point,
    pub edge: usize,
    /// Parameter along the edge in `[0, 1]`.
    pub t: f64,
    pub distance: f64,
}

impl Polygon {
    /// Builds a polygon, reversing the vertex order if it is clockwise.
    pub fn new(mut vertices: Vec<Point>) -> Result<Self> {
        if vertices.len() < 3 {
            return Err(invalid!("polygon needs at least 3 vertices"));
        }
        if vertices.iter().any(|v| !v.is_finite()) {
            return Err(invalid!("polygon vertices must be finite"));
        }
        let n = vertices.len();
        for i in 0..n {
            if vertices[i].distance(vertices[(i + 1) % n]) == 0.0 {
                return Err(invalid!("polygon has repeated consecutive vertex {i}"));
            }
        }
        let area = signed_area(&vertices);
        if area.abs() < 1e-14 {
            return Err(invalid!("polygon encloses no area"));
        }
        if area < 0.0 {
            vertices.reverse();
        }
        if !is_simple(&vertices) {
            return Err(invalid!("polygon is self-intersecting"));
        }
        let mut cumulative = Vec::with_capacity(n + 1);
        cumulative.push(0.0);
        for i in 0..n {
            let next = cumulative[i] + vertices[i].distance(vertices[(i + 1) % n]);
            cumulative.push(next);
        }
        Ok(Polygon {
            vertices,
            cumulative,
        })
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn edge(&self, i: usize) -> (Point, Point) {
        let n = self.vertices.len();
        (self.vertices[i % n], self.vertices[(i + 1) % n])
    }

    pub fn edge_length(&self, i: usize) -> f64 {
        self.cumulative[i + 1] - self.cumulative[i]
    }

    /// Outward unit normal of edge `i`.
    pub fn edge_normal(&self, i: usize) -> Vec2 {
        let (a, b) = self.edge(i);
        let e = (b - a).normalized();
        Vec2::new(e.y, -e.x)
    }

    pub fn perimeter(&self) -> f64 {
        self.cumulative[self.vertices.len()]
    }

    pub fn area(&self) -> f64 {
        signed_area(&self.vertices)
    }

    pub fn centroid(&self) -> Point {
        let n = self.vertices.len();
        let mut c = Vec2::ZERO;
        let mut a2 = 0.0;
        for i in 0..n {
            let (p, q) = self.edge(i);
            let w = p.cross(q);
            a2 += w;
            c += (p + q) * w;
        }
        c / (3.0 * a2)
    }

    /// Arc length at the start of edge `i`.
    pub fn edge_start(&self, i: usize) -> f64 {
        self.cumulative[i]
    }

    /// Edge index and local parameter for arc length `s ∈ [0, L)`.
    pub(crate) fn edge_at(&self, s: f64) -> (usize, f64) {
        let n = self.vertices.len();
        let i = self.cumulative[1..=n]
            .partition_point(|&c| c <= s)
            .min(n - 1);
        let len = self.edge_length(i);
        (i, ((s - self.cumulative[i]) / len).clamp(0.0, 1.0))
    }

    pub(crate) fn closest(&self, x: Point) -> PolygonHit {
        let mut best = PolygonHit {
            point: self.vertices[0],
            edge: 0,
            t: 0.0,
            distance: f64::INFINITY,
        };
        for i in 0..self.vertices.len() {
            let (a, b) = self.edge(i);
            let e = b - a;
            let t = ((x - a).dot(e) / e.norm_sq()).clamp(0.0, 1.0);
            let q = a + e * t;
            let d = x.distance(q);
            if d < best.distance {
                best = PolygonHit {
                    point: q,
                    edge: i,
                    t,
                    distance: d,
                };
            }
        }
        best
    }

    /// Crossing-number point-in-polygon test.
    pub fn contains(&self, x: Point) -> bool {
        let n = self.vertices.len();
        let mut inside = false;
        let mut j = n - 1;
        for i in 0..n {
            let (pi, pj) = (self.vertices[i], self.vertices[j]);
            if (pi.y > x.y) != (pj.y > x.y) {
                let xc = pj.x + (x.y - pj.y) * (pi.x - pj.x) / (pi.y - pj.y);
                if x.x < xc {
                    inside = !inside;
                }
            }
            j = i;
        }
        inside
    }
}

pub(crate) fn signed_area(pts: &[Point]) -> f64 {
    let n = pts.len();
    let mut a = 0.0;
    for i in 0..n {
        a += pts[i].cross(pts[(i + 1) % n]);
    }
    0.5 * a
}

fn segments_cross(a: Point, b: Point, c: Point, d: Point) -> bool {
    let o1 = (b - a).cross(c - a);
    let o2 = (b - a).cross(d - a);
    let o3 = (d - c).cross(a - c);
    let o4 = (d - c).cross(b - c);
    if ((o1 > 0.0 && o2 < 0.0) || (o1 < 0.0 && o2 > 0.0))
        && ((o3 > 0.0 && o4 < 0.0) || (o3 < 0.0 && o4 > 0.0))
    {
        return true;
    }
    let on = |p: Point, q: Point, r: Point, o: f64| {
        o == 0.0
            && r.x >= p.x.min(q.x)
            && r.x <= p.x.max(q.x)
            && r.y >= p.y.min(q.y)
            && r.y <= p.y.max(q.y)
    };
    on(a, b, c, o1) || on(a, b, d, o2) || on(c, d, a, o3) || on(c, d, b, o4)
}

/// True when no two non-adjacent edges of the closed polyline meet.
pub(crate) fn is_simple(pts: &[Point]) -> bool {
    let n = pts.len();
    for i in 0..n {
        let (a, b) = (pts[i], pts[(i + 1) % n]);
        for j in i + 1..n {
            if j == i + 1 || (i == 0 && j == n - 1) {
                continue;
            }
            let (c, d) = (pts[j], pts[(j + 1) % n]);
            if segments_cross(a, b, c, d) {
                return false;
            }
        }
    }
    true
}
