use alloc::vec::Vec;

use crate::error::{invalid, Result};
use crate::quadrature::GaussLegendre;
use crate::vec2::{Point, Vec2};

use super::polygon::{is_simple, signed_area};

const LENGTH_NODES: usize = 8;

/// Closed C¹ curve through sample points with prescribed unit tangents.
///
/// Segment `i` joins `points[i]` to `points[i + 1]` by the cubic Hermite
/// interpolant whose end derivatives are the unit tangents scaled by the
/// chord length.
#[derive(Clone, Debug)]
pub struct HermiteSpline {
    points: Vec<Point>,
    tangents: Vec<Vec2>,
    lengths: Vec<f64>,
    cumulative: Vec<f64>,
    /// Chord midpoint and a radius enclosing each segment, for pruning.
    bounds: Vec<(Point, f64)>,
    rule: GaussLegendre,
}

/// Closest point on a spline.
#[derive(Clone, Copy, Debug)]
pub(crate) struct SplineHit {
    pub point: Point,
    pub segment: usize,
    pub t: f64,
    pub distance: f64,
}

impl HermiteSpline {
    /// Builds the spline. Without tangents, they are estimated from the
    /// neighbouring samples. Clockwise input is reversed.
    pub fn new(points: Vec<Point>, tangents: Option<Vec<Vec2>>) -> Result<Self> {
        let n = points.len();
        if n < 4 {
            return Err(invalid!("parametric curve needs at least 4 samples"));
        }
        if points.iter().any(|p| !p.is_finite()) {
            return Err(invalid!("parametric samples must be finite"));
        }
        for i in 0..n {
            if points[i].distance(points[(i + 1) % n]) == 0.0 {
                return Err(invalid!("parametric curve repeats sample {i}"));
            }
        }
        let mut tangents = match tangents {
            Some(t) => {
                if t.len() != n {
                    return Err(invalid!("expected {n} tangents, got {}", t.len()));
                }
                if t.iter().any(|v| !(v.is_finite() && v.norm() > 0.0)) {
                    return Err(invalid!("tangents must be finite and nonzero"));
                }
                t.into_iter().map(Vec2::normalized).collect()
            }
            None => estimate_tangents(&points),
        };
        let mut points = points;
        let area = signed_area(&points);
        if area.abs() < 1e-14 {
            return Err(invalid!("parametric curve encloses no area"));
        }
        if area < 0.0 {
            points.reverse();
            tangents.reverse();
            for t in &mut tangents {
                *t = -*t;
            }
        }
        if !is_simple(&points) {
            return Err(invalid!("parametric curve is self-intersecting"));
        }
        Ok(Self::from_parts(points, tangents))
    }

    /// Trusted constructor: counterclockwise, simple, unit tangents.
    pub(crate) fn from_parts(points: Vec<Point>, tangents: Vec<Vec2>) -> Self {
        let n = points.len();
        let rule = GaussLegendre::new(LENGTH_NODES);
        let mut s = HermiteSpline {
            points,
            tangents,
            lengths: Vec::with_capacity(n),
            cumulative: Vec::with_capacity(n + 1),
            bounds: Vec::with_capacity(n),
            rule,
        };
        s.cumulative.push(0.0);
        for i in 0..n {
            let len = s.partial_length(i, 1.0);
            s.lengths.push(len);
            let last = s.cumulative[i];
            s.cumulative.push(last + len);
            let (p0, p1) = (s.points[i], s.points[(i + 1) % n]);
            let mid = (p0 + p1) * 0.5;
            let mut r: f64 = 0.0;
            for k in 0..=16 {
                r = r.max(s.eval(i, k as f64 / 16.0).distance(mid));
            }
            // Between samples the curve can stray at most a small fraction
            // of the segment length further out.
            s.bounds.push((mid, r + len / 32.0));
        }
        s
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn tangents(&self) -> &[Vec2] {
        &self.tangents
    }

    pub fn segments(&self) -> usize {
        self.points.len()
    }

    pub fn length(&self) -> f64 {
        self.cumulative[self.points.len()]
    }

    pub fn segment_start(&self, i: usize) -> f64 {
        self.cumulative[i]
    }

    fn ends(&self, i: usize) -> (Point, Vec2, Point, Vec2) {
        let n = self.points.len();
        let j = (i + 1) % n;
        let (p0, p1) = (self.points[i], self.points[j]);
        let chord = p0.distance(p1);
        (p0, self.tangents[i] * chord, p1, self.tangents[j] * chord)
    }

    pub(crate) fn eval(&self, i: usize, t: f64) -> Point {
        let (p0, m0, p1, m1) = self.ends(i);
        let t2 = t * t;
        let t3 = t2 * t;
        p0 * (2.0 * t3 - 3.0 * t2 + 1.0)
            + m0 * (t3 - 2.0 * t2 + t)
            + p1 * (-2.0 * t3 + 3.0 * t2)
            + m1 * (t3 - t2)
    }

    pub(crate) fn derivative(&self, i: usize, t: f64) -> Vec2 {
        let (p0, m0, p1, m1) = self.ends(i);
        let t2 = t * t;
        p0 * (6.0 * t2 - 6.0 * t)
            + m0 * (3.0 * t2 - 4.0 * t + 1.0)
            + p1 * (-6.0 * t2 + 6.0 * t)
            + m1 * (3.0 * t2 - 2.0 * t)
    }

    pub(crate) fn second_derivative(&self, i: usize, t: f64) -> Vec2 {
        let (p0, m0, p1, m1) = self.ends(i);
        p0 * (12.0 * t - 6.0) + m0 * (6.0 * t - 4.0) + p1 * (-12.0 * t + 6.0) + m1 * (6.0 * t - 2.0)
    }

    /// Unit tangent at parameter `t` of segment `i`.
    pub(crate) fn unit_tangent(&self, i: usize, t: f64) -> Vec2 {
        self.derivative(i, t).normalized()
    }

    fn partial_length(&self, i: usize, t: f64) -> f64 {
        self.rule
            .integrate(0.0, t, |u| self.derivative(i, u).norm())
    }

    /// Segment and parameter for arc length `s ∈ [0, L)`.
    pub(crate) fn param_at(&self, s: f64) -> (usize, f64) {
        let n = self.points.len();
        let i = self.cumulative[1..=n]
            .partition_point(|&c| c <= s)
            .min(n - 1);
        let target = s - self.cumulative[i];
        let len = self.lengths[i];
        let mut t = (target / len).clamp(0.0, 1.0);
        for _ in 0..20 {
            let f = self.partial_length(i, t) - target;
            let d = self.derivative(i, t).norm();
            let step = f / d;
            t = (t - step).clamp(0.0, 1.0);
            if step.abs() < 1e-14 {
                break;
            }
        }
        (i, t)
    }

    pub(crate) fn arclength_of(&self, i: usize, t: f64) -> f64 {
        self.cumulative[i] + self.partial_length(i, t)
    }

    fn closest_on_segment(&self, i: usize, x: Point) -> SplineHit {
        let mut best_t = 0.0;
        let mut best_d = f64::INFINITY;
        for k in 0..=8 {
            let t = k as f64 / 8.0;
            let d = self.eval(i, t).distance(x);
            if d < best_d {
                best_d = d;
                best_t = t;
            }
        }
        // Newton on g(t) = (γ(t) - x, γ'(t)).
        let mut t = best_t;
        for _ in 0..30 {
            let r = self.eval(i, t) - x;
            let d1 = self.derivative(i, t);
            let d2 = self.second_derivative(i, t);
            let g = r.dot(d1);
            let dg = d1.norm_sq() + r.dot(d2);
            if dg <= 0.0 {
                break;
            }
            let next = (t - g / dg).clamp(0.0, 1.0);
            let moved = (next - t).abs();
            t = next;
            if moved < 1e-15 {
                break;
            }
        }
        let p = self.eval(i, t);
        let d = p.distance(x);
        if d <= best_d {
            SplineHit {
                point: p,
                segment: i,
                t,
                distance: d,
            }
        } else {
            SplineHit {
                point: self.eval(i, best_t),
                segment: i,
                t: best_t,
                distance: best_d,
            }
        }
    }

    pub(crate) fn closest(&self, x: Point) -> SplineHit {
        let n = self.points.len();
        let mut order: Vec<(f64, usize)> = (0..n)
            .map(|i| {
                let (mid, r) = self.bounds[i];
                (x.distance(mid) - r, i)
            })
            .collect();
        order.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut best = self.closest_on_segment(order[0].1, x);
        for &(lb, i) in &order[1..] {
            if lb > best.distance {
                break;
            }
            let hit = self.closest_on_segment(i, x);
            if hit.distance < best.distance {
                best = hit;
            }
        }
        best
    }

    /// Area enclosed by the spline (Green's theorem with Gauss quadrature).
    pub fn area(&self) -> f64 {
        let mut a = 0.0;
        for i in 0..self.points.len() {
            a += self
                .rule
                .integrate(0.0, 1.0, |t| self.eval(i, t).cross(self.derivative(i, t)));
        }
        0.5 * a
    }

    /// Centroid of the enclosed region.
    pub fn centroid(&self) -> Point {
        let mut cx = 0.0;
        let mut cy = 0.0;
        for i in 0..self.points.len() {
            cx += self.rule.integrate(0.0, 1.0, |t| {
                let p = self.eval(i, t);
                let d = self.derivative(i, t);
                0.5 * p.x * p.x * d.y
            });
            cy += self.rule.integrate(0.0, 1.0, |t| {
                let p = self.eval(i, t);
                let d = self.derivative(i, t);
                -0.5 * p.y * p.y * d.x
            });
        }
        let a = self.area();
        Point::new(cx / a, cy / a)
    }
}

fn estimate_tangents(points: &[Point]) -> Vec<Vec2> {
    let n = points.len();
    (0..n)
        .map(|i| {
            let prev = points[(i + n - 1) % n];
            let next = points[(i + 1) % n];
            let p = points[i];
            // Derivative of the parabola through three non-uniform samples.
            let (h0, h1) = (p.distance(prev), next.distance(p));
            let d = (p - prev) * (h1 / (h0 * (h0 + h1))) + (next - p) * (h0 / (h1 * (h0 + h1)));
            d.normalized()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::{cos, sin, TAU};

    fn circle_samples(n: usize, r: f64) -> (Vec<Point>, Vec<Vec2>) {
        let pts = (0..n).map(|k| {
            let a = TAU * k as f64 / n as f64;
            Point::new(r * cos(a), r * sin(a))
        });
        let tans = (0..n).map(|k| {
            let a = TAU * k as f64 / n as f64;
            Vec2::new(-sin(a), cos(a))
        });
        (pts.collect(), tans.collect())
    }

    #[test]
    fn spline_circle_length_and_area() {
        let (p, t) = circle_samples(128, 1.5);
        let s = HermiteSpline::new(p, Some(t)).unwrap();
        assert!((s.length() - TAU * 1.5).abs() < 1e-6);
        assert!((s.area() - 0.5 * TAU * 2.25).abs() < 1e-6);
        let c = s.centroid();
        assert!(c.norm() < 1e-10);
    }

    #[test]
    fn closest_point_on_spline_circle() {
        let (p, t) = circle_samples(64, 1.0);
        let s = HermiteSpline::new(p, Some(t)).unwrap();
        for k in 0..50 {
            let a = 0.37 + 0.123 * k as f64;
            let r = 0.6 + 0.02 * k as f64;
            let x = Point::new(r * cos(a), r * sin(a));
            let hit = s.closest(x);
            assert!((hit.distance - (r - 1.0).abs()).abs() < 1e-5, "k={k}");
        }
    }

    #[test]
    fn clockwise_samples_are_reversed() {
        let (mut p, mut t) = circle_samples(32, 1.0);
        p.reverse();
        t.reverse();
        for v in &mut t {
            *v = -*v;
        }
        let s = HermiteSpline::new(p, Some(t)).unwrap();
        assert!(s.area() > 0.0);
        let (i, u) = s.param_at(0.1);
        assert!(s.eval(i, u).cross(s.unit_tangent(i, u)) > 0.0);
    }

    #[test]
    fn arc_length_inversion_round_trip() {
        let (p, _) = circle_samples(40, 1.0);
        let s = HermiteSpline::new(p, None).unwrap();
        for k in 0..37 {
            let target = s.length() * k as f64 / 37.0;
            let (i, t) = s.param_at(target);
            assert!((s.arclength_of(i, t) - target).abs() < 1e-12);
        }
    }
}
