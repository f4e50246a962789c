use crate::error::{invalid, Result};
use crate::math::{cos, sin, TAU};
use crate::vec2::Point;

use super::InterfaceCurve;

#[derive(Clone, Debug, PartialEq)]
pub enum DomainKind {
    Disk {
        center: Point,
        radius: f64,
    },
    /// Axis-aligned rectangle given by its lower-left and upper-right corners.
    Rectangle {
        min: Point,
        max: Point,
    },
}

/// The outer domain `Ω`.
#[derive(Clone, Debug, PartialEq)]
pub struct Domain {
    pub kind: DomainKind,
    /// Minimum number of boundary segments used when meshing.
    pub boundary_resolution: usize,
}

impl Domain {
    pub fn disk(center: Point, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) || !center.is_finite() {
            return Err(invalid!(
                "disk radius must be positive and finite, got {radius}"
            ));
        }
        Ok(Domain {
            kind: DomainKind::Disk { center, radius },
            boundary_resolution: 32,
        })
    }

    pub fn rectangle(min: Point, max: Point) -> Result<Self> {
        if !(min.is_finite() && max.is_finite()) || !(max.x > min.x && max.y > min.y) {
            return Err(invalid!("rectangle must have positive area"));
        }
        Ok(Domain {
            kind: DomainKind::Rectangle { min, max },
            boundary_resolution: 16,
        })
    }

    pub fn with_boundary_resolution(mut self, n: usize) -> Result<Self> {
        if n < 3 {
            return Err(invalid!("boundary resolution must be at least 3"));
        }
        self.boundary_resolution = n;
        Ok(self)
    }

    /// Distance to `∂Ω`, positive inside and negative outside.
    pub fn boundary_distance(&self, p: Point) -> f64 {
        match self.kind {
            DomainKind::Disk { center, radius } => radius - p.distance(center),
            DomainKind::Rectangle { min, max } => {
                let dx = (p.x - min.x).min(max.x - p.x);
                let dy = (p.y - min.y).min(max.y - p.y);
                if dx >= 0.0 && dy >= 0.0 {
                    dx.min(dy)
                } else {
                    let ox = (min.x - p.x).max(p.x - max.x).max(0.0);
                    let oy = (min.y - p.y).max(p.y - max.y).max(0.0);
                    -crate::math::sqrt(ox * ox + oy * oy)
                }
            }
        }
    }

    pub fn contains(&self, p: Point) -> bool {
        self.boundary_distance(p) > 0.0
    }

    pub fn area(&self) -> f64 {
        match self.kind {
            DomainKind::Disk { radius, .. } => 0.5 * TAU * radius * radius,
            DomainKind::Rectangle { min, max } => (max.x - min.x) * (max.y - min.y),
        }
    }

    pub fn perimeter(&self) -> f64 {
        match self.kind {
            DomainKind::Disk { radius, .. } => TAU * radius,
            DomainKind::Rectangle { min, max } => 2.0 * ((max.x - min.x) + (max.y - min.y)),
        }
    }

    /// Nearest point of `∂Ω`.
    pub fn project_to_boundary(&self, p: Point) -> Point {
        match self.kind {
            DomainKind::Disk { center, radius } => {
                let v = p - center;
                let n = v.norm();
                if n == 0.0 {
                    center + Point::new(radius, 0.0)
                } else {
                    center + v * (radius / n)
                }
            }
            DomainKind::Rectangle { min, max } => {
                let q = Point::new(p.x.clamp(min.x, max.x), p.y.clamp(min.y, max.y));
                let cands = [
                    (q.x - min.x, Point::new(min.x, q.y)),
                    (max.x - q.x, Point::new(max.x, q.y)),
                    (q.y - min.y, Point::new(q.x, min.y)),
                    (max.y - q.y, Point::new(q.x, max.y)),
                ];
                let mut best = cands[0];
                for c in &cands[1..] {
                    if c.0 < best.0 {
                        best = *c;
                    }
                }
                best.1
            }
        }
    }

    /// Point of `∂Ω` at fraction `t ∈ [0, 1)` of the boundary, counterclockwise.
    pub fn boundary_point(&self, t: f64) -> Point {
        match self.kind {
            DomainKind::Disk { center, radius } => {
                let a = TAU * t;
                center + Point::new(radius * cos(a), radius * sin(a))
            }
            DomainKind::Rectangle { min, max } => {
                let (w, h) = (max.x - min.x, max.y - min.y);
                let mut s = (t - crate::math::floor(t)) * 2.0 * (w + h);
                if s < w {
                    return Point::new(min.x + s, min.y);
                }
                s -= w;
                if s < h {
                    return Point::new(max.x, min.y + s);
                }
                s -= h;
                if s < w {
                    return Point::new(max.x - s, max.y);
                }
                s -= w;
                Point::new(min.x, max.y - s)
            }
        }
    }

    /// Smallest distance from the curve to `∂Ω`, sampled along the curve.
    ///
    /// Fails when the curve is not strictly inside the domain.
    pub fn interface_margin(&self, curve: &InterfaceCurve) -> Result<f64> {
        let n = 512;
        let len = curve.perimeter();
        let mut margin = f64::INFINITY;
        for k in 0..n {
            let p = curve.locate(len * k as f64 / n as f64).point;
            margin = margin.min(self.boundary_distance(p));
        }
        for c in curve.corners() {
            margin = margin.min(self.boundary_distance(c));
        }
        if margin <= 0.0 {
            return Err(invalid!(
                "interface curve is not strictly inside the domain"
            ));
        }
        Ok(margin)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn disk_distance_and_projection() {
        let d = Domain::disk(Point::new(0.0, 0.0), 2.0).unwrap();
        assert_eq!(d.boundary_distance(Point::new(0.5, 0.0)), 1.5);
        assert!(d.boundary_distance(Point::new(3.0, 0.0)) < 0.0);
        let q = d.project_to_boundary(Point::new(0.0, 0.3));
        assert!((q.y - 2.0).abs() < 1e-15);
        assert!(Domain::disk(Point::ZERO, 0.0).is_err());
    }

    #[test]
    fn rectangle_boundary_walk() {
        let d = Domain::rectangle(Point::new(-1.0, -1.0), Point::new(1.0, 2.0)).unwrap();
        assert_eq!(d.area(), 6.0);
        assert_eq!(d.boundary_distance(Point::new(0.0, 1.5)), 0.5);
        for k in 0..40 {
            let p = d.boundary_point(k as f64 / 40.0);
            assert!(d.boundary_distance(p).abs() < 1e-14);
        }
        assert!(Domain::rectangle(Point::new(0.0, 0.0), Point::new(0.0, 1.0)).is_err());
    }
}
