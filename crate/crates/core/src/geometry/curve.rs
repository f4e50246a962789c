use alloc::boxed::Box;
use alloc::vec::Vec;

use crate::error::{invalid, Error, Result};
use crate::math::{atan2, ceil, cos, sin, PI, TAU};
use crate::quadrature::GaussLegendre;
use crate::vec2::{Point, Vec2};

use super::polygon::Polygon;
use super::spline::HermiteSpline;

/// Regularity class recorded with a curve.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Regularity {
    /// Piecewise smooth with corners.
    Lipschitz,
    /// `C^{1,α}` with the given exponent in `(0, 1]`.
    C1Alpha(f64),
    Smooth,
}

/// Curves are stored counterclockwise, so the outward normal of the enclosed
/// region is the tangent turned clockwise.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Orientation {
    Ccw,
}

#[derive(Clone, Debug)]
pub enum CurveKind {
    Circle { center: Point, radius: f64 },
    Polygon(Polygon),
    Parametric(HermiteSpline),
    LevelSetSmoothed(Box<SmoothedCurve>),
}

/// Outer level set of a mollified distance function, traced as a spline.
#[derive(Clone, Debug)]
pub struct SmoothedCurve {
    pub base: InterfaceCurve,
    pub mollification_radius: f64,
    pub level: f64,
    pub trace: HermiteSpline,
}

/// A closed, simple, counterclockwise curve `Γ = ∂Ω'`.
#[derive(Clone, Debug)]
pub struct InterfaceCurve {
    kind: CurveKind,
    regularity: Regularity,
}

/// Point on the curve addressed by arc length.
#[derive(Clone, Copy, Debug)]
pub struct CurvePoint {
    pub point: Point,
    pub tangent: Vec2,
    /// Outward unit normal (undefined at polygon corners, where the normal
    /// of the following edge is returned).
    pub normal: Vec2,
    pub arclength: f64,
}

/// Nearest curve point to a query point.
#[derive(Clone, Copy, Debug)]
pub struct ClosestPoint {
    pub point: Point,
    /// Gradient of the signed distance at the query point; on smooth parts
    /// of the curve this is the outward normal at `point`.
    pub normal: Vec2,
    pub arclength: f64,
    pub distance: f64,
    pub signed_distance: f64,
}

#[derive(Clone, Copy, Debug)]
pub struct QuadratureNode {
    pub point: Point,
    pub weight: f64,
    pub normal: Vec2,
    pub arclength: f64,
}

/// Quadrature for `∫_Γ f dH¹`.
#[derive(Clone, Debug)]
pub struct QuadratureRule1D {
    pub nodes: Vec<QuadratureNode>,
}

impl QuadratureRule1D {
    pub fn total_weight(&self) -> f64 {
        self.nodes.iter().map(|n| n.weight).sum()
    }

    pub fn integrate(&self, mut f: impl FnMut(&QuadratureNode) -> f64) -> f64 {
        self.nodes.iter().map(|n| n.weight * f(n)).sum()
    }
}

/// Curve sample used to seed a fitted mesh.
#[derive(Clone, Copy, Debug)]
pub struct CurveSample {
    pub point: Point,
    pub arclength: f64,
    pub corner: bool,
}

/// Largest sampled ratio `H¹(Γ ∩ B_r(x)) / r`.
#[derive(Clone, Copy, Debug)]
pub struct GrowthEstimate {
    pub constant: f64,
    pub center: Point,
    pub radius: f64,
}

#[derive(Clone, Copy, Debug)]
pub struct ChordArcEstimate {
    /// Largest intrinsic-over-Euclidean distance ratio among the pairs.
    pub ratio: f64,
    /// Set for curves with corners, where the ratio is not controlled by a
    /// `C^{1,α}` seminorm.
    pub has_corners: bool,
}

impl InterfaceCurve {
    pub fn circle(center: Point, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) || !center.is_finite() {
            return Err(invalid!(
                "circle radius must be positive and finite, got {radius}"
            ));
        }
        Ok(InterfaceCurve {
            kind: CurveKind::Circle { center, radius },
            regularity: Regularity::Smooth,
        })
    }

    /// Right isosceles triangle with vertices `(0,0), (½,0), (0,½)`.
    pub fn triangle() -> Self {
        let poly = Polygon::new(alloc::vec![
            Point::new(0.0, 0.0),
            Point::new(0.5, 0.0),
            Point::new(0.0, 0.5)
        ])
        .expect("fixed triangle is valid");
        InterfaceCurve {
            kind: CurveKind::Polygon(poly),
            regularity: Regularity::Lipschitz,
        }
    }

    pub fn polygon(vertices: Vec<Point>) -> Result<Self> {
        Ok(InterfaceCurve {
            kind: CurveKind::Polygon(Polygon::new(vertices)?),
            regularity: Regularity::Lipschitz,
        })
    }

    /// Closed spline through `points`; tangents are estimated when absent.
    pub fn parametric(
        points: Vec<Point>,
        tangents: Option<Vec<Vec2>>,
        regularity: Regularity,
    ) -> Result<Self> {
        if let Regularity::C1Alpha(a) = regularity {
            if !(a > 0.0 && a <= 1.0) {
                return Err(invalid!("Hölder exponent must lie in (0, 1], got {a}"));
            }
        }
        Ok(InterfaceCurve {
            kind: CurveKind::Parametric(HermiteSpline::new(points, tangents)?),
            regularity,
        })
    }

    /// Ellipse with semi-axes `a` (along x) and `b`, sampled at `samples`
    /// points with exact tangents.
    pub fn ellipse(center: Point, a: f64, b: f64, samples: usize) -> Result<Self> {
        if !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()) {
            return Err(invalid!("ellipse semi-axes must be positive"));
        }
        if samples < 8 {
            return Err(invalid!("ellipse needs at least 8 samples"));
        }
        let mut pts = Vec::with_capacity(samples);
        let mut tans = Vec::with_capacity(samples);
        for k in 0..samples {
            let t = TAU * k as f64 / samples as f64;
            pts.push(center + Vec2::new(a * cos(t), b * sin(t)));
            tans.push(Vec2::new(-a * sin(t), b * cos(t)));
        }
        Self::parametric(pts, Some(tans), Regularity::Smooth)
    }

    pub(crate) fn smoothed(s: SmoothedCurve) -> Self {
        InterfaceCurve {
            kind: CurveKind::LevelSetSmoothed(Box::new(s)),
            regularity: Regularity::Smooth,
        }
    }

    pub fn kind(&self) -> &CurveKind {
        &self.kind
    }

    pub fn regularity(&self) -> Regularity {
        self.regularity
    }

    pub fn orientation(&self) -> Orientation {
        Orientation::Ccw
    }

    pub fn has_corners(&self) -> bool {
        matches!(self.kind, CurveKind::Polygon(_))
    }

    /// Polygon vertices; empty for smooth curves.
    pub fn corners(&self) -> Vec<Point> {
        match &self.kind {
            CurveKind::Polygon(p) => p.vertices().to_vec(),
            _ => Vec::new(),
        }
    }

    fn spline(&self) -> Option<&HermiteSpline> {
        match &self.kind {
            CurveKind::Parametric(s) => Some(s),
            CurveKind::LevelSetSmoothed(s) => Some(&s.trace),
            _ => None,
        }
    }

    pub fn perimeter(&self) -> f64 {
        match &self.kind {
            CurveKind::Circle { radius, .. } => TAU * radius,
            CurveKind::Polygon(p) => p.perimeter(),
            _ => self.spline().unwrap().length(),
        }
    }

    pub fn enclosed_area(&self) -> f64 {
        match &self.kind {
            CurveKind::Circle { radius, .. } => PI * radius * radius,
            CurveKind::Polygon(p) => p.area(),
            _ => self.spline().unwrap().area(),
        }
    }

    /// Centroid of the enclosed region `Ω'`.
    pub fn centroid(&self) -> Point {
        match &self.kind {
            CurveKind::Circle { center, .. } => *center,
            CurveKind::Polygon(p) => p.centroid(),
            _ => self.spline().unwrap().centroid(),
        }
    }

    /// `(min, max)` corners of a box containing the curve.
    pub fn bounding_box(&self) -> (Point, Point) {
        match &self.kind {
            CurveKind::Circle { center, radius } => (
                *center - Vec2::new(*radius, *radius),
                *center + Vec2::new(*radius, *radius),
            ),
            _ => {
                let n = 1024;
                let len = self.perimeter();
                let mut lo = Point::new(f64::INFINITY, f64::INFINITY);
                let mut hi = Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
                let mut extend = |p: Point| {
                    lo = Point::new(lo.x.min(p.x), lo.y.min(p.y));
                    hi = Point::new(hi.x.max(p.x), hi.y.max(p.y));
                };
                for k in 0..n {
                    extend(self.locate(len * k as f64 / n as f64).point);
                }
                for c in self.corners() {
                    extend(c);
                }
                let pad = len / n as f64;
                (lo - Vec2::new(pad, pad), hi + Vec2::new(pad, pad))
            }
        }
    }

    /// Point at arc length `s` (taken modulo the perimeter).
    pub fn locate(&self, s: f64) -> CurvePoint {
        let len = self.perimeter();
        let s = s - crate::math::floor(s / len) * len;
        let s = if s >= len { 0.0 } else { s };
        match &self.kind {
            CurveKind::Circle { center, radius } => {
                let a = s / radius;
                let n = Vec2::new(cos(a), sin(a));
                CurvePoint {
                    point: *center + n * *radius,
                    tangent: n.perp(),
                    normal: n,
                    arclength: s,
                }
            }
            CurveKind::Polygon(p) => {
                let (i, t) = p.edge_at(s);
                let (a, b) = p.edge(i);
                let tangent = (b - a).normalized();
                CurvePoint {
                    point: a.lerp(b, t),
                    tangent,
                    normal: p.edge_normal(i),
                    arclength: s,
                }
            }
            _ => {
                let sp = self.spline().unwrap();
                let (i, t) = sp.param_at(s);
                let tangent = sp.unit_tangent(i, t);
                CurvePoint {
                    point: sp.eval(i, t),
                    tangent,
                    normal: Vec2::new(tangent.y, -tangent.x),
                    arclength: s,
                }
            }
        }
    }

    pub fn closest(&self, x: Point) -> ClosestPoint {
        match &self.kind {
            CurveKind::Circle { center, radius } => {
                let v = x - *center;
                let r = v.norm();
                let n = if r > 0.0 { v / r } else { Vec2::new(1.0, 0.0) };
                let mut a = atan2(n.y, n.x);
                if a < 0.0 {
                    a += TAU;
                }
                ClosestPoint {
                    point: *center + n * *radius,
                    normal: n,
                    arclength: a * radius,
                    distance: (r - radius).abs(),
                    signed_distance: r - radius,
                }
            }
            CurveKind::Polygon(p) => {
                let hit = p.closest(x);
                let inside = hit.distance > 0.0 && p.contains(x);
                let sign = if inside { -1.0 } else { 1.0 };
                let normal = if hit.distance > 1e-14 * p.perimeter() {
                    (x - hit.point) * (sign / hit.distance)
                } else {
                    p.edge_normal(hit.edge)
                };
                ClosestPoint {
                    point: hit.point,
                    normal,
                    arclength: p.edge_start(hit.edge) + hit.t * p.edge_length(hit.edge),
                    distance: hit.distance,
                    signed_distance: sign * hit.distance,
                }
            }
            _ => {
                let sp = self.spline().unwrap();
                let hit = sp.closest(x);
                let t = sp.unit_tangent(hit.segment, hit.t);
                let normal = Vec2::new(t.y, -t.x);
                let sign = if (x - hit.point).dot(normal) < 0.0 {
                    -1.0
                } else {
                    1.0
                };
                ClosestPoint {
                    point: hit.point,
                    normal,
                    arclength: sp.arclength_of(hit.segment, hit.t),
                    distance: hit.distance,
                    signed_distance: sign * hit.distance,
                }
            }
        }
    }

    /// Signed distance `d_Γ`: negative inside `Ω'`, positive outside.
    pub fn signed_distance(&self, x: Point) -> f64 {
        match &self.kind {
            CurveKind::Circle { center, radius } => x.distance(*center) - radius,
            _ => self.closest(x).signed_distance,
        }
    }

    /// Outward normal at the curve point nearest to `x`.
    pub fn normal_at(&self, x: Point) -> Vec2 {
        self.closest(x).normal
    }

    pub fn contains(&self, x: Point) -> bool {
        self.signed_distance(x) < 0.0
    }

    /// Composite Gauss–Legendre quadrature.
    ///
    /// * circle: `n ≥ 8` equal arcs, one node each (spectrally accurate for
    ///   periodic integrands);
    /// * polygon: `n ≥ 2` nodes per edge, so corners are never nodes;
    /// * spline curves: `n ≥ 8` nodes in total, at least 4 per segment.
    pub fn quadrature(&self, n: usize) -> Result<QuadratureRule1D> {
        let mut nodes = Vec::new();
        match &self.kind {
            CurveKind::Circle { center, radius } => {
                if n < 8 {
                    return Err(invalid!("circle quadrature needs n >= 8, got {n}"));
                }
                let w = TAU * radius / n as f64;
                for k in 0..n {
                    let a = TAU * (k as f64 + 0.5) / n as f64;
                    let nu = Vec2::new(cos(a), sin(a));
                    nodes.push(QuadratureNode {
                        point: *center + nu * *radius,
                        weight: w,
                        normal: nu,
                        arclength: a * radius,
                    });
                }
            }
            CurveKind::Polygon(p) => {
                if n < 2 {
                    return Err(invalid!(
                        "polygon quadrature needs n >= 2 per edge, got {n}"
                    ));
                }
                let g = GaussLegendre::new(n);
                for i in 0..p.len() {
                    let (a, b) = p.edge(i);
                    let len = p.edge_length(i);
                    let nu = p.edge_normal(i);
                    for (t, w) in g.mapped(0.0, 1.0) {
                        nodes.push(QuadratureNode {
                            point: a.lerp(b, t),
                            weight: w * len,
                            normal: nu,
                            arclength: p.edge_start(i) + t * len,
                        });
                    }
                }
            }
            _ => {
                if n < 8 {
                    return Err(invalid!("spline quadrature needs n >= 8, got {n}"));
                }
                let sp = self.spline().unwrap();
                let segs = sp.segments();
                let m = n.div_ceil(segs).max(4);
                let g = GaussLegendre::new(m);
                for i in 0..segs {
                    for (t, w) in g.mapped(0.0, 1.0) {
                        let d = sp.derivative(i, t);
                        let tan = d.normalized();
                        nodes.push(QuadratureNode {
                            point: sp.eval(i, t),
                            weight: w * d.norm(),
                            normal: Vec2::new(tan.y, -tan.x),
                            arclength: sp.arclength_of(i, t),
                        });
                    }
                }
            }
        }
        Ok(QuadratureRule1D { nodes })
    }

    /// Points along the curve with spacing at most `h`; polygon corners are
    /// always included.
    pub fn sample_points(&self, h: f64) -> Result<Vec<CurveSample>> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(invalid!("sample spacing must be positive, got {h}"));
        }
        let mut out = Vec::new();
        match &self.kind {
            CurveKind::Polygon(p) => {
                for i in 0..p.len() {
                    let (a, b) = p.edge(i);
                    let len = p.edge_length(i);
                    let k = (ceil(len / h) as usize).max(1);
                    for m in 0..k {
                        let t = m as f64 / k as f64;
                        out.push(CurveSample {
                            point: a.lerp(b, t),
                            arclength: p.edge_start(i) + t * len,
                            corner: m == 0,
                        });
                    }
                }
            }
            _ => {
                let len = self.perimeter();
                let k = (ceil(len / h) as usize).max(8);
                for m in 0..k {
                    let s = len * m as f64 / k as f64;
                    out.push(CurveSample {
                        point: self.locate(s).point,
                        arclength: s,
                        corner: false,
                    });
                }
            }
        }
        Ok(out)
    }

    /// `sup H¹(Γ ∩ B_r(x)) / r` over the sampled centers and radii, using 64
    /// initial panels.
    pub fn measure_growth_constant(
        &self,
        centers: &[Point],
        radii: &[f64],
    ) -> Result<GrowthEstimate> {
        self.measure_growth_constant_with(centers, radii, 64)
    }

    /// As [`measure_growth_constant`](Self::measure_growth_constant) with a
    /// chosen number of initial arc-length panels. Panels straddling `∂B_r`
    /// are bisected until they are shorter than `10⁻¹⁰·min(r, H¹(Γ))`.
    pub fn measure_growth_constant_with(
        &self,
        centers: &[Point],
        radii: &[f64],
        panels: usize,
    ) -> Result<GrowthEstimate> {
        if centers.is_empty() || radii.is_empty() {
            return Err(invalid!(
                "growth constant needs nonempty center and radius samples"
            ));
        }
        if radii.iter().any(|r| !(*r > 0.0 && r.is_finite())) {
            return Err(invalid!("growth radii must be positive"));
        }
        if panels == 0 {
            return Err(invalid!("growth constant needs at least one panel"));
        }
        let len = self.perimeter();
        let mut best = GrowthEstimate {
            constant: 0.0,
            center: centers[0],
            radius: radii[0],
        };
        for &c in centers {
            for &r in radii {
                let tol = 1e-10 * r.min(len);
                let mut measure = 0.0;
                for k in 0..panels {
                    let s0 = len * k as f64 / panels as f64;
                    let s1 = len * (k + 1) as f64 / panels as f64;
                    measure += self.length_in_ball(c, r, s0, s1, tol);
                }
                let ratio = measure / r;
                if ratio > best.constant {
                    best = GrowthEstimate {
                        constant: ratio,
                        center: c,
                        radius: r,
                    };
                }
            }
        }
        Ok(best)
    }

    /// Length of the arc `[s0, s1]` inside the closed ball. Uses that the
    /// arc lies within arc-length distance of its midpoint.
    fn length_in_ball(&self, c: Point, r: f64, s0: f64, s1: f64, tol: f64) -> f64 {
        let half = 0.5 * (s1 - s0);
        let mid = self.locate(s0 + half).point;
        let d = mid.distance(c);
        if d + half <= r {
            return s1 - s0;
        }
        if d - half > r {
            return 0.0;
        }
        if 2.0 * half <= tol {
            return if d <= r { s1 - s0 } else { 0.0 };
        }
        let sm = s0 + half;
        self.length_in_ball(c, r, s0, sm, tol) + self.length_in_ball(c, r, sm, s1, tol)
    }

    /// Largest ratio of intrinsic (shorter arc) to Euclidean distance over
    /// pairs of arc-length positions. Coincident points are skipped.
    pub fn chord_arc_ratio(&self, pairs: &[(f64, f64)]) -> Result<ChordArcEstimate> {
        let len = self.perimeter();
        let mut ratio: f64 = 0.0;
        let mut used = 0usize;
        for &(s, t) in pairs {
            let a = self.locate(s);
            let b = self.locate(t);
            let chord = a.point.distance(b.point);
            if chord <= 1e-14 * len {
                continue;
            }
            let gap = (a.arclength - b.arclength).abs();
            let intrinsic = gap.min(len - gap);
            ratio = ratio.max(intrinsic / chord);
            used += 1;
        }
        if used == 0 {
            return Err(invalid!(
                "chord-arc ratio needs at least one pair of distinct points"
            ));
        }
        Ok(ChordArcEstimate {
            ratio,
            has_corners: self.has_corners(),
        })
    }

    /// Chord-arc ratio over all pairs of `samples` equally spaced points.
    pub fn chord_arc_ratio_sampled(&self, samples: usize) -> Result<ChordArcEstimate> {
        let len = self.perimeter();
        let s: Vec<f64> = (0..samples)
            .map(|k| len * k as f64 / samples as f64)
            .collect();
        let mut pairs = Vec::with_capacity(samples * samples / 2);
        for i in 0..samples {
            for j in i + 1..samples {
                pairs.push((s[i], s[j]));
            }
        }
        self.chord_arc_ratio(&pairs)
    }

    /// `max |ν(x) − ν(y)| / |x − y|^α` over all pairs of `samples` equally
    /// spaced points.
    pub fn normal_holder_seminorm(&self, alpha: f64, samples: usize) -> Result<f64> {
        if self.has_corners() {
            return Err(invalid!("the normal of a polygon is discontinuous"));
        }
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(invalid!("Hölder exponent must lie in (0, 1], got {alpha}"));
        }
        if samples < 2 {
            return Err(invalid!("need at least two samples"));
        }
        let len = self.perimeter();
        let pts: Vec<CurvePoint> = (0..samples)
            .map(|k| self.locate(len * k as f64 / samples as f64))
            .collect();
        let mut best: f64 = 0.0;
        for i in 0..samples {
            for j in i + 1..samples {
                let dx = pts[i].point.distance(pts[j].point);
                if dx <= 0.0 {
                    continue;
                }
                let dn = pts[i].normal.distance(pts[j].normal);
                best = best.max(dn / libm::pow(dx, alpha));
            }
        }
        Ok(best)
    }

    /// Whether `H¹(Γ) ≤ (1 + seminorm)²`.
    pub fn perimeter_bound_check(&self, seminorm_estimate: f64) -> Result<bool> {
        perimeter_bound(self.perimeter(), seminorm_estimate)
    }

    /// Maps an arc-length position into `[0, L)`.
    pub fn wrap_arclength(&self, s: f64) -> f64 {
        let len = self.perimeter();
        let w = s - crate::math::floor(s / len) * len;
        if w >= len {
            0.0
        } else {
            w
        }
    }

    /// Distance from `x` to the nearest corner, `∞` for smooth curves.
    pub fn corner_distance(&self, x: Point) -> f64 {
        self.corners()
            .iter()
            .map(|c| c.distance(x))
            .fold(f64::INFINITY, f64::min)
    }
}

/// `perimeter ≤ (1 + seminorm)²` for a supplied seminorm estimate.
pub fn perimeter_bound(perimeter: f64, seminorm_estimate: f64) -> Result<bool> {
    if !(perimeter > 0.0 && perimeter.is_finite()) {
        return Err(Error::InvalidArgument(alloc::format!(
            "perimeter must be positive, got {perimeter}"
        )));
    }
    if !(seminorm_estimate >= 0.0 && seminorm_estimate.is_finite()) {
        return Err(invalid!(
            "seminorm estimate must be nonnegative, got {seminorm_estimate}"
        ));
    }
    let bound = (1.0 + seminorm_estimate) * (1.0 + seminorm_estimate);
    Ok(perimeter <= bound)
}
