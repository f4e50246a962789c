use alloc::vec::Vec;

use crate::error::{invalid, Error, Result};
use crate::math::{cos, exp, sin, TAU};
use crate::quadrature::GaussLegendre;
use crate::vec2::{Point, Vec2};

use super::curve::{InterfaceCurve, SmoothedCurve};
use super::domain::Domain;
use super::spline::HermiteSpline;

const RADIAL_NODES: usize = 6;
const ANGULAR_NODES: usize = 16;
const DEFAULT_RAYS: usize = 2048;

/// Discrete mollifier: a weighted average over a polar Gauss rule on a disk,
/// with weights proportional to `exp(-1 / (1 - |z|²))`.
///
/// The weights are positive and sum to one and the offsets are symmetric,
/// so affine functions are reproduced exactly and convex functions are
/// never decreased.
#[derive(Clone, Debug)]
pub struct Mollifier {
    pub radius: f64,
    offsets: Vec<(Vec2, f64)>,
}

impl Mollifier {
    pub fn new(radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(invalid!(
                "mollification radius must be positive, got {radius}"
            ));
        }
        let g = GaussLegendre::new(RADIAL_NODES);
        let mut offsets = Vec::with_capacity(RADIAL_NODES * ANGULAR_NODES);
        let mut total = 0.0;
        for (ring, (r, w)) in g.mapped(0.0, 1.0).enumerate() {
            let bump = exp(-1.0 / (1.0 - r * r));
            // Staggering the rings keeps every ring symmetric under z -> -z.
            let shift = ring as f64 / RADIAL_NODES as f64;
            for k in 0..ANGULAR_NODES {
                let a = TAU * (k as f64 + shift) / ANGULAR_NODES as f64;
                let weight = w * r * bump;
                offsets.push((Vec2::new(cos(a), sin(a)) * (r * radius), weight));
                total += weight;
            }
        }
        for o in &mut offsets {
            o.1 /= total;
        }
        Ok(Mollifier { radius, offsets })
    }

    /// `Σ w_k f(x - δ z_k)`.
    pub fn apply(&self, x: Point, mut f: impl FnMut(Point) -> f64) -> f64 {
        self.offsets.iter().map(|(z, w)| w * f(x - *z)).sum()
    }

    /// Mollified signed distance and its gradient.
    pub fn distance(&self, curve: &InterfaceCurve, x: Point) -> (f64, Vec2) {
        let mut v = 0.0;
        let mut g = Vec2::ZERO;
        for (z, w) in &self.offsets {
            let c = curve.closest(x - *z);
            v += w * c.signed_distance;
            g += c.normal * *w;
        }
        (v, g)
    }
}

impl InterfaceCurve {
    /// Smooth outer approximation `Γ_j`: the level set `{d_δ = 1/j}` of the
    /// signed distance mollified at radius `δ = 1/(2j)`.
    ///
    /// Since `d ≤ d_δ ≤ d + δ` for the convex distance of a convex region,
    /// the level set lies between distance `1/(2j)` and `1/j` from `Γ` and
    /// encloses `Ω'`. It is traced by casting rays from the centroid and
    /// bisecting each ray to `10⁻¹⁰`; regions whose level set is not
    /// star-shaped about the centroid are rejected.
    pub fn smooth_approximation(&self, j: u32, domain: &Domain) -> Result<InterfaceCurve> {
        self.smooth_approximation_with(j, domain, DEFAULT_RAYS)
    }

    pub fn smooth_approximation_with(
        &self,
        j: u32,
        domain: &Domain,
        rays: usize,
    ) -> Result<InterfaceCurve> {
        if j == 0 {
            return Err(invalid!("approximation index j must be positive"));
        }
        if rays < 16 {
            return Err(invalid!("need at least 16 rays to trace a level set"));
        }
        let base = match self.kind() {
            super::CurveKind::LevelSetSmoothed(s) => &s.base,
            _ => self,
        };
        let level = 1.0 / j as f64;
        let delta = 0.5 * level;
        let margin = domain.interface_margin(base)?;
        if margin <= level + delta {
            return Err(invalid!(
                "level 1/j = {level} reaches the domain boundary (curve margin {margin})"
            ));
        }
        let moll = Mollifier::new(delta)?;
        let origin = base.centroid();
        if base.signed_distance(origin) >= 0.0 {
            return Err(invalid!(
                "centroid of the enclosed region lies outside it; cannot trace"
            ));
        }
        let exact = |p: Point| base.signed_distance(p);
        let smooth = |p: Point| moll.distance(base, p).0 - level;
        let mut points = Vec::with_capacity(rays);
        let mut tangents = Vec::with_capacity(rays);
        for k in 0..rays {
            let a = TAU * k as f64 / rays as f64;
            let dir = Vec2::new(cos(a), sin(a));
            let exit = ray_exit(domain, origin, dir);
            let at = |t: f64| origin + dir * t;
            // Bracket: d_δ - level ≤ 0 where d = level - δ, ≥ 0 where d = level.
            let lo = first_crossing(|t| exact(at(t)) - (level - delta), exit)
                .ok_or_else(|| invalid!("level set is not star-shaped about the centroid"))?;
            let hi = first_crossing(|t| exact(at(t)) - level, exit)
                .ok_or_else(|| invalid!("level set 1/j = {level} touches the domain boundary"))?;
            let (mut a0, mut a1) = (lo, hi);
            // Where d is affine over the mollifier support d_δ = d, so the
            // upper end only brackets up to rounding.
            let slack = 1e-12 * (1.0 + level);
            if smooth(at(a0)) > slack || smooth(at(a1)) < -slack {
                return Err(invalid!("level set is not star-shaped about the centroid"));
            }
            while a1 - a0 > 1e-10 {
                let m = 0.5 * (a0 + a1);
                if smooth(at(m)) < 0.0 {
                    a0 = m;
                } else {
                    a1 = m;
                }
            }
            let p = at(0.5 * (a0 + a1));
            if domain.boundary_distance(p) <= 0.0 {
                return Err(invalid!(
                    "level set 1/j = {level} touches the domain boundary"
                ));
            }
            let grad = moll.distance(base, p).1;
            if !(grad.norm() > 0.0) {
                return Err(Error::Singularity(alloc::format!(
                    "vanishing gradient on the level set at ray {k}"
                )));
            }
            points.push(p);
            tangents.push(grad.normalized().perp());
        }
        let trace = HermiteSpline::new(points, Some(tangents))?;
        Ok(InterfaceCurve::smoothed(SmoothedCurve {
            base: base.clone(),
            mollification_radius: delta,
            level,
            trace,
        }))
    }
}

/// Distance along the ray to `∂Ω`.
fn ray_exit(domain: &Domain, origin: Point, dir: Vec2) -> f64 {
    let mut hi = 1.0;
    while domain.boundary_distance(origin + dir * hi) > 0.0 {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    for _ in 0..80 {
        let m = 0.5 * (lo + hi);
        if domain.boundary_distance(origin + dir * m) > 0.0 {
            lo = m;
        } else {
            hi = m;
        }
    }
    lo
}

/// First `t ∈ (0, t_max]` where `f` turns nonnegative, given `f(0) < 0`,
/// located by a coarse scan and bisection.
fn first_crossing(f: impl Fn(f64) -> f64, t_max: f64) -> Option<f64> {
    if f(0.0) >= 0.0 {
        return None;
    }
    let steps = 256;
    let mut prev = 0.0;
    for k in 1..=steps {
        let t = t_max * k as f64 / steps as f64;
        if f(t) >= 0.0 {
            let (mut a, mut b) = (prev, t);
            for _ in 0..100 {
                let m = 0.5 * (a + b);
                if f(m) < 0.0 {
                    a = m;
                } else {
                    b = m;
                }
                if b - a < 1e-13 {
                    break;
                }
            }
            return Some(b);
        }
        prev = t;
    }
    None
}
